//! Uniform tensor grid on the truncated cube `[-L, L]^dim` with zero
//! Dirichlet boundary, second-order Laplacian stencil and rectangle-rule
//! quadrature.
//!
//! The gradient term of the `H^1`-type norm is evaluated through the stencil
//! identity `int |grad_h u|^2 = sum u * (-lap_h u) * h^dim`, so energies and
//! residuals share one discrete operator.

use crate::error::{Error, Result};

/// Uniform Dirichlet grid. Interior nodes only; the function value is 0 on
/// the boundary `|x_i| = L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    n_per_dim: usize,
    spacing: f64,
}

impl Grid {
    /// Build a grid with `n_per_dim` interior nodes per axis,
    /// `h = 2L / (n_per_dim + 1)`.
    ///
    /// `n_per_dim >= 3` is required so the stencil has at least one node with
    /// two interior neighbours; production runs should use far more (the
    /// defaults in the CLI config use 2047 in 1D).
    pub fn new(dim: usize, half_width: f64, n_per_dim: usize) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if n_per_dim < 3 {
            return Err(Error::InvalidGrid(format!("n_per_dim must be at least 3, got {n_per_dim}")));
        }
        Ok(Grid {
            dim,
            half_width,
            n_per_dim,
            spacing: 2.0 * half_width / (n_per_dim as f64 + 1.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_per_dim(&self) -> usize {
        self.n_per_dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of interior nodes, `n_per_dim^dim`.
    pub fn node_count(&self) -> usize {
        self.n_per_dim.pow(self.dim as u32)
    }

    /// Quadrature weight of one node, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate along `axis` of the 1D index `i`: `-L + (i + 1) h`.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 1.0) * self.spacing
    }

    /// Coordinates of the flat (row-major) node index.
    pub fn node_coords(&self, mut flat: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        for axis in (0..self.dim).rev() {
            out[axis] = self.axis_coord(flat % self.n_per_dim);
            flat /= self.n_per_dim;
        }
    }

    /// Rectangle rule: `h^dim * sum(values)`.
    pub fn integrate(&self, field: &Field) -> f64 {
        assert_eq!(*self, field.grid, "field does not belong to this grid");
        self.cell_volume() * field.values.iter().sum::<f64>()
    }

    /// `L^p` norm, `p >= 1`.
    pub fn lp_norm(&self, field: &Field, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParams(format!("lp_norm requires p >= 1, got {p}")));
        }
        let s: f64 = field.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((self.cell_volume() * s).powf(1.0 / p))
    }

    /// `int |u|^p`, the `p`-th power of the `L^p` norm in one pass.
    pub fn lp_power(&self, field: &Field, p: f64) -> f64 {
        let s: f64 = field.values.iter().map(|v| v.abs().powf(p)).sum();
        self.cell_volume() * s
    }

    /// Negative discrete Laplacian `(-lap_h u)`: at each node
    /// `(2 dim u_j - sum of neighbours) / h^2`, neighbours outside the box
    /// contribute 0.
    pub fn neg_laplacian(&self, field: &Field) -> Field {
        assert_eq!(*self, field.grid, "field does not belong to this grid");
        let mut out = vec![0.0; field.values.len()];
        self.neg_laplacian_into(&field.values, &mut out);
        Field {
            grid: *self,
            values: out,
        }
    }

    /// In-place form of [`Grid::neg_laplacian`] for solver inner loops.
    pub fn neg_laplacian_into(&self, values: &[f64], out: &mut [f64]) {
        let n = self.n_per_dim;
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let diag = 2.0 * self.dim as f64;
        match self.dim {
            1 => {
                for i in 0..n {
                    let mut acc = diag * values[i];
                    if i > 0 {
                        acc -= values[i - 1];
                    }
                    if i + 1 < n {
                        acc -= values[i + 1];
                    }
                    out[i] = acc * inv_h2;
                }
            }
            2 => {
                for i in 0..n {
                    for j in 0..n {
                        let idx = i * n + j;
                        let mut acc = diag * values[idx];
                        if i > 0 {
                            acc -= values[idx - n];
                        }
                        if i + 1 < n {
                            acc -= values[idx + n];
                        }
                        if j > 0 {
                            acc -= values[idx - 1];
                        }
                        if j + 1 < n {
                            acc -= values[idx + 1];
                        }
                        out[idx] = acc * inv_h2;
                    }
                }
            }
            3 => {
                let n2 = n * n;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let idx = (i * n + j) * n + k;
                            let mut acc = diag * values[idx];
                            if i > 0 {
                                acc -= values[idx - n2];
                            }
                            if i + 1 < n {
                                acc -= values[idx + n2];
                            }
                            if j > 0 {
                                acc -= values[idx - n];
                            }
                            if j + 1 < n {
                                acc -= values[idx + n];
                            }
                            if k > 0 {
                                acc -= values[idx - 1];
                            }
                            if k + 1 < n {
                                acc -= values[idx + 1];
                            }
                            out[idx] = acc * inv_h2;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// `||u||^2 = int u (-lap_h u) + int V u^2` with `V` sampled on the grid.
    /// The first term equals `int |grad_h u|^2` by summation by parts.
    pub fn h_norm_sq(&self, field: &Field, v_pot: &Field) -> f64 {
        assert_eq!(*self, field.grid, "field does not belong to this grid");
        assert_eq!(*self, v_pot.grid, "potential does not belong to this grid");
        let n = field.values.len();
        let mut lap = vec![0.0; n];
        self.neg_laplacian_into(&field.values, &mut lap);
        let mut s = 0.0;
        for i in 0..n {
            let u = field.values[i];
            s += u * lap[i] + v_pot.values[i] * u * u;
        }
        self.cell_volume() * s
    }
}

/// Real scalar function sampled at the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    /// Build a field from raw values. Length must match the node count and
    /// all values must be finite.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParams(format!(
                "field length {} does not match node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("field contains non-finite values".into()));
        }
        Ok(Field { grid, values })
    }

    /// Sample a function of the node coordinates.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Field {
        let mut values = Vec::with_capacity(grid.node_count());
        let mut x = vec![0.0; grid.dim()];
        for flat in 0..grid.node_count() {
            grid.node_coords(flat, &mut x);
            values.push(f(&x));
        }
        Field { grid, values }
    }

    /// Gaussian bump `amp * exp(-|x - center|^2 / width^2)`; the default
    /// ground-state initialiser and a convenient smooth test field.
    pub fn gaussian_bump(grid: Grid, center: &[f64], width: f64, amp: f64) -> Field {
        assert_eq!(center.len(), grid.dim());
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            amp * (-r2 / (width * width)).exp()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// L2 inner product `int f g`.
    pub fn dot(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        self.grid.cell_volume() * s
    }

    /// L2 norm.
    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, t: f64) {
        for v in &mut self.values {
            *v *= t;
        }
    }

    pub fn scaled(&self, t: f64) -> Field {
        let mut out = self.clone();
        out.scale(t);
        out
    }

    /// `self += t * other`.
    pub fn axpy(&mut self, t: f64, other: &Field) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += t * b;
        }
    }
}
