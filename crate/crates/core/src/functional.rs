//! Energies, residuals and the constraint-manifold machinery for the coupled
//! system and its two scalar equations.
//!
//! The scalar energies are
//!
//! ```text
//! J_i(u) = 1/2 ||u||^2 - (mu_i / p) int |u|^p,    ||u||^2 = int (|grad u|^2 + V u^2)
//! ```
//!
//! and the system energy couples them quadratically,
//!
//! ```text
//! I_beta(u, v) = J_1(u) + J_2(v) - (beta / 2) int u^2 v .
//! ```
//!
//! Residuals are the exact L2 gradients of these energies, which fixes both
//! nonlinear terms: the power term contributes `mu_i |u|^{p-2} u` and the
//! coupling contributes `beta u v` in the first component and
//! `(beta / 2) u^2` in the second. A pair solves the discrete system iff
//! both residual norms vanish, and stationarity of the energy is equivalent
//! to that by construction. Descent flows precondition the L2 gradient by
//! `(-lap_h + v_inf)^{-1}` to mimic the `H^1` geometry.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::ground::{descend_scalar, DescentControls};
use crate::potential::Potential;

/// Which of the two scalar equations a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    One,
    Two,
}

impl Component {
    pub fn mu(self, params: &ModelParams) -> f64 {
        match self {
            Component::One => params.mu1,
            Component::Two => params.mu2,
        }
    }
}

/// Full problem specification: dimensions, exponent, couplings, potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub p: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub potential: Potential,
}

impl ModelParams {
    pub fn new(
        dim: usize,
        p: f64,
        mu1: f64,
        mu2: f64,
        beta: f64,
        potential: Potential,
    ) -> Result<ModelParams> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if !(p > 2.0) {
            return Err(Error::InvalidParams(format!("exponent must satisfy p > 2, got {p}")));
        }
        if dim == 3 && !(p < 5.0) {
            return Err(Error::InvalidParams(format!(
                "in three dimensions the exponent must satisfy p < 5, got {p}"
            )));
        }
        if !(mu1 > 0.0) || !(mu2 > 0.0) {
            return Err(Error::InvalidParams("mu1 and mu2 must be positive".into()));
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be nonnegative (beta = 0 is the decoupled limit), got {beta}"
            )));
        }
        Ok(ModelParams { dim, p, mu1, mu2, beta, potential })
    }

    pub fn with_beta(mut self, beta: f64) -> ModelParams {
        self.beta = beta;
        self
    }
}

/// A state of the coupled system: two fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub u: Field,
    pub v: Field,
}

impl StatePair {
    pub fn new(u: Field, v: Field) -> Result<StatePair> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(StatePair { u, v })
    }
}

/// Result of projecting a nonzero field onto the constraint set
/// `||u||^2 = mu_i |u|_p^p` along its ray.
#[derive(Debug, Clone)]
pub struct NehariProjection {
    pub t: f64,
    pub projected: Field,
    /// `(1/2 - 1/p) t^p mu_i |u|_p^p = max_{s>0} J_i(s u)`.
    pub energy: f64,
}

/// `mu_i |u|^{p-2} u`, written sign-magnitude so it is well defined at
/// `u = 0` for non-integer `p`.
#[inline]
pub(crate) fn power_gradient(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(p - 2.0) * u
    }
}

/// Model parameters bound to a grid, with the potential sampled once.
#[derive(Debug, Clone)]
pub struct Problem {
    params: ModelParams,
    grid: Grid,
    v_pot: Field,
}

impl Problem {
    pub fn new(params: ModelParams, grid: Grid) -> Result<Problem> {
        if params.dim != grid.dim() {
            return Err(Error::InvalidParams(format!(
                "params dim {} does not match grid dim {}",
                params.dim,
                grid.dim()
            )));
        }
        let v_pot = params.potential.sample(grid);
        Ok(Problem { params, grid, v_pot })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn potential_field(&self) -> &Field {
        &self.v_pot
    }

    /// Same problem at a different coupling strength.
    pub fn at_beta(&self, beta: f64) -> Problem {
        Problem {
            params: self.params.with_beta(beta),
            grid: self.grid,
            v_pot: self.v_pot.clone(),
        }
    }

    /// `||u||^2` with this problem's potential.
    pub fn h_norm_sq(&self, u: &Field) -> f64 {
        self.grid.h_norm_sq(u, &self.v_pot)
    }

    /// Product norm of a pair, `sqrt(||u||^2 + ||v||^2)`.
    pub fn pair_norm(&self, pair: &StatePair) -> f64 {
        (self.h_norm_sq(&pair.u) + self.h_norm_sq(&pair.v)).sqrt()
    }

    /// Scalar energy `J_i(u)`.
    pub fn energy_single(&self, comp: Component, u: &Field) -> f64 {
        let mu = comp.mu(&self.params);
        0.5 * self.h_norm_sq(u) - mu / self.params.p * self.grid.lp_power(u, self.params.p)
    }

    /// System energy `I_beta(u, v)`.
    pub fn energy_system(&self, pair: &StatePair) -> f64 {
        let coupling = self.coupling_integral(pair);
        self.energy_single(Component::One, &pair.u) + self.energy_single(Component::Two, &pair.v)
            - 0.5 * self.params.beta * coupling
    }

    /// `int u^2 v`.
    pub fn coupling_integral(&self, pair: &StatePair) -> f64 {
        let s: f64 = pair
            .u
            .values()
            .iter()
            .zip(pair.v.values())
            .map(|(u, v)| u * u * v)
            .sum();
        self.grid.cell_volume() * s
    }

    /// L2 gradient of `J_i` (strong-form residual of the scalar equation).
    pub fn residual_single(&self, comp: Component, u: &Field) -> Field {
        let mu = comp.mu(&self.params);
        let p = self.params.p;
        let mut out = self.grid.neg_laplacian(u);
        let values = out.values_mut();
        for i in 0..values.len() {
            let ui = u.values()[i];
            values[i] += self.v_pot.values()[i] * ui - mu * power_gradient(ui, p);
        }
        out
    }

    /// L2 gradient of `I_beta`: the pair of strong-form residuals
    /// `(-lap u + V u - mu1 |u|^{p-2} u - beta u v,
    ///   -lap v + V v - mu2 |v|^{p-2} v - (beta/2) u^2)`.
    pub fn residual_system(&self, pair: &StatePair) -> StatePair {
        let p = self.params.p;
        let beta = self.params.beta;
        let mut gu = self.grid.neg_laplacian(&pair.u);
        let mut gv = self.grid.neg_laplacian(&pair.v);
        let u = pair.u.values();
        let v = pair.v.values();
        let vp = self.v_pot.values();
        {
            let gu = gu.values_mut();
            let gv = gv.values_mut();
            for i in 0..u.len() {
                gu[i] += vp[i] * u[i] - self.params.mu1 * power_gradient(u[i], p) - beta * u[i] * v[i];
                gv[i] += vp[i] * v[i]
                    - self.params.mu2 * power_gradient(v[i], p)
                    - 0.5 * beta * u[i] * u[i];
            }
        }
        StatePair { u: gu, v: gv }
    }

    /// Project `u != 0` onto the constraint set of `J_i` along its ray:
    /// `t = (||u||^2 / (mu_i |u|_p^p))^{1/(p-2)}`.
    pub fn nehari_project(&self, comp: Component, u: &Field) -> Result<NehariProjection> {
        if u.is_zero() {
            return Err(Error::ZeroField);
        }
        let p = self.params.p;
        let mu = comp.mu(&self.params);
        let norm_sq = self.h_norm_sq(u);
        let lp_pow = mu * self.grid.lp_power(u, p);
        if !(norm_sq > 0.0) || !(lp_pow > 0.0) {
            return Err(Error::InvalidParams(
                "projection needs a positive quadratic form and a nonzero field".into(),
            ));
        }
        let t = (norm_sq / lp_pow).powf(1.0 / (p - 2.0));
        let energy = (0.5 - 1.0 / p) * t.powf(p) * lp_pow;
        Ok(NehariProjection {
            t,
            projected: u.scaled(t),
            energy,
        })
    }

    /// `mu_i |u|_p^p / ||u||^2`, and 0 at `u = 0`. Value 1 characterises
    /// membership in the constraint set of `J_i`.
    pub fn j_ratio(&self, comp: Component, u: &Field) -> f64 {
        if u.is_zero() {
            return 0.0;
        }
        comp.mu(&self.params) * self.grid.lp_power(u, self.params.p) / self.h_norm_sq(u)
    }

    /// Scalar level threshold
    /// `c_i^* = mu_i (1/2 - 1/p) (sbar_p / mu_i)^{p/(p-2)}`.
    pub fn c_star(&self, comp: Component, sbar_p: f64) -> f64 {
        let p = self.params.p;
        let mu = comp.mu(&self.params);
        mu * (0.5 - 1.0 / p) * (sbar_p / mu).powf(p / (p - 2.0))
    }

    /// Estimate `sbar_p = inf { ||u||_inf^2 : |u|_p = 1 }` (the constrained
    /// minimisation with the constant potential `v_inf`) by solving the
    /// constant-potential ground state on this grid and inverting the level
    /// formula `c = mu (1/2 - 1/p) (sbar_p / mu)^{p/(p-2)}`.
    pub fn estimate_sbar_p(&self, controls: &DescentControls) -> Result<f64> {
        let p = self.params.p;
        let mu = self.params.mu1;
        let v_inf = self.params.potential.v_inf();
        let v_const = Field::from_fn(self.grid, |_| v_inf);
        let init = default_bump(self.grid);
        let state = descend_scalar(self.grid, &v_const, mu, p, v_inf, &init, controls)?;
        let kappa = 0.5 - 1.0 / p;
        Ok(mu * (state.level / (mu * kappa)).powf((p - 2.0) / p))
    }
}

/// Default positive initialiser: unit Gaussian centred at the potential
/// minimum (the origin for every implemented family).
pub fn default_bump(grid: Grid) -> Field {
    let center = vec![0.0; grid.dim()];
    Field::gaussian_bump(grid, &center, 1.5, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::exact_soliton_1d;
    use approx::assert_relative_eq;

    fn problem_1d(p: f64, mu1: f64, mu2: f64, beta: f64, n: usize) -> Problem {
        let pot = Potential::constant(1.0).unwrap();
        let params = ModelParams::new(1, p, mu1, mu2, beta, pot).unwrap();
        Problem::new(params, Grid::new(1, 20.0, n).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        let pot = Potential::constant(1.0).unwrap();
        assert!(ModelParams::new(1, 2.0, 1.0, 1.0, 0.0, pot).is_err());
        assert!(ModelParams::new(3, 5.0, 1.0, 1.0, 0.0, pot).is_err());
        assert!(ModelParams::new(3, 4.5, 1.0, 1.0, 0.0, pot).is_ok());
        assert!(ModelParams::new(1, 3.0, 0.0, 1.0, 0.0, pot).is_err());
        assert!(ModelParams::new(1, 3.0, 1.0, 1.0, -0.1, pot).is_err());
    }

    #[test]
    fn energy_single_zero_field() {
        let prob = problem_1d(3.0, 1.0, 1.0, 0.0, 63);
        assert_eq!(prob.energy_single(Component::One, &Field::zeros(prob.grid())), 0.0);
    }

    #[test]
    fn energy_single_soliton_level() {
        // closed form: the 1D soliton for p = 3, mu = 1, V = 1 has
        // ||u||^2 = mu |u|_3^3 = 36/5 and level (1/2 - 1/3) * 36/5 = 1.2
        let prob = problem_1d(3.0, 1.0, 1.0, 0.0, 2047);
        let u = exact_soliton_1d(3.0, 1.0, 1.0, prob.grid());
        assert_relative_eq!(prob.energy_single(Component::One, &u), 1.2, epsilon = 1e-3);
    }

    #[test]
    fn energy_single_ray_homogeneity() {
        let prob = problem_1d(3.0, 2.0, 1.0, 0.0, 255);
        let u = Field::gaussian_bump(prob.grid(), &[0.3], 1.2, 0.8);
        let t: f64 = 2.0;
        let direct = prob.energy_single(Component::One, &u.scaled(t));
        let a = prob.h_norm_sq(&u);
        let b = 2.0 * prob.grid().lp_power(&u, 3.0);
        let formula = t * t / 2.0 * a - t.powi(3) / 3.0 * b;
        assert_relative_eq!(direct, formula, max_relative = 1e-12);
    }

    #[test]
    fn system_energy_decouples_at_beta_zero() {
        let prob = problem_1d(3.0, 1.0, 2.0, 0.0, 127);
        let u = Field::gaussian_bump(prob.grid(), &[0.0], 1.0, 1.0);
        let v = Field::gaussian_bump(prob.grid(), &[1.0], 2.0, 0.5);
        let pair = StatePair::new(u.clone(), v.clone()).unwrap();
        let sum = prob.energy_single(Component::One, &u) + prob.energy_single(Component::Two, &v);
        assert_eq!(prob.energy_system(&pair), sum);
    }

    #[test]
    fn system_energy_on_semitrivial_pairs() {
        let prob = problem_1d(3.0, 1.0, 1.0, 0.7, 127);
        let u = Field::gaussian_bump(prob.grid(), &[0.0], 1.0, 1.0);
        let zero = Field::zeros(prob.grid());
        let pair = StatePair::new(u.clone(), zero.clone()).unwrap();
        assert_eq!(prob.energy_system(&pair), prob.energy_single(Component::One, &u));
        let pair = StatePair::new(zero, u.clone()).unwrap();
        assert_eq!(prob.energy_system(&pair), prob.energy_single(Component::Two, &u));
    }

    #[test]
    fn coupling_lowers_energy_for_positive_pairs() {
        let prob0 = problem_1d(3.0, 1.0, 1.0, 0.0, 127);
        let prob = prob0.at_beta(0.3);
        let u = Field::gaussian_bump(prob.grid(), &[0.0], 1.0, 1.0);
        let v = Field::gaussian_bump(prob.grid(), &[0.2], 1.5, 0.7);
        let pair = StatePair::new(u, v).unwrap();
        assert!(prob.energy_system(&pair) < prob0.energy_system(&pair));
    }

    #[test]
    fn residuals_vanish_on_zero_pair() {
        let prob = problem_1d(2.5, 1.0, 1.0, 0.4, 63);
        let pair = StatePair::new(Field::zeros(prob.grid()), Field::zeros(prob.grid())).unwrap();
        let res = prob.residual_system(&pair);
        assert!(res.u.is_zero() && res.v.is_zero());
    }

    #[test]
    fn residual_truncation_error_is_second_order() {
        // the exact soliton solves the continuum equation, so the discrete
        // residual is pure truncation error and quarters when h halves
        let mut norms = Vec::new();
        for n in [1023usize, 2047] {
            let prob = problem_1d(3.0, 1.0, 1.0, 0.0, n);
            let u = exact_soliton_1d(3.0, 1.0, 1.0, prob.grid());
            let pair = StatePair::new(u.clone(), u.clone()).unwrap();
            let res = prob.residual_system(&pair);
            norms.push((res.u.l2_norm().powi(2) + res.v.l2_norm().powi(2)).sqrt());
        }
        let ratio = norms[0] / norms[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn residual_is_gradient_of_energy() {
        let prob = problem_1d(3.0, 1.3, 0.8, 0.25, 255);
        let u = Field::gaussian_bump(prob.grid(), &[0.4], 1.1, 0.9);
        let v = Field::gaussian_bump(prob.grid(), &[-0.6], 1.4, 0.7);
        let phi = Field::gaussian_bump(prob.grid(), &[1.0], 0.8, 0.6);
        let psi = Field::gaussian_bump(prob.grid(), &[-1.2], 1.0, 0.5);
        let pair = StatePair::new(u.clone(), v.clone()).unwrap();
        let res = prob.residual_system(&pair);
        let pairing = res.u.dot(&phi) + res.v.dot(&psi);

        let eps = 1e-6;
        let mut up = u.clone();
        up.axpy(eps, &phi);
        let mut vp = v.clone();
        vp.axpy(eps, &psi);
        let fd = (prob.energy_system(&StatePair::new(up, vp).unwrap()) - prob.energy_system(&pair)) / eps;
        assert_relative_eq!(fd, pairing, max_relative = 1e-5);
    }

    #[test]
    fn nehari_projection_examples() {
        let prob = problem_1d(3.0, 1.0, 1.0, 0.0, 2047);

        // a field already on the constraint set projects to t = 1
        let raw = Field::gaussian_bump(prob.grid(), &[0.0], 1.0, 1.0);
        let once = prob.nehari_project(Component::One, &raw).unwrap();
        let again = prob.nehari_project(Component::One, &once.projected).unwrap();
        assert_relative_eq!(again.t, 1.0, epsilon = 1e-12);

        // scale invariance of the projected output
        let a = prob.nehari_project(Component::One, &raw).unwrap();
        let b = prob.nehari_project(Component::One, &raw.scaled(3.7)).unwrap();
        assert_relative_eq!(b.t * 3.7, a.t, max_relative = 1e-12);
        for (x, y) in a.projected.values().iter().zip(b.projected.values()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }

        // the exact soliton lies on the constraint set with level 1.2
        let sol = exact_soliton_1d(3.0, 1.0, 1.0, prob.grid());
        let proj = prob.nehari_project(Component::One, &sol).unwrap();
        assert_relative_eq!(proj.t, 1.0, epsilon = 1e-3);
        assert_relative_eq!(proj.energy, 1.2, epsilon = 1e-3);

        assert!(matches!(
            prob.nehari_project(Component::One, &Field::zeros(prob.grid())),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn j_ratio_examples() {
        let prob = problem_1d(3.0, 1.0, 1.0, 0.0, 511);
        assert_eq!(prob.j_ratio(Component::One, &Field::zeros(prob.grid())), 0.0);

        let u = Field::gaussian_bump(prob.grid(), &[0.0], 1.3, 0.9);
        let r1 = prob.j_ratio(Component::One, &u);
        let r2 = prob.j_ratio(Component::One, &u.scaled(2.0));
        assert_relative_eq!(r2, 2f64.powf(3.0 - 2.0) * r1, max_relative = 1e-12);
    }

    #[test]
    fn c_star_algebra() {
        let prob = problem_1d(3.0, 1.0, 1.0, 0.0, 63);
        let s = 1.931;
        assert_relative_eq!(prob.c_star(Component::One, s), s.powi(3) / 6.0, max_relative = 1e-14);
        assert_relative_eq!(
            prob.c_star(Component::One, 2.0 * s) / prob.c_star(Component::One, s),
            8.0,
            max_relative = 1e-12
        );

        // c* is decreasing in mu at fixed sbar (exponent p/(p-2) > 1)
        let mut prev = f64::INFINITY;
        for mu in [1.0, 4.0, 16.0] {
            let prob = problem_1d(3.0, mu, 1.0, 0.0, 63);
            let c = prob.c_star(Component::One, s);
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn sbar_estimate_matches_soliton_level() {
        // constant potential, p = 3, mu = 1: level 1.2 inverts to
        // sbar_3 = (6 * 1.2)^{1/3} = 7.2^{1/3}
        let prob = problem_1d(3.0, 1.0, 1.0, 0.0, 2047);
        let controls = DescentControls::default();
        let s = prob.estimate_sbar_p(&controls).unwrap();
        assert_relative_eq!(s, 7.2f64.powf(1.0 / 3.0), epsilon = 1e-3);
    }

    #[test]
    fn sbar_estimate_independent_of_mu() {
        let controls = DescentControls::default();
        let s1 = problem_1d(3.0, 1.0, 1.0, 0.0, 1023)
            .estimate_sbar_p(&controls)
            .unwrap();
        let s4 = problem_1d(3.0, 4.0, 1.0, 0.0, 1023)
            .estimate_sbar_p(&controls)
            .unwrap();
        assert_relative_eq!(s1, s4, max_relative = 1e-6);
    }

    #[test]
    fn sbar_estimate_scales_with_limit_value() {
        // substitution oracle: the closed-form soliton for v_inf = 4 gives
        // the level directly, and the scaling law is sbar(4)/sbar(1) = 4^{(p+2)/(2p)}
        let grid = Grid::new(1, 20.0, 1023).unwrap();
        let controls = DescentControls::default();

        let pot4 = Potential::constant(4.0).unwrap();
        let params4 = ModelParams::new(1, 3.0, 1.0, 1.0, 0.0, pot4).unwrap();
        let prob4 = Problem::new(params4, grid).unwrap();
        let s4 = prob4.estimate_sbar_p(&controls).unwrap();

        let sol4 = exact_soliton_1d(3.0, 1.0, 4.0, grid);
        let level4 = prob4.nehari_project(Component::One, &sol4).unwrap().energy;
        let s4_oracle = (6.0 * level4).powf(1.0 / 3.0);
        assert_relative_eq!(s4, s4_oracle, max_relative = 1e-3);

        let s1 = problem_1d(3.0, 1.0, 1.0, 0.0, 1023)
            .estimate_sbar_p(&controls)
            .unwrap();
        assert_relative_eq!(s4 / s1, 4f64.powf(5.0 / 6.0), max_relative = 1e-3);
    }
}
