//! Matrix-free Krylov solvers: GMRES for the (symmetric indefinite) Newton
//! linearisation and preconditioned CG for the Riesz solves behind the dual
//! norm. Both operate on flat `Vec<f64>` state vectors through closures.

pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub rel_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Full-orthogonalisation GMRES (modified Gram-Schmidt, Givens rotations),
/// capped at `max_dim` basis vectors. Returns the best iterate even when the
/// tolerance was not reached; the caller's line search decides what to do
/// with an inexact direction.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_dim: usize,
) -> KrylovOutcome {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return KrylovOutcome {
            x: vec![0.0; n],
            rel_residual: 0.0,
            iterations: 0,
            converged: true,
        };
    }

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / b_norm).collect()];
    let mut h: Vec<Vec<f64>> = Vec::new(); // h[j] holds column j, length j + 2
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![b_norm]; // rotated rhs
    let mut rel = 1.0;
    let mut iters = 0;

    for j in 0..max_dim {
        let mut w = apply(&basis[j]);
        let mut col = Vec::with_capacity(j + 2);
        for v in basis.iter() {
            let hij = dot(&w, v);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= hij * vi;
            }
            col.push(hij);
        }
        let w_norm = norm(&w);
        col.push(w_norm);

        // apply the accumulated rotations to the new column
        for ((i, &c), &s) in cs.iter().enumerate().zip(&sn) {
            let t = c * col[i] + s * col[i + 1];
            col[i + 1] = -s * col[i] + c * col[i + 1];
            col[i] = t;
        }
        let (c, s) = {
            let r = (col[j] * col[j] + col[j + 1] * col[j + 1]).sqrt();
            if r == 0.0 {
                (1.0, 0.0)
            } else {
                (col[j] / r, col[j + 1] / r)
            }
        };
        let t = c * col[j] + s * col[j + 1];
        col[j] = t;
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        iters = j + 1;
        rel = g[j + 1].abs() / b_norm;
        if rel < rel_tol {
            break;
        }
        if w_norm == 0.0 {
            break; // happy breakdown: exact solution in the current space
        }
        for wi in w.iter_mut() {
            *wi /= w_norm;
        }
        basis.push(w);
    }

    // back substitution on the triangularised Hessenberg system
    let m = iters;
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for (k, yk) in y.iter().enumerate().take(m).skip(i + 1) {
            acc -= h[k][i] * yk;
        }
        y[i] = acc / h[i][i];
    }
    let mut x = vec![0.0; n];
    for (k, yk) in y.iter().enumerate() {
        for (xi, vi) in x.iter_mut().zip(&basis[k]) {
            *xi += yk * vi;
        }
    }
    KrylovOutcome {
        x,
        rel_residual: rel,
        iterations: iters,
        converged: rel < rel_tol,
    }
}

/// Preconditioned conjugate gradient for SPD operators.
pub fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return KrylovOutcome {
            x: vec![0.0; n],
            rel_residual: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // operator not positive along this direction; bail with the
            // current iterate
            return KrylovOutcome {
                x,
                rel_residual: rel,
                iterations: it,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / b_norm;
        if rel < rel_tol {
            return KrylovOutcome {
                x,
                rel_residual: rel,
                iterations: it + 1,
                converged: true,
            };
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    KrylovOutcome {
        x,
        rel_residual: rel,
        iterations: max_iter,
        converged: false,
    }
}
