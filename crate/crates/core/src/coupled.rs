//! The coupled solve: damped matrix-free Newton at fixed coupling, warm-start
//! continuation in the coupling strength, the reference-surface max, the
//! deformation estimate of the minimax level, and a Monte-Carlo witness for
//! the gradient gap on the annulus around the ground pair.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{Problem, StatePair};
use crate::grid::Field;
use crate::ground::{GroundState, RayBracket};
use crate::krylov::{gmres, pcg};
use crate::spectral::ShiftedInverse;

/// The two scalar ground states the coupled machinery perturbs from.
#[derive(Debug, Clone)]
pub struct GroundPair {
    pub first: GroundState,
    pub second: GroundState,
}

impl GroundPair {
    /// `d1 = (1/2) min_i sqrt(2 p c_i / (p - 2))`, half the smaller ground
    /// state norm; components below `d1 / 2` flag a semitrivial collapse.
    pub fn d1(&self, p: f64) -> f64 {
        let n1 = (2.0 * p * self.first.level / (p - 2.0)).sqrt();
        let n2 = (2.0 * p * self.second.level / (p - 2.0)).sqrt();
        0.5 * n1.min(n2)
    }

    pub fn pair(&self) -> StatePair {
        StatePair {
            u: self.first.field.clone(),
            v: self.second.field.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonControls {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative residual target of each inner linear solve.
    pub linear_rel_tol: f64,
    pub linear_max_dim: usize,
    pub min_damping: f64,
}

impl Default for NewtonControls {
    fn default() -> Self {
        NewtonControls {
            tol: 1e-8,
            max_iter: 50,
            linear_rel_tol: 1e-3,
            linear_max_dim: 120,
            min_damping: 1e-6,
        }
    }
}

/// Outcome of one converged coupled solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub beta: f64,
    pub pair: StatePair,
    /// `I_beta` at the solution.
    pub energy: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Product-norm distance to the decoupled ground pair.
    pub dist_to_ground: f64,
    pub norm_u: f64,
    pub norm_v: f64,
}

fn pair_residual_norm(res: &StatePair) -> f64 {
    (res.u.dot(&res.u) + res.v.dot(&res.v)).sqrt()
}

/// Damped Newton for the coupled system at the problem's own `beta`.
///
/// Each step solves the linearised system matrix-free (GMRES, left
/// preconditioned by `(-lap_h + v_inf)^{-1}` per component) and damps by a
/// residual-norm line search. Success requires the residual below `tol`
/// *and* both components away from zero; convergence onto a semitrivial
/// pair, which also solves the system, is reported as its own error.
pub fn newton_solve_at_beta(
    problem: &Problem,
    grounds: &GroundPair,
    init: &StatePair,
    controls: &NewtonControls,
) -> Result<SolveReport> {
    if init.u.is_zero() || init.v.is_zero() {
        return Err(Error::InvalidParams(
            "initial pair must be nonzero in both components".into(),
        ));
    }
    let grid = problem.grid();
    let beta = problem.params().beta;
    let p = problem.params().p;
    let (mu1, mu2) = (problem.params().mu1, problem.params().mu2);
    let inverse = ShiftedInverse::new(grid, problem.params().potential.v_inf());
    let n = grid.node_count();

    let mut state = init.clone();
    let mut iters = 0usize;

    let finish = |state: StatePair, rnorm: f64, iters: usize| -> Result<SolveReport> {
        let d1 = grounds.d1(p);
        let norm_u = problem.h_norm_sq(&state.u).max(0.0).sqrt();
        let norm_v = problem.h_norm_sq(&state.v).max(0.0).sqrt();
        if norm_u.min(norm_v) <= 0.5 * d1 {
            return Err(Error::SemitrivialCollapse {
                beta,
                norm_u,
                norm_v,
                threshold: 0.5 * d1,
            });
        }
        let mut du = state.u.clone();
        du.axpy(-1.0, &grounds.first.field);
        let mut dv = state.v.clone();
        dv.axpy(-1.0, &grounds.second.field);
        let dist = (problem.h_norm_sq(&du).max(0.0) + problem.h_norm_sq(&dv).max(0.0)).sqrt();
        Ok(SolveReport {
            beta,
            energy: problem.energy_system(&state),
            residual_norm: rnorm,
            newton_iters: iters,
            dist_to_ground: dist,
            norm_u,
            norm_v,
            pair: state,
        })
    };

    loop {
        let res = problem.residual_system(&state);
        let rnorm = pair_residual_norm(&res);
        if !rnorm.is_finite() {
            return Err(Error::NewtonDivergence { beta, residual: rnorm });
        }
        if rnorm < controls.tol {
            return finish(state, rnorm, iters);
        }
        if iters >= controls.max_iter {
            return Err(Error::NewtonDivergence { beta, residual: rnorm });
        }

        // rhs = -M^{-1} residual, flattened [u; v]
        let mut rhs = vec![0.0; 2 * n];
        {
            let mut gu = res.u.values().to_vec();
            let mut gv = res.v.values().to_vec();
            inverse.solve_in_place(&mut gu);
            inverse.solve_in_place(&mut gv);
            for i in 0..n {
                rhs[i] = -gu[i];
                rhs[n + i] = -gv[i];
            }
        }

        let u = state.u.values();
        let v = state.v.values();
        let vp = problem.potential_field().values();
        let apply = |w: &[f64]| -> Vec<f64> {
            let (phi, psi) = w.split_at(n);
            let mut ju = vec![0.0; n];
            let mut jv = vec![0.0; n];
            grid.neg_laplacian_into(phi, &mut ju);
            grid.neg_laplacian_into(psi, &mut jv);
            for i in 0..n {
                let du_nl = (p - 1.0) * mu1 * u[i].abs().powf(p - 2.0);
                let dv_nl = (p - 1.0) * mu2 * v[i].abs().powf(p - 2.0);
                ju[i] += (vp[i] - du_nl - beta * v[i]) * phi[i] - beta * u[i] * psi[i];
                jv[i] += (vp[i] - dv_nl) * psi[i] - beta * u[i] * phi[i];
            }
            inverse.solve_in_place(&mut ju);
            inverse.solve_in_place(&mut jv);
            ju.extend_from_slice(&jv);
            ju
        };
        let lin = gmres(apply, &rhs, controls.linear_rel_tol, controls.linear_max_dim);

        let (du, dv) = lin.x.split_at(n);
        let du = match Field::from_values(grid, du.to_vec()) {
            Ok(f) => f,
            Err(_) => return Err(Error::NewtonDivergence { beta, residual: rnorm }),
        };
        let dv = match Field::from_values(grid, dv.to_vec()) {
            Ok(f) => f,
            Err(_) => return Err(Error::NewtonDivergence { beta, residual: rnorm }),
        };

        let mut alpha = 1.0;
        let mut stepped = false;
        while alpha >= controls.min_damping {
            let mut trial = state.clone();
            trial.u.axpy(alpha, &du);
            trial.v.axpy(alpha, &dv);
            let trial_norm = pair_residual_norm(&problem.residual_system(&trial));
            if trial_norm.is_finite() && trial_norm <= (1.0 - 1e-4 * alpha) * rnorm {
                state = trial;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if !stepped {
            return Err(Error::NewtonDivergence { beta, residual: rnorm });
        }
        iters += 1;
    }
}

/// Warm-start continuation: `beta_list` ascending, the first solve starts
/// from the decoupled ground pair, each later solve from its predecessor.
pub fn continuation_sweep(
    problem: &Problem,
    grounds: &GroundPair,
    beta_list: &[f64],
    controls: &NewtonControls,
) -> Result<Vec<SolveReport>> {
    if beta_list.is_empty() {
        return Err(Error::InvalidParams("empty beta list".into()));
    }
    if beta_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("beta list must be sorted ascending".into()));
    }
    if beta_list[0] < 0.0 {
        return Err(Error::InvalidParams("beta must be nonnegative".into()));
    }
    let mut reports = Vec::with_capacity(beta_list.len());
    let mut start = grounds.pair();
    for &beta in beta_list {
        let prob = problem.at_beta(beta);
        let report = newton_solve_at_beta(&prob, grounds, &start, controls)?;
        start = report.pair.clone();
        reports.push(report);
    }
    Ok(reports)
}

/// The five scalars that determine the energy on the reference surface
/// `(t U, s V)`.
#[derive(Debug, Clone, Copy)]
struct RayScalars {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    k: f64,
}

impl RayScalars {
    fn compute(problem: &Problem, grounds: &GroundPair) -> RayScalars {
        let params = problem.params();
        RayScalars {
            a1: problem.h_norm_sq(&grounds.first.field),
            b1: params.mu1 * problem.grid().lp_power(&grounds.first.field, params.p),
            a2: problem.h_norm_sq(&grounds.second.field),
            b2: params.mu2 * problem.grid().lp_power(&grounds.second.field, params.p),
            k: problem.coupling_integral(&grounds.pair()),
        }
    }

    fn energy(&self, p: f64, beta: f64, t: f64, s: f64) -> f64 {
        0.5 * t * t * self.a1 - t.powf(p) / p * self.b1 + 0.5 * s * s * self.a2
            - s.powf(p) / p * self.b2
            - 0.5 * beta * t * t * s * self.k
    }

    fn grad(&self, p: f64, beta: f64, t: f64, s: f64) -> (f64, f64) {
        (
            t * self.a1 - t.powf(p - 1.0) * self.b1 - beta * t * s * self.k,
            s * self.a2 - s.powf(p - 1.0) * self.b2 - 0.5 * beta * t * t * self.k,
        )
    }

    fn hess(&self, p: f64, beta: f64, t: f64, s: f64) -> (f64, f64, f64) {
        (
            self.a1 - (p - 1.0) * t.powf(p - 2.0) * self.b1 - beta * s * self.k,
            self.a2 - (p - 1.0) * s.powf(p - 2.0) * self.b2,
            -beta * t * self.k,
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceMax {
    pub m_beta: f64,
    pub at: (f64, f64),
}

/// Maximum of `I_beta` on the reference surface `(t U, s V)` over
/// `[0, t2] x [0, s2]`: dense scan refined by a guarded Newton ascent on the
/// two-variable closed form.
pub fn surface_max_m_beta(
    problem: &Problem,
    grounds: &GroundPair,
    bracket_t: &RayBracket,
    bracket_s: &RayBracket,
) -> SurfaceMax {
    let p = problem.params().p;
    let beta = problem.params().beta;
    let sc = RayScalars::compute(problem, grounds);
    let m = 240usize;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=m {
        let t = bracket_t.t2 * i as f64 / m as f64;
        for j in 0..=m {
            let s = bracket_s.t2 * j as f64 / m as f64;
            let e = sc.energy(p, beta, t, s);
            if e > best.0 {
                best = (e, t, s);
            }
        }
    }
    let (mut t, mut s) = (best.1, best.2);
    for _ in 0..60 {
        let (gt, gs) = sc.grad(p, beta, t, s);
        let (htt, hss, hts) = sc.hess(p, beta, t, s);
        let det = htt * hss - hts * hts;
        if det.abs() < 1e-300 {
            break;
        }
        let dt = (-gt * hss + gs * hts) / det;
        let ds = (-gs * htt + gt * hts) / det;
        let tn = (t + dt).clamp(1e-12, bracket_t.t2);
        let sn = (s + ds).clamp(1e-12, bracket_s.t2);
        if sc.energy(p, beta, tn, sn) + 1e-15 < sc.energy(p, beta, t, s) {
            break;
        }
        let moved = (tn - t).abs() + (sn - s).abs();
        t = tn;
        s = sn;
        if moved < 1e-14 {
            break;
        }
    }
    let refined = sc.energy(p, beta, t, s);
    if refined >= best.0 {
        SurfaceMax { m_beta: refined, at: (t, s) }
    } else {
        SurfaceMax { m_beta: best.0, at: (best.1, best.2) }
    }
}

/// Discretised surface over the parameter square, the carrier of the
/// admissible deformation class: frozen frame outside the open bracket
/// rectangle, product-norm cap `2 max(||U||, ||V||) + max ||ref surface||`.
pub struct MinimaxSurface {
    ts: Vec<f64>,
    ss: Vec<f64>,
    nodes: Vec<StatePair>,
    energies: Vec<f64>,
    frozen: Vec<bool>,
    norm_cap: f64,
}

impl MinimaxSurface {
    /// Build the reference surface `(t_j U, s_k V)`. The sample sets always
    /// contain `t = 1` (and `s = 1`) and the bracket endpoints, so the
    /// decoupled max sits exactly on a node.
    pub fn reference(
        problem: &Problem,
        grounds: &GroundPair,
        bracket_t: &RayBracket,
        bracket_s: &RayBracket,
        n_t: usize,
        n_s: usize,
    ) -> MinimaxSurface {
        let p = problem.params().p;
        let beta = problem.params().beta;
        let sc = RayScalars::compute(problem, grounds);

        let build_axis = |n: usize, br: &RayBracket| -> Vec<f64> {
            let mut xs: Vec<f64> = (0..n).map(|i| br.t2 * i as f64 / (n as f64 - 1.0)).collect();
            for extra in [br.t1, 1.0] {
                if !xs.iter().any(|&x| (x - extra).abs() < 1e-9) {
                    xs.push(extra);
                }
            }
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs
        };
        let ts = build_axis(n_t, bracket_t);
        let ss = build_axis(n_s, bracket_s);

        let cbar = sc.a1.sqrt().max(sc.a2.sqrt());
        let c0 = (bracket_t.t2 * bracket_t.t2 * sc.a1 + bracket_s.t2 * bracket_s.t2 * sc.a2).sqrt();
        let norm_cap = 2.0 * cbar + c0;

        let mut nodes = Vec::with_capacity(ts.len() * ss.len());
        let mut energies = Vec::with_capacity(ts.len() * ss.len());
        let mut frozen = Vec::with_capacity(ts.len() * ss.len());
        for &t in &ts {
            for &s in &ss {
                nodes.push(StatePair {
                    u: grounds.first.field.scaled(t),
                    v: grounds.second.field.scaled(s),
                });
                energies.push(sc.energy(p, beta, t, s));
                let interior = t > bracket_t.t1 + 1e-12
                    && t < bracket_t.t2 - 1e-12
                    && s > bracket_s.t1 + 1e-12
                    && s < bracket_s.t2 - 1e-12;
                frozen.push(!interior);
            }
        }
        MinimaxSurface {
            ts,
            ss,
            nodes,
            energies,
            frozen,
            norm_cap,
        }
    }

    pub fn norm_cap(&self) -> f64 {
        self.norm_cap
    }

    pub fn t_samples(&self) -> &[f64] {
        &self.ts
    }

    pub fn s_samples(&self) -> &[f64] {
        &self.ss
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_pair_norm(&self, problem: &Problem) -> f64 {
        self.nodes
            .iter()
            .map(|pair| problem.pair_norm(pair))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceControls {
    pub n_t: usize,
    pub n_s: usize,
    /// Number of deformation sweeps.
    pub budget: usize,
    /// Base step of the node-wise preconditioned descent.
    pub step: f64,
    /// Nodes within this fraction of the surface max are deformed.
    pub near_max_window: f64,
}

impl Default for SurfaceControls {
    fn default() -> Self {
        SurfaceControls {
            n_t: 33,
            n_s: 33,
            budget: 60,
            step: 0.5,
            near_max_window: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimaxEstimate {
    /// Minimum recorded surface max: an upper estimate of the minimax level.
    pub c_beta_estimate: f64,
    /// Max-over-surface after each sweep, starting with the reference value.
    pub trace: Vec<f64>,
    /// True when the sweep budget ran out while the flow was still moving.
    pub budget_exhausted: bool,
}

/// Node-wise deformation: repeatedly applies one preconditioned descent step
/// to the non-frozen nodes within the near-max window, rescales violators
/// back to the norm cap, and records the surface max per sweep.
pub fn surface_minimax_c_beta(
    problem: &Problem,
    surface: &mut MinimaxSurface,
    controls: &SurfaceControls,
) -> MinimaxEstimate {
    let inverse = ShiftedInverse::new(problem.grid(), problem.params().potential.v_inf());
    let mut trace = vec![surface.max_energy()];
    let mut budget_exhausted = false;

    for sweep in 0..controls.budget {
        let max_e = trace[trace.len() - 1];
        let threshold = max_e - controls.near_max_window * max_e.abs();
        let candidates: Vec<usize> = (0..surface.nodes.len())
            .filter(|&i| !surface.frozen[i] && surface.energies[i] >= threshold)
            .collect();
        if candidates.is_empty() {
            break;
        }

        let updates: Vec<(usize, Option<(StatePair, f64)>)> = candidates
            .par_iter()
            .map(|&i| {
                (
                    i,
                    descend_node(
                        problem,
                        &inverse,
                        &surface.nodes[i],
                        surface.energies[i],
                        surface.norm_cap,
                        controls.step,
                    ),
                )
            })
            .collect();

        let mut moved = 0usize;
        for (i, upd) in updates {
            if let Some((pair, e)) = upd {
                surface.nodes[i] = pair;
                surface.energies[i] = e;
                moved += 1;
            }
        }
        trace.push(surface.max_energy());
        if moved == 0 {
            break;
        }
        if sweep + 1 == controls.budget {
            budget_exhausted = true;
        }
    }

    let c_beta_estimate = trace.iter().cloned().fold(f64::INFINITY, f64::min);
    MinimaxEstimate {
        c_beta_estimate,
        trace,
        budget_exhausted,
    }
}

fn descend_node(
    problem: &Problem,
    inverse: &ShiftedInverse,
    node: &StatePair,
    energy: f64,
    norm_cap: f64,
    step: f64,
) -> Option<(StatePair, f64)> {
    let res = problem.residual_system(node);
    let du = inverse.solve(&res.u);
    let dv = inverse.solve(&res.v);
    let mut tau = step;
    for _ in 0..4 {
        let mut trial = node.clone();
        trial.u.axpy(-tau, &du);
        trial.v.axpy(-tau, &dv);
        let norm = problem.pair_norm(&trial);
        if norm > norm_cap {
            let scale = norm_cap / norm;
            trial.u.scale(scale);
            trial.v.scale(scale);
        }
        let e = problem.energy_system(&trial);
        if e.is_finite() && e < energy - 1e-15 * energy.abs() {
            return Some((trial, e));
        }
        tau *= 0.5;
    }
    None
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeControls {
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeReport {
    /// Smallest dual norm of the energy gradient over the kept samples;
    /// `None` when no sample passed the energy filter.
    pub delta_estimate: Option<f64>,
    pub kept: usize,
    pub examined: usize,
}

/// Monte-Carlo lower-bound witness for the gradient gap on
/// `{I_beta <= m_beta}` intersected with the annulus of product-norm radii
/// `[d/2, d]` around the ground pair. Directions mix the two ray modes
/// (which lower the energy at second order) with smoothed noise; samples at
/// `r = 0` are excluded by construction.
pub fn gradient_gap_probe(
    problem: &Problem,
    grounds: &GroundPair,
    bracket_t: &RayBracket,
    bracket_s: &RayBracket,
    d: f64,
    controls: &ProbeControls,
) -> Result<ProbeReport> {
    let p = problem.params().p;
    let d1 = grounds.d1(p);
    if !(d > 0.0 && d < 0.5 * d1) {
        return Err(Error::InvalidParams(format!(
            "probe radius must satisfy 0 < d < d1/2 = {:.6}, got {d}",
            0.5 * d1
        )));
    }
    if controls.n_samples < 100 {
        return Err(Error::InvalidParams("probe needs at least 100 samples".into()));
    }
    let m_beta = surface_max_m_beta(problem, grounds, bracket_t, bracket_s).m_beta;
    let inverse = ShiftedInverse::new(problem.grid(), problem.params().potential.v_inf());

    let norm_u = problem.h_norm_sq(&grounds.first.field).sqrt();
    let norm_v = problem.h_norm_sq(&grounds.second.field).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(controls.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };

    // generate deterministically in a single stream so that a longer run
    // extends a shorter one sample for sample
    let mut samples = Vec::with_capacity(controls.n_samples);
    for _ in 0..controls.n_samples {
        let a = normal(&mut rng);
        let b = normal(&mut rng);
        let c = 0.7 * normal(&mut rng);
        let noise_u = Field::from_values(
            problem.grid(),
            (0..problem.grid().node_count()).map(|_| normal(&mut rng)).collect(),
        )
        .expect("noise is finite");
        let noise_v = Field::from_values(
            problem.grid(),
            (0..problem.grid().node_count()).map(|_| normal(&mut rng)).collect(),
        )
        .expect("noise is finite");
        let r: f64 = rng.gen_range(0.5 * d..=d);

        let mut dir_u = grounds.first.field.scaled(a / norm_u);
        let mut dir_v = grounds.second.field.scaled(b / norm_v);
        let smooth_u = inverse.solve(&noise_u);
        let smooth_v = inverse.solve(&noise_v);
        let smooth_norm =
            (problem.h_norm_sq(&smooth_u).max(0.0) + problem.h_norm_sq(&smooth_v).max(0.0)).sqrt();
        if smooth_norm > 0.0 {
            dir_u.axpy(c / smooth_norm, &smooth_u);
            dir_v.axpy(c / smooth_norm, &smooth_v);
        }
        let dir_norm = (problem.h_norm_sq(&dir_u).max(0.0) + problem.h_norm_sq(&dir_v).max(0.0)).sqrt();
        if dir_norm == 0.0 {
            continue;
        }
        let mut su = grounds.first.field.clone();
        su.axpy(r / dir_norm, &dir_u);
        let mut sv = grounds.second.field.clone();
        sv.axpy(r / dir_norm, &dir_v);
        samples.push(StatePair { u: su, v: sv });
    }

    let evaluated: Vec<Option<f64>> = samples
        .par_iter()
        .map(|pair| {
            if problem.energy_system(pair) <= m_beta {
                Some(dual_gradient_norm(problem, &inverse, pair))
            } else {
                None
            }
        })
        .collect();

    let mut delta: Option<f64> = None;
    let mut kept = 0usize;
    for e in evaluated.iter().flatten() {
        kept += 1;
        delta = Some(match delta {
            Some(d0) => d0.min(*e),
            None => *e,
        });
    }
    Ok(ProbeReport {
        delta_estimate: delta,
        kept,
        examined: samples.len(),
    })
}

/// Dual norm of the energy gradient: `sqrt(<g, A^{-1} g>)` with `A` the
/// Riesz operator `-lap_h + V` of the product norm, solved by CG
/// preconditioned with the constant-shift inverse.
fn dual_gradient_norm(problem: &Problem, inverse: &ShiftedInverse, pair: &StatePair) -> f64 {
    let res = problem.residual_system(pair);
    let grid = problem.grid();
    let vp = problem.potential_field();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        grid.neg_laplacian_into(x, &mut out);
        for i in 0..x.len() {
            out[i] += vp.values()[i] * x[i];
        }
        out
    };
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut z = r.to_vec();
        inverse.solve_in_place(&mut z);
        z
    };
    let mut total = 0.0;
    for g in [&res.u, &res.v] {
        let sol = pcg(apply, precond, g.values(), 1e-8, 500);
        let riesz = Field::from_values(grid, sol.x).expect("Riesz solve stayed finite");
        total += g.dot(&riesz);
    }
    total.max(0.0).sqrt()
}
