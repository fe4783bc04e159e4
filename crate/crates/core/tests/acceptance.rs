//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line with the measured quantities (run with `--nocapture` to
//! see them all).

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coupled_nls::cli;
use coupled_nls::coupled::{
    continuation_sweep, surface_max_m_beta, surface_minimax_c_beta, GroundPair, MinimaxSurface,
    NewtonControls, SurfaceControls,
};
use coupled_nls::functional::{Component, ModelParams, Problem, StatePair};
use coupled_nls::grid::{Field, Grid};
use coupled_nls::ground::{
    best_shift_max_error, bracket_ts, solve_ground_state, DescentControls, RayBracket,
};
use coupled_nls::potential::Potential;

struct Ctx {
    problem: Problem,
    grounds: GroundPair,
    bracket_t: RayBracket,
    bracket_s: RayBracket,
}

static CTX: OnceLock<Ctx> = OnceLock::new();

/// 1D default configuration: p = 3, mu1 = mu2 = 1, V = 1, L = 20, n = 2047.
fn ctx() -> &'static Ctx {
    CTX.get_or_init(|| {
        let pot = Potential::constant(1.0).unwrap();
        let params = ModelParams::new(1, 3.0, 1.0, 1.0, 0.0, pot).unwrap();
        let problem = Problem::new(params, Grid::new(1, 20.0, 2047).unwrap()).unwrap();
        let controls = DescentControls {
            tol: 1e-9,
            ..DescentControls::default()
        };
        let first = solve_ground_state(&problem, Component::One, None, &controls).unwrap();
        let second = solve_ground_state(&problem, Component::Two, None, &controls).unwrap();
        let bracket_t = bracket_ts(&problem, &first).unwrap();
        let bracket_s = bracket_ts(&problem, &second).unwrap();
        Ctx {
            problem,
            grounds: GroundPair { first, second },
            bracket_t,
            bracket_s,
        }
    })
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
}

/// A smooth random field: one to three Gaussian bumps with moderate
/// amplitudes, so finite differences and ray maxima stay well conditioned.
fn random_bumps(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    let l = grid.half_width();
    let mut f = Field::zeros(grid);
    let bumps = rng.gen_range(1..=3);
    for _ in 0..bumps {
        let center: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-l / 3.0..l / 3.0)).collect();
        let width = rng.gen_range(0.6..2.2);
        let amp = rng.gen_range(0.3..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        f.axpy(1.0, &Field::gaussian_bump(grid, &center, width, amp));
    }
    if f.is_zero() {
        f.axpy(1.0, &Field::gaussian_bump(grid, &vec![0.0; grid.dim()], 1.0, 0.7));
    }
    f
}

#[test]
fn criterion_1_exact_soliton_reproduction() {
    let start = Instant::now();
    let pot = Potential::constant(1.0).unwrap();
    let params = ModelParams::new(1, 3.0, 1.0, 1.0, 0.0, pot).unwrap();
    let problem = Problem::new(params, Grid::new(1, 20.0, 2047).unwrap()).unwrap();
    let gs = solve_ground_state(&problem, Component::One, None, &DescentControls::default()).unwrap();
    let elapsed = start.elapsed();

    let pinned_level = 2.0f64.sqrt() * std::f64::consts::PI / 6.0; // 0.740480...
    let level_err = (gs.level - pinned_level).abs();
    let (shift, shape_err) = best_shift_max_error(&gs.field, |x| 2.0f64.sqrt() / x.cosh());

    // measured values of the energy-consistent system, for the record: the
    // solver's level and profile agree with the closed form of the
    // implemented equation
    let consistent_level_err = (gs.level - 1.2).abs();
    let (_, consistent_shape_err) =
        best_shift_max_error(&gs.field, |x| 1.5 / (x / 2.0).cosh().powi(2));

    let pass = level_err < 1e-3 && shape_err < 1e-2 && elapsed.as_secs_f64() < 10.0;
    report(
        "1 (exact-soliton reproduction)",
        pass,
        &format!(
            "level {:.6} vs pinned {:.6} (|diff| {:.2e}); max profile error vs sqrt(2) sech after shift {:.2}: {:.2e}; \
             energy-consistent closed form gives level diff {:.2e} and profile error {:.2e}; runtime {:.2}s",
            gs.level, pinned_level, level_err, shift, shape_err,
            consistent_level_err, consistent_shape_err,
            elapsed.as_secs_f64()
        ),
    );
    assert!(elapsed.as_secs_f64() < 10.0, "runtime budget exceeded");
    assert!(
        level_err < 1e-3,
        "level {} differs from pinned target {} by {level_err:.3e}; the pinned constant mixes the \
         equation-form soliton with the energy-form constraint identity and is not attainable by \
         any solver whose residual is the gradient of its energy (measured consistent level diff {consistent_level_err:.2e})",
        gs.level,
        pinned_level
    );
    assert!(shape_err < 1e-2, "profile error {shape_err:.3e}");
}

#[test]
fn criterion_2_norm_identity_property_suite() {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for dim in [1usize, 2] {
        let (l, n) = if dim == 1 { (20.0, 511) } else { (10.0, 63) };
        for pot_kind in ["constant", "well"] {
            let pot = match pot_kind {
                "constant" => Potential::constant(1.0).unwrap(),
                _ => Potential::gaussian_well(1.0, 0.5, 2.0).unwrap(),
            };
            for p in [2.5, 3.0, 4.0] {
                let params = ModelParams::new(dim, p, 1.0, 1.0, 0.0, pot).unwrap();
                let problem = Problem::new(params, Grid::new(dim, l, n).unwrap()).unwrap();
                let gs =
                    solve_ground_state(&problem, Component::One, None, &DescentControls::default())
                        .unwrap();
                let identity = 2.0 * p * gs.level / (p - 2.0);
                let rel = (problem.h_norm_sq(&gs.field) - identity).abs() / identity;
                worst = worst.max(rel);
                cases.push(format!("{dim}D/{pot_kind}/p={p}: {rel:.2e}"));
            }
        }
    }
    let pass = worst < 1e-6;
    report(
        "2 (norm identity)",
        pass,
        &format!("12 cases, worst relative error {worst:.2e}"),
    );
    assert!(pass, "cases: {cases:?}");
}

#[test]
fn criterion_3_threshold_strictness() {
    let controls = DescentControls::default();
    let mut detail = String::new();
    let mut pass = true;
    for dim in [1usize, 2] {
        let (l, n) = if dim == 1 { (20.0, 1023) } else { (10.0, 63) };
        let grid = Grid::new(dim, l, n).unwrap();

        let well = Potential::gaussian_well(1.0, 0.5, 2.0).unwrap();
        let prob = Problem::new(ModelParams::new(dim, 3.0, 1.0, 1.0, 0.0, well).unwrap(), grid).unwrap();
        let gs = solve_ground_state(&prob, Component::One, None, &controls).unwrap();
        let sbar = prob.estimate_sbar_p(&controls).unwrap();
        let gap = prob.c_star(Component::One, sbar) - gs.level;
        pass &= gap > 1e-3;
        detail.push_str(&format!("{dim}D well gap {gap:.4e}; "));

        let flat = Potential::constant(1.0).unwrap();
        let prob0 = Problem::new(ModelParams::new(dim, 3.0, 1.0, 1.0, 0.0, flat).unwrap(), grid).unwrap();
        let gs0 = solve_ground_state(&prob0, Component::One, None, &controls).unwrap();
        let sbar0 = prob0.estimate_sbar_p(&controls).unwrap();
        let eq_err = (prob0.c_star(Component::One, sbar0) - gs0.level).abs();
        pass &= eq_err < 1e-3;
        detail.push_str(&format!("{dim}D equality error {eq_err:.2e}; "));
    }
    report("3 (threshold strictness)", pass, detail.trim_end_matches("; "));
    assert!(pass, "{detail}");
}

#[test]
fn criterion_4_gradient_consistency() {
    let pot = Potential::constant(1.0).unwrap();
    let params = ModelParams::new(1, 3.0, 1.3, 0.8, 0.25, pot).unwrap();
    let problem = Problem::new(params, Grid::new(1, 20.0, 511).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = random_bumps(problem.grid(), &mut rng);
        let v = random_bumps(problem.grid(), &mut rng);
        let phi = random_bumps(problem.grid(), &mut rng);
        let psi = random_bumps(problem.grid(), &mut rng);
        let pair = StatePair::new(u.clone(), v.clone()).unwrap();
        let res = problem.residual_system(&pair);
        let pairing = res.u.dot(&phi) + res.v.dot(&psi);

        let shifted = |sign: f64| {
            let mut us = u.clone();
            us.axpy(sign * eps, &phi);
            let mut vs = v.clone();
            vs.axpy(sign * eps, &psi);
            problem.energy_system(&StatePair::new(us, vs).unwrap())
        };
        let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * eps);
        worst = worst.max((fd - pairing).abs() / pairing.abs().max(1e-12));
    }
    let pass = worst < 1e-5;
    report(
        "4 (gradient consistency)",
        pass,
        &format!("20 random pairs/directions, worst relative error {worst:.2e} at eps = 1e-6"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_nehari_ray_property() {
    let c = ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = random_bumps(c.problem.grid(), &mut rng);
        let proj = c.problem.nehari_project(Component::One, &u).unwrap();

        // independent ray-max oracle: dense sampling plus golden-section
        // refinement of t -> J(t u), no use of the closed-form maximiser
        let ray = |t: f64| c.problem.energy_single(Component::One, &u.scaled(t));
        let a = c.problem.h_norm_sq(&u);
        let b = c.problem.grid().lp_power(&u, 3.0);
        let ray_fast = |t: f64| 0.5 * t * t * a - t.powi(3) / 3.0 * 1.0 * b;
        let mut hi = 1.0;
        while ray_fast(hi) > 0.0 || ray_fast(hi * 0.5) < ray_fast(hi) {
            hi *= 2.0;
        }
        let m = 4000usize;
        let mut best_i = 0usize;
        let mut best = f64::NEG_INFINITY;
        for i in 1..=m {
            let e = ray_fast(hi * i as f64 / m as f64);
            if e > best {
                best = e;
                best_i = i;
            }
        }
        let (mut lo, mut up) = (
            hi * (best_i.saturating_sub(1)) as f64 / m as f64,
            hi * (best_i + 1).min(m) as f64 / m as f64,
        );
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = up - phi * (up - lo);
            let x2 = lo + phi * (up - lo);
            if ray_fast(x1) > ray_fast(x2) {
                up = x2;
            } else {
                lo = x1;
            }
        }
        let t_star = 0.5 * (lo + up);
        let oracle = ray(t_star);
        worst = worst.max((oracle - proj.energy).abs());
    }
    let pass = worst < 1e-8;
    report(
        "5 (ray-max identity)",
        pass,
        &format!("50 random fields, worst |sampled max - closed form| = {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_minimax_ordering_and_limit() {
    let start = Instant::now();
    let c = ctx();
    let c0 = c.grounds.first.level + c.grounds.second.level;
    let betas_desc = [0.1, 0.05, 0.01, 0.001];
    let mut betas_asc = betas_desc;
    betas_asc.reverse();

    let reports = continuation_sweep(
        &c.problem,
        &c.grounds,
        &betas_asc,
        &NewtonControls::default(),
    )
    .unwrap();

    let controls = SurfaceControls::default();
    let mut detail = String::new();
    let mut pass = true;
    let mut prev_m_dev = f64::INFINITY;
    let mut prev_e_dev = f64::INFINITY;
    let mut final_devs = (f64::NAN, f64::NAN);
    for (i, &beta) in betas_desc.iter().enumerate() {
        let prob = c.problem.at_beta(beta);
        let m = surface_max_m_beta(&prob, &c.grounds, &c.bracket_t, &c.bracket_s);
        let mut surface = MinimaxSurface::reference(
            &prob,
            &c.grounds,
            &c.bracket_t,
            &c.bracket_s,
            controls.n_t,
            controls.n_s,
        );
        let est = surface_minimax_c_beta(&prob, &mut surface, &controls);
        let solved = reports.iter().find(|r| r.beta == beta).unwrap();

        pass &= est.c_beta_estimate <= m.m_beta + 1e-12;
        pass &= m.m_beta <= c0 + 1e-12;
        let m_dev = (m.m_beta - c0).abs();
        let e_dev = (solved.energy - c0).abs();
        pass &= m_dev <= prev_m_dev + 1e-14 && e_dev <= prev_e_dev + 1e-14;
        prev_m_dev = m_dev;
        prev_e_dev = e_dev;
        if i + 1 == betas_desc.len() {
            final_devs = (m_dev, e_dev);
        }
        detail.push_str(&format!(
            "beta {beta}: c_est {:.5} <= m {:.5} <= c0 {:.5}, |m-c0| {:.2e}, |I-c0| {:.2e}; ",
            est.c_beta_estimate, m.m_beta, c0, m_dev, e_dev
        ));
    }
    pass &= final_devs.0 < 1e-2 && final_devs.1 < 1e-2;
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 300.0;
    report(
        "6 (minimax ordering and limit)",
        pass,
        &format!("{detail}runtime {elapsed:.1}s"),
    );
    assert!(pass, "{detail}");
}

#[test]
fn criterion_7_convergence_to_the_ground_pair() {
    let c = ctx();
    // default schedule 0.2 * 2^{-k}, k = 0..7, run ascending
    let mut schedule: Vec<f64> = (0..8).map(|k| 0.2 * 0.5f64.powi(k)).collect();
    schedule.reverse();
    let reports = continuation_sweep(
        &c.problem,
        &c.grounds,
        &schedule,
        &NewtonControls::default(),
    )
    .unwrap();

    let d1 = c.grounds.d1(3.0);
    let mut pass = true;
    // ascending in beta means distances must increase along the list
    for w in reports.windows(2) {
        pass &= w[0].dist_to_ground < w[1].dist_to_ground;
    }
    let smallest = &reports[0];
    pass &= smallest.dist_to_ground < 1e-2;
    for r in &reports {
        pass &= r.norm_u.min(r.norm_v) > 0.5 * d1;
    }
    report(
        "7 (convergence to the ground pair)",
        pass,
        &format!(
            "dist at smallest beta {:.3e} (beta = {:.6}), dist at largest {:.3e}, component norm floor {:.3} > d1/2 = {:.3}",
            smallest.dist_to_ground,
            smallest.beta,
            reports.last().unwrap().dist_to_ground,
            reports
                .iter()
                .map(|r| r.norm_u.min(r.norm_v))
                .fold(f64::INFINITY, f64::min),
            0.5 * d1
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_constraint_ratio_anchor() {
    let c = ctx();
    let ru = c.problem.j_ratio(Component::One, &c.grounds.first.field);
    let rv = c.problem.j_ratio(Component::Two, &c.grounds.second.field);
    let pass = (ru - 1.0).abs() < 1e-6 && (rv - 1.0).abs() < 1e-6;
    report(
        "8 (constraint ratio anchor)",
        pass,
        &format!("j_ratio(U) - 1 = {:.2e}, j_ratio(V) - 1 = {:.2e}", ru - 1.0, rv - 1.0),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let cfg_path = dir.path().join(format!("run{run}.cfg"));
        std::fs::write(
            &cfg_path,
            format!(
                "dim = 1\np = 3\nmu1 = 1\nmu2 = 1\nn_per_dim = 511\n\
                 beta_schedule = 0.01,0.05,0.1\nsurface_nt = 17\nsurface_ns = 17\n\
                 surface_budget = 20\nseed = 42\nout_dir = {}\n",
                out.display()
            ),
        )
        .unwrap();
        let code = cli::cmd_sweep(&cfg_path);
        assert_eq!(code, 0, "sweep run {run} failed");
        csvs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    let pass = csvs[0] == csvs[1];
    report(
        "9 (determinism)",
        pass,
        &format!("two sweeps with seed 42: CSVs identical = {pass} ({} bytes)", csvs[0].len()),
    );
    assert!(pass);
}
