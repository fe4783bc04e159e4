//! Batch command front end. Stdout is line-oriented `key: value`; exit codes
//! form a total map over the failure classes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | solver failure (divergence, budget)       |
//! | 2    | config error (parse, invalid value, path) |
//! | 3    | collapse onto a semitrivial pair          |
//! | 4    | a potential hypothesis fails              |
//!
//! Thread count is controlled through `RAYON_NUM_THREADS` only.

use std::path::Path;

use crate::config::{RunConfig, SobolevSource};
use crate::coupled::{newton_solve_at_beta, GroundPair};
use crate::error::{Error, Result};
use crate::functional::{Component, Problem};
use crate::grid::Grid;
use crate::ground::{bracket_ts, solve_ground_state, GroundState};
use crate::potential::{check_limit_bound, check_negative_part, estimate_sobolev_constant, NegativePartCheck};
use crate::sweep::{run_experiment, write_field_snapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SEMITRIVIAL: i32 = 3;
pub const EXIT_HYPOTHESIS: i32 = 4;

fn innermost(err: &Error) -> &Error {
    match err {
        Error::Stage { source, .. } => innermost(source),
        other => other,
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match innermost(err) {
        Error::Config(_) | Error::InvalidGrid(_) | Error::InvalidParams(_) | Error::GridMismatch => {
            EXIT_CONFIG
        }
        Error::SemitrivialCollapse { .. } => EXIT_SEMITRIVIAL,
        _ => EXIT_SOLVER,
    }
}

fn report_err(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code_for(err)
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let cfg = RunConfig::load(path)?;
    for (key, value) in &cfg.defaults_applied {
        println!("default: {key} = {value}");
    }
    Ok(cfg)
}

struct GroundRun {
    problem: Problem,
    grounds: GroundPair,
}

fn solve_grounds(cfg: &RunConfig) -> Result<GroundRun> {
    let grid = Grid::new(cfg.dim, cfg.half_width, cfg.n_per_dim)?;
    let problem = Problem::new(cfg.model_params(0.0)?, grid)?;
    let first = solve_ground_state(&problem, Component::One, None, &cfg.ground)?;
    let second = solve_ground_state(&problem, Component::Two, None, &cfg.ground)?;
    Ok(GroundRun {
        problem,
        grounds: GroundPair { first, second },
    })
}

fn print_ground(problem: &Problem, label: &str, comp: Component, gs: &GroundState) {
    let p = problem.params().p;
    let norm_sq = problem.h_norm_sq(&gs.field);
    let identity = 2.0 * p * gs.level / (p - 2.0);
    println!("c{label}: {:.12e}", gs.level);
    println!("residual_{label}: {:.3e}", gs.residual_norm);
    println!("iterations_{label}: {}", gs.iterations);
    println!(
        "norm_identity_rel_err_{label}: {:.3e}",
        (norm_sq - identity).abs() / identity
    );
    println!("j_ratio_{label}: {:.12e}", problem.j_ratio(comp, &gs.field));
}

/// `ground`: scalar levels, thresholds and identities; writes field snapshots.
pub fn cmd_ground(config_path: &Path) -> i32 {
    let run = || -> Result<()> {
        let cfg = load_config(config_path)?;
        let gr = solve_grounds(&cfg)?;
        print_ground(&gr.problem, "1", Component::One, &gr.grounds.first);
        print_ground(&gr.problem, "2", Component::Two, &gr.grounds.second);

        let sbar = gr.problem.estimate_sbar_p(&cfg.ground)?;
        println!("sbar_p: {sbar:.12e}");
        println!("c1_star: {:.12e}", gr.problem.c_star(Component::One, sbar));
        println!("c2_star: {:.12e}", gr.problem.c_star(Component::Two, sbar));

        let bt = bracket_ts(&gr.problem, &gr.grounds.first)?;
        let bs = bracket_ts(&gr.problem, &gr.grounds.second)?;
        println!("bracket_t: {:.12e} {:.12e}", bt.t1, bt.t2);
        println!("bracket_s: {:.12e} {:.12e}", bs.t1, bs.t2);

        std::fs::create_dir_all(&cfg.out_dir)
            .map_err(|e| Error::Config(format!("cannot create output dir {:?}: {e}", cfg.out_dir)))?;
        write_field_snapshot(&cfg.out_dir.join("ground_u.bin"), &gr.grounds.first.field)?;
        write_field_snapshot(&cfg.out_dir.join("ground_v.bin"), &gr.grounds.second.field)?;
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => report_err(&e),
    }
}

/// `solve`: one coupled solve at the given coupling, warm-started from the
/// decoupled ground pair.
pub fn cmd_solve(config_path: &Path, beta: f64) -> i32 {
    let run = || -> Result<()> {
        let cfg = load_config(config_path)?;
        if !(beta >= 0.0) {
            return Err(Error::Config(format!("beta must be nonnegative, got {beta}")));
        }
        let gr = solve_grounds(&cfg)?;
        let prob = gr.problem.at_beta(beta);
        let report = newton_solve_at_beta(&prob, &gr.grounds, &gr.grounds.pair(), &cfg.newton)?;
        println!("beta: {:.12e}", report.beta);
        println!("I_beta: {:.12e}", report.energy);
        println!("residual: {:.3e}", report.residual_norm);
        println!("newton_iters: {}", report.newton_iters);
        println!("dist_to_UV: {:.12e}", report.dist_to_ground);
        println!("norm_u: {:.12e}", report.norm_u);
        println!("norm_v: {:.12e}", report.norm_v);
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => report_err(&e),
    }
}

/// `sweep`: the full experiment; exit 0 only when every coupling converges.
pub fn cmd_sweep(config_path: &Path) -> i32 {
    let run = || -> Result<()> {
        let cfg = load_config(config_path)?;
        let manifest = cfg.manifest()?;
        let result = run_experiment(&manifest)?;
        println!("c1: {:.12e}", result.c1);
        println!("c2: {:.12e}", result.c2);
        println!("c1_star: {:.12e}", result.c1_star);
        println!("c2_star: {:.12e}", result.c2_star);
        println!("sbar_p: {:.12e}", result.sbar_p);
        for r in &result.records {
            println!(
                "record: beta={:.6e} c_beta={:.6e} m_beta={:.6e} I_beta={:.6e} dist={:.6e}",
                r.beta, r.c_beta_estimate, r.m_beta, r.energy, r.dist_to_ground
            );
        }
        println!("csv: {}", result.csv_path.display());
        println!("summary: {}", result.summary_path.display());
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => report_err(&e),
    }
}

/// `check-potential`: run both hypothesis checkers and report verdicts.
pub fn cmd_check_potential(config_path: &Path) -> i32 {
    let run = || -> Result<bool> {
        let cfg = load_config(config_path)?;
        let grid = Grid::new(cfg.dim, cfg.half_width, cfg.n_per_dim)?;
        let mut all_hold = true;

        let limit = check_limit_bound(&cfg.potential, grid);
        println!("limit_bound: {}", if limit.holds { "holds" } else { "fails" });
        println!("limit_bound_max_violation: {:.3e}", limit.max_violation);
        all_hold &= limit.holds;

        let sobolev_s = match cfg.sobolev_s {
            SobolevSource::Given(v) => v,
            SobolevSource::Estimate => {
                let grids: Result<Vec<Grid>> = cfg
                    .sobolev_grids
                    .iter()
                    .map(|&n| Grid::new(3, cfg.sobolev_half_width, n))
                    .collect();
                let est = estimate_sobolev_constant(&grids?, &cfg.ground)?;
                println!("sobolev_s_estimated: {:.6e}", est.extrapolated);
                est.extrapolated
            }
        };
        match check_negative_part(&cfg.potential, grid, sobolev_s) {
            NegativePartCheck::NotApplicable { dim } => {
                println!("negative_part: not_applicable (dim = {dim})");
            }
            NegativePartCheck::Checked { integral, bound, holds } => {
                println!("negative_part: {}", if holds { "holds" } else { "fails" });
                println!("negative_part_integral: {integral:.6e}");
                println!("negative_part_bound: {bound:.6e}");
                all_hold &= holds;
            }
        }
        Ok(all_hold)
    };
    match run() {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_HYPOTHESIS,
        Err(e) => report_err(&e),
    }
}
