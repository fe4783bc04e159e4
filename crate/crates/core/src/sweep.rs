//! Orchestrates the full experiment: scalar ground states, thresholds, ray
//! brackets, warm-start continuation over the coupling schedule with surface
//! estimates at every step, and serialisation of the results.
//!
//! Artifacts per run directory:
//!   - `manifest.txt`      plain `key = value` echo of the resolved run
//!   - `results.csv`       one row per coupling value, strictly decreasing
//!   - `summary.txt`       levels, thresholds and the convergence table
//!   - `ground_u.bin` / `ground_v.bin` and `pair_u_NN.bin` / `pair_v_NN.bin`
//!     field snapshots (`u64` dim count, `u64` extents, then `f64`
//!     row-major node values, all little-endian)

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::coupled::{
    newton_solve_at_beta, surface_max_m_beta, surface_minimax_c_beta, GroundPair, MinimaxSurface,
    NewtonControls, SurfaceControls,
};
use crate::error::{Error, Result};
use crate::functional::{Component, ModelParams, Problem};
use crate::grid::{Field, Grid};
use crate::ground::{bracket_ts, solve_ground_state, DescentControls};

/// Fully resolved description of one run; every emitted table references
/// exactly one manifest.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub params: ModelParams,
    pub half_width: f64,
    pub n_per_dim: usize,
    pub ground: DescentControls,
    pub newton: NewtonControls,
    pub surface: SurfaceControls,
    /// Coupling schedule; stored ascending, reported descending.
    pub beta_schedule: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub created_unix: u64,
    pub code_version: String,
}

impl RunManifest {
    pub fn now_version() -> (u64, String) {
        let ts = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        (ts, env!("CARGO_PKG_VERSION").to_string())
    }

    fn render(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        s.push_str(&format!("dim = {}\n", p.dim));
        s.push_str(&format!("p = {}\n", p.p));
        s.push_str(&format!("mu1 = {}\n", p.mu1));
        s.push_str(&format!("mu2 = {}\n", p.mu2));
        s.push_str(&format!("potential = {:?}\n", p.potential));
        s.push_str(&format!("half_width = {}\n", self.half_width));
        s.push_str(&format!("n_per_dim = {}\n", self.n_per_dim));
        s.push_str(&format!("ground_tol = {:e}\n", self.ground.tol));
        s.push_str(&format!("ground_max_iter = {}\n", self.ground.max_iter));
        s.push_str(&format!("newton_tol = {:e}\n", self.newton.tol));
        s.push_str(&format!("newton_max_iter = {}\n", self.newton.max_iter));
        s.push_str(&format!("linear_rel_tol = {:e}\n", self.newton.linear_rel_tol));
        s.push_str(&format!("surface_nt = {}\n", self.surface.n_t));
        s.push_str(&format!("surface_ns = {}\n", self.surface.n_s));
        s.push_str(&format!("surface_budget = {}\n", self.surface.budget));
        let betas: Vec<String> = self.beta_schedule.iter().map(|b| format!("{b}")).collect();
        s.push_str(&format!("beta_schedule = {}\n", betas.join(",")));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("init = gaussian bump, width 1.5, centred at origin\n"));
        s.push_str(&format!("created_unix = {}\n", self.created_unix));
        s.push_str(&format!("code_version = {}\n", self.code_version));
        s
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub beta: f64,
    pub c_beta_estimate: f64,
    pub m_beta: f64,
    pub energy: f64,
    pub dist_to_ground: f64,
    pub residual_norm: f64,
    pub norm_u: f64,
    pub norm_v: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Records in CSV order (beta strictly decreasing).
    pub records: Vec<SweepRecord>,
    pub c1: f64,
    pub c2: f64,
    pub c1_star: f64,
    pub c2_star: f64,
    pub sbar_p: f64,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Run the complete experiment described by the manifest. Any stage failure
/// aborts with the stage name; artifacts written up to that point stay on
/// disk.
pub fn run_experiment(manifest: &RunManifest) -> Result<ExperimentResult> {
    fs::create_dir_all(&manifest.out_dir)
        .map_err(|e| Error::Config(format!("cannot create output dir {:?}: {e}", manifest.out_dir)))?;
    fs::write(manifest.out_dir.join("manifest.txt"), manifest.render())
        .map_err(|e| Error::Config(format!("output dir {:?} not writable: {e}", manifest.out_dir)))?;

    let grid = Grid::new(manifest.params.dim, manifest.half_width, manifest.n_per_dim)
        .map_err(|e| e.in_stage("grid"))?;
    let problem = Problem::new(manifest.params.with_beta(0.0), grid).map_err(|e| e.in_stage("grid"))?;

    // ground states, levels, thresholds, brackets
    let first = solve_ground_state(&problem, Component::One, None, &manifest.ground)
        .map_err(|e| e.in_stage("ground"))?;
    let second = solve_ground_state(&problem, Component::Two, None, &manifest.ground)
        .map_err(|e| e.in_stage("ground"))?;
    let bracket_t = bracket_ts(&problem, &first).map_err(|e| e.in_stage("bracket"))?;
    let bracket_s = bracket_ts(&problem, &second).map_err(|e| e.in_stage("bracket"))?;
    let sbar = problem
        .estimate_sbar_p(&manifest.ground)
        .map_err(|e| e.in_stage("threshold"))?;
    let c1_star = problem.c_star(Component::One, sbar);
    let c2_star = problem.c_star(Component::Two, sbar);
    let grounds = GroundPair { first, second };

    write_field_snapshot(&manifest.out_dir.join("ground_u.bin"), &grounds.first.field)?;
    write_field_snapshot(&manifest.out_dir.join("ground_v.bin"), &grounds.second.field)?;

    // continuation, ascending in beta, with surface estimates per step
    let mut schedule = manifest.beta_schedule.clone();
    schedule.sort_by(|a, b| a.partial_cmp(b).unwrap());
    schedule.dedup();
    if schedule.is_empty() || schedule[0] < 0.0 {
        return Err(Error::Config("beta schedule must be nonempty and nonnegative".into()));
    }

    let mut ascending: Vec<SweepRecord> = Vec::with_capacity(schedule.len());
    let mut start = grounds.pair();
    for &beta in &schedule {
        let prob = problem.at_beta(beta);
        let report = match newton_solve_at_beta(&prob, &grounds, &start, &manifest.newton) {
            Ok(r) => r,
            Err(e) => {
                // keep what we have: partial CSV plus a summary note
                let mut partial = ascending.clone();
                partial.reverse();
                if !partial.is_empty() {
                    let _ = emit_csv(&partial, &manifest.out_dir.join("results.csv"));
                }
                let _ = fs::write(
                    manifest.out_dir.join("summary.txt"),
                    format!("aborted during continuation at beta = {beta}: {e}\n"),
                );
                return Err(e.in_stage("continuation"));
            }
        };
        start = report.pair.clone();

        let m = surface_max_m_beta(&prob, &grounds, &bracket_t, &bracket_s);
        let mut surface = MinimaxSurface::reference(
            &prob,
            &grounds,
            &bracket_t,
            &bracket_s,
            manifest.surface.n_t,
            manifest.surface.n_s,
        );
        let est = surface_minimax_c_beta(&prob, &mut surface, &manifest.surface);

        ascending.push(SweepRecord {
            beta,
            c_beta_estimate: est.c_beta_estimate,
            m_beta: m.m_beta,
            energy: report.energy,
            dist_to_ground: report.dist_to_ground,
            residual_norm: report.residual_norm,
            norm_u: report.norm_u,
            norm_v: report.norm_v,
        });
        let idx = schedule.len() - ascending.len();
        write_field_snapshot(&manifest.out_dir.join(format!("pair_u_{idx:02}.bin")), &report.pair.u)?;
        write_field_snapshot(&manifest.out_dir.join(format!("pair_v_{idx:02}.bin")), &report.pair.v)?;
    }

    let mut records = ascending;
    records.reverse(); // CSV rows run from the largest beta down

    let csv_path = manifest.out_dir.join("results.csv");
    emit_csv(&records, &csv_path)?;

    let summary_path = manifest.out_dir.join("summary.txt");
    let c0 = grounds.first.level + grounds.second.level;
    let mut summary = String::new();
    summary.push_str("manifest = manifest.txt\n");
    summary.push_str(&format!("c1 = {:.12e}\n", grounds.first.level));
    summary.push_str(&format!("c2 = {:.12e}\n", grounds.second.level));
    summary.push_str(&format!("sbar_p = {sbar:.12e}\n"));
    summary.push_str(&format!("c1_star = {c1_star:.12e}\n"));
    summary.push_str(&format!("c2_star = {c2_star:.12e}\n"));
    summary.push_str(&format!("bracket_t = ({:.12e}, {:.12e})\n", bracket_t.t1, bracket_t.t2));
    summary.push_str(&format!("bracket_s = ({:.12e}, {:.12e})\n", bracket_s.t1, bracket_s.t2));
    summary.push_str(&format!(
        "largest_converged_beta = {:.12e}\n",
        records.first().map(|r| r.beta).unwrap_or(0.0)
    ));
    summary.push_str("table: beta, |I_beta - (c1+c2)|, dist_to_UV\n");
    let mut prev_dev = f64::INFINITY;
    let mut monotone = true;
    // walk the table upward in beta order (descending file order reversed)
    for r in records.iter().rev() {
        let dev = (r.energy - c0).abs();
        summary.push_str(&format!("  {:.6e}  {:.6e}  {:.6e}\n", r.beta, dev, r.dist_to_ground));
    }
    for r in records.iter() {
        let dev = (r.energy - c0).abs();
        if dev > prev_dev + 1e-14 {
            monotone = false;
        }
        prev_dev = dev;
    }
    if !monotone {
        summary.push_str("warning: |I_beta - (c1+c2)| is not monotone along the schedule\n");
    }
    fs::write(&summary_path, summary)?;

    Ok(ExperimentResult {
        records,
        c1: grounds.first.level,
        c2: grounds.second.level,
        c1_star,
        c2_star,
        sbar_p: sbar,
        csv_path,
        summary_path,
    })
}

const CSV_HEADER: &str = "beta,c_beta,m_beta,I_beta,dist_to_UV,residual,norm_u,norm_v";

/// Write the records as CSV: pinned header, one row per record, decimal
/// values with 12 significant digits, newline-terminated.
pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParams("refusing to emit an empty CSV".into()));
    }
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
            r.beta,
            r.c_beta_estimate,
            r.m_beta,
            r.energy,
            r.dist_to_ground,
            r.residual_norm,
            r.norm_u,
            r.norm_v
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parse a CSV produced by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(Error::Config("unexpected CSV header".into())),
    }
    let mut records = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(Error::Config(format!("bad CSV row: {line}")));
        }
        let f = |i: usize| -> Result<f64> {
            cols[i]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {:?}: {e}", cols[i])))
        };
        records.push(SweepRecord {
            beta: f(0)?,
            c_beta_estimate: f(1)?,
            m_beta: f(2)?,
            energy: f(3)?,
            dist_to_ground: f(4)?,
            residual_norm: f(5)?,
            norm_u: f(6)?,
            norm_v: f(7)?,
        });
    }
    Ok(records)
}

/// Flat little-endian snapshot: `u64` dim count, `u64` extent per axis,
/// then the row-major `f64` node values.
pub fn write_field_snapshot(path: &Path, field: &Field) -> Result<()> {
    let grid = field.grid();
    let mut file = fs::File::create(path)?;
    let mut buf = Vec::with_capacity(8 * (1 + grid.dim() + field.values().len()));
    buf.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    for _ in 0..grid.dim() {
        buf.extend_from_slice(&(grid.n_per_dim() as u64).to_le_bytes());
    }
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&buf)?;
    Ok(())
}

/// Read back a snapshot written by [`write_field_snapshot`].
pub fn read_field_snapshot(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let take_u64 = |off: usize| -> Result<u64> {
        bytes
            .get(off..off + 8)
            .map(|s| u64::from_le_bytes(s.try_into().unwrap()))
            .ok_or_else(|| Error::Config("truncated snapshot".into()))
    };
    let ndim = take_u64(0)? as usize;
    if !(1..=3).contains(&ndim) {
        return Err(Error::Config(format!("snapshot claims {ndim} dimensions")));
    }
    let mut extents = Vec::with_capacity(ndim);
    for i in 0..ndim {
        extents.push(take_u64(8 * (1 + i))? as usize);
    }
    let count: usize = extents.iter().product();
    let data_off = 8 * (1 + ndim);
    if bytes.len() != data_off + 8 * count {
        return Err(Error::Config("snapshot length mismatch".into()));
    }
    let mut values = Vec::with_capacity(count);
    for i in 0..count {
        let off = data_off + 8 * i;
        values.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
    }
    Ok((extents, values))
}
