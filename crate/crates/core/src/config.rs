//! Flat `key = value` run configuration: one screen describes a whole run,
//! unknown keys are rejected, missing optional keys fall back to documented
//! defaults (echoed by the CLI so every run is fully reproducible from its
//! output).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::coupled::{NewtonControls, SurfaceControls};
use crate::error::{Error, Result};
use crate::functional::ModelParams;
use crate::ground::DescentControls;
use crate::potential::Potential;
use crate::sweep::RunManifest;

const KNOWN_KEYS: &[&str] = &[
    "dim",
    "p",
    "mu1",
    "mu2",
    "potential",
    "v_inf",
    "depth",
    "width",
    "half_width",
    "n_per_dim",
    "beta_schedule",
    "ground_tol",
    "ground_max_iter",
    "newton_tol",
    "newton_max_iter",
    "linear_rel_tol",
    "linear_max_dim",
    "surface_nt",
    "surface_ns",
    "surface_budget",
    "surface_step",
    "probe_samples",
    "seed",
    "out_dir",
    "sobolev_s",
    "sobolev_grids",
    "sobolev_half_width",
];

const REQUIRED_KEYS: &[&str] = &["dim", "p", "mu1", "mu2"];

/// How the critical Sobolev constant used by the negative-part check is
/// obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SobolevSource {
    /// User-supplied value (e.g. from the literature).
    Given(f64),
    /// Run the variational estimator on the configured grid family.
    Estimate,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dim: usize,
    pub p: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub potential: Potential,
    pub half_width: f64,
    pub n_per_dim: usize,
    pub beta_schedule: Vec<f64>,
    pub ground: DescentControls,
    pub newton: NewtonControls,
    pub surface: SurfaceControls,
    pub probe_samples: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sobolev_s: SobolevSource,
    pub sobolev_grids: Vec<usize>,
    pub sobolev_half_width: f64,
    /// `(key, value)` pairs that fell back to their defaults.
    pub defaults_applied: Vec<(String, String)>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {path:?}: {e}")))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got {raw:?}", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key: {key}")));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key: {key}")));
            }
        }
        for req in REQUIRED_KEYS {
            if !map.contains_key(*req) {
                return Err(Error::Config(format!("missing required key: {req}")));
            }
        }

        let mut defaults = Vec::new();
        let get_or = |key: &str, default: String, defaults: &mut Vec<(String, String)>| -> String {
            match map.get(key) {
                Some(v) => v.clone(),
                None => {
                    defaults.push((key.to_string(), default.clone()));
                    default
                }
            }
        };

        let dim: usize = parse_num(&map["dim"], "dim")?;
        let p: f64 = parse_num(&map["p"], "p")?;
        let mu1: f64 = parse_num(&map["mu1"], "mu1")?;
        let mu2: f64 = parse_num(&map["mu2"], "mu2")?;

        let (default_l, default_n) = match dim {
            1 => (20.0, 2047usize),
            2 => (10.0, 127),
            _ => (8.0, 63),
        };

        let family = get_or("potential", "constant".into(), &mut defaults);
        let v_inf: f64 = parse_num(&get_or("v_inf", "1".into(), &mut defaults), "v_inf")?;
        let depth: f64 = parse_num(&get_or("depth", "0".into(), &mut defaults), "depth")?;
        let width: f64 = parse_num(&get_or("width", "1".into(), &mut defaults), "width")?;
        let potential = match family.as_str() {
            "constant" => Potential::constant(v_inf),
            "gaussian_well" => Potential::gaussian_well(v_inf, depth, width),
            "sign_changing" => Potential::sign_changing(v_inf, depth, width),
            other => Err(Error::Config(format!(
                "potential must be constant | gaussian_well | sign_changing, got {other}"
            ))),
        }
        .map_err(|e| Error::Config(format!("invalid potential: {e}")))?;

        let half_width: f64 =
            parse_num(&get_or("half_width", format!("{default_l}"), &mut defaults), "half_width")?;
        let n_per_dim: usize =
            parse_num(&get_or("n_per_dim", format!("{default_n}"), &mut defaults), "n_per_dim")?;

        let default_schedule = "0.2,0.1,0.05,0.025,0.0125,0.00625,0.003125,0.0015625";
        let schedule_text = get_or("beta_schedule", default_schedule.into(), &mut defaults);
        let beta_schedule = parse_list::<f64>(&schedule_text, "beta_schedule")?;

        let ground = DescentControls {
            tol: parse_num(&get_or("ground_tol", "1e-9".into(), &mut defaults), "ground_tol")?,
            max_iter: parse_num(
                &get_or("ground_max_iter", "10000".into(), &mut defaults),
                "ground_max_iter",
            )?,
            ..DescentControls::default()
        };
        let newton = NewtonControls {
            tol: parse_num(&get_or("newton_tol", "1e-8".into(), &mut defaults), "newton_tol")?,
            max_iter: parse_num(
                &get_or("newton_max_iter", "50".into(), &mut defaults),
                "newton_max_iter",
            )?,
            linear_rel_tol: parse_num(
                &get_or("linear_rel_tol", "1e-3".into(), &mut defaults),
                "linear_rel_tol",
            )?,
            linear_max_dim: parse_num(
                &get_or("linear_max_dim", "120".into(), &mut defaults),
                "linear_max_dim",
            )?,
            ..NewtonControls::default()
        };
        let surface = SurfaceControls {
            n_t: parse_num(&get_or("surface_nt", "33".into(), &mut defaults), "surface_nt")?,
            n_s: parse_num(&get_or("surface_ns", "33".into(), &mut defaults), "surface_ns")?,
            budget: parse_num(
                &get_or("surface_budget", "60".into(), &mut defaults),
                "surface_budget",
            )?,
            step: parse_num(&get_or("surface_step", "0.5".into(), &mut defaults), "surface_step")?,
            ..SurfaceControls::default()
        };

        let probe_samples: usize =
            parse_num(&get_or("probe_samples", "200".into(), &mut defaults), "probe_samples")?;
        let seed: u64 = parse_num(&get_or("seed", "42".into(), &mut defaults), "seed")?;
        let out_dir = PathBuf::from(get_or("out_dir", "runs/out".into(), &mut defaults));

        // 5.478: variationally sharp constant for the 3D critical embedding
        let sobolev_text = get_or("sobolev_s", "5.478".into(), &mut defaults);
        let sobolev_s = if sobolev_text == "estimate" {
            SobolevSource::Estimate
        } else {
            SobolevSource::Given(parse_num(&sobolev_text, "sobolev_s")?)
        };
        let sobolev_grids =
            parse_list::<usize>(&get_or("sobolev_grids", "15,23,31".into(), &mut defaults), "sobolev_grids")?;
        let sobolev_half_width: f64 = parse_num(
            &get_or("sobolev_half_width", "6".into(), &mut defaults),
            "sobolev_half_width",
        )?;

        Ok(RunConfig {
            dim,
            p,
            mu1,
            mu2,
            potential,
            half_width,
            n_per_dim,
            beta_schedule,
            ground,
            newton,
            surface,
            probe_samples,
            seed,
            out_dir,
            sobolev_s,
            sobolev_grids,
            sobolev_half_width,
            defaults_applied: defaults,
        })
    }

    pub fn model_params(&self, beta: f64) -> Result<ModelParams> {
        ModelParams::new(self.dim, self.p, self.mu1, self.mu2, beta, self.potential)
            .map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn manifest(&self) -> Result<RunManifest> {
        let (created_unix, code_version) = RunManifest::now_version();
        Ok(RunManifest {
            params: self.model_params(0.0)?,
            half_width: self.half_width,
            n_per_dim: self.n_per_dim,
            ground: self.ground,
            newton: self.newton,
            surface: self.surface,
            beta_schedule: self.beta_schedule.clone(),
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            created_unix,
            code_version,
        })
    }
}

fn parse_num<T: std::str::FromStr>(text: &str, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    text.parse::<T>()
        .map_err(|e| Error::Config(format!("invalid value for key '{key}': {e}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| parse_num::<T>(s.trim(), key))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "dim = 1\np = 3\nmu1 = 1\nmu2 = 1\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.n_per_dim, 2047);
        assert_eq!(cfg.half_width, 20.0);
        assert_eq!(cfg.beta_schedule.len(), 8);
        assert!(cfg.defaults_applied.iter().any(|(k, _)| k == "n_per_dim"));
        assert!(matches!(cfg.sobolev_s, SobolevSource::Given(v) if (v - 5.478).abs() < 1e-12));
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = RunConfig::parse("dim = 1\nmu1 = 1\nmu2 = 1\n").unwrap_err();
        assert!(format!("{err}").contains("missing required key: p"));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let err = RunConfig::parse(&format!("{MINIMAL}color = red\n")).unwrap_err();
        assert!(format!("{err}").contains("unknown key: color"));
        let err = RunConfig::parse(&format!("{MINIMAL}p = 4\n")).unwrap_err();
        assert!(format!("{err}").contains("duplicate key: p"));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = RunConfig::parse(&format!("# run\n\n{MINIMAL}# done\n")).unwrap();
        assert_eq!(cfg.dim, 1);
    }

    #[test]
    fn potential_families_parse() {
        let cfg = RunConfig::parse(&format!(
            "{MINIMAL}potential = gaussian_well\ndepth = 0.5\nwidth = 2\n"
        ))
        .unwrap();
        assert_eq!(cfg.potential, Potential::gaussian_well(1.0, 0.5, 2.0).unwrap());

        let err = RunConfig::parse(&format!("{MINIMAL}potential = smooth_step\n")).unwrap_err();
        assert!(format!("{err}").contains("potential must be"));

        // family invariants surface as config errors
        let err = RunConfig::parse(&format!("{MINIMAL}potential = sign_changing\ndepth = 0.5\n"))
            .unwrap_err();
        assert!(format!("{err}").contains("invalid potential"));
    }

    #[test]
    fn sobolev_estimate_mode() {
        let cfg = RunConfig::parse(&format!("{MINIMAL}sobolev_s = estimate\n")).unwrap();
        assert_eq!(cfg.sobolev_s, SobolevSource::Estimate);
    }

    #[test]
    fn bad_values_name_their_key() {
        let err = RunConfig::parse("dim = 1\np = fast\nmu1 = 1\nmu2 = 1\n").unwrap_err();
        assert!(format!("{err}").contains("invalid value for key 'p'"));
    }
}
