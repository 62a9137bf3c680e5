//! TOML experiment configuration.
//!
//! Five optional tables, every key optional:
//!
//! ```toml
//! [geometry]
//! ap_pos = [0.0, 1.0, 2.0]
//! irs_center_pos = [50.0, 0.0, 1.0]
//! controller_pos = [50.0, 0.3, 1.5]
//! user_y = 1.0
//! user_z = 1.0
//! irs_rows = 8
//! irs_cols = 8
//! m = 64                 # overrides rows/cols: square if possible, else 1 x m; 0 = no IRS
//! element_spacing = 0.025
//! wavelength = 0.05
//!
//! [fading]
//! gamma0_db = -30.0
//! rician_k_db = 10.0
//! ap_user = { model = "rayleigh", exponent = 3.0 }
//! # ap_irs, ap_controller, irs_controller, irs_user, controller_user likewise;
//! # model is one of "rayleigh", "rician", "near_field_los"
//!
//! [power]
//! p_dbm = 8.0
//! sigma2_dbm = -50.0
//!
//! [solver]
//! bisection_eps = 1e-4   # any field of AOConfig
//!
//! [sweep]
//! d0_list = [10.0, 20.0, 30.0]
//! trials = 50
//! seed = 2021
//! schemes = ["relaying_opt_alpha", "relaying_equal_alpha", "conventional_irs", "relay_no_irs"]
//! ```
//!
//! Power levels stay in dBm inside [`ExperimentConfig`] and are converted to
//! linear units only by [`ExperimentConfig::power_budget`].

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::channel::{FadingSpec, Geometry, LinkSpec, Point3};
use crate::experiment::{ExperimentConfig, Scheme};
use crate::optimizer::AOConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    geometry: RawGeometry,
    fading: RawFading,
    power: RawPower,
    solver: AOConfig,
    sweep: RawSweep,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawGeometry {
    ap_pos: Option<Point3>,
    irs_center_pos: Option<Point3>,
    controller_pos: Option<Point3>,
    user_y: Option<f64>,
    user_z: Option<f64>,
    irs_rows: Option<i64>,
    irs_cols: Option<i64>,
    m: Option<i64>,
    element_spacing: Option<f64>,
    wavelength: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawFading {
    gamma0_db: Option<f64>,
    rician_k_db: Option<f64>,
    ap_user: Option<LinkSpec>,
    ap_irs: Option<LinkSpec>,
    ap_controller: Option<LinkSpec>,
    irs_controller: Option<LinkSpec>,
    irs_user: Option<LinkSpec>,
    controller_user: Option<LinkSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPower {
    p_dbm: Option<f64>,
    sigma2_dbm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSweep {
    d0_list: Option<Vec<f64>>,
    trials: Option<i64>,
    seed: Option<i64>,
    schemes: Option<Vec<String>>,
}

fn count(name: &str, v: i64) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| ConfigError::Validation(format!("{name} must be non-negative, got {v}")))
}

/// Splits `m` elements into a square array when possible, otherwise a
/// single row.
fn array_shape(m: usize) -> (usize, usize) {
    let side = (m as f64).sqrt().round() as usize;
    if side * side == m {
        (side, side)
    } else {
        (1, m)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses configuration text; missing keys keep their defaults.
pub fn parse_config_str(text: &str) -> Result<(ExperimentConfig, AOConfig), ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let mut cfg = ExperimentConfig::default();
    let g = raw.geometry;
    let geo = &mut cfg.geometry;
    let dg = Geometry::default();
    geo.ap_pos = g.ap_pos.unwrap_or(dg.ap_pos);
    geo.irs_center_pos = g.irs_center_pos.unwrap_or(dg.irs_center_pos);
    geo.controller_pos = g.controller_pos.unwrap_or(dg.controller_pos);
    geo.user_y = g.user_y.unwrap_or(dg.user_y);
    geo.user_z = g.user_z.unwrap_or(dg.user_z);
    if let Some(r) = g.irs_rows {
        geo.irs_rows = count("geometry.irs_rows", r)?;
    }
    if let Some(c) = g.irs_cols {
        geo.irs_cols = count("geometry.irs_cols", c)?;
    }
    if let Some(m) = g.m {
        (geo.irs_rows, geo.irs_cols) = array_shape(count("geometry.m", m)?);
    }
    geo.element_spacing = g.element_spacing.unwrap_or(dg.element_spacing);
    geo.wavelength = g.wavelength.unwrap_or(dg.wavelength);

    let f = raw.fading;
    let df = FadingSpec::default();
    cfg.fading = FadingSpec {
        gamma0_db: f.gamma0_db.unwrap_or(df.gamma0_db),
        rician_k_db: f.rician_k_db.unwrap_or(df.rician_k_db),
        ap_user: f.ap_user.unwrap_or(df.ap_user),
        ap_irs: f.ap_irs.unwrap_or(df.ap_irs),
        ap_controller: f.ap_controller.unwrap_or(df.ap_controller),
        irs_controller: f.irs_controller.unwrap_or(df.irs_controller),
        irs_user: f.irs_user.unwrap_or(df.irs_user),
        controller_user: f.controller_user.unwrap_or(df.controller_user),
    };

    if let Some(p) = raw.power.p_dbm {
        cfg.p_dbm = p;
    }
    if let Some(s) = raw.power.sigma2_dbm {
        cfg.sigma2_dbm = s;
    }

    let s = raw.sweep;
    if let Some(d) = s.d0_list {
        cfg.d0_list = d;
    }
    if let Some(t) = s.trials {
        cfg.trials = count("sweep.trials", t)?;
    }
    if let Some(seed) = s.seed {
        cfg.seed = u64::try_from(seed)
            .map_err(|_| ConfigError::Validation(format!("sweep.seed must be non-negative, got {seed}")))?;
    }
    if let Some(names) = s.schemes {
        cfg.schemes = names
            .iter()
            .map(|n| n.parse::<Scheme>().map_err(|e| ConfigError::Validation(e.to_string())))
            .collect::<Result<_, _>>()?;
    }

    cfg.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
    raw.solver.validate().map_err(ConfigError::Validation)?;
    Ok((cfg, raw.solver))
}

pub fn parse_config(path: &Path) -> Result<(ExperimentConfig, AOConfig), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkModel;

    #[test]
    fn empty_text_gives_defaults() {
        let (cfg, solver) = parse_config_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(solver, AOConfig::default());
        assert_eq!(cfg.geometry.num_elements(), 64);
        let pb = cfg.power_budget().unwrap();
        assert!((pb.p_a - 10f64.powf(0.8)).abs() < 1e-12);
        assert!((pb.p_a - 6.3096).abs() < 1e-4);
    }

    #[test]
    fn overrides_apply() {
        let text = r#"
[geometry]
m = 16
[fading]
ap_user = { model = "rician", exponent = 3.5 }
[power]
p_dbm = 10.0
[solver]
randomization_count = 50
[sweep]
d0_list = [5.0, 15.0]
trials = 2
seed = 9
schemes = ["conventional_irs"]
"#;
        let (cfg, solver) = parse_config_str(text).unwrap();
        assert_eq!((cfg.geometry.irs_rows, cfg.geometry.irs_cols), (4, 4));
        assert_eq!(cfg.fading.ap_user, LinkSpec::new(LinkModel::Rician, 3.5));
        assert_eq!(cfg.p_dbm, 10.0);
        assert_eq!(solver.randomization_count, 50);
        assert_eq!(cfg.d0_list, vec![5.0, 15.0]);
        assert_eq!((cfg.trials, cfg.seed), (2, 9));
        assert_eq!(cfg.schemes, vec![Scheme::ConventionalIRS]);
    }

    #[test]
    fn element_count_shapes() {
        assert_eq!(array_shape(0), (0, 0));
        assert_eq!(array_shape(2), (1, 2));
        assert_eq!(array_shape(400), (20, 20));
        let (cfg, _) = parse_config_str("[geometry]\nm = 0\n").unwrap();
        assert_eq!(cfg.geometry.num_elements(), 0);
    }

    #[test]
    fn validation_errors() {
        for text in [
            "[sweep]\ntrials = -3\n",
            "[sweep]\ntrials = 0\n",
            "[sweep]\nd0_list = [10.0, 0.0]\n",
            "[sweep]\nschemes = [\"nope\"]\n",
            "[solver]\nbisection_eps = -1.0\n",
        ] {
            assert!(matches!(parse_config_str(text), Err(ConfigError::Validation(_))), "{text}");
        }
    }

    #[test]
    fn parse_errors_carry_line_and_key() {
        let err = parse_config_str("[sweep]\ntrials = 3\nbogus_key = 1\n").unwrap_err();
        match err {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus_key"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_config_str("[power]\np_dbm = \"loud\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err:?}");
        let err = parse_config(Path::new("/definitely/missing.toml")).unwrap_err();
        assert!(err.to_string().contains("/definitely/missing.toml"));
    }
}
