//! Monte Carlo rate-versus-distance sweeps.
//!
//! Every scheme at a given `(d0, trial)` sees the same channel draw, so
//! per-trial comparisons between schemes are paired. Each trial owns a
//! private random stream keyed by `(d0 index, trial, purpose)`, which makes a
//! parallel sweep output-identical to a serial one.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{draw_channel_set, ChannelError, ChannelSet, FadingSpec, Geometry};
use crate::numerics::RngStream;
use crate::optimizer::{ao_solve, best_alpha, relay_without_irs, solve_fixed_alpha, AOConfig, Mode, OptimizerError, Solution};
use crate::rate::{Instance, PowerBudget, RateError};

/// Time split of the equal-allocation baseline.
pub const EQUAL_ALPHA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Relaying with jointly optimized θ₁ and α.
    RelayingOptAlpha,
    /// Relaying with α fixed at one half.
    RelayingEqualAlpha,
    /// The IRS only reflects; closed-form alignment to the user.
    #[serde(rename = "conventional_irs")]
    ConventionalIRS,
    /// Decode-and-forward relay at the controller position, no IRS.
    #[serde(rename = "relay_no_irs")]
    RelayNoIRS,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::RelayingOptAlpha,
        Scheme::RelayingEqualAlpha,
        Scheme::ConventionalIRS,
        Scheme::RelayNoIRS,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::RelayingOptAlpha => "relaying_opt_alpha",
            Scheme::RelayingEqualAlpha => "relaying_equal_alpha",
            Scheme::ConventionalIRS => "conventional_irs",
            Scheme::RelayNoIRS => "relay_no_irs",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Scheme::RelayingOptAlpha => 1,
            Scheme::RelayingEqualAlpha => 2,
            Scheme::ConventionalIRS => 3,
            Scheme::RelayNoIRS => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| ExperimentError::UnknownScheme(s.to_string()))
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub fading: FadingSpec,
    /// Transmit power of both the AP and the controller.
    pub p_dbm: f64,
    pub sigma2_dbm: f64,
    /// User distances along the AP–IRS axis (m).
    pub d0_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            fading: FadingSpec::default(),
            p_dbm: 8.0,
            sigma2_dbm: -50.0,
            d0_list: (1..=10).map(|k| 10.0 * k as f64).collect(),
            trials: 50,
            seed: 2021,
            schemes: Scheme::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.geometry.validate()?;
        self.fading.validate()?;
        if self.trials == 0 {
            return Err(ExperimentError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.d0_list.is_empty() {
            return Err(ExperimentError::InvalidConfig("d0 list is empty".into()));
        }
        if let Some(d) = self.d0_list.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(ExperimentError::InvalidConfig(format!("d0 = {d} must be positive")));
        }
        if self.schemes.is_empty() {
            return Err(ExperimentError::InvalidConfig("no schemes selected".into()));
        }
        if !self.p_dbm.is_finite() || !self.sigma2_dbm.is_finite() {
            return Err(ExperimentError::InvalidConfig("power levels must be finite".into()));
        }
        Ok(())
    }

    pub fn power_budget(&self) -> Result<PowerBudget, ExperimentError> {
        Ok(PowerBudget::equal(dbm_to_mw(self.p_dbm), dbm_to_mw(self.sigma2_dbm))?)
    }
}

const TAG_CHANNEL: u64 = 0;

/// Stream id of one `(d0 index, trial, purpose)` triple; the fields occupy
/// disjoint bit ranges so distinct triples never share a stream.
pub fn stream_id(d0_index: usize, trial: usize, purpose: u64) -> u64 {
    debug_assert!(trial < 1 << 32 && purpose < 1 << 8);
    ((d0_index as u64) << 40) | ((trial as u64) << 8) | purpose
}

/// Channel draw shared by every scheme at `(d0_list[d0_index], trial)`.
pub fn paired_draws(cfg: &ExperimentConfig, d0_index: usize, trial: usize) -> Result<ChannelSet, ExperimentError> {
    let d0 = *cfg
        .d0_list
        .get(d0_index)
        .ok_or_else(|| ExperimentError::InvalidConfig(format!("d0 index {d0_index} out of range")))?;
    let mut rng = RngStream::with_stream(cfg.seed, stream_id(d0_index, trial, TAG_CHANNEL));
    Ok(draw_channel_set(&mut rng, &cfg.geometry, &cfg.fading, d0)?)
}

/// Solves one instance with the given scheme.
pub fn solve_scheme(
    instance: &Instance,
    scheme: Scheme,
    solver: &AOConfig,
    rng: &mut RngStream,
) -> Result<Solution, ExperimentError> {
    Ok(match scheme {
        Scheme::RelayingOptAlpha => ao_solve(instance, solver, rng)?,
        Scheme::RelayingEqualAlpha => solve_fixed_alpha(instance, EQUAL_ALPHA, solver, rng)?,
        Scheme::ConventionalIRS => {
            let theta1 = instance.theta_user_star();
            let rb = instance.breakdown(&theta1)?;
            Solution {
                mode: Mode::Conventional,
                theta1,
                theta2: instance.theta2_star(),
                alpha: 1.0,
                rate: rb.c2_star,
                iterations: 0,
                rate_trace: vec![],
                relay_rate: rb.c1(best_alpha(rb.r_u, rb.r_c, rb.r_u_tilde_star))?,
                c2_star: rb.c2_star,
            }
        }
        Scheme::RelayNoIRS => relay_without_irs(instance),
    })
}

/// One Monte Carlo sample of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub d0_m: f64,
    pub scheme: Scheme,
    pub trial: usize,
    pub rate_bpshz: f64,
    pub mode: Mode,
    pub alpha: f64,
    pub seed: u64,
}

/// Draws one channel set at `d0` from `rng` and solves it with `scheme`.
pub fn run_scenario(
    cfg: &ExperimentConfig,
    solver: &AOConfig,
    scheme: Scheme,
    d0: f64,
    rng: &mut RngStream,
) -> Result<Solution, ExperimentError> {
    let cs = draw_channel_set(rng, &cfg.geometry, &cfg.fading, d0)?;
    let instance = Instance::new(cs, cfg.power_budget()?);
    solve_scheme(&instance, scheme, solver, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d0_m: f64,
    pub scheme: Scheme,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub relay_fraction: f64,
    pub mean_alpha: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn row(&self, d0: f64, scheme: Scheme) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.d0_m == d0 && r.scheme == scheme)
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    solver: &AOConfig,
    pb: &PowerBudget,
    d0_index: usize,
    trial: usize,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    let instance = Instance::new(paired_draws(cfg, d0_index, trial)?, *pb);
    cfg.schemes
        .iter()
        .map(|&scheme| {
            let mut rng = RngStream::with_stream(cfg.seed, stream_id(d0_index, trial, scheme.tag()));
            let sol = solve_scheme(&instance, scheme, solver, &mut rng)?;
            Ok(TrialRecord {
                d0_m: cfg.d0_list[d0_index],
                scheme,
                trial,
                rate_bpshz: sol.rate,
                mode: sol.mode,
                alpha: sol.alpha,
                seed: cfg.seed,
            })
        })
        .collect()
}

/// Runs every `(d0, trial, scheme)` combination and aggregates per
/// `(d0, scheme)`; rows follow the order of `d0_list` and `schemes`.
pub fn sweep_distance(cfg: &ExperimentConfig, solver: &AOConfig) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    solver.validate().map_err(ExperimentError::InvalidConfig)?;
    let pb = cfg.power_budget()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.d0_list.len())
        .flat_map(|i| (0..cfg.trials).map(move |t| (i, t)))
        .collect();
    let per_task: Vec<Vec<TrialRecord>> = tasks
        .par_iter()
        .map(|&(i, t)| run_trial(cfg, solver, &pb, i, t))
        .collect::<Result<_, _>>()?;

    let scheme_pos = |s: Scheme| cfg.schemes.iter().position(|&x| x == s).unwrap_or(usize::MAX);
    let mut indexed: Vec<(usize, TrialRecord)> = tasks
        .iter()
        .zip(per_task)
        .flat_map(|(&(i, _), recs)| recs.into_iter().map(move |r| (i, r)))
        .collect();
    indexed.sort_by_key(|(i, r)| (*i, scheme_pos(r.scheme), r.trial));

    let mut rows = Vec::new();
    for (i, &d0) in cfg.d0_list.iter().enumerate() {
        for &scheme in &cfg.schemes {
            let group: Vec<&TrialRecord> = indexed
                .iter()
                .filter(|(j, r)| *j == i && r.scheme == scheme)
                .map(|(_, r)| r)
                .collect();
            rows.push(aggregate(d0, scheme, &group));
        }
    }
    Ok(SweepResult {
        rows,
        records: indexed.into_iter().map(|(_, r)| r).collect(),
    })
}

fn aggregate(d0: f64, scheme: Scheme, group: &[&TrialRecord]) -> SweepRow {
    let n = group.len();
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n as f64;
    let mean_rate = mean(&|r| r.rate_bpshz);
    let std_rate = if n > 1 {
        (group.iter().map(|r| (r.rate_bpshz - mean_rate).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    SweepRow {
        d0_m: d0,
        scheme,
        mean_rate,
        std_rate,
        relay_fraction: mean(&|r| f64::from(u8::from(r.mode == Mode::Relaying))),
        mean_alpha: mean(&|r| r.alpha),
        trials: n,
    }
}

pub const TRIALS_CSV_HEADER: &str = "d0_m,scheme,trial,rate_bpshz,mode,alpha,seed";
pub const AGGREGATE_CSV_HEADER: &str = "d0_m,scheme,mean_rate,std_rate,relay_fraction,mean_alpha,trials";

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TRIALS_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.d0_m,
            r.scheme,
            r.trial,
            r.rate_bpshz,
            r.mode.as_str(),
            r.alpha,
            r.seed
        );
    }
    out
}

pub fn aggregate_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.d0_m, r.scheme, r.mean_rate, r.std_rate, r.relay_fraction, r.mean_alpha, r.trials
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkModel;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            geometry: Geometry {
                irs_rows: 2,
                irs_cols: 2,
                ..Geometry::default()
            },
            d0_list: vec![30.0, 50.0],
            trials: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.as_str()));
        }
        assert!(matches!("magic".parse::<Scheme>(), Err(ExperimentError::UnknownScheme(_))));
    }

    #[test]
    fn power_conversion() {
        let pb = ExperimentConfig::default().power_budget().unwrap();
        assert!((pb.p_a - 6.309_573_444_801_933).abs() < 1e-12);
        assert!((pb.sigma2 - 1e-5).abs() < 1e-18);
        assert_eq!(pb.p_a, pb.p_c);
    }

    #[test]
    fn stream_ids_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..12 {
            for t in 0..300 {
                for p in 0..5 {
                    assert!(seen.insert(stream_id(i, t, p)));
                }
            }
        }
    }

    #[test]
    fn paired_draws_share_and_differ() {
        let cfg = small();
        let a = paired_draws(&cfg, 1, 2).unwrap();
        let b = paired_draws(&cfg, 1, 2).unwrap();
        assert_eq!(a, b);
        let c = paired_draws(&cfg, 1, 3).unwrap();
        assert_ne!(a.h_au, c.h_au);
        assert!(paired_draws(&cfg, 5, 0).is_err());
    }

    #[test]
    fn conventional_with_silent_cascade_is_direct_rate() {
        let cfg = small();
        let mut cs = paired_draws(&cfg, 0, 0).unwrap();
        for z in cs.h_ai.iter_mut() {
            *z = num_complex::Complex64::new(0.0, 0.0);
        }
        let pb = cfg.power_budget().unwrap();
        let inst = Instance::new(cs.clone(), pb);
        let sol = solve_scheme(&inst, Scheme::ConventionalIRS, &AOConfig::default(), &mut RngStream::new(0)).unwrap();
        let direct = (1.0 + pb.p_a * cs.h_au.norm_sqr() / pb.sigma2).log2();
        assert!((sol.rate - direct).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic_and_paired() {
        let cfg = small();
        let solver = AOConfig::default();
        let a = sweep_distance(&cfg, &solver).unwrap();
        let b = sweep_distance(&cfg, &solver).unwrap();
        assert_eq!(trials_csv(&a.records), trials_csv(&b.records));
        assert_eq!(aggregate_csv(&a.rows), aggregate_csv(&b.rows));
        assert_eq!(a.rows.len(), 2 * 4);
        assert_eq!(a.records.len(), 2 * 3 * 4);
        for d0 in &cfg.d0_list {
            for t in 0..cfg.trials {
                let get = |s| a.records.iter().find(|r| r.d0_m == *d0 && r.trial == t && r.scheme == s).unwrap();
                assert!(get(Scheme::RelayingOptAlpha).rate_bpshz >= get(Scheme::ConventionalIRS).rate_bpshz - 1e-9);
            }
        }
        for row in &a.rows {
            assert!(row.mean_rate >= 0.0);
            assert!((0.0..=1.0).contains(&row.relay_fraction));
            assert_eq!(row.trials, 3);
        }
        let csv = aggregate_csv(&a.rows);
        assert!(csv.starts_with(AGGREGATE_CSV_HEADER));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn equal_alpha_is_controller_limited_near_the_irs() {
        // At d0 = 50 the controller branch 0.5 R_C is the binding one.
        let cfg = ExperimentConfig {
            geometry: Geometry {
                irs_rows: 4,
                irs_cols: 4,
                ..Geometry::default()
            },
            ..ExperimentConfig::default()
        };
        let pb = cfg.power_budget().unwrap();
        let solver = AOConfig::default();
        let d0_index = cfg.d0_list.iter().position(|&d| d == 50.0).unwrap();
        for trial in 0..3 {
            let inst = Instance::new(paired_draws(&cfg, d0_index, trial).unwrap(), pb);
            let mut rng = RngStream::new(trial as u64);
            let sol = solve_scheme(&inst, Scheme::RelayingEqualAlpha, &solver, &mut rng).unwrap();
            let rb = inst.breakdown(&sol.theta1).unwrap();
            let branch1 = 0.5 * rb.r_u + 0.5 * rb.r_u_tilde_star;
            if sol.mode == Mode::Relaying && branch1 > 0.5 * rb.r_c {
                assert!((sol.rate - 0.5 * rb.r_c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.d0_list = vec![10.0, -1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.fading.ap_user.model = LinkModel::Rayleigh;
        cfg.fading.ap_user.exponent = 0.0;
        assert!(cfg.validate().is_err());
    }
}
