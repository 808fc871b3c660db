//! Experiment configuration: JSON-loadable, strict about unknown fields,
//! self-describing (the full config is serialized into every result file).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ilt::EstimatorConfig;
use crate::path::StartLaw;

/// The experiments the runner can dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SmallDev,
    Fit,
    Scaling,
    NegMoment,
    NoIntersect,
    HittingTail,
    TauTail,
    CalibrateA,
    UpperTail,
    Oracle,
    Validate,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SmallDev => "small-dev",
            ExperimentKind::Fit => "fit",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::NegMoment => "neg-moment",
            ExperimentKind::NoIntersect => "no-intersect",
            ExperimentKind::HittingTail => "hitting-tail",
            ExperimentKind::TauTail => "tau-tail",
            ExperimentKind::CalibrateA => "calibrate-a",
            ExperimentKind::UpperTail => "upper-tail",
            ExperimentKind::Oracle => "oracle",
            ExperimentKind::Validate => "validate",
        }
    }
}

fn default_replicates() -> usize {
    200_000
}

fn default_n_steps() -> usize {
    4096
}

fn default_horizon() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    0x11b7_1ab5
}

fn default_eps_min() -> f64 {
    0.02
}

// Upper edge of the default epsilon window. Above ~0.1 the curve bends
// toward the bulk of the ILT distribution and the local log-log slope
// drifts well past the asymptotic small-ball exponent, so larger windows
// bias the fit upward.
fn default_eps_max() -> f64 {
    0.1
}

fn default_eps_count() -> usize {
    12
}

fn default_start_law() -> StartLaw {
    StartLaw::Point(0.0, 0.0)
}

fn default_n_grid() -> Vec<usize> {
    vec![32, 45, 64, 91, 128, 181, 256, 362, 512]
}

fn default_t_grid() -> Vec<f64> {
    vec![4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0]
}

fn default_a_grid() -> Vec<f64> {
    log_spaced(1e-4, 1.0, 9)
}

fn default_p_grid() -> Vec<f64> {
    vec![0.0, 1.0 / 3.0, 0.5, 1.0]
}

fn default_u_grid() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
}

fn default_scaling_t() -> f64 {
    2.0
}

/// Top-level experiment configuration. Unknown fields are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Which experiment to run; the CLI subcommand sets or overrides this.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_start_law")]
    pub start_law: StartLaw,
    /// Estimator; None means binned with h = 4 sqrt(dt).
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default = "default_eps_min")]
    pub eps_min: f64,
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_eps_count")]
    pub eps_count: usize,
    /// n grid for walk-decay experiments.
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    /// t grid for the tau-tail fit (must lie in [1, 8]).
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    /// Candidate thresholds for calibrate-a.
    #[serde(default = "default_a_grid")]
    pub a_grid: Vec<f64>,
    /// Exponents for the negative-moment diagnostic.
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
    /// Levels for the upper-tail probe.
    #[serde(default = "default_u_grid")]
    pub u_grid: Vec<f64>,
    /// Horizon for the scaling-law test.
    #[serde(default = "default_scaling_t")]
    pub scaling_t: f64,
    /// Worker threads; None defers to ILTLAB_WORKERS or the rayon default.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Output directory; None writes to the current directory.
    #[serde(default)]
    pub out: Option<std::path::PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be >= 1".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if !(self.eps_min > 0.0) || !(self.eps_max > self.eps_min) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < eps_min < eps_max, got [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        if self.eps_count < 2 {
            return Err(Error::InvalidConfig("eps_count must be >= 2".into()));
        }
        if !(self.scaling_t > 0.0) {
            return Err(Error::InvalidConfig("scaling_t must be > 0".into()));
        }
        match self.estimator {
            Some(EstimatorConfig::Binned { h }) if !(h > 0.0) => {
                return Err(Error::InvalidBandwidth(h))
            }
            Some(EstimatorConfig::Mollified { eta }) if !(eta > 0.0) => {
                return Err(Error::InvalidBandwidth(eta))
            }
            _ => {}
        }
        for grid in [&self.t_grid, &self.a_grid, &self.u_grid] {
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig("grids must be strictly ascending".into()));
            }
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("n_grid must be strictly ascending".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        self.estimator
            .unwrap_or_else(|| EstimatorConfig::default_binned(self.dt()))
    }

    /// Log-spaced epsilon grid from eps_min to eps_max inclusive.
    pub fn epsilon_grid(&self) -> Vec<f64> {
        log_spaced(self.eps_min, self.eps_max, self.eps_count)
    }
}

/// `count` points log-spaced on [lo, hi], endpoints exact.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.replicates, 200_000);
        assert_eq!(cfg.n_steps, 4096);
        let eps = cfg.epsilon_grid();
        assert_eq!(eps.len(), 12);
        assert_eq!(eps[0], 0.02);
        assert_eq!(eps[11], 0.1);
        for w in eps.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn json_round_trip_identity() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "small-dev", "master_seed": 1}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Some(ExperimentKind::SmallDev));
        assert_eq!(cfg.master_seed, 1);
        assert_eq!(cfg.replicates, 200_000);
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = ExperimentConfig::from_json(r#"{"bogus_field": 3}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"replicates": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"horizon": -1.0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"eps_min": 0.5, "eps_max": 0.1}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"estimator": {"kind": "binned", "h": -0.1}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(r#"{"n_grid": [8, 8]}"#).is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"master_seed": 9, "replicates": 10}"#).unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.replicates, 10);
        assert_eq!(cfg.n_steps, 4096);
        assert_eq!(cfg.experiment, None);
    }

    #[test]
    fn log_spacing_geometric() {
        let g = log_spaced(1.0, 16.0, 5);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
        }
    }
}
