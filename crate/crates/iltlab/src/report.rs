//! Result records and rendering: every experiment emits a self-describing
//! JSON record (config snapshot included) plus a flat CSV with one row per
//! curve point. Numbers are rendered with 17 significant digits so text
//! round-trips are lossless.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::lab::{
    DeviationCurve, ExponentFit, NegativeMomentReport, TauTailMode, ThresholdCalibration,
    UpperTailPoint,
};
use crate::stats::LineFit;

pub const FLAT_HEADER: &str = "x,count,replicates,p_hat,ci_low,ci_high,flag";

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Curve {
        curve: DeviationCurve,
    },
    CurveWithFit {
        curve: DeviationCurve,
        fit: ExponentFit,
    },
    Scaling {
        t: f64,
        exponent: f64,
        ks_statistic: f64,
        p_value: f64,
    },
    NegMoment {
        reports: Vec<NegativeMomentReport>,
    },
    TauTail {
        mode: TauTailMode,
        fit: LineFit,
    },
    Calibration {
        calibration: ThresholdCalibration,
    },
    UpperTail {
        exploratory: bool,
        self_variant: bool,
        points: Vec<UpperTailPoint>,
    },
    Scalar {
        name: String,
        value: f64,
    },
    Validation {
        checks: Vec<(String, bool)>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRecord {
    pub artifact_version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub started_unix_ms: u64,
    pub wall_clock_ms: u64,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Flat,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "flat" => Ok(ReportFormat::Flat),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format '{other}' (expected 'table' or 'flat')"
            ))),
        }
    }
}

impl ResultRecord {
    pub fn new(
        experiment: &str,
        config: ExperimentConfig,
        started_unix_ms: u64,
        wall_clock_ms: u64,
        payload: Payload,
    ) -> Self {
        ResultRecord {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            config,
            started_unix_ms,
            wall_clock_ms,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Flat => self.render_flat(),
            ReportFormat::Table => self.render_table(),
        }
    }

    fn curve(&self) -> Option<&DeviationCurve> {
        match &self.payload {
            Payload::Curve { curve } | Payload::CurveWithFit { curve, .. } => Some(curve),
            Payload::Calibration { calibration } => Some(&calibration.curve),
            _ => None,
        }
    }

    /// Flat CSV: one row per curve point, 7 columns. Payloads without a
    /// curve render their scalars as key,value rows.
    pub fn render_flat(&self) -> String {
        let mut out = String::new();
        if let Some(curve) = self.curve() {
            out.push_str(FLAT_HEADER);
            out.push('\n');
            for p in &curve.points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt17(p.x),
                    p.count_below,
                    p.replicates,
                    fmt17(p.p_hat),
                    fmt17(p.ci_low),
                    fmt17(p.ci_high),
                    u8::from(p.flagged)
                );
            }
            return out;
        }
        if let Payload::UpperTail { points, .. } = &self.payload {
            out.push_str("u,count,replicates,p_hat,ci_low,ci_high,transform\n");
            for p in points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt17(p.u),
                    p.count_at_least,
                    p.replicates,
                    fmt17(p.p_hat),
                    fmt17(p.ci_low),
                    fmt17(p.ci_high),
                    p.transform.map(fmt17).unwrap_or_default()
                );
            }
            return out;
        }
        out.push_str("key,value\n");
        match &self.payload {
            Payload::Scaling {
                t,
                exponent,
                ks_statistic,
                p_value,
            } => {
                let _ = writeln!(out, "t,{}", fmt17(*t));
                let _ = writeln!(out, "exponent,{}", fmt17(*exponent));
                let _ = writeln!(out, "ks_statistic,{}", fmt17(*ks_statistic));
                let _ = writeln!(out, "p_value,{}", fmt17(*p_value));
            }
            Payload::NegMoment { reports } => {
                for r in reports {
                    let _ = writeln!(out, "p_{},mean,{}", fmt17(r.p), fmt17(r.mean));
                    let _ = writeln!(
                        out,
                        "p_{},max_term_share,{}",
                        fmt17(r.p),
                        fmt17(r.max_term_share)
                    );
                    let _ = writeln!(
                        out,
                        "p_{},classification,{:?}",
                        fmt17(r.p),
                        r.classification
                    );
                }
            }
            Payload::TauTail { fit, .. } => {
                let _ = writeln!(out, "slope,{}", fmt17(fit.slope));
                let _ = writeln!(out, "intercept,{}", fmt17(fit.intercept));
                let _ = writeln!(out, "slope_stderr,{}", fmt17(fit.slope_stderr));
            }
            Payload::Scalar { name, value } => {
                let _ = writeln!(out, "{name},{}", fmt17(*value));
            }
            Payload::Validation { checks } => {
                for (name, ok) in checks {
                    let _ = writeln!(out, "{name},{}", if *ok { "pass" } else { "fail" });
                }
            }
            _ => {}
        }
        out
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "experiment: {} (seed {}, {} replicates)",
            self.experiment, self.config.master_seed, self.config.replicates
        );
        match &self.payload {
            Payload::Curve { curve } => render_curve_table(&mut out, curve),
            Payload::CurveWithFit { curve, fit } => {
                render_curve_table(&mut out, curve);
                let _ = writeln!(
                    out,
                    "fitted slope: {:.6} +- {:.6} over [{}, {}] ({} points)",
                    fit.slope, fit.stderr, fit.window.0, fit.window.1, fit.points_used
                );
            }
            Payload::Scaling {
                t,
                exponent,
                ks_statistic,
                p_value,
            } => {
                let _ = writeln!(
                    out,
                    "scaling t = {t}, exponent {exponent}: KS = {ks_statistic:.6}, p = {p_value:.6}"
                );
            }
            Payload::NegMoment { reports } => {
                let _ = writeln!(out, "{:>10} {:>14} {:>12} {:>14}", "p", "mean", "max-share", "class");
                for r in reports {
                    let _ = writeln!(
                        out,
                        "{:>10.4} {:>14.6} {:>12.4} {:>14?}",
                        r.p, r.mean, r.max_term_share, r.classification
                    );
                }
            }
            Payload::TauTail { mode, fit } => {
                let _ = writeln!(
                    out,
                    "tau tail ({mode:?}): slope {:.6} +- {:.6} (pi^2/8 = {:.6})",
                    fit.slope,
                    fit.slope_stderr,
                    std::f64::consts::PI.powi(2) / 8.0
                );
            }
            Payload::Calibration { calibration } => {
                match (calibration.a, calibration.p_hat) {
                    (Some(a), Some(p)) => {
                        let _ = writeln!(
                            out,
                            "calibrated a = {a:.6e} with p_hat = {p:.6} < {}",
                            calibration.target
                        );
                    }
                    _ => {
                        let _ = writeln!(
                            out,
                            "no threshold qualifies; atom P{{xi = 0}} = {:.6}",
                            calibration.atom_p_hat
                        );
                    }
                }
                render_curve_table(&mut out, &calibration.curve);
            }
            Payload::UpperTail {
                self_variant,
                points,
                ..
            } => {
                let _ = writeln!(
                    out,
                    "upper tail ({}) [exploratory]",
                    if *self_variant { "self" } else { "mutual" }
                );
                let _ = writeln!(out, "{:>12} {:>12} {:>14}", "u", "p_hat", "transform");
                for p in points {
                    let _ = writeln!(
                        out,
                        "{:>12.4} {:>12.6e} {:>14}",
                        p.u,
                        p.p_hat,
                        p.transform
                            .map(|t| format!("{t:.4}"))
                            .unwrap_or_else(|| "-".into())
                    );
                }
            }
            Payload::Scalar { name, value } => {
                let _ = writeln!(out, "{name} = {}", fmt17(*value));
            }
            Payload::Validation { checks } => {
                for (name, ok) in checks {
                    let _ = writeln!(out, "{} {name}", if *ok { "PASS" } else { "FAIL" });
                }
            }
        }
        out
    }

    /// Persist the JSON record and the flat CSV; returns both paths.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}-{}", self.experiment, self.config.master_seed);
        let json_path = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&json_path, self.to_json()?)?;
        std::fs::write(&csv_path, self.render_flat())?;
        Ok((json_path, csv_path))
    }
}

fn render_curve_table(out: &mut String, curve: &DeviationCurve) {
    let _ = writeln!(
        out,
        "{:>14} {:>10} {:>10} {:>12} {:>12} {:>12} {:>5}",
        "x", "count", "reps", "p_hat", "ci_low", "ci_high", "flag"
    );
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{:>14.6e} {:>10} {:>10} {:>12.6e} {:>12.6e} {:>12.6e} {:>5}",
            p.x,
            p.count_below,
            p.replicates,
            p.p_hat,
            p.ci_low,
            p.ci_high,
            u8::from(p.flagged)
        );
    }
}
