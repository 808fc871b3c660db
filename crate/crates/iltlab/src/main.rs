//! Command-line runner: configuration, dispatch, parallel execution,
//! persistence, and reporting.
//!
//! Exit codes: 0 success, 2 configuration error, 3 experiment-level
//! failure (calibration failure, degenerate configuration, failed
//! validation), 4 I/O error.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use iltlab::config::{ExperimentConfig, ExperimentKind};
use iltlab::error::{Error, Result};
use iltlab::lab::{self, DecayMode, TauTailMode};
use iltlab::oracle;
use iltlab::report::{Payload, ReportFormat, ResultRecord};

#[derive(Parser)]
#[command(
    name = "iltlab",
    version,
    about = "Simulation and exact-computation laboratory for Brownian intersection local times",
    after_help = "Defaults: replicates 200000, n_steps 4096, horizon 1, seed 0x11b71ab5, \
                  eps grid [0.02, 0.1] log-spaced (12 points), estimator binned with h = 4*sqrt(dt). \
                  A JSON config file (--config) supplies the same fields; flags override it."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; replicate i draws from stream (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo replicates.
    #[arg(long)]
    replicates: Option<usize>,
    /// Grid steps per path.
    #[arg(long)]
    steps: Option<usize>,
    /// Time horizon of each path.
    #[arg(long)]
    horizon: Option<f64>,
    /// Worker threads (env ILTLAB_WORKERS also honored; flag wins).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for the JSON record and flat CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format printed to stdout: table or flat.
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Small-deviation curve P{ILT <= eps} over a log-spaced eps grid.
    SmallDev {
        #[command(flatten)]
        common: CommonOpts,
        /// Spatial dimension: 1 (default) or 2 (exploratory).
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Small-deviation curve plus the log-log exponent fit.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Lower edge of the fit window (defaults to the eps grid minimum).
        #[arg(long)]
        window_min: Option<f64>,
        /// Upper edge of the fit window (defaults to the eps grid maximum).
        #[arg(long)]
        window_max: Option<f64>,
    },
    /// Two-sample KS test of the t^{3/2} scaling law.
    Scaling {
        #[command(flatten)]
        common: CommonOpts,
        /// Scaling horizon t.
        #[arg(long)]
        t: Option<f64>,
        /// Scaling exponent; 1.5 is the law, others are power controls.
        #[arg(long, default_value_t = 1.5)]
        exponent: f64,
    },
    /// Negative-moment diagnostic for E[ILT^{-p}] over the p grid.
    NegMoment {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decay of P_mu{Q_n = 0} over the n grid with a slope fit.
    NoIntersect {
        #[command(flatten)]
        common: CommonOpts,
        /// Monte Carlo instead of the exact DP oracle.
        #[arg(long)]
        mc: bool,
    },
    /// Exact hitting-time tail P_mu{T_z >= n} with a slope fit.
    HittingTail {
        #[command(flatten)]
        common: CommonOpts,
        /// Target site z in [-2, 2].
        #[arg(long, default_value_t = 0)]
        z: i64,
    },
    /// Exponential tail rate of tau_1 (series, mc-exact, or mc-grid mode).
    TauTail {
        #[command(flatten)]
        common: CommonOpts,
        /// Mode: series, mc-exact, or mc-grid.
        #[arg(long, default_value = "series")]
        mode: String,
        /// Grid resolution (1/dt) for mc-grid mode.
        #[arg(long, default_value_t = 16384)]
        dt_inverse: usize,
    },
    /// Calibrate the threshold a with P{xi_{1,1} <= a} < 1/20.
    CalibrateA {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Exploratory upper-tail curve and LDP-direction transform.
    UpperTail {
        #[command(flatten)]
        common: CommonOpts,
        /// Probe the self-intersection variant instead of the mutual one.
        #[arg(long = "self")]
        self_variant: bool,
    },
    /// Query an exact oracle, e.g. `iltlab oracle tau1-survival 2`.
    Oracle {
        #[command(flatten)]
        common: CommonOpts,
        /// One of: tau1-survival, tau1-cdf, tau1-quantile, tau1-mean,
        /// tau1-var, expected-mutual-ilt, expected-self-ilt,
        /// expected-local-time, reflection, no-intersection,
        /// hitting-survival, f-event.
        query: String,
        /// Numeric arguments of the query.
        args: Vec<f64>,
    },
    /// Run the bundled invariant suite and report pass/fail per invariant.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
    },
}

impl Command {
    fn common(&self) -> &CommonOpts {
        match self {
            Command::SmallDev { common, .. }
            | Command::Fit { common, .. }
            | Command::Scaling { common, .. }
            | Command::NegMoment { common }
            | Command::NoIntersect { common, .. }
            | Command::HittingTail { common, .. }
            | Command::TauTail { common, .. }
            | Command::CalibrateA { common }
            | Command::UpperTail { common, .. }
            | Command::Oracle { common, .. }
            | Command::Validate { common } => common,
        }
    }

    fn kind(&self) -> ExperimentKind {
        match self {
            Command::SmallDev { .. } => ExperimentKind::SmallDev,
            Command::Fit { .. } => ExperimentKind::Fit,
            Command::Scaling { .. } => ExperimentKind::Scaling,
            Command::NegMoment { .. } => ExperimentKind::NegMoment,
            Command::NoIntersect { .. } => ExperimentKind::NoIntersect,
            Command::HittingTail { .. } => ExperimentKind::HittingTail,
            Command::TauTail { .. } => ExperimentKind::TauTail,
            Command::CalibrateA { .. } => ExperimentKind::CalibrateA,
            Command::UpperTail { .. } => ExperimentKind::UpperTail,
            Command::Oracle { .. } => ExperimentKind::Oracle,
            Command::Validate { .. } => ExperimentKind::Validate,
        }
    }
}

fn load_config(command: &Command) -> Result<ExperimentConfig> {
    let common = command.common();
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(replicates) = common.replicates {
        cfg.replicates = replicates;
    }
    if let Some(steps) = common.steps {
        cfg.n_steps = steps;
    }
    if let Some(horizon) = common.horizon {
        cfg.horizon = horizon;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    cfg.experiment = Some(command.kind());
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_workers(cfg: &ExperimentConfig) -> Option<usize> {
    cfg.workers.or_else(|| {
        std::env::var("ILTLAB_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn dispatch(command: &Command, cfg: &ExperimentConfig) -> Result<Payload> {
    match command {
        Command::SmallDev { dim, .. } => {
            let eps = cfg.epsilon_grid();
            let curve = match dim {
                1 => lab::small_deviation_curve(&eps, cfg.replicates, cfg)?,
                2 => lab::small_deviation_curve_2d(&eps, cfg.replicates, cfg)?,
                d => {
                    return Err(Error::InvalidArgument(format!(
                        "dim must be 1 or 2, got {d}"
                    )))
                }
            };
            Ok(Payload::Curve { curve })
        }
        Command::Fit {
            window_min,
            window_max,
            ..
        } => {
            let eps = cfg.epsilon_grid();
            let curve = lab::small_deviation_curve(&eps, cfg.replicates, cfg)?;
            let window = (
                window_min.unwrap_or(cfg.eps_min),
                window_max.unwrap_or(cfg.eps_max),
            );
            let fit = lab::fit_exponent(&curve, window)?;
            Ok(Payload::CurveWithFit { curve, fit })
        }
        Command::Scaling { t, exponent, .. } => {
            let t = t.unwrap_or(cfg.scaling_t);
            let (ks_statistic, p_value) =
                lab::scaling_law_test(t, cfg.replicates, cfg, *exponent)?;
            Ok(Payload::Scaling {
                t,
                exponent: *exponent,
                ks_statistic,
                p_value,
            })
        }
        Command::NegMoment { .. } => Ok(Payload::NegMoment {
            reports: lab::negative_moment_experiment(cfg)?,
        }),
        Command::NoIntersect { mc, .. } => {
            let mode = if *mc {
                DecayMode::Mc {
                    replicates: cfg.replicates,
                }
            } else {
                DecayMode::Exact
            };
            let (curve, fit) = lab::no_intersection_decay(&cfg.n_grid, mode, cfg.master_seed)?;
            Ok(Payload::CurveWithFit { curve, fit })
        }
        Command::HittingTail { z, .. } => {
            let (curve, fit) = lab::hitting_tail_decay(*z, &cfg.n_grid)?;
            Ok(Payload::CurveWithFit { curve, fit })
        }
        Command::TauTail {
            mode, dt_inverse, ..
        } => {
            let mode = match mode.as_str() {
                "series" => TauTailMode::Series,
                "mc-exact" => TauTailMode::McExact {
                    replicates: cfg.replicates,
                },
                "mc-grid" => TauTailMode::McGrid {
                    replicates: cfg.replicates,
                    dt_inverse: *dt_inverse,
                },
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown tau-tail mode '{other}' (series, mc-exact, mc-grid)"
                    )))
                }
            };
            let fit = lab::tau_tail_slope(&cfg.t_grid, mode, cfg.master_seed)?;
            Ok(Payload::TauTail { mode, fit })
        }
        Command::CalibrateA { .. } => {
            let calibration = lab::calibrate_a(&cfg.a_grid, cfg.replicates, cfg)?;
            Ok(Payload::Calibration { calibration })
        }
        Command::UpperTail { self_variant, .. } => {
            let points = lab::upper_tail_probe(&cfg.u_grid, cfg.replicates, cfg, *self_variant)?;
            Ok(Payload::UpperTail {
                exploratory: true,
                self_variant: *self_variant,
                points,
            })
        }
        Command::Oracle { query, args, .. } => {
            let value = run_oracle_query(query, args)?;
            Ok(Payload::Scalar {
                name: query.clone(),
                value,
            })
        }
        Command::Validate { .. } => Ok(Payload::Validation {
            checks: lab::validation_suite(cfg.master_seed),
        }),
    }
}

fn arg(args: &[f64], i: usize, query: &str) -> Result<f64> {
    args.get(i).copied().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "oracle query '{query}' needs at least {} numeric argument(s)",
            i + 1
        ))
    })
}

fn run_oracle_query(query: &str, args: &[f64]) -> Result<f64> {
    match query {
        "tau1-survival" => oracle::tau1_survival(arg(args, 0, query)?),
        "tau1-cdf" => oracle::tau1_cdf(arg(args, 0, query)?),
        "tau1-quantile" => oracle::tau1_quantile(arg(args, 0, query)?),
        "tau1-mean" => Ok(oracle::tau1_moments().0),
        "tau1-var" => Ok(oracle::tau1_moments().1),
        "expected-mutual-ilt" => oracle::expected_mutual_ilt(arg(args, 0, query)?),
        "expected-self-ilt" => Ok(oracle::expected_self_ilt(arg(args, 0, query)?)),
        "expected-local-time" => Ok(oracle::expected_local_time_origin(arg(args, 0, query)?)),
        "reflection" => oracle::reflection_probability(arg(args, 0, query)?, arg(args, 1, query)?),
        "no-intersection" => oracle::no_intersection_exact(arg(args, 0, query)? as usize),
        "hitting-survival" => oracle::hitting_survival_mu(
            arg(args, 0, query)? as i64,
            arg(args, 1, query)? as usize,
        ),
        "f-event" => oracle::f_event_probability_bruteforce(
            arg(args, 0, query)? as usize,
            arg(args, 1, query)? as usize,
        ),
        other => Err(Error::InvalidArgument(format!(
            "unknown oracle query '{other}'"
        ))),
    }
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = load_config(&cli.command)?;
    let format: ReportFormat = cli.command.common().format.parse()?;
    let started_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let clock = Instant::now();

    let payload = match resolve_workers(&cfg) {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
            pool.install(|| dispatch(&cli.command, &cfg))?
        }
        None => dispatch(&cli.command, &cfg)?,
    };

    let record = ResultRecord::new(
        cli.command.kind().name(),
        cfg.clone(),
        started_unix_ms,
        clock.elapsed().as_millis() as u64,
        payload,
    );
    if let Some(dir) = &cfg.out {
        let (json_path, csv_path) = record.save(dir)?;
        eprintln!("wrote {} and {}", json_path.display(), csv_path.display());
    }
    print!("{}", record.render(format));

    // Experiment-level failures surface after persistence so the evidence
    // (curve, pass/fail lines) is never lost.
    match &record.payload {
        Payload::Calibration { calibration } => {
            calibration.require_qualified()?;
        }
        Payload::Validation { checks } => {
            if checks.iter().any(|(_, ok)| !ok) {
                return Ok(3);
            }
        }
        _ => {}
    }
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
