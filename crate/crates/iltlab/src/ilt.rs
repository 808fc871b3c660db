//! Numerical estimators for local times and intersection local times of
//! discretized paths.
//!
//! The binned estimator accumulates linear-binned occupation histograms with
//! a shared bin origin at 0 and forms `(1/h) * sum_bins occ_B * occ_Bt`. The
//! mollified estimator replaces the Dirac delta by a compact Epanechnikov
//! kernel and sums `dt^2 * K_eta(B_j - Bt_k)` over sample pairs via sorting
//! and a sliding window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::PathGrid;

/// Estimator choice and bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimatorConfig {
    Binned { h: f64 },
    Mollified { eta: f64 },
}

impl EstimatorConfig {
    /// Default bandwidth h = 4*sqrt(dt): matches the path's per-step
    /// fluctuation scale.
    pub fn default_binned(dt: f64) -> Self {
        EstimatorConfig::Binned { h: 4.0 * dt.sqrt() }
    }

    pub fn bandwidth(&self) -> f64 {
        match self {
            EstimatorConfig::Binned { h } => *h,
            EstimatorConfig::Mollified { eta } => *eta,
        }
    }

    /// Scale below which small-value probabilities are dominated by
    /// estimator bias (linear binning is second order, so ~bandwidth^2).
    pub fn bias_scale(&self) -> f64 {
        let b = self.bandwidth();
        b * b
    }
}

/// Linear-binned occupation times over a grid-aligned time window.
#[derive(Clone, Debug)]
pub struct OccupationHistogram {
    h: f64,
    /// Bin index of `weights[0]`; bin m has center at m*h (origin fixed at 0).
    first_bin: i64,
    weights: Vec<f64>,
    window: (f64, f64),
}

impl OccupationHistogram {
    pub fn bin_width(&self) -> f64 {
        self.h
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn window_length(&self) -> f64 {
        self.window.1 - self.window.0
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weight_at(&self, bin: i64) -> f64 {
        let i = bin - self.first_bin;
        if i < 0 || i as usize >= self.weights.len() {
            0.0
        } else {
            self.weights[i as usize]
        }
    }

    pub fn bins(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.first_bin + i as i64, w))
    }

    /// `(1/h) * sum_bins self * other`; errors if the bin geometry differs.
    pub fn cross_product(&self, other: &OccupationHistogram) -> Result<f64> {
        if self.h != other.h {
            return Err(Error::InvalidConfig(format!(
                "mismatched bin geometry: h = {} vs {}",
                self.h, other.h
            )));
        }
        let lo = self.first_bin.max(other.first_bin);
        let hi = (self.first_bin + self.weights.len() as i64)
            .min(other.first_bin + other.weights.len() as i64);
        let mut acc = 0.0;
        let mut m = lo;
        while m < hi {
            acc += self.weight_at(m) * other.weight_at(m);
            m += 1;
        }
        Ok(acc / self.h)
    }
}

/// An intersection-local-time estimate with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IltEstimate {
    pub value: f64,
    pub config: EstimatorConfig,
    pub n_steps: usize,
    pub windows: ((f64, f64), (f64, f64)),
}

/// Occupation histogram of a path over `window = [t0, t1]` (grid-aligned).
/// Each grid interval deposits its full `dt`, split between the two nearest
/// bin centers, so total mass equals the window length.
pub fn occupation(path: &PathGrid, h: f64, window: (f64, f64)) -> Result<OccupationHistogram> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    let i0 = path.grid_index(window.0)?;
    let i1 = path.grid_index(window.1)?;
    if i1 < i0 {
        return Err(Error::InvalidArgument("window end before start".into()));
    }
    let dt = path.dt();
    let vals = &path.values()[i0..i1];
    let (mut lo, mut hi) = (0i64, 1i64);
    for &x in vals {
        let u = (x / h).floor() as i64;
        lo = lo.min(u);
        hi = hi.max(u + 1);
    }
    let mut weights = vec![0.0f64; (hi - lo + 1) as usize];
    for &x in vals {
        let u = x / h;
        let f = u.floor();
        let frac = u - f;
        let i = (f as i64 - lo) as usize;
        weights[i] += (1.0 - frac) * dt;
        weights[i + 1] += frac * dt;
    }
    Ok(OccupationHistogram {
        h,
        first_bin: lo,
        weights,
        window: (i0 as f64 * dt, i1 as f64 * dt),
    })
}

/// Binned mutual ILT over the rectangle `window_b x window_bt`.
pub fn mutual_ilt_binned(
    path_b: &PathGrid,
    path_bt: &PathGrid,
    h: f64,
    window_b: (f64, f64),
    window_bt: (f64, f64),
) -> Result<IltEstimate> {
    let occ_b = occupation(path_b, h, window_b)?;
    let occ_bt = occupation(path_bt, h, window_bt)?;
    Ok(IltEstimate {
        value: occ_b.cross_product(&occ_bt)?,
        config: EstimatorConfig::Binned { h },
        n_steps: path_b.n_steps(),
        windows: (occ_b.window(), occ_bt.window()),
    })
}

/// Binned self ILT: `(1/h) * sum occ(bin)^2` over the window.
pub fn self_ilt(path: &PathGrid, h: f64, window: (f64, f64)) -> Result<IltEstimate> {
    let occ = occupation(path, h, window)?;
    Ok(IltEstimate {
        value: occ.cross_product(&occ)?,
        config: EstimatorConfig::Binned { h },
        n_steps: path.n_steps(),
        windows: (occ.window(), occ.window()),
    })
}

fn epanechnikov(x: f64, eta: f64) -> f64 {
    let u = x / eta;
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.75 * (1.0 - u * u) / eta
    }
}

/// Mollified mutual ILT: `dt^2 * sum_{j,k} K_eta(B_j - Bt_k)` over the
/// window sample points, computed by sorting one side and scanning a
/// sliding window of width `2*eta`.
pub fn mutual_ilt_mollified(
    path_b: &PathGrid,
    path_bt: &PathGrid,
    eta: f64,
    window_b: (f64, f64),
    window_bt: (f64, f64),
) -> Result<IltEstimate> {
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::InvalidBandwidth(eta));
    }
    let (i0, i1) = (path_b.grid_index(window_b.0)?, path_b.grid_index(window_b.1)?);
    let (j0, j1) = (
        path_bt.grid_index(window_bt.0)?,
        path_bt.grid_index(window_bt.1)?,
    );
    let dt = path_b.dt();
    let xs = &path_b.values()[i0..i1];
    let mut ys: Vec<f64> = path_bt.values()[j0..j1].to_vec();
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for &x in xs {
        let lo = ys.partition_point(|&y| y <= x - eta);
        for &y in &ys[lo..] {
            if y >= x + eta {
                break;
            }
            acc += epanechnikov(x - y, eta);
        }
    }
    Ok(IltEstimate {
        value: acc * dt * dt,
        config: EstimatorConfig::Mollified { eta },
        n_steps: path_b.n_steps(),
        windows: (
            (i0 as f64 * dt, i1 as f64 * dt),
            (j0 as f64 * dt, j1 as f64 * dt),
        ),
    })
}

/// Mutual ILT with the configured estimator.
pub fn mutual_ilt(
    path_b: &PathGrid,
    path_bt: &PathGrid,
    config: &EstimatorConfig,
    window_b: (f64, f64),
    window_bt: (f64, f64),
) -> Result<IltEstimate> {
    match config {
        EstimatorConfig::Binned { h } => {
            mutual_ilt_binned(path_b, path_bt, *h, window_b, window_bt)
        }
        EstimatorConfig::Mollified { eta } => {
            mutual_ilt_mollified(path_b, path_bt, *eta, window_b, window_bt)
        }
    }
}
