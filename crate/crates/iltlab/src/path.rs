//! Brownian path generation on a uniform time grid, path pairs under
//! configurable start laws, and raw simple random walks.
//!
//! Increments are exact Gaussians with variance `dt`; no Euler error enters
//! through the path itself. Discretization error in downstream functionals
//! comes only from event detection and estimator smoothing.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Lane assignments inside one replicate.
pub const LANE_START_LAW: u64 = 1;
pub const LANE_PATH_B: u64 = 2;
pub const LANE_PATH_BT: u64 = 3;

/// A discretized Brownian trajectory on a uniform grid of `n_steps + 1` points.
#[derive(Clone, Debug)]
pub struct PathGrid {
    n_steps: usize,
    horizon: f64,
    start: f64,
    values: Vec<f64>,
}

impl PathGrid {
    pub fn from_values(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || horizon <= 0.0 {
            return Err(Error::InvalidConfig(
                "path needs >= 2 grid points and positive horizon".into(),
            ));
        }
        Ok(PathGrid {
            n_steps: values.len() - 1,
            horizon,
            start: values[0],
            values,
        })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Grid index of a time that must sit on the grid (within 1e-9 * dt).
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let i = (t / dt).round();
        if i < 0.0 || i > self.n_steps as f64 || (t - i * dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidArgument(format!(
                "time {t} is not grid-aligned within horizon {}",
                self.horizon
            )));
        }
        Ok(i as usize)
    }
}

/// Start law for a Brownian pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartLaw {
    Point(f64, f64),
    /// Uniform on the four corners (+-1, +-1).
    Mu,
}

impl StartLaw {
    pub fn sample(&self, stream: &mut RngStream) -> (f64, f64) {
        match self {
            StartLaw::Point(x, xt) => (*x, *xt),
            StartLaw::Mu => {
                let corner: u8 = stream.gen_range(0..4);
                match corner {
                    0 => (-1.0, -1.0),
                    1 => (1.0, 1.0),
                    2 => (-1.0, 1.0),
                    _ => (1.0, -1.0),
                }
            }
        }
    }
}

/// Two independent Brownian paths with a common grid.
#[derive(Clone, Debug)]
pub struct BrownianPair {
    pub path_b: PathGrid,
    pub path_bt: PathGrid,
    pub start_pair: (f64, f64),
}

/// Sample a Brownian path with exact Gaussian increments.
pub fn sample_path(
    n_steps: usize,
    horizon: f64,
    start: f64,
    stream: &mut RngStream,
) -> Result<PathGrid> {
    if n_steps == 0 || horizon <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "n_steps must be >= 1 and horizon > 0 (got {n_steps}, {horizon})"
        )));
    }
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut x = start;
    values.push(x);
    for _ in 0..n_steps {
        let z: f64 = stream.sample(StandardNormal);
        x += sd * z;
        values.push(x);
    }
    Ok(PathGrid {
        n_steps,
        horizon,
        start,
        values,
    })
}

/// Sample an independent pair of paths; the two paths and the start draw use
/// disjoint lanes of the replicate stream.
pub fn sample_pair(
    n_steps: usize,
    horizon: f64,
    start_law: &StartLaw,
    stream: &RngStream,
) -> Result<BrownianPair> {
    let (x, xt) = start_law.sample(&mut stream.substream(LANE_START_LAW));
    let path_b = sample_path(n_steps, horizon, x, &mut stream.substream(LANE_PATH_B))?;
    let path_bt = sample_path(n_steps, horizon, xt, &mut stream.substream(LANE_PATH_BT))?;
    Ok(BrownianPair {
        path_b,
        path_bt,
        start_pair: (x, xt),
    })
}

/// Simple random walk: `n + 1` integer positions with steps +-1.
pub fn sample_simple_walk(n: usize, start: i64, stream: &mut RngStream) -> Vec<i64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut s = start;
    out.push(s);
    for _ in 0..n {
        s += if stream.gen::<bool>() { 1 } else { -1 };
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_point_honored() {
        let mut s = RngStream::derive(1, 0);
        let p = sample_path(4, 1.0, 2.0, &mut s).unwrap();
        assert_eq!(p.value(0), 2.0);
        assert_eq!(p.values().len(), 5);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut s = RngStream::derive(1, 0);
        assert!(sample_path(0, 1.0, 0.0, &mut s).is_err());
        assert!(sample_path(8, 0.0, 0.0, &mut s).is_err());
        assert!(sample_path(8, -1.0, 0.0, &mut s).is_err());
    }

    #[test]
    fn endpoint_moments() {
        // B_1 ~ N(0,1): mean and variance of the endpoint over 1e5 replicates
        // must land in their 3-sigma bands.
        let reps = 100_000usize;
        let (mut sum, mut sq) = (0.0, 0.0);
        for r in 0..reps {
            let mut s = RngStream::derive(42, r as u64);
            let p = sample_path(1024, 1.0, 0.0, &mut s).unwrap();
            let x = p.value(1024);
            sum += x;
            sq += x * x;
        }
        let n = reps as f64;
        let mean = sum / n;
        let var = sq / n - mean * mean;
        assert!(mean.abs() < 3.0 / n.sqrt(), "mean {mean}");
        // Var of sample variance of N(0,1) is ~2/n.
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt(), "var {var}");
    }

    #[test]
    fn running_max_reflection() {
        // P{max_{s<=1} B_s <= 1} = 2*Phi(1) - 1 = 0.6827, up to MC error and
        // O(sqrt(dt)) discrete-monitoring slack (which biases the estimate up).
        let reps = 20_000usize;
        let mut count = 0usize;
        for r in 0..reps {
            let mut s = RngStream::derive(11, r as u64);
            let p = sample_path(1024, 1.0, 0.0, &mut s).unwrap();
            if p.values().iter().all(|&x| x <= 1.0) {
                count += 1;
            }
        }
        let p_hat = count as f64 / reps as f64;
        let mc = 3.0 * (0.683f64 * 0.317 / reps as f64).sqrt();
        let slack = (1.0f64 / 1024.0).sqrt();
        assert!(
            (p_hat - 0.6827).abs() < mc + slack,
            "p_hat {p_hat} outside band"
        );
    }

    #[test]
    fn mu_corners_uniform() {
        let reps = 100_000usize;
        let mut counts = [0usize; 4];
        for r in 0..reps {
            let stream = RngStream::derive(5, r as u64);
            let pair = sample_pair(2, 1.0, &StartLaw::Mu, &stream).unwrap();
            let (x, xt) = pair.start_pair;
            assert!(x.abs() == 1.0 && xt.abs() == 1.0);
            let idx = match (x > 0.0, xt > 0.0) {
                (false, false) => 0,
                (true, true) => 1,
                (false, true) => 2,
                (true, false) => 3,
            };
            counts[idx] += 1;
        }
        let band = 3.0 * (0.25f64 * 0.75 / reps as f64).sqrt();
        for c in counts {
            let f = c as f64 / reps as f64;
            assert!((f - 0.25).abs() < band, "corner freq {f}");
        }
    }

    #[test]
    fn pair_point_start() {
        let stream = RngStream::derive(9, 0);
        let pair = sample_pair(4, 1.0, &StartLaw::Point(0.0, 0.0), &stream).unwrap();
        assert_eq!(pair.path_b.value(0), 0.0);
        assert_eq!(pair.path_bt.value(0), 0.0);
    }

    #[test]
    fn pair_members_independent() {
        // Endpoint correlation over 1e4 replicates within 3 sigma of 0.
        let reps = 10_000usize;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for r in 0..reps {
            let stream = RngStream::derive(77, r as u64);
            let pair = sample_pair(256, 1.0, &StartLaw::Point(0.0, 0.0), &stream).unwrap();
            let a = pair.path_b.value(256);
            let b = pair.path_bt.value(256);
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let n = reps as f64;
        let cov = sab / n - (sa / n) * (sb / n);
        let r = cov / ((saa / n - (sa / n).powi(2)) * (sbb / n - (sb / n).powi(2))).sqrt();
        assert!(r.abs() < 3.0 / n.sqrt(), "endpoint correlation {r}");
    }

    #[test]
    fn walk_basics() {
        let mut s = RngStream::derive(2, 0);
        assert_eq!(sample_simple_walk(0, 1, &mut s), vec![1]);
        let w = sample_simple_walk(1000, 0, &mut s);
        for k in 1..w.len() {
            assert_eq!((w[k] - w[k - 1]).abs(), 1);
        }
    }

    #[test]
    fn walk_two_step_return() {
        // P{S_2 = 0} = 1/2 by enumeration of the four two-step paths.
        let reps = 100_000usize;
        let mut hits = 0usize;
        for r in 0..reps {
            let mut s = RngStream::derive(3, r as u64);
            let w = sample_simple_walk(2, 0, &mut s);
            if w[2] == 0 {
                hits += 1;
            }
        }
        let p = hits as f64 / reps as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25f64 / reps as f64).sqrt());
    }

    #[test]
    fn increments_standard_normal_ks() {
        // KS of normalized increments against N(0,1) at significance 1e-3.
        use crate::stats::normal_cdf;
        let mut s = RngStream::derive(13, 0);
        let n = 1_000_000usize;
        let p = sample_path(n, n as f64, 0.0, &mut s).unwrap(); // dt = 1
        let mut incs: Vec<f64> = p.values().windows(2).map(|w| w[1] - w[0]).collect();
        incs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let nf = n as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in incs.iter().enumerate() {
            let c = normal_cdf(x);
            d = d.max((c - i as f64 / nf).abs()).max(((i + 1) as f64 / nf - c).abs());
        }
        // K-S critical value at alpha = 1e-3: 1.949 / sqrt(n).
        assert!(d < 1.949 / nf.sqrt(), "KS statistic {d}");
    }
}
