//! Exact law of the first exit time of Brownian motion from (-1, 1).
//!
//! Two series representations are used: the alternating spectral series for
//! t >= 0.5 and the image-reflection series for t < 0.5; they agree to 1e-10
//! at the crossover. Moments come from quadrature of the survival function.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Crossover between the image and spectral representations.
pub const SERIES_CROSSOVER: f64 = 0.5;

fn survival_spectral(t: f64) -> f64 {
    let mut acc = 0.0;
    let mut k = 0u32;
    loop {
        let m = (2 * k + 1) as f64;
        let term = 4.0 / (m * PI) * (-m * m * PI * PI * t / 8.0).exp();
        if term < 1e-16 && k > 0 {
            break;
        }
        acc += if k % 2 == 0 { term } else { -term };
        k += 1;
        if k > 200 {
            break;
        }
    }
    acc
}

fn survival_image(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let rt = t.sqrt();
    let mut acc = 0.0;
    for k in -8i64..=8 {
        let upper = normal_cdf((2 * k + 1) as f64 / rt);
        let lower = normal_cdf((2 * k - 1) as f64 / rt);
        let term = upper - lower;
        acc += if k.rem_euclid(2) == 0 { term } else { -term };
    }
    acc
}

/// P{tau_1 >= t}: probability the exit from (-1,1) has not happened by t.
pub fn tau1_survival(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    let s = if t < SERIES_CROSSOVER {
        survival_image(t)
    } else {
        survival_spectral(t)
    };
    Ok(s.clamp(0.0, 1.0))
}

/// CDF of tau_1.
pub fn tau1_cdf(t: f64) -> Result<f64> {
    Ok(1.0 - tau1_survival(t)?)
}

/// Inverse CDF by bisection to absolute tolerance 1e-10.
pub fn tau1_quantile(u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must be in [0,1), got {u}"
        )));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    while tau1_cdf(hi)? < u {
        hi *= 2.0;
        if hi > 512.0 {
            break;
        }
    }
    let mut lo = 0.0f64;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if tau1_cdf(mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// (E tau_1, Var tau_1) by quadrature of the survival function:
/// E tau = int S, E tau^2 = 2 int t*S(t) dt. The tail beyond t = 60 is below
/// 1e-30 and is dropped.
pub fn tau1_moments() -> (f64, f64) {
    static MOMENTS: OnceLock<(f64, f64)> = OnceLock::new();
    *MOMENTS.get_or_init(|| {
        let s = |t: f64| tau1_survival(t).unwrap();
        let mean = simpson(s, 0.0, 60.0, 30_000);
        let m2 = 2.0 * simpson(|t| t * s(t), 0.0, 60.0, 30_000);
        (mean, m2 - mean * mean)
    })
}
