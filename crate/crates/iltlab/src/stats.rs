//! Shared statistical machinery: Wilson intervals, two-sample KS, and
//! weighted least squares for log-log slope fits.

use libm::erf;

use crate::error::{Error, Result};

/// z for the 99% two-sided normal interval.
pub const Z99: f64 = 2.575829303548901;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Wilson score interval for `count` successes out of `n`.
pub fn wilson_interval(count: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a: Vec<f64> = xs.to_vec();
    let mut b: Vec<f64> = ys.to_vec();
    a.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic Kolmogorov distribution tail: Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        if term < 1e-16 {
            break;
        }
        acc += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// Approximate p-value of the two-sample KS statistic.
pub fn ks_two_sample_p_value(d: f64, n: usize, m: usize) -> f64 {
    let en = (n as f64 * m as f64 / (n + m) as f64).sqrt();
    // Stephens' small-sample correction.
    kolmogorov_tail((en + 0.12 + 0.11 / en) * d)
}

/// Weighted least-squares line fit with stderr of the slope
/// (weights interpreted as inverse variances).
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn weighted_least_squares(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::InvalidArgument("mismatched fit input lengths".into()));
    }
    if x.len() < 2 {
        return Err(Error::FitWindow(format!(
            "need >= 2 points to fit, got {}",
            x.len()
        )));
    }
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::InvalidArgument("nonpositive total weight".into()));
    }
    let xbar = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - xbar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (y[i] - ybar);
    }
    if !(sxx > 0.0) {
        return Err(Error::FitWindow("degenerate abscissa in fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    // Scale the nominal stderr by the residual chi-square per dof (floored
    // at 1) so model misfit widens the slope uncertainty instead of being
    // silently absorbed.
    let chi2: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - (intercept + slope * xi);
            wi * r * r
        })
        .sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let scale = (chi2 / dof).max(1.0);
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (scale / sxx).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-12);
    }

    #[test]
    fn wilson_brackets_p_hat() {
        let (lo, hi) = wilson_interval(30, 100, Z99);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 50, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.3);
    }

    #[test]
    fn ks_identical_samples_zero() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_one() {
        let xs = [1.0, 2.0];
        let ys = [5.0, 6.0];
        assert_eq!(ks_two_sample(&xs, &ys), 1.0);
    }

    #[test]
    fn wls_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let w = vec![1.0; 10];
        let fit = weighted_least_squares(&x, &y, &w).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
    }

    #[test]
    fn wls_rejects_degenerate() {
        assert!(weighted_least_squares(&[1.0], &[1.0], &[1.0]).is_err());
        assert!(weighted_least_squares(&[1.0, 1.0], &[1.0, 2.0], &[1.0, 1.0]).is_err());
    }
}
