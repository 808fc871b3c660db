//! Closed-form and quadrature oracles for Brownian functionals: the
//! reflection identity and expected (self/mutual) intersection local times.

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// P{x + B_s > 0 for all s <= t} = P{|B_t| <= x} = 2*Phi(x/sqrt(t)) - 1.
pub fn reflection_probability(x: f64, t: f64) -> Result<f64> {
    if !(x > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reflection probability needs x > 0 and t > 0, got x={x}, t={t}"
        )));
    }
    Ok(2.0 * normal_cdf(x / t.sqrt()) - 1.0)
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// E int_0^t int_0^t delta_0(B_s - Bt_r) ds dr, using
/// E delta_0(B_s - Bt_r) = (2 pi (s+r))^{-1/2}. The inner integral is done
/// analytically and the outer by Simpson after the substitution s = u^2
/// (which removes the square-root edge), to relative error <= 1e-8.
pub fn expected_mutual_ilt(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let g = |u: f64| {
        let s = u * u;
        ((s + t).sqrt() - u) * 2.0 * u
    };
    let outer = simpson(g, 0.0, t.sqrt(), 4000);
    Ok(2.0 * outer / (2.0 * std::f64::consts::PI).sqrt())
}

/// Closed form for the same quantity: (8/3)(sqrt(2)-1) t^{3/2} / sqrt(2 pi).
pub fn expected_mutual_ilt_closed_form(t: f64) -> f64 {
    (8.0 / 3.0) * (2.0f64.sqrt() - 1.0) * t.powf(1.5) / (2.0 * std::f64::consts::PI).sqrt()
}

/// E int_0^t int_0^t delta_0(B_s - B_r) ds dr = (8/3) t^{3/2} / sqrt(2 pi).
pub fn expected_self_ilt(t: f64) -> f64 {
    (8.0 / 3.0) * t.powf(1.5) / (2.0 * std::f64::consts::PI).sqrt()
}

/// E L(t, 0) = sqrt(2 t / pi).
pub fn expected_local_time_origin(t: f64) -> f64 {
    (2.0 * t / std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_reference_value() {
        let p = reflection_probability(1.0, 1.0).unwrap();
        assert!((p - 0.6826894921370859).abs() < 1e-12);
    }

    #[test]
    fn reflection_limits_and_scaling() {
        assert!(reflection_probability(50.0, 1.0).unwrap() > 1.0 - 1e-12);
        // Brownian scaling: (x=1, t=4) equals (x=1/2, t=1).
        let a = reflection_probability(1.0, 4.0).unwrap();
        let b = reflection_probability(0.5, 1.0).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(reflection_probability(0.0, 1.0).is_err());
        assert!(reflection_probability(1.0, 0.0).is_err());
    }

    #[test]
    fn expected_ilt_matches_closed_form() {
        for &t in &[0.25, 1.0, 4.0] {
            let q = expected_mutual_ilt(t).unwrap();
            let c = expected_mutual_ilt_closed_form(t);
            assert!((q - c).abs() < 1e-8 * c, "t={t}: {q} vs {c}");
        }
        // t = 1 reference value.
        assert!((expected_mutual_ilt(1.0).unwrap() - 0.44065).abs() < 1e-4);
    }

    #[test]
    fn expected_ilt_scaling() {
        // t^{3/2} scaling: the t = 4 value is 8x the t = 1 value.
        let a = expected_mutual_ilt(4.0).unwrap();
        let b = expected_mutual_ilt(1.0).unwrap();
        assert!((a - 8.0 * b).abs() < 1e-7 * a);
        // t -> 0+ limit.
        assert!(expected_mutual_ilt(1e-8).unwrap() < 1e-10);
        assert!(expected_mutual_ilt(0.0).is_err());
    }

    #[test]
    fn self_ilt_reference() {
        assert!((expected_self_ilt(1.0) - 1.0638465).abs() < 1e-5);
        assert!((expected_local_time_origin(1.0) - 0.7978845608).abs() < 1e-9);
    }
}
