//! Exit-time discretization: stopping times tau_k at unit displacements, the
//! embedded simple random walk S_k, the discrete intersection objects
//! (Q_n, sigma, early intersections, F_{rho,l}, T_z), and the block
//! functionals xi_{j,k} and H_n.
//!
//! Grid mode detects exits at the first grid time where the path has moved
//! `level` away from the current lattice anchor and snaps S_k to the lattice
//! (never to the overshot value), so every discrete object sees exact
//! integer-lattice equality. Exact mode samples tau increments from the
//! Feller exit-time law by inverse transform and step signs independently.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ilt::{mutual_ilt, EstimatorConfig};
use crate::oracle::{tau1_moments, tau1_quantile};
use crate::path::{BrownianPair, PathGrid};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkMode {
    Grid,
    Exact,
}

/// An embedded walk: exit times and lattice positions.
#[derive(Clone, Debug)]
pub struct EmbeddedWalk {
    mode: WalkMode,
    level: f64,
    start: f64,
    tau: Vec<f64>,
    tau_idx: Option<Vec<usize>>,
    /// Lattice offsets from the start; offsets[0] = 0, unit steps.
    offsets: Vec<i64>,
}

impl EmbeddedWalk {
    pub fn mode(&self) -> WalkMode {
        self.mode
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Number of completed steps (k ranges over 0..=len()).
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.tau[k]
    }

    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn tau_index(&self, k: usize) -> Option<usize> {
        self.tau_idx.as_ref().map(|v| v[k])
    }

    /// S_k = start + offsets[k] * level. Exact for integer-valued starts.
    pub fn position(&self, k: usize) -> f64 {
        self.start + self.offsets[k] as f64 * self.level
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }
}

/// Extract the exit-time walk from a grid path. An exit is the first grid
/// time at which the path has moved at least `level` from the current
/// anchor; the walk then steps to the adjacent lattice point on the side of
/// the overshoot.
pub fn extract_walk(path: &PathGrid, level: f64) -> Result<EmbeddedWalk> {
    if !(level > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "level must be positive, got {level}"
        )));
    }
    if path.values().len() < 2 {
        return Err(Error::InsufficientData("path has < 2 grid points".into()));
    }
    let dt = path.dt();
    let start = path.start();
    let mut offsets = vec![0i64];
    let mut tau = vec![0.0f64];
    let mut tau_idx = vec![0usize];
    let mut anchor = start;
    let mut offset = 0i64;
    for (i, &x) in path.values().iter().enumerate().skip(1) {
        if (x - anchor).abs() >= level {
            offset += if x > anchor { 1 } else { -1 };
            anchor = start + offset as f64 * level;
            offsets.push(offset);
            tau.push(i as f64 * dt);
            tau_idx.push(i);
        }
    }
    Ok(EmbeddedWalk {
        mode: WalkMode::Grid,
        level,
        start,
        tau,
        tau_idx: Some(tau_idx),
        offsets,
    })
}

/// Exact-mode walk: tau increments sampled i.i.d. from the Feller exit-time
/// law by inverse transform (bisection on the oracle CDF), step signs i.i.d.
/// +-1 independent of the durations.
pub fn sample_walk_exact(n: usize, start: f64, stream: &mut RngStream) -> EmbeddedWalk {
    let mut tau = Vec::with_capacity(n + 1);
    let mut offsets = Vec::with_capacity(n + 1);
    tau.push(0.0);
    offsets.push(0i64);
    let mut t = 0.0;
    let mut offset = 0i64;
    for _ in 0..n {
        let u: f64 = stream.gen();
        t += tau1_quantile(u).expect("u in [0,1)");
        offset += if stream.gen::<bool>() { 1 } else { -1 };
        tau.push(t);
        offsets.push(offset);
    }
    EmbeddedWalk {
        mode: WalkMode::Exact,
        level: 1.0,
        start,
        tau,
        tau_idx: None,
        offsets,
    }
}

/// Discrete intersection data of a walk pair up to step n.
#[derive(Clone, Debug)]
pub struct IntersectionRecord {
    pub n: usize,
    pub q_n: u64,
    /// First level at which an intersection appears, min{m >= 1 : Q_m > 0}.
    pub sigma: Option<usize>,
    /// All (j, k) in [1,n]^2 with S_j = St_k.
    pub lambda: Vec<(usize, usize)>,
    /// Minimal elements of lambda in the product partial order.
    pub early: Vec<(usize, usize)>,
}

/// Intersections of two walks over the index square [1, n]^2.
pub fn intersections(
    walk: &EmbeddedWalk,
    walk_tilde: &EmbeddedWalk,
    n: usize,
) -> Result<IntersectionRecord> {
    if walk.len() < n || walk_tilde.len() < n {
        return Err(Error::InsufficientData(format!(
            "walks have {} and {} steps, need {n}",
            walk.len(),
            walk_tilde.len()
        )));
    }
    let mut lambda = Vec::new();
    for j in 1..=n {
        let sj = walk.position(j);
        for k in 1..=n {
            if sj == walk_tilde.position(k) {
                lambda.push((j, k));
            }
        }
    }
    let sigma = lambda.iter().map(|&(j, k)| j.max(k)).min();
    let early: Vec<(usize, usize)> = lambda
        .iter()
        .copied()
        .filter(|&(j, k)| {
            !lambda
                .iter()
                .any(|&(j1, k1)| (j1, k1) != (j, k) && j1 <= j && k1 <= k)
        })
        .collect();
    Ok(IntersectionRecord {
        n,
        q_n: lambda.len() as u64,
        sigma,
        lambda,
        early,
    })
}

/// The event F_{rho,l}: S_rho = St_l and no other intersection inside the
/// rectangle [1,rho] x [1,l].
pub fn event_f(
    walk: &EmbeddedWalk,
    walk_tilde: &EmbeddedWalk,
    rho: usize,
    l: usize,
) -> Result<bool> {
    if rho == 0 || rho > l {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= rho <= l, got rho={rho}, l={l}"
        )));
    }
    if walk.len() < rho || walk_tilde.len() < l {
        return Err(Error::InsufficientData(format!(
            "walks have {} and {} steps, need {rho} and {l}",
            walk.len(),
            walk_tilde.len()
        )));
    }
    if walk.position(rho) != walk_tilde.position(l) {
        return Ok(false);
    }
    for j in 1..=rho {
        let sj = walk.position(j);
        for k in 1..=l {
            if (j, k) != (rho, l) && sj == walk_tilde.position(k) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// T_z = min{1 <= m <= n_max : S_m = z}, or None.
pub fn hitting_time(walk: &EmbeddedWalk, z: i64, n_max: usize) -> Option<usize> {
    let target = z as f64;
    (1..=n_max.min(walk.len())).find(|&m| walk.position(m) == target)
}

/// One block functional xi_{j,k}: the ILT estimate restricted to the time
/// rectangle [tau_j, tau_{j+1}] x [taut_k, taut_{k+1}].
#[derive(Clone, Debug)]
pub struct BlockIlt {
    pub j: usize,
    pub k: usize,
    pub value: f64,
    pub config: EstimatorConfig,
}

fn block_window(walk: &EmbeddedWalk, j: usize, dt: f64) -> Result<(f64, f64)> {
    let idx = walk
        .tau_idx
        .as_ref()
        .ok_or_else(|| Error::UnsupportedMode("block ILT needs grid-mode walks".into()))?;
    if j + 1 >= idx.len() {
        return Err(Error::InsufficientData(format!(
            "block {j} needs tau_{} but walk has {} exits",
            j + 1,
            idx.len() - 1
        )));
    }
    Ok((idx[j] as f64 * dt, idx[j + 1] as f64 * dt))
}

pub fn block_ilt(
    pair: &BrownianPair,
    walk: &EmbeddedWalk,
    walk_tilde: &EmbeddedWalk,
    j: usize,
    k: usize,
    config: &EstimatorConfig,
) -> Result<BlockIlt> {
    let wb = block_window(walk, j, pair.path_b.dt())?;
    let wbt = block_window(walk_tilde, k, pair.path_bt.dt())?;
    let est = mutual_ilt(&pair.path_b, &pair.path_bt, config, wb, wbt)?;
    Ok(BlockIlt {
        j,
        k,
        value: est.value,
        config: *config,
    })
}

/// H_n = sum_{j,k=1}^n 1{S_j = St_k} xi_{j,k}.
#[derive(Clone, Debug)]
pub struct HStatistic {
    pub n: usize,
    pub value: f64,
}

pub fn h_statistic(
    pair: &BrownianPair,
    walk: &EmbeddedWalk,
    walk_tilde: &EmbeddedWalk,
    n: usize,
    config: &EstimatorConfig,
) -> Result<HStatistic> {
    if walk.len() < n + 1 || walk_tilde.len() < n + 1 {
        return Err(Error::InsufficientData(format!(
            "H_{n} needs n+1 = {} completed blocks on each walk",
            n + 1
        )));
    }
    let mut value = 0.0;
    for j in 1..=n {
        let sj = walk.position(j);
        for k in 1..=n {
            if sj == walk_tilde.position(k) {
                value += block_ilt(pair, walk, walk_tilde, j, k, config)?.value;
            }
        }
    }
    Ok(HStatistic { n, value })
}

/// Empirical P{|tau_n - n E tau_1| >= n delta} from exact-mode sampling,
/// paired with the Chebyshev bound Var(tau_1) / (n delta^2).
pub fn tau_concentration_check(
    n: usize,
    delta: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 || !(delta > 0.0) {
        return Err(Error::InvalidArgument(
            "need n >= 1 and delta > 0".into(),
        ));
    }
    let (mean, var) = tau1_moments();
    let count: u64 = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = RngStream::derive_lane(master_seed, r, 17);
            let mut tau_n = 0.0;
            for _ in 0..n {
                let u: f64 = stream.gen();
                tau_n += tau1_quantile(u).expect("u in [0,1)");
            }
            u64::from((tau_n - n as f64 * mean).abs() >= n as f64 * delta)
        })
        .sum();
    Ok((
        count as f64 / replicates as f64,
        var / (n as f64 * delta * delta),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{sample_pair, sample_path, StartLaw};
    use crate::stats::{ks_two_sample, ks_two_sample_p_value};

    fn synthetic_path(values: Vec<f64>) -> PathGrid {
        let n = values.len() - 1;
        PathGrid::from_values(n as f64 / 8.0, values).unwrap()
    }

    #[test]
    fn constant_path_never_exits() {
        let p = synthetic_path(vec![0.0; 9]);
        let w = extract_walk(&p, 1.0).unwrap();
        assert_eq!(w.len(), 0);
        assert_eq!(w.taus(), &[0.0]);
        assert_eq!(w.position(0), 0.0);
    }

    #[test]
    fn forced_crossing_detected() {
        // Path ramps to 1.2 at grid step 5: tau_1 = 5 dt, S_1 = 1.
        let mut vals = vec![0.0; 9];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = if i >= 5 { 1.2 } else { 0.2 * i as f64 };
        }
        let p = PathGrid::from_values(1.0, vals).unwrap();
        let w = extract_walk(&p, 1.0).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.tau_index(1), Some(5));
        assert!((w.tau(1) - 5.0 / 8.0).abs() < 1e-12);
        assert_eq!(w.position(1), 1.0);
    }

    #[test]
    fn unit_steps_and_snap_consistency() {
        let mut s = RngStream::derive(19, 0);
        let p = sample_path(1 << 15, 8.0, 0.0, &mut s).unwrap();
        let w = extract_walk(&p, 1.0).unwrap();
        assert!(w.len() > 0);
        let max_inc = p
            .values()
            .windows(2)
            .map(|v| (v[1] - v[0]).abs())
            .fold(0.0f64, f64::max);
        for k in 1..=w.len() {
            assert_eq!((w.offsets()[k] - w.offsets()[k - 1]).abs(), 1);
            let overshoot = (p.value(w.tau_index(k).unwrap()) - w.position(k)).abs();
            assert!(overshoot <= max_inc + 1e-12);
        }
    }

    #[test]
    fn grid_tau1_mean_near_one() {
        // E tau_1 = 1; grid detection biases upward by O(sqrt(dt)).
        let reps = 10_000usize;
        let sum: f64 = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut s = RngStream::derive(23, r);
                // P{tau_1 > 16} ~ 5e-9: no replicate is censored at this scale.
                let p = sample_path(16 * 4096, 16.0, 0.0, &mut s).unwrap();
                let w = extract_walk(&p, 1.0).unwrap();
                assert!(w.len() >= 1, "tau_1 > 16 has negligible probability");
                w.tau(1)
            })
            .sum();
        let mean = sum / reps as f64;
        assert!((mean - 1.0).abs() < 0.03, "grid tau_1 mean {mean}");
    }

    #[test]
    fn exact_walk_moments() {
        let mut s = RngStream::derive(29, 0);
        let n = 100_000usize;
        let w = sample_walk_exact(n, 0.0, &mut s);
        let incs: Vec<f64> = w.taus().windows(2).map(|t| t[1] - t[0]).collect();
        let mean = incs.iter().sum::<f64>() / n as f64;
        let var = incs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 2.0 / 3.0).abs() < 0.03 * (2.0 / 3.0), "var {var}");
        // Step signs balanced.
        let ups = w
            .offsets()
            .windows(2)
            .filter(|o| o[1] > o[0])
            .count() as f64;
        assert!((ups / n as f64 - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn exact_tau1_tail_matches_series() {
        use crate::oracle::tau1_survival;
        let reps = 100_000usize;
        let count: u64 = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut s = RngStream::derive(31, r);
                let u: f64 = s.gen();
                u64::from(tau1_quantile(u).unwrap() >= 3.0)
            })
            .sum();
        let p_hat = count as f64 / reps as f64;
        let target = tau1_survival(3.0).unwrap();
        let (lo, hi) = crate::stats::wilson_interval(count, reps as u64, crate::stats::Z99);
        assert!(lo <= target && target <= hi, "p_hat {p_hat} vs {target}");
    }

    #[test]
    fn grid_and_exact_tau1_agree_in_law() {
        // Two-sample KS on tau_1 at dt = 1/16384 passes at significance 1e-2.
        let reps = 2000usize;
        let grid: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut s = RngStream::derive(37, r);
                let p = sample_path(8 * 16384, 8.0, 0.0, &mut s).unwrap();
                extract_walk(&p, 1.0).unwrap().tau(1)
            })
            .collect();
        let exact: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut s = RngStream::derive(38, r);
                sample_walk_exact(1, 0.0, &mut s).tau(1)
            })
            .collect();
        let d = ks_two_sample(&grid, &exact);
        let p = ks_two_sample_p_value(d, reps, reps);
        assert!(p > 0.01, "KS p-value {p}");
    }

    fn lattice_walk(offsets: Vec<i64>, start: f64) -> EmbeddedWalk {
        let tau: Vec<f64> = (0..offsets.len()).map(|i| i as f64).collect();
        EmbeddedWalk {
            mode: WalkMode::Exact,
            level: 1.0,
            start,
            tau,
            tau_idx: None,
            offsets,
        }
    }

    #[test]
    fn intersections_disjoint_ranges() {
        let w = lattice_walk(vec![0, 1, 2], 1.0); // positions 1,2,3
        let wt = lattice_walk(vec![0, -1, -2], -1.0); // positions -1,-2,-3
        let rec = intersections(&w, &wt, 2).unwrap();
        assert_eq!(rec.q_n, 0);
        assert_eq!(rec.sigma, None);
        assert!(rec.lambda.is_empty() && rec.early.is_empty());
    }

    #[test]
    fn intersections_meet_at_zero() {
        let w = lattice_walk(vec![0, -1], 1.0); // 1, 0
        let wt = lattice_walk(vec![0, 1], -1.0); // -1, 0
        let rec = intersections(&w, &wt, 1).unwrap();
        assert_eq!(rec.q_n, 1);
        assert_eq!(rec.sigma, Some(1));
        assert_eq!(rec.early, vec![(1, 1)]);
    }

    #[test]
    fn intersections_insufficient_data() {
        let w = lattice_walk(vec![0, 1], 0.0);
        assert!(intersections(&w, &w, 5).is_err());
    }

    #[test]
    fn early_intersections_are_minimal() {
        let mut s = RngStream::derive(41, 0);
        for _ in 0..50 {
            let w = lattice_walk(crate::path::sample_simple_walk(12, 1, &mut s), 0.0);
            let wt = lattice_walk(crate::path::sample_simple_walk(12, -1, &mut s), 0.0);
            let rec = intersections(&w, &wt, 12).unwrap();
            assert_eq!(rec.q_n as usize, rec.lambda.len());
            for &(j, k) in &rec.early {
                assert!(!rec
                    .lambda
                    .iter()
                    .any(|&(j1, k1)| (j1, k1) != (j, k) && j1 <= j && k1 <= k));
            }
            if let Some(sig) = rec.sigma {
                assert!(rec.lambda.iter().any(|&(j, k)| j.max(k) == sig));
                assert!(!rec.lambda.iter().any(|&(j, k)| j.max(k) < sig));
            }
        }
    }

    #[test]
    fn q1_zero_under_mu_matches_enumeration() {
        // P_mu{Q_1 = 0} = 5/8 within MC error.
        let reps = 50_000usize;
        let count: u64 = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut s = RngStream::derive(43, r);
                let corner: u8 = s.gen_range(0..4);
                let (s0, t0) = crate::oracle::MU_CORNERS[corner as usize];
                let w = lattice_walk(crate::path::sample_simple_walk(1, 0, &mut s), s0 as f64);
                let wt = lattice_walk(crate::path::sample_simple_walk(1, 0, &mut s), t0 as f64);
                u64::from(intersections(&w, &wt, 1).unwrap().q_n == 0)
            })
            .sum();
        let p = count as f64 / reps as f64;
        assert!((p - 0.625).abs() < 3.0 * (0.625f64 * 0.375 / reps as f64).sqrt());
    }

    #[test]
    fn event_f_examples() {
        let w = lattice_walk(vec![0, -1], 1.0); // 1, 0
        let wt = lattice_walk(vec![0, 1], -1.0); // -1, 0
        assert!(event_f(&w, &wt, 1, 1).unwrap());
        let w = lattice_walk(vec![0, -1, 0], 1.0); // 1, 0, 1
        let wt = lattice_walk(vec![0, 1, 2], -1.0); // -1, 0, 1
        assert!(!event_f(&w, &wt, 1, 2).unwrap()); // (1,1) already intersects
        assert!(event_f(&w, &wt, 0, 1).is_err());
    }

    #[test]
    fn hitting_time_examples() {
        let w = lattice_walk(vec![0, -1, -2], 1.0); // 1, 0, -1
        assert_eq!(hitting_time(&w, 0, 2), Some(1));
        let w = lattice_walk(vec![0, 1, 2], 1.0); // 1, 2, 3
        assert_eq!(hitting_time(&w, 0, 2), None);
    }

    #[test]
    fn block_ilt_and_h_statistic() {
        let n_blocks = 3usize;
        let mut checked = 0;
        for r in 0..40u64 {
            let stream = RngStream::derive(47, r);
            let pair = sample_pair(24 * 1024, 24.0, &StartLaw::Mu, &stream).unwrap();
            let w = extract_walk(&pair.path_b, 1.0).unwrap();
            let wt = extract_walk(&pair.path_bt, 1.0).unwrap();
            if w.len() < n_blocks + 1 || wt.len() < n_blocks + 1 {
                continue;
            }
            checked += 1;
            let cfg = EstimatorConfig::default_binned(pair.path_b.dt());
            let h = h_statistic(&pair, &w, &wt, n_blocks, &cfg).unwrap();
            assert!(h.value >= 0.0);
            let rec = intersections(&w, &wt, n_blocks).unwrap();
            if rec.q_n == 0 {
                assert_eq!(h.value, 0.0);
            }
            // Pathwise dominance by the whole-square estimate.
            let full = mutual_ilt(
                &pair.path_b,
                &pair.path_bt,
                &cfg,
                (0.0, w.tau(n_blocks + 1)),
                (0.0, wt.tau(n_blocks + 1)),
            )
            .unwrap()
            .value;
            assert!(
                h.value <= full * (1.0 + 1e-9) + 1e-12,
                "H {} > full {}",
                h.value,
                full
            );
            // Monotone in n.
            let h2 = h_statistic(&pair, &w, &wt, n_blocks - 1, &cfg).unwrap();
            assert!(h2.value <= h.value * (1.0 + 1e-12) + 1e-15);
        }
        assert!(checked > 20, "too few replicates with enough exits");
    }

    #[test]
    fn block_additivity_over_partition() {
        let stream = RngStream::derive(53, 1);
        let pair = sample_pair(16 * 1024, 16.0, &StartLaw::Point(0.0, 0.0), &stream).unwrap();
        let w = extract_walk(&pair.path_b, 1.0).unwrap();
        let wt = extract_walk(&pair.path_bt, 1.0).unwrap();
        let n = 2usize;
        assert!(w.len() >= n + 1 && wt.len() >= n + 1);
        let cfg = EstimatorConfig::default_binned(pair.path_b.dt());
        let mut acc = 0.0;
        for j in 0..=n {
            for k in 0..=n {
                acc += block_ilt(&pair, &w, &wt, j, k, &cfg).unwrap().value;
            }
        }
        let whole = mutual_ilt(
            &pair.path_b,
            &pair.path_bt,
            &cfg,
            (0.0, w.tau(n + 1)),
            (0.0, wt.tau(n + 1)),
        )
        .unwrap()
        .value;
        assert!((acc - whole).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn block_ilt_rejects_exact_mode() {
        let stream = RngStream::derive(59, 0);
        let pair = sample_pair(1024, 1.0, &StartLaw::Point(0.0, 0.0), &stream).unwrap();
        let mut s = RngStream::derive(59, 1);
        let w = sample_walk_exact(4, 0.0, &mut s);
        let cfg = EstimatorConfig::default_binned(pair.path_b.dt());
        assert!(matches!(
            block_ilt(&pair, &w, &w, 1, 1, &cfg),
            Err(Error::UnsupportedMode(_))
        ));
    }

    #[test]
    fn chebyshev_bound_respected() {
        let (emp, bound) = tau_concentration_check(100, 0.5, 20_000, 61).unwrap();
        assert!((bound - (2.0 / 3.0) / 25.0).abs() < 1e-6);
        assert!(emp <= bound, "empirical {emp} above bound {bound}");
        // n = 1, delta = 10: tau_1 >= 11 has probability < 1e-5.
        let (emp1, _) = tau_concentration_check(1, 10.0, 20_000, 62).unwrap();
        assert_eq!(emp1, 0.0);
    }

    #[test]
    fn concentration_improves_with_n() {
        let (e50, _) = tau_concentration_check(50, 0.25, 20_000, 63).unwrap();
        let (e200, _) = tau_concentration_check(200, 0.25, 20_000, 63).unwrap();
        // LLN: larger n concentrates more, up to MC noise.
        assert!(e200 <= e50 + 2.0 * (e50.max(0.01) / 20_000.0f64).sqrt() + 0.01);
    }
}
