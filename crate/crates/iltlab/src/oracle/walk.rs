//! Exact simple-random-walk distributions: dynamic programs over
//! (position, running extremes), first-passage laws with absorption, and
//! exhaustive enumeration as the final arbiter for small n.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Largest n served by the marginal DPs (O(n^2) states, O(n^3) work).
pub const DP_CAP: usize = 2048;
/// Largest n for the full (position, min, max) triple table; beyond this the
/// joint table is too large to hold and the marginal DPs serve instead.
pub const TRIPLE_CAP: usize = 128;
/// Enumeration budget for F-event probabilities: 4 * 2^rho * 2^l paths.
pub const F_EVENT_CAP: usize = 22;

/// The four corner starts of the mu law.
pub const MU_CORNERS: [(i64, i64); 4] = [(-1, -1), (1, 1), (-1, 1), (1, -1)];

/// P{min_{1<=k<=n} S_k = v} for a walk started at 0, v in [-n, 1].
/// Returned as a vector indexed by v + n.
pub fn min_law(n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > DP_CAP {
        return Err(Error::UnsupportedSize(format!(
            "min_law supports 1 <= n <= {DP_CAP}, got {n}"
        )));
    }
    let ni = n as i64;
    // State (m, p): running min m in [-n, 1], position offset j = p - m in [0, 2n].
    let width = 2 * n + 2;
    let idx = |m: i64, p: i64| -> usize { ((m + ni) as usize) * width + (p - m) as usize };
    let mut cur = vec![0.0f64; (n + 2) * width];
    let mut nxt = vec![0.0f64; (n + 2) * width];
    cur[idx(1, 1)] = 0.5;
    cur[idx(-1, -1)] = 0.5;
    for _ in 2..=n {
        nxt.iter_mut().for_each(|w| *w = 0.0);
        for m in -ni..=1 {
            for j in 0..width as i64 {
                let w = cur[((m + ni) as usize) * width + j as usize];
                if w == 0.0 {
                    continue;
                }
                let p = m + j;
                for step in [-1i64, 1] {
                    let p2 = p + step;
                    let m2 = m.min(p2);
                    nxt[idx(m2, p2)] += 0.5 * w;
                }
            }
        }
        std::mem::swap(&mut cur, &mut nxt);
    }
    let mut out = vec![0.0f64; n + 2];
    for m in -ni..=1 {
        let mut acc = 0.0;
        for j in 0..width {
            acc += cur[((m + ni) as usize) * width + j];
        }
        out[(m + ni) as usize] = acc;
    }
    Ok(out)
}

/// P{min_{1<=k<=n} S_k >= bound} for a walk started at 0.
pub fn min_at_least(n: usize, bound: i64) -> Result<f64> {
    let law = min_law(n)?;
    let ni = n as i64;
    let mut acc = 0.0;
    for v in bound.max(-ni)..=1 {
        acc += law[(v + ni) as usize];
    }
    Ok(if bound <= -ni { 1.0 } else { acc })
}

/// Joint law of (position, running min, running max) over steps 1..n.
#[derive(Clone, Debug)]
pub struct RangeLawTable {
    n: usize,
    start: i64,
    table: HashMap<(i64, i64, i64), f64>,
}

impl RangeLawTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn prob(&self, pos: i64, min: i64, max: i64) -> f64 {
        *self.table.get(&(pos, min, max)).unwrap_or(&0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(i64, i64, i64), &f64)> {
        self.table.iter()
    }

    pub fn total_mass(&self) -> f64 {
        self.table.values().sum()
    }

    pub fn position_marginal(&self) -> HashMap<i64, f64> {
        let mut out = HashMap::new();
        for (&(p, _, _), &w) in &self.table {
            *out.entry(p).or_insert(0.0) += w;
        }
        out
    }

    pub fn min_marginal(&self) -> HashMap<i64, f64> {
        let mut out = HashMap::new();
        for (&(_, m, _), &w) in &self.table {
            *out.entry(m).or_insert(0.0) += w;
        }
        out
    }

    pub fn max_marginal(&self) -> HashMap<i64, f64> {
        let mut out = HashMap::new();
        for (&(_, _, x), &w) in &self.table {
            *out.entry(x).or_insert(0.0) += w;
        }
        out
    }
}

/// Exact DP over (position, running min, running max) of a walk from `start`,
/// extremes taken over steps 1..n.
pub fn range_law(n: usize, start: i64) -> Result<RangeLawTable> {
    if n == 0 || n > TRIPLE_CAP {
        return Err(Error::UnsupportedSize(format!(
            "range_law holds the full triple table only for 1 <= n <= {TRIPLE_CAP}, got {n}; \
             use the min/max marginal DPs for larger n"
        )));
    }
    let mut cur: HashMap<(i64, i64, i64), f64> = HashMap::new();
    cur.insert((start + 1, start + 1, start + 1), 0.5);
    cur.insert((start - 1, start - 1, start - 1), 0.5);
    for _ in 2..=n {
        let mut nxt: HashMap<(i64, i64, i64), f64> = HashMap::with_capacity(cur.len() * 2);
        for (&(p, m, x), &w) in &cur {
            for step in [-1i64, 1] {
                let p2 = p + step;
                *nxt.entry((p2, m.min(p2), x.max(p2))).or_insert(0.0) += 0.5 * w;
            }
        }
        cur = nxt;
    }
    Ok(RangeLawTable {
        n,
        start,
        table: cur,
    })
}

/// Exact P_mu{Q_n = 0}. A +-1 walk visits an integer interval, so the walks
/// fail to intersect over steps 1..n iff their (min, max) ranges are disjoint.
/// Uses the from-0 min law and its reflection for the max.
pub fn no_intersection_exact(n: usize) -> Result<f64> {
    let law = min_law(n)?; // P{min0 = v}, v in [-n, 1], index v + n
    let ni = n as i64;
    // CDF of the from-0 max: P{max0 <= v} = P{min0 >= -v}.
    let mut min_tail = vec![0.0f64; n + 3]; // P{min0 >= v}, index v + n
    let mut acc = 0.0;
    for v in (-ni..=1).rev() {
        acc += law[(v + ni) as usize];
        min_tail[(v + ni) as usize] = acc;
    }
    let min0 = |v: i64| -> f64 {
        if v < -ni || v > 1 {
            0.0
        } else {
            law[(v + ni) as usize]
        }
    };
    let max0_cdf = |v: i64| -> f64 {
        // P{max0 <= v} = P{min0 >= -v}
        if -v < -ni {
            1.0
        } else if -v > 1 {
            0.0
        } else {
            min_tail[(-v + ni) as usize]
        }
    };
    let mut total = 0.0;
    for (s0, t0) in MU_CORNERS {
        // P{max_S < min_T} with max_S = s0 + max0, min_T = t0 + min0.
        let mut first = 0.0;
        let mut second = 0.0;
        for b in -ni..=1 {
            let pb = min0(b);
            if pb == 0.0 {
                continue;
            }
            // max0_S <= (t0 + b) - s0 - 1
            first += pb * max0_cdf(t0 + b - s0 - 1);
            // symmetric event: max_T < min_S
            second += pb * max0_cdf(s0 + b - t0 - 1);
        }
        total += 0.25 * (first + second);
    }
    Ok(total)
}

/// Exact first-passage pmf P{T_z = m | S_0 = start} for m = 1..n, by DP with
/// an absorbing state at z. Index 0 of the returned vector is unused (0.0).
pub fn hitting_pmf_exact(z: i64, n: usize, start: i64) -> Result<Vec<f64>> {
    if n == 0 || n > DP_CAP {
        return Err(Error::UnsupportedSize(format!(
            "hitting_pmf supports 1 <= n <= {DP_CAP}, got {n}"
        )));
    }
    let ni = n as i64;
    let off = ni - start.min(z) + 2;
    let width = (2 * n + 5) as usize;
    let mut alive = vec![0.0f64; width];
    let mut nxt = vec![0.0f64; width];
    alive[(start + off) as usize] = 1.0;
    let mut pmf = vec![0.0f64; n + 1];
    for m in 1..=n {
        nxt.iter_mut().for_each(|w| *w = 0.0);
        for (i, &w) in alive.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let p = i as i64 - off;
            for step in [-1i64, 1] {
                let p2 = p + step;
                if p2 == z {
                    pmf[m] += 0.5 * w;
                } else if (p2 + off) >= 0 && ((p2 + off) as usize) < width {
                    nxt[(p2 + off) as usize] += 0.5 * w;
                }
            }
        }
        std::mem::swap(&mut alive, &mut nxt);
    }
    Ok(pmf)
}

/// First-passage pmf under the mu start marginal (uniform on {-1, 1}).
pub fn hitting_pmf_mu(z: i64, n: usize) -> Result<Vec<f64>> {
    let a = hitting_pmf_exact(z, n, -1)?;
    let b = hitting_pmf_exact(z, n, 1)?;
    Ok(a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect())
}

/// P_mu{T_z >= n} from the exact pmf.
pub fn hitting_survival_mu(z: i64, n: usize) -> Result<f64> {
    if n <= 1 {
        return Ok(1.0);
    }
    let pmf = hitting_pmf_mu(z, n - 1)?;
    Ok(1.0 - pmf.iter().sum::<f64>())
}

fn site_mask(site: i64) -> u64 {
    1u64 << (site + 31)
}

/// Exact P_mu(F_{rho,l}) by exhaustive enumeration over the four starts and
/// both walks' step signs: S_rho = St_l and no other intersection inside the
/// rectangle [1,rho] x [1,l].
pub fn f_event_probability_bruteforce(rho: usize, l: usize) -> Result<f64> {
    if rho == 0 || rho > l {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= rho <= l, got rho={rho}, l={l}"
        )));
    }
    if rho + l > F_EVENT_CAP {
        return Err(Error::UnsupportedSize(format!(
            "enumeration cap rho + l <= {F_EVENT_CAP} exceeded: {rho} + {l}"
        )));
    }
    let enumerate = |steps: usize, start: i64| -> Vec<(i64, u64, u64)> {
        // (endpoint, mask of sites at steps 1..steps-1, mask of sites at steps 1..steps)
        let mut out = Vec::with_capacity(1 << steps);
        for bits in 0u32..(1u32 << steps) {
            let mut p = start;
            let mut pre = 0u64;
            for k in 0..steps {
                if k > 0 {
                    pre |= site_mask(p);
                }
                p += if bits >> k & 1 == 1 { 1 } else { -1 };
            }
            out.push((p, pre, pre | site_mask(p)));
        }
        out
    };
    let mut hits = 0u64;
    for (s0, t0) in MU_CORNERS {
        let ss = enumerate(rho, s0);
        let ts = enumerate(l, t0);
        for &(s_end, s_pre, s_full) in &ss {
            for &(t_end, t_pre, _) in &ts {
                if s_end == t_end && s_full & t_pre == 0 && s_pre & site_mask(t_end) == 0 {
                    hits += 1;
                }
            }
        }
    }
    Ok(hits as f64 / (4.0 * (1u64 << rho) as f64 * (1u64 << l) as f64))
}

/// Ground-truth P_mu{Q_n = 0} by full enumeration (n <= 10).
pub fn no_intersection_enum(n: usize) -> Result<f64> {
    if n == 0 || n > 10 {
        return Err(Error::UnsupportedSize(format!(
            "enumeration arbiter supports n <= 10, got {n}"
        )));
    }
    let walk_ranges = |start: i64| -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(1 << n);
        for bits in 0u32..(1u32 << n) {
            let mut p = start;
            let (mut lo, mut hi) = (i64::MAX, i64::MIN);
            for k in 0..n {
                p += if bits >> k & 1 == 1 { 1 } else { -1 };
                lo = lo.min(p);
                hi = hi.max(p);
            }
            out.push((lo, hi));
        }
        out
    };
    let mut total = 0.0;
    for (s0, t0) in MU_CORNERS {
        let ra = walk_ranges(s0);
        let rb = walk_ranges(t0);
        let mut hits = 0u64;
        for &(la, ha) in &ra {
            for &(lb, hb) in &rb {
                if ha < lb || hb < la {
                    hits += 1;
                }
            }
        }
        total += 0.25 * hits as f64 / (ra.len() as f64 * rb.len() as f64);
    }
    Ok(total)
}

/// Ground-truth triple law by enumeration (n <= 12), for validating the DP.
pub fn range_law_enum(n: usize, start: i64) -> Result<HashMap<(i64, i64, i64), f64>> {
    if n == 0 || n > 12 {
        return Err(Error::UnsupportedSize(format!(
            "enumeration arbiter supports n <= 12, got {n}"
        )));
    }
    let mut out: HashMap<(i64, i64, i64), f64> = HashMap::new();
    let w = 1.0 / (1u64 << n) as f64;
    for bits in 0u32..(1u32 << n) {
        let mut p = start;
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        for k in 0..n {
            p += if bits >> k & 1 == 1 { 1 } else { -1 };
            lo = lo.min(p);
            hi = hi.max(p);
        }
        *out.entry((p, lo, hi)).or_insert(0.0) += w;
    }
    Ok(out)
}
