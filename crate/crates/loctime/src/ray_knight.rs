//! Branching structure of walk local times: geometric offspring variables
//! read off downcrossings, centered partial sums, the exact identity suite
//! tying level local times at upward return times to a critical
//! Galton-Watson process, and an independent simulator of that process.

use crate::rng::RngStream;
use crate::walk::{CappedStepGen, StepSequence};
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

/// Geometric offspring draw, P(T = j) = 2^{-j} on {1, 2, ...}, sampled
/// exactly from the bit stream (index of the first set bit).
#[inline]
pub fn sample_t(rng: &mut impl Rng) -> u64 {
    let mut offset = 0u64;
    loop {
        let z: u64 = rng.gen();
        if z != 0 {
            return offset + z.trailing_zeros() as u64 + 1;
        }
        offset += 64;
    }
}

/// U(j) = T_1 + ... + T_j - 2j, the centered offspring partial sums.
#[derive(Clone, Debug, Default)]
pub struct CenteredSumSeries {
    pub level: i64,
    pub values: Vec<i64>,
}

impl CenteredSumSeries {
    pub fn from_offspring(level: i64, ts: impl IntoIterator<Item = u64>) -> Self {
        let mut acc = 0i64;
        let values = ts
            .into_iter()
            .map(|t| {
                acc += t as i64 - 2;
                acc
            })
            .collect();
        Self { level, values }
    }
}

/// Everything the identity suite needs about one walk, frozen at the time
/// rho_N+ of the N-th completed upward zero-excursion.
///
/// Vectors are indexed by level: `visits[k]` is xi(k, rho_N+) for k in
/// 1..=k_max stored at index k-1; `up[k]` counts completed upward excursions
/// away from level k for k in 0..=k_max stored at index k; `down_started[k]`
/// counts downcrossings k -> k-1 for k in 1..=k_max at index k-1;
/// `t_arrays[k-1]` holds T_i^{(k)} in order of occurrence.
#[derive(Clone, Debug)]
pub struct LevelStats {
    pub n_upward: u64,
    pub rho_n_plus: u64,
    pub k_max: i64,
    pub visits: Vec<u64>,
    pub up: Vec<u64>,
    pub down_started: Vec<u64>,
    pub t_arrays: Vec<Vec<u64>>,
}

/// Scan a step stream until `n_upward` upward zero-excursions have
/// completed, accumulating per-level counts for levels 1..=k_max.
/// Returns None if the stream ends first.
pub fn scan_levels(
    steps: impl Iterator<Item = i8>,
    n_upward: u64,
    k_max: i64,
) -> Option<LevelStats> {
    assert!(k_max >= 1);
    let km = k_max as usize;
    let mut visits = vec![0u64; km];
    let mut up = vec![0u64; km + 1];
    let mut down_started = vec![0u64; km];
    let mut t_arrays = vec![Vec::new(); km];
    let mut t_pending = vec![0u64; km];
    let mut s = 0i64;
    let mut zero_first_up = false;
    for (i, x) in steps.enumerate() {
        let t = i as u64 + 1;
        if s == 0 {
            zero_first_up = x == 1;
        }
        if (1..=k_max).contains(&s) && x == -1 {
            // downcrossing s -> s-1 closes T at level s
            let idx = (s - 1) as usize;
            down_started[idx] += 1;
            t_arrays[idx].push(t_pending[idx]);
            t_pending[idx] = 0;
        }
        s += x as i64;
        if (1..=k_max).contains(&s) {
            let idx = (s - 1) as usize;
            visits[idx] += 1;
            if x == 1 {
                t_pending[idx] += 1;
            } else {
                // arrived from above: completes an upward excursion away
                // from s (every sojourn above s starts with a visit to s)
                up[s as usize] += 1;
                t_pending[idx] += 1;
            }
        }
        if s == 0 && zero_first_up {
            up[0] += 1;
            if up[0] == n_upward {
                return Some(LevelStats {
                    n_upward,
                    rho_n_plus: t,
                    k_max,
                    visits,
                    up,
                    down_started,
                    t_arrays,
                });
            }
        }
    }
    None
}

/// Scan with a height-censored generator; exact in law for all recorded
/// levels because nothing above k_max + 1 is ever consulted.
pub fn scan_levels_capped(n_upward: u64, k_max: i64, stream: &RngStream) -> LevelStats {
    let gen = CappedStepGen::new(stream, -1, k_max + 1);
    scan_levels(gen, n_upward, k_max).expect("capped generator is infinite")
}

/// T_i^{(k)}, i = 1..=count, from a materialized path.
pub fn extract_t_from_path(path: &StepSequence, k: i64, count: u64) -> Result<Vec<u64>> {
    assert!(k >= 1, "offspring levels start at 1");
    let mut out = Vec::with_capacity(count as usize);
    let mut pending = 0u64;
    let mut s = 0i64;
    for x in path.steps() {
        if s == k && x == -1 {
            out.push(pending);
            pending = 0;
            if out.len() as u64 == count {
                return Ok(out);
            }
        }
        s += x as i64;
        if s == k {
            pending += 1;
        }
    }
    Err(Error::InsufficientDowncrossings {
        level: k,
        required: count,
        available: out.len() as u64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IdentityKind {
    /// xi(k, rho_N+) = U^{(k)}(m) + 2m at m = xi(k-1, rho_N+, up)
    TotalVisits,
    /// xi(k, rho_N+, up) = sum_{i<=m} (T_i^{(k)} - 1)
    Branching,
    /// xi(k, rho_N+, down) = xi(k-1, rho_N+, up)
    DownEqualsUpBelow,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub k: i64,
    pub identity: IdentityKind,
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub n_upward: u64,
    pub k_max: i64,
    pub checks: Vec<IdentityCheck>,
    pub all_hold: bool,
}

/// Evaluate the three exact identities at rho_N+ for k = 1..=k_max.
pub fn verify_identities_from_stats(stats: &LevelStats) -> IdentityReport {
    let mut checks = Vec::new();
    for k in 1..=stats.k_max {
        let idx = (k - 1) as usize;
        let m = stats.up[idx] as usize; // xi(k-1, rho_N+, up)
        let ts = &stats.t_arrays[idx];
        // the number of completed T's at level k is exactly m
        debug_assert_eq!(ts.len(), m, "downcrossing count mismatch at k={}", k);
        let sum_t: i64 = ts.iter().take(m).map(|&t| t as i64).sum();
        let push = |checks: &mut Vec<IdentityCheck>, identity, lhs: i64, rhs: i64| {
            checks.push(IdentityCheck {
                k,
                identity,
                lhs,
                rhs,
                holds: lhs == rhs,
            });
        };
        push(
            &mut checks,
            IdentityKind::TotalVisits,
            stats.visits[idx] as i64,
            sum_t, // U(m) + 2m = sum T
        );
        push(
            &mut checks,
            IdentityKind::Branching,
            stats.up[k as usize] as i64,
            sum_t - m as i64,
        );
        push(
            &mut checks,
            IdentityKind::DownEqualsUpBelow,
            stats.down_started[idx] as i64,
            stats.up[idx] as i64,
        );
    }
    let all_hold = checks.iter().all(|c| c.holds);
    IdentityReport {
        n_upward: stats.n_upward,
        k_max: stats.k_max,
        checks,
        all_hold,
    }
}

/// Identity suite over a materialized path.
pub fn verify_identities(path: &StepSequence, n_upward: u64, k_max: i64) -> Result<IdentityReport> {
    let stats = scan_levels(path.steps(), n_upward, k_max).ok_or({
        Error::InsufficientExcursions {
            required: n_upward,
            available: 0,
        }
    })?;
    Ok(verify_identities_from_stats(&stats))
}

/// One JSON row per identity check, as exported by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub path_seed: String,
    pub n: u64,
    pub k: i64,
    pub identity: IdentityKind,
    pub holds: bool,
}

/// Critical Galton-Watson trajectory with offspring T - 1.
#[derive(Clone, Debug)]
pub struct GwTrajectory {
    pub z: Vec<u64>,
}

impl GwTrajectory {
    pub fn initial(&self) -> u64 {
        self.z[0]
    }

    pub fn level(&self, k: usize) -> u64 {
        self.z[k]
    }
}

/// Z_0 = n, Z_k = sum_{i <= Z_{k-1}} (T_i - 1) with fresh independent draws;
/// sampling is always exact, never a normal surrogate.
pub fn simulate_gw(n: u64, levels: u32, rng: &mut impl Rng) -> GwTrajectory {
    let mut z = Vec::with_capacity(levels as usize + 1);
    z.push(n);
    let mut cur = n;
    for _ in 0..levels {
        let mut next = 0u64;
        for _ in 0..cur {
            next += sample_t(rng) - 1;
        }
        z.push(next);
        cur = next;
    }
    GwTrajectory { z }
}

/// Law of xi(k, rho_1+), the level-k local time earned by one upward
/// zero-excursion: an atom at zero of mass 1 - 1/k and a geometric tail.
#[derive(Clone, Copy, Debug)]
pub struct FirstExcursionLaw {
    pub k: i64,
}

impl FirstExcursionLaw {
    pub fn new(k: i64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter(format!(
                "first_excursion_law needs k >= 1, got {}",
                k
            )));
        }
        Ok(Self { k })
    }

    /// P(xi(k, rho_1+) = m).
    pub fn pmf(&self, m: u64) -> f64 {
        let k = self.k as f64;
        if m == 0 {
            1.0 - 1.0 / k
        } else {
            (1.0 / (2.0 * k * k)) * (1.0 - 1.0 / (2.0 * k)).powi(m as i32 - 1)
        }
    }

    /// P(xi(k, rho_1) >= j) for j >= 1, over a single zero-excursion of
    /// either sign.
    pub fn any_excursion_survival(&self, j: u64) -> f64 {
        assert!(j >= 1);
        let k = self.k as f64;
        (1.0 / (2.0 * k)) * (1.0 - 1.0 / (2.0 * k)).powi(j as i32 - 1)
    }
}
