//! Couplings between the discrete and continuous sides.
//!
//! * A simple symmetric walk embedded in Brownian motion through unit exit
//!   times, with exponential local-time marks at returns to zero.
//! * A per-level embedding of the centered offspring sums U(j) into Wiener
//!   processes: each geometric increment is realized through its run of +-1
//!   exit decisions, so only symmetric unit exits are ever sampled, and the
//!   same Wiener process can be read off exactly at deterministic times
//!   (killed-density draws inside the segment that covers the query).
//! * The sheet assembly: level embeddings plus an independent embedding of
//!   the excursion-direction sequence combine into G(k, N) next to the
//!   branching-built local times, giving the measurable coupling error.
//! * The splice-based coupling report for two independent walks.

use crate::barrier::{
    sample_exit_from, sample_exit_time, sample_killed_position, survival_from, Side,
};
use crate::excursion::{return_times, splice_walks, BlockSchedule};
use crate::ray_knight::CenteredSumSeries;
use crate::rng::{exponential, open01, RngStream};
use crate::stats::{fit_rate, median, RateFit};
use crate::walk::{StepGen, StepSequence};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

/// A walk realized as the exit signs of a Brownian motion from successive
/// unit intervals, with the cumulative exit times.
#[derive(Clone, Debug)]
pub struct EmbeddedWalk {
    pub steps: StepSequence,
    /// tau_1..tau_n, cumulative; E tau_n = n.
    pub times: Vec<f64>,
}

/// Exponential(1) local-time marks, one per return of the walk to zero, in
/// order of occurrence; independent of the step signs by construction
/// (drawn from a disjoint stream, as Knight's theorem licences).
#[derive(Clone, Debug)]
pub struct EtaMarks {
    pub marks: Vec<f64>,
}

/// Embed an n-step walk: signs and exit durations from one stream, one
/// Exp(1) mark per return to zero from a sibling stream.
pub fn embed_walk(n: u64, stream: &RngStream) -> (EmbeddedWalk, EtaMarks) {
    let mut rng = stream.child("walk").rng();
    let mut mark_rng = stream.child("marks").rng();
    let mut steps = StepSequence::with_capacity(n);
    let mut times = Vec::with_capacity(n as usize);
    let mut now = 0.0;
    let mut s = 0i64;
    let mut marks = Vec::new();
    for _ in 0..n {
        let dt = sample_exit_time(&mut rng);
        let up: bool = rng.gen();
        now += dt;
        times.push(now);
        s += if up { 1 } else { -1 };
        steps.push(if up { 1 } else { -1 });
        if s == 0 {
            marks.push(exponential(&mut mark_rng));
        }
    }
    (EmbeddedWalk { steps, times }, EtaMarks { marks })
}

/// Coupling error report; serialized as the wire format consumed by the
/// report merger.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub experiment: String,
    pub n_grid: Vec<u64>,
    pub errors: Vec<f64>,
    pub exponent: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: String,
}

impl CouplingReport {
    pub fn from_fit(experiment: impl Into<String>, fit: &RateFit, seed: String) -> Self {
        CouplingReport {
            experiment: experiment.into(),
            n_grid: fit.n_grid.iter().map(|&n| n as u64).collect(),
            errors: fit.medians.clone(),
            exponent: fit.exponent,
            ci_lo: fit.ci_lo,
            ci_hi: fit.ci_hi,
            seed,
        }
    }
}

/// e(n) = |xi(0,n) - sum_{i <= xi(0,n)} eta_i| at the grid times: the
/// stopping-time-resolution proxy for the local-time coupling error. Only
/// the step signs and the marks enter, so no exit durations are needed.
pub fn eta_coupling_errors(
    steps: impl Iterator<Item = i8>,
    mut next_mark: impl FnMut() -> f64,
    n_grid: &[u64],
) -> Vec<f64> {
    let n_max = *n_grid.iter().max().unwrap_or(&0);
    let mut s = 0i64;
    let mut xi0 = 0u64;
    let mut mark_sum = 0.0f64;
    let mut out = Vec::with_capacity(n_grid.len());
    let mut gi = 0usize;
    for (i, x) in steps.enumerate() {
        let t = i as u64 + 1;
        if t > n_max {
            break;
        }
        s += x as i64;
        if s == 0 {
            xi0 += 1;
            mark_sum += next_mark();
        }
        while gi < n_grid.len() && n_grid[gi] == t {
            out.push((xi0 as f64 - mark_sum).abs());
            gi += 1;
        }
    }
    assert!(gi == n_grid.len(), "step source ended before the grid did");
    out
}

/// Public wrapper over a materialized embedded walk.
pub fn coupling_error_eta(
    walk: &EmbeddedWalk,
    marks: &EtaMarks,
    n_grid: &[u64],
) -> Result<CouplingReport> {
    if n_grid.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 grid points".into()));
    }
    if *n_grid.iter().max().unwrap() > walk.steps.len() {
        return Err(Error::InvalidParameter("grid beyond walk length".into()));
    }
    let mut idx = 0usize;
    let errors = eta_coupling_errors(
        walk.steps.steps(),
        || {
            let m = marks.marks[idx];
            idx += 1;
            m
        },
        n_grid,
    );
    let ns: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let fit = fit_rate(&ns, &errors)?;
    Ok(CouplingReport::from_fit("couple-eta", &fit, String::new()))
}

/// Skeleton-plus-queries realization of one embedding Wiener process. The
/// decision signs are the exit sides of successive unit intervals; the
/// process value at each requested deterministic time is drawn from the
/// exact killed transition law of the segment covering it.
#[derive(Clone, Debug, Default)]
pub struct UnitEmbedding {
    /// +-1 exit decisions, in order.
    pub sides: Vec<i8>,
    /// cumulative exit times tau_m, aligned with `sides`.
    pub tau: Vec<f64>,
    /// W evaluated at the query times, in query order.
    pub query_values: Vec<f64>,
}

impl UnitEmbedding {
    /// Offspring values: lengths of the decision blocks ending at each
    /// down step.
    pub fn offspring(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut run = 0u64;
        for &s in &self.sides {
            run += 1;
            if s == -1 {
                out.push(run);
                run = 0;
            }
        }
        out
    }

    /// Centered sums U(j) with the stopping times sigma_j at which the
    /// Wiener process equals them.
    pub fn centered_sums(&self, level: i64) -> (CenteredSumSeries, Vec<f64>) {
        let mut sigma = Vec::new();
        let mut r = 0i64;
        let mut values = Vec::new();
        for (m, &s) in self.sides.iter().enumerate() {
            r += s as i64;
            if s == -1 {
                values.push(r);
                sigma.push(self.tau[m]);
            }
        }
        (CenteredSumSeries { level, values }, sigma)
    }
}

/// Beyond this window the exit-before-query probability is below the f64
/// sampling resolution, so the unconditioned exit sampler is exact.
const QUERY_WINDOW_CUTOFF: f64 = 40.0;

/// Drive one embedding Wiener process until all stop conditions hold:
/// at least `min_sides` decisions, at least `min_down` down-decisions,
/// time at least `min_time`, and every query answered. Queries must be
/// strictly increasing and positive.
pub fn embed_unit_walk(
    queries: &[f64],
    min_sides: u64,
    min_down: u64,
    min_time: f64,
    rng: &mut ChaCha12Rng,
) -> UnitEmbedding {
    debug_assert!(queries.windows(2).all(|w| w[0] < w[1]));
    let mut out = UnitEmbedding::default();
    let mut qi = 0usize;
    let mut seg_base = 0i64; // skeleton value at segment start
    let mut u = 0.0f64; // relative position within the segment
    let mut now = 0.0f64;
    let mut downs = 0u64;
    loop {
        let done = out.sides.len() as u64 >= min_sides
            && downs >= min_down
            && now >= min_time
            && qi >= queries.len();
        if done {
            return out;
        }
        let window = if qi < queries.len() {
            queries[qi] - now
        } else {
            f64::INFINITY
        };
        debug_assert!(window > 0.0);
        if window > QUERY_WINDOW_CUTOFF {
            // no query can interrupt this segment
            let (dt, up) = if u == 0.0 {
                (sample_exit_time(rng), rng.gen::<bool>())
            } else {
                let (dt, side) = sample_exit_from(u, None, rng);
                (dt, side == Side::Top)
            };
            now += dt;
            seg_base += if up { 1 } else { -1 };
            out.sides.push(if up { 1 } else { -1 });
            out.tau.push(now);
            if !up {
                downs += 1;
            }
            u = 0.0;
        } else {
            let p_survive = survival_from(window, u);
            if open01(rng) < p_survive {
                // the segment covers the query: draw the killed position
                let y = sample_killed_position(window, u, rng);
                out.query_values.push(seg_base as f64 + y);
                now = queries[qi];
                qi += 1;
                u = y;
            } else {
                let (dt, side) = sample_exit_from(u, Some(window), rng);
                now += dt;
                let up = side == Side::Top;
                seg_base += if up { 1 } else { -1 };
                out.sides.push(if up { 1 } else { -1 });
                out.tau.push(now);
                if !up {
                    downs += 1;
                }
                u = 0.0;
            }
        }
    }
}

/// One level of the U-sum embedding: the centered sums, their stopping
/// times, and the coupled Wiener process read off at times 2j.
#[derive(Clone, Debug)]
pub struct LevelEmbedding {
    pub series: CenteredSumSeries,
    /// sigma_j with U(j) = W(sigma_j); E sigma_j = 2j.
    pub sigma: Vec<f64>,
    /// W(2j) for j = 1..=j_max.
    pub w_at_even: Vec<f64>,
}

/// Embed the centered offspring sums of `k_max` independent levels, each up
/// to `j_max` completed increments, evaluating each level's Wiener process
/// at the deterministic times 2, 4, ..., 2*j_max.
pub fn embed_u_sums(k_max: usize, j_max: u64, stream: &RngStream) -> Vec<LevelEmbedding> {
    assert!(k_max >= 1 && j_max >= 1);
    let queries: Vec<f64> = (1..=j_max).map(|j| 2.0 * j as f64).collect();
    (1..=k_max)
        .map(|k| {
            let mut rng = stream.child("level").child(k).rng();
            let emb = embed_unit_walk(&queries, 0, j_max, 2.0 * j_max as f64, &mut rng);
            let (mut series, mut sigma) = emb.centered_sums(k as i64);
            series.values.truncate(j_max as usize);
            sigma.truncate(j_max as usize);
            LevelEmbedding {
                series,
                sigma,
                w_at_even: emb.query_values,
            }
        })
        .collect()
}

/// Parameters for the sheet-coupling experiment.
#[derive(Clone, Debug)]
pub struct SheetCouplingParams {
    /// excursion counts to measure at (>= 3 points for the rate fit)
    pub n_grid: Vec<u64>,
    /// level cap K; must satisfy K^3 <= min(n_grid)
    pub k_cap: usize,
    pub reps: u32,
}

/// One replication of the branching construction at excursion count `n`:
/// returns (sup_{k<=K} |xi(k,rho_N) - xi(0,rho_N) - G(k,N)|, nu, z-chain).
fn sheet_coupling_once(n: u64, k_cap: usize, stream: &RngStream) -> (f64, u64, Vec<u64>) {
    // excursion-direction sequence from its own embedding; a down decision
    // marks an upward excursion (it closes one geometric direction block)
    let mut dir_rng = stream.child("dirs").rng();
    let dirs = embed_unit_walk(&[n as f64], n, 0, n as f64, &mut dir_rng);
    let nu = dirs.sides[..n as usize].iter().filter(|&&s| s == -1).count() as u64;
    let w_star_at_n = dirs.query_values[0];

    let mut z = vec![nu];
    let mut w_cum = Vec::with_capacity(k_cap); // W(k, N) = sum_{i<=k} W_i(N)
    let mut acc = 0.0;
    for i in 1..=k_cap {
        let mut rng = stream.child("level").child(i).rng();
        let prev = *z.last().unwrap();
        let emb = embed_unit_walk(&[n as f64], 0, prev, n as f64, &mut rng);
        let (series, _) = emb.centered_sums(i as i64);
        let u_at_prev = if prev == 0 {
            0
        } else {
            series.values[prev as usize - 1]
        };
        let next = (prev as i64 + u_at_prev).max(0) as u64;
        z.push(next);
        acc += emb.query_values[0];
        w_cum.push(acc);
    }
    let mut sup: f64 = 0.0;
    for k in 1..=k_cap {
        let xi_k = (z[k] + z[k - 1]) as f64;
        let w_k = w_cum[k - 1];
        let w_km1 = if k >= 2 { w_cum[k - 2] } else { 0.0 };
        let g = w_k + w_km1 - w_star_at_n;
        sup = sup.max((xi_k - n as f64 - g).abs());
    }
    (sup, nu, z)
}

/// Drive the branching construction over an excursion-count grid and fit
/// the growth exponent of the coupling error medians.
pub fn sheet_coupling_report(
    params: &SheetCouplingParams,
    stream: &RngStream,
) -> Result<CouplingReport> {
    let n_min = *params
        .n_grid
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidParameter("empty n grid".into()))?;
    if (params.k_cap as u64).pow(3) > n_min {
        return Err(Error::InvalidParameter(format!(
            "level cap {} exceeds min(N)^(1/3)",
            params.k_cap
        )));
    }
    let mut medians = Vec::with_capacity(params.n_grid.len());
    for &n in &params.n_grid {
        let mut errs: Vec<f64> = (0..params.reps)
            .map(|rep| {
                let sub = stream.child("sheet").child(n).child(rep);
                sheet_coupling_once(n, params.k_cap, &sub).0
            })
            .collect();
        medians.push(median(&mut errs));
    }
    let ns: Vec<f64> = params.n_grid.iter().map(|&n| n as f64).collect();
    let fit = fit_rate(&ns, &medians)?;
    Ok(CouplingReport::from_fit("couple-sheet", &fit, String::new()))
}

/// Per-grid-point outcome of the splice coupling measurements.
#[derive(Clone, Debug, Serialize)]
pub struct SpliceRates {
    /// fitted exponent of max_i |rho_i - rho^(1)_i| in N
    pub rho_deformation: RateFit,
    /// fitted exponent of |xi(0,n) - xi^(1)(0,n)| in n (pooled dyadic times)
    pub zero_diff: RateFit,
    /// reported only: level-increment proxy vs walk2 at matched counts
    pub level_proxy_medians: Vec<f64>,
}

fn grow_walk_until_returns(stream: &RngStream, want: u64) -> StepSequence {
    let mut gen = StepGen::new(stream);
    let mut seq = StepSequence::new();
    let mut s = 0i64;
    let mut zeros = 0u64;
    while zeros < want {
        let x = gen.next_step();
        seq.push(x);
        s += x as i64;
        if s == 0 {
            zeros += 1;
        }
    }
    seq
}

/// Run the splice on fresh independent walk pairs across a dyadic grid of
/// excursion counts and fit the deformation exponents.
pub fn splice_coupling_report(
    n_grid: &[u64],
    reps: u32,
    k_cap: i64,
    stream: &RngStream,
) -> Result<SpliceRates> {
    if n_grid.len() < 2 {
        return Err(Error::InvalidParameter("grid needs >= 2 points".into()));
    }
    for &n in n_grid {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::InvalidParameter(
                "splice grid must be powers of two >= 4".into(),
            ));
        }
    }
    let n_top = *n_grid.iter().max().unwrap();
    let mut rho_medians = Vec::new();
    let mut level_medians = Vec::new();
    let mut zero_rows: Vec<Vec<f64>> = Vec::new();
    for &n in n_grid {
        let levels = n.trailing_zeros();
        let sch = BlockSchedule::new(levels);
        let mut rho_errs = Vec::new();
        let mut level_errs = Vec::new();
        for rep in 0..reps {
            let sub = stream.child("splice").child(n).child(rep);
            let w1 = grow_walk_until_returns(&sub.child(1u32), n);
            let w2 = grow_walk_until_returns(&sub.child(2u32), n);
            let spliced = splice_walks(&w1, &w2, &sch)?;
            let rho_s = return_times(&spliced, spliced.len()).rho;
            let rho_1 = return_times(&w1, w1.len()).rho;
            let max_dev = rho_s
                .iter()
                .zip(rho_1.iter())
                .take(n as usize)
                .map(|(&a, &b)| a.abs_diff(b))
                .max()
                .unwrap_or(0);
            rho_errs.push(max_dev as f64);
            // |xi(0,m) - xi^(1)(0,m)| at dyadic times, largest block only
            if n == n_top {
                let common = spliced.len().min(*rho_1.last().unwrap());
                let mut row = Vec::new();
                let mut m = 64u64;
                let mut s_a = 0i64;
                let mut s_b = 0i64;
                let mut xi_a = 0u64;
                let mut xi_b = 0u64;
                let mut ia = spliced.steps();
                let mut ib = w1.steps();
                for t in 1..=common {
                    s_a += ia.next().unwrap() as i64;
                    s_b += ib.next().unwrap() as i64;
                    xi_a += (s_a == 0) as u64;
                    xi_b += (s_b == 0) as u64;
                    if t == m {
                        row.push(xi_a.abs_diff(xi_b) as f64);
                        m *= 2;
                    }
                }
                zero_rows.push(row);
            }
            // level proxy vs walk2 at matched excursion counts
            let rho_n_s = rho_s[n as usize - 1];
            let rho_n_2 = return_times(&w2, w2.len()).rho[n as usize - 1];
            let mut worst = 0.0f64;
            for k in 1..=k_cap {
                let a = crate::walk::local_time(&spliced, k, rho_n_s) as i64
                    - crate::walk::local_time(&spliced, 0, rho_n_s) as i64;
                let b = crate::walk::local_time(&w2, k, rho_n_2) as i64
                    - crate::walk::local_time(&w2, 0, rho_n_2) as i64;
                worst = worst.max((a - b).abs() as f64);
            }
            level_errs.push(worst);
        }
        rho_medians.push(median(&mut rho_errs));
        level_medians.push(median(&mut level_errs));
    }
    let ns: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let rho_fit = fit_rate(&ns, &rho_medians)?;
    let width = zero_rows.iter().map(|r| r.len()).min().unwrap_or(0);
    if width < 3 {
        return Err(Error::InvalidParameter(
            "largest splice block too short for the zero-difference fit".into(),
        ));
    }
    let mut zero_medians = Vec::with_capacity(width);
    for j in 0..width {
        let mut col: Vec<f64> = zero_rows.iter().map(|r| r[j]).collect();
        zero_medians.push(median(&mut col));
    }
    let zero_ns: Vec<f64> = (0..width).map(|j| (64u64 << j) as f64).collect();
    // fit from the first nonzero median; leading zeros carry no slope
    // information and would wreck the log fit
    let first = zero_medians.iter().position(|&m| m > 0.0).unwrap_or(0);
    if width - first < 3 {
        return Err(Error::InvalidParameter(
            "zero-difference medians vanish on the measured range".into(),
        ));
    }
    let zero_fit = fit_rate(&zero_ns[first..], &zero_medians[first..])?;
    Ok(SpliceRates {
        rho_deformation: rho_fit,
        zero_diff: zero_fit,
        level_proxy_medians: level_medians,
    })
}
