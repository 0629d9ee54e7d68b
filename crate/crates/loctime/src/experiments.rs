//! Experiment drivers shared by the CLI, the runnable examples, and the
//! acceptance suite. Every replication draws from a derived stream
//! addressed by (experiment, replication), so results are reproducible
//! bit for bit for a given master seed, independent of worker count;
//! parallel loops collect in replication order before any reduction.

use crate::coupling::{
    self, embed_walk, eta_coupling_errors, CouplingReport, SheetCouplingParams,
};
use crate::excursion::{return_times, splice_walks, BlockSchedule};
use crate::gaussian::{
    audit_sup_inequality, build_sheet, g_covariance, g_sup_samples, sample_wiener, SupAudit,
    SupClock, TimeGrid,
};
use crate::ray_knight::{
    sample_t, scan_levels_capped, simulate_gw, verify_identities_from_stats, FirstExcursionLaw,
    IdentityRow,
};
use crate::rng::{exponential, RngStream};
use crate::stats::{
    audit_binomial_tail, audit_rho_tail, chi_square_test, chi_square_two_sample, fit_rate,
    ks_test, lil_tracker, median, EmpiricalDistribution, LilReport, TailAudit, TargetLaw,
    TestReport,
};
use crate::walk::{CappedStepGen, StepGen, StepSequence};
use crate::Result;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Default master seed for every experiment unless overridden.
pub const DEFAULT_SEED: u64 = 0x10c7_1401;

// ---------------------------------------------------------------------------
// identities
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct IdentitiesOutcome {
    pub walks: u32,
    pub n_upward: u64,
    pub k_max: i64,
    pub checks: u64,
    pub failures: u64,
    pub pass: bool,
    /// one row per failed check (empty on success)
    pub failed_rows: Vec<IdentityRow>,
}

/// Exact integer identity suite over `reps` random walks.
pub fn run_identities(reps: u32, n_upward: u64, k_max: i64, stream: &RngStream) -> IdentitiesOutcome {
    let sub = stream.child("identities");
    let results: Vec<(u64, Vec<IdentityRow>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let walk_stream = sub.child(rep);
            let stats = scan_levels_capped(n_upward, k_max, &walk_stream);
            let report = verify_identities_from_stats(&stats);
            let mut failed = Vec::new();
            for c in &report.checks {
                if !c.holds {
                    failed.push(IdentityRow {
                        path_seed: walk_stream.path_string(),
                        n: n_upward,
                        k: c.k,
                        identity: c.identity,
                        holds: false,
                    });
                }
            }
            (report.checks.len() as u64, failed)
        })
        .collect();
    let checks: u64 = results.iter().map(|(c, _)| c).sum();
    let failed_rows: Vec<IdentityRow> = results.into_iter().flat_map(|(_, f)| f).collect();
    IdentitiesOutcome {
        walks: reps,
        n_upward,
        k_max,
        checks,
        failures: failed_rows.len() as u64,
        pass: failed_rows.is_empty(),
        failed_rows,
    }
}

// ---------------------------------------------------------------------------
// laws: offspring chi-square, branching equivalence, first-excursion laws
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct OffspringOutcome {
    pub pooled: u64,
    pub report: TestReport,
}

/// Pool extracted T values across walks until `target` of them and test
/// against the geometric half law.
pub fn run_offspring(target: u64, stream: &RngStream) -> Result<OffspringOutcome> {
    let sub = stream.child("offspring");
    let k_max = 3i64;
    let per_walk = 40u64; // upward excursions per walk
    let chunk = 256u32;
    let mut counts = vec![0u64; 13];
    let mut pooled = 0u64;
    let mut batch = 0u32;
    while pooled < target {
        let results: Vec<Vec<u64>> = (0..chunk)
            .into_par_iter()
            .map(|i| {
                let stats = scan_levels_capped(per_walk, k_max, &sub.child(batch).child(i));
                let mut c = vec![0u64; 13];
                for ts in &stats.t_arrays {
                    for &t in ts {
                        c[(t.min(13) - 1) as usize] += 1;
                    }
                }
                c
            })
            .collect();
        for c in results {
            for (i, v) in c.into_iter().enumerate() {
                counts[i] += v;
                pooled += v;
            }
        }
        batch += 1;
    }
    let mut pmf: Vec<f64> = (1..=12).map(|j| 0.5f64.powi(j)).collect();
    pmf.push(0.5f64.powi(12));
    let report = chi_square_test(&counts, &pmf, 0.001)?;
    Ok(OffspringOutcome { pooled, report })
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchingOutcome {
    pub reps: u32,
    pub n_upward: u64,
    pub level: i64,
    pub report: TestReport,
}

/// Law of xi(k, rho_N+, up) from direct (height-censored) walks against the
/// Galton-Watson simulator, as a two-sample chi-square.
pub fn run_branching_equivalence(
    reps: u32,
    n_upward: u64,
    level: i64,
    stream: &RngStream,
) -> Result<BranchingOutcome> {
    let bins = (6 * n_upward) as usize;
    let walk_sub = stream.child("branching-walk");
    let walk_counts: Vec<u64> = {
        let partials: Vec<Vec<u64>> = (0..reps)
            .into_par_iter()
            .chunks(4096)
            .map(|chunk| {
                let mut c = vec![0u64; bins + 1];
                for rep in chunk {
                    let stats = scan_levels_capped(n_upward, level, &walk_sub.child(rep));
                    let z = stats.up[level as usize];
                    c[(z as usize).min(bins)] += 1;
                }
                c
            })
            .collect();
        let mut c = vec![0u64; bins + 1];
        for p in partials {
            for (i, v) in p.into_iter().enumerate() {
                c[i] += v;
            }
        }
        c
    };
    let mut gw_rng = stream.child("branching-gw").rng();
    let mut gw_counts = vec![0u64; bins + 1];
    for _ in 0..reps {
        let z = simulate_gw(n_upward, level as u32, &mut gw_rng).level(level as usize);
        gw_counts[(z as usize).min(bins)] += 1;
    }
    let report = chi_square_two_sample(&walk_counts, &gw_counts, 0.001)?;
    Ok(BranchingOutcome {
        reps,
        n_upward,
        level,
        report,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstExcursionOutcome {
    pub reps_per_level: u32,
    pub pmf_reports: Vec<(i64, TestReport)>,
    /// (k, j, empirical, theory, relative error) for audited survival cells
    pub survival_rows: Vec<(i64, u64, f64, f64, f64)>,
    pub survival_pass: bool,
}

/// xi(k, rho_1+) pmf against the excursion law for k in `levels`, and the
/// geometric survival of xi(k, rho_1) on cells with at least 1000 expected
/// hits within 5% relative error.
pub fn run_first_excursion(
    reps: u32,
    levels: &[i64],
    stream: &RngStream,
) -> Result<FirstExcursionOutcome> {
    let mut pmf_reports = Vec::new();
    let mut survival_rows = Vec::new();
    let mut survival_pass = true;
    for &k in levels {
        let law = FirstExcursionLaw::new(k)?;
        let sub = stream.child("first-exc").child(k);
        // one upward excursion per replication for the pmf; the same scan
        // also gives xi(k, rho_1) over single excursions of either sign
        let results: Vec<(u64, u64)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let walk_stream = sub.child(rep);
                // first upward excursion: one-level scan capped above k+1
                let stats = scan_levels_capped(1, k, &walk_stream);
                let up_plus = stats.visits[(k - 1) as usize];
                // a fresh single excursion of either sign for the rho_1 law
                let any = single_excursion_visits(k, &walk_stream.child("any"));
                (up_plus, any)
            })
            .collect();
        let cap = 40usize;
        let mut counts = vec![0u64; cap + 1];
        let mut any_counts = vec![0u64; cap + 1];
        for &(v, a) in &results {
            counts[(v as usize).min(cap)] += 1;
            any_counts[(a as usize).min(cap)] += 1;
        }
        let mut pmf: Vec<f64> = (0..cap as u64).map(|m| law.pmf(m)).collect();
        pmf.push((1.0 - pmf.iter().sum::<f64>()).max(0.0));
        pmf_reports.push((k, chi_square_test(&counts, &pmf, 0.001)?));
        // survival of xi(k, rho_1): P(>= j) on well-populated cells
        let n = reps as f64;
        for j in 1..=cap as u64 {
            let theory = law.any_excursion_survival(j);
            if theory * n < 1000.0 {
                break;
            }
            let hits = any_counts[(j as usize)..].iter().sum::<u64>() as f64;
            let emp = hits / n;
            let rel = (emp - theory).abs() / theory;
            if rel > 0.05 {
                survival_pass = false;
            }
            survival_rows.push((k, j, emp, theory, rel));
        }
    }
    Ok(FirstExcursionOutcome {
        reps_per_level: reps,
        pmf_reports,
        survival_rows,
        survival_pass,
    })
}

/// Visits to level k during one complete zero-excursion (either sign).
fn single_excursion_visits(k: i64, stream: &RngStream) -> u64 {
    let mut gen = CappedStepGen::new(stream, -1, k + 1);
    let mut s = 0i64;
    let mut visits = 0u64;
    loop {
        s += gen.next_step() as i64;
        if s == k {
            visits += 1;
        }
        if s == 0 {
            return visits;
        }
    }
}

// ---------------------------------------------------------------------------
// sheet moments (criterion 5)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct MomentProbe {
    pub k: u32,
    pub s: f64,
    pub l: u32,
    pub t: f64,
    pub empirical: f64,
    pub theory: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SheetMomentsOutcome {
    pub reps: u32,
    pub probes: Vec<MomentProbe>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// Empirical G moments on the probe grid (k, l <= k_max; s, t in probe
/// times) against the closed-form covariance, each within 3 SE.
pub fn run_sheet_moments(reps: u32, k_max: usize, stream: &RngStream) -> SheetMomentsOutcome {
    let times = [0.25f64, 0.5, 1.0];
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let sub = stream.child("sheet-moments");
    // accumulate sums and sums of squares of products per probe
    let mut probes: Vec<(u32, f64, u32, f64)> = Vec::new();
    for k in 1..=k_max as u32 {
        for l in k..=k_max as u32 {
            for &s in &times {
                for &t in &times {
                    if k == l && s > t {
                        continue;
                    }
                    probes.push((k, s, l, t));
                }
            }
        }
    }
    let acc: Vec<(f64, f64)> = {
        let partials: Vec<Vec<(f64, f64)>> = (0..reps)
            .into_par_iter()
            .chunks(8192)
            .map(|chunk| {
                let mut a = vec![(0.0f64, 0.0f64); probes.len()];
                for rep in chunk {
                    let mut rng = sub.child(rep).rng();
                    let sheet = build_sheet(k_max, grid, &mut rng);
                    let wstar = sample_wiener(grid, &mut rng);
                    // G(k, t_j) for all k at the probe indices
                    let g_at = |k: u32, t: f64| {
                        let j = grid.index_at(t);
                        sheet.value(k as usize, j) + sheet.value(k as usize - 1, j)
                            - wstar.values[j]
                    };
                    for (i, &(k, s, l, t)) in probes.iter().enumerate() {
                        let prod = g_at(k, s) * g_at(l, t);
                        a[i].0 += prod;
                        a[i].1 += prod * prod;
                    }
                }
                a
            })
            .collect();
        let mut a = vec![(0.0f64, 0.0f64); probes.len()];
        for p in partials {
            for (i, (x, y)) in p.into_iter().enumerate() {
                a[i].0 += x;
                a[i].1 += y;
            }
        }
        a
    };
    let n = reps as f64;
    let mut rows = Vec::with_capacity(probes.len());
    let mut max_abs_z: f64 = 0.0;
    for (&(k, s, l, t), &(sum, sumsq)) in probes.iter().zip(&acc) {
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        let se = (var / n).sqrt().max(1e-12);
        let theory = g_covariance(k, s, l, t);
        let z = (mean - theory) / se;
        max_abs_z = max_abs_z.max(z.abs());
        rows.push(MomentProbe {
            k,
            s,
            l,
            t,
            empirical: mean,
            theory,
            z,
        });
    }
    SheetMomentsOutcome {
        reps,
        probes: rows,
        max_abs_z,
        pass: max_abs_z <= 3.0,
    }
}

// ---------------------------------------------------------------------------
// limits: the two distributional criteria at fixed n (criteria 6, 7)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct LimitsOutcome {
    pub n: u64,
    pub reps: u32,
    pub dropped_zero_xi0: u32,
    pub product_law: TestReport,
    pub self_normalized: TestReport,
    pub product_statistics: Vec<f64>,
    pub normalized_statistics: Vec<f64>,
}

/// One streaming pass per replication collecting xi(0,n), xi(k1,n), xi(k2,n).
fn level_counts(n: u64, k1: i64, k2: i64, stream: &RngStream) -> (u64, u64, u64) {
    let mut rng = stream.rng();
    let mut s = 0i64;
    let (mut x0, mut xa, mut xb) = (0u64, 0u64, 0u64);
    let mut remaining = n;
    while remaining > 0 {
        let mut w: u64 = rng.gen();
        let take = remaining.min(64) as u32;
        for _ in 0..take {
            s += ((w & 1) as i64) * 2 - 1;
            w >>= 1;
            x0 += (s == 0) as u64;
            xa += (s == k1) as u64;
            xb += (s == k2) as u64;
        }
        remaining -= take as u64;
    }
    (x0, xa, xb)
}

/// Centered local-time limit laws at fixed n: the product law for
/// (xi(k1,n)-xi(0,n))/((4k1-2)^{1/2} n^{1/4}) and the standard normal for
/// (xi(k2,n)-xi(0,n))/((4k2-2)^{1/2} xi(0,n)^{1/2}) on {xi(0,n) > 0}.
pub fn run_limits(
    n: u64,
    reps: u32,
    k1: i64,
    k2: i64,
    ks_threshold: f64,
    stream: &RngStream,
) -> Result<LimitsOutcome> {
    let sub = stream.child("limits");
    let counts: Vec<(u64, u64, u64)> = (0..reps)
        .into_par_iter()
        .map(|rep| level_counts(n, k1, k2, &sub.child(rep)))
        .collect();
    let norm1 = (4.0 * k1 as f64 - 2.0).sqrt() * (n as f64).powf(0.25);
    let mut product_statistics = Vec::with_capacity(reps as usize);
    let mut normalized_statistics = Vec::new();
    let mut dropped = 0u32;
    for &(x0, xa, xb) in &counts {
        product_statistics.push((xa as f64 - x0 as f64) / norm1);
        if x0 > 0 {
            let norm2 = (4.0 * k2 as f64 - 2.0).sqrt() * (x0 as f64).sqrt();
            normalized_statistics.push((xb as f64 - x0 as f64) / norm2);
        } else {
            dropped += 1;
        }
    }
    let a1 = ks_test(
        &EmpiricalDistribution::new(product_statistics.clone())?,
        &TargetLaw::ProductLaw,
        ks_threshold,
    )?;
    let a2 = ks_test(
        &EmpiricalDistribution::new(normalized_statistics.clone())?,
        &TargetLaw::StandardNormal,
        ks_threshold,
    )?;
    Ok(LimitsOutcome {
        n,
        reps,
        dropped_zero_xi0: dropped,
        product_law: a1,
        self_normalized: a2,
        product_statistics,
        normalized_statistics,
    })
}

// ---------------------------------------------------------------------------
// couple-eta (criteria 8, 9)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SkorokhodChecksOutcome {
    pub marks_ks: TestReport,
    pub exit_mean: f64,
    pub exit_mean_z: f64,
    pub exit_var: f64,
    pub exit_var_z: f64,
    pub laplace: f64,
    pub laplace_z: f64,
    pub tau_ratio: f64,
    pub pass: bool,
}

/// Criterion 8: eta marks against Exponential(1), exit-time moments, and
/// the Laplace probe at s = 1/2.
pub fn run_skorokhod_checks(
    walk_n: u64,
    mark_samples: usize,
    exit_samples: u32,
    stream: &RngStream,
) -> Result<SkorokhodChecksOutcome> {
    // pooled marks from embedded walks
    let sub = stream.child("skorokhod");
    let mut pooled = Vec::with_capacity(mark_samples);
    let mut rep = 0u32;
    let mut tau_ratio = 0.0;
    while pooled.len() < mark_samples {
        let (walk, marks) = embed_walk(walk_n, &sub.child("embed").child(rep));
        tau_ratio = walk.times.last().unwrap() / walk_n as f64;
        pooled.extend(marks.marks);
        rep += 1;
    }
    pooled.truncate(mark_samples);
    let marks_ks = ks_test(
        &EmpiricalDistribution::new(pooled)?,
        &TargetLaw::Exponential1,
        0.01,
    )?;
    // exit-time law moments
    let mut rng = sub.child("exit").rng();
    let nf = exit_samples as f64;
    let (mut sum, mut sumsq, mut sum4, mut lap) = (0.0f64, 0.0, 0.0, 0.0);
    for _ in 0..exit_samples {
        let t = crate::barrier::sample_exit_time(&mut rng);
        sum += t;
        sumsq += t * t;
        sum4 += (t - 1.0).powi(4);
        lap += (-t / 2.0).exp();
    }
    let mean = sum / nf;
    let var = sumsq / nf - mean * mean;
    let mean_se = (2.0 / 3.0 / nf).sqrt();
    // SE of the variance estimator from the empirical fourth moment
    let var_se = ((sum4 / nf - var * var).max(0.0) / nf).sqrt();
    let lap_mean = lap / nf;
    let lap_target = 1.0 / 1f64.cosh();
    let lap_se = (0.25 / nf).sqrt();
    let exit_mean_z = (mean - 1.0) / mean_se;
    let exit_var_z = (var - 2.0 / 3.0) / var_se;
    let laplace_z = (lap_mean - lap_target) / lap_se;
    let pass = marks_ks.pass
        && exit_mean_z.abs() <= 3.0
        && exit_var_z.abs() <= 3.0
        && laplace_z.abs() <= 3.0;
    Ok(SkorokhodChecksOutcome {
        marks_ks,
        exit_mean: mean,
        exit_mean_z,
        exit_var: var,
        exit_var_z,
        laplace: lap_mean,
        laplace_z,
        tau_ratio,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaRateOutcome {
    pub report: CouplingReport,
    pub medians_over_sqrt_n: Vec<f64>,
    pub shrinking_pass: bool,
}

/// Criterion 9: fitted exponent of |xi(0,n) - sum eta_i| over a dyadic grid.
pub fn run_eta_rate(
    log2_min: u32,
    log2_max: u32,
    reps: u32,
    stream: &RngStream,
) -> Result<EtaRateOutcome> {
    let grid: Vec<u64> = (log2_min..=log2_max).map(|j| 1u64 << j).collect();
    let sub = stream.child("eta-rate");
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let walk = StepGen::new(&sub.child(rep).child("walk"));
            let mut mark_rng = sub.child(rep).child("marks").rng();
            eta_coupling_errors(walk, || exponential(&mut mark_rng), &grid)
        })
        .collect();
    let mut medians = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let mut col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        medians.push(median(&mut col));
    }
    let ns: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let fit = fit_rate(&ns, &medians)?;
    let medians_over_sqrt_n: Vec<f64> = medians
        .iter()
        .zip(&ns)
        .map(|(m, n)| m / n.sqrt())
        .collect();
    // e(n)/sqrt(n) must shrink across the grid (trend check on medians)
    let shrinking_pass =
        medians_over_sqrt_n.last().unwrap() < &(0.5 * medians_over_sqrt_n[0]);
    Ok(EtaRateOutcome {
        report: CouplingReport::from_fit("couple-eta", &fit, String::new()),
        medians_over_sqrt_n,
        shrinking_pass,
    })
}

// ---------------------------------------------------------------------------
// couple-sheet (criterion 10)
// ---------------------------------------------------------------------------

pub fn run_sheet_rate(
    log2_min: u32,
    log2_max: u32,
    k_cap: usize,
    reps: u32,
    stream: &RngStream,
) -> Result<CouplingReport> {
    let params = SheetCouplingParams {
        n_grid: (log2_min..=log2_max).map(|j| 1u64 << j).collect(),
        k_cap,
        reps,
    };
    coupling::sheet_coupling_report(&params, stream)
}

// ---------------------------------------------------------------------------
// splice (criterion 11)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SpliceValidityOutcome {
    pub output_steps: u64,
    pub sign_report: TestReport,
    pub lag_report: TestReport,
    pub identity_zero_error: bool,
    pub pass: bool,
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

/// Criterion 11: the spliced walk passes fair-coin and lag-one independence
/// chi-squares over its first `test_steps` steps, and the identity splice
/// reproduces walk1 exactly.
pub fn run_splice_validity(
    levels: u32,
    test_steps: u64,
    stream: &RngStream,
) -> Result<SpliceValidityOutcome> {
    let sch = BlockSchedule::new(levels);
    let want = sch.total_excursions();
    let w1 = grow_walk_until_returns(&stream.child("splice-w1"), want);
    let w2 = grow_walk_until_returns(&stream.child("splice-w2"), want);
    let spliced = splice_walks(&w1, &w2, &sch)?;
    let m = test_steps.min(spliced.len());
    // fair-coin chi-square on sign counts
    let ups = spliced.steps().take(m as usize).filter(|&x| x == 1).count() as u64;
    let sign_report = chi_square_test(&[ups, m - ups], &[0.5, 0.5], 0.001)?;
    // lag-one independence on non-overlapping pairs
    let mut cells = [0u64; 4];
    let mut iter = spliced.steps().take(m as usize);
    while let (Some(a), Some(b)) = (iter.next(), iter.next()) {
        let idx = ((a == 1) as usize) * 2 + ((b == 1) as usize);
        cells[idx] += 1;
    }
    let lag_report = chi_square_test(&cells.to_vec(), &[0.25, 0.25, 0.25, 0.25], 0.001)?;
    // identity splice: bytewise-equal prefix
    let small = BlockSchedule::new(5);
    let wi = grow_walk_until_returns(&stream.child("splice-id"), small.total_excursions());
    let idsplice = splice_walks(&wi, &wi, &small)?;
    let rho_last = return_times(&wi, wi.len()).rho[small.total_excursions() as usize - 1];
    let identity_zero_error = idsplice.len() == rho_last
        && idsplice.steps().zip(wi.steps()).all(|(a, b)| a == b);
    let pass = sign_report.pass && lag_report.pass && identity_zero_error;
    Ok(SpliceValidityOutcome {
        output_steps: spliced.len(),
        sign_report,
        lag_report,
        identity_zero_error,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpliceRatesOutcome {
    pub rho_deformation: CouplingReport,
    pub zero_diff: CouplingReport,
    pub level_proxy_medians: Vec<f64>,
    pub rho_pass: bool,
    pub zero_pass: bool,
}

/// Splice deformation rates: max_i |rho_i - rho^(1)_i| fitted exponent in N
/// (<= 1.75; theory 5/3) and the zero local-time difference exponent in n
/// (< 0.5).
pub fn run_splice_rates(
    log2_min: u32,
    log2_max: u32,
    reps: u32,
    stream: &RngStream,
) -> Result<SpliceRatesOutcome> {
    let grid: Vec<u64> = (log2_min..=log2_max).map(|j| 1u64 << j).collect();
    let rates = coupling::splice_coupling_report(&grid, reps, 3, stream)?;
    let rho = CouplingReport::from_fit("splice-rho", &rates.rho_deformation, String::new());
    let zero = CouplingReport::from_fit("splice-zero", &rates.zero_diff, String::new());
    let rho_pass = rho.exponent <= 1.75;
    let zero_pass = zero.exponent < 0.5;
    Ok(SpliceRatesOutcome {
        rho_deformation: rho,
        zero_diff: zero,
        level_proxy_medians: rates.level_proxy_medians,
        rho_pass,
        zero_pass,
    })
}

// ---------------------------------------------------------------------------
// audits (criterion 12)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct AuditsOutcome {
    pub rho_tail: TailAudit,
    pub binomial: TailAudit,
    pub u_sums: TailAudit,
    pub five_n: TailAudit,
    pub g_sup_fixed_slope_pass: bool,
    pub g_sup_fixed_required: f64,
    pub g_sup_fixed_slope: f64,
    pub g_sup_eta_slope_pass: bool,
    pub g_sup_eta_required: f64,
    pub g_sup_eta_slope: f64,
    pub exp_sums: TailAudit,
    pub violations: usize,
    pub pass: bool,
}

/// rho_N right-censored at the largest audited threshold; exact for the
/// audited survival probabilities.
fn rho_n_censored(n_returns: u64, cap: u64, stream: &RngStream) -> u64 {
    let mut gen = StepGen::new(stream);
    let mut s = 0i64;
    let mut zeros = 0u64;
    for t in 1..=cap {
        s += gen.next_step() as i64;
        if s == 0 {
            zeros += 1;
            if zeros == n_returns {
                return t;
            }
        }
    }
    cap
}

pub fn run_audits(reps: u32, stream: &RngStream) -> Result<AuditsOutcome> {
    // return-time tail: P(rho_N >= u N^2) <= 1/sqrt(u), probed at N = 10
    let n_returns = 10u64;
    let u_grid = [1.0, 2.25, 4.0, 9.0, 16.0, 25.0];
    let cap = (25.0 * (n_returns * n_returns) as f64) as u64;
    let rho_sub = stream.child("rho-tail");
    let rho_samples: Vec<u64> = (0..reps)
        .into_par_iter()
        .map(|rep| rho_n_censored(n_returns, cap, &rho_sub.child(rep)))
        .collect();
    let rho_tail = audit_rho_tail(&rho_samples, n_returns, &u_grid, &[])?;

    // binomial concentration of the upward-excursion count, N = 100
    let n_trials = 100u64;
    let mut bin_rng = stream.child("binomial").rng();
    let nu_samples: Vec<u64> = (0..reps)
        .map(|_| {
            let mut heads = 0u64;
            let mut left = n_trials;
            while left > 0 {
                let w: u64 = bin_rng.gen();
                let take = left.min(64);
                heads += (w & ((1u128 << take) as u64).wrapping_sub(1)).count_ones() as u64;
                left -= take;
            }
            heads
        })
        .collect();
    let binomial = audit_binomial_tail(&nu_samples, n_trials, &[0.0, 5.0, 10.0, 20.0, 30.0, 40.0]);

    // centered offspring maxima: max |U(i)| over i <= n against 2 exp(-z^2/(8n))
    let n_u = 1000u64;
    let u_sub = stream.child("u-sums");
    let maxes: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = u_sub.child(rep).rng();
            let mut acc = 0i64;
            let mut worst = 0i64;
            for _ in 0..n_u {
                acc += sample_t(&mut rng) as i64 - 2;
                worst = worst.max(acc.abs());
            }
            worst as f64
        })
        .collect();
    let sqrt_n = (n_u as f64).sqrt();
    let z_grid: Vec<f64> = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        .iter()
        .map(|c| c * sqrt_n)
        .collect();
    let hits: Vec<u64> = z_grid
        .iter()
        .map(|&z| maxes.iter().filter(|&&m| m > z).count() as u64)
        .collect();
    let u_sums = TailAudit::from_hits(
        "u_sums_max",
        &z_grid,
        &hits,
        maxes.len() as u64,
        |z| 2.0 * (-z * z / (8.0 * n_u as f64)).exp(),
        |_| false,
    );

    // level blow-up bound: P(max_{k<=K} xi(k, rho_N+) >= 5N) <= K exp(-N/(4K))
    let five_sub = stream.child("five-n");
    let probes = [(40u64, 2i64), (20, 3)];
    let mut five_rows_u = Vec::new();
    let mut five_hits = Vec::new();
    for &(n_up, k_cap) in &probes {
        let hits: u64 = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let stats = scan_levels_capped(n_up, k_cap, &five_sub.child(n_up).child(rep));
                let max_xi = stats.visits.iter().max().copied().unwrap_or(0);
                (max_xi >= 5 * n_up) as u64
            })
            .sum();
        five_rows_u.push(5.0 * n_up as f64);
        five_hits.push(hits);
    }
    let five_n = {
        let bounds: Vec<f64> = probes
            .iter()
            .map(|&(n_up, k_cap)| k_cap as f64 * (-(n_up as f64) / (4.0 * k_cap as f64)).exp())
            .collect();
        let mut audit = TailAudit::from_hits(
            "xi_five_n",
            &five_rows_u,
            &five_hits,
            reps as u64,
            |_| 1.0,
            |_| false,
        );
        for (row, b) in audit.rows.iter_mut().zip(bounds) {
            row.bound = b;
            row.violated = row.empirical - row.ci_half_width > b;
        }
        audit.violations = audit.rows.iter().filter(|r| r.violated && !r.tight).count();
        audit
    };

    // G sup-tail decay slopes for both clocks
    let sup_reps = 20_000u32;
    let (alpha, k_cap, t_hor) = (1.5, 3usize, 1.0);
    let fixed =
        sup_slope_audit(sup_reps, alpha, k_cap, t_hor, SupClock::FixedTime, stream)?;
    let eta = sup_slope_audit(sup_reps, alpha, k_cap, t_hor, SupClock::LocalTime, stream)?;

    // exponential partial-sum concentration (explicit constant)
    let n_e = 400u64;
    let e_sub = stream.child("exp-sums");
    let exp_maxes: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = e_sub.child(rep).rng();
            let mut acc = 0.0f64;
            let mut worst = 0.0f64;
            for _ in 0..n_e {
                acc += exponential(&mut rng) - 1.0;
                worst = worst.max(acc.abs());
            }
            worst
        })
        .collect();
    let sqrt_ne = (n_e as f64).sqrt();
    let e_grid: Vec<f64> = [3.0, 4.0, 5.0, 6.0, 8.0].iter().map(|c| c * sqrt_ne).collect();
    let e_hits: Vec<u64> = e_grid
        .iter()
        .map(|&z| exp_maxes.iter().filter(|&&m| m > z).count() as u64)
        .collect();
    let exp_sums = TailAudit::from_hits(
        "exp_sums_max",
        &e_grid,
        &e_hits,
        exp_maxes.len() as u64,
        |z| 2.0 * (-z * z / (8.0 * n_e as f64)).exp(),
        |_| false,
    );

    let violations = rho_tail.violations
        + binomial.violations
        + u_sums.violations
        + five_n.violations
        + exp_sums.violations;
    let pass = violations == 0 && fixed.slope_pass && eta.slope_pass;
    Ok(AuditsOutcome {
        rho_tail,
        binomial,
        u_sums,
        five_n,
        g_sup_fixed_slope_pass: fixed.slope_pass,
        g_sup_fixed_required: fixed.required_slope,
        g_sup_fixed_slope: fixed.slope.slope,
        g_sup_eta_slope_pass: eta.slope_pass,
        g_sup_eta_required: eta.required_slope,
        g_sup_eta_slope: eta.slope.slope,
        exp_sums,
        violations,
        pass,
    })
}

fn sup_slope_audit(
    reps: u32,
    alpha: f64,
    k_cap: usize,
    t: f64,
    clock: SupClock,
    stream: &RngStream,
) -> Result<SupAudit> {
    let label = match clock {
        SupClock::FixedTime => "g-sup-fixed",
        SupClock::LocalTime => "g-sup-eta",
    };
    let sups = g_sup_samples(reps, k_cap, t, 256, clock, &stream.child(label));
    let mut sorted = sups.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let u_grid: Vec<f64> = (50..100)
        .step_by(5)
        .map(|p| sorted[(sorted.len() * p / 100).min(sorted.len() - 1)])
        .collect();
    audit_sup_inequality(&sups, alpha, k_cap, t, &u_grid, clock)
}

// ---------------------------------------------------------------------------
// lil (criterion 13, diagnostic only)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct LilOutcome {
    pub n: u64,
    pub self_normalized: LilReport,
    pub quarter_power: LilReport,
    pub return_time_form: LilReport,
}

/// One long walk; running sups of the three iterated-logarithm statistics.
/// Reported only: a limsup is not observable at finite scale.
pub fn run_lil(n: u64, stream: &RngStream) -> LilOutcome {
    const K_TRACK: usize = 8;
    let mut gen = StepGen::new(&stream.child("lil"));
    let mut s = 0i64;
    let mut xi = [0u64; K_TRACK + 1]; // xi[k] = xi(k, t)
    let mut sn_sup: f64 = 0.0;
    let mut qp_sup: f64 = 0.0;
    let mut rt_sup: f64 = 0.0;
    let start = 200u64;
    for t in 1..=n {
        s += gen.next_step() as i64;
        if (0..=K_TRACK as i64).contains(&s) {
            xi[s as usize] += 1;
            if t >= start && (s == 0 || s == 1) && xi[0] > 0 {
                let centered = xi[1] as f64 - xi[0] as f64;
                let loglog = (t as f64).ln().ln();
                let sn = centered.abs()
                    / (2f64.sqrt() * (xi[0] as f64 * loglog).sqrt().max(1e-12));
                let qp = centered.abs()
                    / (2f64.sqrt() * (t as f64).powf(0.25) * loglog.powf(0.75));
                sn_sup = sn_sup.max(sn);
                qp_sup = qp_sup.max(qp);
            }
            if s == 0 && xi[0] >= 10 {
                let n_ret = xi[0];
                let k_n = ((n_ret as f64).powf(0.2).floor() as usize).clamp(1, K_TRACK);
                let worst = (1..=k_n)
                    .map(|k| (xi[k] as f64 - n_ret as f64).abs())
                    .fold(0.0f64, f64::max);
                let denom = (4.0 * k_n as f64 - 2.0).sqrt()
                    * (n_ret as f64 * (n_ret as f64).ln().ln()).sqrt();
                rt_sup = rt_sup.max(worst / denom);
            }
        }
    }
    let band = (0.3, 1.3);
    let sqrt2 = std::f64::consts::SQRT_2;
    let qp_const = (2.0 / 3.0) * 6f64.powf(0.25);
    LilOutcome {
        n,
        self_normalized: lil_tracker(
            "self-normalized-clock",
            [(n as f64, sn_sup)],
            sqrt2,
            band,
        ),
        quarter_power: lil_tracker(
            "quarter-power-clock",
            [(n as f64, qp_sup)],
            qp_const,
            band,
        ),
        return_time_form: lil_tracker(
            "return-time-clock",
            [(n as f64, rt_sup)],
            sqrt2,
            band,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_experiment_small() {
        let stream = RngStream::new(DEFAULT_SEED).child("t");
        let out = run_identities(200, 30, 6, &stream);
        assert!(out.pass, "{} failures", out.failures);
        assert_eq!(out.checks, 200 * 6 * 3);
    }

    #[test]
    fn offspring_experiment_small() {
        let stream = RngStream::new(DEFAULT_SEED).child("t2");
        let out = run_offspring(50_000, &stream).unwrap();
        assert!(out.report.pass, "p = {}", out.report.p_value);
        assert!(out.pooled >= 50_000);
    }

    #[test]
    fn first_excursion_experiment_small() {
        let stream = RngStream::new(DEFAULT_SEED).child("t3");
        let out = run_first_excursion(150_000, &[1, 2], &stream).unwrap();
        for (k, report) in &out.pmf_reports {
            assert!(report.pass, "k = {}: p = {}", k, report.p_value);
        }
        assert!(out.survival_pass);
        assert!(!out.survival_rows.is_empty());
    }

    #[test]
    fn limits_experiment_tiny() {
        // distributional sanity at small n with a loose threshold
        let stream = RngStream::new(DEFAULT_SEED).child("t4");
        let out = run_limits(10_000, 2_000, 1, 2, 0.08, &stream).unwrap();
        assert!(out.product_law.pass, "product ks = {}", out.product_law.statistic);
        assert!(out.self_normalized.pass, "normalized ks = {}", out.self_normalized.statistic);
    }

    #[test]
    fn lil_tracker_runs() {
        let stream = RngStream::new(DEFAULT_SEED).child("t5");
        let out = run_lil(2_000_000, &stream);
        assert!(out.self_normalized.running_sup > 0.0);
        assert!(out.return_time_form.running_sup > 0.0);
    }
}
