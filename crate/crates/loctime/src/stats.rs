//! Goodness-of-fit and inequality-audit machinery: ECDFs, KS and chi-square
//! tests, the product limit law U*sqrt(|V|) via adaptive quadrature, tail
//! bound auditors, log-log rate fits, and the bounded-tracking diagnostic
//! used for iterated-logarithm statistics.

use crate::{Error, Result};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use crate::special::erfc;

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// P(U * sqrt(|V|) <= x) for independent standard normals U, V, computed as
/// the mixture integral over |V| mapped to a finite interval by v = tan(t).
/// Absolute error below 1e-10.
pub fn product_law_cdf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    if x < 0.0 {
        return 1.0 - product_law_cdf(-x);
    }
    let integrand = |t: f64| -> f64 {
        let c = t.cos();
        if c <= 1e-300 {
            return 0.0;
        }
        let v = t.tan();
        if v <= 0.0 {
            return 2.0 * normal_pdf(0.0) * 0.5;
        }
        let sec2 = 1.0 / (c * c);
        2.0 * normal_pdf(v) * normal_cdf(x / v.sqrt()) * sec2
    };
    adaptive_simpson(&integrand, 0.0, std::f64::consts::FRAC_PI_2, 5e-11).clamp(0.0, 1.0)
}

/// Target laws the experiments test against.
#[derive(Clone, Debug)]
pub enum TargetLaw {
    StandardNormal,
    HalfNormal,
    Exponential1,
    /// P(j) = 2^{-j}, j >= 1 (discrete; route to chi-square)
    GeometricHalf,
    /// U * sqrt(|V|)
    ProductLaw,
    /// piecewise-linear CDF through the given (x, F(x)) knots
    Tabulated(Vec<(f64, f64)>),
}

impl TargetLaw {
    pub fn is_discrete(&self) -> bool {
        matches!(self, TargetLaw::GeometricHalf)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            TargetLaw::StandardNormal => normal_cdf(x),
            TargetLaw::HalfNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    2.0 * normal_cdf(x) - 1.0
                }
            }
            TargetLaw::Exponential1 => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-x).exp()
                }
            }
            TargetLaw::GeometricHalf => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0 - 0.5f64.powi(x.floor() as i32)
                }
            }
            TargetLaw::ProductLaw => product_law_cdf(x),
            TargetLaw::Tabulated(knots) => {
                if knots.is_empty() {
                    return 0.0;
                }
                if x <= knots[0].0 {
                    return knots[0].1;
                }
                if x >= knots[knots.len() - 1].0 {
                    return knots[knots.len() - 1].1;
                }
                let i = knots.partition_point(|k| k.0 <= x);
                let (x0, f0) = knots[i - 1];
                let (x1, f1) = knots[i];
                f0 + (f1 - f0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Sorted sample values with the usual right-continuous ECDF.
#[derive(Clone, Debug)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("samples contain NaN".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// sup_x |ECDF(x) - F(x)|, evaluated at the jump points.
    pub fn ks_statistic(&self, law: &TargetLaw) -> f64 {
        let n = self.values.len() as f64;
        let mut sup: f64 = 0.0;
        for (i, &x) in self.values.iter().enumerate() {
            let f = law.cdf(x);
            sup = sup.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
        }
        sup
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TestKind {
    KolmogorovSmirnov,
    ChiSquare,
    ChiSquareTwoSample,
}

/// Outcome of one statistical test with its frozen threshold.
#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub kind: TestKind,
    pub statistic: f64,
    /// KS distance bound, or the chi-square p-value floor.
    pub threshold: f64,
    pub p_value: f64,
    pub pass: bool,
    pub sample_size: u64,
    pub seed: String,
}

/// One-sample KS test against a continuous law at a frozen distance
/// threshold. Discrete laws are rejected; use chi-square for those.
pub fn ks_test(
    samples: &EmpiricalDistribution,
    law: &TargetLaw,
    threshold: f64,
) -> Result<TestReport> {
    if law.is_discrete() {
        return Err(Error::DiscreteLawForKs);
    }
    if samples.len() < 100 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let statistic = samples.ks_statistic(law);
    Ok(TestReport {
        kind: TestKind::KolmogorovSmirnov,
        statistic,
        threshold,
        p_value: f64::NAN,
        pass: statistic <= threshold,
        sample_size: samples.len() as u64,
        seed: String::new(),
    })
}

/// Merge trailing bins (counts and probabilities) until every expected
/// count reaches `min_expected`.
fn merge_tail(counts: &[u64], pmf: &[f64], total: f64, min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut obs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mut exp: Vec<f64> = pmf.iter().map(|&p| p * total).collect();
    // repeatedly merge any deficient bin into its smaller neighbour;
    // decisions depend only on expected counts, never on observations
    while exp.len() > 1 {
        let Some(i) = exp.iter().position(|&e| e < min_expected) else {
            break;
        };
        let j = if i == 0 {
            1
        } else if i == exp.len() - 1 || exp[i - 1] <= exp[i + 1] {
            i - 1
        } else {
            i + 1
        };
        exp[j] += exp[i];
        obs[j] += obs[i];
        exp.remove(i);
        obs.remove(i);
    }
    (obs, exp)
}

/// Pearson chi-square of observed bin counts against a pmf, with tail bins
/// merged until every expected count is at least 5. `level` is the p-value
/// floor: the test passes when p >= level.
pub fn chi_square_test(counts: &[u64], pmf: &[f64], level: f64) -> Result<TestReport> {
    if counts.len() != pmf.len() || counts.is_empty() {
        return Err(Error::DegenerateBinning(
            "counts and pmf must have equal nonzero length".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    let mass: f64 = pmf.iter().sum();
    if !(0.999..=1.001).contains(&mass) {
        return Err(Error::DegenerateBinning(format!(
            "pmf mass {} is not 1; include the tail in the last bin",
            mass
        )));
    }
    let (obs, exp) = merge_tail(counts, pmf, total as f64, 5.0);
    if exp.len() < 2 {
        return Err(Error::DegenerateBinning(
            "fewer than two bins left after merging".into(),
        ));
    }
    if exp.iter().any(|&e| e < 5.0) {
        return Err(Error::DegenerateBinning(
            "expected count below 5 after merging".into(),
        ));
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (exp.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(statistic);
    Ok(TestReport {
        kind: TestKind::ChiSquare,
        statistic,
        threshold: level,
        p_value,
        pass: p_value >= level,
        sample_size: total,
        seed: String::new(),
    })
}

/// Two-sample chi-square homogeneity test on shared bins.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], level: f64) -> Result<TestReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DegenerateBinning(
            "samples must share a nonzero binning".into(),
        ));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let total = na + nb;
    // merge any bin whose pooled expected count misses the floor in either
    // row into its smaller neighbour
    let mut cols: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64, y as f64))
        .collect();
    let expected_ok = |col: &(f64, f64)| {
        let colsum = col.0 + col.1;
        colsum * na / total >= 5.0 && colsum * nb / total >= 5.0
    };
    while cols.len() > 1 {
        let Some(i) = cols.iter().position(|c| !expected_ok(c)) else {
            break;
        };
        let sum = |c: &(f64, f64)| c.0 + c.1;
        let j = if i == 0 {
            1
        } else if i == cols.len() - 1 || sum(&cols[i - 1]) <= sum(&cols[i + 1]) {
            i - 1
        } else {
            i + 1
        };
        cols[j].0 += cols[i].0;
        cols[j].1 += cols[i].1;
        cols.remove(i);
    }
    if cols.len() < 2 || cols.iter().any(|c| !expected_ok(c)) {
        return Err(Error::DegenerateBinning(
            "two-sample bins too sparse after merging".into(),
        ));
    }
    let mut statistic = 0.0;
    for &(x, y) in &cols {
        let colsum = x + y;
        let ea = colsum * na / total;
        let eb = colsum * nb / total;
        statistic += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    let df = (cols.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(statistic);
    Ok(TestReport {
        kind: TestKind::ChiSquareTwoSample,
        statistic,
        threshold: level,
        p_value,
        pass: p_value >= level,
        sample_size: (na + nb) as u64,
        seed: String::new(),
    })
}

/// One row of a tail-inequality audit.
#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub u: f64,
    pub empirical: f64,
    pub bound: f64,
    pub ci_half_width: f64,
    pub violated: bool,
    pub tight: bool,
}

/// Result of auditing one inequality across a u-grid. A row is violated
/// only when the empirical survival exceeds the bound by more than the 99%
/// Monte Carlo confidence half-width; rows marked tight (exact-equality
/// probes) are excluded from the violation count.
#[derive(Clone, Debug, Serialize)]
pub struct TailAudit {
    pub name: String,
    pub sample_size: u64,
    pub rows: Vec<TailRow>,
    pub violations: usize,
}

impl TailAudit {
    /// Build an audit from exceedance counts. `hits[i]` out of `n` samples
    /// exceeded `u_grid[i]`; `bound` maps u to the analytic bound.
    pub fn from_hits(
        name: impl Into<String>,
        u_grid: &[f64],
        hits: &[u64],
        n: u64,
        bound: impl Fn(f64) -> f64,
        tight: impl Fn(f64) -> bool,
    ) -> Self {
        assert_eq!(u_grid.len(), hits.len());
        let mut rows = Vec::with_capacity(u_grid.len());
        for (&u, &h) in u_grid.iter().zip(hits) {
            let p = h as f64 / n as f64;
            let ci = 2.576 * (p * (1.0 - p) / n as f64).sqrt();
            let b = bound(u);
            let is_tight = tight(u);
            rows.push(TailRow {
                u,
                empirical: p,
                bound: b,
                ci_half_width: ci,
                violated: p - ci > b,
                tight: is_tight,
            });
        }
        let violations = rows.iter().filter(|r| r.violated && !r.tight).count();
        TailAudit {
            name: name.into(),
            sample_size: n,
            rows,
            violations,
        }
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "u,empirical,bound,ci,violated,tight")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.u, r.empirical, r.bound, r.ci_half_width, r.violated, r.tight
            )?;
        }
        Ok(())
    }
}

/// Empirical P(rho_N >= u N^2) against the 1/sqrt(u) bound. Samples may be
/// right-censored at any value >= max(u) * N^2 without biasing the audit.
pub fn audit_rho_tail(
    rho_samples: &[u64],
    n_returns: u64,
    u_grid: &[f64],
    tight_us: &[f64],
) -> Result<TailAudit> {
    if u_grid.iter().any(|&u| u < 1.0) {
        return Err(Error::InvalidParameter("rho tail audit needs u >= 1".into()));
    }
    if rho_samples.is_empty() {
        return Err(Error::TooFewForTail("no rho samples".into()));
    }
    let n2 = (n_returns * n_returns) as f64;
    let hits: Vec<u64> = u_grid
        .iter()
        .map(|&u| {
            rho_samples
                .iter()
                .filter(|&&r| r as f64 >= u * n2)
                .count() as u64
        })
        .collect();
    Ok(TailAudit::from_hits(
        format!("rho_tail_N{}", n_returns),
        u_grid,
        &hits,
        rho_samples.len() as u64,
        |u| 1.0 / u.sqrt(),
        |u| tight_us.iter().any(|&t| (t - u).abs() < 1e-12),
    ))
}

/// Empirical P(|2 nu_N - N| >= u) against 2 exp(-u^2 / (2N)).
pub fn audit_binomial_tail(nu_samples: &[u64], n_trials: u64, u_grid: &[f64]) -> TailAudit {
    let hits: Vec<u64> = u_grid
        .iter()
        .map(|&u| {
            nu_samples
                .iter()
                .filter(|&&nu| ((2 * nu) as i64 - n_trials as i64).unsigned_abs() as f64 >= u)
                .count() as u64
        })
        .collect();
    TailAudit::from_hits(
        format!("binomial_tail_N{}", n_trials),
        u_grid,
        &hits,
        nu_samples.len() as u64,
        |u| 2.0 * (-u * u / (2.0 * n_trials as f64)).exp(),
        |_| false,
    )
}

/// Ordinary least squares y = a + b x with 95% CI on the slope.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub intercept: f64,
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let n = xs.len();
    if n < 3 || n != ys.len() {
        return Err(Error::InvalidParameter(
            "slope fit needs at least 3 points".into(),
        ));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidParameter("degenerate x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let df = (n - 2) as f64;
    let se = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df)
        .unwrap()
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        intercept,
        slope,
        ci_lo: slope - t * se,
        ci_hi: slope + t * se,
    })
}

/// Log-log growth-rate fit: exponent of median error against n, with the
/// 95% CI that acceptance thresholds are compared to.
#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    pub n_grid: Vec<f64>,
    pub medians: Vec<f64>,
    pub exponent: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn fit_rate(n_grid: &[f64], medians: &[f64]) -> Result<RateFit> {
    if n_grid.len() != medians.len() || n_grid.len() < 3 {
        return Err(Error::InvalidParameter(
            "rate fit needs >= 3 grid points".into(),
        ));
    }
    let xs: Vec<f64> = n_grid.iter().map(|&n| n.ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&m| m.max(1e-300).ln()).collect();
    let fit = ols_fit(&xs, &ys)?;
    Ok(RateFit {
        n_grid: n_grid.to_vec(),
        medians: medians.to_vec(),
        exponent: fit.slope,
        ci_lo: fit.ci_lo,
        ci_hi: fit.ci_hi,
    })
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Bounded-tracking diagnostic for iterated-logarithm statistics: the
/// running sup of |statistic| over an increasing series, compared with a
/// band around the limsup constant. Reported, never a hard gate: the limsup
/// itself is not observable at finite scale.
#[derive(Clone, Debug, Serialize)]
pub struct LilReport {
    pub name: String,
    pub constant: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub running_sup: f64,
    pub ratio: f64,
    pub inside: bool,
    pub points: u64,
}

pub fn lil_tracker(
    name: impl Into<String>,
    series: impl IntoIterator<Item = (f64, f64)>,
    constant: f64,
    band: (f64, f64),
) -> LilReport {
    let mut running_sup: f64 = 0.0;
    let mut points = 0u64;
    let mut last_n = f64::NEG_INFINITY;
    for (n, stat) in series {
        assert!(n >= last_n, "series must be nondecreasing in n");
        last_n = n;
        running_sup = running_sup.max(stat.abs());
        points += 1;
    }
    let ratio = running_sup / constant;
    LilReport {
        name: name.into(),
        constant,
        band_lo: band.0,
        band_hi: band.1,
        running_sup,
        ratio,
        inside: ratio >= band.0 && ratio <= band.1,
        points,
    }
}

/// Kolmogorov distribution 0.99 quantile, frozen from the classical series
/// 1 - 2 sum (-1)^{k-1} exp(-2 k^2 x^2); used as the oracle behind the KS
/// self-test threshold.
pub const KOLMOGOROV_Q99: f64 = 1.62762361152;
