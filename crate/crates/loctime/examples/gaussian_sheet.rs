//! The Gaussian limit objects: lattice Wiener sheet, the process
//! G(k,t) = W(k,t) + W(k-1,t) - W*(t), and Brownian local time at zero.
//!
//!     cargo run --release --example gaussian_sheet -- [reps]

use loctime::experiments::run_sheet_moments;
use loctime::gaussian::{g_covariance, sample_eta0, TimeGrid};
use loctime::rng::RngStream;
use loctime::stats::{ks_test, EmpiricalDistribution, TargetLaw};

fn main() {
    let reps: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30_000);
    let stream = RngStream::new(23).child("example-sheet");

    let out = run_sheet_moments(reps, 5, &stream);
    println!(
        "{} moment probes at {} sheet samples, max |z| = {:.2} ({})",
        out.probes.len(),
        reps,
        out.max_abs_z,
        if out.pass { "all within 3 SE" } else { "OUT OF BAND" }
    );
    println!("{:>3} {:>6} {:>3} {:>6} {:>10} {:>10} {:>7}", "k", "s", "l", "t", "empirical", "theory", "z");
    for p in out.probes.iter().step_by(17) {
        println!(
            "{:>3} {:>6} {:>3} {:>6} {:>10.4} {:>10.4} {:>7.2}",
            p.k, p.s, p.l, p.t, p.empirical, p.theory, p.z
        );
    }
    println!("closed form: Var G(1,1) = {}", g_covariance(1, 1.0, 1, 1.0));

    // Brownian local time at zero via the reflection identity
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let finals: Vec<f64> = (0..reps)
        .map(|rep| {
            let mut rng = stream.child("eta").child(rep).rng();
            sample_eta0(grid, &mut rng).terminal()
        })
        .collect();
    let emp = EmpiricalDistribution::new(finals).unwrap();
    let ks = ks_test(&emp, &TargetLaw::HalfNormal, 0.015).unwrap();
    println!(
        "eta(0,1) vs half-normal: KS = {:.4} at {} samples ({})",
        ks.statistic,
        reps,
        if ks.pass { "ok" } else { "OFF" }
    );
}
