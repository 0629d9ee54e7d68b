//! Skorokhod embedding of the walk with exponential local-time marks, and
//! the measured coupling rate between xi(0,n) and the summed marks.
//!
//!     cargo run --release --example eta_coupling -- [reps]

use loctime::coupling::embed_walk;
use loctime::experiments::{run_eta_rate, DEFAULT_SEED};
use loctime::rng::RngStream;

fn main() {
    let reps: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50);
    let stream = RngStream::new(DEFAULT_SEED).child("example-eta");

    let (walk, marks) = embed_walk(100_000, &stream.child("demo"));
    println!(
        "embedded walk: {} steps, tau_n/n = {:.4}, {} exponential marks",
        walk.steps.len(),
        walk.times.last().unwrap() / walk.steps.len() as f64,
        marks.marks.len()
    );

    let out = run_eta_rate(10, 18, reps, &stream).unwrap();
    println!(
        "\ncoupling error |xi(0,n) - sum eta_i| over n = 2^10..2^18, {} replications:",
        reps
    );
    println!("{:>10} {:>12} {:>14}", "n", "median e(n)", "e(n)/sqrt(n)");
    for ((n, e), r) in out
        .report
        .n_grid
        .iter()
        .zip(&out.report.errors)
        .zip(&out.medians_over_sqrt_n)
    {
        println!("{:>10} {:>12.3} {:>14.5}", n, e, r);
    }
    println!(
        "fitted exponent {:.3} (95% CI [{:.3}, {:.3}])",
        out.report.exponent, out.report.ci_lo, out.report.ci_hi
    );
}
