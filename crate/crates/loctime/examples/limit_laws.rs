//! The two distributional limit laws of the centered local time at a fixed
//! large time: the product law U sqrt(|V|) under the n^{1/4} scaling and
//! the standard normal under self-normalization by xi(0,n)^{1/2}.
//!
//!     cargo run --release --example limit_laws -- [n] [reps]

use loctime::experiments::{run_limits, DEFAULT_SEED};
use loctime::rng::RngStream;
use loctime::stats::product_law_cdf;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let reps: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(4_000);

    let stream = RngStream::new(DEFAULT_SEED).child("example-limits");
    let out = run_limits(n, reps, 1, 2, 0.05, &stream).unwrap();
    println!(
        "n = {}, {} replications ({} dropped with xi(0,n) = 0)",
        n, reps, out.dropped_zero_xi0
    );
    println!(
        "  (xi(1,n)-xi(0,n)) / (sqrt(2) n^(1/4))      KS vs product law:     {:.4}",
        out.product_law.statistic
    );
    println!(
        "  (xi(2,n)-xi(0,n)) / (sqrt(6) xi(0,n)^(1/2)) KS vs standard normal: {:.4}",
        out.self_normalized.statistic
    );
    println!("\nproduct-law CDF by adaptive quadrature:");
    for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        println!("  F({:>4}) = {:.6}", x, product_law_cdf(x));
    }
}
