//! Splice two independent walks block by block (large excursions from the
//! first, small from the second) and verify the output is again a fair
//! walk; then measure the return-time deformation rate.
//!
//!     cargo run --release --example splice -- [levels]

use loctime::experiments::{run_splice_rates, run_splice_validity, DEFAULT_SEED};
use loctime::rng::RngStream;

fn main() {
    let levels: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let stream = RngStream::new(DEFAULT_SEED).child("example-splice");

    let v = run_splice_validity(levels, 500_000, &stream).unwrap();
    println!(
        "spliced walk over {} blocks: {} steps emitted",
        levels, v.output_steps
    );
    println!(
        "  fair-coin chi-square p = {:.4}, lag-one independence p = {:.4}",
        v.sign_report.p_value, v.lag_report.p_value
    );
    println!("  identity splice reproduces walk1 exactly: {}", v.identity_zero_error);

    let rates = run_splice_rates(4, 9, 6, &stream).unwrap();
    println!("\nreturn-time deformation max_i |rho_i - rho^(1)_i|:");
    println!("{:>6} {:>12}", "N", "median");
    for (n, e) in rates
        .rho_deformation
        .n_grid
        .iter()
        .zip(&rates.rho_deformation.errors)
    {
        println!("{:>6} {:>12.1}", n, e);
    }
    println!(
        "fitted exponent {:.3} (95% CI [{:.3}, {:.3}]); zero-local-time diff exponent {:.3}",
        rates.rho_deformation.exponent,
        rates.rho_deformation.ci_lo,
        rates.rho_deformation.ci_hi,
        rates.zero_diff.exponent
    );
}
