//! The sheet coupling: branching-built local times next to G(k, N) formed
//! from the embedding Wiener processes, with the growth rate of the sup
//! error across excursion counts.
//!
//!     cargo run --release --example sheet_coupling -- [reps] [log2_max]

use loctime::coupling::embed_u_sums;
use loctime::experiments::{run_sheet_rate, DEFAULT_SEED};
use loctime::rng::RngStream;

fn main() {
    let mut args = std::env::args().skip(1);
    let reps: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let log2_max: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(13);

    let stream = RngStream::new(DEFAULT_SEED).child("example-sheet-coupling");

    // one level of the U-sum embedding, shown directly
    let lvl = &embed_u_sums(1, 8, &stream.child("demo"))[0];
    println!("one embedded level, first 8 increments:");
    println!("{:>3} {:>8} {:>10} {:>10}", "j", "U(j)", "sigma_j", "W(2j)");
    for j in 0..8 {
        println!(
            "{:>3} {:>8} {:>10.3} {:>10.3}",
            j + 1,
            lvl.series.values[j],
            lvl.sigma[j],
            lvl.w_at_even[j]
        );
    }

    let out = run_sheet_rate(8, log2_max, 3, reps, &stream).unwrap();
    println!(
        "\nsup_k |xi(k, rho_N) - xi(0, rho_N) - G(k, N)| for k <= 3, {} replications:",
        reps
    );
    println!("{:>8} {:>12}", "N", "median");
    for (n, e) in out.n_grid.iter().zip(&out.errors) {
        println!("{:>8} {:>12.3}", n, e);
    }
    println!(
        "fitted exponent {:.3} (95% CI [{:.3}, {:.3}])",
        out.exponent, out.ci_lo, out.ci_hi
    );
}
