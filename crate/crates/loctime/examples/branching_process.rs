//! The branching picture: local-time levels of a walk at its N-th upward
//! return against an independent critical Galton-Watson process, plus the
//! closed-form law of the local time earned by a single excursion.
//!
//!     cargo run --release --example branching_process -- [reps]

use loctime::experiments::{run_branching_equivalence, DEFAULT_SEED};
use loctime::ray_knight::{simulate_gw, FirstExcursionLaw};
use loctime::rng::RngStream;

fn main() {
    let reps: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30_000);
    let stream = RngStream::new(DEFAULT_SEED).child("example-branching");

    let out = run_branching_equivalence(reps, 20, 3, &stream).unwrap();
    println!(
        "walk vs Galton-Watson at N = 20, level 3, {} replications: chi-square p = {:.4} ({})",
        reps,
        out.report.p_value,
        if out.report.pass { "consistent" } else { "MISMATCH" }
    );

    // criticality: E Z_k = Z_0 at every generation
    let mut rng = stream.child("gw").rng();
    let (n0, gens, gw_reps) = (10u64, 5usize, 20_000u32);
    let mut sums = vec![0u64; gens + 1];
    for _ in 0..gw_reps {
        let t = simulate_gw(n0, gens as u32, &mut rng);
        for (k, z) in t.z.iter().enumerate() {
            sums[k] += z;
        }
    }
    println!("\ncritical branching from Z_0 = {}:", n0);
    for (k, s) in sums.iter().enumerate() {
        println!("  E Z_{} ~ {:.3}", k, *s as f64 / gw_reps as f64);
    }

    println!("\nsingle-excursion law at level k (atom at zero, then geometric):");
    for k in [1i64, 2, 5] {
        let law = FirstExcursionLaw::new(k).unwrap();
        println!(
            "  k = {}: P(0) = {:.4}, P(1) = {:.4}, P(xi >= 5) = {:.5}",
            k,
            law.pmf(0),
            law.pmf(1),
            law.any_excursion_survival(5)
        );
    }
}
