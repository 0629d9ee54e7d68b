//! Decompose a walk into signed zero-excursions, print the first few as
//! CSV, and check the return-time law P(rho_1 = 2) = 1/2 by Monte Carlo.
//!
//!     cargo run --release --example excursions -- [steps]

use loctime::excursion::{classify_excursions, directional_counts, return_times};
use loctime::rng::RngStream;
use loctime::walk::StepSequence;

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100_000);
    let stream = RngStream::new(11).child("example-exc");
    let walk = StepSequence::simulate(n, &stream);

    let rt = return_times(&walk, n);
    println!(
        "{} returns to zero by time {}, {} of them upward",
        rt.rho.len(),
        n,
        rt.rho_plus.len()
    );
    let list = classify_excursions(&walk, 0);
    println!("first excursions (start,end,sign,length):");
    let mut csv = Vec::new();
    list.write_csv(&mut csv).unwrap();
    for line in String::from_utf8(csv).unwrap().lines().take(8) {
        println!("  {}", line);
    }

    let d = directional_counts(&walk, 0, n);
    println!(
        "directional counts at level 0: up {} down {} (completed)",
        d.up, d.down
    );

    // P(rho_1 = 2) over fresh short walks
    let reps = 100_000u32;
    let root = stream.child("rho1");
    let mut hits = 0u32;
    for rep in 0..reps {
        let w = StepSequence::simulate(2, &root.child(rep));
        if return_times(&w, 2).rho.first() == Some(&2) {
            hits += 1;
        }
    }
    println!(
        "P(rho_1 = 2) = {:.4} over {} walks (exact 0.5)",
        hits as f64 / reps as f64,
        reps
    );
}
