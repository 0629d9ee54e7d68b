//! Bounded tracking of the iterated-logarithm statistics along one long
//! walk. Diagnostic output only: a limsup is not observable at finite n.
//!
//!     cargo run --release --example lil_tracking -- [steps]

use loctime::experiments::{run_lil, DEFAULT_SEED};
use loctime::rng::RngStream;

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10_000_000);
    let stream = RngStream::new(DEFAULT_SEED).child("example-lil");
    let out = run_lil(n, &stream);
    println!("one walk of {} steps:", n);
    for rep in [&out.c2, &out.c1, &out.rho_form] {
        println!(
            "  {:24} running sup {:.4} = {:.3} x constant {:.4} (band [{}, {}] -> {})",
            rep.name,
            rep.running_sup,
            rep.ratio,
            rep.constant,
            rep.band_lo,
            rep.band_hi,
            if rep.inside { "inside" } else { "outside" }
        );
    }
}
