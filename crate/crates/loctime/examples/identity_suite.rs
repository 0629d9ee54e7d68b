//! The exact integer identity suite: level local times at upward return
//! times against offspring sums, on thousands of random walks.
//!
//!     cargo run --release --example identity_suite -- [walks] [n_upward] [k_max]

use loctime::experiments::{run_identities, DEFAULT_SEED};
use loctime::rng::RngStream;

fn main() {
    let mut args = std::env::args().skip(1);
    let walks: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let n_upward: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let k_max: i64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);

    let stream = RngStream::new(DEFAULT_SEED).child("example-identities");
    let out = run_identities(walks, n_upward, k_max, &stream);
    println!(
        "{} walks, N = {}, levels 1..={}: {} identity checks, {} failures",
        out.walks, out.n_upward, out.k_max, out.checks, out.failures
    );
    for r in out.failed_rows.iter().take(5) {
        println!("  failed: {:?}", r);
    }
    println!("suite {}", if out.pass { "holds exactly" } else { "FAILED" });
}
