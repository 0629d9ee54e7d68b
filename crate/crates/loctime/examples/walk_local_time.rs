//! Simulate a walk, stream its local-time profile, and exercise the
//! bit-packed snapshot format.
//!
//!     cargo run --release --example walk_local_time -- [steps]

use loctime::rng::RngStream;
use loctime::walk::{local_time, local_time_profile_streaming, StepSequence};

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    let stream = RngStream::new(7).child("example-walk");
    let walk = StepSequence::simulate(n, &stream);

    let window = 40i64;
    let profile = local_time_profile_streaming(walk.steps(), n, -window, window, Some(n / 100));
    println!("walk of {} steps, profile over [{}, {}]:", n, -window, window);
    println!("{:>6} {:>12}", "level", "visits");
    for k in (-window..=window).step_by(10) {
        println!("{:>6} {:>12}", k, profile.count(k));
    }
    println!(
        "window total {} + spill {} = {} (= n)",
        profile.counts().iter().sum::<u64>(),
        profile.spill_below + profile.spill_above,
        profile.total_with_spill()
    );
    let (stride, series) = profile.zero_series.as_ref().unwrap();
    println!(
        "zero-level series: stride {}, {} entries, final xi(0,n) = {}",
        stride,
        series.len(),
        series.last().unwrap()
    );

    // pointwise agreement with the direct counter at a few levels
    for k in [-5i64, 0, 3] {
        assert_eq!(profile.count(k), local_time(&walk, k, n));
    }

    let bytes = walk.to_bytes();
    let back = StepSequence::from_bytes(&bytes).unwrap();
    assert_eq!(back, walk);
    println!("snapshot round-trip ok ({} bytes)", bytes.len());
}
