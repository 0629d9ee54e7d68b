//! Inequality audits: return-time tails, binomial concentration, centered
//! offspring maxima, the 5N level bound, Gaussian sup-tail decay slopes,
//! and exponential partial sums.
//!
//!     cargo run --release --example tail_audits -- [reps]

use loctime::experiments::{run_audits, DEFAULT_SEED};
use loctime::rng::RngStream;
use loctime::stats::TailAudit;

fn print_audit(audit: &TailAudit) {
    println!("{} ({} samples):", audit.name, audit.sample_size);
    println!(
        "{:>10} {:>12} {:>12} {:>10} {:>9}",
        "u", "empirical", "bound", "ci", "violated"
    );
    for r in &audit.rows {
        println!(
            "{:>10.2} {:>12.6} {:>12.6} {:>10.6} {:>9}",
            r.u, r.empirical, r.bound, r.ci_half_width, r.violated
        );
    }
}

fn main() {
    let reps: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(40_000);
    let stream = RngStream::new(DEFAULT_SEED).child("example-audits");
    let out = run_audits(reps, &stream).unwrap();
    print_audit(&out.rho_tail);
    print_audit(&out.binomial);
    print_audit(&out.u_sums);
    print_audit(&out.five_n);
    print_audit(&out.exp_sums);
    println!(
        "sup-tail decay: fixed clock slope {:.4} (need <= {:.4}), local-time clock {:.4} (need <= {:.4})",
        out.g_sup_fixed_slope, out.g_sup_fixed_required, out.g_sup_eta_slope, out.g_sup_eta_required
    );
    println!(
        "total row violations: {} ({})",
        out.violations,
        if out.pass { "clean" } else { "VIOLATED" }
    );
}
