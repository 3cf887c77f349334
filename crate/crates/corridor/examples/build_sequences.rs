//! Construct the multiscale barrier sequences and verify their conditions.
//!
//! Prints the per-level table (scales, exponents, barrier amplitudes, the
//! velocity-bound defects mu_n and the F bracket) and the certification
//! records. The canonical (L = 5, C = 4) pack fails the level-2 trapping
//! condition — the printed mu_2 makes that concrete — while a steeper scale
//! decay (L = 12) passes everything; both are shown.
//!
//! Run: `cargo run --release --example build_sequences`

use corridor::sequences::{
    build_sequences, search_scale_decay, verify_sequence_conditions, BarrierSequences,
};

fn show(seq: &BarrierSequences) {
    println!(
        "{:>2} {:>11} {:>10} {:>9} {:>9} {:>9} {:>9} {:>11} {:>10}",
        "n", "lam", "eps", "p", "q", "phi", "psi", "mu", "F bracket"
    );
    for l in &seq.levels {
        println!(
            "{:>2} {:>11.4e} {:>10.4e} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>11.4e} {:>10}",
            l.n,
            l.lam,
            l.eps,
            l.p,
            l.q,
            l.phi,
            l.psi,
            l.mu,
            l.f_bracket.map_or(String::from("-"), |b| format!("{b:.5}")),
        );
    }
    println!("F = {:.6}", seq.f_sup);

    let report = verify_sequence_conditions(seq);
    println!(
        "phi_inf estimate: {:.6}; C headroom before trapping fails: {:.4}",
        report.phi_inf, report.c_max
    );
    let failures: Vec<String> = report
        .failures()
        .map(|r| match r.level {
            Some(n) => format!("{} at n={n} (margin {:.3e})", r.id, r.margin),
            None => format!("{} (margin {:.3e})", r.id, r.margin),
        })
        .collect();
    if failures.is_empty() {
        println!("all conditions pass");
    } else {
        println!("failing conditions: {}", failures.join("; "));
    }
}

fn main() {
    println!("canonical pack (phi1=0.8, eps1=0.05, lam 0.9/0.85/0.8, L=5, C=4, N=8):");
    let s0 = build_sequences(0.8, 0.05, 0.9, 0.85, 0.8, 5.0, 4.0, 8).unwrap();
    show(&s0);

    println!("\nsteeper scale decay (L = 12, N = 5): the trapping budget opens up");
    let s1 = build_sequences(0.8, 0.05, 0.9, 0.85, 0.8, 12.0, 4.0, 5).unwrap();
    show(&s1);

    let (l_found, _) = search_scale_decay(0.8, 0.05, 0.9, 0.85, 0.8, 4.0, 8, 5.0).unwrap();
    println!("\ndoubling search from L = 5 settles at L = {l_found} for N = 8, C = 4");
}
