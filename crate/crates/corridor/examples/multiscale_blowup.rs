//! Multiscale collapse onto the stationary x^{-1/2} profile.
//!
//! The prepared data is the corridor midline, i.e. exactly the stationary
//! profile on [A0, lam0], so the run shows the profile *persisting* while
//! A(t) collapses: the envelope omega x^{1/2} stays pinned near 1 and the
//! fitted log-log slope stays near -1/2 all the way down.
//!
//! Run: `cargo run --release --example multiscale_blowup`

use std::path::Path;

use corridor::monitor::{envelope_check, fit_exponent};
use corridor::sequences::{build_sequences, make_prepared_data_multiscale};
use corridor::sim::{run, MonitorSpec, SimConfig};

fn main() {
    let seq = build_sequences(0.8, 0.05, 0.9, 0.85, 0.8, 5.0, 4.0, 8).unwrap();
    let lam0 = seq.lam0;
    let a0 = 1e-4;
    let cloud = make_prepared_data_multiscale(&seq, a0, 0.05, 8192).unwrap();
    let (lo, hi) = cloud.support();
    println!(
        "data: {} particles on [{lo:.3e}, {hi:.3e}], midline x^(-1/2) on [{a0:.0e}, {lam0}]",
        cloud.len()
    );

    let cfg = SimConfig {
        beta: 1.0,
        dt_init: 1e-3,
        cfl: 0.1,
        t_max: 1.0,
        a_stop: 1e-8,
        omega_cap: 1e15,
        snapshot_every: 0,
        marker_label: Some(a0),
        bkm_delta: Some(a0),
    };
    let spec = MonitorSpec::Multiscale { seq, slack: 1e-6 };
    let outcome = run(cloud, &cfg, &spec, |_| {}).unwrap();

    println!(
        "terminated: {:?} at t = {:.4e}, A = {:.3e}, {} steps",
        outcome.termination,
        outcome.state.t,
        outcome.state.a(),
        outcome.trace.rows.len() - 1
    );
    let controlled = outcome.control_history.iter().all(|cp| cp.control_pass);
    println!("multiscale-controlled throughout: {controlled}");

    println!(
        "\n{:>12} {:>12} {:>9} {:>9}",
        "t", "A", "phi_eff", "psi_eff"
    );
    let h = &outcome.control_history;
    for k in [0, h.len() / 4, h.len() / 2, 3 * h.len() / 4, h.len() - 1] {
        let cp = &h[k];
        println!(
            "{:>12.4e} {:>12.4e} {:>9.5} {:>9.5}",
            cp.t,
            outcome.trace.rows[k].a,
            cp.phi_eff.unwrap(),
            cp.psi_eff.unwrap()
        );
    }

    let (slope, intercept) = fit_exponent(&outcome.state.cloud, (outcome.state.a(), lam0)).unwrap();
    let (phi_eff, psi_eff) =
        envelope_check(&outcome.state.cloud, (outcome.state.a(), lam0)).unwrap();
    println!("\nfinal window [{:.3e}, {lam0}]:", outcome.state.a());
    println!(
        "  log-log fit: slope {slope:.5} (stationary exponent -0.5), intercept {intercept:.4}"
    );
    println!("  envelope of omega x^(1/2): [{phi_eff:.5}, {psi_eff:.5}]");

    let dir = Path::new("target/example-output");
    outcome
        .trace
        .write_csv(&dir.join("multiscale_trace.csv"))
        .unwrap();
    println!("trace written to {}", dir.display());
}
