//! A full single-scale collapse with runtime certification.
//!
//! Runs the reference pack until the marked trajectory A(t) has fallen four
//! decades, evaluating the control conditions and the implied velocity
//! bounds at every accepted step. The trace CSV and the JSON report land in
//! `target/example-output/`.
//!
//! Run: `cargo run --release --example single_scale_blowup`

use std::path::Path;

use corridor::barrier::{make_prepared_data, verify_suitably_prepared, BarrierParams};
use corridor::monitor::run_report;
use corridor::sim::{run, MonitorSpec, SimConfig};

fn main() {
    let pack = BarrierParams::new(1.0, 1.0, 0.2, 0.8, 1.1875, 1.6, 0.19, 1e-8, 1e-9).unwrap();
    let cloud = make_prepared_data(&pack, 8192).unwrap();
    assert!(verify_suitably_prepared(&cloud, &pack).pass);

    let cfg = SimConfig {
        beta: pack.beta,
        dt_init: 1e-3,
        cfl: 0.1,
        t_max: 1.0,
        a_stop: 1e-12,
        omega_cap: 1e15,
        snapshot_every: 0,
        marker_label: Some(pack.a0),
        bkm_delta: Some(pack.a0),
    };
    let spec = MonitorSpec::SingleScale {
        params: pack,
        slack: 1e-6,
    };
    let outcome = run(cloud, &cfg, &spec, |_| {}).unwrap();

    println!(
        "terminated: {:?} after {} steps, t_end = {:.6e} (T* = {:.4})",
        outcome.termination,
        outcome.trace.rows.len() - 1,
        outcome.state.t,
        pack.upper_bound_time()
    );
    println!("A: {:.1e} -> {:.3e}", pack.a0, outcome.state.a());
    println!(
        "||omega||_inf at the end: {:.4e}",
        outcome.state.cloud.sup_omega_global()
    );
    println!(
        "BKM integral: {:.4} (localized: {:.4})",
        outcome.state.bkm, outcome.state.bkm_localized
    );

    let controlled = outcome
        .control_history
        .iter()
        .all(|cp| cp.control_pass && cp.q_pass);
    let worst = outcome
        .control_history
        .iter()
        .map(|cp| cp.worst_margin)
        .fold(f64::INFINITY, f64::min);
    println!("controlled throughout: {controlled} (worst margin {worst:.3e})");

    // a few trace milestones
    println!(
        "\n{:>12} {:>12} {:>12} {:>12}",
        "t", "A", "omega_max", "bkm"
    );
    let rows = &outcome.trace.rows;
    for k in [
        0,
        rows.len() / 4,
        rows.len() / 2,
        3 * rows.len() / 4,
        rows.len() - 1,
    ] {
        let r = &rows[k];
        println!(
            "{:>12.4e} {:>12.4e} {:>12.4e} {:>12.4}",
            r.t, r.a, r.omega_max, r.bkm
        );
    }

    let dir = Path::new("target/example-output");
    outcome
        .trace
        .write_csv(&dir.join("single_scale_trace.csv"))
        .unwrap();
    let report = run_report(
        outcome.termination,
        &outcome.state,
        &outcome.control_history,
        Some(pack.upper_bound_time()),
        Some((outcome.state.a(), 1.0)),
    );
    std::fs::write(
        dir.join("single_scale_report.json"),
        serde_json::to_string_pretty(&report).unwrap(),
    )
    .unwrap();
    println!("\ntrace and report written to {}", dir.display());
}
