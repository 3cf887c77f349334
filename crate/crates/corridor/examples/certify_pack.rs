//! Select and certify single-scale barrier parameter packs.
//!
//! For a few (m, beta) pairs the deterministic selector walks the exponent
//! grid, places the corridor, and the verifier reports every feasibility
//! line with its margin. One deliberately broken pack shows a located
//! failure.
//!
//! Run: `cargo run --release --example certify_pack`

use corridor::barrier::{cond_params_lines, select_params, BarrierParams};

fn print_lines(pack: &BarrierParams) {
    println!(
        "  pack: p={:.4} q={:.4} phi={:.5} psi={:.5} delta={:.5} A0={:.1e} T*={:.4}",
        pack.p,
        pack.q,
        pack.phi,
        pack.psi,
        pack.delta,
        pack.a0,
        pack.upper_bound_time()
    );
    for l in cond_params_lines(pack) {
        println!(
            "    {:<22} lhs {:>12.5e}  rhs {:>12.5e}  margin {:>12.5e}  {}",
            l.id,
            l.lhs,
            l.rhs,
            l.margin,
            if l.pass { "pass" } else { "FAIL" }
        );
    }
}

fn main() {
    for (m, beta) in [(1.0, 1.0), (2.0, 1.0), (1.0, 0.5)] {
        println!("selected for m = {m}, beta = {beta}:");
        let pack = select_params(m, beta).unwrap();
        print_lines(&pack);
    }

    // the reference hand pack
    println!("\nreference pack (m=1, beta=1, p=0.2, A0=1e-8):");
    let p0 = BarrierParams::new(1.0, 1.0, 0.2, 0.8, 1.1875, 1.6, 0.19, 1e-8, 1e-9).unwrap();
    print_lines(&p0);

    // same pack with A0 too large: the A0-dependent line flips
    println!("\nsame pack with A0 = 1e-3 (too large):");
    let broken = BarrierParams::new(1.0, 1.0, 0.2, 0.8, 1.1875, 1.6, 0.19, 1e-3, 1e-4).unwrap();
    print_lines(&broken);

    // infeasible selection carries the tightest violated inequality
    match select_params(1e4, 1.0) {
        Err(e) => println!("\nm = 1e4 is infeasible as expected:\n  {e}"),
        Ok(_) => unreachable!(),
    }
}
