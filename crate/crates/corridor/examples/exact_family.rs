//! The stationary singular family and its PDE residual.
//!
//! `omega = k x^{-beta/2}`, `rho = k^2` solves the system with the velocity
//! `u = -(2k/beta) x^{1-beta/2}` (the factor 2k/beta comes straight from
//! integrating the velocity kernel). This example prints a residual table
//! over beta and x, then shows that dropping the factor 2 leaves a nonzero
//! residual -k^2/(2x), the quickest way to see why the normalization
//! matters.
//!
//! Run: `cargo run --release --example exact_family`

use corridor::exact::{pde_residual, SingularProfile};

fn main() {
    println!("residuals of the exact family (h = 1e-4):");
    println!(
        "{:>6} {:>6} {:>14} {:>14}",
        "beta", "x", "omega residual", "rho residual"
    );
    for beta in [0.5, 1.0, 2.0] {
        let p = SingularProfile::new(1.0, beta).unwrap();
        for x in [0.1, 1.0, 2.0] {
            let r = pde_residual(
                |x, _| p.omega(x).unwrap(),
                |_, _| p.rho(),
                |x, _| p.u(x).unwrap(),
                beta,
                x,
                0.0,
                1e-4,
            )
            .unwrap();
            println!("{beta:>6} {x:>6} {:>14.3e} {:>14.3e}", r.omega_eq, r.rho_eq);
        }
    }

    println!("\nsame data with u = -k x^(1/2), i.e. the factor 2 dropped (beta = 1):");
    println!("{:>6} {:>14} {:>14}", "x", "residual", "-k^2/(2x)");
    let k = 1.0;
    for x in [0.1, 0.5, 1.0, 2.0] {
        let r = pde_residual(
            |x, _| k * x.powf(-0.5),
            |_, _| k * k,
            |x, _| -k * x.sqrt(),
            1.0,
            x,
            0.0,
            1e-4,
        )
        .unwrap();
        println!("{x:>6} {:>14.6e} {:>14.6e}", r.omega_eq, -k * k / (2.0 * x));
    }
    println!("\nthe defective velocity reproduces -k^2/(2x) exactly: not a solution.");
}
