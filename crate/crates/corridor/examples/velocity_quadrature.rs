//! Nonlocal velocity on a truncated singular profile.
//!
//! Samples `omega = x^{-1/2}` truncated to [1e-3, 4] on log grids of
//! increasing resolution and computes `Q(x) = int_x^inf omega/y dy` with
//! the per-cell exact quadrature. Two comparisons:
//!
//! * against the closed form `2 (x^{-1/2} - b_eff^{-1/2})` with `b_eff` at
//!   the midpoint of the upper taper band — accurate to the taper
//!   approximation floor (~7e-5 relative here), independent of the grid;
//! * against a finely oversampled midpoint rule on the same continuous
//!   profile — this isolates the quadrature error and shows its second
//!   order in the mesh width.
//!
//! Run: `cargo run --release --example velocity_quadrature`

use corridor::exact::{SingularProfile, TruncatedProfile};
use corridor::grid::log_grid;
use corridor::state::sample_profile;
use corridor::velocity::compute_q;

/// Midpoint rule in log coordinates on the continuous profile; oversampled
/// far beyond the particle grids it judges.
fn riemann_q(tr: &TruncatedProfile, x: f64, n: usize) -> f64 {
    let (la, lb) = (x.ln(), 4.0f64.ln());
    let h = (lb - la) / n as f64;
    (0..n)
        .map(|k| tr.omega((la + h * (k as f64 + 0.5)).exp()))
        .sum::<f64>()
        * h
}

fn main() {
    let profile = SingularProfile::new(1.0, 1.0).unwrap();
    let taper = 0.04;
    let tr = profile.truncated(1e-3, 4.0, taper).unwrap();
    let b_eff = 4.0 * (1.0 - taper / 2.0);
    let xs: [f64; 5] = [0.004, 0.02, 0.25, 1.0, 2.0];
    let oracle: Vec<f64> = xs.iter().map(|&x| riemann_q(&tr, x, 2_000_000)).collect();

    println!("worst relative error of Q over x in {xs:?}:");
    println!(
        "{:>8} {:>22} {:>22} {:>8}",
        "n", "vs closed form", "vs fine quadrature", "order"
    );
    let mut prev: Option<f64> = None;
    for n in [512usize, 1024, 2048, 4096, 8192] {
        let g = log_grid(1e-3, 4.0, n).unwrap();
        let cloud = sample_profile(|x| tr.omega(x), |x| tr.rho(x), &g).unwrap();
        let field = compute_q(&cloud);
        let mut worst_cf: f64 = 0.0;
        let mut worst_or: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let q = field.q_at(x);
            let cf = 2.0 * (x.powf(-0.5) - b_eff.powf(-0.5));
            worst_cf = worst_cf.max((q - cf).abs() / cf);
            worst_or = worst_or.max((q - oracle[i]).abs() / oracle[i]);
        }
        let order = prev.map_or(String::from("-"), |p: f64| {
            format!("{:.2}", (p / worst_or).log2())
        });
        println!("{n:>8} {worst_cf:>22.3e} {worst_or:>22.3e} {order:>8}");
        prev = Some(worst_or);
    }
    println!("\nthe closed-form column bottoms out at the taper-band floor;");
    println!("the quadrature itself converges at second order.");

    let g = log_grid(1e-3, 4.0, 4096).unwrap();
    let cloud = sample_profile(|x| tr.omega(x), |x| tr.rho(x), &g).unwrap();
    let field = compute_q(&cloud);
    println!(
        "\nvelocity at x = 0.25: u = {:.6} (closed form ~ -0.75)",
        field.u_at(0.25)
    );
    println!(
        "Q is nonincreasing: {}",
        field.q_nodes().windows(2).all(|w| w[1] <= w[0] + 1e-15)
    );
}
