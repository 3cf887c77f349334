//! Nonlocal velocity evaluation.
//!
//! The velocity is `u(x,t) = -x Q(x,t)` with `Q(x,t) = int_x^inf omega(y,t)/y dy`.
//! On a particle cloud, `omega` is piecewise linear, so each cell integrates
//! in closed form: for `omega(y) = a + b y` on `[y0, y1]`,
//!
//! ```text
//!   int (a + b y)/y dy = a ln(y1/y0) + b (y1 - y0).
//! ```
//!
//! Integrating the linear interpolant against `1/y` exactly (instead of
//! applying a trapezoid rule to `omega/y`) removes the singular-weight error
//! near small `x`, which is where the collapse happens. Node values of `Q`
//! accumulate right-to-left as a suffix sum, so the whole field costs O(N).

use crate::state::ParticleCloud;

/// `Q` evaluated at every particle of a cloud, plus exact in-cell evaluation
/// between particles.
#[derive(Debug)]
pub struct VelocityField<'a> {
    cloud: &'a ParticleCloud,
    q_at_nodes: Vec<f64>,
}

/// Exact integral of the linear interpolant of `(y0,w0)-(y1,w1)` against
/// `1/y` over `[y0, y1]`.
///
/// Cells starting at `y0 = 0` are only valid with `w0 = 0` (cloud invariant),
/// in which case the interpolant is proportional to `y` and the log term
/// vanishes; the branch avoids `ln(0)`.
fn cell_integral(y0: f64, y1: f64, w0: f64, w1: f64) -> f64 {
    debug_assert!(y0 < y1);
    if w0 == 0.0 && w1 == 0.0 {
        return 0.0;
    }
    if y0 == 0.0 {
        debug_assert_eq!(w0, 0.0);
        return w1 - w0;
    }
    // a = value of the interpolant extrapolated to y = 0, written in the
    // cancellation-free form (w0*y1 - w1*y0)/(y1 - y0)
    let a = (w0 * y1 - w1 * y0) / (y1 - y0);
    a * (y1 / y0).ln() + (w1 - w0)
}

/// Compute `Q` at every node of the cloud.
pub fn compute_q(cloud: &ParticleCloud) -> VelocityField<'_> {
    let xs = cloud.positions();
    let ws = cloud.omega();
    let n = xs.len();
    let mut q = vec![0.0; n];
    for i in (0..n - 1).rev() {
        q[i] = q[i + 1] + cell_integral(xs[i], xs[i + 1], ws[i], ws[i + 1]);
    }
    VelocityField {
        cloud,
        q_at_nodes: q,
    }
}

impl<'a> VelocityField<'a> {
    pub fn cloud(&self) -> &'a ParticleCloud {
        self.cloud
    }

    /// `Q` at each particle position, in particle order.
    pub fn q_nodes(&self) -> &[f64] {
        &self.q_at_nodes
    }

    /// `Q(x)` for arbitrary `x >= 0`, evaluated with the same per-cell closed
    /// form used at the nodes (not linear interpolation of `Q`), so that `u`
    /// stays Lipschitz-consistent with the discrete `omega`.
    pub fn q_at(&self, x: f64) -> f64 {
        let xs = self.cloud.positions();
        let ws = self.cloud.omega();
        let n = xs.len();
        if x >= xs[n - 1] {
            return 0.0;
        }
        if x <= xs[0] {
            // omega vanishes below the support, Q is constant there
            return self.q_at_nodes[0];
        }
        let j = xs.partition_point(|&p| p <= x); // first node > x
        let (x0, x1) = (xs[j - 1], xs[j]);
        if x == x0 {
            return self.q_at_nodes[j - 1];
        }
        let t = (x - x0) / (x1 - x0);
        let wx = ws[j - 1] + t * (ws[j] - ws[j - 1]);
        self.q_at_nodes[j] + cell_integral(x, x1, wx, ws[j])
    }

    /// Velocity `u(x) = -x Q(x)`; identically zero at `x = 0` and beyond the
    /// support.
    pub fn u_at(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        -x * self.q_at(x)
    }
}
