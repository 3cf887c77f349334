//! Grid generation and taper helpers shared by the data generators.

use crate::{Error, Result};

/// Logarithmically spaced grid with `n` nodes spanning `[lo, hi]`.
///
/// Power-law profiles span many decades, so log spacing keeps the relative
/// cell width constant and the piecewise-linear quadrature error uniform.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
        return Err(Error::InvalidGrid(format!(
            "log grid needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if n < 4 {
        return Err(Error::InvalidGrid(format!(
            "need at least 4 nodes, got {n}"
        )));
    }
    let (la, lb) = (lo.ln(), hi.ln());
    let step = (lb - la) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| (la + step * i as f64).exp()).collect();
    // pin the endpoints exactly
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// Cubic smoothstep `3s^2 - 2s^3` clamped to [0, 1]; C^1 at both ends.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * (3.0 - 2.0 * s)
    }
}

/// Smoothstep rising 0 -> 1 across `[lo, hi]`.
pub fn rise(x: f64, lo: f64, hi: f64) -> f64 {
    smoothstep((x - lo) / (hi - lo))
}

/// Smoothstep falling 1 -> 0 across `[lo, hi]`.
pub fn fall(x: f64, lo: f64, hi: f64) -> f64 {
    smoothstep((hi - x) / (hi - lo))
}

/// Replace the grid node nearest to `x` with `x` itself, keeping the grid
/// strictly increasing. Used to pin the marked trajectory label exactly.
pub fn pin_node(grid: &mut [f64], x: f64) -> Result<usize> {
    let n = grid.len();
    if x <= grid[0] || x >= grid[n - 1] {
        return Err(Error::InvalidGrid(format!(
            "cannot pin {x}: outside the open grid range ({}, {})",
            grid[0],
            grid[n - 1]
        )));
    }
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let d = (g - x).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    // never move an endpoint
    let best = best.clamp(1, n - 2);
    grid[best] = x;
    if grid[best - 1] >= grid[best] || grid[best] >= grid[best + 1] {
        return Err(Error::InvalidGrid(format!(
            "pinning {x} broke monotonicity near index {best}"
        )));
    }
    Ok(best)
}
