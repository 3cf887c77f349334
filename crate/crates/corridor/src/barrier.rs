//! Single-scale power-law barrier machinery.
//!
//! A solution is "controlled" while `phi x^{-p} < omega(x,t) < psi x^{-q}`
//! holds on the moving window `[A(t), 1]`, together with flat bounds on
//! `[1, 3]`. This module owns the parameter pack `(beta, p, q, phi, psi,
//! delta, m, A0, eps)`, the derived constants
//!
//! ```text
//!   b0 = min(1, p ln 2) / p,    b1 = max(1, q ln 4) / q,
//! ```
//!
//! a deterministic parameter selector, generation and certification of
//! suitably prepared initial data, and the closed-form lifetime bound
//! `T* = A0^p / (phi b0 p)`.

use serde::{Deserialize, Serialize};

use crate::grid::{self, log_grid};
use crate::report::{worst_lower, worst_upper, ConditionRecord, ControlReport, Sense};
use crate::state::{sample_profile, ParticleCloud};
use crate::{Error, Result};

/// Floor of the geometric search grid for the exponent `p`.
const P_GRID_FLOOR: f64 = 1e-4;

/// Tolerance for the `p + q = beta` identity.
const EXPONENT_SUM_TOL: f64 = 1e-12;

/// Parameter pack for the single-scale barrier construction.
///
/// `b0`, `b1` are derived from `p`, `q`; deserialized packs may omit them
/// and should pass through [`BarrierParams::revalidated`], which recomputes
/// them and re-checks the structural restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub beta: f64,
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub phi: f64,
    pub psi: f64,
    pub delta: f64,
    pub a0: f64,
    pub eps: f64,
    #[serde(default)]
    pub b0: f64,
    #[serde(default)]
    pub b1: f64,
}

/// `b0 = min(1, p ln 2)/p` and `b1 = max(1, q ln 4)/q` for exponents in (0,1).
pub fn compute_b0_b1(p: f64, q: f64) -> Result<(f64, f64)> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParam(format!(
                "{name} must lie in (0,1), got {v}"
            )));
        }
    }
    let b0 = (p * 2f64.ln()).min(1.0) / p;
    let b1 = (q * 4f64.ln()).max(1.0) / q;
    Ok((b0, b1))
}

impl BarrierParams {
    /// Assemble a pack from explicit values, checking the structural
    /// restrictions (`0 < eps < A0 < 1`, `p, q` in `(0,1)`, `p + q = beta`,
    /// `p < beta/2`, `phi < psi - delta`, `m >= 1`) and deriving `b0, b1`.
    ///
    /// The sharper feasibility inequalities are *not* assumed here; run
    /// [`verify_cond_params`] to check them with margins.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta: f64,
        m: f64,
        p: f64,
        q: f64,
        phi: f64,
        psi: f64,
        delta: f64,
        a0: f64,
        eps: f64,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(m >= 1.0) {
            return Err(Error::InvalidParam(format!("m must be >= 1, got {m}")));
        }
        if !(0.0 < eps && eps < a0 && a0 < 1.0) {
            return Err(Error::InvalidParam(format!(
                "need 0 < eps < A0 < 1, got eps = {eps}, A0 = {a0}"
            )));
        }
        if (p + q - beta).abs() > EXPONENT_SUM_TOL * beta.max(1.0) {
            return Err(Error::InvalidParam(format!(
                "p + q = {} must equal beta = {beta}",
                p + q
            )));
        }
        if !(p > 0.0 && p < beta / 2.0) {
            return Err(Error::InvalidParam(format!(
                "need 0 < p < beta/2, got p = {p}, beta = {beta}"
            )));
        }
        for (name, v) in [("phi", phi), ("psi", psi), ("delta", delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(phi < psi - delta) {
            return Err(Error::InvalidParam(format!(
                "need phi < psi - delta, got phi = {phi}, psi - delta = {}",
                psi - delta
            )));
        }
        let (b0, b1) = compute_b0_b1(p, q)?;
        Ok(Self {
            beta,
            m,
            p,
            q,
            phi,
            psi,
            delta,
            a0,
            eps,
            b0,
            b1,
        })
    }

    /// Rebuild the pack from its own primary fields, recomputing the
    /// derived constants and re-checking the structural restrictions.
    pub fn revalidated(&self) -> Result<Self> {
        Self::new(
            self.beta, self.m, self.p, self.q, self.phi, self.psi, self.delta, self.a0, self.eps,
        )
    }

    /// Closed-form upper bound `T* = A0^p/(phi b0 p)` on the lifetime of any
    /// controlled solution.
    pub fn upper_bound_time(&self) -> f64 {
        self.a0.powf(self.p) / (self.phi * self.b0 * self.p)
    }

    /// Lower barrier `phi x^{-p}`.
    pub fn lower_barrier(&self, x: f64) -> f64 {
        self.phi * x.powf(-self.p)
    }

    /// Upper barrier `psi x^{-q}`.
    pub fn upper_barrier(&self, x: f64) -> f64 {
        self.psi * x.powf(-self.q)
    }

    /// Corridor midline `sqrt(phi psi) x^{-(p+q)/2}`; sits strictly inside
    /// both barriers for every `x` in `(0, 1]`.
    pub fn midline(&self, x: f64) -> f64 {
        (self.phi * self.psi).sqrt() * x.powf(-(self.p + self.q) / 2.0)
    }
}

/// One feasibility line with both sides made explicit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamLine {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed margin, positive = satisfied (strict inequalities throughout).
    pub margin: f64,
    pub pass: bool,
}

/// The five feasibility lines of the parameter pack, with absolute signed
/// margins (positive = satisfied). Infeasibility is data, not an error.
///
/// 1. `0 < p < q < beta <= 1` together with `p + q = beta`,
/// 2. `m/(b0 q) < phi psi < 1/(m b1 p)`,
/// 3. `A0^p/(phi b0 p) < log(3/2)/(psi log 4)`,
/// 4. `m A0^p/(phi b0 p) < delta`,
/// 5. `phi < psi - delta`.
pub fn cond_params_lines(params: &BarrierParams) -> Vec<ParamLine> {
    let p = params;
    let mut lines = Vec::with_capacity(5);

    // line 1: exponent ordering and the sum identity; lhs/rhs report the sum
    let sum_err = (p.p + p.q - p.beta).abs();
    let order_margin = [p.p, p.q - p.p, p.beta - p.q, 1.0 - p.beta]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let pass1 = p.p > 0.0
        && p.p < p.q
        && p.q < p.beta
        && p.beta <= 1.0
        && sum_err <= EXPONENT_SUM_TOL * p.beta.max(1.0);
    lines.push(ParamLine {
        id: "exponents".into(),
        lhs: p.p + p.q,
        rhs: p.beta,
        margin: if sum_err > EXPONENT_SUM_TOL * p.beta.max(1.0) {
            -sum_err
        } else {
            order_margin
        },
        pass: pass1,
    });

    // line 2: m/(b0 q) < phi psi < 1/(m b1 p); rhs reports the binding bound
    let lo = p.m / (p.b0 * p.q);
    let hi = 1.0 / (p.m * p.b1 * p.p);
    let prod = p.phi * p.psi;
    let margin2 = (prod - lo).min(hi - prod);
    lines.push(ParamLine {
        id: "product_window".into(),
        lhs: prod,
        rhs: if prod - lo <= hi - prod { lo } else { hi },
        margin: margin2,
        pass: margin2 > 0.0,
    });

    // line 3: A0^p/(phi b0 p) < log(3/2)/(psi log 4)
    let lhs3 = p.a0.powf(p.p) / (p.phi * p.b0 * p.p);
    let rhs3 = 1.5f64.ln() / (p.psi * 4f64.ln());
    lines.push(ParamLine {
        id: "a0_small_enough".into(),
        lhs: lhs3,
        rhs: rhs3,
        margin: rhs3 - lhs3,
        pass: rhs3 - lhs3 > 0.0,
    });

    // line 4: m A0^p/(phi b0 p) < delta
    let lhs4 = p.m * lhs3;
    lines.push(ParamLine {
        id: "m_tstar_below_delta".into(),
        lhs: lhs4,
        rhs: p.delta,
        margin: p.delta - lhs4,
        pass: p.delta - lhs4 > 0.0,
    });

    // line 5: phi < psi - delta
    lines.push(ParamLine {
        id: "corridor_width".into(),
        lhs: p.phi,
        rhs: p.psi - p.delta,
        margin: (p.psi - p.delta) - p.phi,
        pass: (p.psi - p.delta) - p.phi > 0.0,
    });

    lines
}

/// Check the five feasibility lines and bundle them as a [`ControlReport`].
pub fn verify_cond_params(params: &BarrierParams) -> ControlReport {
    let records = cond_params_lines(params)
        .into_iter()
        .map(|l| ConditionRecord {
            id: l.id,
            interval: None,
            witness_x: None,
            margin: l.margin,
            sense: Sense::Strict,
            pass: l.pass,
            vacuous: false,
        })
        .collect();
    ControlReport::new(0.0, records)
}

/// Deterministic parameter selection for given `m >= 1` and `beta` in (0, 1].
///
/// Walks `p` down a geometric grid from `beta/4` (ratio 1/2, floor 1e-4)
/// until the window `(m/(b0 q), 1/(m b1 p))` opens up, places `phi psi` at
/// its midpoint, sets `psi = 2 max(sqrt(c), 1)`, `delta = (psi - phi)/4`,
/// and picks `A0` as the largest power of ten that satisfies the two
/// `A0`-dependent lines with a 20% safety margin; `eps = A0/10`.
pub fn select_params(m: f64, beta: f64) -> Result<BarrierParams> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::InvalidParam(format!("m must be >= 1, got {m}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }

    let mut p = beta / 4.0;
    let mut last_gap = f64::NEG_INFINITY;
    let mut last_p = p;
    let (p, q, b0, lo, hi) = loop {
        if p < P_GRID_FLOOR {
            return Err(Error::Infeasible(format!(
                "no admissible p above the grid floor {P_GRID_FLOOR}; tightest window at \
                 p = {last_p}: m/(b0 q) exceeds 1/(m b1 p) by {:.6}",
                -last_gap
            )));
        }
        let q = beta - p;
        let (b0, b1) = compute_b0_b1(p, q)?;
        let lo = m / (b0 * q);
        let hi = 1.0 / (m * b1 * p);
        if lo < hi {
            break (p, q, b0, lo, hi);
        }
        if hi - lo > last_gap {
            last_gap = hi - lo;
            last_p = p;
        }
        p *= 0.5;
    };

    let c = 0.5 * (lo + hi);
    let psi = 2.0 * c.sqrt().max(1.0);
    let phi = c / psi;
    // delta = (psi - phi)/4, already strictly below the corridor-width cap
    let delta = ((psi - phi) / 4.0).min(0.999 * (psi - phi));

    let rhs3 = 1.5f64.ln() / (psi * 4f64.ln());
    let target = 0.8 * rhs3.min(delta / m) * (phi * b0 * p);
    if !(target > 0.0) {
        return Err(Error::Infeasible(format!(
            "A0 target collapsed to {target} at p = {p}"
        )));
    }
    // largest power of ten with A0^p <= target
    let k_min = (-target.log10() / p).ceil().max(1.0);
    if k_min > 307.0 {
        return Err(Error::Infeasible(format!(
            "A0 = 1e-{k_min:.0} underflows f64 at p = {p}; no representable pack"
        )));
    }
    let a0 = 10f64.powi(-(k_min as i32));
    let eps = a0 / 10.0;

    let pack = BarrierParams::new(beta, m, p, q, phi, psi, delta, a0, eps)?;
    let report = verify_cond_params(&pack);
    if !report.pass {
        let failed: Vec<&str> = report.failures().map(|r| r.id.as_str()).collect();
        return Err(Error::Infeasible(format!(
            "selected pack fails its own certification: {}",
            failed.join(", ")
        )));
    }
    Ok(pack)
}

/// Corridor-midline initial data for the pack, sampled on a log grid.
///
/// * `omega0 = sqrt(phi psi) x^{-(p+q)/2}` on `[A0, 1]`, continued at the
///   constant `sqrt(phi psi)` on `[1, 3]`, C^1-tapered to zero on
///   `[eps, A0]` and `[3, 4]`;
/// * `rho0 = 1` on `[A0, 2]`, dropped to zero sharply below `A0` (resolved
///   by one grid cell) and tapered smoothly to zero on `[2, 3]`.
///
/// The sharp lower cutoff keeps the marked trajectory the innermost forced
/// particle. A forced label `l < A0` collapses at a time shrinking like
/// `sqrt(l)`, so any smoothly forced band strictly inside `A0` turns
/// singular before `A(t)` has traversed its decades and would preempt the
/// collapse under study.
///
/// The grid spans `[eps (1 - 1e-3), 4 (1 + 1e-3)]` with `n_particles` nodes,
/// and the node nearest `A0` is moved onto `A0` exactly so the marked
/// trajectory starts on its label.
pub fn make_prepared_data(params: &BarrierParams, n_particles: usize) -> Result<ParticleCloud> {
    let report = verify_cond_params(params);
    if !report.pass {
        let failed: Vec<&str> = report.failures().map(|r| r.id.as_str()).collect();
        return Err(Error::InvalidParam(format!(
            "pack fails certification ({}); refusing to generate data",
            failed.join(", ")
        )));
    }
    let p = *params;
    let amp = (p.phi * p.psi).sqrt();
    let half = (p.p + p.q) / 2.0;

    // corridor membership at the two window ends, guaranteed by cond_params
    debug_assert!(
        p.lower_barrier(p.a0) < p.midline(p.a0) && p.midline(p.a0) < p.upper_barrier(p.a0)
    );
    debug_assert!(p.lower_barrier(1.0) < p.midline(1.0) && p.midline(1.0) < p.upper_barrier(1.0));

    let omega = move |x: f64| -> f64 {
        if x <= p.eps || x >= 4.0 {
            0.0
        } else if x < p.a0 {
            amp * x.powf(-half) * grid::rise(x, p.eps, p.a0)
        } else if x <= 1.0 {
            amp * x.powf(-half)
        } else if x <= 3.0 {
            amp
        } else {
            amp * grid::fall(x, 3.0, 4.0)
        }
    };
    let rho = move |x: f64| -> f64 {
        if x < p.a0 || x >= 3.0 {
            0.0
        } else if x <= 2.0 {
            1.0
        } else {
            grid::fall(x, 2.0, 3.0)
        }
    };

    let mut g = log_grid(p.eps * (1.0 - 1e-3), 4.0 * (1.0 + 1e-3), n_particles)?;
    grid::pin_node(&mut g, p.a0)?;
    sample_profile(omega, rho, &g)
}

/// Certify a cloud as suitably prepared for the pack: the eight data
/// conditions, each checked at every node of its interval with zero slack.
pub fn verify_suitably_prepared(cloud: &ParticleCloud, params: &BarrierParams) -> ControlReport {
    let p = params;
    let xs = cloud.positions();
    let ws = cloud.omega();
    let rs = cloud.rho();
    let mut records = Vec::new();

    // nonnegativity of both fields (cloud invariant, restated as data)
    let min_w = ws.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_r = rs.iter().cloned().fold(f64::INFINITY, f64::min);
    records.push(ConditionRecord::checked(
        "fields_nonnegative",
        Sense::NonStrict,
        min_w.min(min_r),
        0.0,
    ));

    // compact support: omega inside [eps, 4], rho inside [eps, 3]
    let mut outside: f64 = 0.0;
    let mut where_bad = None;
    for i in 0..xs.len() {
        let bad_w = (xs[i] < p.eps || xs[i] > 4.0) && ws[i] != 0.0;
        let bad_r = (xs[i] < p.eps || xs[i] > 3.0) && rs[i] != 0.0;
        if bad_w || bad_r {
            let v = ws[i].max(rs[i]);
            if v > outside {
                outside = v;
                where_bad = Some(xs[i]);
            }
        }
    }
    let mut support = ConditionRecord::checked("compact_support", Sense::Equality, outside, 0.0);
    if let Some(x) = where_bad {
        support = support.with_witness(x);
    }
    records.push(support);

    let window = cloud.nodes_in(p.a0, 1.0);
    let bar = |rec: Option<(f64, f64)>, id: &str, interval: (f64, f64)| match rec {
        None => ConditionRecord::vacuous(id, interval),
        Some((x, m)) => ConditionRecord::checked(id, Sense::Strict, m, 0.0)
            .with_interval(interval)
            .with_witness(x),
    };

    // omega below the upper corridor on [A0, 1]
    records.push(bar(
        worst_upper(
            window
                .clone()
                .map(|i| (xs[i], ws[i], p.upper_barrier(xs[i]))),
        ),
        "omega_below_upper_corridor",
        (p.a0, 1.0),
    ));
    // omega below psi - delta on [1, 4]
    let outer = cloud.nodes_in(1.0, 4.0);
    records.push(bar(
        worst_upper(outer.map(|i| (xs[i], ws[i], p.psi - p.delta))),
        "omega_below_psi_minus_delta",
        (1.0, 4.0),
    ));
    // omega above the lower corridor on [A0, 1]
    records.push(bar(
        worst_lower(window.map(|i| (xs[i], ws[i], p.lower_barrier(xs[i])))),
        "omega_above_lower_corridor",
        (p.a0, 1.0),
    ));
    // omega above phi on [1, 3]
    records.push(bar(
        worst_lower(cloud.nodes_in(1.0, 3.0).map(|i| (xs[i], ws[i], p.phi))),
        "omega_above_phi",
        (1.0, 3.0),
    ));

    // rho <= m everywhere
    let max_r = rs.iter().cloned().fold(0.0, f64::max);
    records.push(ConditionRecord::checked(
        "rho_below_m",
        Sense::NonStrict,
        p.m - max_r,
        0.0,
    ));

    // rho >= 1/m on [A0, 2]
    let inv_m = 1.0 / p.m;
    records.push(
        match worst_lower(cloud.nodes_in(p.a0, 2.0).map(|i| (xs[i], rs[i], inv_m))) {
            None => ConditionRecord::vacuous("rho_above_inverse_m", (p.a0, 2.0)),
            Some((x, m)) => ConditionRecord {
                id: "rho_above_inverse_m".into(),
                interval: Some((p.a0, 2.0)),
                witness_x: Some(x),
                margin: m,
                sense: Sense::NonStrict,
                pass: m >= 0.0,
                vacuous: false,
            },
        },
    );

    ControlReport::new(0.0, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// The hand-pinned reference pack used across the suite.
    pub(crate) fn pack_p0() -> BarrierParams {
        BarrierParams::new(1.0, 1.0, 0.2, 0.8, 1.1875, 1.6, 0.19, 1e-8, 1e-9).unwrap()
    }

    #[test]
    fn b0_b1_branches() {
        let (b0, _) = compute_b0_b1(0.2, 0.8).unwrap();
        assert_relative_eq!(b0, 2f64.ln(), epsilon = 1e-15); // p ln2 = 0.139 < 1
        let (_, b1) = compute_b0_b1(0.2, 0.8).unwrap();
        assert_relative_eq!(b1, 4f64.ln(), epsilon = 1e-15); // q ln4 = 1.109 > 1
                                                             // branch boundary: q = 1/ln4 makes both b1 branches coincide
        let q = 1.0 / 4f64.ln();
        let (_, b1) = compute_b0_b1(0.2, q).unwrap();
        assert_relative_eq!(b1, 4f64.ln(), epsilon = 1e-12);
        assert!(compute_b0_b1(0.0, 0.5).is_err());
        assert!(compute_b0_b1(0.5, 1.0).is_err());
    }

    #[test]
    fn p0_passes_all_five_lines() {
        let rep = verify_cond_params(&pack_p0());
        assert!(
            rep.pass,
            "failures: {:?}",
            rep.failures().collect::<Vec<_>>()
        );
        // line 3 margin = 0.18280 - 0.15258
        let r3 = rep.record("a0_small_enough").unwrap();
        assert_relative_eq!(r3.margin, 0.18280089 - 0.15258462, epsilon = 1e-6);
    }

    #[test]
    fn large_a0_breaks_line_three() {
        let mut p = pack_p0();
        p.a0 = 1e-3;
        p.eps = 1e-4;
        let rep = verify_cond_params(&p);
        assert!(!rep.pass);
        let r3 = rep.record("a0_small_enough").unwrap();
        assert!(!r3.pass);
        // A0^p = 10^{-0.6} ~ 0.2512, LHS ~ 1.526 against RHS ~ 0.1828
        assert_relative_eq!(r3.margin, 0.18280089 - 1.52584624, epsilon = 1e-6);
    }

    #[test]
    fn boundary_product_is_reported_as_fail() {
        // phi psi exactly at m/(b0 q): strict inequality, zero margin fails
        let p = pack_p0();
        let lo = p.m / (p.b0 * p.q);
        let psi = 1.6;
        let phi = lo / psi;
        let pack = BarrierParams::new(1.0, 1.0, 0.2, 0.8, phi, psi, 0.19, 1e-8, 1e-9).unwrap();
        let rep = verify_cond_params(&pack);
        let r2 = rep.record("product_window").unwrap();
        assert!(!r2.pass);
        assert!(r2.margin.abs() < 1e-12);
    }

    #[test]
    fn c_windows_match_hand_computation() {
        // p = 0.2: window (1.8034, 3.6067); p = 0.4: empty (2.4045 > 1.5)
        let (b0, b1) = compute_b0_b1(0.2, 0.8).unwrap();
        assert_relative_eq!(1.0 / (b0 * 0.8), 1.80337, epsilon = 1e-5);
        assert_relative_eq!(1.0 / (b1 * 0.2), 3.60674, epsilon = 1e-5);
        let (b0, b1) = compute_b0_b1(0.4, 0.6).unwrap();
        assert_relative_eq!(1.0 / (b0 * 0.6), 2.40449, epsilon = 1e-5);
        assert_relative_eq!(1.0 / (b1 * 0.4), 1.5, epsilon = 1e-12);
        // m = 2: p = 0.2 infeasible, p = 0.05 feasible
        let (b0, b1) = compute_b0_b1(0.2, 0.8).unwrap();
        assert!(2.0 / (b0 * 0.8) > 1.0 / (2.0 * b1 * 0.2));
        let (b0, b1) = compute_b0_b1(0.05, 0.95).unwrap();
        let lo = 2.0 / (b0 * 0.95);
        let hi = 1.0 / (2.0 * b1 * 0.05);
        assert_relative_eq!(lo, 3.03726, epsilon = 1e-5);
        assert_relative_eq!(hi, 7.21348, epsilon = 1e-5);
    }

    #[test]
    fn selector_handles_m_values() {
        let pack = select_params(1.0, 1.0).unwrap();
        assert!(verify_cond_params(&pack).pass);
        let pack2 = select_params(2.0, 1.0).unwrap();
        assert!(verify_cond_params(&pack2).pass);
        assert!(pack2.p < pack.p, "larger m forces smaller p");
        // absurd m: selection must fail with a named reason
        assert!(matches!(select_params(1e4, 1.0), Err(Error::Infeasible(_))));
        assert!(select_params(1.0, 1.5).is_err());
        assert!(select_params(0.5, 1.0).is_err());
    }

    #[test]
    fn t_star_values() {
        assert_relative_eq!(pack_p0().upper_bound_time(), 0.15258462, epsilon = 1e-7);
        let p = BarrierParams::new(1.0, 1.0, 0.2, 0.8, 1.1875, 1.6, 0.19, 0.01, 1e-3).unwrap();
        assert_relative_eq!(p.upper_bound_time(), 2.41829, epsilon = 1e-4);
        // doubling phi halves T*
        let doubled =
            BarrierParams::new(1.0, 1.0, 0.2, 0.8, 2.0 * 1.1875, 3.2, 0.19, 1e-8, 1e-9).unwrap();
        assert_relative_eq!(
            doubled.upper_bound_time(),
            0.5 * pack_p0().upper_bound_time(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn prepared_data_sits_inside_the_corridor() {
        let p = pack_p0();
        let amp = (p.phi * p.psi).sqrt();
        // at x = 1: value sqrt(1.9) inside (phi, psi - delta)
        assert_relative_eq!(amp, 1.37840488, epsilon = 1e-7);
        assert!(p.phi < amp && amp < p.psi - p.delta);
        // at x = A0: value ~ 1.3784e4 inside (phi 10^{1.6}, psi 10^{6.4})
        let v = p.midline(p.a0);
        assert_relative_eq!(v, 1.37840488e4, max_relative = 1e-7);
        assert!(p.lower_barrier(p.a0) < v && v < p.upper_barrier(p.a0));
        assert_relative_eq!(p.lower_barrier(p.a0), 47.2747, epsilon = 1e-3);
        assert_relative_eq!(p.upper_barrier(p.a0), 4.01902e6, max_relative = 1e-5);
    }

    #[test]
    fn generated_data_verifies_with_zero_slack() {
        let p = pack_p0();
        let cloud = make_prepared_data(&p, 4096).unwrap();
        let rep = verify_suitably_prepared(&cloud, &p);
        assert!(
            rep.pass,
            "failures: {:?}",
            rep.failures().collect::<Vec<_>>()
        );
        // rho bounds hold by construction
        assert!(cloud.rho().iter().all(|&r| r <= p.m));
        for i in cloud.nodes_in(p.a0, 2.0) {
            assert!(cloud.rho()[i] >= 1.0 / p.m);
        }
        // marked label exists exactly
        let idx = cloud.index_of_label(p.a0);
        assert_eq!(cloud.labels()[idx], p.a0);
    }

    #[test]
    fn halved_omega_fails_lower_line_with_witness() {
        let p = pack_p0();
        let cloud = make_prepared_data(&p, 2048).unwrap();
        let mut omega = cloud.omega().to_vec();
        for i in cloud.nodes_in(p.a0, 1.0) {
            omega[i] *= 0.5;
        }
        let broken = ParticleCloud::new(
            cloud.positions().to_vec(),
            omega,
            cloud.rho().to_vec(),
            cloud.labels().to_vec(),
        )
        .unwrap();
        let rep = verify_suitably_prepared(&broken, &p);
        assert!(!rep.pass);
        let r = rep.record("omega_above_lower_corridor").unwrap();
        assert!(!r.pass);
        let w = r.witness_x.unwrap();
        assert!((p.a0..=1.0).contains(&w));
    }

    #[test]
    fn zero_cloud_fails_lower_bounds_per_line() {
        let p = pack_p0();
        let g = log_grid(p.eps * 0.999, 4.004, 512).unwrap();
        let zero = sample_profile(|_| 0.0, |_| 0.0, &g).unwrap();
        let rep = verify_suitably_prepared(&zero, &p);
        assert!(!rep.pass);
        for id in [
            "omega_above_lower_corridor",
            "omega_above_phi",
            "rho_above_inverse_m",
        ] {
            assert!(
                !rep.record(id).unwrap().pass,
                "{id} should fail on zero data"
            );
        }
        for id in [
            "fields_nonnegative",
            "compact_support",
            "omega_below_upper_corridor",
        ] {
            assert!(
                rep.record(id).unwrap().pass,
                "{id} should pass on zero data"
            );
        }
    }

    #[test]
    fn q_bounds_hold_on_prepared_data() {
        // the control-implies-Q-bounds lemma, instantiated at t = 0
        let p = pack_p0();
        let cloud = make_prepared_data(&p, 4096).unwrap();
        let rep = monitor::check_q_single_on_cloud(&cloud, p.a0, &p, 0.0, 0.0);
        assert!(
            rep.pass,
            "failures: {:?}",
            rep.failures().collect::<Vec<_>>()
        );
    }

    #[test]
    fn trapping_sufficiency_holds_for_selected_packs() {
        for (m, beta) in [(1.0, 1.0), (1.5, 0.8), (2.0, 1.0), (1.0, 0.5)] {
            let p = select_params(m, beta).unwrap();
            assert!(
                1.0 / (p.m * p.psi * p.b1 * p.p) > p.phi,
                "trapping sufficiency fails for m={m}, beta={beta}"
            );
        }
    }

    /// Cloud whose omega wanders inside the corridor with a log-periodic
    /// wiggle: geometric interpolation between the barriers at weight
    /// `u(x) = u0 + u1 sin(freq ln x)`.
    fn wiggly_prepared_cloud(p: &BarrierParams, u0: f64, u1: f64, freq: f64) -> ParticleCloud {
        let pk = *p;
        let weight = move |x: f64| u0 + u1 * (freq * x.ln()).sin();
        let omega = move |x: f64| -> f64 {
            if x <= pk.eps || x >= 4.0 {
                0.0
            } else if x < pk.a0 {
                pk.midline(x) * grid::rise(x, pk.eps, pk.a0)
            } else if x <= 1.0 {
                let u = weight(x);
                pk.lower_barrier(x).powf(1.0 - u) * pk.upper_barrier(x).powf(u)
            } else if x <= 3.0 {
                let u = weight(x);
                pk.phi.powf(1.0 - u) * (pk.psi - pk.delta).powf(u)
            } else {
                let u = weight(3.0);
                pk.phi.powf(1.0 - u) * (pk.psi - pk.delta).powf(u) * grid::fall(x, 3.0, 4.0)
            }
        };
        let rho = move |x: f64| -> f64 {
            if x < pk.a0 || x >= 3.0 {
                0.0
            } else if x <= 2.0 {
                1.0
            } else {
                grid::fall(x, 2.0, 3.0)
            }
        };
        let mut g = log_grid(pk.eps * (1.0 - 1e-3), 4.0 * (1.0 + 1e-3), 2048).unwrap();
        grid::pin_node(&mut g, pk.a0).unwrap();
        sample_profile(omega, rho, &g).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // selection round-trip: every pack the selector returns passes its
        // own verifier; large m with small beta may legitimately underflow
        // the representable A0 range and report infeasibility instead
        #[test]
        fn selected_packs_verify(m in 1.0f64..3.0, beta in 0.35f64..1.0) {
            match select_params(m, beta) {
                Ok(pack) => {
                    prop_assert!(verify_cond_params(&pack).pass);
                    prop_assert!(pack.eps < pack.a0);
                }
                Err(Error::Infeasible(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error kind: {e}"),
            }
        }

        // the corridor is nonempty on [A0, 1] for any verified pack
        #[test]
        fn corridor_nonempty(m in 1.0f64..2.5, beta in 0.4f64..1.0, u in 0.0f64..1.0) {
            let pack = select_params(m, beta).unwrap();
            let x = pack.a0.powf(1.0 - u); // log-interpolates [A0, 1]
            prop_assert!(pack.lower_barrier(x) < pack.upper_barrier(x));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        // the velocity-bound lemma at t = 0, quantified: any cloud passing
        // the data certification also satisfies b0 phi x^{-p} <= Q <=
        // b1 psi x^{-q} on [A0, 1] and the log tail bound on [1, 4]
        #[test]
        fn q_bound_lemma_on_random_prepared_clouds(
            u0 in 0.35f64..0.65,
            u1 in -0.15f64..0.15,
            freq in 0.3f64..3.0,
        ) {
            let p = pack_p0();
            let cloud = wiggly_prepared_cloud(&p, u0, u1, freq);
            let cert = verify_suitably_prepared(&cloud, &p);
            prop_assert!(cert.pass, "construction must certify: {:?}",
                cert.failures().collect::<Vec<_>>());
            let q = monitor::check_q_single_on_cloud(&cloud, p.a0, &p, 0.0, 0.0);
            prop_assert!(q.pass, "Q bounds must follow: {:?}",
                q.failures().collect::<Vec<_>>());
        }
    }
}
