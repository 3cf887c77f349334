//! Runtime certification and blowup diagnostics.
//!
//! The control conditions bound the vorticity between power-law barriers on
//! the moving window `[A(t), 1]` (single scale) or on the intervals `I_n`
//! (multiscale); the velocity bounds follow from them and are checked
//! independently, so a velocity-bound violation on a controlled state points
//! at a quadrature bug rather than at the dynamics. Certification at `t = 0`
//! runs with zero slack; runtime checks default to a relative slack of 1e-6
//! because discrete interpolation jitters.
//!
//! Diagnostics: the BKM-type integral `int_0^t ||omega||_inf ds` (global and
//! localized to `(0, delta)`), log-log exponent fits, and the
//! `omega x^{1/2}` envelope that brackets the approach to the stationary
//! profile.

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierParams;
use crate::report::{worst_lower, worst_upper, ConditionRecord, ControlReport, Sense};
use crate::sequences::BarrierSequences;
use crate::sim::{ControlPoint, SimState, Termination};
use crate::state::ParticleCloud;
use crate::velocity::compute_q;
use crate::{Error, Result};

/// Default relative slack for runtime barrier checks.
pub const RUNTIME_SLACK: f64 = 1e-6;

fn barrier_record(
    id: &str,
    interval: (f64, f64),
    slack: f64,
    sense: Sense,
    worst: Option<(f64, f64)>,
) -> ConditionRecord {
    match worst {
        None => ConditionRecord::vacuous(id, interval),
        Some((x, m)) => {
            let mut r = ConditionRecord::checked(id, sense, m, slack);
            r.interval = Some(interval);
            r.witness_x = Some(x);
            r
        }
    }
}

/// Single-scale control conditions on a cloud whose window starts at `a_t`:
/// four barrier lines plus the outer bound `omega <= psi` on `[3, 4]`.
pub fn check_control_single_on_cloud(
    cloud: &ParticleCloud,
    a_t: f64,
    params: &BarrierParams,
    t: f64,
    slack: f64,
) -> ControlReport {
    let xs = cloud.positions();
    let ws = cloud.omega();
    let p = params;
    let window = cloud.nodes_in(a_t, 1.0);
    let records = vec![
        barrier_record(
            "omega_below_upper_barrier",
            (a_t, 1.0),
            slack,
            Sense::Strict,
            worst_upper(
                window
                    .clone()
                    .map(|i| (xs[i], ws[i], p.upper_barrier(xs[i]))),
            ),
        ),
        barrier_record(
            "omega_below_psi_outer",
            (1.0, 3.0),
            slack,
            Sense::Strict,
            worst_upper(cloud.nodes_in(1.0, 3.0).map(|i| (xs[i], ws[i], p.psi))),
        ),
        barrier_record(
            "omega_above_lower_barrier",
            (a_t, 1.0),
            slack,
            Sense::Strict,
            worst_lower(window.map(|i| (xs[i], ws[i], p.lower_barrier(xs[i])))),
        ),
        barrier_record(
            "omega_above_phi_outer",
            (1.0, 2.0),
            slack,
            Sense::Strict,
            worst_lower(cloud.nodes_in(1.0, 2.0).map(|i| (xs[i], ws[i], p.phi))),
        ),
        barrier_record(
            "omega_below_psi_tail",
            (3.0, 4.0),
            slack,
            Sense::NonStrict,
            worst_upper(cloud.nodes_in(3.0, 4.0).map(|i| (xs[i], ws[i], p.psi))),
        ),
    ];
    ControlReport::new(t, records)
}

/// Single-scale control conditions of a running state.
pub fn check_control_single(state: &SimState, params: &BarrierParams, slack: f64) -> ControlReport {
    check_control_single_on_cloud(&state.cloud, state.a(), params, state.t, slack)
}

/// Velocity bounds implied by single-scale control:
/// `b0 phi x^{-p} <= Q(x) <= b1 psi x^{-q}` on `[A(t), 1]` and
/// `Q(x) <= psi log(4/x)` on `[1, 4]`.
pub fn check_q_single_on_cloud(
    cloud: &ParticleCloud,
    a_t: f64,
    params: &BarrierParams,
    t: f64,
    slack: f64,
) -> ControlReport {
    let field = compute_q(cloud);
    let xs = cloud.positions();
    let qv = field.q_nodes();
    let p = params;
    let window = cloud.nodes_in(a_t, 1.0);
    let records = vec![
        barrier_record(
            "q_above_lower",
            (a_t, 1.0),
            slack,
            Sense::NonStrict,
            worst_lower(
                window
                    .clone()
                    .map(|i| (xs[i], qv[i], p.b0 * p.phi * xs[i].powf(-p.p))),
            ),
        ),
        barrier_record(
            "q_below_upper",
            (a_t, 1.0),
            slack,
            Sense::NonStrict,
            worst_upper(window.map(|i| (xs[i], qv[i], p.b1 * p.psi * xs[i].powf(-p.q)))),
        ),
        {
            // log bound on [1, 4]; at x = 4 both sides vanish, so compare
            // with an absolute margin there
            let worst = cloud
                .nodes_in(1.0, 4.0)
                .map(|i| {
                    let bound = p.psi * (4.0 / xs[i]).ln();
                    (xs[i], bound - qv[i])
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                None => ConditionRecord::vacuous("q_below_log_tail", (1.0, 4.0)),
                Some((x, m)) => {
                    ConditionRecord::checked("q_below_log_tail", Sense::NonStrict, m, slack)
                        .with_interval((1.0, 4.0))
                        .with_witness(x)
                }
            }
        },
    ];
    ControlReport::new(t, records)
}

/// Velocity bounds of a running single-scale state.
pub fn check_q_single(state: &SimState, params: &BarrierParams, slack: f64) -> ControlReport {
    check_q_single_on_cloud(&state.cloud, state.a(), params, state.t, slack)
}

/// Multiscale control conditions on a cloud: per-level barriers on
/// `I_n ∩ [a_t, lam0]` for every level whose interval reaches above `a_t`,
/// plus the two outer-interval lines.
pub fn check_control_multiscale_on_cloud(
    cloud: &ParticleCloud,
    a_t: f64,
    seq: &BarrierSequences,
    t: f64,
    slack: f64,
) -> ControlReport {
    let xs = cloud.positions();
    let ws = cloud.omega();
    let mut records = Vec::new();
    for n in seq.active_levels(a_t) {
        let (ilo, ihi) = seq.interval(n);
        let lo = ilo.max(a_t);
        let hi = ihi.min(seq.lam0);
        if lo >= hi {
            continue;
        }
        let nodes = cloud.nodes_in(lo, hi);
        records.push(barrier_record(
            &format!("barrier_lower_level_{n}"),
            (lo, hi),
            slack,
            Sense::Strict,
            worst_lower(
                nodes
                    .clone()
                    .map(|i| (xs[i], ws[i], seq.lower_barrier(n, xs[i]))),
            ),
        ));
        records.push(barrier_record(
            &format!("barrier_upper_level_{n}"),
            (lo, hi),
            slack,
            Sense::Strict,
            worst_upper(nodes.map(|i| (xs[i], ws[i], seq.upper_barrier(n, xs[i])))),
        ));
    }
    // outer lines: omega < psi_1 lam0^{-q_1} on [lam0, lam_m2],
    //              omega > phi_1 lam0^{-q_1} on [lam0, lam_m1]
    let l1 = seq.level(1);
    let outer_hi = l1.psi * seq.lam0.powf(-l1.q);
    let outer_lo = l1.phi * seq.lam0.powf(-l1.q);
    records.push(barrier_record(
        "outer_upper",
        (seq.lam0, seq.lam_m2),
        slack,
        Sense::Strict,
        worst_upper(
            cloud
                .nodes_in(seq.lam0, seq.lam_m2)
                .map(|i| (xs[i], ws[i], outer_hi)),
        ),
    ));
    records.push(barrier_record(
        "outer_lower",
        (seq.lam0, seq.lam_m1),
        slack,
        Sense::Strict,
        worst_lower(
            cloud
                .nodes_in(seq.lam0, seq.lam_m1)
                .map(|i| (xs[i], ws[i], outer_lo)),
        ),
    ));
    ControlReport::new(t, records)
}

/// Multiscale control conditions of a running state.
pub fn check_control_multiscale(
    state: &SimState,
    seq: &BarrierSequences,
    slack: f64,
) -> ControlReport {
    check_control_multiscale_on_cloud(&state.cloud, state.a(), seq, state.t, slack)
}

/// Instantaneous sup norms feeding the BKM integrals.
pub fn sup_norm(cloud: &ParticleCloud) -> f64 {
    cloud.sup_omega_global()
}

pub fn sup_norm_localized(cloud: &ParticleCloud, delta: f64) -> f64 {
    cloud.sup_omega(0.0, delta)
}

/// Trapezoid accumulation of `int ||omega||_inf ds` over a sampled series.
pub fn integrate_sup_series(times: &[f64], sups: &[f64]) -> f64 {
    assert_eq!(times.len(), sups.len());
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (sups[i] + sups[i - 1]);
    }
    acc
}

fn window_nodes(cloud: &ParticleCloud, window: (f64, f64)) -> Result<Vec<usize>> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::FitRejected(format!("empty window [{a}, {b}]")));
    }
    let (lo, hi) = cloud.support();
    if a < lo || b > hi {
        return Err(Error::FitRejected(format!(
            "window [{a}, {b}] escapes the support [{lo}, {hi}]"
        )));
    }
    let nodes: Vec<usize> = cloud.nodes_in(a, b).collect();
    if nodes.len() < 8 {
        return Err(Error::FitRejected(format!(
            "need at least 8 nodes in the window, got {}",
            nodes.len()
        )));
    }
    if let Some(&i) = nodes.iter().find(|&&i| cloud.omega()[i] <= 0.0) {
        return Err(Error::FitRejected(format!(
            "omega not positive at node {i} (x = {})",
            cloud.positions()[i]
        )));
    }
    Ok(nodes)
}

/// Least-squares line through `(ln x, ln omega)` over the window nodes,
/// weighted by the local cell width in `ln x` so clustered nodes do not
/// dominate the fit. Returns `(slope, intercept)`.
pub fn fit_exponent(cloud: &ParticleCloud, window: (f64, f64)) -> Result<(f64, f64)> {
    let nodes = window_nodes(cloud, window)?;
    let xs = cloud.positions();
    let ws = cloud.omega();
    let k = nodes.len();
    let lx: Vec<f64> = nodes.iter().map(|&i| xs[i].ln()).collect();
    let ly: Vec<f64> = nodes.iter().map(|&i| ws[i].ln()).collect();
    // trapezoid cell measure in ln x
    let mut wgt = vec![0.0; k];
    for j in 0..k {
        let left = if j == 0 { lx[0] } else { lx[j - 1] };
        let right = if j == k - 1 { lx[k - 1] } else { lx[j + 1] };
        wgt[j] = 0.5 * (right - left);
    }
    let wsum: f64 = wgt.iter().sum();
    let xbar = lx.iter().zip(&wgt).map(|(x, w)| x * w).sum::<f64>() / wsum;
    let ybar = ly.iter().zip(&wgt).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for j in 0..k {
        sxx += wgt[j] * (lx[j] - xbar) * (lx[j] - xbar);
        sxy += wgt[j] * (lx[j] - xbar) * (ly[j] - ybar);
    }
    if sxx == 0.0 {
        return Err(Error::FitRejected(
            "degenerate window: zero spread in ln x".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, ybar - slope * xbar))
}

/// Envelope of `omega x^{1/2}` over the window nodes: `(phi_eff, psi_eff)`.
pub fn envelope_check(cloud: &ParticleCloud, window: (f64, f64)) -> Result<(f64, f64)> {
    let nodes = window_nodes(cloud, window)?;
    let xs = cloud.positions();
    let ws = cloud.omega();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in &nodes {
        let v = ws[i] * xs[i].sqrt();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// End-of-run diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupDiagnostics {
    pub t_star: Option<f64>,
    pub t_end: f64,
    pub a_end: f64,
    pub bkm_end: f64,
    pub bkm_localized: f64,
    pub exponent_fit: Option<ExponentFit>,
    pub envelope: Option<Envelope>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Envelope {
    pub phi_eff: f64,
    pub psi_eff: f64,
    pub window: (f64, f64),
}

/// Per-run JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub termination: String,
    pub t_end: f64,
    pub a_end: f64,
    pub t_star: Option<f64>,
    pub bkm_end: f64,
    pub bkm_localized: f64,
    pub exponent_fit: Option<ExponentFit>,
    pub envelope: Option<Envelope>,
    pub control_history: Vec<ControlSummary>,
}

/// The pinned triple recorded per step in the JSON report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ControlSummary {
    pub t: f64,
    pub pass: bool,
    pub worst_margin: f64,
}

/// Assemble the report of a finished run. `fit_window` selects the final
/// profile window for the exponent fit and envelope (typically
/// `[A(t_end), 1]` or `[A(t_end), lam0]`).
pub fn run_report(
    termination: Termination,
    state: &SimState,
    history: &[ControlPoint],
    t_star: Option<f64>,
    fit_window: Option<(f64, f64)>,
) -> RunReport {
    let (fit, env) = match fit_window {
        Some(w) => (
            fit_exponent(&state.cloud, w)
                .ok()
                .map(|(slope, intercept)| ExponentFit {
                    slope,
                    intercept,
                    window: w,
                }),
            envelope_check(&state.cloud, w)
                .ok()
                .map(|(phi_eff, psi_eff)| Envelope {
                    phi_eff,
                    psi_eff,
                    window: w,
                }),
        ),
        None => (None, None),
    };
    RunReport {
        termination: termination.as_str().to_string(),
        t_end: state.t,
        a_end: state.a(),
        t_star,
        bkm_end: state.bkm,
        bkm_localized: state.bkm_localized,
        exponent_fit: fit,
        envelope: env,
        control_history: history
            .iter()
            .map(|cp| ControlSummary {
                t: cp.t,
                pass: cp.control_pass && cp.q_pass,
                worst_margin: cp.worst_margin,
            })
            .collect(),
    }
}
