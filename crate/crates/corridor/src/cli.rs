//! Command-line front end.
//!
//! Modes: `certify-params`, `build-sequences`, `exact-check`,
//! `simulate-beta`, `simulate-multiscale`, `sweep`, `plot`. Structured
//! reports go to JSON, bulk numeric series to CSV; identical inputs produce
//! byte-identical outputs. Exit codes: 0 success (and all certifications
//! passed), 1 certification failure (reports still written), 2 usage or
//! config error.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::barrier::{
    self, cond_params_lines, make_prepared_data, select_params, verify_cond_params,
    verify_suitably_prepared, BarrierParams,
};
use crate::exact::{pde_residual, SingularProfile};
use crate::monitor::{self, run_report, RunReport, RUNTIME_SLACK};
use crate::report::ControlReport;
use crate::sequences::{
    build_sequences, make_prepared_data_multiscale, verify_sequence_conditions, BarrierSequences,
    SequenceReport,
};
use crate::sim::{run, MonitorSpec, SimConfig, SimOutcome, SimTrace};
use crate::state::{write_file, ParticleCloud};
use crate::svg::{LineChart, Scale, Series, PALETTE};
use crate::velocity::compute_q;
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "corridor",
    version,
    about = "1D nonlocal transport: particle simulation and barrier certification"
)]
struct Cli {
    /// Output directory for reports and data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Concurrency limit for sweep entries.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Relative slack for runtime barrier checks.
    #[arg(long, global = true, default_value_t = RUNTIME_SLACK)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select (or load) a single-scale parameter pack and certify it.
    CertifyParams(CertifyArgs),
    /// Build the multiscale sequences and verify every condition.
    BuildSequences(BuildSeqArgs),
    /// Print the PDE residual table of the stationary singular family.
    ExactCheck,
    /// Certify and run a single-scale collapse.
    SimulateBeta(SimulateArgs),
    /// Certify and run a multiscale collapse.
    SimulateMultiscale(SimulateArgs),
    /// Run every entry of a manifest and aggregate a summary.
    Sweep(SweepArgs),
    /// Render trace/profile CSV files to SVG charts.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Explicit pack JSON; overrides --m/--beta selection.
    #[arg(long)]
    pack: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildSeqArgs {
    #[arg(long, default_value_t = 0.8)]
    phi1: f64,
    #[arg(long, default_value_t = 0.05)]
    eps1: f64,
    #[arg(long = "lam-m2", default_value_t = 0.9)]
    lam_m2: f64,
    #[arg(long = "lam-m1", default_value_t = 0.85)]
    lam_m1: f64,
    #[arg(long, default_value_t = 0.8)]
    lam0: f64,
    #[arg(long = "L", default_value_t = 5.0)]
    big_l: f64,
    #[arg(long = "C", default_value_t = 4.0)]
    c_const: f64,
    #[arg(long, default_value_t = 8)]
    levels: usize,
    /// Also emit the per-level CSV table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Flat JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Initial data CSV (snapshot format); generated from the pack when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Explicit pack JSON (single-scale mode only).
    #[arg(long)]
    pack: Option<PathBuf>,
    /// Run even if certification fails (recorded in the report).
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Trace CSV to chart (t vs A, t vs bkm).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Profile snapshot CSV for a log-log overlay.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Pack JSON whose barriers are overlaid on the profile chart.
    #[arg(long)]
    pack: Option<PathBuf>,
}

/// Flat configuration for `simulate-beta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaRunConfig {
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_particles")]
    pub n_particles: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Marker threshold; defaults to `A0 * 1e-4` (four decades of descent).
    #[serde(default)]
    pub a_stop: Option<f64>,
    #[serde(default = "default_omega_cap")]
    pub omega_cap: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

/// Flat configuration for `simulate-multiscale`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiscaleRunConfig {
    #[serde(default = "default_phi1")]
    pub phi1: f64,
    #[serde(default = "default_eps1")]
    pub eps1: f64,
    #[serde(default = "default_lam_m2")]
    pub lam_m2: f64,
    #[serde(default = "default_lam_m1")]
    pub lam_m1: f64,
    #[serde(default = "default_lam0")]
    pub lam0: f64,
    #[serde(default = "default_big_l")]
    pub big_l: f64,
    #[serde(default = "default_c_const")]
    pub c_const: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_a0_ms")]
    pub a0: f64,
    #[serde(default = "default_delta_ms")]
    pub delta: f64,
    #[serde(default = "default_particles")]
    pub n_particles: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Marker threshold; defaults to `a0 * 1e-4` (four decades of descent).
    #[serde(default)]
    pub a_stop: Option<f64>,
    #[serde(default = "default_omega_cap")]
    pub omega_cap: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_m() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_particles() -> usize {
    8192
}
fn default_cfl() -> f64 {
    0.1
}
fn default_dt_init() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    1.0
}
fn default_omega_cap() -> f64 {
    1e15
}
fn default_phi1() -> f64 {
    0.8
}
fn default_eps1() -> f64 {
    0.05
}
fn default_lam_m2() -> f64 {
    0.9
}
fn default_lam_m1() -> f64 {
    0.85
}
fn default_lam0() -> f64 {
    0.8
}
fn default_big_l() -> f64 {
    5.0
}
fn default_c_const() -> f64 {
    4.0
}
fn default_levels() -> usize {
    8
}
fn default_a0_ms() -> f64 {
    1e-4
}
fn default_delta_ms() -> f64 {
    0.05
}

/// Combined certification document written by the simulate modes.
#[derive(Debug, Serialize, Deserialize)]
struct Certification {
    pass: bool,
    forced: bool,
    params_report: Option<serde_json::Value>,
    /// Absent when the pack already failed and no external data was given,
    /// since the generator refuses uncertified packs.
    data_report: Option<ControlReport>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through the error path with status 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(..) | Error::Json(..) | Error::Parse(..) | Error::InvalidParam(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::CertifyParams(args) => certify_params_cmd(cli, args),
        Command::BuildSequences(args) => build_sequences_cmd(cli, args),
        Command::ExactCheck => exact_check_cmd(cli),
        Command::SimulateBeta(args) => simulate_beta_cmd(cli, args),
        Command::SimulateMultiscale(args) => simulate_multiscale_cmd(cli, args),
        Command::Sweep(args) => sweep_cmd(cli, args),
        Command::Plot(args) => plot_cmd(cli, args),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json(path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Json(path.display().to_string(), e))?;
    write_file(path, &(text + "\n"))
}

fn out_dir(cli: &Cli) -> Option<&Path> {
    cli.out.as_deref()
}

fn write_meta(dir: &Path, command: &str) -> Result<()> {
    #[derive(Serialize)]
    struct Meta<'a> {
        tool: &'a str,
        version: &'a str,
        command: &'a str,
    }
    write_json(
        &dir.join("meta.json"),
        &Meta {
            tool: "corridor",
            version: env!("CARGO_PKG_VERSION"),
            command,
        },
    )
}

fn certify_params_cmd(cli: &Cli, args: &CertifyArgs) -> Result<i32> {
    let pack = match &args.pack {
        Some(path) => load_json::<BarrierParams>(path)?.revalidated()?,
        None => select_params(args.m, args.beta)?,
    };
    let lines = cond_params_lines(&pack);
    let pass = lines.iter().all(|l| l.pass);
    #[derive(Serialize)]
    struct Doc<'a> {
        params: &'a BarrierParams,
        lines: &'a [barrier::ParamLine],
        pass: bool,
    }
    let doc = Doc {
        params: &pack,
        lines: &lines,
        pass,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Json("report".into(), e))?;
    println!("{text}");
    if let Some(dir) = out_dir(cli) {
        write_json(&dir.join("params_report.json"), &doc)?;
        write_meta(dir, "certify-params")?;
    }
    Ok(if pass { 0 } else { 1 })
}

fn build_sequences_cmd(cli: &Cli, args: &BuildSeqArgs) -> Result<i32> {
    let seq = build_sequences(
        args.phi1,
        args.eps1,
        args.lam_m2,
        args.lam_m1,
        args.lam0,
        args.big_l,
        args.c_const,
        args.levels,
    )?;
    let report = verify_sequence_conditions(&seq);
    #[derive(Serialize)]
    struct Doc<'a> {
        sequences: &'a BarrierSequences,
        report: &'a SequenceReport,
    }
    let doc = Doc {
        sequences: &seq,
        report: &report,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Json("report".into(), e))?;
    println!("{text}");
    if args.csv || out_dir(cli).is_some() {
        let csv = sequences_csv(&seq);
        if args.csv {
            print!("{csv}");
        }
        if let Some(dir) = out_dir(cli) {
            write_json(&dir.join("sequences_report.json"), &doc)?;
            write_file(&dir.join("sequences.csv"), &csv)?;
            write_meta(dir, "build-sequences")?;
        }
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn sequences_csv(seq: &BarrierSequences) -> String {
    let mut out = String::from("n,lam,eps,p,q,phi,psi,mu,F_bracket\n");
    for l in &seq.levels {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            l.n,
            l.lam,
            l.eps,
            l.p,
            l.q,
            l.phi,
            l.psi,
            l.mu,
            l.f_bracket.map_or(String::new(), |b| format!("{b:.16e}")),
        ));
    }
    out
}

fn exact_check_cmd(cli: &Cli) -> Result<i32> {
    let mut out = String::from("beta,x,h,residual\n");
    for beta in [0.5, 1.0, 2.0] {
        let p = SingularProfile::new(1.0, beta)?;
        for x in [0.1, 1.0, 2.0] {
            for h in [1e-2, 1e-3, 1e-4] {
                let r = pde_residual(
                    |x, _| p.omega(x).unwrap(),
                    |_, _| p.rho(),
                    |x, _| p.u(x).unwrap(),
                    beta,
                    x,
                    0.0,
                    h,
                )?;
                out.push_str(&format!("{beta},{x},{h:e},{:.16e}\n", r.omega_eq));
            }
        }
    }
    print!("{out}");
    if let Some(dir) = out_dir(cli) {
        write_file(&dir.join("exact_check.csv"), &out)?;
        write_meta(dir, "exact-check")?;
    }
    Ok(0)
}

fn require_out(cli: &Cli) -> Result<&Path> {
    out_dir(cli).ok_or_else(|| Error::InvalidParam("--out <dir> is required for this mode".into()))
}

fn write_outcome(
    dir: &Path,
    outcome: &SimOutcome,
    report: &RunReport,
    initial: &ParticleCloud,
) -> Result<()> {
    outcome.trace.write_csv(&dir.join("trace.csv"))?;
    let v0 = compute_q(initial);
    initial.write_csv(&dir.join("snapshot_init.csv"), Some(&v0))?;
    let vf = compute_q(&outcome.state.cloud);
    outcome
        .state
        .cloud
        .write_csv(&dir.join("snapshot_final.csv"), Some(&vf))?;
    for (step, _t, cloud) in &outcome.snapshots {
        cloud.write_csv(&dir.join(format!("snapshot_step{step:06}.csv")), None)?;
    }
    write_json(&dir.join("report.json"), report)
}

fn simulate_beta_cmd(cli: &Cli, args: &SimulateArgs) -> Result<i32> {
    let dir = require_out(cli)?;
    let cfg: BetaRunConfig = load_json(&args.config)?;
    let pack = match &args.pack {
        Some(path) => load_json::<BarrierParams>(path)?.revalidated()?,
        None => select_params(cfg.m, cfg.beta)?,
    };
    write_json(&dir.join("pack.json"), &pack)?;

    // certification precedes simulation: pack first, then the data (which
    // can only be generated from a certified pack)
    let params_report = verify_cond_params(&pack);
    let lines = serde_json::to_value(cond_params_lines(&pack))
        .map_err(|e| Error::Json("params lines".into(), e))?;
    let cloud = if let Some(path) = &args.data {
        Some(ParticleCloud::read_csv(path)?)
    } else if params_report.pass {
        Some(make_prepared_data(&pack, cfg.n_particles)?)
    } else {
        None
    };
    let data_report = cloud.as_ref().map(|c| verify_suitably_prepared(c, &pack));
    let certified = params_report.pass && data_report.as_ref().is_some_and(|r| r.pass);
    let cert = Certification {
        pass: certified,
        forced: args.force && !certified,
        params_report: Some(lines),
        data_report,
    };
    write_json(&dir.join("certification.json"), &cert)?;
    write_meta(dir, "simulate-beta")?;
    if !certified && !args.force {
        eprintln!("certification failed; reports written to {}", dir.display());
        return Ok(1);
    }
    let cloud = match cloud {
        Some(c) => c,
        None => {
            eprintln!("no data to simulate: pack failed certification and no --data given");
            return Ok(1);
        }
    };

    let sim_cfg = SimConfig {
        beta: pack.beta,
        dt_init: cfg.dt_init,
        cfl: cfg.cfl,
        t_max: cfg.t_max,
        a_stop: cfg.a_stop.unwrap_or(pack.a0 * 1e-4),
        omega_cap: cfg.omega_cap,
        snapshot_every: cfg.snapshot_every,
        marker_label: Some(pack.a0),
        bkm_delta: Some(pack.a0),
    };
    let monitor_spec = MonitorSpec::SingleScale {
        params: pack,
        slack: cli.tolerance,
    };
    let outcome = run(cloud.clone(), &sim_cfg, &monitor_spec, |_| {})?;
    let fit_window = (outcome.state.a() < 1.0).then(|| (outcome.state.a(), 1.0));
    let report = run_report(
        outcome.termination,
        &outcome.state,
        &outcome.control_history,
        Some(pack.upper_bound_time()),
        fit_window,
    );
    write_outcome(dir, &outcome, &report, &cloud)?;
    let controlled = outcome.control_history.iter().all(|cp| cp.control_pass);
    println!(
        "terminated: {} at t = {:.6e}, A = {:.6e}, bkm = {:.6e}, controlled = {}",
        report.termination, report.t_end, report.a_end, report.bkm_end, controlled
    );
    Ok(if controlled { 0 } else { 1 })
}

fn simulate_multiscale_cmd(cli: &Cli, args: &SimulateArgs) -> Result<i32> {
    let dir = require_out(cli)?;
    let cfg: MultiscaleRunConfig = load_json(&args.config)?;
    let seq = build_sequences(
        cfg.phi1,
        cfg.eps1,
        cfg.lam_m2,
        cfg.lam_m1,
        cfg.lam0,
        cfg.big_l,
        cfg.c_const,
        cfg.levels,
    )?;
    write_json(&dir.join("sequences.json"), &seq)?;
    let seq_report = verify_sequence_conditions(&seq);
    write_json(&dir.join("sequences_report.json"), &seq_report)?;

    let cloud = match &args.data {
        Some(path) => ParticleCloud::read_csv(path)?,
        None => make_prepared_data_multiscale(&seq, cfg.a0, cfg.delta, cfg.n_particles)?,
    };
    let data_report = monitor::check_control_multiscale_on_cloud(&cloud, cfg.a0, &seq, 0.0, 0.0);
    let certified = data_report.pass;
    let cert = Certification {
        pass: certified,
        forced: args.force && !certified,
        params_report: Some(
            serde_json::to_value(&seq_report).map_err(|e| Error::Json("seq report".into(), e))?,
        ),
        data_report: Some(data_report),
    };
    write_json(&dir.join("certification.json"), &cert)?;
    write_meta(dir, "simulate-multiscale")?;
    if !certified && !args.force {
        eprintln!(
            "data certification failed; reports written to {}",
            dir.display()
        );
        return Ok(1);
    }

    let sim_cfg = SimConfig {
        beta: 1.0,
        dt_init: cfg.dt_init,
        cfl: cfg.cfl,
        t_max: cfg.t_max,
        a_stop: cfg.a_stop.unwrap_or(cfg.a0 * 1e-4),
        omega_cap: cfg.omega_cap,
        snapshot_every: cfg.snapshot_every,
        marker_label: Some(cfg.a0),
        bkm_delta: Some(cfg.a0),
    };
    let lam0 = seq.lam0;
    let monitor_spec = MonitorSpec::Multiscale {
        seq,
        slack: cli.tolerance,
    };
    let outcome = run(cloud.clone(), &sim_cfg, &monitor_spec, |_| {})?;
    let fit_window = (outcome.state.a() < lam0).then(|| (outcome.state.a(), lam0));
    let report = run_report(
        outcome.termination,
        &outcome.state,
        &outcome.control_history,
        None,
        fit_window,
    );
    write_outcome(dir, &outcome, &report, &cloud)?;
    let controlled = outcome.control_history.iter().all(|cp| cp.control_pass);
    println!(
        "terminated: {} at t = {:.6e}, A = {:.6e}, bkm = {:.6e}, controlled = {}",
        report.termination, report.t_end, report.a_end, report.bkm_end, controlled
    );
    Ok(if controlled { 0 } else { 1 })
}

/// One sweep manifest entry; `config` holds the flat run configuration of
/// the selected mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub id: String,
    pub mode: String,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepManifest {
    pub entries: Vec<SweepEntry>,
}

struct SweepRow {
    id: String,
    status: String,
    t_end: Option<f64>,
    a_end: Option<f64>,
    bkm_end: Option<f64>,
    controlled: Option<bool>,
}

fn sweep_entry(entry: &SweepEntry, slack: f64) -> Result<(RunReport, bool)> {
    match entry.mode.as_str() {
        "beta" => {
            let cfg: BetaRunConfig = serde_json::from_value(entry.config.clone())
                .map_err(|e| Error::Json(format!("entry {}", entry.id), e))?;
            let pack = select_params(cfg.m, cfg.beta)?;
            let cloud = make_prepared_data(&pack, cfg.n_particles)?;
            let data_report = verify_suitably_prepared(&cloud, &pack);
            if !data_report.pass {
                return Err(Error::InvalidParam(format!(
                    "entry {}: data certification failed",
                    entry.id
                )));
            }
            let sim_cfg = SimConfig {
                beta: pack.beta,
                dt_init: cfg.dt_init,
                cfl: cfg.cfl,
                t_max: cfg.t_max,
                a_stop: cfg.a_stop.unwrap_or(pack.a0 * 1e-4),
                omega_cap: cfg.omega_cap,
                snapshot_every: 0,
                marker_label: Some(pack.a0),
                bkm_delta: Some(pack.a0),
            };
            let spec = MonitorSpec::SingleScale {
                params: pack,
                slack,
            };
            let outcome = run(cloud, &sim_cfg, &spec, |_| {})?;
            let controlled = outcome.control_history.iter().all(|cp| cp.control_pass);
            let report = run_report(
                outcome.termination,
                &outcome.state,
                &outcome.control_history,
                Some(pack.upper_bound_time()),
                None,
            );
            Ok((report, controlled))
        }
        "multiscale" => {
            let cfg: MultiscaleRunConfig = serde_json::from_value(entry.config.clone())
                .map_err(|e| Error::Json(format!("entry {}", entry.id), e))?;
            let seq = build_sequences(
                cfg.phi1,
                cfg.eps1,
                cfg.lam_m2,
                cfg.lam_m1,
                cfg.lam0,
                cfg.big_l,
                cfg.c_const,
                cfg.levels,
            )?;
            let cloud = make_prepared_data_multiscale(&seq, cfg.a0, cfg.delta, cfg.n_particles)?;
            let sim_cfg = SimConfig {
                beta: 1.0,
                dt_init: cfg.dt_init,
                cfl: cfg.cfl,
                t_max: cfg.t_max,
                a_stop: cfg.a_stop.unwrap_or(cfg.a0 * 1e-4),
                omega_cap: cfg.omega_cap,
                snapshot_every: 0,
                marker_label: Some(cfg.a0),
                bkm_delta: Some(cfg.a0),
            };
            let spec = MonitorSpec::Multiscale { seq, slack };
            let outcome = run(cloud, &sim_cfg, &spec, |_| {})?;
            let controlled = outcome.control_history.iter().all(|cp| cp.control_pass);
            let report = run_report(
                outcome.termination,
                &outcome.state,
                &outcome.control_history,
                None,
                None,
            );
            Ok((report, controlled))
        }
        other => Err(Error::InvalidParam(format!(
            "entry {}: unknown mode {other:?} (expected \"beta\" or \"multiscale\")",
            entry.id
        ))),
    }
}

fn sweep_cmd(cli: &Cli, args: &SweepArgs) -> Result<i32> {
    let dir = require_out(cli)?;
    let manifest: SweepManifest = load_json(&args.manifest)?;
    let slack = cli.tolerance;
    let jobs = cli.jobs.max(1);

    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..manifest.entries.len()).collect());
    let results: Vec<Mutex<Option<SweepRow>>> = (0..manifest.entries.len())
        .map(|_| Mutex::new(None))
        .collect();

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(manifest.entries.len().max(1)) {
            scope.spawn(|| loop {
                let idx = match queue.lock().unwrap().pop_front() {
                    Some(i) => i,
                    None => break,
                };
                let entry = &manifest.entries[idx];
                let row = match sweep_entry(entry, slack) {
                    Ok((report, controlled)) => SweepRow {
                        id: entry.id.clone(),
                        status: "ok".into(),
                        t_end: Some(report.t_end),
                        a_end: Some(report.a_end),
                        bkm_end: Some(report.bkm_end),
                        controlled: Some(controlled),
                    },
                    Err(e) => SweepRow {
                        id: entry.id.clone(),
                        status: format!("failed: {e}").replace(',', ";").replace('\n', " "),
                        t_end: None,
                        a_end: None,
                        bkm_end: None,
                        controlled: None,
                    },
                };
                *results[idx].lock().unwrap() = Some(row);
            });
        }
    });

    let mut out = String::from("id,status,t_end,a_end,bkm_end,controlled_throughout\n");
    for cell in &results {
        let row = cell
            .lock()
            .unwrap()
            .take()
            .expect("every entry produces a row");
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.id,
            row.status,
            fmt(row.t_end),
            fmt(row.a_end),
            fmt(row.bkm_end),
            row.controlled.map_or(String::new(), |b| b.to_string()),
        ));
    }
    print!("{out}");
    write_file(&dir.join("sweep_summary.csv"), &out)?;
    write_meta(dir, "sweep")?;
    Ok(0)
}

fn plot_cmd(cli: &Cli, args: &PlotArgs) -> Result<i32> {
    let dir = require_out(cli)?;
    if args.trace.is_none() && args.profile.is_none() {
        return Err(Error::InvalidParam(
            "plot needs --trace and/or --profile".into(),
        ));
    }
    if let Some(path) = &args.trace {
        let trace = SimTrace::read_csv(path)?;
        let a_chart = LineChart {
            title: "marked trajectory".into(),
            x_label: "t".into(),
            y_label: "A(t)".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
            series: vec![Series {
                name: "A(t)".into(),
                color: PALETTE[0],
                points: trace.rows.iter().map(|r| (r.t, r.a)).collect(),
                dashed: false,
            }],
        };
        write_file(&dir.join("trace_a.svg"), &a_chart.render()?)?;
        let bkm_chart = LineChart {
            title: "accumulated sup norm".into(),
            x_label: "t".into(),
            y_label: "int ||omega|| ds".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: vec![Series {
                name: "bkm".into(),
                color: PALETTE[1],
                points: trace.rows.iter().map(|r| (r.t, r.bkm)).collect(),
                dashed: false,
            }],
        };
        write_file(&dir.join("trace_bkm.svg"), &bkm_chart.render()?)?;
    }
    if let Some(path) = &args.profile {
        let cloud = ParticleCloud::read_csv(path)?;
        let mut series = vec![Series {
            name: "omega".into(),
            color: PALETTE[0],
            points: cloud
                .positions()
                .iter()
                .zip(cloud.omega())
                .map(|(&x, &w)| (x, w))
                .collect(),
            dashed: false,
        }];
        if let Some(pack_path) = &args.pack {
            let pack: BarrierParams = load_json(pack_path)?;
            let barrier_points = |f: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
                let g = crate::grid::log_grid(pack.a0, 1.0, 200).unwrap_or_default();
                g.iter().map(|&x| (x, f(x))).collect()
            };
            series.push(Series {
                name: "phi x^-p".into(),
                color: PALETTE[2],
                points: barrier_points(&|x| pack.lower_barrier(x)),
                dashed: true,
            });
            series.push(Series {
                name: "psi x^-q".into(),
                color: PALETTE[1],
                points: barrier_points(&|x| pack.upper_barrier(x)),
                dashed: true,
            });
        }
        let chart = LineChart {
            title: "profile".into(),
            x_label: "x".into(),
            y_label: "omega".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series,
        };
        write_file(&dir.join("profile.svg"), &chart.render()?)?;
    }
    write_meta(dir, "plot")?;
    Ok(0)
}
