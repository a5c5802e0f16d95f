//! Subcommand implementations.

mod scan;
mod verify;

pub use scan::cmd_scan;
pub use verify::{cmd_verify, Check};

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use impactres::resonance::{
    analyze, find_resonance, AveragedField, ClassifiedBranch, EquilibriumBranch, ResonancePoint,
    TauGrid,
};
use impactres::simulator::{
    lock_report, observables, simulate, start_on_branch, LockCriteria, LockReport, SimState,
    Trajectory,
};
use impactres::Error;
use serde::Serialize;

use crate::config::{InitialCondition, RunConfig};
use crate::format::{num, write_csv};

pub const RESONANCES_HEADER: &str = "n,j_pq,omega0,omega0_prime,a_n_max,exists";
pub const EQUILIBRIA_HEADER: &str = "branch_id,sign,l,tau,eta0,a_n,a_coeff,stability";
pub const EVENTS_HEADER: &str = "t_alpha,v_minus,j_alpha,eta_hat";
pub const SAMPLES_HEADER: &str = "t,x,v";

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    Verify(usize),
    Config(String),
    NoBranch(String),
    Integration(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Config(_) => 2,
            Failure::NoBranch(_) => 3,
            Failure::Integration(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Verify(n) => write!(f, "{n} verification check(s) failed"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::NoBranch(m) => write!(f, "no equilibrium branch: {m}"),
            Failure::Integration(m) => write!(f, "integration error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoUniformBranch { .. } | Error::NoResonance(_) | Error::DegenerateResonance => {
                Failure::NoBranch(e.to_string())
            }
            Error::Integration { .. } => Failure::Integration(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

/// Destination for one output stream: a file under the output dir, or stdout.
pub fn sink(dir: Option<&Path>, name: &str) -> CmdResult<Box<dyn Write>> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            let path: PathBuf = d.join(name);
            log::info!("writing {}", path.display());
            Ok(Box::new(BufWriter::new(File::create(path)?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn grid(cfg: &RunConfig) -> TauGrid {
    TauGrid::uniform(cfg.forcing.slow_period(), cfg.resonance.tau_samples)
}

/// Averaged field at the configured `(q, p)` resonance.
pub fn field(cfg: &RunConfig) -> CmdResult<AveragedField> {
    let rp = find_resonance(
        &cfg.oscillator,
        cfg.forcing.nu(),
        cfg.resonance.q,
        cfg.resonance.p,
    )?;
    Ok(AveragedField::new(cfg.oscillator, cfg.forcing, rp)?)
}

/// One row of the resonance table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceRow {
    pub n: u32,
    pub point: Option<ResonancePoint>,
    pub a_n_max: Option<f64>,
    /// `true`/`false` from `max|A_n| < 1`, else `degenerate` or `no_resonance`.
    pub exists: String,
}

pub fn resonance_table(cfg: &RunConfig) -> Vec<ResonanceRow> {
    let g = grid(cfg);
    (1..=cfg.resonance.n_max)
        .map(
            |n| match AveragedField::at_order(cfg.oscillator, cfg.forcing, n) {
                Ok(field) => {
                    let a = field.max_abs_a_n(&g);
                    ResonanceRow {
                        n,
                        point: Some(field.rp),
                        a_n_max: Some(a),
                        exists: (a < 1.0).to_string(),
                    }
                }
                Err(e) => ResonanceRow {
                    n,
                    point: None,
                    a_n_max: None,
                    // ω₀′ vanishes identically at Δ = 0, whether or not ω₀ matches
                    exists: match e {
                        _ if cfg.oscillator.delta == 0.0 => "degenerate".into(),
                        Error::DegenerateResonance => "degenerate".into(),
                        _ => "no_resonance".into(),
                    },
                },
            },
        )
        .collect()
}

pub fn cmd_resonances(cfg: &RunConfig, out: Option<&Path>) -> CmdResult {
    let rows: Vec<Vec<String>> = resonance_table(cfg)
        .into_iter()
        .map(|r| {
            let p = r.point.as_ref();
            vec![
                r.n.to_string(),
                num(p.map_or(f64::NAN, |p| p.j_pq)),
                num(p.map_or(f64::NAN, |p| p.omega0)),
                num(p.map_or(f64::NAN, |p| p.omega0_prime)),
                num(r.a_n_max.unwrap_or(f64::NAN)),
                r.exists,
            ]
        })
        .collect();
    write_csv(sink(out, "resonances.csv")?, RESONANCES_HEADER, &rows)?;
    Ok(())
}

pub fn classified(cfg: &RunConfig) -> CmdResult<(AveragedField, Vec<ClassifiedBranch>)> {
    let f = field(cfg)?;
    let branches = analyze(&f, &grid(cfg))?;
    Ok((f, branches))
}

pub fn cmd_equilibria(cfg: &RunConfig, out: Option<&Path>) -> CmdResult {
    let (_, branches) = classified(cfg)?;
    let mut rows = Vec::new();
    for c in &branches {
        let b = &c.branch;
        let label = b.stability.map_or("unclassified", |s| s.as_str());
        for i in 0..b.tau.len() {
            rows.push(vec![
                b.id.to_string(),
                b.sign.to_string(),
                b.l.to_string(),
                num(b.tau[i]),
                num(b.eta0[i]),
                num(b.a_n[i]),
                num(c.coefficients.a[i]),
                label.to_string(),
            ]);
        }
    }
    write_csv(sink(out, "equilibria.csv")?, EQUILIBRIA_HEADER, &rows)?;
    Ok(())
}

/// Lock-report record written as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockRecord {
    pub locked: bool,
    pub mean_impulse: Option<f64>,
    pub circ_std: Option<f64>,
    pub matched_branch: Option<usize>,
    pub matched_stability: Option<String>,
    pub j_pq: f64,
    pub impacts: usize,
    pub events_used: usize,
    pub note: Option<String>,
}

impl LockRecord {
    fn from_report(
        rep: &LockReport,
        branches: &[EquilibriumBranch],
        j_pq: f64,
        impacts: usize,
    ) -> Self {
        let matched_stability = rep
            .matched_branch
            .and_then(|id| branches.iter().find(|b| b.id == id))
            .and_then(|b| b.stability)
            .map(|s| s.as_str().to_string());
        Self {
            locked: rep.locked,
            mean_impulse: Some(rep.mean_impulse),
            circ_std: Some(rep.circ_std),
            matched_branch: rep.matched_branch,
            matched_stability,
            j_pq,
            impacts,
            events_used: rep.events_used,
            note: None,
        }
    }

    fn unavailable(j_pq: f64, impacts: usize, note: String) -> Self {
        Self {
            locked: false,
            mean_impulse: None,
            circ_std: None,
            matched_branch: None,
            matched_stability: None,
            j_pq,
            impacts,
            events_used: 0,
            note: Some(note),
        }
    }
}

/// Trajectory plus lock diagnostics for one configuration.
pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub record: LockRecord,
}

fn initial_state(
    cfg: &RunConfig,
    field: &AveragedField,
    branches: &[EquilibriumBranch],
) -> CmdResult<SimState> {
    match cfg.simulation.initial {
        InitialCondition::State { t, x, v } => Ok(SimState { t, x, v }),
        InitialCondition::Branch {
            sign,
            l,
            offset,
            t_min,
        } => {
            let sign = match sign {
                Some(s) if s == 1 || s == -1 => s,
                Some(s) => {
                    return Err(Failure::Config(format!(
                        "branch sign must be +1 or -1, got {s}"
                    )))
                }
                None => branches
                    .iter()
                    .find(|b| b.stability.is_some_and(|s| s.is_stable()))
                    .map(|b| b.sign)
                    .ok_or_else(|| Failure::NoBranch("no stable branch to start on".into()))?,
            };
            if branches.is_empty() {
                return Err(Failure::NoBranch(
                    "no equilibrium branch to start on".into(),
                ));
            }
            Ok(start_on_branch(field, sign, l, offset, t_min)?)
        }
    }
}

pub fn run_simulation(cfg: &RunConfig) -> CmdResult<SimulationOutcome> {
    let field = field(cfg)?;
    let branches: Vec<EquilibriumBranch> = match analyze(&field, &grid(cfg)) {
        Ok(c) => c.into_iter().map(|c| c.branch).collect(),
        Err(Error::NoUniformBranch { .. }) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let start = initial_state(cfg, &field, &branches)?;
    let opts = cfg.simulation.options(Some(field.rp.frame_rate()));
    log::info!(
        "simulating from t = {}, x = {}, v = {}",
        start.t,
        start.x,
        start.v
    );
    let horizon = cfg
        .simulation
        .horizon_for(std::f64::consts::TAU / field.rp.frame_rate());
    let trajectory = simulate(&cfg.oscillator, &cfg.forcing, start, horizon, &opts)?;
    log::info!(
        "{} impacts, {} accepted / {} rejected steps",
        trajectory.events.len(),
        trajectory.accepted_steps,
        trajectory.rejected_steps
    );
    let impacts = trajectory.events.len();
    let j_pq = field.rp.j_pq;
    let record = match observables(&trajectory, &field.rp).and_then(|obs| {
        lock_report(
            &obs,
            &field,
            &branches,
            cfg.simulation.window(),
            &LockCriteria::default(),
        )
    }) {
        Ok(rep) => LockRecord::from_report(&rep, &branches, j_pq, impacts),
        Err(e @ (Error::InsufficientData(_) | Error::InvalidParameter(_))) => {
            LockRecord::unavailable(j_pq, impacts, e.to_string())
        }
        Err(e) => return Err(e.into()),
    };
    Ok(SimulationOutcome { trajectory, record })
}

pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> CmdResult {
    let outcome = run_simulation(cfg)?;
    let tr = &outcome.trajectory;
    if let Some(dir) = out {
        let rows: Vec<Vec<String>> = tr
            .events
            .iter()
            .map(|e| {
                vec![
                    num(e.t_alpha),
                    num(e.v_minus),
                    num(e.j_alpha),
                    num(e.phase_hat),
                ]
            })
            .collect();
        write_csv(sink(Some(dir), "events.csv")?, EVENTS_HEADER, &rows)?;
        if cfg.simulation.samples_stride.is_some() {
            let rows: Vec<Vec<String>> = tr
                .samples
                .iter()
                .map(|s| vec![num(s.t), num(s.x), num(s.v)])
                .collect();
            write_csv(sink(Some(dir), "samples.csv")?, SAMPLES_HEADER, &rows)?;
        }
        let mut w = sink(Some(dir), "lock.jsonl")?;
        writeln!(
            w,
            "{}",
            serde_json::to_string(&outcome.record).expect("record serialises")
        )?;
        w.flush()?;
    }
    println!(
        "{}",
        serde_json::to_string(&outcome.record).expect("record serialises")
    );
    let grazing = tr.events.iter().filter(|e| e.grazing).count();
    if grazing > 0 {
        log::warn!("{grazing} grazing impact(s) flagged");
    }
    Ok(())
}
