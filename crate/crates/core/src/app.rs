//! The five commands behind the CLI. Each writes its artifacts into an output
//! directory and reports failures as a [`RunError`] carrying an exit code.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::commsched::{
    chunk_index, execute_allgather, execute_allreduce, ring_allreduce_schedule, ring_allreduce_time,
    ring_broadcast_schedule, RingPhase,
};
use crate::constellation::{connection_windows, satellite_distance, window_stats, SatId};
use crate::error::{ConfigError, SimError};
use crate::fedsim::{centralized_overhead, dataset_presets, run_toy_fedavg, Loss, Simulation, Strategy, ToyProblem, TrainingReport};
use crate::netgraph::SnapshotSource;
use crate::report::{self, SweepRow};
use crate::scenario::{Aggregation, Scenario, SweepAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Windows,
    Topology,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    /// CSVs plus SVG charts rendered from them.
    Svg,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    /// 1 validation failure, 2 config error, 3 non-completion.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) | RunError::Sim(SimError::Topology(_)) => 1,
            RunError::Config(_) | RunError::Output { .. } | RunError::Sim(SimError::InvalidInput(_)) => 2,
            RunError::Sim(SimError::NonCompletion { .. } | SimError::Coverage { .. }) => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Format,
    /// Overrides the scenario's sweep axes when non-empty.
    pub axes: Vec<SweepAxis>,
    /// Half-open step range for `topology`; whole grid when `None`.
    pub steps: Option<(usize, usize)>,
}

/// What a command produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Human-readable result lines (validation checks, headline numbers).
    pub lines: Vec<String>,
}

/// Applies CLI overrides and revalidates.
pub fn with_overrides(scenario: &Scenario, seed: Option<u64>, strategy: Option<Strategy>) -> Result<Scenario, ConfigError> {
    if seed.is_none() && strategy.is_none() {
        return Ok(scenario.clone());
    }
    let mut c = scenario.config.clone();
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(s) = strategy {
        c.strategy = s;
    }
    Scenario::from_config(c)
}

pub fn run(scenario: &Scenario, command: Command, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let mut out = Output::new(&opts.out_dir)?;
    match command {
        Command::Simulate => simulate(scenario, opts, &mut out)?,
        Command::Sweep => sweep(scenario, opts, &mut out)?,
        Command::Windows => windows(scenario, &mut out)?,
        Command::Topology => topology(scenario, opts, &mut out)?,
        Command::Validate => validate(scenario, &mut out)?,
    }
    Ok(out.summary)
}

struct Output {
    dir: PathBuf,
    summary: RunSummary,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::Output { path: dir.into(), message: e.to_string() })?;
        Ok(Self { dir: dir.into(), summary: RunSummary::default() })
    }

    fn write<F>(&mut self, name: &str, f: F) -> Result<PathBuf, RunError>
    where
        F: FnOnce(BufWriter<File>) -> Result<(), csv::Error>,
    {
        let path = self.dir.join(name);
        let err = |m: String| RunError::Output { path: path.clone(), message: m };
        let file = File::create(&path).map_err(|e| err(e.to_string()))?;
        f(BufWriter::new(file)).map_err(|e| err(e.to_string()))?;
        info!("wrote {}", path.display());
        self.summary.files.push(path.clone());
        Ok(path)
    }

    fn svg(&mut self, csv_path: &Path, label_cols: &[&str], title: &str) -> Result<(), RunError> {
        let err = |m: String| RunError::Output { path: csv_path.into(), message: m };
        let file = File::open(csv_path).map_err(|e| err(e.to_string()))?;
        let svg = report::svg_stacked_components(file, label_cols, title).map_err(|e| err(e.to_string()))?;
        let path = csv_path.with_extension("svg");
        fs::write(&path, svg).map_err(|e| RunError::Output { path: path.clone(), message: e.to_string() })?;
        self.summary.files.push(path);
        Ok(())
    }

    fn line(&mut self, s: String) {
        info!("{s}");
        self.summary.lines.push(s);
    }
}

/// Primary strategy first, then the comparison list without repeats.
fn strategies(scenario: &Scenario) -> Vec<Strategy> {
    let mut list = vec![scenario.strategy()];
    for &s in &scenario.config.training.compare {
        if !list.contains(&s) {
            list.push(s);
        }
    }
    list
}

fn run_all<S: SnapshotSource + Sync>(
    sim: &Simulation<'_, S>,
    scenario: &Scenario,
) -> Vec<(Strategy, Result<TrainingReport, SimError>)> {
    strategies(scenario).into_par_iter().map(|s| (s, sim.run_training(s, scenario.rounds()))).collect()
}

fn to_rows(
    runs: &[(Strategy, Result<TrainingReport, SimError>)],
    axis_values: &[f64],
) -> Result<Vec<SweepRow>, SimError> {
    runs.iter()
        .map(|(s, r)| {
            let totals = match r {
                Ok(r) => Some(r.totals()),
                Err(e @ (SimError::NonCompletion { .. } | SimError::Coverage { .. })) => {
                    warn!("{s} at {axis_values:?}: {e}");
                    None
                }
                Err(e) => return Err(e.clone()),
            };
            Ok(SweepRow { axis_values: axis_values.to_vec(), strategy: s.to_string(), totals })
        })
        .collect()
}

fn simulate(scenario: &Scenario, opts: &RunOptions, out: &mut Output) -> Result<(), RunError> {
    let topo = scenario.topology();
    let sim = Simulation::new(&topo, scenario.workload, scenario.options)?;
    let runs = run_all(&sim, scenario);
    let primary = runs[0].1.clone()?;
    let rows = to_rows(&runs, &[])?;
    let rounds_csv = out.write("rounds.csv", |w| report::write_rounds(w, &primary.timings()))?;
    out.write("plan_uplink.csv", |w| report::write_plans(w, primary.rounds.iter().filter_map(|r| r.uplink.as_ref())))?;
    out.write("plan_downlink.csv", |w| {
        report::write_plans(w, primary.rounds.iter().filter_map(|r| r.downlink.as_ref()))
    })?;
    out.write("path.csv", |w| {
        report::write_paths(w, primary.rounds.iter().enumerate().filter_map(|(i, r)| r.path.as_ref().map(|p| (i + 1, p))))
    })?;
    let summary_csv = out.write("summary.csv", |w| report::write_sweep(w, &[], &rows))?;

    let datasets = if scenario.config.datasets.is_empty() { dataset_presets() } else { scenario.config.datasets.clone() };
    let overhead = centralized_overhead(&datasets, scenario.workload.embedding_bits, scenario.workload.feature_bits);
    out.write("overhead.csv", |w| report::write_overhead(w, &overhead))?;

    let losses = toy_losses(scenario)?;
    out.write("toy_loss.csv", |w| report::write_losses(w, &losses))?;

    if opts.format == Format::Svg {
        out.svg(&rounds_csv, &["round"], &format!("{} per round", scenario.strategy()))?;
        out.svg(&summary_csv, &["strategy"], "totals by strategy")?;
    }
    let total = primary.total_wall_clock_s();
    out.line(format!("{}: {} rounds, wall clock {total:.1} s", scenario.strategy(), scenario.rounds()));
    for r in rows.iter().skip(1) {
        match &r.totals {
            Some(t) => out.line(format!("{}: wall clock {:.1} s ({:.3} of it)", r.strategy, t.wall_clock_s, total / t.wall_clock_s)),
            None => out.line(format!("{}: did not complete inside the grid", r.strategy)),
        }
    }
    Ok(())
}

/// Pooled loss of the toy head trained with the scenario's layout and seed.
pub fn toy_losses(scenario: &Scenario) -> Result<Vec<f64>, SimError> {
    let problem = ToyProblem::synthetic(
        scenario.seed(),
        scenario.spec.planes(),
        scenario.spec.sats_per_plane(),
        16,
        12,
        8,
        Loss::Quadratic,
    );
    let eta = 1.0 / problem.smoothness();
    let weights = match scenario.config.training.aggregation {
        Aggregation::Uniform => None,
        Aggregation::DatasetSize => Some(problem.sample_counts()),
    };
    run_toy_fedavg(&problem, eta, scenario.rounds(), weights.as_deref())
}

/// Cartesian product of the axis values, first axis outermost.
pub fn grid_points(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        let values = axis.values();
        acc.iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

fn sweep(scenario: &Scenario, opts: &RunOptions, out: &mut Output) -> Result<(), RunError> {
    let axes = if opts.axes.is_empty() { scenario.config.sweep.axes.clone() } else { opts.axes.clone() };
    if axes.is_empty() {
        return Err(ConfigError::invariant("sweep.axes", "no sweep axes given (use --axis or [[sweep.axes]])").into());
    }
    let points = grid_points(&axes);
    info!("sweeping {} grid points", points.len());
    let results: Vec<Result<Vec<SweepRow>, RunError>> = points
        .par_iter()
        .map(|p| {
            let mut s = scenario.clone();
            for (axis, &v) in axes.iter().zip(p) {
                s = s.with_axis(axis.name, v)?;
            }
            let topo = s.topology();
            let sim = Simulation::new(&topo, s.workload, s.options)?;
            Ok(to_rows(&run_all(&sim, &s), p)?)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let names: Vec<String> = axes.iter().map(|a| a.name.to_string()).collect();
    let path = out.write("sweep.csv", |w| report::write_sweep(w, &names, &rows))?;
    if opts.format == Format::Svg {
        let mut labels: Vec<&str> = names.iter().map(String::as_str).collect();
        labels.push("strategy");
        out.svg(&path, &labels, "sweep totals")?;
    }
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.totals.is_none())
        .map(|r| format!("{} at {:?}", r.strategy, r.axis_values))
        .collect();
    out.line(format!("{} rows, {} incomplete", rows.len(), failed.len()));
    if !failed.is_empty() {
        return Err(SimError::NonCompletion { horizon_s: scenario.grid.horizon_s(), unfinished: failed }.into());
    }
    Ok(())
}

fn windows(scenario: &Scenario, out: &mut Output) -> Result<(), RunError> {
    let wins = connection_windows(&scenario.spec, &scenario.ground_stations, &scenario.grid);
    let sats: Vec<SatId> = scenario.spec.sat_ids().collect();
    out.write("windows.csv", |w| report::write_windows(w, &sats, &wins, &scenario.grid))?;
    let stats = window_stats(&wins, &scenario.grid);
    out.write("window_stats.csv", |w| report::write_window_stats(w, &stats))?;
    out.line(format!(
        "{} windows, mean {:.1} min; {} revisits, mean {:.2} h",
        stats.windows,
        stats.mean_window_s / 60.0,
        stats.revisits,
        stats.mean_revisit_s / 3600.0
    ));
    Ok(())
}

fn topology(scenario: &Scenario, opts: &RunOptions, out: &mut Output) -> Result<(), RunError> {
    let n = scenario.grid.steps();
    let (a, b) = opts.steps.unwrap_or((0, n));
    if a >= b || b > n {
        return Err(ConfigError::invariant("steps", format!("range {a}:{b} must be non-empty and inside 0:{n}")).into());
    }
    let topo = scenario.topology();
    let steps: Vec<usize> = (a..b).collect();
    let snaps = steps.par_iter().map(|&s| topo.snapshot(s)).collect::<Result<Vec<_>, _>>()?;
    out.write("topology.csv", |w| report::write_topology(w, snaps.iter().copied()))?;
    let positions: Vec<_> = steps.par_iter().map(|&s| topo.positions(s)).collect();
    let sats: Vec<SatId> = scenario.spec.sat_ids().collect();
    out.write("positions.csv", |w| report::write_positions(w, &steps, &sats, &positions))?;
    out.line(format!("{} snapshots", steps.len()));
    Ok(())
}

fn check(out: &mut Output, failures: &mut Vec<String>, name: &str, result: Result<String, String>) {
    match result {
        Ok(detail) => out.line(format!("PASS {name}: {detail}")),
        Err(detail) => {
            out.line(format!("FAIL {name}: {detail}"));
            failures.push(format!("{name}: {detail}"));
        }
    }
}

fn validate(scenario: &Scenario, out: &mut Output) -> Result<(), RunError> {
    let topo = scenario.topology();
    let steps = scenario.grid.steps();
    let mut failures = Vec::new();

    let first_bad = (0..steps)
        .into_par_iter()
        .map(|s| topo.snapshot(s).and_then(|snap| snap.check_invariants()))
        .find_first(Result::is_err);
    let topology_result = match first_bad {
        Some(Err(e)) => Err(e.to_string()),
        _ => Ok(format!("{steps} snapshots")),
    };
    check(out, &mut failures, "topology invariants", topology_result);

    let n = scenario.spec.sats_per_plane();
    check(out, &mut failures, "ring schedule", ring_self_check(n));

    let spec = &scenario.spec;
    let grid = &scenario.grid;
        let mut worst = 0.0f64;
    for s in [0, steps / 2, steps - 1] {
        let pos = topo.positions(s);
        let ids: Vec<SatId> = spec.sat_ids().collect();
        for (i, &a) in ids.iter().enumerate() {
            let b = ids[(i + 1) % ids.len()];
            let cart = pos[spec.index_of(a)].distance(&pos[spec.index_of(b)]);
            let sph = satellite_distance(spec, grid, a, b, s);
            worst = worst.max((cart - sph).abs() / cart.max(1.0));
        }
    }
    let geometry = if worst < 1e-9 {
        Ok(format!("spherical vs Cartesian distance, worst relative error {worst:.1e}"))
    } else {
        Err(format!("spherical vs Cartesian distance disagree by {worst:.3e}"))
    };
    check(out, &mut failures, "geometry", geometry);

    if failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::Validation(failures.join("; ")))
    }
}

/// Replays the ring schedules for `n` participants and checks the chunk law,
/// the allreduce result and the slot count the latency formula assumes.
fn ring_self_check(n: usize) -> Result<String, String> {
    if n < 2 {
        return Ok("single satellite per plane, nothing to schedule".into());
    }
    let (scatter, gather) = ring_allreduce_schedule(n);
    for sched in [&scatter, &gather] {
        if sched.rounds.len() != n - 1 {
            return Err(format!("{:?} phase has {} rounds, expected {}", sched.phase, sched.rounds.len(), n - 1));
        }
        for r in &sched.rounds {
            for t in &r.transfers {
                if t.receiver != t.sender % n + 1 || t.chunk != chunk_index(t.sender, r.round, n) {
                    return Err(format!("round {} transfer {} -> {} breaks the chunk law", r.round, t.sender, t.receiver));
                }
            }
        }
    }
    let bcast = ring_broadcast_schedule(n);
    if bcast.phase != RingPhase::AllGather || bcast.rounds.len() != n - 1 {
        return Err("broadcast schedule does not take N - 1 rounds".into());
    }
    let mut data: Vec<Vec<f64>> = (0..n).map(|i| (0..2 * n).map(|j| (i * 31 + j * 7) as f64).collect()).collect();
    let expected: Vec<f64> = (0..2 * n).map(|j| data.iter().map(|v| v[j]).sum()).collect();
    execute_allreduce(&mut data).map_err(|e| e.to_string())?;
    if data.iter().any(|v| v != &expected) {
        return Err("allreduce result differs from the elementwise sum".into());
    }
    let held = execute_allgather(&(0..n).collect::<Vec<_>>());
    if held.iter().any(|h| h.iter().any(Option::is_none)) {
        return Err("allgather left a block undelivered".into());
    }
    // Each of the 2(N-1) slots moves one 1/N chunk.
    let t = ring_allreduce_time(n, n as f64, 1.0).map_err(|e| e.to_string())?;
    if (t - 2.0 * (n - 1) as f64).abs() > 1e-9 {
        return Err(format!("allreduce time {t} disagrees with 2(N-1) chunk slots"));
    }
    Ok(format!("N = {n}, {} transfers", 2 * (n - 1) * n))
}
