//! Command-line front end: run one scenario, or compare the three control
//! strategies on the same scenario, writing CSV logs and metric reports.
//!
//! Exit codes: 0 success, 2 bad input (arguments, unreadable or invalid
//! scenario, I/O), 3 the simulation itself failed (DC-link collapse or
//! numerical blow-up) — in which case the partial CSV up to the failure is
//! still written.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use statcom_sim::controllers::ControllerKind;
use statcom_sim::metrics::{event_report, EventMetrics, StepMetrics, DEFAULT_BAND};
use statcom_sim::sim::{compare_controllers, run_scenario, InitKind, RunResult, SimFailure};
use statcom_sim::Scenario;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "statcom-sim",
    version,
    about = "Time-domain simulation of a STATCOM-supported bus feeding an induction-motor group"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Control strategy names as they appear in scenario files.
#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "double_loop")]
    DoubleLoop,
    Dov,
    Proposed,
}

impl From<KindArg> for ControllerKind {
    fn from(k: KindArg) -> ControllerKind {
        match k {
            KindArg::DoubleLoop => ControllerKind::DoubleLoop,
            KindArg::Dov => ControllerKind::Dov,
            KindArg::Proposed => ControllerKind::Proposed,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario with one control strategy.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Control strategy; overrides the one in the file.
        #[arg(long, value_enum)]
        controller: Option<KindArg>,
        /// Directory for the CSV log and metrics JSON.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Solver step override, seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// End-time override, seconds.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Run a scenario once per control strategy and rank the results.
    Compare {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Directory for the per-strategy outputs and the ranking summary.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run { scenario, controller, out, dt, t_end } => {
            run_cmd(&scenario, controller, &out, dt, t_end)
        }
        Cmd::Compare { scenario, out } => compare_cmd(&scenario, &out),
    };
    match code {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<(Scenario, String), String> {
    let scenario = Scenario::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string();
    Ok((scenario, stem))
}

/// Everything reported about one run in the per-run metrics JSON.
#[derive(Serialize)]
struct RunReport {
    controller: &'static str,
    init: InitKind,
    failure: Option<SimFailure>,
    /// Wall-clock cost of the run, seconds.
    elapsed: f64,
    events: Vec<EventMetrics>,
}

fn report_for(scenario: &Scenario, run: &RunResult) -> RunReport {
    let events = scenario.sorted_events();
    let log = &run.log;
    let ev = event_report(
        &log.t,
        &log.v_pcc_mag,
        &log.v_dc,
        &log.motor_speed,
        &log.motor_torque,
        &events,
        scenario.solver.t_end,
        scenario.controller.v_ref,
        scenario.v_dc_ref(),
        DEFAULT_BAND,
    );
    RunReport {
        controller: run.kind.label(),
        init: run.init,
        failure: run.failure,
        elapsed: run.wall_seconds,
        events: ev,
    }
}

fn write_outputs(
    scenario: &Scenario,
    stem: &str,
    out_dir: &Path,
    run: &RunResult,
) -> Result<RunReport, String> {
    let csv_path = out_dir.join(format!("{stem}_{}.csv", run.kind.label()));
    let mut file = std::fs::File::create(&csv_path)
        .map_err(|e| format!("{}: {e}", csv_path.display()))?;
    run.log
        .write_csv(&mut file)
        .map_err(|e| format!("{}: {e}", csv_path.display()))?;

    let report = report_for(scenario, run);
    let json_path = out_dir.join(format!("{stem}_{}_metrics.json", run.kind.label()));
    let text = serde_json::to_string_pretty(&report).expect("report serialization");
    std::fs::write(&json_path, text + "\n").map_err(|e| format!("{}: {e}", json_path.display()))?;

    println!(
        "{}: {} rows -> {}",
        run.kind.label(),
        run.log.len(),
        csv_path.display()
    );
    if let Some(f) = &run.failure {
        eprintln!("{}: {f}", run.kind.label());
    }
    Ok(report)
}

fn run_cmd(
    path: &Path,
    controller: Option<KindArg>,
    out_dir: &Path,
    dt: Option<f64>,
    t_end: Option<f64>,
) -> Result<ExitCode, String> {
    let (mut scenario, stem) = load(path)?;
    if let Some(kind) = controller {
        scenario.controller.kind = kind.into();
    }
    if let Some(dt) = dt {
        scenario.solver.dt = dt;
    }
    if let Some(t_end) = t_end {
        scenario.solver.t_end = t_end;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let run = run_scenario(&scenario).map_err(|e| e.to_string())?;
    write_outputs(&scenario, &stem, out_dir, &run)?;
    Ok(if run.failure.is_some() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

/// The four headline numbers per controller per event window, on the bus
/// voltage magnitude.
#[derive(Serialize)]
struct HeadlineMetrics {
    overshoot_pct: f64,
    settling_time: f64,
    steady_error_pct: f64,
    peak_deviation: f64,
}

impl From<&StepMetrics> for HeadlineMetrics {
    fn from(m: &StepMetrics) -> Self {
        HeadlineMetrics {
            overshoot_pct: m.overshoot_pct,
            settling_time: m.settling_time,
            steady_error_pct: m.steady_error_pct,
            peak_deviation: m.peak_deviation,
        }
    }
}

fn compare_cmd(path: &Path, out_dir: &Path) -> Result<ExitCode, String> {
    let (scenario, stem) = load(path)?;
    std::fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let comparison = compare_controllers(&scenario).map_err(|e| e.to_string())?;

    let mut by_controller: BTreeMap<String, BTreeMap<usize, HeadlineMetrics>> = BTreeMap::new();
    let mut any_failure = false;
    for run in &comparison.runs {
        let report = write_outputs(&scenario, &stem, out_dir, run)?;
        any_failure |= run.failure.is_some();
        let per_event = report
            .events
            .iter()
            .map(|m| (m.event_index, HeadlineMetrics::from(&m.v_pcc)))
            .collect();
        by_controller.insert(run.kind.label().to_string(), per_event);
    }

    let cmp_path = out_dir.join("comparison_metrics.json");
    let text = serde_json::to_string_pretty(&by_controller).expect("comparison serialization");
    std::fs::write(&cmp_path, text + "\n").map_err(|e| format!("{}: {e}", cmp_path.display()))?;

    let summary = ranking_summary(&scenario, &comparison.runs);
    let sum_path = out_dir.join("ranking_summary.txt");
    std::fs::write(&sum_path, &summary).map_err(|e| format!("{}: {e}", sum_path.display()))?;
    print!("{summary}");

    Ok(if any_failure {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

/// Values within 0.1 % of each other (or 1e-9 absolute) count as tied.
fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= (1e-3 * a.abs().max(b.abs())).max(1e-9)
}

fn rank_line(label: &str, mut entries: Vec<(ControllerKind, f64)>) -> String {
    entries.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out = format!("  {label:<24}");
    for (i, (kind, value)) in entries.iter().enumerate() {
        if i > 0 {
            let prev = entries[i - 1].1;
            out.push_str(if tied(prev, *value) { " ~ " } else { " < " });
        }
        out.push_str(&format!("{kind} {value:.4}"));
    }
    out.push('\n');
    out
}

fn ranking_summary(scenario: &Scenario, runs: &[RunResult]) -> String {
    let events = scenario.sorted_events();
    let mut reports = Vec::new();
    for run in runs {
        reports.push((run.kind, report_for(scenario, run)));
    }
    let mut out = String::new();
    out.push_str("ranking (best first; '~' = tie within 0.1%)\n");
    if events.is_empty() {
        out.push_str("  no events scheduled\n");
        return out;
    }
    for (idx, ev) in events.iter().enumerate() {
        out.push_str(&format!(
            "event {idx}: {:?} at t={}s magnitude={}\n",
            ev.kind, ev.t_start, ev.magnitude
        ));
        let pick = |f: &dyn Fn(&EventMetrics) -> f64| -> Vec<(ControllerKind, f64)> {
            reports
                .iter()
                .filter_map(|(kind, rep)| rep.events.get(idx).map(|m| (*kind, f(m))))
                .collect()
        };
        out.push_str(&rank_line("v_pcc overshoot_pct", pick(&|m| m.v_pcc.overshoot_pct)));
        out.push_str(&rank_line("v_pcc settling_time", pick(&|m| m.v_pcc.settling_time)));
        out.push_str(&rank_line("v_pcc peak_deviation", pick(&|m| m.v_pcc.peak_deviation)));
        out.push_str(&rank_line("v_dc peak_deviation", pick(&|m| m.v_dc.peak_deviation)));
    }
    for run in runs {
        if let Some(f) = &run.failure {
            out.push_str(&format!("note: {} aborted: {f}\n", run.kind.label()));
        }
    }
    out
}
