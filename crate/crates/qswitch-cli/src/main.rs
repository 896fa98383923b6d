//! `qswitch` command line: capacity analysis, single-scenario simulation,
//! stock-experiment reproduction and oracle self-checks.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 resource cap
//! exceeded, 3 policy precondition violated, 4 oracle mismatch.

mod checks;
mod svg;

use clap::{Parser, Subcommand};
use qswitch::capacity::{build_lp, max_intensity_on};
use qswitch::sim::{
    preset, run_experiment, stats_to_csv, Preset, ResolvedScenario, RunMetadata, ScenarioFile,
    TrajectoryStats,
};
use qswitch::Error as QError;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qswitch", version, about = "Memory-constrained entanglement switch simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the capacity LP for a scenario's switch and arrival direction;
    /// write the certificate JSON and a human-readable summary.
    Capacity {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one scenario: trace CSV, metadata sidecar and an SVG chart.
    Simulate {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's base seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's horizon (slots)
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Reproduce a stock experiment (sim1, sim2 or sim3) end to end.
    Reproduce {
        /// Which experiment: sim1, sim2 or sim3
        name: String,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the brute-force oracle suites and the MEW/MEW2 equivalence sweep.
    OracleCheck {
        /// Largest instance size (vertices/clients); 0 skips everything
        #[arg(long, default_value_t = 8)]
        max_n: usize,
    },
}

/// CLI failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<QError> for Failure {
    fn from(e: QError) -> Self {
        Failure { code: classify(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

fn classify(e: &QError) -> u8 {
    match e {
        QError::ServiceCapExceeded { .. } | QError::LpColumnCap { .. } | QError::GraphTooLarge { .. } => 2,
        QError::PolicyPrecondition(_) => 3,
        QError::Slot { source, .. } | QError::Replication { source, .. } => classify(source),
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Capacity { scenario, out } => cmd_capacity(&scenario, &out),
        Command::Simulate { scenario, out, seed, horizon } => {
            cmd_simulate(&scenario, &out, seed, horizon)
        }
        Command::Reproduce { name, out } => cmd_reproduce(&name, &out),
        Command::OracleCheck { max_n } => cmd_oracle_check(max_n),
    }
}

fn load_scenario(path: &Path) -> Result<qswitch::sim::Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(file.to_scenario()?)
}

/// Writes via a temp file in the same directory plus rename, so partial
/// files never appear under the final name.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_capacity(scenario_path: &Path, out: &Path) -> Result<(), Failure> {
    let scenario = load_scenario(scenario_path)?;
    let lp = build_lp(&scenario.config)?;
    let (rho, certificate) = max_intensity_on(&lp, &scenario.direction)?;
    let cert_json = serde_json::to_string_pretty(&certificate.to_file())
        .map_err(|e| Failure::input(e.to_string()))?;
    write_atomic(&out.join("certificate.json"), &cert_json)?;
    let summary = format!(
        "capacity analysis\n\
         columns            = {}\n\
         rho* (max intensity along direction) = {rho:.6}\n\
         stability margin at the boundary     = {:.6}\n\
         achieved rates at the boundary       = {:?}\n",
        lp.n_columns(),
        certificate.stability_margin,
        certificate.achieved_rate,
    );
    write_atomic(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn chart_label(rs: &ResolvedScenario) -> String {
    format!(
        "{} @ {:.0}%",
        rs.scenario.policy.label(),
        rs.scenario.intensity * 100.0
    )
}

fn write_run_outputs(
    out: &Path,
    stem: &str,
    rs: &ResolvedScenario,
    stats: &TrajectoryStats,
) -> Result<(), Failure> {
    write_atomic(&out.join(format!("{stem}.csv")), &stats_to_csv(stats))?;
    let meta = serde_json::to_string_pretty(&RunMetadata::from_resolved(rs))
        .map_err(|e| Failure::input(e.to_string()))?;
    write_atomic(&out.join(format!("{stem}.meta.json")), &meta)?;
    let chart = svg::line_chart(
        &chart_label(rs),
        "slot",
        "mean total backlog",
        &[svg::Series { label: chart_label(rs), values: &stats.mean_total_backlog }],
    );
    write_atomic(&out.join(format!("{stem}.svg")), &chart)?;
    Ok(())
}

fn cmd_simulate(
    scenario_path: &Path,
    out: &Path,
    seed: Option<u64>,
    horizon: Option<usize>,
) -> Result<(), Failure> {
    let mut scenario = load_scenario(scenario_path)?;
    if let Some(seed) = seed {
        scenario.base_seed = seed;
    }
    if let Some(horizon) = horizon {
        scenario.horizon = horizon;
    }
    let rs = scenario.resolve()?;
    let stats = run_experiment(&rs)?;
    write_run_outputs(out, "trace", &rs, &stats)?;
    println!(
        "{}: rho* = {:.6}, margin = {:.6}, final-quarter mean = {:.2}, stable proxy = {}",
        chart_label(&rs),
        rs.rho_star,
        rs.margin,
        stats.final_quarter_mean(),
        stats.stable_proxy(),
    );
    Ok(())
}

fn cmd_reproduce(name: &str, out: &Path) -> Result<(), Failure> {
    let which: Preset = name.parse()?;
    let dir = out.join(which.name());
    let scenarios = preset(which);
    let mut curves: Vec<(String, f64, Vec<f64>)> = Vec::new();
    for scenario in &scenarios {
        let rs = scenario.resolve()?;
        let stats = run_experiment(&rs)?;
        let stem = format!(
            "{}_{:03.0}",
            scenario.policy.label(),
            scenario.intensity * 100.0
        );
        write_run_outputs(&dir, &stem, &rs, &stats)?;
        println!(
            "{} {}: rho* = {:.6}, margin = {:.6}, final-quarter mean = {:.2}, stable proxy = {}",
            which.name(),
            chart_label(&rs),
            rs.rho_star,
            rs.margin,
            stats.final_quarter_mean(),
            stats.stable_proxy(),
        );
        curves.push((chart_label(&rs), scenario.intensity, stats.mean_total_backlog));
    }
    // one combined chart per intensity group (each stock figure fixes the
    // intensity set and varies the policy, except sim1 which varies the
    // intensity under one policy)
    if which == Preset::Sim1 {
        let series: Vec<svg::Series> = curves
            .iter()
            .map(|(label, _, values)| svg::Series { label: label.clone(), values })
            .collect();
        write_atomic(
            &dir.join("combined.svg"),
            &svg::line_chart("sim1: MEW under three intensities", "slot", "mean total backlog", &series),
        )?;
    } else {
        let mut intensities: Vec<f64> = curves.iter().map(|c| c.1).collect();
        intensities.dedup();
        for intensity in intensities {
            let series: Vec<svg::Series> = curves
                .iter()
                .filter(|(_, i, _)| *i == intensity)
                .map(|(label, _, values)| svg::Series { label: label.clone(), values })
                .collect();
            let title = format!("{}: policies at {:.0}% intensity", which.name(), intensity * 100.0);
            write_atomic(
                &dir.join(format!("combined_{:03.0}.svg", intensity * 100.0)),
                &svg::line_chart(&title, "slot", "mean total backlog", &series),
            )?;
        }
    }
    Ok(())
}

fn cmd_oracle_check(max_n: usize) -> Result<(), Failure> {
    if max_n == 0 {
        eprintln!("warning: --max-n 0 leaves nothing to check; vacuous pass");
        return Ok(());
    }
    let suites: [(&str, Box<dyn Fn() -> Result<usize, checks::CheckFailure>>); 3] = [
        ("matching vs exhaustive enumeration", Box::new(move || checks::matching_sweep(max_n, 200))),
        ("service selection vs admissible scan", Box::new(move || checks::service_sweep(max_n, 200))),
        ("MEW/MEW2 objective equivalence", Box::new(move || checks::equivalence_sweep(max_n, 50))),
    ];
    let mut failed = false;
    for (label, suite) in suites {
        match suite() {
            Ok(compared) => println!("PASS {label} ({compared} comparisons)"),
            Err(f) => {
                failed = true;
                println!("FAIL {label}");
                eprintln!("counterexample in {}: {}", f.check, f.detail);
            }
        }
    }
    if failed {
        return Err(Failure { code: 4, message: "oracle mismatch".into() });
    }
    Ok(())
}
