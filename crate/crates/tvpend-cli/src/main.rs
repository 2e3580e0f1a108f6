//! `tvpend` — scenario runner for the thrust-vectored pendulum benchmark.
//!
//! Subcommands:
//! * `run <scenario>` — one scenario to CSV + metrics (builtin name or a
//!   TOML config file path).
//! * `suite` — every builtin scenario, printed as comparison tables.
//! * `gains` — the synthesized pendulum feedback gains and solver residuals.
//! * `plot <csv>` — render a logged run as an SVG.
//! * `export` — write the builtin scenarios out as editable config files.
//!
//! Exit codes: 0 success (including documented-as-expected divergences),
//! 1 a run diverged unexpectedly, 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use tvpend::harness::{
    build_setup, compute_metrics, csv_string, find_scenario, read_csv, render_metrics,
    render_suite_tables, ChannelMetrics, RecoveryMetrics, RunConfig, Scenario, SuiteRow,
};
use tvpend::highlevel::synthesize_gain;
use tvpend::sim::{run, SimError, TrajectoryLog};
use tvpend::Method;

#[derive(Parser)]
#[command(
    name = "tvpend",
    version,
    about = "Deterministic benchmark runs for a thrust-vectored spherical pendulum"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario (builtin name or config file path) and write its log
    Run {
        /// Builtin scenario name (see `export` for the catalog) or a path
        /// to a TOML config file with a [scenario] section
        scenario: String,
        /// Control method override: spl, sfl or pfl
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        /// Disable sensor noise and encoder quantization
        #[arg(long)]
        no_noise: bool,
        /// Noise generator seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the CSV log and metrics file
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Base configuration file (plant/rotor/sensor/controller tuning)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every builtin scenario and print the comparison tables
    Suite {
        /// Directory for per-run CSV logs and the table text (optional)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable sensor noise for all runs
        #[arg(long)]
        no_noise: bool,
        /// Base configuration file
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the synthesized pendulum feedback gains and solver residuals
    Gains {
        /// Only this method (default: all three)
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        /// Design elevation for the locally linearized method, rad
        #[arg(long, default_value_t = 0.0)]
        theta1_eq: f64,
        /// Base configuration file
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render a logged CSV run as an SVG plot
    Plot {
        /// CSV file written by `run` or `suite`
        csv: PathBuf,
        /// Output SVG path (default: the CSV path with .svg)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the builtin scenarios as editable TOML config files
    Export {
        /// Target directory
        #[arg(long, default_value = "scenarios")]
        out: PathBuf,
    },
}

/// An error that already knows its exit code.
struct Fail {
    code: u8,
    message: String,
}

fn config_fail(message: impl Into<String>) -> Fail {
    Fail {
        code: 2,
        message: message.into(),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    scenario: &'a str,
    method: &'a str,
    noise: bool,
    seed: u64,
    verdict: String,
    diverged_at: Option<f64>,
    expect_divergence: bool,
    rows: usize,
    channels: &'a [ChannelMetrics],
    recoveries: &'a [RecoveryMetrics],
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Fail> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_fail(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text).map_err(|e| config_fail(format!("{}: {e}", p.display())))
        }
    }
}

/// Resolves the `run` target: a config file path (with a scenario section)
/// or a builtin scenario name, plus an optional method override.
fn resolve_run(
    target: &str,
    config_path: Option<&Path>,
    method: Option<Method>,
) -> Result<(RunConfig, Scenario), Fail> {
    let as_path = Path::new(target);
    if as_path.is_file() {
        let config = load_config(Some(as_path))?;
        let mut scenario = config.scenario.clone().ok_or_else(|| {
            config_fail(format!("{target}: config file has no [scenario] section"))
        })?;
        if let Some(m) = method {
            scenario.method = m;
        }
        return Ok((config, scenario));
    }
    let config = load_config(config_path)?;
    let scenario = find_scenario(target, method).ok_or_else(|| {
        config_fail(format!(
            "unknown scenario `{target}` (not a builtin name or config file; try `export` to list the catalog)"
        ))
    })?;
    Ok((config, scenario))
}

fn execute(config: &RunConfig, scenario: &Scenario) -> Result<TrajectoryLog, Fail> {
    let setup = build_setup(config, scenario).map_err(config_fail)?;
    match run(&setup, scenario) {
        Ok(log) => Ok(log),
        Err(SimError::Config(msg)) => Err(config_fail(msg)),
        Err(other) => Err(Fail {
            code: 1,
            message: other.to_string(),
        }),
    }
}

fn write_artifacts(out: &Path, scenario: &Scenario, log: &TrajectoryLog, report: &RunReport) -> Result<(), Fail> {
    std::fs::create_dir_all(out)
        .map_err(|e| config_fail(format!("{}: {e}", out.display())))?;
    let csv_path = out.join(format!("{}.csv", scenario.name));
    std::fs::write(&csv_path, csv_string(log))
        .map_err(|e| config_fail(format!("{}: {e}", csv_path.display())))?;
    let json_path = out.join(format!("{}.metrics.json", scenario.name));
    let json = serde_json::to_string_pretty(report).expect("reports always serialize");
    std::fs::write(&json_path, json)
        .map_err(|e| config_fail(format!("{}: {e}", json_path.display())))?;
    Ok(())
}

fn cmd_run(
    target: &str,
    method: Option<Method>,
    no_noise: bool,
    seed: Option<u64>,
    out: &Path,
    config_path: Option<&Path>,
) -> Result<u8, Fail> {
    let (config, mut scenario) = resolve_run(target, config_path, method)?;
    if no_noise {
        scenario.noise = false;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let log = execute(&config, &scenario)?;
    let metrics = compute_metrics(&log, &scenario).map_err(|e| config_fail(e.to_string()))?;
    let report = RunReport {
        scenario: &scenario.name,
        method: scenario.method.name(),
        noise: scenario.noise,
        seed: scenario.seed,
        verdict: metrics.verdict.to_string(),
        diverged_at: metrics.diverged_at,
        expect_divergence: scenario.expect_divergence,
        rows: log.records.len(),
        channels: &metrics.channels,
        recoveries: &metrics.recoveries,
    };
    write_artifacts(out, &scenario, &log, &report)?;
    print!("{}", render_metrics(&scenario, &metrics));
    println!(
        "log       {} rows -> {}",
        log.records.len(),
        out.join(format!("{}.csv", scenario.name)).display()
    );
    if metrics.diverged_at.is_some() && !scenario.expect_divergence {
        eprintln!("error: `{}` diverged unexpectedly", scenario.name);
        return Ok(1);
    }
    Ok(0)
}

fn cmd_suite(out: Option<&Path>, no_noise: bool, config_path: Option<&Path>) -> Result<u8, Fail> {
    let config = load_config(config_path)?;
    let mut rows = Vec::new();
    let mut unexpected = Vec::new();
    for mut scenario in tvpend::harness::builtin_scenarios() {
        if no_noise {
            scenario.noise = false;
        }
        eprintln!("running {} ...", scenario.name);
        let log = execute(&config, &scenario)?;
        let metrics = compute_metrics(&log, &scenario).map_err(|e| config_fail(e.to_string()))?;
        if metrics.diverged_at.is_some() && !scenario.expect_divergence {
            unexpected.push(scenario.name.clone());
        }
        if let Some(dir) = out {
            let report = RunReport {
                scenario: &scenario.name,
                method: scenario.method.name(),
                noise: scenario.noise,
                seed: scenario.seed,
                verdict: metrics.verdict.to_string(),
                diverged_at: metrics.diverged_at,
                expect_divergence: scenario.expect_divergence,
                rows: log.records.len(),
                channels: &metrics.channels,
                recoveries: &metrics.recoveries,
            };
            write_artifacts(dir, &scenario, &log, &report)?;
        }
        rows.push(SuiteRow {
            scenario,
            metrics,
            rows: log.records.len(),
        });
    }
    let tables = render_suite_tables(&rows);
    print!("{tables}");
    if let Some(dir) = out {
        let path = dir.join("suite-tables.txt");
        std::fs::write(&path, &tables)
            .map_err(|e| config_fail(format!("{}: {e}", path.display())))?;
    }
    if !unexpected.is_empty() {
        eprintln!("error: unexpected divergence in: {}", unexpected.join(", "));
        return Ok(1);
    }
    Ok(0)
}

fn cmd_gains(method: Option<Method>, theta1_eq: f64, config_path: Option<&Path>) -> Result<u8, Fail> {
    let config = load_config(config_path)?;
    let methods = match method {
        Some(m) => vec![m],
        None => Method::ALL.to_vec(),
    };
    for m in methods {
        let gain = synthesize_gain(m, theta1_eq, &config.plant, &config.controller.weights)
            .map_err(|e| config_fail(e.to_string()))?;
        println!(
            "method {}   design elevation {:.4} rad",
            m.name(),
            gain.theta1_eq
        );
        println!(
            "  equilibrium input  [{:+.6}, {:+.6}] N·m",
            gain.u_eq[0], gain.u_eq[1]
        );
        for (label, row) in ["T_Y", "T_Z"].iter().zip(gain.k.row_iter()) {
            print!("  K[{label}] =");
            for v in row.iter() {
                print!(" {v:+12.6}");
            }
            println!();
        }
        println!(
            "  riccati residual {:.3e} after {} iterations\n",
            gain.residual, gain.iterations
        );
    }
    Ok(0)
}

fn cmd_plot(csv: &Path, out: Option<&Path>) -> Result<u8, Fail> {
    let data = read_csv(csv).map_err(config_fail)?;
    let title = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let svg = tvpend::harness::plot(&data, &title).map_err(config_fail)?;
    let target = match out {
        Some(p) => p.to_path_buf(),
        None => csv.with_extension("svg"),
    };
    std::fs::write(&target, svg).map_err(|e| config_fail(format!("{}: {e}", target.display())))?;
    println!("wrote {}", target.display());
    Ok(0)
}

fn cmd_export(out: &Path) -> Result<u8, Fail> {
    std::fs::create_dir_all(out)
        .map_err(|e| config_fail(format!("{}: {e}", out.display())))?;
    let scenarios = tvpend::harness::builtin_scenarios();
    for s in &scenarios {
        let path = out.join(format!("{}.toml", s.name));
        let config = RunConfig::default().with_scenario(s.clone());
        std::fs::write(&path, config.to_toml())
            .map_err(|e| config_fail(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    println!("exported {} scenarios to {}", scenarios.len(), out.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run {
            scenario,
            method,
            no_noise,
            seed,
            out,
            config,
        } => cmd_run(scenario, *method, *no_noise, *seed, out, config.as_deref()),
        Cmd::Suite {
            out,
            no_noise,
            config,
        } => cmd_suite(out.as_deref(), *no_noise, config.as_deref()),
        Cmd::Gains {
            method,
            theta1_eq,
            config,
        } => cmd_gains(*method, *theta1_eq, config.as_deref()),
        Cmd::Plot { csv, out } => cmd_plot(csv, out.as_deref()),
        Cmd::Export { out } => cmd_export(out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            ExitCode::from(fail.code)
        }
    }
}
