use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use pathfollow::io::{
    config_dir, load_config, parse_config, write_metrics_json, write_trajectory_csv, ConfigDocument, ConfigError,
    IoError, MetricsDocument,
};
use pathfollow::simulator::{run, RunMetrics, Scenario, SimError};
use pathfollow::targets::SCENARIOS;
use pathfollow::verify;

#[derive(Parser)]
#[command(name = "pathfollow", version, about = "Fixed-time bounded-input UAV path-following simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config; the built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trajectory and metrics.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Built-in scenario, overriding the config's `scenario`.
        #[arg(long, short)]
        scenario: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Write metrics only.
        #[arg(long)]
        no_trajectory: bool,
    },
    /// Simulate every batch case, one output directory per case.
    Batch {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Concurrent runs; all cores when omitted.
        #[arg(long, short)]
        jobs: Option<usize>,
    },
    /// Print the analytic settling-time bounds.
    Bounds {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run the invariant and audit suite. Exit status 3 on any failure.
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        /// Check id to run (repeatable); overrides the config's list.
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Print the outcomes as JSON instead of text lines.
        #[arg(long)]
        json: bool,
    },
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Runtime(String),
    Verification(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Self::Runtime(format!("{e}"))
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
            Self::Verification(_) => 3,
        }
    }
}

/// The document and the directory its relative paths hang off.
fn load(arg: &ConfigArg) -> Result<(ConfigDocument, PathBuf), ConfigError> {
    match &arg.config {
        Some(path) => Ok((load_config(path)?, config_dir(path))),
        None => Ok((parse_config("{}")?, PathBuf::from("."))),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("IoError: {}: {e}", dir.display())))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn simulate(s: &Scenario, dir: &Path, trajectory: Option<&str>, metrics: &str, seed: Option<u64>) -> Result<RunMetrics, Failure> {
    create_dir(dir)?;
    let (traj, m) = run(s)?;
    info!("{}: {} samples, {} with guard trips", s.name, m.samples, m.guard_trips);
    if let Some(name) = trajectory {
        write_trajectory_csv(&traj, &dir.join(name))?;
    }
    write_metrics_json(&MetricsDocument::new(s, m.clone(), seed), &dir.join(metrics))?;
    Ok(m)
}

fn cmd_run(config: &ConfigArg, scenario: Option<String>, out_dir: Option<PathBuf>, no_trajectory: bool) -> Result<(), Failure> {
    let (mut doc, base) = load(config)?;
    if scenario.is_some() {
        doc.scenario = scenario;
    }
    let s = doc.resolve(&base)?;
    let dir = out_dir.unwrap_or_else(|| doc.output.dir());
    let trajectory = (!no_trajectory).then(|| doc.output.trajectory_name());
    let m = simulate(&s, &dir, trajectory, doc.output.metrics_name(), doc.seed)?;
    println!("scenario        {}", s.name);
    println!("samples         {}", m.samples);
    println!("t_angle_conv    {}", opt(m.t_angle_conv));
    println!("t_range_conv    {}", opt(m.t_range_conv));
    println!("min_r           {}", opt(m.min_r));
    println!("v_u range       [{}, {}]", opt(m.min_v_u), opt(m.max_v_u));
    println!("bound samples   {}", m.bound_violations);
    println!("output          {}", dir.display());
    Ok(())
}

fn cmd_batch(config: &ConfigArg, out_dir: Option<PathBuf>, jobs: Option<usize>) -> Result<(), Failure> {
    let (doc, base) = load(config)?;
    if doc.batch.is_none() {
        return Err(ConfigError::Validation(pathfollow::ValidationError::new("config has no batch section")).into());
    }
    let cases = doc.batch_scenarios(&base)?;
    let root = out_dir.unwrap_or_else(|| doc.output.dir());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let results: Vec<(String, Result<RunMetrics, Failure>)> = pool.install(|| {
        cases
            .par_iter()
            .map(|(id, s)| {
                let dir = root.join(id);
                let r = simulate(s, &dir, Some(doc.output.trajectory_name()), doc.output.metrics_name(), doc.seed);
                (id.clone(), r)
            })
            .collect()
    });
    println!("{:<8} {:>12} {:>12} {:>10} {:>8}", "case", "t_angle [s]", "t_range [s]", "min_r", "ordered");
    let mut first_error = None;
    for (id, r) in results {
        match r {
            Ok(m) => println!(
                "{:<8} {:>12} {:>12} {:>10} {:>8}",
                id,
                opt(m.t_angle_conv),
                opt(m.t_range_conv),
                opt(m.min_r),
                m.pursuit_ordered().map_or("-", |o| if o { "yes" } else { "no" })
            ),
            Err(e) => {
                println!("{id:<8} error");
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn cmd_bounds(config: &ConfigArg) -> Result<(), Failure> {
    let (doc, base) = load(config)?;
    let b = doc.resolve(&base)?.settling_bounds();
    println!("T1 <= {:.2} s (range)", b.t1);
    println!("T2 <= {:.2} s (elevation lead)", b.t2);
    println!("T3 <= {:.2} s (azimuth lead)", b.t3);
    Ok(())
}

fn cmd_verify(config: &ConfigArg, checks: Vec<String>, json: bool) -> Result<(), Failure> {
    let (doc, _) = load(config)?;
    let opts = doc.verify_options();
    let ids = if checks.is_empty() {
        doc.verify.map(|v| v.checks).unwrap_or_default()
    } else {
        checks
    };
    if let Some(bad) = ids.iter().find(|c| !verify::CHECK_IDS.contains(&c.as_str())) {
        return Err(ConfigError::Validation(pathfollow::ValidationError::new(format!("unknown verify check `{bad}`"))).into());
    }
    let outcomes = verify::run_selected(&ids, &opts);
    if json {
        println!("{}", serde_json::to_string_pretty(&outcomes).expect("outcomes serialize"));
    } else {
        for o in &outcomes {
            println!("{o}");
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

fn cmd_scenarios() {
    for name in SCENARIOS {
        let s = Scenario::builtin(name).expect("builtin");
        let p = s.uav_position;
        println!(
            "{name:<13} UAV ({}, {}, {}), V0 = {} m/s, t_end = {} s",
            p.x, p.y, p.z, s.envelope.v0, s.t_end
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            scenario,
            out_dir,
            no_trajectory,
        } => cmd_run(&config, scenario, out_dir, no_trajectory),
        Command::Batch { config, out_dir, jobs } => cmd_batch(&config, out_dir, jobs),
        Command::Bounds { config } => cmd_bounds(&config),
        Command::Verify { config, checks, json } => cmd_verify(&config, checks, json),
        Command::Scenarios => {
            cmd_scenarios();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e}"),
                Failure::Runtime(e) => eprintln!("error: {e}"),
                Failure::Verification(n) => eprintln!("verification failed: {n} check(s)"),
            }
            ExitCode::from(f.code())
        }
    }
}
