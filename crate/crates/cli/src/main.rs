use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regen_core::par::Exec;
use regen_core::pipeline::{run, ExitStatus, RunConfig, Target};
use regen_core::synth::{generate_city, Channels, SynthConfig, Treatment};

#[derive(Parser)]
#[command(name = "regen", version, about = "Ward-level regeneration analytics from venue transitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the five input files; report rejected rows.
    Ingest(RunArgs),
    /// Build yearly snapshot graphs and write their summary.
    Graph(RunArgs),
    /// Write the ward metrics panel.
    Metrics(RunArgs),
    /// Assign deprivation / spending cohorts.
    Cohort(RunArgs),
    /// Mixed ANOVA on the configured panel variables.
    Anova(RunArgs),
    /// Cross-validated classifiers, importances and ablations.
    Predict(RunArgs),
    /// Plot-ready scatter and group-mean tables.
    Report(RunArgs),
    /// Every analysis stage with a hashed manifest.
    RunAll(RunArgs),
    /// Generate a synthetic city with a planted effect.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding venues.csv, transitions.csv, wards.geojson,
    /// expenditure.csv and imd.csv.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override any config key, e.g. `--set k=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 24)]
    rows: usize,
    #[arg(long, default_value_t = 25)]
    cols: usize,
    #[arg(long, default_value_t = 33.0)]
    venues_per_ward: f64,
    #[arg(long, default_value_t = 0.25)]
    cultural_fraction: f64,
    #[arg(long, default_value_t = 1_000_000)]
    transitions: usize,
    #[arg(long, default_value_t = 1.5)]
    gravity: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// `deprived_high_cea`, `graded` or `random:<fraction>`.
    #[arg(long, default_value = "deprived_high_cea")]
    treatment: String,
    /// Leave venue creation untouched by the effect.
    #[arg(long)]
    no_venue_effect: bool,
    /// Leave in-flows untouched by the effect.
    #[arg(long)]
    no_inflow_effect: bool,
}

fn parse_treatment(s: &str) -> Result<Treatment, String> {
    match s {
        "deprived_high_cea" => Ok(Treatment::DeprivedHighCea),
        "graded" => Ok(Treatment::Graded),
        _ => match s.strip_prefix("random:").map(str::parse::<f64>) {
            Some(Ok(fraction)) => Ok(Treatment::Random { fraction }),
            _ => Err(format!("unknown treatment `{s}`")),
        },
    }
}

fn build_config(a: &RunArgs) -> Result<RunConfig, String> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &a.input {
        c.set_input_dir(dir);
    }
    if let Some(out) = &a.output {
        c.output_dir = Some(out.clone());
    }
    if a.seed.is_some() {
        c.seed = a.seed;
    }
    c.apply_overrides(a.overrides.iter().map(String::as_str)).map_err(|e| e.to_string())?;
    if a.sequential {
        c.exec = Exec::Sequential;
    }
    Ok(c)
}

fn run_target(a: &RunArgs, target: Target) -> ExitStatus {
    let cfg = match build_config(a) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let outcome = run(&cfg, target);
    if let Some(m) = &outcome.manifest {
        for a in &m.artifacts {
            println!("{}  {}", a.sha256, a.name);
        }
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    outcome.status
}

fn run_synth(a: &SynthArgs) -> ExitStatus {
    let treatment = match parse_treatment(&a.treatment) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let cfg = SynthConfig {
        grid_rows: a.rows,
        grid_cols: a.cols,
        venues_per_ward: a.venues_per_ward,
        cultural_fraction: a.cultural_fraction,
        transitions_per_year: a.transitions,
        gravity_exponent: a.gravity,
        treatment,
        channels: Channels { venue_creation: !a.no_venue_effect, inflow: !a.no_inflow_effect },
        delta: a.delta,
        sigma: a.sigma,
        seed: a.seed,
        ..Default::default()
    };
    let bundle = match generate_city(&cfg) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    match bundle.write_to(&a.output) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            let c = cfg.centre();
            println!("centre = {}, {}", c.lat, c.lon);
            ExitStatus::Success
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::InternalError
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::ConfigError.code() as u8 } else { 0 });
        }
    };
    let status = match &cli.command {
        Command::Ingest(a) => run_target(a, Target::Ingest),
        Command::Graph(a) => run_target(a, Target::Graph),
        Command::Metrics(a) => run_target(a, Target::Metrics),
        Command::Cohort(a) => run_target(a, Target::Cohort),
        Command::Anova(a) => run_target(a, Target::Anova),
        Command::Predict(a) => run_target(a, Target::Predict),
        Command::Report(a) => run_target(a, Target::Report),
        Command::RunAll(a) => run_target(a, Target::All),
        Command::Synth(a) => run_synth(a),
    };
    ExitCode::from(status.code() as u8)
}
