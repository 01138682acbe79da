use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topt_cli::{run, CliError, Command, MissionConfig};

#[derive(Parser)]
#[command(name = "topt", version, about = "Minimum-time point-mass trajectories through waypoints")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Two-point minimum-time steering between two states.
    Solve2pt(RunArgs),
    /// Plan through a waypoint list; writes direct and PMP trajectories.
    Plan(RunArgs),
    /// Generate a lawnmower survey tour and plan through it.
    Survey(RunArgs),
    /// Minimum-snap baseline compared against the PMP plan.
    Baseline(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Mission config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "switch-points")]
    switch_points: Option<usize>,
}

fn load(args: &RunArgs) -> Result<(MissionConfig, PathBuf), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut config = MissionConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(m) = args.switch_points {
        config.switch_points = m;
    }
    config.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set `out`".into()))?;
    Ok((config, out))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TOPT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("TOPT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Cmd::Solve2pt(a) => (Command::Solve2pt, a),
        Cmd::Plan(a) => (Command::Plan, a),
        Cmd::Survey(a) => (Command::Survey, a),
        Cmd::Baseline(a) => (Command::Baseline, a),
    };
    let mut out_dir = args.out.clone();
    let result = configure_threads().and_then(|_| load(args)).and_then(|(config, out)| {
        out_dir = Some(out.clone());
        run(cmd, &config, &out)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            let text = serde_json::to_string_pretty(&report).expect("plain json");
            if let Some(dir) = out_dir.filter(|d| d.is_dir()) {
                let _ = std::fs::write(dir.join("error.json"), format!("{text}\n"));
            }
            eprintln!("{text}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
