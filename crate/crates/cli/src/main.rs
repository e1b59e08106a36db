use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stablesde::experiments::{
    default_suite, read_manifest, replay, run_and_record, ExperimentConfig, RunOutput, COMMANDS, DEFAULT_SEED,
};
use stablesde::Error;

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "stablesde", version, about = "Experiments for SDEs driven by symmetric α-stable noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// Seed used when the config does not set one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory used when the config does not set one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Cone condition check.
    HkCheck(RunArgs),
    /// Drift-smallness constant.
    Epsilon0(RunArgs),
    /// Characteristic-function and self-similarity checks of a sampler.
    SamplerValidate(RunArgs),
    /// Monte Carlo, finite-difference and spectral resolvents side by side.
    ResolventCompare(RunArgs),
    /// Exit probability and far-field resolvent against the truncation bounds.
    DecayCheck(RunArgs),
    /// Gap between the `+ε` and `−ε` exceedance probabilities.
    Bifurcation(RunArgs),
    /// Runs the default suite, one subdirectory per experiment.
    All {
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides the suite seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Only experiments whose name contains this string.
        #[arg(long)]
        only: Option<String>,
    },
    /// Re-runs a manifest and checks that every output is bit-identical.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "replay")]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::HkCheck(_) => COMMANDS[0],
            Command::Epsilon0(_) => COMMANDS[1],
            Command::SamplerValidate(_) => COMMANDS[2],
            Command::ResolventCompare(_) => COMMANDS[3],
            Command::DecayCheck(_) => COMMANDS[4],
            Command::Bifurcation(_) => COMMANDS[5],
            Command::All { .. } => "all",
            Command::Replay { .. } => "replay",
        }
    }
}

fn config_errors(errors: Vec<String>) -> ExitCode {
    eprintln!("{}", json!({ "errors": errors }));
    ExitCode::from(EXIT_CONFIG)
}

fn run_error(e: Error) -> ExitCode {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::UnsupportedDimension(_) | Error::Json(_) => {
            config_errors(vec![e.to_string()])
        }
        other => {
            eprintln!("{}", json!({ "error": other.to_string() }));
            ExitCode::from(EXIT_ASSERTION)
        }
    }
}

fn report(output: &RunOutput, dir: &Path) {
    println!("{}", json!({ "output_dir": dir, "summary": output.summary() }));
    for f in &output.failures {
        let row = f.row.map_or("-".to_string(), |r| r.to_string());
        eprintln!("FAIL {} row {row}: {}", f.table, f.message);
    }
}

fn run_single(name: &str, args: &RunArgs) -> ExitCode {
    let mut config = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => return config_errors(vec![e.to_string()]),
    };
    if config.experiment.command() != name {
        return config_errors(vec![format!(
            "config describes `{}` but `{name}` was invoked",
            config.experiment.command()
        )]);
    }
    // config values win over flags, flags over defaults
    config.seed = Some(config.seed.or(args.seed).unwrap_or(DEFAULT_SEED));
    let base_dir = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let dir = config.output.clone().map(|o| base_dir.join(o)).or(args.out.clone()).unwrap_or_else(|| PathBuf::from("results").join(name));
    let errors = config.validate(&base_dir);
    if !errors.is_empty() {
        return config_errors(errors);
    }
    match run_and_record(&config, &base_dir, &dir) {
        Ok((output, _)) => {
            report(&output, &dir);
            if output.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Err(e) => run_error(e),
    }
}

fn run_all(out: &Path, seed: Option<u64>, only: Option<&str>) -> ExitCode {
    let mut failed = Vec::new();
    for (name, mut config) in default_suite() {
        if only.is_some_and(|o| !name.contains(o)) {
            continue;
        }
        if let Some(s) = seed {
            config.seed = Some(s);
        }
        let dir = out.join(&name);
        let start = std::time::Instant::now();
        match run_and_record(&config, Path::new("."), &dir) {
            Ok((output, _)) => {
                let status = if output.passed() { "pass" } else { "FAIL" };
                eprintln!("{status} {name} ({:.1} s)", start.elapsed().as_secs_f64());
                for f in &output.failures {
                    let row = f.row.map_or("-".to_string(), |r| r.to_string());
                    eprintln!("  {} row {row}: {}", f.table, f.message);
                }
                if !output.passed() {
                    failed.push(name);
                }
            }
            Err(e) => {
                eprintln!("FAIL {name}: {e}");
                failed.push(name);
            }
        }
    }
    println!("{}", json!({ "output_dir": out, "failed": failed }));
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ASSERTION)
    }
}

fn run_replay(path: &Path, out: &Path) -> ExitCode {
    let manifest = match read_manifest(path) {
        Ok(m) => m,
        Err(e) => return config_errors(vec![e.to_string()]),
    };
    match replay(&manifest, out) {
        Ok(r) => {
            println!("{}", serde_json::to_string(&r).expect("serializable"));
            if r.identical {
                ExitCode::SUCCESS
            } else {
                eprintln!("outputs differ: {}", r.mismatched.join(", "));
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Err(e) => run_error(e),
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("STABLESDE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("STABLESDE_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("STABLESDE_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return config_errors(vec![e]);
    }
    let name = cli.command.name();
    match &cli.command {
        Command::All { out, seed, only } => run_all(out, *seed, only.as_deref()),
        Command::Replay { manifest, out } => run_replay(manifest, out),
        Command::HkCheck(a)
        | Command::Epsilon0(a)
        | Command::SamplerValidate(a)
        | Command::ResolventCompare(a)
        | Command::DecayCheck(a)
        | Command::Bifurcation(a) => run_single(name, a),
    }
}
