use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kinshock::acceptance::{run_all, AcceptanceContext};
use kinshock::config::{load_config, ConfigError, ConfigLayer};
use kinshock::output::emit_results;
use kinshock::pipeline::{run_pipeline, StageStatus};

/// Kinetic shock profiles: runs the pipeline from the Rankine-Hugoniot states
/// to the converged kinetic shock and writes tables and a manifest.
#[derive(Debug, Parser)]
#[command(name = "kinshock", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set: reference, p10, p7 or quick.
    #[arg(long)]
    preset: Option<String>,
    /// Shock strength.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Hermite degree N.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Artificial viscosity of the linearized solves.
    #[arg(long)]
    eta: Option<f64>,
    /// Half-length L of the domain [-L/eps, L/eps].
    #[arg(long)]
    domain: Option<f64>,
    /// Number of grid nodes (odd).
    #[arg(long)]
    grid: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Tensor cache file. With --verify, the directory holding the suite's caches.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop after this stage: tensor, rh, transport, profile, lift, ell, fixedpoint, residual.
    #[arg(long)]
    stage_until: Option<String>,
    /// Run the acceptance suite instead of a single pipeline.
    #[arg(long)]
    verify: bool,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 4;

fn config_exit(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ConfigError::Io { .. } => ExitCode::from(EXIT_IO),
        _ => ExitCode::from(EXIT_VALIDATION),
    }
}

fn verify(cli: &Cli) -> ExitCode {
    let dir = cli
        .cache
        .clone()
        .or_else(|| cli.out.as_ref().map(|o| o.join("acceptance")))
        .unwrap_or_else(|| PathBuf::from("kinshock-acceptance"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let results = pool.install(|| run_all(&AcceptanceContext::new(&dir)));
    for r in &results {
        println!("{}", r.summary());
        for c in &r.checks {
            println!("       {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.label, c.detail);
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verify {
        return verify(&cli);
    }
    let file = match &cli.config {
        Some(p) => match ConfigLayer::from_file(p) {
            Ok(l) => Some(l),
            Err(e) => return config_exit(&e),
        },
        None => None,
    };
    let overrides = ConfigLayer {
        preset: cli.preset.clone(),
        epsilon: cli.epsilon,
        order: cli.order,
        gamma: cli.gamma,
        s: cli.s,
        kappa: cli.kappa,
        eta: cli.eta,
        domain: cli.domain,
        grid: cli.grid,
        out: cli.out.clone(),
        cache: cli.cache.clone(),
        stage_until: cli.stage_until.clone(),
        ..ConfigLayer::default()
    };
    let config = match load_config(file.as_ref(), &overrides) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    let outcome = match run_pipeline(&config, cli.threads) {
        Ok(o) => o,
        Err(e) => return config_exit(&e),
    };
    for s in &outcome.manifest.stages {
        let status = match s.status {
            StageStatus::Ok => "ok",
            StageStatus::Failed => "FAILED",
            StageStatus::Skipped => "skipped",
        };
        match &s.reason {
            Some(r) => eprintln!("{:<11} {status}: {r}", s.name),
            None => eprintln!("{:<11} {status}", s.name),
        }
    }
    match emit_results(&outcome, &config.out) {
        Ok(files) => eprintln!("wrote {}", files.manifest.parent().unwrap_or(&config.out).display()),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    match outcome.manifest.failure {
        Some(f) => {
            eprintln!("error in stage {}: {}", f.stage, f.message);
            ExitCode::from(f.kind.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}
