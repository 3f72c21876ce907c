mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Outcome, ScenarioName};
use config::GlobalConfig;
use manifest::Manifest;

#[derive(Parser)]
#[command(name = "afc", version, about = "Cavity-assisted AFC memory simulator and photon shaper")]
struct Cli {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Memory dynamics with the configured readout (standard protocol by default).
    Simulate,
    /// Shaping plan and pulse schedule, without dynamics.
    Shape,
    /// HOM visibility between `hom.photon_a` and `hom.photon_b`.
    Hom,
    /// Heralding probability and fidelity report.
    Network,
    /// Model parameters derived from experimental values.
    Params,
    /// Named end-to-end scenario.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioName,
    },
    /// Print the resolved config as TOML.
    Config,
}

impl Command {
    fn words(&self) -> Vec<String> {
        match self {
            Command::Simulate => vec!["simulate".into()],
            Command::Shape => vec!["shape".into()],
            Command::Hom => vec!["hom".into()],
            Command::Network => vec!["network".into()],
            Command::Params => vec!["params".into()],
            Command::Scenario { name } => {
                let n = format!("{name:?}").to_ascii_lowercase();
                vec!["scenario".into(), n]
            }
            Command::Config => vec!["config".into()],
        }
    }
}

fn load(path: Option<&Path>) -> Result<GlobalConfig, Failure> {
    let Some(path) = path else {
        return Ok(GlobalConfig::default());
    };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return Manifest::read(path).map(|m| m.config).map_err(Failure::Config);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = GlobalConfig::parse(&text)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    cfg.resolve_paths(&base);
    Ok(cfg)
}

fn run(cli: Cli) -> Outcome {
    let mut cfg = load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    if let Some(o) = cli.out {
        cfg.run.out_dir = o;
    }
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("`run.threads`: {e}")))?;
    }
    if let Command::Config = cli.command {
        print!("{}", toml::to_string(&cfg).map_err(|e| Failure::Config(e.to_string()))?);
        return Ok(());
    }
    cfg.validate()?;
    let out = cfg.run.out_dir.clone();
    afc_core::scenarios::create_dir(&out)?;
    let manifest = Manifest::new(cli.command.words(), &cfg);
    afc_core::scenarios::write_json(&out.join("manifest.json"), &manifest)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Shape => commands::shape(&cfg, &out),
        Command::Hom => commands::hom(&cfg, &out),
        Command::Network => commands::network(&cfg, &out),
        Command::Params => commands::params(&cfg, &out),
        Command::Scenario { name } => commands::scenario(&cfg, name, &out),
        Command::Config => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let kind = match f {
                Failure::Config(_) => "config error",
                Failure::Numeric(_) => "numeric failure",
                Failure::Tolerance(_) => "tolerance exceeded",
            };
            eprintln!("afc: {kind}: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
