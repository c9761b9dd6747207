use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mpstomo_cli::commands::{self, DemoFamily};
use mpstomo_cli::config::{CommonArgs, ExperimentConfig, OutputFormat};
use mpstomo_cli::manifest::Manifest;

/// Direct tomography of matrix product states: seeded protocol campaigns,
/// closeness certification, scaling tables, and hidden-phase demos.
#[derive(Parser)]
#[command(name = "mpstomo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: sweep, reconstruction, fidelity, certificate.
    Run {
        #[command(flatten)]
        common: Box<CommonArgs>,
    },
    /// Run the sweep for certification only and report accept/reject.
    Certify {
        #[command(flatten)]
        common: Box<CommonArgs>,
    },
    /// Sweep chain lengths and emit a plot-ready scaling table.
    Bench {
        /// Chain lengths to benchmark.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        sizes: Vec<usize>,
        #[command(flatten)]
        common: Box<CommonArgs>,
    },
    /// Hidden-phase recovery demo on GHZ or W states.
    Demo {
        #[arg(value_enum)]
        family: DemoArg,
        #[command(flatten)]
        common: Box<CommonArgs>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoArg {
    Ghz,
    W,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MPSTOMO_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            // best effort: later configuration attempts are ignored
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { common } => {
            let config = common.experiment()?;
            let manifest = commands::cmd_run(&config)?;
            emit(&manifest, &config)?;
            Ok(verdict_code(&manifest))
        }
        Command::Certify { common } => {
            let config = common.experiment()?;
            let manifest = commands::cmd_certify(&config)?;
            emit(&manifest, &config)?;
            Ok(verdict_code(&manifest))
        }
        Command::Bench { sizes, common } => {
            let config = common.experiment_with(|| default_bench_state(&common))?;
            let manifest = commands::cmd_bench(&config, &sizes)?;
            emit(&manifest, &config)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo { family, common } => {
            let family = match family {
                DemoArg::Ghz => DemoFamily::Ghz,
                DemoArg::W => DemoFamily::W,
            };
            let config = common.experiment_with(|| default_demo_state(&common, &family))?;
            let (manifest, text) = commands::cmd_demo(&config, family)?;
            println!("{text}");
            if config.out.is_some() {
                emit(&manifest, &config)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn default_bench_state(common: &CommonArgs) -> mpstomo::StateSpec {
    mpstomo::StateSpec::RandomMps {
        n: 8,
        d: common.d.unwrap_or(2),
        chi: common.chi.unwrap_or(2),
        seed: common.state_seed,
    }
}

fn default_demo_state(common: &CommonArgs, family: &DemoFamily) -> mpstomo::StateSpec {
    let frac = std::f64::consts::FRAC_1_SQRT_2;
    match family {
        DemoFamily::Ghz => mpstomo::StateSpec::Ghz {
            n: common.n.unwrap_or(6),
            d: 2,
            a: common.a.unwrap_or(frac),
            b: common.b.unwrap_or(frac),
            phi: common.phi.unwrap_or(0.0),
        },
        DemoFamily::W => mpstomo::StateSpec::W { n: common.n.unwrap_or(5), d: 2, phases: None },
    }
}

fn emit(manifest: &Manifest, config: &ExperimentConfig) -> anyhow::Result<()> {
    let body = match config.format {
        OutputFormat::Records => manifest.to_records(),
        OutputFormat::Table => manifest.to_table(),
    };
    match &config.out {
        Some(path) => write_file(path, &body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, body)?;
    Ok(())
}

/// 0 on success/accept, 2 when any trial's certificate rejected.
fn verdict_code(manifest: &Manifest) -> ExitCode {
    if manifest.any_reject() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
