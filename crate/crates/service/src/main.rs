use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scaleglyph_service::pipeline::{run_stages, Stage};
use scaleglyph_service::{DatasetCatalog, PipelineConfig, ServiceError};

#[derive(Parser)]
#[command(name = "scaleglyph", version, about = "Scale-binned glyph pipeline and query service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Config override `dotted.key=value`, e.g. `tessellate.seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, derive and downsample input fields.
    Preprocess(ConfigArgs),
    /// Split fields into scale-bin bands.
    Decompose(ConfigArgs),
    /// Extract the feature isosurface and its signed distance field.
    Surface(ConfigArgs),
    /// Build the level-set restricted Voronoi regions.
    Tessellate(ConfigArgs),
    /// Aggregate band energy per region and build scatter tables.
    Aggregate(ConfigArgs),
    /// Pack glyph datasets and the dataset index.
    Pack(ConfigArgs),
    /// Run every stage.
    Pipeline(ConfigArgs),
    /// Serve datasets under a directory over HTTP.
    Serve {
        #[arg(long, default_value = "artifacts")]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn run_until(args: &ConfigArgs, last: Stage) -> Result<(), ServiceError> {
    let cfg = PipelineConfig::load(&args.config)?.with_overrides(&args.overrides)?;
    let report = run_stages(&cfg, last)?;
    for o in &report.outcomes {
        let state = if o.skipped { "up to date" } else { "ran" };
        println!("{:<11} {state}", o.stage.name());
    }
    println!("artifacts in {}", report.dataset_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Preprocess(a) => run_until(a, Stage::Preprocess),
        Command::Decompose(a) => run_until(a, Stage::Decompose),
        Command::Surface(a) => run_until(a, Stage::Distance),
        Command::Tessellate(a) => run_until(a, Stage::Tessellate),
        Command::Aggregate(a) => run_until(a, Stage::Aggregate),
        Command::Pack(a) | Command::Pipeline(a) => run_until(a, Stage::Pack),
        Command::Serve { root, bind } => DatasetCatalog::open(root).and_then(|catalog| {
            println!("serving {} dataset(s) on http://{bind}", catalog.datasets.len());
            let rt = tokio::runtime::Runtime::new().map_err(|e| ServiceError::io(root.clone(), e))?;
            rt.block_on(scaleglyph_service::http::serve(catalog, *bind))
                .map_err(|e| ServiceError::io(root.clone(), e))
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
