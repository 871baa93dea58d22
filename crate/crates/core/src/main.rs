use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gwsinterp::pipeline::commands::{self, CmdResult, Context};

#[derive(Parser)]
#[command(
    name = "gwsinterp",
    version,
    about = "Interpolation and prediction of groundwater storage anomalies"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize the point observations.
    Ingest,
    /// Segment, gap-fill and convert wells to storage anomalies.
    Preprocess,
    /// Fit a variogram pooled over all months.
    Variogram,
    /// Krige every month onto the configured grid.
    Krige,
    /// Run the temporal cross-validation experiment.
    CvRun,
    /// Score a gridded product against the wells.
    EvaluateExternal {
        /// Grid stack holding the product.
        #[arg(long)]
        product: PathBuf,
        /// Channel of the product to score.
        #[arg(long, default_value = "gws")]
        channel: String,
        /// Name used in the report.
        #[arg(long, default_value = "external")]
        name: String,
    },
    /// Summary tables and SVG plots of a finished run.
    Report {
        /// Directory holding the run outputs; defaults to --out.
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Write a synthetic dataset and a matching configuration.
    Synth {
        #[arg(long)]
        stations: Option<usize>,
        #[arg(long)]
        months: Option<usize>,
    },
}

fn dispatch(cli: Cli) -> CmdResult {
    let ctx = Context {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Ingest => commands::ingest(&ctx),
        Command::Preprocess => commands::preprocess(&ctx),
        Command::Variogram => commands::variogram(&ctx),
        Command::Krige => commands::krige(&ctx),
        Command::CvRun => commands::cv_run(&ctx),
        Command::EvaluateExternal { product, channel, name } => {
            commands::evaluate_external_cmd(&ctx, &product, &channel, &name)
        }
        Command::Report { run } => commands::report(&ctx, run.as_deref()),
        Command::Synth { stations, months } => commands::synth(&ctx, stations, months),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let kind = match f.exit_code() {
                1 => "error",
                _ => "runtime error",
            };
            eprintln!("gwsinterp: {kind}: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
