use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polsar_cli::{
    cmd_classify, cmd_decompose, cmd_simulate, cmd_synth, configure_threads, CliError,
    ImageOverrides, SimulateOverrides, SynthLayout,
};

/// Multipass PolSAR covariance symmetry classification toolkit.
#[derive(Parser)]
#[command(name = "polsar", version, about)]
struct Cli {
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo grids declared in a manifest and write CSV
    /// reports plus a reference-comparison summary.
    Simulate {
        /// TOML manifest describing the experiment grids.
        #[arg(long)]
        manifest: PathBuf,
        /// Override the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override every trial count in the manifest.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Per-pixel symmetry classification of a stack; writes a rendered map,
    /// a raw label raster and optional per-region statistics.
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        /// Selection rule: aic, bic, gic or hqc.
        #[arg(long)]
        rule: Option<String>,
        /// GIC tuning parameter (integer >= 2).
        #[arg(long)]
        gic_delta: Option<u32>,
        /// Window size as W1xW2, e.g. 5x5.
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
        /// Flip-flop sweep count.
        #[arg(long)]
        iters: Option<usize>,
        /// Use only the first pass of the stack.
        #[arg(long)]
        single_image: bool,
    },
    /// Per-pixel H/alpha/zone decomposition from the selected structured
    /// estimates; writes the zone map, entropy/alpha rasters and optional
    /// per-region zone percentages.
    Decompose {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        gic_delta: Option<u32>,
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        single_image: bool,
    },
    /// Generate a synthetic multipass stack for trying out the pipeline.
    Synth {
        #[arg(long, default_value_t = 64)]
        rows: usize,
        #[arg(long, default_value_t = 64)]
        cols: usize,
        #[arg(long, default_value_t = 2)]
        passes: usize,
        /// Exponential temporal correlation; omit for uncorrelated passes.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Scene layout: two-region, quadrants, or uniform:<class>.
        #[arg(long, default_value = "two-region")]
        layout: String,
        /// Output header file.
        #[arg(long)]
        header: PathBuf,
        /// Output payload file.
        #[arg(long)]
        payload: PathBuf,
    },
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("'{s}' is not of the form W1xW2"))?;
    let w1 = a.parse().map_err(|_| format!("'{a}' is not a count"))?;
    let w2 = b.parse().map_err(|_| format!("'{b}' is not a count"))?;
    Ok((w1, w2))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads);
    match cli.command {
        Command::Simulate {
            manifest,
            seed,
            trials,
        } => cmd_simulate(&manifest, &SimulateOverrides { seed, trials }),
        Command::Classify {
            manifest,
            rule,
            gic_delta,
            window,
            iters,
            single_image,
        } => cmd_classify(
            &manifest,
            &ImageOverrides {
                rule,
                gic_delta,
                window,
                iterations: iters,
                single_image,
            },
        ),
        Command::Decompose {
            manifest,
            rule,
            gic_delta,
            window,
            iters,
            single_image,
        } => cmd_decompose(
            &manifest,
            &ImageOverrides {
                rule,
                gic_delta,
                window,
                iterations: iters,
                single_image,
            },
        ),
        Command::Synth {
            rows,
            cols,
            passes,
            rho,
            seed,
            layout,
            header,
            payload,
        } => {
            let layout = SynthLayout::parse(&layout)?;
            cmd_synth(rows, cols, passes, rho, seed, &layout, &header, &payload)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
