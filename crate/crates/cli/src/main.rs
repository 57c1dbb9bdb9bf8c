use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ipfc_cli::config::RenderSection;
use ipfc_cli::drivers::{run_converge, run_evolve};
use ipfc_cli::render::render_physical;
use ipfc_cli::spectrum::{format_report, spectrum_report};
use ipfc_cli::{load_dump, CliError, Result, RunConfig};

#[derive(Parser)]
#[command(name = "ipfc", version, about = "Incommensurate phase-field crystal solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a configured run, writing the energy CSV and dumps.
    Evolve {
        config: PathBuf,
        /// Permit lattices above the desk-scale mode limit.
        #[arg(long)]
        allow_large: bool,
    },
    /// Error and observed order against a fine reference solution.
    Converge {
        config: PathBuf,
        #[arg(long)]
        allow_large: bool,
    },
    /// Render a dump in physical space as a binary PGM.
    Render {
        dump: PathBuf,
        /// Config supplying the lattice geometry and default render settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// x_min x_max [y_min y_max]
        #[arg(long, num_args = 2..=4, allow_hyphen_values = true)]
        bbox: Option<Vec<f64>>,
        /// width height
        #[arg(long, num_args = 2)]
        resolution: Option<Vec<usize>>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Output image; defaults to the dump path with a .pgm extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the largest Fourier coefficients of a dump.
    Spectrum {
        dump: PathBuf,
        #[arg(long, default_value_t = 24)]
        top: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_optional(config: &Option<PathBuf>) -> Result<Option<RunConfig>> {
    config.as_deref().map(|p| RunConfig::load(p, true)).transpose()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { config, allow_large } => {
            let cfg = RunConfig::load(&config, allow_large)?;
            let out = run_evolve(&cfg)?;
            if let Some(last) = out.rows.last() {
                println!(
                    "finished step {} at t = {}: original energy {:.10e}, modified energy {:.10e}",
                    last.step, last.t, last.original_energy, last.modified_energy
                );
            }
        }
        Command::Converge { config, allow_large } => {
            let cfg = RunConfig::load(&config, allow_large)?;
            print!("{}", run_converge(&cfg)?.to_text());
        }
        Command::Render {
            dump,
            config,
            bbox,
            resolution,
            threshold,
            output,
        } => {
            let cfg = load_optional(&config)?;
            let field = load_dump(&dump, cfg.as_ref())?;
            let base = cfg.as_ref().and_then(|c| c.output.render.clone());
            let bbox = bbox
                .or_else(|| base.as_ref().map(|r| r.bbox.clone()))
                .ok_or_else(|| CliError::Config("render needs --bbox or a config with [output.render]".into()))?;
            let resolution = match resolution {
                Some(r) => [r[0], r[1]],
                None => base
                    .as_ref()
                    .map(|r| r.resolution)
                    .ok_or_else(|| CliError::Config("render needs --resolution".into()))?,
            };
            if resolution.iter().any(|&n| n < 2) {
                return Err(CliError::Config("resolution must be at least 2x2".into()));
            }
            let threshold = threshold.or(base.map(|r| r.threshold)).unwrap_or(0.0);
            let spec = RenderSection {
                bbox,
                resolution,
                threshold,
            };
            let image = render_physical(&field, &spec)?;
            let path = output.unwrap_or_else(|| dump.with_extension("pgm"));
            image.write(&path)?;
            println!("wrote {} ({}x{}, min {:e}, max {:e})", path.display(), image.width, image.height, image.min, image.max);
        }
        Command::Spectrum { dump, top, config } => {
            if top == 0 {
                return Err(CliError::Config("--top must be at least 1".into()));
            }
            let cfg = load_optional(&config)?;
            let field = load_dump(&dump, cfg.as_ref())?;
            print!("{}", format_report(&spectrum_report(&field, top)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
