//! `oneshot` — blind one-shot deblurring from the command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid arguments, 3 infeasible
//! design, 4 I/O failure.

mod commands;
mod config;
mod error;
mod imageio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oneshot_deblur::blind::BlurModel;

use crate::config::{AutoOr, ConfigFile, PipelineConfig};
use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "oneshot", version, about = "Blind one-shot FIR deblurring of PNG and TIFF images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the subcommands. Flags override values read from
/// `--config`; both override the built-in defaults shown here.
#[derive(Args, Debug, Default)]
struct Settings {
    /// JSON file with any of the settings below (snake_case keys)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Blur model fitted to the spectrum ratio [default: gaussian]
    #[arg(long, value_parser = parse_model)]
    model: Option<BlurModel>,

    /// Downsampling factor of the two-scale spectrum ratio, 2 or 4 [default: 2]
    #[arg(long, value_name = "S")]
    scale_factor: Option<usize>,

    /// Polynomial order N of the inverse fit [default: 7]
    #[arg(long, value_name = "N")]
    order: Option<usize>,

    /// Fit band: `auto` (gain-cap rule) or a frequency in (0, pi] [default: auto]
    #[arg(long, value_name = "auto|FLOAT")]
    omega_t: Option<AutoOr>,

    /// Largest inverse gain 1/|h| inside the automatic fit band [default: 2]
    #[arg(long, value_name = "G")]
    gain_cap: Option<f64>,

    /// Deblur strength: `auto` (entropy-adaptive) or a value in [0, 1] [default: auto]
    #[arg(long, value_name = "auto|FLOAT")]
    gamma: Option<AutoOr>,

    /// Entropy threshold T of the adaptive strength, in nats [default: 0.5]
    #[arg(long, value_name = "T")]
    entropy_threshold: Option<f64>,

    /// Smooth the result with a Gaussian of 0.5x the estimated blur scale [default: off]
    #[arg(long)]
    denoise: bool,

    /// Enable denoising at this fraction of the estimated blur scale, in (0, 1)
    #[arg(long, value_name = "R")]
    denoise_ratio: Option<f64>,

    /// Number of radial spectrum bins [default: 64]
    #[arg(long, value_name = "B")]
    bins: Option<usize>,

    /// Seed of the noise generator (ChaCha8) [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

fn parse_model(s: &str) -> Result<BlurModel, String> {
    s.parse()
}

impl Settings {
    fn resolve(&self) -> CliResult<PipelineConfig> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            model: self.model,
            scale_factor: self.scale_factor,
            order: self.order,
            omega_t: self.omega_t,
            gain_cap: self.gain_cap,
            gamma: self.gamma,
            entropy_threshold: self.entropy_threshold,
            denoise: self.denoise.then_some(true),
            denoise_ratio: self.denoise_ratio,
            bins: self.bins,
            seed: self.seed,
        };
        PipelineConfig::resolve(file.overridden_by(flags))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the blur, design its inverse and deblur an image or a directory of images
    Deblur {
        /// Input image, or a directory of .png/.tif/.tiff files
        input: PathBuf,
        /// Output image (or directory when the input is a directory)
        #[arg(short, long)]
        output: PathBuf,
        /// Sharp reference image; adds quality metrics to the report
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Estimate the blur scale of an image
    Estimate {
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Design the deblurring kernel for a known generalized-Gaussian blur
    Design {
        /// Shape beta of the blur
        #[arg(long)]
        beta: f64,
        /// Scale sigma of the blur, in pixels
        #[arg(long)]
        sigma: f64,
        /// Also write the kernel taps as CSV (`index,tap`, centered indices)
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Blur an image with a generalized Gaussian and add seeded white noise
    Simulate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Shape beta of the blur
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        /// Scale sigma of the blur, in pixels (must be positive)
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        /// Standard deviation of the additive noise, in unit range
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write the radial spectrum of one channel as CSV (`r,value`)
    Spectrum {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the two-scale ratio spectrum as CSV (`r,ratio`)
        #[arg(long, value_name = "PATH")]
        ratio: Option<PathBuf>,
        /// Channel index
        #[arg(long, default_value_t = 0)]
        channel: usize,
        #[command(flatten)]
        settings: Settings,
    },
    /// Compare a test image with a reference: PSNR, SSIM, entropy, high-band energy
    Metrics {
        reference: PathBuf,
        test: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic test scene
    Scene {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        /// Three independent channels instead of one
        #[arg(long)]
        rgb: bool,
        /// Write 16-bit samples instead of 8-bit
        #[arg(long)]
        sixteen_bit: bool,
        #[command(flatten)]
        settings: Settings,
    },
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Deblur {
            input,
            output,
            reference,
            report,
            settings,
        } => commands::cmd_deblur(&input, &output, reference.as_deref(), report.as_deref(), &settings.resolve()?),
        Command::Estimate {
            input,
            report,
            settings,
        } => commands::cmd_estimate(&input, report.as_deref(), &settings.resolve()?),
        Command::Design {
            beta,
            sigma,
            csv,
            report,
            settings,
        } => commands::cmd_design(beta, sigma, csv.as_deref(), report.as_deref(), &settings.resolve()?),
        Command::Simulate {
            input,
            output,
            beta,
            sigma,
            noise_sigma,
            settings,
        } => {
            let config = settings.resolve()?;
            commands::cmd_simulate(&input, &output, beta, sigma, noise_sigma, config.seed)
        }
        Command::Spectrum {
            input,
            output,
            ratio,
            channel,
            settings,
        } => commands::cmd_spectrum(&input, &output, ratio.as_deref(), channel, &settings.resolve()?),
        Command::Metrics {
            reference,
            test,
            report,
            settings,
        } => commands::cmd_metrics(&reference, &test, report.as_deref(), settings.resolve()?.bins),
        Command::Scene {
            output,
            width,
            height,
            rgb,
            sixteen_bit,
            settings,
        } => commands::cmd_scene(&output, width, height, rgb, sixteen_bit, settings.resolve()?.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
