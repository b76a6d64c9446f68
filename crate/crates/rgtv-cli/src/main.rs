//! Command-line surface for the blind deblurring library.
//!
//! Exit codes are stable for scripting: 0 success, 1 usage error,
//! 2 I/O error, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use rgtv::graph::{weight_histogram, HistogramAxis};
use rgtv::image::Rect;
use rgtv::io::{load_image, save_gray, save_rgb};
use rgtv::kernel_est::{solve_kernel, KernelSolveParams};
use rgtv::metrics::psnr;
use rgtv::pipeline::{deblur_blind, nonblind_restore, parse_config, SolverParams};
use rgtv::synth::{synth_blur, KernelSource, SynthSpec};
use rgtv::{Error, ImageBuf};

#[derive(Parser)]
#[command(name = "rgtv", version, about = "Blind image deblurring with a reweighted graph TV prior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur an image with a kernel and add seeded Gaussian noise.
    Blur {
        #[arg(long)]
        input: PathBuf,
        /// Kernel file path, or builtin:gaussian:<std>,
        /// builtin:motion-line:<length>,<angle_deg>, builtin:disk:<radius>.
        #[arg(long)]
        kernel: String,
        /// Std of additive white Gaussian noise in [0,1] intensity units.
        #[arg(long = "noise-sigma")]
        noise_sigma: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Estimate the blur kernel of an image blindly and restore it.
    Deblur {
        #[arg(long)]
        input: PathBuf,
        /// Odd kernel size to estimate (the blur support is a required
        /// user input).
        #[arg(long = "kernel-size")]
        kernel_size: usize,
        /// Restored image output.
        #[arg(long)]
        output: PathBuf,
        /// Estimated kernel output (text format).
        #[arg(long = "kernel-out")]
        kernel_out: PathBuf,
        /// Optional `key = value` config file; the --kernel-size flag takes
        /// precedence over a kernel_size key.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional per-iteration trace CSV
        /// (level,outer,lambda,objective,kernel_change).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Disable center-of-mass recentering of kernel estimates.
        #[arg(long = "no-recenter")]
        no_recenter: bool,
    },
    /// Estimate the kernel relating a known sharp/blurry pair.
    KernelEstimate {
        #[arg(long)]
        sharp: PathBuf,
        #[arg(long)]
        blurry: PathBuf,
        #[arg(long = "kernel-size")]
        kernel_size: usize,
        /// Tikhonov weight on the squared kernel norm.
        #[arg(long)]
        mu: f64,
        /// Kernel output (text format).
        #[arg(long)]
        output: PathBuf,
    },
    /// Histogram the edge weights of an image region (CSV output).
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Region as x,y,w,h (defaults to the full image).
        #[arg(long)]
        region: Option<String>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        output: PathBuf,
        /// Gaussian weight parameter.
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Weight band counted by mid_band_fraction, as lo,hi.
        #[arg(long = "mid-band", default_value = "0.2,0.8")]
        mid_band: String,
        /// Histogram axis: weight or difference.
        #[arg(long, default_value = "weight")]
        axis: String,
    },
    /// Print the PSNR between two images in dB.
    Psnr { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Config(_) => 1,
        Error::Io { .. } | Error::Image { .. } | Error::Format(_) => 2,
        Error::Solver(_) | Error::Degenerate(_) => 3,
    }
}

fn run(cli: Cli) -> rgtv::Result<()> {
    match cli.command {
        Command::Blur {
            input,
            kernel,
            noise_sigma,
            seed,
            output,
        } => {
            let spec = SynthSpec {
                kernel: KernelSource::parse(&kernel)?,
                noise_sigma,
                seed,
            };
            let loaded = load_image(&input)?;
            match loaded.rgb {
                Some(rgb) => {
                    // Same kernel per channel; decorrelated noise streams.
                    let blurred = [
                        synth_blur(&rgb[0], &spec)?,
                        synth_blur(
                            &rgb[1],
                            &SynthSpec {
                                seed: spec.seed.wrapping_add(1),
                                ..spec.clone()
                            },
                        )?,
                        synth_blur(
                            &rgb[2],
                            &SynthSpec {
                                seed: spec.seed.wrapping_add(2),
                                ..spec.clone()
                            },
                        )?,
                    ];
                    save_rgb(&blurred, &output)
                }
                None => save_gray(&synth_blur(&loaded.gray, &spec)?, &output),
            }
        }

        Command::Deblur {
            input,
            kernel_size,
            output,
            kernel_out,
            config,
            trace,
            no_recenter,
        } => {
            let mut params = SolverParams::with_kernel_size(kernel_size);
            if let Some(path) = &config {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path.clone(), e))?;
                params = parse_config(&text, &params)?;
                params.kernel_size = kernel_size;
            }
            if no_recenter {
                params.recenter_kernel = false;
            }
            let loaded = load_image(&input)?;
            let result = deblur_blind(&loaded.gray, &params)?;
            match loaded.rgb {
                Some(rgb) => {
                    // Kernel estimated on luminance; restore each channel.
                    let restore = |plane: &ImageBuf| {
                        nonblind_restore(
                            plane,
                            &result.kernel,
                            Some(&result.skeleton),
                            params.sigma,
                            params.lambda_nb,
                        )
                    };
                    let restored = [restore(&rgb[0])?, restore(&rgb[1])?, restore(&rgb[2])?];
                    save_rgb(&restored, &output)?;
                }
                None => save_gray(&result.restored, &output)?,
            }
            result.kernel.save_text(&kernel_out)?;
            if let Some(path) = &trace {
                std::fs::write(path, result.trace_csv())
                    .map_err(|e| Error::io(path.clone(), e))?;
            }
            for (li, level) in result.levels.iter().enumerate() {
                for w in &level.warnings {
                    eprintln!("warning: level {li}: {w}");
                }
            }
            Ok(())
        }

        Command::KernelEstimate {
            sharp,
            blurry,
            kernel_size,
            mu,
            output,
        } => {
            let sharp_img = load_image(&sharp)?.gray;
            let blurry_img = load_image(&blurry)?.gray;
            let kernel = solve_kernel(
                &sharp_img,
                &blurry_img,
                &KernelSolveParams { mu, kernel_size },
            )?;
            kernel.save_text(&output)
        }

        Command::Analyze {
            input,
            region,
            bins,
            output,
            sigma,
            mid_band,
            axis,
        } => {
            let img = load_image(&input)?.gray;
            let rect = match region {
                Some(spec) => parse_region(&spec)?,
                None => Rect::full(&img),
            };
            let band = parse_pair(&mid_band)
                .ok_or_else(|| Error::invalid("mid-band must be lo,hi"))?;
            let axis = match axis.as_str() {
                "weight" => HistogramAxis::Weight,
                "difference" | "diff" => HistogramAxis::Difference,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown axis '{other}' (use weight or difference)"
                    )))
                }
            };
            let hist = weight_histogram(&img, rect, sigma, bins, band, axis)?;
            std::fs::write(&output, hist.to_csv()).map_err(|e| Error::io(&output, e))
        }

        Command::Psnr { a, b } => {
            let img_a = load_image(&a)?.gray;
            let img_b = load_image(&b)?.gray;
            println!("{:.4}", psnr(&img_a, &img_b)?);
            Ok(())
        }
    }
}

fn parse_region(spec: &str) -> rgtv::Result<Rect> {
    let parts: Vec<usize> = spec
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::invalid(format!("region must be x,y,w,h: {e}")))?;
    match parts.as_slice() {
        [x, y, w, h] => Ok(Rect::new(*x, *y, *w, *h)),
        _ => Err(Error::invalid("region must be x,y,w,h")),
    }
}

fn parse_pair(spec: &str) -> Option<(f64, f64)> {
    let (lo, hi) = spec.split_once(',')?;
    Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?))
}
