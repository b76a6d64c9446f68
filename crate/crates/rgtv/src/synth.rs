//! Synthetic degradation: builtin blur kernels and seeded Gaussian noise,
//! for generating test fixtures with `b = x (*) k + n`.

use crate::conv::{convolve, Boundary};
use crate::error::{Error, Result};
use crate::image::ImageBuf;
use crate::kernel::Kernel;

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood 2014).
///
/// Kept deliberately simple so fixtures are reproducible from the constants
/// alone: the state advances by `0x9E3779B97F4A7C15` per draw and the output
/// mix is `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
/// z *= 0x94D049BB133111EB; z ^= z >> 31`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the Box-Muller transform,
    /// `sqrt(-2 ln u1) * cos(2 pi u2)` with `u1` in (0, 1].
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Where a synthesis kernel comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSource {
    File(std::path::PathBuf),
    Gaussian { std: f64 },
    MotionLine { length: f64, angle_deg: f64 },
    Disk { radius: f64 },
}

impl KernelSource {
    /// Parse a CLI kernel argument: either a path, or
    /// `builtin:gaussian:<std>`, `builtin:motion-line:<length>,<angle_deg>`,
    /// `builtin:disk:<radius>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let Some(rest) = spec.strip_prefix("builtin:") else {
            return Ok(KernelSource::File(spec.into()));
        };
        let (name, args) = rest
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("builtin kernel '{rest}' missing arguments")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad kernel argument '{s}': {e}")))
            })
            .collect::<Result<_>>()?;
        match (name, nums.as_slice()) {
            ("gaussian", [std]) => Ok(KernelSource::Gaussian { std: *std }),
            ("motion-line", [length, angle]) => Ok(KernelSource::MotionLine {
                length: *length,
                angle_deg: *angle,
            }),
            ("disk", [radius]) => Ok(KernelSource::Disk { radius: *radius }),
            _ => Err(Error::Format(format!(
                "unknown builtin kernel '{name}' or wrong argument count"
            ))),
        }
    }

    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelSource::File(path) => Kernel::load_text(path),
            KernelSource::Gaussian { std } => {
                let size = odd_at_least(2 * (3.0 * std).ceil() as usize + 1, 3);
                gaussian_kernel(size, *std)
            }
            KernelSource::MotionLine { length, angle_deg } => {
                let size = odd_at_least(length.ceil() as usize, 3);
                motion_line_kernel(size, *length, *angle_deg)
            }
            KernelSource::Disk { radius } => {
                let size = odd_at_least(2 * radius.ceil() as usize + 1, 3);
                disk_kernel(size, *radius)
            }
        }
    }
}

fn odd_at_least(n: usize, floor: usize) -> usize {
    let n = n.max(floor);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Isotropic Gaussian kernel on an odd grid, normalized.
pub fn gaussian_kernel(size: usize, std: f64) -> Result<Kernel> {
    if std <= 0.0 || std.is_nan() {
        return Err(Error::invalid("gaussian std must be positive"));
    }
    let r = (size / 2) as isize;
    let mut taps = Vec::with_capacity(size * size);
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dy * dy + dx * dx) as f64;
            taps.push((-d2 / (2.0 * std * std)).exp());
        }
    }
    Kernel::normalized(size, taps)
}

/// Linear motion blur: a length-`length` segment through the kernel center
/// at `angle_deg` degrees, rendered with a one-pixel tent profile.
pub fn motion_line_kernel(size: usize, length: f64, angle_deg: f64) -> Result<Kernel> {
    if length <= 0.0 || length.is_nan() {
        return Err(Error::invalid("motion length must be positive"));
    }
    let theta = angle_deg.to_radians();
    let (dir_y, dir_x) = (theta.sin(), theta.cos());
    let half = (length - 1.0).max(0.0) / 2.0;
    let r = (size / 2) as isize;
    let mut taps = Vec::with_capacity(size * size);
    for dy in -r..=r {
        for dx in -r..=r {
            let (py, px) = (dy as f64, dx as f64);
            // Distance from the tap to the segment [-half, half] * dir.
            let t = (px * dir_x + py * dir_y).clamp(-half, half);
            let (cy, cx) = (t * dir_y, t * dir_x);
            let dist = ((py - cy).powi(2) + (px - cx).powi(2)).sqrt();
            taps.push((1.0 - dist).max(0.0));
        }
    }
    Kernel::normalized(size, taps)
}

/// Pillbox kernel: tap value is the fraction of the pixel inside the disk,
/// estimated on a 16x16 subgrid.
pub fn disk_kernel(size: usize, radius: f64) -> Result<Kernel> {
    if radius <= 0.0 || radius.is_nan() {
        return Err(Error::invalid("disk radius must be positive"));
    }
    let r = (size / 2) as isize;
    const SUB: usize = 16;
    let mut taps = Vec::with_capacity(size * size);
    for dy in -r..=r {
        for dx in -r..=r {
            let mut inside = 0usize;
            for sy in 0..SUB {
                for sx in 0..SUB {
                    let py = dy as f64 + (sy as f64 + 0.5) / SUB as f64 - 0.5;
                    let px = dx as f64 + (sx as f64 + 0.5) / SUB as f64 - 0.5;
                    if py * py + px * px <= radius * radius {
                        inside += 1;
                    }
                }
            }
            taps.push(inside as f64 / (SUB * SUB) as f64);
        }
    }
    Kernel::normalized(size, taps)
}

/// Degradation recipe for `synth_blur`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kernel: KernelSource,
    /// Std of the additive white Gaussian noise, in intensity units.
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Blur with replicate boundary, add seeded Gaussian noise, clamp to [0, 1].
pub fn synth_blur(sharp: &ImageBuf, spec: &SynthSpec) -> Result<ImageBuf> {
    if spec.noise_sigma < 0.0 || spec.noise_sigma.is_nan() {
        return Err(Error::invalid("noise sigma must be >= 0"));
    }
    let kernel = spec.kernel.build()?;
    let blurred = convolve(sharp, &kernel, Boundary::Replicate)?;
    Ok(add_noise(&blurred, spec.noise_sigma, spec.seed))
}

/// Additive white Gaussian noise (SplitMix64 + Box-Muller), clamped to [0, 1].
pub fn add_noise(img: &ImageBuf, noise_sigma: f64, seed: u64) -> ImageBuf {
    let mut rng = SplitMix64::new(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let n = if noise_sigma > 0.0 {
                noise_sigma * rng.next_gaussian()
            } else {
                0.0
            };
            (v + n).clamp(0.0, 1.0)
        })
        .collect();
    ImageBuf::from_raw(img.width(), img.height(), data)
}
