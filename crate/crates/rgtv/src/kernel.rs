//! Blur kernels: odd-sized square point-spread functions that are
//! non-negative and sum to one.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Odd-sized square blur kernel. Taps are row-major; the coordinate origin
/// is the center tap, so tap `(dy, dx)` lives at
/// `taps[(dy + r) * size + (dx + r)]` with `r = (size - 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    /// Validating constructor: odd size, non-negative finite taps summing to
    /// one within `1e-9`.
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        Self::check_geometry(size, &taps)?;
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "kernel taps sum to {sum}, expected 1"
            )));
        }
        Ok(Self { size, taps })
    }

    /// Constructor that rescales the taps to sum to one.
    pub fn normalized(size: usize, taps: Vec<f64>) -> Result<Self> {
        Self::check_geometry(size, &taps)?;
        let sum: f64 = taps.iter().sum();
        if sum <= 0.0 || sum.is_nan() {
            return Err(Error::Degenerate(
                "kernel taps sum to zero, cannot normalize".into(),
            ));
        }
        let taps = taps.into_iter().map(|t| t / sum).collect();
        Ok(Self { size, taps })
    }

    fn check_geometry(size: usize, taps: &[f64]) -> Result<()> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel size {size} must be odd")));
        }
        if taps.len() != size * size {
            return Err(Error::invalid(format!(
                "expected {} taps, got {}",
                size * size,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("kernel taps must be finite and >= 0"));
        }
        Ok(())
    }

    /// Centered delta: identity under convolution.
    pub fn delta(size: usize) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel size {size} must be odd")));
        }
        let mut taps = vec![0.0; size * size];
        let r = size / 2;
        taps[r * size + r] = 1.0;
        Ok(Self { size, taps })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Center offset `(size - 1) / 2`.
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at signed offset from the center; offsets must satisfy
    /// `|dy|, |dx| <= radius`.
    #[inline]
    pub fn at(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius() as isize;
        self.taps[((dy + r) as usize) * self.size + (dx + r) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// 180-degree rotation; convolving with the flip applies the adjoint of
    /// circular convolution with `self`.
    pub fn flipped(&self) -> Kernel {
        let n = self.size;
        let mut taps = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                taps[r * n + c] = self.taps[(n - 1 - r) * n + (n - 1 - c)];
            }
        }
        Kernel {
            size: self.size,
            taps,
        }
    }

    pub fn l1_distance(&self, other: &Kernel) -> f64 {
        debug_assert_eq!(self.size, other.size);
        self.taps
            .iter()
            .zip(&other.taps)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Text form: first line the size `h`, then `h` lines of `h`
    /// space-separated floats.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.size).unwrap();
        for row in self.taps.chunks_exact(self.size) {
            let line: Vec<String> = row.iter().map(|t| format!("{t:e}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    /// Parse the text form. Negative taps are rejected; the tap sum is
    /// renormalized iff it is within `1e-3` of one, otherwise this errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let size: usize = lines
            .next()
            .ok_or_else(|| Error::Format("empty kernel text".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("bad kernel size line: {e}")))?;
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::Format(format!("kernel size {size} must be odd")));
        }
        let mut taps = Vec::with_capacity(size * size);
        for _ in 0..size {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format("kernel text truncated".into()))?;
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| Error::Format(format!("bad kernel tap '{tok}': {e}")))?;
                if !v.is_finite() {
                    return Err(Error::Format("kernel tap is not finite".into()));
                }
                if v < 0.0 {
                    return Err(Error::Format(format!("negative kernel tap {v}")));
                }
                taps.push(v);
            }
        }
        if taps.len() != size * size {
            return Err(Error::Format(format!(
                "expected {} taps, found {}",
                size * size,
                taps.len()
            )));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > 1e-3 {
            return Err(Error::Format(format!(
                "kernel sum {sum} is too far from 1 to renormalize"
            )));
        }
        if (sum - 1.0).abs() <= 1e-9 {
            // Already normalized; skip the division so parse(write(k))
            // reproduces k bit for bit.
            Kernel::new(size, taps)
        } else {
            Kernel::normalized(size, taps)
        }
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_text())
            .map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn load_text(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_text(&text)
    }

    /// 8-bit PGM with taps rescaled so the largest tap maps to 255,
    /// for visual inspection.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let max = self.taps.iter().cloned().fold(0.0f64, f64::max);
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let mut bytes = format!("P5\n{} {}\n255\n", self.size, self.size).into_bytes();
        bytes.extend(
            self.taps
                .iter()
                .map(|&t| (t * scale).round().clamp(0.0, 255.0) as u8),
        );
        std::fs::write(path.as_ref(), bytes).map_err(|e| Error::io(path.as_ref(), e))
    }
}
