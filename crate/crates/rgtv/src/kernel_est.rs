//! The k-subproblem: closed-form frequency-domain least squares in the
//! gradient domain, followed by projection onto the valid-kernel set.

use rustfft::num_complex::Complex64;

use crate::conv::replicate_pad;
use crate::error::{Error, Result};
use crate::fft::{self, next_fast_len, Spectrum};
use crate::image::ImageBuf;
use crate::kernel::Kernel;

/// Parameters of the kernel solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSolveParams {
    /// Tikhonov weight on the squared kernel norm.
    pub mu: f64,
    /// Odd kernel size to estimate.
    pub kernel_size: usize,
}

impl KernelSolveParams {
    pub fn validate(&self) -> Result<()> {
        if self.mu <= 0.0 || !self.mu.is_finite() {
            return Err(Error::invalid("mu must be positive"));
        }
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::invalid("kernel size must be odd"));
        }
        Ok(())
    }
}

/// Estimate the blur kernel relating a sharp estimate to the blurry image:
/// minimize `1/2 ||grad(x) (*) k - grad(b)||^2 + mu ||k||^2` over both
/// gradient directions jointly, then project (threshold negatives, normalize).
pub fn solve_kernel(xhat: &ImageBuf, b: &ImageBuf, params: &KernelSolveParams) -> Result<Kernel> {
    let raw = solve_kernel_raw(xhat, b, params)?;
    project_kernel(&raw)
}

/// The closed-form solve before projection: the frequency-domain solution
/// `F(k) = sum_d conj(F(grad_d x)) F(grad_d b) / (sum_d |F(grad_d x)|^2 + 2 mu)`,
/// inverse-transformed and center-cropped to `h x h` around the zero-shift
/// tap. The gradients are periodic forward differences on the padded domain.
pub fn solve_kernel_raw(
    xhat: &ImageBuf,
    b: &ImageBuf,
    params: &KernelSolveParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    if !xhat.same_dims(b) {
        return Err(Error::invalid("solve_kernel: image dimension mismatch"));
    }
    let h = params.kernel_size;
    if xhat.width() < h || xhat.height() < h {
        return Err(Error::invalid(format!(
            "images {}x{} are smaller than the kernel size {}",
            xhat.width(),
            xhat.height(),
            h
        )));
    }

    let fw = next_fast_len(xhat.width());
    let fh = next_fast_len(xhat.height());
    let xp = replicate_pad(xhat, fw, fh)?;
    let bp = replicate_pad(b, fw, fh)?;
    let field = solve_full_field(&xp, &bp, params.mu)?;

    // Center-crop around the zero-shift tap at index (0, 0), wrapping
    // negative offsets to the far end of the field.
    let r = (h / 2) as isize;
    let mut raw = Vec::with_capacity(h * h);
    for dy in -r..=r {
        let row = dy.rem_euclid(fh as isize) as usize;
        for dx in -r..=r {
            let col = dx.rem_euclid(fw as isize) as usize;
            raw.push(field.at(row, col));
        }
    }
    Ok(raw)
}

/// Forward differences with periodic wrap, the gradient the frequency
/// solver uses: a true circular convolution with `[-1, 1]`, which keeps the
/// normal equations diagonal in frequency.
pub(crate) fn circ_gradients(img: &ImageBuf) -> (ImageBuf, ImageBuf) {
    let (w, h) = (img.width(), img.height());
    let gx = ImageBuf::from_fn(w, h, |r, c| img.at(r, (c + 1) % w) - img.at(r, c));
    let gy = ImageBuf::from_fn(w, h, |r, c| img.at((r + 1) % h, c) - img.at(r, c));
    (gx, gy)
}

/// Full-field solution of the normal equations on the (padded) circular
/// domain, as a real field the size of the padded images.
fn solve_full_field(xp: &ImageBuf, bp: &ImageBuf, mu: f64) -> Result<ImageBuf> {
    let (gx_x, gy_x) = circ_gradients(xp);
    let grad_energy: f64 = gx_x.data().iter().chain(gy_x.data()).map(|v| v * v).sum();
    if grad_energy <= 1e-20 {
        return Err(Error::Degenerate(
            "skeleton has all-zero gradients, kernel is unobservable".into(),
        ));
    }
    let (gx_b, gy_b) = circ_gradients(bp);

    let sx = fft::forward(&gx_x);
    let sy = fft::forward(&gy_x);
    let tx = fft::forward(&gx_b);
    let ty = fft::forward(&gy_b);

    let mut spec = Spectrum::zeros(xp.width(), xp.height());
    for i in 0..spec.data.len() {
        let numer = sx.data[i].conj() * tx.data[i] + sy.data[i].conj() * ty.data[i];
        let denom = sx.data[i].norm_sqr() + sy.data[i].norm_sqr() + 2.0 * mu;
        spec.data[i] = numer / Complex64::new(denom, 0.0);
    }
    Ok(fft::inverse(&spec))
}

/// Shift a kernel by the rounded negative of its center of mass, so the
/// centroid lands within half a tap of the center. Mass shifted past the
/// window is dropped and the result renormalized. Returns the applied
/// `(dy, dx)` tap shift alongside the kernel; a consistent latent image
/// shifts by the same offset.
///
/// Blind estimation only determines the kernel up to translation (a shifted
/// kernel with an oppositely shifted image explains the data equally well);
/// recentering pins that gauge so restorations align with the input.
pub fn recenter(k: &Kernel) -> (Kernel, (isize, isize)) {
    let r = k.radius() as isize;
    let mut cy = 0.0;
    let mut cx = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            cy += dy as f64 * k.at(dy, dx);
            cx += dx as f64 * k.at(dy, dx);
        }
    }
    let (sy, sx) = (cy.round() as isize, cx.round() as isize);
    if sy == 0 && sx == 0 {
        return (k.clone(), (0, 0));
    }
    let size = k.size();
    let mut taps = vec![0.0; size * size];
    for dy in -r..=r {
        for dx in -r..=r {
            let (oy, ox) = (dy + sy, dx + sx);
            if oy.abs() <= r && ox.abs() <= r {
                taps[((dy + r) as usize) * size + (dx + r) as usize] = k.at(oy, ox);
            }
        }
    }
    match Kernel::normalized(size, taps) {
        Ok(centered) => (centered, (sy, sx)),
        Err(_) => (k.clone(), (0, 0)),
    }
}

/// Shift a kernel by the exact (fractional) negative of its center of mass
/// using a frequency-domain phase ramp on a zero-padded field, then clip
/// negatives and renormalize.
///
/// Unlike spatial interpolation this shift does not smear the kernel, which
/// matters for the final estimate: a restoration with a kernel whose
/// centroid is off by even half a pixel comes out visibly translated.
pub fn recenter_subpixel(k: &Kernel) -> Kernel {
    let r = k.radius() as isize;
    let mut cy = 0.0;
    let mut cx = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            cy += dy as f64 * k.at(dy, dx);
            cx += dx as f64 * k.at(dy, dx);
        }
    }
    if cy.abs() < 1e-3 && cx.abs() < 1e-3 {
        return k.clone();
    }
    let n = (4 * k.size()).next_power_of_two();
    let mut field = vec![0.0; n * n];
    for dy in -r..=r {
        let rr = dy.rem_euclid(n as isize) as usize;
        for dx in -r..=r {
            let cc = dx.rem_euclid(n as isize) as usize;
            field[rr * n + cc] = k.at(dy, dx);
        }
    }
    let mut spec = fft::forward_raw(n, n, &field);
    for row in 0..n {
        let fy = if row <= n / 2 {
            row as f64
        } else {
            row as f64 - n as f64
        };
        for col in 0..n {
            let fx = if col <= n / 2 {
                col as f64
            } else {
                col as f64 - n as f64
            };
            let phase = 2.0 * std::f64::consts::PI * (fy * cy + fx * cx) / n as f64;
            spec.data[row * n + col] *= Complex64::new(phase.cos(), phase.sin());
        }
    }
    let shifted = fft::inverse(&spec);
    let mut taps = Vec::with_capacity(k.size() * k.size());
    for dy in -r..=r {
        let rr = dy.rem_euclid(n as isize) as usize;
        for dx in -r..=r {
            let cc = dx.rem_euclid(n as isize) as usize;
            taps.push(shifted.at(rr, cc).max(0.0));
        }
    }
    Kernel::normalized(k.size(), taps).unwrap_or_else(|_| k.clone())
}

/// Project raw taps onto the valid-kernel set: negatives to zero, then
/// normalize to sum one. The tap slice must be a full odd-sized square.
pub fn project_kernel(raw: &[f64]) -> Result<Kernel> {
    let size = (raw.len() as f64).sqrt().round() as usize;
    if size * size != raw.len() || size.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "projection needs an odd square tap count, got {}",
            raw.len()
        )));
    }
    let clipped: Vec<f64> = raw.iter().map(|&t| t.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    if sum <= 0.0 || sum.is_nan() {
        return Err(Error::Degenerate(
            "all kernel taps non-positive after thresholding".into(),
        ));
    }
    Kernel::normalized(size, clipped)
}
