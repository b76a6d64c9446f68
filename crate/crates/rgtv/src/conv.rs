//! Convolution, finite-difference gradients and pyramid resampling.

use crate::error::{Error, Result};
use crate::fft::{self, Spectrum};
use crate::image::ImageBuf;
use crate::kernel::Kernel;

/// Boundary rule for convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Edge pixels repeat outward. Used for synthesis and data-fidelity
    /// evaluation in the spatial domain.
    Replicate,
    /// Periodic wrap-around, the model the frequency-domain solvers use.
    Circular,
}

/// Convolve `img` with kernel `k`, same-size output.
pub fn convolve(img: &ImageBuf, k: &Kernel, boundary: Boundary) -> Result<ImageBuf> {
    if k.size() > img.width() || k.size() > img.height() {
        return Err(Error::invalid(format!(
            "kernel of size {} does not fit a {}x{} image",
            k.size(),
            img.width(),
            img.height()
        )));
    }
    match boundary {
        Boundary::Replicate => Ok(convolve_replicate(img, k)),
        Boundary::Circular => Ok(convolve_circular_fft(img, k)),
    }
}

fn convolve_replicate(img: &ImageBuf, k: &Kernel) -> ImageBuf {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let r = k.radius() as isize;
    ImageBuf::from_fn(img.width(), img.height(), |row, col| {
        let mut acc = 0.0;
        for dy in -r..=r {
            let sr = (row as isize - dy).clamp(0, h - 1) as usize;
            for dx in -r..=r {
                let sc = (col as isize - dx).clamp(0, w - 1) as usize;
                acc += k.at(dy, dx) * img.at(sr, sc);
            }
        }
        acc
    })
}

fn convolve_circular_fft(img: &ImageBuf, k: &Kernel) -> ImageBuf {
    let img_spec = fft::forward(img);
    let k_spec = kernel_spectrum(k, img.width(), img.height());
    let mut prod = Spectrum::zeros(img.width(), img.height());
    for i in 0..prod.data.len() {
        prod.data[i] = img_spec.data[i] * k_spec.data[i];
    }
    fft::inverse(&prod)
}

/// Transform of the kernel embedded in a `width x height` field with the
/// center tap at index (0, 0) and other taps wrapped.
pub fn kernel_spectrum(k: &Kernel, width: usize, height: usize) -> Spectrum {
    let mut field = vec![0.0; width * height];
    let r = k.radius() as isize;
    for dy in -r..=r {
        let row = (dy.rem_euclid(height as isize)) as usize;
        for dx in -r..=r {
            let col = (dx.rem_euclid(width as isize)) as usize;
            field[row * width + col] += k.at(dy, dx);
        }
    }
    fft::forward_raw(width, height, &field)
}

/// Forward-difference gradients; the last column of `gx` and last row of
/// `gy` are zero.
pub fn image_gradients(img: &ImageBuf) -> Result<(ImageBuf, ImageBuf)> {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return Err(Error::invalid("gradients need at least a 2x2 image"));
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                gx[r * w + c] = img.at(r, c + 1) - img.at(r, c);
            }
            if r + 1 < h {
                gy[r * w + c] = img.at(r + 1, c) - img.at(r, c);
            }
        }
    }
    Ok((
        ImageBuf::from_raw(w, h, gx),
        ImageBuf::from_raw(w, h, gy),
    ))
}

/// Anti-aliased resampling to `round(dims / factor)`: separable Gaussian
/// prefilter with std proportional to the factor, then bilinear sampling.
pub fn downsample(img: &ImageBuf, factor: f64) -> Result<ImageBuf> {
    if factor <= 1.0 || !factor.is_finite() {
        return Err(Error::invalid("downsampling factor must be > 1"));
    }
    let out_w = (img.width() as f64 / factor).round() as usize;
    let out_h = (img.height() as f64 / factor).round() as usize;
    downsample_to(img, out_w, out_h)
}

/// Resample to explicit output dims (used by the pyramid so per-level dims
/// are computed once from the full-resolution image).
pub(crate) fn downsample_to(img: &ImageBuf, out_w: usize, out_h: usize) -> Result<ImageBuf> {
    if out_w < 3 || out_h < 3 {
        return Err(Error::invalid(format!(
            "downsampled size {out_w}x{out_h} is below the 3x3 minimum"
        )));
    }
    if out_w > img.width() || out_h > img.height() {
        return Err(Error::invalid("downsample cannot enlarge an image"));
    }
    let fx = img.width() as f64 / out_w as f64;
    let fy = img.height() as f64 / out_h as f64;
    let blurred = gaussian_prefilter(img, 0.5 * fx, 0.5 * fy);
    let sample = |src: &ImageBuf, y: f64, x: f64| -> f64 {
        let (w, h) = (src.width() as isize, src.height() as isize);
        let x0 = x.floor();
        let y0 = y.floor();
        let tx = x - x0;
        let ty = y - y0;
        let clamp_at = |r: isize, c: isize| {
            src.at(
                r.clamp(0, h - 1) as usize,
                c.clamp(0, w - 1) as usize,
            )
        };
        let (xi, yi) = (x0 as isize, y0 as isize);
        let top = (1.0 - tx) * clamp_at(yi, xi) + tx * clamp_at(yi, xi + 1);
        let bot = (1.0 - tx) * clamp_at(yi + 1, xi) + tx * clamp_at(yi + 1, xi + 1);
        (1.0 - ty) * top + ty * bot
    };
    Ok(ImageBuf::from_fn(out_w, out_h, |r, c| {
        // Align pixel centers between the grids.
        let y = (r as f64 + 0.5) * fy - 0.5;
        let x = (c as f64 + 0.5) * fx - 0.5;
        sample(&blurred, y, x)
    }))
}

/// Separable Gaussian blur with replicate boundary.
fn gaussian_prefilter(img: &ImageBuf, sigma_x: f64, sigma_y: f64) -> ImageBuf {
    let horizontal = gaussian_pass(img, sigma_x, true);
    gaussian_pass(&horizontal, sigma_y, false)
}

fn gaussian_pass(img: &ImageBuf, sigma: f64, along_rows: bool) -> ImageBuf {
    if sigma < 1e-3 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        taps.push((-(i * i) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = taps.iter().sum();
    let (w, h) = (img.width() as isize, img.height() as isize);
    ImageBuf::from_fn(img.width(), img.height(), |r, c| {
        let mut acc = 0.0;
        for (i, t) in taps.iter().enumerate() {
            let off = i as isize - radius;
            let v = if along_rows {
                img.at(r, (c as isize + off).clamp(0, w - 1) as usize)
            } else {
                img.at((r as isize + off).clamp(0, h - 1) as usize, c)
            };
            acc += t * v;
        }
        acc / norm
    })
}

/// Resample a kernel onto a larger odd grid by bilinear interpolation,
/// clamp negatives, renormalize to sum one.
pub fn upsample_kernel(k: &Kernel, new_size: usize) -> Result<Kernel> {
    if new_size.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "kernel size {new_size} must be odd"
        )));
    }
    if new_size < k.size() {
        return Err(Error::invalid(
            "upsample_kernel cannot shrink a kernel",
        ));
    }
    if new_size == k.size() {
        return Kernel::normalized(k.size(), k.taps().to_vec());
    }
    let scale = k.size() as f64 / new_size as f64;
    let old_r = k.radius() as isize;
    let new_r = (new_size / 2) as isize;
    let mut taps = Vec::with_capacity(new_size * new_size);
    for dy in -new_r..=new_r {
        for dx in -new_r..=new_r {
            let y = dy as f64 * scale;
            let x = dx as f64 * scale;
            let y0 = y.floor() as isize;
            let x0 = x.floor() as isize;
            let ty = y - y0 as f64;
            let tx = x - x0 as f64;
            let tap_at = |r: isize, c: isize| -> f64 {
                if r < -old_r || r > old_r || c < -old_r || c > old_r {
                    0.0
                } else {
                    k.at(r, c)
                }
            };
            let top = (1.0 - tx) * tap_at(y0, x0) + tx * tap_at(y0, x0 + 1);
            let bot = (1.0 - tx) * tap_at(y0 + 1, x0) + tx * tap_at(y0 + 1, x0 + 1);
            taps.push(((1.0 - ty) * top + ty * bot).max(0.0));
        }
    }
    Kernel::normalized(new_size, taps)
}

/// Pad by replicating the last row/column out to `new_w x new_h`
/// (right/bottom only, so the original sits at the top-left corner).
pub fn replicate_pad(img: &ImageBuf, new_w: usize, new_h: usize) -> Result<ImageBuf> {
    if new_w < img.width() || new_h < img.height() {
        return Err(Error::invalid("replicate_pad cannot shrink an image"));
    }
    Ok(ImageBuf::from_fn(new_w, new_h, |r, c| {
        img.at(r.min(img.height() - 1), c.min(img.width() - 1))
    }))
}

/// Top-left crop to `w x h`.
pub fn crop(img: &ImageBuf, w: usize, h: usize) -> Result<ImageBuf> {
    if w > img.width() || h > img.height() {
        return Err(Error::invalid("crop larger than image"));
    }
    Ok(ImageBuf::from_fn(w, h, |r, c| img.at(r, c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;

    /// Direct O(N h^2) circular convolution, the oracle for the FFT path.
    fn convolve_circular_direct(img: &ImageBuf, k: &Kernel) -> ImageBuf {
        let (w, h) = (img.width() as isize, img.height() as isize);
        let r = k.radius() as isize;
        ImageBuf::from_fn(img.width(), img.height(), |row, col| {
            let mut acc = 0.0;
            for dy in -r..=r {
                let sr = (row as isize - dy).rem_euclid(h) as usize;
                for dx in -r..=r {
                    let sc = (col as isize - dx).rem_euclid(w) as usize;
                    acc += k.at(dy, dx) * img.at(sr, sc);
                }
            }
            acc
        })
    }

    fn random_image(w: usize, h: usize, seed: u64) -> ImageBuf {
        let mut rng = SplitMix64::new(seed);
        ImageBuf::from_fn(w, h, |_, _| rng.next_f64())
    }

    fn random_kernel(size: usize, seed: u64) -> Kernel {
        let mut rng = SplitMix64::new(seed);
        let taps: Vec<f64> = (0..size * size).map(|_| rng.next_f64()).collect();
        Kernel::normalized(size, taps).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let img = random_image(9, 7, 1);
        let k = Kernel::delta(3).unwrap();
        for b in [Boundary::Replicate, Boundary::Circular] {
            let out = convolve(&img, &k, b).unwrap();
            for (a, o) in img.data().iter().zip(out.data()) {
                assert!((a - o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let img = ImageBuf::constant(8, 8, 0.42).unwrap();
        let k = random_kernel(5, 2);
        let out = convolve(&img, &k, Boundary::Replicate).unwrap();
        for &v in out.data() {
            assert!((v - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_fft_matches_direct() {
        let img = random_image(8, 8, 3);
        let k = random_kernel(3, 4);
        let via_fft = convolve(&img, &k, Boundary::Circular).unwrap();
        let direct = convolve_circular_direct(&img, &k);
        for (a, b) in via_fft.data().iter().zip(direct.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_is_flipped_kernel() {
        let x = random_image(12, 10, 5);
        let y = random_image(12, 10, 6);
        let k = random_kernel(5, 7);
        let kx = convolve(&x, &k, Boundary::Circular).unwrap();
        let kty = convolve(&y, &k.flipped(), Boundary::Circular).unwrap();
        let lhs: f64 = kx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(kty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn kernel_must_fit() {
        let img = ImageBuf::constant(4, 4, 0.0).unwrap();
        let k = Kernel::delta(5).unwrap();
        assert!(convolve(&img, &k, Boundary::Replicate).is_err());
    }

    #[test]
    fn gradients_of_constant_are_zero() {
        let img = ImageBuf::constant(5, 5, 0.3).unwrap();
        let (gx, gy) = image_gradients(&img).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(gy.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_of_ramp() {
        let w = 6;
        let img = ImageBuf::from_fn(w, 4, |_, c| c as f64 / (w - 1) as f64);
        let (gx, gy) = image_gradients(&img).unwrap();
        for r in 0..4 {
            for c in 0..w {
                let expect = if c + 1 < w { 1.0 / (w - 1) as f64 } else { 0.0 };
                assert!((gx.at(r, c) - expect).abs() < 1e-12);
                assert_eq!(gy.at(r, c), 0.0);
            }
        }
    }

    #[test]
    fn gradient_rows_telescope() {
        let img = random_image(7, 5, 8);
        let (gx, _) = image_gradients(&img).unwrap();
        for r in 0..5 {
            let row_sum: f64 = (0..7).map(|c| gx.at(r, c)).sum();
            let expect = img.at(r, 6) - img.at(r, 0);
            assert!((row_sum - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_dims_and_constant() {
        let img = ImageBuf::constant(64, 64, 0.5).unwrap();
        let out = downsample(&img, 2.0).unwrap();
        assert_eq!((out.width(), out.height()), (32, 32));
        for &v in out.data() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_preserves_mean_of_smooth_image() {
        // Gaussian blob, wide enough to stay smooth at half resolution.
        let img = ImageBuf::from_fn(64, 64, |r, c| {
            let dy = r as f64 - 31.5;
            let dx = c as f64 - 31.5;
            0.2 + 0.6 * (-(dx * dx + dy * dy) / 400.0).exp()
        });
        let out = downsample(&img, 2.0).unwrap();
        assert!((out.mean() - img.mean()).abs() < 1e-3);
    }

    #[test]
    fn downsample_rejects_tiny_output() {
        let img = ImageBuf::constant(8, 8, 0.0).unwrap();
        assert!(downsample(&img, 4.0).is_err());
    }

    #[test]
    fn upsample_kernel_identity() {
        let k = random_kernel(5, 9);
        let same = upsample_kernel(&k, 5).unwrap();
        for (a, b) in k.taps().iter().zip(same.taps()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn upsample_delta_stays_central() {
        let k = Kernel::delta(3).unwrap();
        let up = upsample_kernel(&k, 5).unwrap();
        assert!((up.sum() - 1.0).abs() < 1e-12);
        let r = up.radius() as isize;
        let mut central = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                if dy.abs() <= 1 && dx.abs() <= 1 {
                    central += up.at(dy, dx);
                }
            }
        }
        assert!((central - 1.0).abs() < 1e-12);
        assert!(up.at(0, 0) > 0.25);
    }

    #[test]
    fn upsample_rejects_even_size() {
        let k = Kernel::delta(3).unwrap();
        assert!(upsample_kernel(&k, 6).is_err());
    }

    #[test]
    fn pad_then_crop_round_trips() {
        let img = random_image(5, 4, 10);
        let padded = replicate_pad(&img, 9, 8).unwrap();
        assert_eq!(padded.at(3, 8), img.at(3, 4));
        assert_eq!(padded.at(7, 2), img.at(3, 2));
        let back = crop(&padded, 5, 4).unwrap();
        assert_eq!(back, img);
    }
}
