//! Image quality metrics.

use crate::error::{Error, Result};
use crate::image::ImageBuf;

/// Peak signal-to-noise ratio in decibels on the [0, 1] intensity range:
/// `10 log10(1 / MSE)`. Identical images yield `f64::INFINITY`.
pub fn psnr(a: &ImageBuf, b: &ImageBuf) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::invalid(format!(
            "psnr dimension mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}
