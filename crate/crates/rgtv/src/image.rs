use crate::error::{Error, Result};

/// Single-channel raster signal on a pixel grid, stored row-major.
///
/// Intensities are nominally in `[0, 1]`. Solver iterates may leave that
/// range transiently; anything persisted to disk is clamped first.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuf {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageBuf {
    /// Wrap a row-major buffer. Fails on length mismatch or non-finite values.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Build from a function of (row, col).
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::from_raw(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_dims(&self, other: &ImageBuf) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Clamp every pixel into `[0, 1]`.
    pub fn clamped(&self) -> ImageBuf {
        let data = self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self::from_raw(self.width, self.height, data)
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Euclidean norm of the pixel vector.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Axis-aligned pixel rectangle, `x` is the column of the left edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    /// Rectangle covering `img` entirely.
    pub fn full(img: &ImageBuf) -> Self {
        Self::new(0, 0, img.width(), img.height())
    }

    pub fn validate_inside(&self, img: &ImageBuf) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("region is empty"));
        }
        if self.x + self.width > img.width() || self.y + self.height > img.height() {
            return Err(Error::invalid(format!(
                "region {}x{}+{}+{} exceeds image {}x{}",
                self.width,
                self.height,
                self.x,
                self.y,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch() {
        assert!(ImageBuf::new(3, 2, vec![0.0; 5]).is_err());
        assert!(ImageBuf::new(3, 2, vec![0.0; 6]).is_ok());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ImageBuf::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(ImageBuf::new(2, 1, vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let img = ImageBuf::new(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(img.at(0, 2), 2.0);
        assert_eq!(img.at(1, 0), 3.0);
    }

    #[test]
    fn clamp_bounds() {
        let img = ImageBuf::new(2, 1, vec![-0.5, 1.5]).unwrap();
        let c = img.clamped();
        assert_eq!(c.data(), &[0.0, 1.0]);
    }

    #[test]
    fn region_validation() {
        let img = ImageBuf::constant(4, 4, 0.0).unwrap();
        assert!(Rect::new(0, 0, 4, 4).validate_inside(&img).is_ok());
        assert!(Rect::new(1, 1, 4, 4).validate_inside(&img).is_err());
        assert!(Rect::new(0, 0, 0, 4).validate_inside(&img).is_err());
    }
}
