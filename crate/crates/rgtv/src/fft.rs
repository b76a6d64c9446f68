//! 2-D transforms of real fields, used by the frequency-domain solvers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::image::ImageBuf;

/// Complex coefficients of a transformed real 2-D field, row-major,
/// same layout as the spatial domain it came from.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }
}

fn fft_2d(spec: &mut Spectrum, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (w, h) = (spec.width, spec.height);

    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in spec.data.chunks_exact_mut(w) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    // Columns via transpose, FFT rows, transpose back.
    let mut transposed = transpose(w, h, &spec.data);
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex64::default());
    for col in transposed.chunks_exact_mut(h) {
        col_fft.process_with_scratch(col, &mut scratch);
    }
    spec.data = transpose(h, w, &transposed);
}

fn transpose(width: usize, height: usize, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = data[r * width + c];
        }
    }
    out
}

/// Forward transform of a real field.
pub fn forward(img: &ImageBuf) -> Spectrum {
    let mut spec = Spectrum {
        width: img.width(),
        height: img.height(),
        data: img
            .data()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect(),
    };
    fft_2d(&mut spec, false);
    spec
}

/// Forward transform of a raw row-major real buffer.
pub fn forward_raw(width: usize, height: usize, data: &[f64]) -> Spectrum {
    let mut spec = Spectrum {
        width,
        height,
        data: data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    };
    fft_2d(&mut spec, false);
    spec
}

/// Inverse transform back to a real field, normalized by `1/(w*h)`.
/// The imaginary residue of a real-input round trip is dropped.
pub fn inverse(spec: &Spectrum) -> ImageBuf {
    let mut tmp = spec.clone();
    fft_2d(&mut tmp, true);
    let norm = 1.0 / (spec.width * spec.height) as f64;
    let data = tmp.data.iter().map(|z| z.re * norm).collect();
    ImageBuf::from_raw(spec.width, spec.height, data)
}

/// Smallest 5-smooth integer (2^a 3^b 5^c) >= n; these are the sizes the
/// transform handles fastest.
pub fn next_fast_len(n: usize) -> usize {
    debug_assert!(n > 0);
    let mut m = n;
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}
