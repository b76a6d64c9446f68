//! Four-neighbor grid graph: Gaussian edge weights, combinatorial Laplacian,
//! the graph-TV regularizer family and edge-weight histogram statistics.
//!
//! Pixels are nodes; every horizontal and vertical neighbor pair is one
//! undirected edge. Weights are stored once per edge in two planes rather
//! than as a sparse matrix, so all operators stream over the planes.

use crate::error::{Error, Result};
use crate::image::{ImageBuf, Rect};

/// Gaussian similarity of one neighbor pair: `exp(-(xi - xj)^2 / sigma^2)`.
pub fn edge_weight(xi: f64, xj: f64, sigma: f64) -> Result<f64> {
    if !xi.is_finite() || !xj.is_finite() {
        return Err(Error::invalid("edge_weight: non-finite intensity"));
    }
    check_sigma(sigma)?;
    let d = xi - xj;
    Ok((-(d * d) / (sigma * sigma)).exp())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::invalid("sigma must be positive and finite"));
    }
    Ok(())
}

/// Per-undirected-edge weights of the 4-neighbor grid graph.
///
/// `h_weights[r * (w-1) + c]` is the weight of the edge between `(r, c)` and
/// `(r, c+1)`; `v_weights[r * w + c]` between `(r, c)` and `(r+1, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightField {
    width: usize,
    height: usize,
    h_weights: Vec<f64>,
    v_weights: Vec<f64>,
}

impl EdgeWeightField {
    /// All-ones weights for a `width x height` grid.
    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            h_weights: vec![1.0; (width - 1) * height],
            v_weights: vec![1.0; width * (height - 1)],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn h_weights(&self) -> &[f64] {
        &self.h_weights
    }

    pub fn v_weights(&self) -> &[f64] {
        &self.v_weights
    }

    pub fn h_weights_mut(&mut self) -> &mut [f64] {
        &mut self.h_weights
    }

    pub fn v_weights_mut(&mut self) -> &mut [f64] {
        &mut self.v_weights
    }

    #[inline]
    pub fn h_at(&self, row: usize, col: usize) -> f64 {
        self.h_weights[row * (self.width - 1) + col]
    }

    #[inline]
    pub fn v_at(&self, row: usize, col: usize) -> f64 {
        self.v_weights[row * self.width + col]
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.h_weights.len() + self.v_weights.len()
    }

    pub fn max_weight(&self) -> f64 {
        self.h_weights
            .iter()
            .chain(self.v_weights.iter())
            .fold(0.0f64, |m, &w| m.max(w))
    }

    pub fn matches(&self, img: &ImageBuf) -> bool {
        self.width == img.width() && self.height == img.height()
    }

    fn check_match(&self, img: &ImageBuf) -> Result<()> {
        if !self.matches(img) {
            return Err(Error::invalid(format!(
                "weight field {}x{} does not match image {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }
}

/// Gaussian weights of every 4-neighbor pair of `img`.
///
/// A 1x1 image yields an empty field (no edges).
pub fn build_weights(img: &ImageBuf, sigma: f64) -> Result<EdgeWeightField> {
    check_sigma(sigma)?;
    let (w, h) = (img.width(), img.height());
    let inv_s2 = 1.0 / (sigma * sigma);
    let mut h_weights = Vec::with_capacity((w - 1) * h);
    let mut v_weights = Vec::with_capacity(w * (h - 1));
    for r in 0..h {
        for c in 0..w - 1 {
            let d = img.at(r, c) - img.at(r, c + 1);
            h_weights.push((-(d * d) * inv_s2).exp());
        }
    }
    for r in 0..h - 1 {
        for c in 0..w {
            let d = img.at(r, c) - img.at(r + 1, c);
            v_weights.push((-(d * d) * inv_s2).exp());
        }
    }
    Ok(EdgeWeightField {
        width: w,
        height: h,
        h_weights,
        v_weights,
    })
}

/// Apply the combinatorial graph Laplacian `L = diag(W 1) - W` to `img`
/// without materializing `L`: `y_i = sum_j w_ij (x_i - x_j)`.
pub fn laplacian_apply(weights: &EdgeWeightField, img: &ImageBuf) -> Result<ImageBuf> {
    weights.check_match(img)?;
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w - 1 {
            let we = weights.h_at(r, c);
            let diff = img.at(r, c) - img.at(r, c + 1);
            out[r * w + c] += we * diff;
            out[r * w + c + 1] -= we * diff;
        }
    }
    for r in 0..h - 1 {
        for c in 0..w {
            let we = weights.v_at(r, c);
            let diff = img.at(r, c) - img.at(r + 1, c);
            out[r * w + c] += we * diff;
            out[(r + 1) * w + c] -= we * diff;
        }
    }
    Ok(ImageBuf::from_raw(w, h, out))
}

/// Graph total variation with fixed weights: `sum_edges w_ij |x_j - x_i|`,
/// one term per undirected edge.
pub fn gtv_value(weights: &EdgeWeightField, img: &ImageBuf) -> Result<f64> {
    weights.check_match(img)?;
    let (w, h) = (img.width(), img.height());
    let mut acc = 0.0;
    for r in 0..h {
        for c in 0..w - 1 {
            acc += weights.h_at(r, c) * (img.at(r, c + 1) - img.at(r, c)).abs();
        }
    }
    for r in 0..h - 1 {
        for c in 0..w {
            acc += weights.v_at(r, c) * (img.at(r + 1, c) - img.at(r, c)).abs();
        }
    }
    Ok(acc)
}

/// Reweighted graph total variation: graph TV whose weights are the Gaussian
/// similarity of the signal itself, `sum_edges exp(-d^2/sigma^2) * d`.
///
/// Equals `gtv_value(build_weights(img, sigma), img)` exactly (same
/// summation order).
pub fn rgtv_value(img: &ImageBuf, sigma: f64) -> Result<f64> {
    let weights = build_weights(img, sigma)?;
    gtv_value(&weights, img)
}

/// Which per-pair penalty curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Fixed-weight graph TV: `w * d`.
    Gtv,
    /// Reweighted graph TV: `exp(-d^2/sigma^2) * d`.
    Rgtv,
    /// Fixed-weight graph Laplacian: `w * d^2`.
    GraphLaplacian,
    /// Reweighted graph Laplacian: `exp(-d^2/sigma^2) * d^2`.
    ReweightedGraphLaplacian,
}

/// One regularizer restricted to a single pixel pair, as a function of the
/// absolute intensity difference `d`.
///
/// The reweighted curves rise to a single maximum (at `sigma / sqrt(2)` for
/// Rgtv, at `sigma` for ReweightedGraphLaplacian) and decay toward zero,
/// which is what lets them push differences apart instead of only shrinking
/// them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPenaltyCurve {
    pub kind: CurveKind,
    pub sigma: f64,
    pub fixed_weight: f64,
}

impl PairPenaltyCurve {
    pub fn new(kind: CurveKind, sigma: f64, fixed_weight: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(0.0..=1.0).contains(&fixed_weight) {
            return Err(Error::invalid("fixed_weight must lie in [0, 1]"));
        }
        Ok(Self {
            kind,
            sigma,
            fixed_weight,
        })
    }

    fn check_d(d: f64) -> Result<()> {
        if d < 0.0 || !d.is_finite() {
            return Err(Error::invalid(
                "pair penalty is defined for d = |x_i - x_j| >= 0",
            ));
        }
        Ok(())
    }

    /// Closed-form value of the curve at `d`.
    pub fn penalty(&self, d: f64) -> Result<f64> {
        Self::check_d(d)?;
        let s2 = self.sigma * self.sigma;
        Ok(match self.kind {
            CurveKind::Gtv => self.fixed_weight * d,
            CurveKind::Rgtv => (-d * d / s2).exp() * d,
            CurveKind::GraphLaplacian => self.fixed_weight * d * d,
            CurveKind::ReweightedGraphLaplacian => (-d * d / s2).exp() * d * d,
        })
    }

    /// Analytic first derivative of the curve at `d`.
    pub fn derivative(&self, d: f64) -> Result<f64> {
        Self::check_d(d)?;
        let s2 = self.sigma * self.sigma;
        Ok(match self.kind {
            CurveKind::Gtv => self.fixed_weight,
            CurveKind::Rgtv => (-d * d / s2).exp() * (1.0 - 2.0 * d * d / s2),
            CurveKind::GraphLaplacian => 2.0 * self.fixed_weight * d,
            CurveKind::ReweightedGraphLaplacian => {
                (-d * d / s2).exp() * 2.0 * d * (1.0 - d * d / s2)
            }
        })
    }
}

/// Which quantity the histogram bins run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistogramAxis {
    /// Gaussian edge weight `w` in [0, 1] (the default).
    #[default]
    Weight,
    /// Absolute intensity difference `d = |x_i - x_j|` in [0, 1].
    Difference,
}

/// Histogram of 4-neighbor edge weights over a region, with the fraction of
/// weights falling in a configurable mid band.
///
/// Sharp piecewise-smooth patches put nearly all mass at the two ends of the
/// weight axis; blur fills the middle. `mid_band_fraction` measures that.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightHistogram {
    pub axis: HistogramAxis,
    /// `bins + 1` monotone edges spanning [0, 1].
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Fraction of edge weights `w` inside the closed mid band.
    pub mid_band_fraction: f64,
}

impl WeightHistogram {
    pub fn total_edges(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV rows `bin_lo,bin_hi,count` plus a trailing
    /// `mid_band_fraction,<value>` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, count) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                count
            ));
        }
        out.push_str(&format!("mid_band_fraction,{}\n", self.mid_band_fraction));
        out
    }
}

/// Histogram the weights of all 4-neighbor edges lying fully inside `region`.
///
/// `mid_band` is the closed weight interval `[w_lo, w_hi]` used for
/// `mid_band_fraction`; the band always refers to weights regardless of the
/// binning axis.
pub fn weight_histogram(
    img: &ImageBuf,
    region: Rect,
    sigma: f64,
    bins: usize,
    mid_band: (f64, f64),
    axis: HistogramAxis,
) -> Result<WeightHistogram> {
    region.validate_inside(img)?;
    check_sigma(sigma)?;
    if bins < 2 {
        return Err(Error::invalid("at least 2 histogram bins required"));
    }
    let (lo, hi) = mid_band;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::invalid("mid band must satisfy 0 <= lo <= hi <= 1"));
    }

    let inv_s2 = 1.0 / (sigma * sigma);
    let mut counts = vec![0u64; bins];
    let mut in_band = 0u64;
    let mut total = 0u64;

    let mut tally = |xi: f64, xj: f64| {
        let d = (xi - xj).abs();
        let w = (-d * d * inv_s2).exp();
        let v = match axis {
            HistogramAxis::Weight => w,
            HistogramAxis::Difference => d.min(1.0),
        };
        let idx = ((v * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
        if w >= lo && w <= hi {
            in_band += 1;
        }
        total += 1;
    };

    for r in region.y..region.y + region.height {
        for c in region.x..region.x + region.width - 1 {
            tally(img.at(r, c), img.at(r, c + 1));
        }
    }
    for r in region.y..region.y + region.height - 1 {
        for c in region.x..region.x + region.width {
            tally(img.at(r, c), img.at(r + 1, c));
        }
    }

    let bin_edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    Ok(WeightHistogram {
        axis,
        bin_edges,
        counts,
        mid_band_fraction: if total == 0 {
            0.0
        } else {
            in_band as f64 / total as f64
        },
    })
}
