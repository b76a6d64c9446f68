//! Blind deblurring orchestration: coarse-to-fine pyramid, alternating
//! skeleton/kernel estimation with lambda decay, and the final non-blind
//! restoration.

use crate::conv::{convolve, crop, downsample_to, replicate_pad, upsample_kernel, Boundary};
use crate::error::{Error, Result};
use crate::fft::next_fast_len;
use crate::graph::{build_weights, weight_histogram, EdgeWeightField, HistogramAxis};
use crate::image::{ImageBuf, Rect};
use crate::kernel::Kernel;
use crate::kernel_est::{solve_kernel, KernelSolveParams};
use crate::skeleton::{pd_inner_solve, solve_skeleton, PdState, SkeletonParams};

/// All scalars of the blind solve. Defaults follow the reference choices:
/// `sigma = 0.1`, `lambda0 = 0.01`, `mu = 0.05`, lambda divided by `1.1`
/// each outer iteration, per-level scale ratio `1.585`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub sigma: f64,
    pub lambda0: f64,
    pub mu: f64,
    pub lambda_decay: f64,
    pub kernel_size: usize,
    /// Per-level linear downsampling ratio of the pyramid.
    pub scale_factor: f64,
    /// Outer x/k alternations per pyramid level.
    pub max_outer_iters: usize,
    /// Stop a level when the kernel l1 change drops below this.
    pub convergence_tol: f64,
    pub reweight_iters: usize,
    pub pd_iters: usize,
    pub pd_tol: f64,
    /// Regularization weight of the final non-blind restoration.
    pub lambda_nb: f64,
    /// Recenter each kernel estimate on its center of mass. Blind
    /// estimation is translation-ambiguous; without this the kernel tends
    /// to drift off-center and the restoration comes out shifted.
    pub recenter_kernel: bool,
}

impl SolverParams {
    pub fn with_kernel_size(kernel_size: usize) -> Self {
        Self {
            sigma: 0.1,
            lambda0: 0.01,
            mu: 0.05,
            lambda_decay: 1.1,
            kernel_size,
            scale_factor: 1.585,
            max_outer_iters: 6,
            convergence_tol: 1e-3,
            reweight_iters: 3,
            pd_iters: 400,
            pd_tol: 1e-6,
            lambda_nb: 2e-3,
            recenter_kernel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::invalid("kernel_size must be odd"));
        }
        if self.lambda_decay <= 1.0 || self.lambda_decay.is_nan() {
            return Err(Error::invalid("lambda_decay must be > 1"));
        }
        if self.scale_factor <= 1.0 || self.scale_factor.is_nan() {
            return Err(Error::invalid("scale_factor must be > 1"));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("lambda0", self.lambda0),
            ("mu", self.mu),
            ("convergence_tol", self.convergence_tol),
            ("pd_tol", self.pd_tol),
            ("lambda_nb", self.lambda_nb),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.max_outer_iters < 1 || self.reweight_iters < 1 || self.pd_iters < 1 {
            return Err(Error::invalid("iteration budgets must be >= 1"));
        }
        Ok(())
    }

    fn skeleton_params(&self, lambda: f64) -> SkeletonParams {
        SkeletonParams {
            lambda,
            sigma: self.sigma,
            reweight_iters: self.reweight_iters,
            pd_iters: self.pd_iters,
            pd_tol: self.pd_tol,
        }
    }
}

/// Recognized `key = value` config keys, with their defaults from
/// [`SolverParams::with_kernel_size`] when absent.
const CONFIG_KEYS: [&str; 12] = [
    "sigma",
    "lambda0",
    "mu",
    "lambda_decay",
    "kernel_size",
    "scale_factor",
    "max_outer_iters",
    "convergence_tol",
    "reweight_iters",
    "pd_iters",
    "pd_tol",
    "lambda_nb",
];

/// Parse a plain-text config of `key = value` lines on top of `base`.
/// Blank lines and lines starting with `#` are skipped; unknown keys are
/// an error.
pub fn parse_config(text: &str, base: &SolverParams) -> Result<SolverParams> {
    let mut params = base.clone();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("config line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Format(format!(
                "config line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        let parse_f = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("config key '{key}': {e}")))
        };
        let parse_u = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("config key '{key}': {e}")))
        };
        match key {
            "sigma" => params.sigma = parse_f()?,
            "lambda0" => params.lambda0 = parse_f()?,
            "mu" => params.mu = parse_f()?,
            "lambda_decay" => params.lambda_decay = parse_f()?,
            "kernel_size" => params.kernel_size = parse_u()?,
            "scale_factor" => params.scale_factor = parse_f()?,
            "max_outer_iters" => params.max_outer_iters = parse_u()?,
            "convergence_tol" => params.convergence_tol = parse_f()?,
            "reweight_iters" => params.reweight_iters = parse_u()?,
            "pd_iters" => params.pd_iters = parse_u()?,
            "pd_tol" => params.pd_tol = parse_f()?,
            "lambda_nb" => params.lambda_nb = parse_f()?,
            _ => unreachable!(),
        }
    }
    params.validate()?;
    Ok(params)
}

/// Geometry of one pyramid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PyramidLevel {
    pub width: usize,
    pub height: usize,
    pub kernel_size: usize,
}

fn level_kernel_size(full: usize, scale: f64, level: u32) -> usize {
    let raw = (full as f64 / scale.powi(level as i32)).round() as usize;
    let raw = raw.max(3);
    if raw.is_multiple_of(2) {
        raw + 1
    } else {
        raw
    }
}

/// Plan the coarse-to-fine pyramid. Levels are returned coarsest first;
/// each level's kernel size is `round(h / scale^level)` forced up to the
/// nearest odd >= 3, and the level count is chosen so the coarsest kernel
/// is the smallest odd value >= 3.
pub fn build_pyramid(
    width: usize,
    height: usize,
    kernel_size: usize,
    scale_factor: f64,
) -> Result<Vec<PyramidLevel>> {
    if kernel_size == 0 || kernel_size.is_multiple_of(2) {
        return Err(Error::invalid("kernel_size must be odd"));
    }
    if scale_factor <= 1.0 || scale_factor.is_nan() {
        return Err(Error::invalid("scale_factor must be > 1"));
    }
    if width < kernel_size.max(3) || height < kernel_size.max(3) {
        return Err(Error::invalid(format!(
            "image {width}x{height} too small for a size-{kernel_size} kernel"
        )));
    }
    let mut levels = Vec::new();
    let mut level = 0u32;
    loop {
        let k = level_kernel_size(kernel_size, scale_factor, level);
        let w = (width as f64 / scale_factor.powi(level as i32)).round() as usize;
        let h = (height as f64 / scale_factor.powi(level as i32)).round() as usize;
        if w < k || h < k || w < 3 || h < 3 {
            // Image ran out before the kernel pyramid did; stop one short.
            break;
        }
        levels.push(PyramidLevel {
            width: w,
            height: h,
            kernel_size: k,
        });
        if k == 3 {
            break;
        }
        level += 1;
    }
    levels.reverse();
    Ok(levels)
}

/// Kernel initialization per level: centered delta at the coarsest level,
/// otherwise the previous level's estimate resampled up.
pub fn kernel_init(previous: Option<&Kernel>, size: usize) -> Result<Kernel> {
    match previous {
        None => Kernel::delta(size),
        Some(k) => upsample_kernel(k, size),
    }
}

/// One outer x/k alternation record.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub outer: usize,
    /// Lambda in effect during this iteration (before the decay step).
    pub lambda: f64,
    /// Final skeleton objective of the iteration.
    pub objective: f64,
    /// l1 change of the kernel estimate.
    pub kernel_change: f64,
}

/// Diagnostics of one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub width: usize,
    pub height: usize,
    pub kernel_size: usize,
    pub records: Vec<OuterRecord>,
    /// Mid-band fraction of the level skeleton's edge-weight histogram.
    pub mid_band_fraction: f64,
    pub warnings: Vec<String>,
}

/// Output of the blind solve.
#[derive(Debug, Clone)]
pub struct DeblurResult {
    pub kernel: Kernel,
    /// Piecewise-smooth proxy at full resolution.
    pub skeleton: ImageBuf,
    /// Non-blind restoration, clamped to [0, 1].
    pub restored: ImageBuf,
    pub levels: Vec<LevelDiagnostics>,
}

impl DeblurResult {
    /// Pipeline trace CSV: `level,outer,lambda,objective,kernel_change`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("level,outer,lambda,objective,kernel_change\n");
        for (li, level) in self.levels.iter().enumerate() {
            for r in &level.records {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    li, r.outer, r.lambda, r.objective, r.kernel_change
                ));
            }
        }
        out
    }
}

/// Mid band used for the diagnostic histograms.
const MID_BAND: (f64, f64) = (0.2, 0.8);
const HIST_BINS: usize = 20;

/// Prepare a replicate-padded solve domain that is consistent with the
/// circular model: inside a border band of one kernel size the padded image
/// is cross-faded toward its own circular blur, which kills deconvolution
/// ringing at the content borders and the wrap seam.
fn padded_solve_domain(
    b: &ImageBuf,
    kernel: &Kernel,
    pw: usize,
    ph: usize,
) -> Result<ImageBuf> {
    let b_pad = replicate_pad(b, pw, ph)?;
    if kernel.size() == 1 {
        return Ok(b_pad);
    }
    let blurred = convolve(&b_pad, kernel, Boundary::Circular)?;
    let m = kernel.size() as f64;
    let ramp = |i: usize, content: usize| -> f64 {
        let x = i as f64;
        let from_lo = x / m;
        let from_hi = (content as f64 - 1.0 - x) / m;
        from_lo.min(from_hi).clamp(0.0, 1.0)
    };
    let wx: Vec<f64> = (0..pw)
        .map(|c| {
            let t = ramp(c, b.width());
            0.5 - 0.5 * (std::f64::consts::PI * t).cos()
        })
        .collect();
    let wy: Vec<f64> = (0..ph)
        .map(|r| {
            let t = ramp(r, b.height());
            0.5 - 0.5 * (std::f64::consts::PI * t).cos()
        })
        .collect();
    Ok(ImageBuf::from_fn(pw, ph, |r, c| {
        let w = wx[c] * wy[r];
        w * b_pad.at(r, c) + (1.0 - w) * blurred.at(r, c)
    }))
}

/// Iteration budget of the final non-blind solve; it runs once, so it gets
/// a larger budget than the per-level skeleton solves.
const NB_ITERS: usize = 400;
const NB_TOL: f64 = 1e-6;

/// Blind deblurring: estimate the kernel over the pyramid, then restore.
///
/// At each level the skeleton and kernel estimates alternate until the
/// kernel l1 change drops below `convergence_tol` or `max_outer_iters` is
/// reached, with lambda divided by `lambda_decay` after every alternation
/// (lambda resets to `lambda0` at each level). A degenerate kernel solve
/// keeps the previous estimate and records a warning.
pub fn deblur_blind(b: &ImageBuf, params: &SolverParams) -> Result<DeblurResult> {
    params.validate()?;
    let h = params.kernel_size;
    if b.width() < 3 * h || b.height() < 3 * h {
        return Err(Error::invalid(format!(
            "image {}x{} is below the 3h x 3h minimum for kernel size {h}",
            b.width(),
            b.height()
        )));
    }

    let plan = build_pyramid(b.width(), b.height(), h, params.scale_factor)?;
    let mut kernel: Option<Kernel> = None;
    let mut diagnostics = Vec::with_capacity(plan.len());
    let mut skeleton = b.clone();

    for level in &plan {
        let b_level = if level.width == b.width() && level.height == b.height() {
            b.clone()
        } else {
            downsample_to(b, level.width, level.height)?
        };
        let mut k = kernel_init(kernel.as_ref(), level.kernel_size)?;
        if params.recenter_kernel {
            // Level transitions amplify any centroid offset by the size
            // ratio, and the skeleton warm start resets here anyway, so
            // this is the cheap place to pin the translation gauge.
            k = crate::kernel_est::recenter(&k).0;
        }

        // Solve on a replicate-padded domain so the circular model of the
        // inner solvers never wraps real content. No edge taper here: the
        // kernel solve needs the skeleton borders to stay data-faithful.
        let pw = next_fast_len(level.width + level.kernel_size);
        let ph = next_fast_len(level.height + level.kernel_size);
        let b_pad = replicate_pad(&b_level, pw, ph)?;
        let mut x_init = b_pad.clone();
        let mut x_level = b_level.clone();

        let mut lambda = params.lambda0;
        let mut records = Vec::new();
        let mut warnings = Vec::new();

        for outer in 0..params.max_outer_iters {
            let (x_pad, trace) =
                solve_skeleton(&b_pad, &k, &params.skeleton_params(lambda), &x_init)?;

            let solve = solve_kernel(
                &crop(&x_pad, level.width, level.height)?,
                &b_level,
                &KernelSolveParams {
                    mu: params.mu,
                    kernel_size: level.kernel_size,
                },
            );
            let k_new = match solve {
                Ok(k_new) => k_new,
                Err(Error::Degenerate(msg)) => {
                    warnings.push(format!("outer {outer}: degenerate kernel solve: {msg}"));
                    k.clone()
                }
                Err(e) => return Err(e),
            };
            x_level = crop(&x_pad, level.width, level.height)?;

            let kernel_change = k_new.l1_distance(&k);
            records.push(OuterRecord {
                outer,
                lambda,
                objective: *trace.last().expect("at least one reweight round"),
                kernel_change,
            });
            lambda /= params.lambda_decay;
            k = k_new;
            x_init = x_pad;
            if kernel_change < params.convergence_tol {
                break;
            }
        }

        let mid_band_fraction = weight_histogram(
            &x_level,
            Rect::full(&x_level),
            params.sigma,
            HIST_BINS,
            MID_BAND,
            HistogramAxis::Weight,
        )?
        .mid_band_fraction;

        diagnostics.push(LevelDiagnostics {
            width: level.width,
            height: level.height,
            kernel_size: level.kernel_size,
            records,
            mid_band_fraction,
            warnings,
        });
        kernel = Some(k);
        skeleton = x_level;
    }

    let mut kernel = kernel.expect("pyramid has at least one level");
    if params.recenter_kernel {
        kernel = crate::kernel_est::recenter_subpixel(&kernel);
    }
    let restored = nonblind_restore(b, &kernel, Some(&skeleton), params.sigma, params.lambda_nb)?;

    Ok(DeblurResult {
        kernel,
        skeleton,
        restored,
        levels: diagnostics,
    })
}

/// Non-blind restoration with a known kernel: fixed-weight graph-TV
/// deconvolution. Weights come from `guide` (the skeleton image) when
/// given, otherwise they are all ones (plain anisotropic TV). The output is
/// clamped to [0, 1].
pub fn nonblind_restore(
    b: &ImageBuf,
    kernel: &Kernel,
    guide: Option<&ImageBuf>,
    sigma: f64,
    lambda_nb: f64,
) -> Result<ImageBuf> {
    if let Some(g) = guide {
        if !g.same_dims(b) {
            return Err(Error::invalid("guide image must match the input size"));
        }
    }
    let pw = next_fast_len(b.width() + kernel.size());
    let ph = next_fast_len(b.height() + kernel.size());
    let b_pad = padded_solve_domain(b, kernel, pw, ph)?;
    let weights = match guide {
        Some(g) => build_weights(&replicate_pad(g, pw, ph)?, sigma)?,
        None => EdgeWeightField::ones(pw, ph),
    };
    let mut state = PdState::new(&b_pad, &weights)?;
    let x = pd_inner_solve(&b_pad, kernel, &weights, lambda_nb, &mut state, NB_ITERS, NB_TOL)?;
    Ok(crop(&x, b.width(), b.height())?.clamped())
}
