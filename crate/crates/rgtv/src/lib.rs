//! Blind image deblurring with a reweighted graph total variation prior.
//!
//! An image is modeled as a signal on its 4-neighbor grid graph with
//! Gaussian similarity edge weights. Sharp piecewise-smooth images have a
//! bi-modal edge-weight distribution; blur fills the middle of that
//! distribution. The reweighted graph TV regularizer promotes the bi-modal
//! shape, which makes it possible to recover a *skeleton image* (a proxy
//! retaining the strong edges) and the blur kernel jointly from a single
//! blurry photo:
//!
//! 1. solve for the skeleton with the current kernel (graph-TV-regularized
//!    deconvolution, primal-dual inner solver with weight reweighting),
//! 2. solve for the kernel in the gradient domain (closed-form
//!    frequency-domain least squares plus projection),
//! 3. alternate with decaying regularization over a coarse-to-fine pyramid,
//! 4. restore the image with the estimated kernel (fixed-weight graph-TV
//!    deconvolution).
//!
//! The crate is organized around that pipeline: [`graph`] holds the grid
//! graph and the regularizer family, [`conv`] and [`fft`] the numerical
//! substrate, [`skeleton`] and [`kernel_est`] the two subproblem solvers,
//! [`pipeline`] the orchestration, and [`synth`]/[`metrics`]/[`io`] the
//! harness around them.

pub mod conv;
pub mod error;
pub mod fft;
pub mod graph;
pub mod image;
pub mod io;
pub mod kernel;
pub mod kernel_est;
pub mod metrics;
pub mod pipeline;
pub mod skeleton;
pub mod synth;

pub use crate::error::{Error, Result};
pub use crate::image::{ImageBuf, Rect};
pub use crate::kernel::Kernel;
