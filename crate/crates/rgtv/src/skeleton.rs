//! The x-subproblem: graph-TV-regularized deconvolution that produces the
//! piecewise-smooth skeleton image.
//!
//! The reweighted problem is handled by alternation: solve the convex
//! fixed-weight subproblem, refresh the weights from the solution, repeat.
//! The convex subproblem `min_x 1/2 ||x (*) k - b||^2 + lambda sum w_e |x_j - x_i|`
//! is solved with a first-order primal-dual scheme: the TV term is dualized
//! edge-wise and the quadratic data term enters through its proximal map,
//! which is a single diagonal frequency-domain solve per iteration under the
//! circular boundary model.

use rustfft::num_complex::Complex64;

use crate::conv::{convolve, kernel_spectrum, Boundary};
use crate::error::{Error, Result};
use crate::fft;
use crate::graph::{build_weights, gtv_value, EdgeWeightField};
use crate::image::ImageBuf;
use crate::kernel::Kernel;

/// Parameters of one skeleton solve (fixed blur kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonParams {
    /// Regularization weight on the graph-TV term.
    pub lambda: f64,
    /// Smoothing parameter of the Gaussian edge weights.
    pub sigma: f64,
    /// Outer weight-refresh rounds.
    pub reweight_iters: usize,
    /// Primal-dual iteration budget per round.
    pub pd_iters: usize,
    /// Relative primal-residual stopping tolerance.
    pub pd_tol: f64,
}

impl SkeletonParams {
    pub fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0 || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be positive"));
        }
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma must be positive"));
        }
        if self.reweight_iters < 1 || self.pd_iters < 1 {
            return Err(Error::invalid("iteration budgets must be >= 1"));
        }
        if self.pd_tol <= 0.0 || self.pd_tol.is_nan() {
            return Err(Error::invalid("pd_tol must be positive"));
        }
        Ok(())
    }
}

/// Iterates of the primal-dual scheme: primal image, one dual value per
/// graph edge, the extrapolated primal, and the step sizes.
///
/// Step sizes satisfy `tau * sigma_dual * L^2 <= 1` where `L^2` is the
/// degree-based bound `8 max(w)^2` on the squared norm of the weighted
/// difference operator.
#[derive(Debug, Clone)]
pub struct PdState {
    primal: ImageBuf,
    primal_bar: ImageBuf,
    dual_h: Vec<f64>,
    dual_v: Vec<f64>,
    tau: f64,
    sigma_dual: f64,
}

/// Floor on the operator-norm estimate; with all-zero weights the dual is
/// pinned at zero and only the data prox acts, so the huge resulting step
/// just turns the iteration into repeated least-squares proximal solves.
const L_OP_FLOOR: f64 = 1e-8;

impl PdState {
    /// Zero duals, primal at `init`, steps `0.99 / L_op` from the weights.
    pub fn new(init: &ImageBuf, weights: &EdgeWeightField) -> Result<Self> {
        if !weights.matches(init) {
            return Err(Error::invalid("PdState: weights do not match image"));
        }
        let l_op = (8.0f64.sqrt() * weights.max_weight()).max(L_OP_FLOOR);
        let step = 0.99 / l_op;
        Ok(Self {
            primal: init.clone(),
            primal_bar: init.clone(),
            dual_h: vec![0.0; weights.h_weights().len()],
            dual_v: vec![0.0; weights.v_weights().len()],
            tau: step,
            sigma_dual: step,
        })
    }

    pub fn primal(&self) -> &ImageBuf {
        &self.primal
    }

    pub fn dual_h(&self) -> &[f64] {
        &self.dual_h
    }

    pub fn dual_v(&self) -> &[f64] {
        &self.dual_v
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma_dual(&self) -> f64 {
        self.sigma_dual
    }

    fn check_step_invariant(&self, weights: &EdgeWeightField) -> Result<()> {
        let l2 = 8.0 * weights.max_weight().powi(2);
        if self.tau * self.sigma_dual * l2 > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "step sizes violate tau*sigma*L^2 <= 1 (got {})",
                self.tau * self.sigma_dual * l2
            )));
        }
        Ok(())
    }

    /// Clamp the duals into the feasible boxes of a refreshed weight field.
    fn reproject_duals(&mut self, weights: &EdgeWeightField, lambda: f64) {
        for (p, &w) in self.dual_h.iter_mut().zip(weights.h_weights()) {
            *p = p.clamp(-lambda * w, lambda * w);
        }
        for (p, &w) in self.dual_v.iter_mut().zip(weights.v_weights()) {
            *p = p.clamp(-lambda * w, lambda * w);
        }
    }
}

/// One per-iteration trace record of the inner solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PdTraceRow {
    pub outer: usize,
    pub inner: usize,
    pub objective: f64,
    pub primal_residual: f64,
}

/// CSV form of an inner-solver trace: `outer,inner,objective,primal_residual`.
pub fn pd_trace_to_csv(rows: &[PdTraceRow]) -> String {
    let mut out = String::from("outer,inner,objective,primal_residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.outer, r.inner, r.objective, r.primal_residual
        ));
    }
    out
}

/// Value of the convex fixed-weight problem at `x`, under the circular
/// convolution model the solver minimizes.
pub fn fixed_weight_objective(
    b: &ImageBuf,
    k: &Kernel,
    weights: &EdgeWeightField,
    lambda: f64,
    x: &ImageBuf,
) -> Result<f64> {
    let kx = convolve(x, k, Boundary::Circular)?;
    let fidelity: f64 = kx
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        * 0.5;
    Ok(fidelity + lambda * gtv_value(weights, x)?)
}

/// Approximately minimize the fixed-weight problem
/// `1/2 ||x (*) k - b||^2 + lambda sum w_e |x_j - x_i|` starting from
/// `state`, which is updated in place (warm starts across calls).
///
/// After every dual projection each dual coordinate satisfies
/// `|y_e| <= lambda * w_e`.
pub fn pd_inner_solve(
    b: &ImageBuf,
    k: &Kernel,
    weights: &EdgeWeightField,
    lambda: f64,
    state: &mut PdState,
    max_iters: usize,
    tol: f64,
) -> Result<ImageBuf> {
    pd_inner_solve_traced(b, k, weights, lambda, state, max_iters, tol, 0, None)
}

/// `pd_inner_solve` that can record per-iteration objective and residual.
#[allow(clippy::too_many_arguments)]
pub fn pd_inner_solve_traced(
    b: &ImageBuf,
    k: &Kernel,
    weights: &EdgeWeightField,
    lambda: f64,
    state: &mut PdState,
    max_iters: usize,
    tol: f64,
    outer_index: usize,
    mut trace: Option<&mut Vec<PdTraceRow>>,
) -> Result<ImageBuf> {
    if !weights.matches(b) || !state.primal.same_dims(b) {
        return Err(Error::invalid("pd_inner_solve: dimension mismatch"));
    }
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::invalid("lambda must be positive"));
    }
    state.check_step_invariant(weights)?;

    let (w, h) = (b.width(), b.height());
    let k_spec = kernel_spectrum(k, w, h);
    let b_spec = fft::forward(b);
    let tau = state.tau;
    let sigma_d = state.sigma_dual;
    // Constant part of the prox solve: tau * conj(K) * B and its denominator.
    let numer_const: Vec<Complex64> = k_spec
        .data
        .iter()
        .zip(&b_spec.data)
        .map(|(kc, bc)| kc.conj() * bc * tau)
        .collect();
    let denom: Vec<f64> = k_spec.data.iter().map(|kc| tau * kc.norm_sqr() + 1.0).collect();

    let mut div = vec![0.0; w * h];
    for it in 0..max_iters {
        // Dual ascent on the extrapolated primal, then box projection.
        let xb = &state.primal_bar;
        for r in 0..h {
            for c in 0..w - 1 {
                let e = r * (w - 1) + c;
                let we = weights.h_at(r, c);
                let g = xb.at(r, c + 1) - xb.at(r, c);
                let bound = lambda * we;
                state.dual_h[e] =
                    (state.dual_h[e] + sigma_d * we * we * g).clamp(-bound, bound);
            }
        }
        for r in 0..h - 1 {
            for c in 0..w {
                let e = r * w + c;
                let we = weights.v_at(r, c);
                let g = xb.at(r + 1, c) - xb.at(r, c);
                let bound = lambda * we;
                state.dual_v[e] =
                    (state.dual_v[e] + sigma_d * we * we * g).clamp(-bound, bound);
            }
        }

        // Adjoint of the difference operator applied to the duals.
        div.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..h {
            for c in 0..w - 1 {
                let p = state.dual_h[r * (w - 1) + c];
                div[r * w + c + 1] += p;
                div[r * w + c] -= p;
            }
        }
        for r in 0..h - 1 {
            for c in 0..w {
                let p = state.dual_v[r * w + c];
                div[(r + 1) * w + c] += p;
                div[r * w + c] -= p;
            }
        }

        // Proximal step on the data term: (tau K*K + I) x = tau K* b + v.
        let v: Vec<f64> = state
            .primal
            .data()
            .iter()
            .zip(&div)
            .map(|(x, d)| x - tau * d)
            .collect();
        let mut v_spec = fft::forward_raw(w, h, &v);
        for i in 0..v_spec.data.len() {
            v_spec.data[i] = (numer_const[i] + v_spec.data[i]) / denom[i];
        }
        let x_new = fft::inverse(&v_spec);

        let delta: f64 = x_new
            .data()
            .iter()
            .zip(state.primal.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let residual = delta / state.primal.norm().max(1e-12);

        for i in 0..w * h {
            state.primal_bar.data_mut()[i] =
                2.0 * x_new.data()[i] - state.primal.data()[i];
        }
        state.primal = x_new;

        if let Some(rows) = trace.as_deref_mut() {
            rows.push(PdTraceRow {
                outer: outer_index,
                inner: it,
                objective: fixed_weight_objective(b, k, weights, lambda, &state.primal)?,
                primal_residual: residual,
            });
        }
        if residual < tol {
            break;
        }
    }
    Ok(state.primal.clone())
}

/// Rebuild the Gaussian edge weights from the current skeleton iterate.
/// Delegates to [`build_weights`]; the initial weight field is all ones.
pub fn refresh_weights(x: &ImageBuf, sigma: f64) -> Result<EdgeWeightField> {
    build_weights(x, sigma)
}

/// Solve the skeleton subproblem for a fixed kernel: alternate the convex
/// fixed-weight solve with weight refreshes, starting from all-ones weights.
///
/// Returns the final iterate and the objective value (under the weights
/// current at that round) after each outer round.
pub fn solve_skeleton(
    b: &ImageBuf,
    k: &Kernel,
    params: &SkeletonParams,
    init: &ImageBuf,
) -> Result<(ImageBuf, Vec<f64>)> {
    solve_skeleton_traced(b, k, params, init, None)
}

/// [`solve_skeleton`] with an optional per-inner-iteration trace sink.
pub fn solve_skeleton_traced(
    b: &ImageBuf,
    k: &Kernel,
    params: &SkeletonParams,
    init: &ImageBuf,
    mut trace: Option<&mut Vec<PdTraceRow>>,
) -> Result<(ImageBuf, Vec<f64>)> {
    params.validate()?;
    if (k.sum() - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("solve_skeleton requires a normalized kernel"));
    }
    if !init.same_dims(b) {
        return Err(Error::invalid("init must match the blurry image size"));
    }

    let mut weights = EdgeWeightField::ones(b.width(), b.height());
    let mut state = PdState::new(init, &weights)?;
    let initial_objective = fixed_weight_objective(b, k, &weights, params.lambda, init)?;
    let mut objectives = Vec::with_capacity(params.reweight_iters);

    for outer in 0..params.reweight_iters {
        let x = pd_inner_solve_traced(
            b,
            k,
            &weights,
            params.lambda,
            &mut state,
            params.pd_iters,
            params.pd_tol,
            outer,
            trace.as_deref_mut(),
        )?;
        let objective = fixed_weight_objective(b, k, &weights, params.lambda, &x)?;
        objectives.push(objective);
        if objective > 10.0 * initial_objective + 1e-9 {
            return Err(Error::Solver(format!(
                "skeleton solve diverged: objective {objective} vs initial {initial_objective} \
                 (outer round {outer})"
            )));
        }
        if outer + 1 < params.reweight_iters {
            weights = refresh_weights(&x, params.sigma)?;
            state.reproject_duals(&weights, params.lambda);
        }
    }
    Ok((state.primal.clone(), objectives))
}
