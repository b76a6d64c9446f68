//! Independent oracles for solver validation: dense linear algebra and
//! brute-force descent, no shared code with the transform-based paths they
//! check.

#![allow(dead_code)]

use rgtv::graph::EdgeWeightField;
use rgtv::image::ImageBuf;
use rgtv::kernel::Kernel;
use rgtv::synth::SplitMix64;

/// Dense `y = (diag(W 1) - W) x` with W materialized as an N x N matrix.
pub fn dense_laplacian_multiply(weights: &EdgeWeightField, img: &ImageBuf) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let mut adj = vec![0.0; n * n];
    for r in 0..h {
        for c in 0..w - 1 {
            let (i, j) = (r * w + c, r * w + c + 1);
            let we = weights.h_at(r, c);
            adj[i * n + j] = we;
            adj[j * n + i] = we;
        }
    }
    for r in 0..h - 1 {
        for c in 0..w {
            let (i, j) = (r * w + c, (r + 1) * w + c);
            let we = weights.v_at(r, c);
            adj[i * n + j] = we;
            adj[j * n + i] = we;
        }
    }
    let degree: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| adj[i * n + j]).sum())
        .collect();
    (0..n)
        .map(|i| {
            let mut acc = degree[i] * img.data()[i];
            for j in 0..n {
                acc -= adj[i * n + j] * img.data()[j];
            }
            acc
        })
        .collect()
}

/// Direct O(N h^2) circular convolution.
pub fn direct_circular_conv(img: &ImageBuf, k: &Kernel) -> ImageBuf {
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

/// Fixed-weight objective `1/2 ||Cx - b||^2 + lambda sum w_e |x_j - x_i|`
/// with C the circular convolution by `k`, evaluated directly.
pub fn direct_objective(
    b: &ImageBuf,
    k: &Kernel,
    weights: &EdgeWeightField,
    lambda: f64,
    x: &ImageBuf,
) -> f64 {
    let cx = direct_circular_conv(x, k);
    let fidelity: f64 = cx
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        * 0.5;
    let (w, h) = (x.width(), x.height());
    let mut tv = 0.0;
    for r in 0..h {
        for c in 0..w - 1 {
            tv += weights.h_at(r, c) * (x.at(r, c + 1) - x.at(r, c)).abs();
        }
    }
    for r in 0..h - 1 {
        for c in 0..w {
            tv += weights.v_at(r, c) * (x.at(r + 1, c) - x.at(r, c)).abs();
        }
    }
    fidelity + lambda * tv
}

/// Projected subgradient descent on the fixed-weight objective. The budget
/// is split into phases of diminishing step scale; each phase continues
/// from the best iterate found so far, iterates stay projected onto
/// `[0, 1]^N`, and the best objective seen is returned.
pub fn subgradient_best_objective(
    b: &ImageBuf,
    k: &Kernel,
    weights: &EdgeWeightField,
    lambda: f64,
    x0: &ImageBuf,
    total_iters: usize,
) -> f64 {
    let flipped = k.flipped();
    let (w, h) = (x0.width(), x0.height());
    let mut best = direct_objective(b, k, weights, lambda, x0);
    let mut best_x = x0.clone();
    let scales = [0.5, 0.08, 0.012, 0.002];
    let per_phase = total_iters / scales.len();

    for &scale in &scales {
        let mut x = best_x.clone();
        for t in 0..per_phase {
            let cx = direct_circular_conv(&x, k);
            let residual =
                ImageBuf::from_fn(w, h, |r, c| cx.at(r, c) - b.at(r, c));
            let fidelity: f64 =
                residual.data().iter().map(|v| v * v).sum::<f64>() * 0.5;
            let data_grad = direct_circular_conv(&residual, &flipped);

            // Subgradient of the weighted TV: sign of each edge difference.
            let mut grad: Vec<f64> = data_grad.data().to_vec();
            let mut tv = 0.0;
            for r in 0..h {
                for c in 0..w - 1 {
                    let we = weights.h_at(r, c);
                    let d = x.at(r, c + 1) - x.at(r, c);
                    tv += we * d.abs();
                    let s = lambda * we * d.signum();
                    grad[r * w + c + 1] += s;
                    grad[r * w + c] -= s;
                }
            }
            for r in 0..h - 1 {
                for c in 0..w {
                    let we = weights.v_at(r, c);
                    let d = x.at(r + 1, c) - x.at(r, c);
                    tv += we * d.abs();
                    let s = lambda * we * d.signum();
                    grad[(r + 1) * w + c] += s;
                    grad[r * w + c] -= s;
                }
            }
            let objective = fidelity + lambda * tv;
            if objective < best {
                best = objective;
                best_x = x.clone();
            }

            let step = scale / ((t + 1) as f64).sqrt();
            let data: Vec<f64> = x
                .data()
                .iter()
                .zip(&grad)
                .map(|(xv, g)| (xv - step * g).clamp(0.0, 1.0))
                .collect();
            x = ImageBuf::new(w, h, data).unwrap();
        }
        let final_obj = direct_objective(b, k, weights, lambda, &x);
        if final_obj < best {
            best = final_obj;
            best_x = x;
        }
    }
    best
}

/// Periodic forward differences, assembled here independently.
fn wrap_gradients(img: &ImageBuf) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            gx[r * w + c] = img.at(r, (c + 1) % w) - img.at(r, c);
            gy[r * w + c] = img.at((r + 1) % h, c) - img.at(r, c);
        }
    }
    (gx, gy)
}

/// Dense solve of the full-field kernel normal equations
/// `(A^T A + 2 mu I) k = A^T grad(b)` where `A` stacks circular convolution
/// by both gradient planes of `xhat`; returns the `h x h` center crop of the
/// field (wrap layout, zero shift at the field origin).
///
/// The system is assembled as an explicit N x N matrix and solved by
/// Gaussian elimination; nothing is shared with the transform route.
pub fn dense_kernel_solve(xhat: &ImageBuf, b: &ImageBuf, mu: f64, ksize: usize) -> Vec<f64> {
    let (w, h) = (xhat.width(), xhat.height());
    let n = w * h;
    let (gx_x, gy_x) = wrap_gradients(xhat);
    let (gx_b, gy_b) = wrap_gradients(b);

    // A[(d, p), t] = g_d((p - t) mod N2); build A^T A and A^T grad(b).
    let idx = |r: usize, c: usize| r * w + c;
    let shifted = |g: &[f64], pr: usize, pc: usize, tr: usize, tc: usize| {
        g[idx((pr + h - tr) % h, (pc + w - tc) % w)]
    };

    let mut ata = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for tr in 0..h {
        for tc in 0..w {
            let t = idx(tr, tc);
            for ur in 0..h {
                for uc in 0..w {
                    let u = idx(ur, uc);
                    if u < t {
                        continue; // symmetric
                    }
                    let mut acc = 0.0;
                    for pr in 0..h {
                        for pc in 0..w {
                            acc += shifted(&gx_x, pr, pc, tr, tc)
                                * shifted(&gx_x, pr, pc, ur, uc)
                                + shifted(&gy_x, pr, pc, tr, tc)
                                    * shifted(&gy_x, pr, pc, ur, uc);
                        }
                    }
                    ata[t * n + u] = acc;
                    ata[u * n + t] = acc;
                }
            }
            let mut acc = 0.0;
            for pr in 0..h {
                for pc in 0..w {
                    acc += shifted(&gx_x, pr, pc, tr, tc) * gx_b[idx(pr, pc)]
                        + shifted(&gy_x, pr, pc, tr, tc) * gy_b[idx(pr, pc)];
                }
            }
            rhs[t] = acc;
        }
    }
    for t in 0..n {
        ata[t * n + t] += 2.0 * mu;
    }

    let field = gaussian_elimination(&mut ata, &mut rhs);

    let r = (ksize / 2) as isize;
    let mut out = Vec::with_capacity(ksize * ksize);
    for dy in -r..=r {
        let row = dy.rem_euclid(h as isize) as usize;
        for dx in -r..=r {
            let col = dx.rem_euclid(w as isize) as usize;
            out.push(field[row * w + col]);
        }
    }
    out
}

/// Solve `M x = y` in place with partial pivoting; M is n x n row-major.
fn gaussian_elimination(m: &mut [f64], y: &mut [f64]) -> Vec<f64> {
    let n = y.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| {
                m[a * n + col]
                    .abs()
                    .partial_cmp(&m[b * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            y.swap(col, pivot);
        }
        let diag = m[col * n + col];
        assert!(diag.abs() > 1e-14, "singular normal equations");
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            y[row] -= factor * y[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = y[col];
        for j in col + 1..n {
            acc -= m[col * n + j] * x[j];
        }
        x[col] = acc / m[col * n + col];
    }
    x
}

/// Best normalized cross-correlation between two equal-size kernels over all
/// 2-D alignments (blind estimation leaves the kernel position ambiguous).
pub fn aligned_ncc(a: &Kernel, b: &Kernel) -> f64 {
    assert_eq!(a.size(), b.size());
    let r = a.radius() as isize;
    let norm_a: f64 = a.taps().iter().map(|t| t * t).sum::<f64>().sqrt();
    let norm_b: f64 = b.taps().iter().map(|t| t * t).sum::<f64>().sqrt();
    let mut best = f64::NEG_INFINITY;
    for sy in -(2 * r)..=(2 * r) {
        for sx in -(2 * r)..=(2 * r) {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (uy, ux) = (dy - sy, dx - sx);
                    if uy.abs() <= r && ux.abs() <= r {
                        acc += a.at(dy, dx) * b.at(uy, ux);
                    }
                }
            }
            best = best.max(acc / (norm_a * norm_b));
        }
    }
    best
}

/// Deterministic piecewise-constant test image: a coarse block grid overlaid
/// with rectangles and disks, intensities in [0.1, 0.9]. The disks provide
/// edges at every orientation so the kernel solve is well conditioned.
pub fn pws_test_image(width: usize, height: usize, seed: u64) -> ImageBuf {
    let mut rng = SplitMix64::new(seed);
    let block = 13usize;
    let bw = width / block + 1;
    let bh = height / block + 1;
    let levels: Vec<f64> = (0..bw * bh).map(|_| 0.1 + 0.8 * rng.next_f64()).collect();
    let mut img = ImageBuf::from_fn(width, height, |r, c| {
        levels[(r / block) * bw + c / block]
    });
    for _ in 0..6 {
        let x0 = (rng.next_f64() * (width as f64 - 8.0)) as usize;
        let y0 = (rng.next_f64() * (height as f64 - 8.0)) as usize;
        let rw = 6 + (rng.next_f64() * width as f64 / 3.0) as usize;
        let rh = 6 + (rng.next_f64() * height as f64 / 3.0) as usize;
        let level = 0.1 + 0.8 * rng.next_f64();
        for r in y0..(y0 + rh).min(height) {
            for c in x0..(x0 + rw).min(width) {
                img.set(r, c, level);
            }
        }
    }
    for _ in 0..5 {
        let cx = rng.next_f64() * width as f64;
        let cy = rng.next_f64() * height as f64;
        let radius = (width.min(height) as f64) * (0.08 + 0.12 * rng.next_f64());
        let level = 0.1 + 0.8 * rng.next_f64();
        for r in 0..height {
            for c in 0..width {
                let dy = r as f64 - cy;
                let dx = c as f64 - cx;
                if dx * dx + dy * dy <= radius * radius {
                    img.set(r, c, level);
                }
            }
        }
    }
    img
}
