//! A Graf-type convex interpolation function for a subspace lattice.
//!
//! `G` is built as a mollified maximum of the cluster quadratics
//! `u_a(x) = |x_a|²/2 + r_a`: the binary maximum is smoothed in the
//! comparison variable with a compactly supported C∞ kernel of width
//! `smoothing`, then folded over the lattice elements in canonical order.
//! Because the kernel has compact support the fold agrees exactly with the
//! hard maximum wherever one branch dominates by more than the smoothing
//! width, which is what produces the directional-flatness property near the
//! collision planes.
//!
//! Value, gradient and Hessian are all analytic. The Hessian is a conic
//! combination of projectors plus a rank-one term with nonnegative
//! coefficients, so convexity holds by construction and the sampled PSD
//! check certifies it to rounding.

use crate::error::{Error, Result};
use crate::lattice::SubspaceLattice;
use crate::linalg::MatBuf;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

/// Compactly supported C∞ mollifier on [-1, 1] with precomputed quadrature.
struct MollKernel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// 1/∫bump, so the density is ρ(u) = bump(u)·density_scale
    density_scale: f64,
}

impl MollKernel {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(64);
        let raw: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&u, &w)| w * bump(u))
            .sum();
        MollKernel {
            nodes,
            weights,
            density_scale: 1.0 / raw,
        }
    }

    /// μ(d) = ∫ (d - εu)₊ ρ(u) du — smooth ramp with μ(d) = 0 for d ≤ -ε
    /// and μ(d) = d for d ≥ ε.
    fn ramp(&self, d: f64, eps: f64) -> f64 {
        if d <= -eps {
            return 0.0;
        }
        if d >= eps {
            return d;
        }
        // integrate over u ∈ [-1, d/ε] where the integrand is smooth
        let t = d / eps;
        let half = 0.5 * (t + 1.0);
        let mut acc = 0.0;
        for (&u0, &w) in self.nodes.iter().zip(&self.weights) {
            let u = -1.0 + (u0 + 1.0) * half;
            acc += w * half * (d - eps * u) * bump(u);
        }
        acc * self.density_scale
    }

    /// μ'(d) = ∫_{u ≤ d/ε} ρ(u) du ∈ [0, 1].
    fn ramp_deriv(&self, d: f64, eps: f64) -> f64 {
        if d <= -eps {
            return 0.0;
        }
        if d >= eps {
            return 1.0;
        }
        let t = d / eps;
        let half = 0.5 * (t + 1.0);
        let mut acc = 0.0;
        for (&u0, &w) in self.nodes.iter().zip(&self.weights) {
            let u = -1.0 + (u0 + 1.0) * half;
            acc += w * half * bump(u);
        }
        (acc * self.density_scale).clamp(0.0, 1.0)
    }

    /// μ''(d) = ρ(d/ε)/ε ≥ 0.
    fn ramp_second(&self, d: f64, eps: f64) -> f64 {
        if d.abs() >= eps {
            return 0.0;
        }
        bump(d / eps) * self.density_scale / eps
    }
}

#[inline]
fn bump(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The Graf field with analytic value, gradient and Hessian.
pub struct GrafField {
    /// (projector Π_a, offset r_a) per lattice element, in canonical order
    branches: Vec<(MatBuf, f64)>,
    pub smoothing: f64,
    pub ambient_dim: usize,
    kernel: MollKernel,
}

/// Build the field from a lattice. Offsets default to `r_a = dim(X^a)·0.5`.
pub fn build_graf(
    lattice: &SubspaceLattice,
    smoothing: f64,
    offsets: Option<&[f64]>,
) -> Result<GrafField> {
    assert!(smoothing > 0.0);
    let n = lattice.ambient_dim;
    let mut branches = Vec::with_capacity(lattice.len());
    for a in 0..lattice.len() {
        let proj = lattice.projectors(a)?.onto_subspace;
        let r = match offsets {
            Some(o) => o[a],
            None => (n - lattice.element(a)?.dim()) as f64 * 0.5,
        };
        branches.push((proj, r));
    }
    Ok(GrafField {
        branches,
        smoothing,
        ambient_dim: n,
        kernel: MollKernel::new(),
    })
}

impl GrafField {
    fn branch_eval(&self, idx: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let (p, r) = &self.branches[idx];
        let n = self.ambient_dim;
        let px: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| p.get(i, j) * x[j]).sum())
            .collect();
        let val = 0.5 * px.iter().map(|v| v * v).sum::<f64>() + r;
        (val, px)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (mut v, _) = self.branch_eval(0, x);
        for idx in 1..self.branches.len() {
            let (u, _) = self.branch_eval(idx, x);
            v += self.kernel.ramp(u - v, self.smoothing);
        }
        v
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let (mut v, mut g) = self.branch_eval(0, x);
        for idx in 1..self.branches.len() {
            let (u, gu) = self.branch_eval(idx, x);
            let mp = self.kernel.ramp_deriv(u - v, self.smoothing);
            v += self.kernel.ramp(u - v, self.smoothing);
            for (gi, gui) in g.iter_mut().zip(&gu) {
                *gi += mp * (gui - *gi);
            }
        }
        g
    }

    /// Analytic Hessian: `H ← (1-μ')H + μ'H_u + μ''(g_u - g)(g_u - g)ᵀ`
    /// through the fold — a nonnegative combination of PSD pieces.
    pub fn hessian(&self, x: &[f64]) -> MatBuf {
        let n = self.ambient_dim;
        let (mut v, mut g) = self.branch_eval(0, x);
        let mut h = self.branches[0].0.clone();
        for idx in 1..self.branches.len() {
            let (u, gu) = self.branch_eval(idx, x);
            let hu = &self.branches[idx].0;
            let d = u - v;
            let m1 = self.kernel.ramp_deriv(d, self.smoothing);
            let m2 = self.kernel.ramp_second(d, self.smoothing);
            let mut hnew = MatBuf::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let rank1 = (gu[i] - g[i]) * (gu[j] - g[j]);
                    hnew.set(
                        i,
                        j,
                        (1.0 - m1) * h.get(i, j) + m1 * hu.get(i, j) + m2 * rank1,
                    );
                }
            }
            h = hnew;
            v += self.kernel.ramp(d, self.smoothing);
            for (gi, gui) in g.iter_mut().zip(&gu) {
                *gi += m1 * (gui - *gi);
            }
        }
        h
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrafCheckReport {
    /// largest constant with `max{x², C₁} ≤ 2G` on the sample
    pub c1: f64,
    /// smallest constant with `2G ≤ x² + C₂` on the sample
    pub c2: f64,
    /// worst (most negative) sampled Hessian eigenvalue
    pub hessian_min_eig: f64,
    /// largest measured δ with directional flatness near every element
    pub delta_measured: f64,
    /// max |∂^α(2G - x²)| over the sample for |α| ≤ 2
    pub deriv_bound: f64,
    pub samples: usize,
}

/// Numerically verify the three lemma properties on random samples.
pub fn check_graf(
    field: &GrafField,
    lattice: &SubspaceLattice,
    samples: usize,
    box_half_width: f64,
    seed: u64,
) -> Result<GrafCheckReport> {
    let n = field.ambient_dim;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    let mut hess_min = f64::INFINITY;
    let mut deriv_bound = 0.0f64;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n)
            .map(|_| (rng.random::<f64>() - 0.5) * 2.0 * box_half_width)
            .collect();
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let g2 = 2.0 * field.value(&x);
        if g2 - x2 < -1e-9 {
            return Err(Error::PropertyViolated {
                property: 1,
                point: x,
                detail: format!("2G - x² = {:.3e} < 0", g2 - x2),
            });
        }
        c1 = c1.min(g2);
        c2 = c2.max(g2 - x2);
        deriv_bound = deriv_bound.max((g2 - x2).abs());
        let grad = field.grad(&x);
        for (i, gi) in grad.iter().enumerate() {
            deriv_bound = deriv_bound.max((2.0 * gi - 2.0 * x[i]).abs());
        }
        let h = field.hessian(&x);
        let me = min_eig_small(&h);
        hess_min = hess_min.min(me);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 2.0 } else { 0.0 };
                deriv_bound = deriv_bound.max((2.0 * h.get(i, j) - id).abs());
            }
        }
        if me < -1e-8 {
            return Err(Error::PropertyViolated {
                property: 2,
                point: x,
                detail: format!("Hessian eigenvalue {me:.3e} < 0"),
            });
        }
    }

    // property (3): directional flatness near each element
    let mut delta_measured = f64::INFINITY;
    for a in 0..lattice.len() {
        if a == lattice.a_min {
            continue; // X^{a_min} = {0}: vacuous
        }
        let comp = lattice.complement_basis(a)?;
        if comp.cols == 0 {
            continue;
        }
        let sub = lattice.element(a)?.basis();
        let mut delta_a = 0.0;
        'trial: for trial in [0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05] {
            for _ in 0..200 {
                // x = (point in X_a within the box) + (|x^a| < trial)
                let mut x = vec![0.0; n];
                for c in 0..sub.cols {
                    let t = (rng.random::<f64>() - 0.5) * 2.0 * box_half_width;
                    for i in 0..n {
                        x[i] += t * sub.get(i, c);
                    }
                }
                for c in 0..comp.cols {
                    let t = (rng.random::<f64>() - 0.5) * 2.0 * trial / (comp.cols as f64).sqrt();
                    for i in 0..n {
                        x[i] += t * comp.get(i, c);
                    }
                }
                let grad = field.grad(&x);
                for c in 0..comp.cols {
                    let dir_deriv: f64 = (0..n).map(|i| comp.get(i, c) * grad[i]).sum();
                    if dir_deriv.abs() > 1e-10 {
                        continue 'trial;
                    }
                }
            }
            delta_a = trial;
            break;
        }
        if delta_a == 0.0 {
            return Err(Error::PropertyViolated {
                property: 3,
                point: vec![0.0; n],
                detail: format!("no positive δ with flatness near element {a}"),
            });
        }
        delta_measured = delta_measured.min(delta_a);
    }
    if !delta_measured.is_finite() {
        delta_measured = f64::INFINITY; // trivial lattice: vacuous
    }

    Ok(GrafCheckReport {
        c1,
        c2,
        hessian_min_eig: hess_min,
        delta_measured,
        deriv_bound,
        samples,
    })
}

fn min_eig_small(h: &MatBuf) -> f64 {
    match h.rows {
        1 => h.get(0, 0),
        2 => {
            let (a, b, c) = (h.get(0, 0), 0.5 * (h.get(0, 1) + h.get(1, 0)), h.get(1, 1));
            let tr = 0.5 * (a + c);
            tr - (0.25 * (a - c) * (a - c) + b * b).sqrt()
        }
        _ => {
            let mut m = h.clone();
            // symmetrize against rounding
            for i in 0..m.rows {
                for j in 0..i {
                    let s = 0.5 * (m.get(i, j) + m.get(j, i));
                    m.set(i, j, s);
                    m.set(j, i, s);
                }
            }
            crate::linalg::eigh_inplace(&mut m).map(|v| v[0]).unwrap_or(f64::NAN)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{generate_lattice, Subspace};

    fn two_line_lattice() -> SubspaceLattice {
        let x_axis = Subspace::from_vectors(2, &[vec![1.0, 0.0]]).unwrap();
        let y_axis = Subspace::from_vectors(2, &[vec![0.0, 1.0]]).unwrap();
        generate_lattice(&[x_axis, y_axis], 2).unwrap()
    }

    #[test]
    fn ramp_is_exact_outside_window() {
        let k = MollKernel::new();
        let eps = 0.1;
        assert_eq!(k.ramp(-0.2, eps), 0.0);
        assert!((k.ramp(0.2, eps) - 0.2).abs() < 1e-15);
        assert_eq!(k.ramp_deriv(-0.11, eps), 0.0);
        assert_eq!(k.ramp_deriv(0.11, eps), 1.0);
        // inside the window: between the hard max and max + O(ε)
        for d in [-0.09, -0.03, 0.0, 0.04, 0.09] {
            let v = k.ramp(d, eps);
            assert!(v >= d.max(0.0) - 1e-12, "ramp below hard max at {d}");
            assert!(v <= d.max(0.0) + eps, "ramp too far above at {d}");
        }
    }

    #[test]
    fn trivial_lattice_field() {
        let lat = generate_lattice(&[Subspace::zero(1)], 1).unwrap();
        let g = build_graf(&lat, 0.1, None).unwrap();
        // far out, the x²/2 branch dominates exactly
        let v = g.value(&[4.0]);
        assert!((v - 8.0).abs() < 1e-12);
        let rep = check_graf(&g, &lat, 500, 5.0, 1).unwrap();
        assert!(rep.c1 > 0.0);
        assert!(rep.c2.is_finite());
        assert!(rep.hessian_min_eig >= -1e-8);
    }

    #[test]
    fn two_line_field_properties() {
        let lat = two_line_lattice();
        let g = build_graf(&lat, 0.1, None).unwrap();
        let rep = check_graf(&g, &lat, 2000, 6.0, 7).unwrap();
        assert!(rep.c1 >= 1.0, "c1 = {}", rep.c1);
        assert!(rep.c2 <= 4.0, "c2 = {}", rep.c2);
        assert!(rep.hessian_min_eig >= -1e-8);
        assert!(rep.delta_measured >= 0.1, "δ = {}", rep.delta_measured);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let lat = two_line_lattice();
        let g = build_graf(&lat, 0.15, None).unwrap();
        let h = 1e-5;
        for x in [[0.3, 0.2], [1.1, 0.05], [0.9, 0.85], [2.5, -0.3], [-0.4, 1.6]] {
            let grad = g.grad(&x);
            for l in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[l] += h;
                xm[l] -= h;
                let fd = (g.value(&xp) - g.value(&xm)) / (2.0 * h);
                assert!(
                    (grad[l] - fd).abs() < 1e-6,
                    "grad[{l}] at {x:?}: {} vs {fd}",
                    grad[l]
                );
            }
            let hess = g.hessian(&x);
            for l in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[l] += h;
                xm[l] -= h;
                let gp = g.grad(&xp);
                let gm = g.grad(&xm);
                for i in 0..2 {
                    let fd = (gp[i] - gm[i]) / (2.0 * h);
                    assert!(
                        (hess.get(i, l) - fd).abs() < 1e-4,
                        "hess[{i},{l}] at {x:?}: {} vs {fd}",
                        hess.get(i, l)
                    );
                }
            }
        }
    }

    #[test]
    fn flatness_near_x_axis() {
        let lat = two_line_lattice();
        let g = build_graf(&lat, 0.1, None).unwrap();
        // find the x-axis element
        let a = (0..lat.len())
            .find(|&a| {
                let e = lat.element(a).unwrap();
                e.dim() == 1 && e.basis().get(0, 0).abs() > 0.9
            })
            .unwrap();
        let comp = lat.complement_basis(a).unwrap();
        // near the x-axis (|y| small) the derivative along y vanishes
        for xv in [0.0, 0.7, 1.3, 2.0, 4.0] {
            for yv in [-0.2, -0.05, 0.1, 0.2] {
                let grad = g.grad(&[xv, yv]);
                let dd: f64 = (0..2).map(|i| comp.get(i, 0) * grad[i]).sum();
                assert!(dd.abs() < 1e-10, "∂G/∂y = {dd} at ({xv}, {yv})");
            }
        }
    }
}
