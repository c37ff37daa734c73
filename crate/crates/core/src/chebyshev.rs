//! Chebyshev expansions of operator functions: smooth spectral filters
//! `f(P)` and the polynomial propagator `e^{-itP}`.
//!
//! Both work matrix-free from an enclosure `[lo, hi]` of the spectrum. The
//! filter expansion truncates on a rigorous coefficient-tail bound (valid
//! because `|T_k| ≤ 1` on the scaled spectrum); the propagator uses the
//! Jacobi-Anger expansion with Bessel coefficients from Miller's downward
//! recurrence.

use num_complex::Complex64;

/// A truncated Chebyshev expansion of a real function over `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct ChebyshevExpansion {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    /// `Σ_{k > p} |c_k|` at the truncation point: a sup-norm error bound on
    /// the spectrum enclosure.
    pub tail_bound: f64,
}

impl ChebyshevExpansion {
    /// Expand `f` until the coefficient tail drops below `target`.
    pub fn of_function<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, target: f64) -> Self {
        assert!(hi > lo);
        let center = 0.5 * (hi + lo);
        let half = 0.5 * (hi - lo);
        let g = |y: f64| f(center + half * y);
        let mut p_max = 256usize;
        loop {
            let m = 4 * p_max;
            let samples: Vec<f64> = (0..m)
                .map(|i| {
                    let th = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                    g(th.cos())
                })
                .collect();
            let mut coeffs = vec![0.0f64; p_max + 1];
            for (k, c) in coeffs.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, s) in samples.iter().enumerate() {
                    let th = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                    acc += s * (k as f64 * th).cos();
                }
                *c = acc * if k == 0 { 1.0 } else { 2.0 } / m as f64;
            }
            // truncate where the running tail is below target
            let abs: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
            let total_tail: Vec<f64> = {
                let mut t = vec![0.0; p_max + 2];
                for k in (0..=p_max).rev() {
                    t[k] = t[k + 1] + abs[k];
                }
                t
            };
            // the last quarter of the computed range must already be
            // negligible, otherwise increase the degree
            if total_tail[3 * p_max / 4] > target && p_max < (1 << 16) {
                p_max *= 2;
                continue;
            }
            let mut p = p_max;
            while p > 1 && total_tail[p] <= target {
                p -= 1;
            }
            let tail_bound = total_tail[p + 1];
            coeffs.truncate(p + 1);
            return ChebyshevExpansion {
                coeffs,
                lo,
                hi,
                tail_bound,
            };
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Evaluate the truncated expansion at a scalar (for diagnostics/tests).
    pub fn eval_scalar(&self, e: f64) -> f64 {
        let center = 0.5 * (self.hi + self.lo);
        let half = 0.5 * (self.hi - self.lo);
        let y = (e - center) / half;
        let mut t_prev = 1.0;
        let mut t_cur = y;
        let mut acc = self.coeffs[0];
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            if k == 1 {
                acc += c * t_cur;
            } else {
                let t_next = 2.0 * y * t_cur - t_prev;
                t_prev = t_cur;
                t_cur = t_next;
                acc += c * t_cur;
            }
        }
        acc
    }

    /// `y = (Σ c_k T_k(B)) x` with `B` the spectrum-scaled operator.
    pub fn apply_real<F>(&self, mut apply: F, x: &[f64]) -> Vec<f64>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let dim = x.len();
        let center = 0.5 * (self.hi + self.lo);
        let half = 0.5 * (self.hi - self.lo);
        let mut scratch = vec![0.0; dim];
        let mut scaled_apply = |v: &[f64], out: &mut [f64]| {
            apply(v, &mut scratch);
            for i in 0..dim {
                out[i] = (scratch[i] - center * v[i]) / half;
            }
        };
        let mut w_prev = x.to_vec(); // T_0 x
        let mut w_cur = vec![0.0; dim];
        scaled_apply(x, &mut w_cur); // T_1 x
        let mut acc: Vec<f64> = x.iter().map(|v| v * self.coeffs[0]).collect();
        if self.coeffs.len() > 1 {
            for i in 0..dim {
                acc[i] += self.coeffs[1] * w_cur[i];
            }
        }
        let mut w_next = vec![0.0; dim];
        for &c in self.coeffs.iter().skip(2) {
            scaled_apply(&w_cur, &mut w_next);
            for i in 0..dim {
                w_next[i] = 2.0 * w_next[i] - w_prev[i];
            }
            std::mem::swap(&mut w_prev, &mut w_cur);
            std::mem::swap(&mut w_cur, &mut w_next);
            for i in 0..dim {
                acc[i] += c * w_cur[i];
            }
        }
        acc
    }
}

/// `J_0(z), …, J_{kmax}(z)` by Miller's downward recurrence (z ≥ 0).
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    if z == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let start = kmax + 16 + (2.0 * z.cbrt()) as usize;
    let mut jj = vec![0.0f64; start + 2];
    jj[start + 1] = 0.0;
    jj[start] = 1e-280;
    for k in (1..=start).rev() {
        jj[k - 1] = (2.0 * k as f64 / z) * jj[k] - jj[k + 1];
        if jj[k - 1].abs() > 1e240 {
            for v in jj[k - 1..].iter_mut() {
                *v *= 1e-240;
            }
        }
    }
    // normalization: J_0 + 2 Σ J_{2k} = 1
    let mut norm = jj[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * jj[k];
    }
    let mut out = jj;
    out.truncate(kmax + 1);
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// One Chebyshev propagation step `ψ ← e^{-itH}ψ` for a real symmetric `H`
/// enclosed in `[lo, hi]`, matrix-free. Returns the polynomial degree used;
/// the truncation error is below `tol` in norm.
pub fn expm_apply<F>(
    mut apply: F,
    lo: f64,
    hi: f64,
    psi: &mut [Complex64],
    t: f64,
    tol: f64,
) -> usize
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = psi.len();
    let center = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let z = half * t.abs();
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };

    // degree: Bessel tail below tol/4
    let margin = 40 + (3.0 * z.cbrt() * (-(tol.min(0.1)).ln()).powf(2.0 / 3.0)) as usize;
    let kmax = z.ceil() as usize + margin;
    let bes = bessel_j_sequence(z, kmax);
    let mut p = kmax;
    let mut tail = 0.0;
    while p > 1 {
        let next = tail + bes[p].abs();
        if 2.0 * next > 0.25 * tol {
            break;
        }
        tail = next;
        p -= 1;
    }

    // coefficients a_k = (2-δ)(∓i)^k J_k
    let unit = Complex64::new(0.0, -sign);
    let mut coeff = Vec::with_capacity(p + 1);
    let mut ik = Complex64::new(1.0, 0.0);
    for (k, &b) in bes.iter().take(p + 1).enumerate() {
        let scale = if k == 0 { 1.0 } else { 2.0 };
        coeff.push(ik * (scale * b));
        ik *= unit;
    }

    // T_k recurrence on the complex state, scaled operator via two real applies
    let mut re = vec![0.0; dim];
    let mut im = vec![0.0; dim];
    let mut out_re = vec![0.0; dim];
    let mut out_im = vec![0.0; dim];
    let mut scaled_apply = |v: &[Complex64], out: &mut Vec<Complex64>| {
        for i in 0..dim {
            re[i] = v[i].re;
            im[i] = v[i].im;
        }
        // borrow juggling: reuse the preallocated buffers
        out.resize(dim, Complex64::ZERO);
        // real part
        {
            let (r, o) = (&re, &mut out_re);
            apply(r, o);
        }
        {
            let (r, o) = (&im, &mut out_im);
            apply(r, o);
        }
        for i in 0..dim {
            out[i] = Complex64::new(
                (out_re[i] - center * v[i].re) / half,
                (out_im[i] - center * v[i].im) / half,
            );
        }
    };

    let mut w_prev: Vec<Complex64> = psi.to_vec();
    let mut w_cur: Vec<Complex64> = Vec::new();
    scaled_apply(&w_prev, &mut w_cur);
    let mut acc: Vec<Complex64> = psi.iter().map(|&v| coeff[0] * v).collect();
    if p >= 1 {
        for i in 0..dim {
            acc[i] += coeff[1] * w_cur[i];
        }
    }
    let mut w_next: Vec<Complex64> = Vec::new();
    for &c in coeff.iter().skip(2) {
        scaled_apply(&w_cur, &mut w_next);
        for i in 0..dim {
            w_next[i] = 2.0 * w_next[i] - w_prev[i];
        }
        std::mem::swap(&mut w_prev, &mut w_cur);
        std::mem::swap(&mut w_cur, &mut w_next);
        for i in 0..dim {
            acc[i] += c * w_cur[i];
        }
    }
    // global phase from the spectrum center
    let phase = Complex64::from_polar(1.0, -sign * center * t.abs());
    for (o, a) in psi.iter_mut().zip(&acc) {
        *o = phase * a;
    }
    p
}
