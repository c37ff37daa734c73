//! Discrete operators on the channel-stacked grid space.
//!
//! Every operator in this crate is either real symmetric (`P`, potentials,
//! commutators of the mixed kind) or of the form `-i·M` with `M` real
//! antisymmetric (the dilation-type generators `A`, `A_V`). Both kinds are
//! Hermitian on the complex state space, and the class is closed under the
//! commutator map `(O1, O2) ↦ i(O1 O2 - O2 O1)`, so all heavy arithmetic
//! stays real.

use crate::error::{Error, Result};
use crate::grid::{DiscreteState, Grid};
use crate::linalg::{Csr, MatBuf};
use num_complex::Complex64;

/// Algebraic kind of the stored real matrix `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    /// Operator is `M` itself, `M` symmetric.
    Symmetric,
    /// Operator is `-i·M`, `M` antisymmetric (dilation generators).
    SkewGenerator,
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub kind: OpKind,
    pub grid: Grid,
    pub channels: usize,
    mat: Csr,
    /// Structure defect of `M` measured before any re-symmetrization.
    pub hermitian_defect: f64,
}

impl DiscreteOperator {
    /// Wrap an assembled matrix, measuring and then removing the structure
    /// defect for the claimed kind.
    pub fn new(kind: OpKind, grid: Grid, channels: usize, mat: Csr) -> Self {
        assert_eq!(mat.rows, mat.cols);
        assert_eq!(mat.rows, channels * grid.len());
        let skew = kind == OpKind::SkewGenerator;
        let defect = mat.structure_defect(skew);
        let mat = if defect > 0.0 { mat.symmetrize(skew) } else { mat };
        DiscreteOperator {
            kind,
            grid,
            channels,
            mat,
            hermitian_defect: defect,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn matrix(&self) -> &Csr {
        &self.mat
    }

    /// `y = M x` on plain real vectors (the stored matrix, kind ignored).
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        self.mat.apply(x, y);
    }

    /// Apply the operator to a complex state.
    pub fn apply(&self, state: &DiscreteState) -> DiscreteState {
        assert_eq!(state.len(), self.dim());
        let (re, im) = state.split_re_im();
        let mut mre = vec![0.0; re.len()];
        let mut mim = vec![0.0; im.len()];
        self.mat.apply(&re, &mut mre);
        self.mat.apply(&im, &mut mim);
        match self.kind {
            // (M u)  for u = re + i·im
            OpKind::Symmetric => DiscreteState::from_re_im(state.channels, &mre, &mim),
            // (-i M) u = (M im) - i (M re)
            OpKind::SkewGenerator => {
                let re_out = mim;
                let im_out: Vec<f64> = mre.iter().map(|v| -v).collect();
                DiscreteState::from_re_im(state.channels, &re_out, &im_out)
            }
        }
    }

    /// Real quadratic form `⟨u, O u⟩` (real by Hermiticity).
    pub fn expectation(&self, state: &DiscreteState) -> f64 {
        let ou = self.apply(state);
        state.inner(&ou).re
    }

    /// Dense form of the stored real matrix (column-major).
    pub fn dense(&self) -> MatBuf {
        self.mat.to_dense()
    }

    /// Block-diagonal repetition `diag(O, …, O)` over `m` channels.
    ///
    /// Only valid for single-channel operators; this is how `𝒜 = diag(A, …, A)`
    /// is formed from the dilation generator.
    pub fn replicate(&self, m: usize) -> DiscreteOperator {
        assert_eq!(self.channels, 1, "replicate expects a single-channel operator");
        let npts = self.grid.len();
        let mut trips = Vec::with_capacity(self.mat.nnz() * m);
        for r in 0..npts {
            for k in self.mat.indptr[r]..self.mat.indptr[r + 1] {
                let c = self.mat.indices[k];
                let v = self.mat.data[k];
                for b in 0..m {
                    trips.push((b * npts + r, b * npts + c, v));
                }
            }
        }
        let mat = Csr::from_triplets(m * npts, m * npts, trips);
        DiscreteOperator {
            kind: self.kind,
            grid: self.grid.clone(),
            channels: m,
            mat,
            hermitian_defect: self.hermitian_defect,
        }
    }

    /// `alpha·self + beta·other` (same kind only).
    pub fn add_scaled(&self, alpha: f64, other: &DiscreteOperator, beta: f64) -> Result<DiscreteOperator> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(self.dim(), other.dim()));
        }
        assert_eq!(self.kind, other.kind, "cannot add operators of mixed kind");
        let mat = self.mat.add_scaled(alpha, &other.mat, beta);
        Ok(DiscreteOperator {
            kind: self.kind,
            grid: self.grid.clone(),
            channels: self.channels,
            mat,
            hermitian_defect: self.hermitian_defect.max(other.hermitian_defect),
        })
    }

    /// Shift by a multiple of the identity (symmetric kind only).
    pub fn shift(&self, c: f64) -> DiscreteOperator {
        assert_eq!(self.kind, OpKind::Symmetric);
        let id = Csr::identity(self.dim());
        let mat = self.mat.add_scaled(1.0, &id, c);
        DiscreteOperator {
            kind: self.kind,
            grid: self.grid.clone(),
            channels: self.channels,
            mat,
            hermitian_defect: self.hermitian_defect,
        }
    }
}

/// The commutator map `i[O1, O2] = i(O1 O2 - O2 O1)`.
///
/// The result is again Hermitian of one of the two kinds; the structure
/// defect of the raw product (rounding only, the kind algebra is exact) is
/// recorded on the returned operator before re-symmetrization.
pub fn commutator(o1: &DiscreteOperator, o2: &DiscreteOperator) -> Result<DiscreteOperator> {
    if o1.dim() != o2.dim() {
        return Err(Error::ShapeMismatch(o1.dim(), o2.dim()));
    }
    let ab = o1.mat.matmul(&o2.mat);
    let ba = o2.mat.matmul(&o1.mat);
    use OpKind::*;
    // i[(re M1),(re M2)]   = -i (M2 M1 - M1 M2)      -> skew kind
    // i[(re M),(-i K)]     =      M K - K M          -> symmetric kind
    // i[(-i K),(re M)]     =      K M - M K          -> symmetric kind
    // i[(-i K1),(-i K2)]   = -i (K1 K2 - K2 K1)      -> skew kind
    let (kind, m) = match (o1.kind, o2.kind) {
        (Symmetric, Symmetric) => (SkewGenerator, ba.add_scaled(1.0, &ab, -1.0)),
        (Symmetric, SkewGenerator) => (Symmetric, ab.add_scaled(1.0, &ba, -1.0)),
        (SkewGenerator, Symmetric) => (Symmetric, ab.add_scaled(1.0, &ba, -1.0)),
        (SkewGenerator, SkewGenerator) => (SkewGenerator, ab.add_scaled(1.0, &ba, -1.0)),
    };
    Ok(DiscreteOperator::new(
        kind,
        o1.grid.clone(),
        o1.channels,
        m,
    ))
}

/// Multiply a state pointwise by a real function given per grid point,
/// applied identically on every channel (`g(x)·𝟙`).
pub fn scalar_multiply(state: &DiscreteState, values: &[f64]) -> DiscreteState {
    assert_eq!(state.points, values.len());
    let mut out = state.clone();
    for j in 0..state.channels {
        for (p, v) in values.iter().enumerate() {
            out.values[j * state.points + p] *= v;
        }
    }
    out
}

/// `⟨u, g(x) u⟩` for a real multiplier evaluated per point.
pub fn scalar_expectation(state: &DiscreteState, values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..state.channels {
        let ch = state.channel(j);
        for (z, v) in ch.iter().zip(values) {
            acc += z.norm_sqr() * v;
        }
    }
    acc
}

pub fn state_axpy(y: &mut DiscreteState, a: Complex64, x: &DiscreteState) {
    for (yv, xv) in y.values.iter_mut().zip(&x.values) {
        *yv += a * xv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn kind_algebra_shapes() {
        let g = Grid::new(1, 5.0, 16);
        let n = 16;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, 1.0 + i as f64));
        }
        let sym = DiscreteOperator::new(
            OpKind::Symmetric,
            g.clone(),
            1,
            Csr::from_triplets(n, n, trips),
        );
        let mut skew_trips = Vec::new();
        for i in 0..n - 1 {
            skew_trips.push((i, i + 1, 1.0));
            skew_trips.push((i + 1, i, -1.0));
        }
        let skew = DiscreteOperator::new(
            OpKind::SkewGenerator,
            g,
            1,
            Csr::from_triplets(n, n, skew_trips),
        );
        assert_eq!(sym.hermitian_defect, 0.0);
        assert_eq!(skew.hermitian_defect, 0.0);
        let c1 = commutator(&sym, &skew).unwrap();
        assert_eq!(c1.kind, OpKind::Symmetric);
        let c2 = commutator(&sym, &sym).unwrap();
        assert_eq!(c2.kind, OpKind::SkewGenerator);
        let c3 = commutator(&skew, &skew).unwrap();
        assert_eq!(c3.kind, OpKind::SkewGenerator);
        // self-commutator is zero
        let selfc = commutator(&sym, &sym).unwrap();
        assert_eq!(selfc.matrix().nnz(), 0);
    }

    #[test]
    fn skew_kind_is_hermitian_on_states() {
        let g = Grid::new(1, 5.0, 32);
        let n = 32;
        let mut trips = Vec::new();
        for i in 0..n - 1 {
            trips.push((i, i + 1, 0.7 * (i as f64 + 1.0)));
            trips.push((i + 1, i, -0.7 * (i as f64 + 1.0)));
        }
        let a = DiscreteOperator::new(
            OpKind::SkewGenerator,
            g,
            1,
            Csr::from_triplets(n, n, trips),
        );
        // ⟨u, A u⟩ must be real for a complex test state
        let mut s = DiscreteState::zeros(1, n);
        for (i, z) in s.values.iter_mut().enumerate() {
            *z = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        let au = a.apply(&s);
        let ip = s.inner(&au);
        assert!(ip.im.abs() < 1e-12 * s.norm_sq());
    }
}
