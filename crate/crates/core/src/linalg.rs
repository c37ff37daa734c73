//! Dense and sparse linear algebra used by the rest of the crate.
//!
//! Dense symmetric eigendecompositions go through LAPACK `dsyevd`; large
//! operators are handled matrix-free by a block Lanczos solver with full
//! reorthogonalization ([`lowest_eigenpairs_below`]).

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Column-major dense matrix buffer.
#[derive(Clone, Debug)]
pub struct MatBuf {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatBuf {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatBuf {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_cols(rows: usize, cols: Vec<Vec<f64>>) -> Self {
        let ncols = cols.len();
        let mut data = Vec::with_capacity(rows * ncols);
        for c in &cols {
            assert_eq!(c.len(), rows);
            data.extend_from_slice(c);
        }
        MatBuf {
            rows,
            cols: ncols,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Keep only the listed columns, in order.
    pub fn select_cols(&self, idx: &[usize]) -> MatBuf {
        let mut out = MatBuf::zeros(self.rows, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            out.col_mut(k).copy_from_slice(self.col(j));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// C = alpha * op(A) * op(B), col-major, via BLAS.
pub fn dgemm(ta: bool, tb: bool, alpha: f64, a: &MatBuf, b: &MatBuf) -> MatBuf {
    use cblas_sys::{cblas_dgemm, CBLAS_LAYOUT, CBLAS_TRANSPOSE};
    let (m, ka) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (kb, n) = if tb { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(ka, kb, "dgemm inner dimension mismatch");
    let mut c = MatBuf::zeros(m, n);
    if m == 0 || n == 0 || ka == 0 {
        return c;
    }
    let tr = |t: bool| {
        if t {
            CBLAS_TRANSPOSE::CblasTrans
        } else {
            CBLAS_TRANSPOSE::CblasNoTrans
        }
    };
    unsafe {
        cblas_dgemm(
            CBLAS_LAYOUT::CblasColMajor,
            tr(ta),
            tr(tb),
            m as i32,
            n as i32,
            ka as i32,
            alpha,
            a.data.as_ptr(),
            a.rows as i32,
            b.data.as_ptr(),
            b.rows as i32,
            0.0,
            c.data.as_mut_ptr(),
            m as i32,
        );
    }
    c
}

/// Eigendecomposition of a symmetric matrix (LAPACK dsyevd).
///
/// Returns eigenvalues in ascending order; `a` is overwritten with the
/// corresponding orthonormal eigenvectors, one per column.
pub fn eigh_inplace(a: &mut MatBuf) -> Result<Vec<f64>> {
    assert_eq!(a.rows, a.cols, "eigh requires a square matrix");
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let nn = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let jobz = b'V' as i8;
    let uplo = b'L' as i8;
    unsafe {
        let (mut wkopt, mut iwkopt) = (0.0f64, 0i32);
        let (lwork_q, liwork_q) = (-1i32, -1i32);
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &nn,
            a.data.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            &mut wkopt,
            &lwork_q,
            &mut iwkopt,
            &liwork_q,
            &mut info,
        );
        if info != 0 {
            return Err(Error::EigensolverFailure(format!(
                "dsyevd workspace query failed with info = {info}"
            )));
        }
        let lwork = wkopt as i32;
        let liwork = iwkopt;
        let mut work = vec![0.0f64; lwork as usize];
        let mut iwork = vec![0i32; liwork as usize];
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &nn,
            a.data.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::EigensolverFailure(format!(
            "dsyevd failed with info = {info}"
        )));
    }
    Ok(w)
}

/// Compressed sparse row matrix over `f64`.
#[derive(Clone, Debug)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Csr {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: values.to_vec(),
        }
    }

    /// Build from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            rows,
            cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.apply(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let mut indptr = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0f64; self.nnz()];
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let dst = indptr[c];
                indices[dst] = r;
                data[dst] = self.data[k];
                indptr[c] += 1;
            }
        }
        Csr {
            rows: self.cols,
            cols: self.rows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// alpha * self + beta * other.
    pub fn add_scaled(&self, alpha: f64, other: &Csr, beta: f64) -> Csr {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.rows {
            let (mut i, mut j) = (self.indptr[r], other.indptr[r]);
            let (ie, je) = (self.indptr[r + 1], other.indptr[r + 1]);
            while i < ie || j < je {
                let ci = if i < ie { self.indices[i] } else { usize::MAX };
                let cj = if j < je { other.indices[j] } else { usize::MAX };
                if ci < cj {
                    indices.push(ci);
                    data.push(alpha * self.data[i]);
                    i += 1;
                } else if cj < ci {
                    indices.push(cj);
                    data.push(beta * other.data[j]);
                    j += 1;
                } else {
                    indices.push(ci);
                    data.push(alpha * self.data[i] + beta * other.data[j]);
                    i += 1;
                    j += 1;
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr {
            rows: self.rows,
            cols: self.cols,
            indptr,
            indices,
            data,
        }
    }

    /// self * other (sparse-sparse product).
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.cols, other.rows);
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices: Vec<usize> = Vec::new();
        let mut data: Vec<f64> = Vec::new();
        // dense scatter workspace
        let mut marker = vec![usize::MAX; other.cols];
        let mut accum = vec![0.0f64; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.rows {
            touched.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let a = self.data[k];
                let m = self.indices[k];
                for kk in other.indptr[m]..other.indptr[m + 1] {
                    let c = other.indices[kk];
                    if marker[c] != r {
                        marker[c] = r;
                        accum[c] = 0.0;
                        touched.push(c);
                    }
                    accum[c] += a * other.data[kk];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                indices.push(c);
                data.push(accum[c]);
            }
            indptr[r + 1] = indices.len();
        }
        Csr {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            data,
        }
    }

    /// Largest |A_ij - A_ji| (symmetry defect) or |A_ij + A_ji| (skew defect).
    pub fn structure_defect(&self, skew: bool) -> f64 {
        let t = self.transpose();
        let d = if skew {
            self.add_scaled(1.0, &t, 1.0)
        } else {
            self.add_scaled(1.0, &t, -1.0)
        };
        d.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// (self ± selfᵀ) / 2.
    pub fn symmetrize(&self, skew: bool) -> Csr {
        let t = self.transpose();
        if skew {
            self.add_scaled(0.5, &t, -0.5)
        } else {
            self.add_scaled(0.5, &t, 0.5)
        }
    }

    pub fn to_dense(&self) -> MatBuf {
        let mut m = MatBuf::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m.data[self.indices[k] * self.rows + r] = self.data[k];
            }
        }
        m
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Estimate the extremal eigenvalues of a symmetric operator by plain Lanczos.
///
/// Returns a slightly padded enclosure `(lo, hi)` of the spectrum suitable for
/// Chebyshev scaling.
pub fn spectral_bounds<F>(dim: usize, mut apply: F, iters: usize, seed: u64) -> (f64, f64)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut v_prev = vec![0.0; dim];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let iters = iters.min(dim);
    for _ in 0..iters {
        apply(&v, &mut w);
        let a = dot(&v, &w);
        alphas.push(a);
        for i in 0..dim {
            w[i] -= a * v[i] + betas.last().copied().unwrap_or(0.0) * v_prev[i];
        }
        let b = norm(&w);
        if b < 1e-14 {
            break;
        }
        betas.push(b);
        v_prev.copy_from_slice(&v);
        for i in 0..dim {
            v[i] = w[i] / b;
        }
    }
    let k = alphas.len();
    let mut t = MatBuf::zeros(k, k);
    for i in 0..k {
        t.set(i, i, alphas[i]);
        if i + 1 < k && i < betas.len() {
            t.set(i, i + 1, betas[i]);
            t.set(i + 1, i, betas[i]);
        }
    }
    let vals = eigh_inplace(&mut t).expect("tridiagonal eigensolve cannot fail");
    let (lo, hi) = (vals[0], vals[k - 1]);
    let beta_last = betas.last().copied().unwrap_or(0.0);
    let pad = 0.01 * (hi - lo).max(1.0) + beta_last;
    (lo - pad, hi + pad)
}

/// Options for the block Lanczos windowed eigensolver.
#[derive(Clone, Debug)]
pub struct LanczosOpts {
    pub block_size: usize,
    pub max_basis: usize,
    pub tol: f64,
    pub seed: u64,
    /// Re-check convergence after this many additional blocks.
    pub check_every: usize,
}

impl Default for LanczosOpts {
    fn default() -> Self {
        LanczosOpts {
            block_size: 4,
            max_basis: 1600,
            tol: 1e-9,
            seed: 0x5eed,
            check_every: 12,
        }
    }
}

/// All eigenpairs of a symmetric operator with eigenvalue `≤ cutoff`.
///
/// Block Lanczos with full reorthogonalization. Iterates until every Ritz
/// value below the cutoff has residual `‖Av - θv‖ ≤ tol·scale` and the count
/// below the cutoff is stable between consecutive convergence checks; the
/// block structure picks up degenerate clusters up to the block size.
pub fn lowest_eigenpairs_below<F>(
    dim: usize,
    mut apply: F,
    cutoff: f64,
    opts: &LanczosOpts,
) -> Result<(Vec<f64>, MatBuf)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let bs = opts.block_size.min(dim).max(1);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    // Q holds the orthonormal basis, one column per Lanczos vector.
    let mut q = MatBuf::zeros(dim, 0);
    let mut new_block = MatBuf::zeros(dim, bs);
    for j in 0..bs {
        for v in new_block.col_mut(j) {
            *v = rng.random::<f64>() - 0.5;
        }
    }
    orthonormalize_against(&mut new_block, &q, &mut rng);

    // Block tridiagonal T stored dense (small).
    let mut t_entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut prev_b: Option<MatBuf> = None; // bs×bs upper-triangular factor
    let mut block_start = 0usize;
    let mut last_count: Option<usize> = None;
    let mut blocks_since_check = 0usize;
    let mut w_col = vec![0.0f64; dim];

    loop {
        // W = A * V_j
        let mut w = MatBuf::zeros(dim, bs);
        for j in 0..bs {
            apply(new_block.col(j), &mut w_col);
            w.col_mut(j).copy_from_slice(&w_col);
        }
        // M_j = V_jᵀ W (symmetrized for bookkeeping)
        let m_j = dgemm(true, false, 1.0, &new_block, &w);
        for i in 0..bs {
            for j in 0..bs {
                let v = 0.5 * (m_j.get(i, j) + m_j.get(j, i));
                if v != 0.0 {
                    t_entries.push((block_start + i, block_start + j, v));
                }
            }
        }
        // W -= V_j M_j  and  W -= V_{j-1} B_{j-1}ᵀ
        let correction = dgemm(false, false, 1.0, &new_block, &m_j);
        for (wv, cv) in w.data.iter_mut().zip(&correction.data) {
            *wv -= cv;
        }
        if let Some(bprev) = &prev_b {
            let prev_cols = q.cols - 2 * bs..q.cols - bs;
            let vprev = q.select_cols(&prev_cols.collect::<Vec<_>>());
            let corr = dgemm(false, true, 1.0, &vprev, bprev);
            for (wv, cv) in w.data.iter_mut().zip(&corr.data) {
                *wv -= cv;
            }
        }

        // Append V_j to Q now so reorthogonalization covers it too.
        let old_cols = q.cols;
        let mut q_new = MatBuf::zeros(dim, old_cols + bs);
        q_new.data[..old_cols * dim].copy_from_slice(&q.data);
        q_new.data[old_cols * dim..].copy_from_slice(&new_block.data);
        q = q_new;

        // Full reorthogonalization (two passes) then QR of W.
        let b_j = orthonormalize_against(&mut w, &q, &mut rng);
        for i in 0..bs {
            for j in 0..bs {
                let v = b_j.get(i, j);
                if v != 0.0 {
                    // B_j couples block j+1 rows to block j columns.
                    t_entries.push((block_start + bs + i, block_start + j, v));
                    t_entries.push((block_start + j, block_start + bs + i, v));
                }
            }
        }
        prev_b = Some(b_j);

        block_start += bs;
        blocks_since_check += 1;
        let basis = q.cols;
        let exhausted = basis + bs > opts.max_basis || basis + bs >= dim;

        if blocks_since_check >= opts.check_every || exhausted {
            blocks_since_check = 0;
            let p = basis;
            let mut t = MatBuf::zeros(p, p);
            for &(i, j, v) in &t_entries {
                if i < p && j < p {
                    t.set(i, j, v);
                }
            }
            let vals = eigh_inplace(&mut t)?;
            let scale = vals
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()))
                .max(1.0);
            // Residual bound per Ritz pair: ‖B_j · y_tail‖.
            let tail_rows = block_start..p;
            let mut below: Vec<usize> = Vec::new();
            let mut all_converged = true;
            for (idx, &th) in vals.iter().enumerate() {
                if th > cutoff {
                    break;
                }
                below.push(idx);
                let y = t.col(idx);
                let mut tail_norm = 0.0;
                for r in tail_rows.clone() {
                    tail_norm += y[r] * y[r];
                }
                // Couple through the most recent off-diagonal block.
                let resid = tail_norm.sqrt() * b_norm_estimate(&t_entries, block_start, p);
                if resid > opts.tol * scale {
                    all_converged = false;
                    break;
                }
            }
            let count = below.len();
            if (all_converged && Some(count) == last_count && count > 0)
                || (all_converged && count == 0 && last_count == Some(0))
            {
                // Ritz vectors for the converged set.
                let y_sel = t.select_cols(&below);
                let x = dgemm(false, false, 1.0, &q, &y_sel);
                let lam: Vec<f64> = below.iter().map(|&i| vals[i]).collect();
                return Ok((lam, x));
            }
            last_count = Some(count);
            if exhausted {
                return Err(Error::EigensolverFailure(format!(
                    "block Lanczos basis exhausted at {basis} vectors \
                     ({count} Ritz values below cutoff, converged = {all_converged})"
                )));
            }
        }
        new_block = w;
    }
}

fn b_norm_estimate(entries: &[(usize, usize, f64)], block_start: usize, p: usize) -> f64 {
    // Frobenius norm of the trailing off-diagonal block.
    let mut s = 0.0;
    for &(i, j, v) in entries {
        if i >= block_start && i < p && j < block_start {
            s += v * v;
        }
    }
    s.sqrt().max(1e-300)
}

/// Orthonormalize the columns of `w` against `q` and among themselves
/// (two Gram-Schmidt passes). Returns the triangular factor relating the
/// input block to the output block. Columns that lose all mass (invariant
/// subspace hit) are replaced with fresh random directions; their factor
/// entries stay at the tiny measured norm.
fn orthonormalize_against(w: &mut MatBuf, q: &MatBuf, rng: &mut ChaCha20Rng) -> MatBuf {
    let bs = w.cols;
    let dim = w.rows;
    let mut r = MatBuf::zeros(bs, bs);
    for _pass in 0..2 {
        if q.cols > 0 {
            let coeff = dgemm(true, false, 1.0, q, w);
            let corr = dgemm(false, false, 1.0, q, &coeff);
            for (wv, cv) in w.data.iter_mut().zip(&corr.data) {
                *wv -= cv;
            }
        }
    }
    for j in 0..bs {
        for _pass in 0..2 {
            for i in 0..j {
                let c = {
                    let (wi, wj) = col_pair(w, i, j);
                    dot(wi, wj)
                };
                r.set(i, j, r.get(i, j) + c);
                let (wi, wj) = col_pair_mut(w, i, j);
                for (a, b) in wj.iter_mut().zip(wi.iter()) {
                    *a -= c * *b;
                }
            }
        }
        let nj = norm(w.col(j));
        r.set(j, j, nj);
        if nj < 1e-12 {
            // invariant subspace: restart this column with a random direction
            for v in w.col_mut(j) {
                *v = rng.random::<f64>() - 0.5;
            }
            if q.cols > 0 {
                let mut wj = w.col(j).to_vec();
                for _ in 0..2 {
                    let coeffs: Vec<f64> =
                        (0..q.cols).map(|k| dot(q.col(k), &wj)).collect();
                    for (k, c) in coeffs.iter().enumerate() {
                        let qc = q.col(k);
                        for i in 0..dim {
                            wj[i] -= c * qc[i];
                        }
                    }
                }
                w.col_mut(j).copy_from_slice(&wj);
            }
            for i in 0..j {
                let c = {
                    let (wi, wj) = col_pair(w, i, j);
                    dot(wi, wj)
                };
                let (wi, wj) = col_pair_mut(w, i, j);
                for (a, b) in wj.iter_mut().zip(wi.iter()) {
                    *a -= c * *b;
                }
            }
            let n2 = norm(w.col(j));
            for v in w.col_mut(j) {
                *v /= n2;
            }
        } else {
            for v in w.col_mut(j) {
                *v /= nj;
            }
        }
    }
    r
}

fn col_pair<'a>(m: &'a MatBuf, i: usize, j: usize) -> (&'a [f64], &'a [f64]) {
    assert!(i < j);
    let (head, tail) = m.data.split_at(j * m.rows);
    (&head[i * m.rows..(i + 1) * m.rows], &tail[..m.rows])
}

fn col_pair_mut<'a>(m: &'a mut MatBuf, i: usize, j: usize) -> (&'a [f64], &'a mut [f64]) {
    assert!(i < j);
    let rows = m.rows;
    let (head, tail) = m.data.split_at_mut(j * rows);
    (&head[i * rows..(i + 1) * rows], &mut tail[..rows])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> Csr {
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, 2.0));
            if i + 1 < n {
                trips.push((i, i + 1, -1.0));
                trips.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, n, trips)
    }

    #[test]
    fn eigh_matches_tridiagonal_formula() {
        let n = 64;
        let a = tridiag(n);
        let mut d = a.to_dense();
        let vals = eigh_inplace(&mut d).unwrap();
        for (k, &v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-10, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn csr_roundtrip_and_products() {
        let a = tridiag(8);
        let at = a.transpose();
        assert_eq!(a.structure_defect(false), 0.0);
        let prod = a.matmul(&at);
        let d = prod.to_dense();
        // (A Aᵀ) symmetric
        for i in 0..8 {
            for j in 0..8 {
                assert!((d.get(i, j) - d.get(j, i)).abs() < 1e-14);
            }
        }
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y1 = prod.apply_vec(&x);
        let y2 = a.apply_vec(&at.apply_vec(&x));
        for (u, v) in y1.iter().zip(&y2) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn block_lanczos_finds_low_spectrum() {
        let n = 600;
        let a = tridiag(n);
        let cutoff = 0.05; // ~ lowest handful of eigenvalues
        let opts = LanczosOpts::default();
        let (vals, vecs) = lowest_eigenpairs_below(n, |x, y| a.apply(x, y), cutoff, &opts).unwrap();
        assert!(!vals.is_empty());
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .filter(|&v| v <= cutoff)
            .collect();
        assert_eq!(vals.len(), exact.len());
        for (v, e) in vals.iter().zip(&exact) {
            assert!((v - e).abs() < 1e-8, "{v} vs {e}");
        }
        // residual check
        for (j, &lam) in vals.iter().enumerate() {
            let x = vecs.col(j);
            let mut ax = vec![0.0; n];
            a.apply(x, &mut ax);
            let res: f64 = ax
                .iter()
                .zip(x)
                .map(|(av, xv)| (av - lam * xv).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-7, "residual {res}");
        }
    }

    #[test]
    fn spectral_bounds_enclose() {
        let n = 400;
        let a = tridiag(n);
        let (lo, hi) = spectral_bounds(n, |x, y| a.apply(x, y), 60, 7);
        assert!(lo <= 0.001);
        assert!(hi >= 3.999);
    }
}
