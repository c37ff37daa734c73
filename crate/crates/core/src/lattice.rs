//! Intersection-closed families of subspaces of ℝⁿ.
//!
//! A generalized many-body structure is described by a finite family of
//! subspaces `{X_a}` that contains the full space, is closed under pairwise
//! intersection, and whose total intersection is `{0}`. The partial order is
//! `a ≤ b iff X_a ⊇ X_b`, so the full space is the minimal element and `{0}`
//! the maximal one.

use crate::error::{Error, Result};
use crate::jsonio;
use crate::linalg::{eigh_inplace, MatBuf};
use serde::{Deserialize, Serialize};

/// Numerical tolerance for subspace inclusion/equality decisions.
pub const INCLUSION_TOL: f64 = 1e-10;
/// Orthonormality tolerance on stored bases.
pub const BASIS_TOL: f64 = 1e-12;

/// A linear subspace of ℝⁿ stored through an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    /// n × k, orthonormal columns. k = 0 encodes the zero subspace.
    basis: MatBuf,
}

impl Subspace {
    /// Build from spanning vectors; the input must have full column rank.
    pub fn from_vectors(ambient: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::SpecInvalid(format!(
                    "generator vector has length {} in ambient dimension {}",
                    v.len(),
                    ambient
                )));
            }
        }
        let cols = vectors.len();
        let mut basis = MatBuf::from_cols(ambient, vectors.to_vec());
        let rank = orthonormalize_columns(&mut basis);
        if rank < cols {
            return Err(Error::DegenerateGenerator { rank, cols });
        }
        Ok(Subspace { ambient, basis })
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: MatBuf::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: MatBuf::identity(ambient),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.cols
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &MatBuf {
        &self.basis
    }

    /// Orthogonal projector onto the subspace, `Π = B Bᵀ`.
    pub fn projector(&self) -> MatBuf {
        if self.dim() == 0 {
            return MatBuf::zeros(self.ambient, self.ambient);
        }
        crate::linalg::dgemm(false, true, 1.0, &self.basis, &self.basis)
    }

    /// Largest violation of pairwise orthonormality among basis columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let d: f64 = self
                    .basis
                    .col(i)
                    .iter()
                    .zip(self.basis.col(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    /// X_a ∩ X_b via the null space of the stacked complement projectors:
    /// x is in the intersection iff `Π^a x = Π^b x = 0`, i.e. x lies in the
    /// kernel of `Π^a + Π^b` (rank decision at [`INCLUSION_TOL`]).
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        let n = self.ambient;
        let pa = self.projector();
        let pb = other.projector();
        let mut q = MatBuf::zeros(n, n);
        for i in 0..n * n {
            // complements: (I - Π_a) + (I - Π_b)
            q.data[i] = -pa.data[i] - pb.data[i];
        }
        for i in 0..n {
            q.data[i * n + i] += 2.0;
        }
        let vals = eigh_inplace(&mut q).expect("small symmetric eigensolve");
        let cols: Vec<Vec<f64>> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < INCLUSION_TOL)
            .map(|(i, _)| q.col(i).to_vec())
            .collect();
        let mut basis = MatBuf::from_cols(n, cols);
        let rank = orthonormalize_columns(&mut basis);
        basis = truncate_cols(&basis, rank);
        canonicalize(&mut basis);
        Subspace {
            ambient: n,
            basis,
        }
    }

    /// `self ⊇ other`, decided by `‖Π_self Π_other - Π_other‖ ≤ tol`.
    pub fn contains(&self, other: &Subspace) -> bool {
        let pa = self.projector();
        let pb = other.projector();
        let prod = crate::linalg::dgemm(false, false, 1.0, &pa, &pb);
        let mut worst = 0.0f64;
        for i in 0..prod.data.len() {
            worst = worst.max((prod.data[i] - pb.data[i]).abs());
        }
        worst <= INCLUSION_TOL
    }

    pub fn approx_eq(&self, other: &Subspace) -> bool {
        let pa = self.projector();
        let pb = other.projector();
        pa.data
            .iter()
            .zip(&pb.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            <= INCLUSION_TOL
    }
}

/// Orthogonal projector pair `(Π_a, Π^a)` with `Π_a + Π^a = I`.
#[derive(Clone, Debug)]
pub struct ProjectorPair {
    pub onto_subspace: MatBuf,
    pub onto_complement: MatBuf,
}

/// The intersection-closed family `{X_a}` with its semilattice order.
#[derive(Clone, Debug)]
pub struct SubspaceLattice {
    pub ambient_dim: usize,
    elements: Vec<Subspace>,
    /// `order[a][b] = true` iff `a ≤ b`, i.e. `X_a ⊇ X_b`.
    order: Vec<Vec<bool>>,
    pub a_min: usize,
    pub a_max: usize,
}

/// Smallest intersection-closed family containing the generators and the
/// full space. Fails if the intersection of all elements is not `{0}`.
pub fn generate_lattice(generators: &[Subspace], ambient_dim: usize) -> Result<SubspaceLattice> {
    for g in generators {
        if g.ambient_dim() != ambient_dim {
            return Err(Error::SpecInvalid(format!(
                "generator ambient dimension {} does not match {}",
                g.ambient_dim(),
                ambient_dim
            )));
        }
        if g.orthonormality_defect() > BASIS_TOL {
            return Err(Error::SpecInvalid(
                "generator basis is not orthonormal".into(),
            ));
        }
    }
    let mut elements: Vec<Subspace> = vec![Subspace::full(ambient_dim)];
    for g in generators {
        push_unique(&mut elements, g.clone());
    }
    // closure under pairwise intersection
    loop {
        let mut added = false;
        let snapshot = elements.len();
        for i in 0..snapshot {
            for j in (i + 1)..snapshot {
                let cap = elements[i].intersect(&elements[j]);
                if push_unique(&mut elements, cap) {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    // the intersection of everything is an element by closure; it must be {0}
    let min_dim = elements.iter().map(|e| e.dim()).min().unwrap();
    let total = elements
        .iter()
        .fold(Subspace::full(ambient_dim), |acc, e| acc.intersect(e));
    if total.dim() != 0 {
        return Err(Error::NonTrivialIntersection { dim: total.dim() });
    }
    debug_assert_eq!(min_dim, 0);

    // canonical ordering: dim descending, then lexicographic canonical basis
    for e in &mut elements {
        canonicalize(&mut e.basis);
    }
    elements.sort_by(|a, b| {
        b.dim()
            .cmp(&a.dim())
            .then_with(|| lex_cmp(&a.basis.data, &b.basis.data))
    });

    let n_el = elements.len();
    let mut order = vec![vec![false; n_el]; n_el];
    for a in 0..n_el {
        for b in 0..n_el {
            order[a][b] = elements[a].contains(&elements[b]);
        }
    }
    let a_min = 0;
    let a_max = n_el - 1;
    debug_assert_eq!(elements[a_min].dim(), ambient_dim);
    debug_assert_eq!(elements[a_max].dim(), 0);
    Ok(SubspaceLattice {
        ambient_dim,
        elements,
        order,
        a_min,
        a_max,
    })
}

impl SubspaceLattice {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, a: usize) -> Result<&Subspace> {
        self.elements.get(a).ok_or(Error::BadElement(a))
    }

    pub fn elements(&self) -> &[Subspace] {
        &self.elements
    }

    /// `a ≤ b`, i.e. `X_a ⊇ X_b`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.order[a][b]
    }

    /// Strict order `a < b`.
    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.order[a][b]
    }

    /// `(Π_a, Π^a)` for element `a`.
    pub fn projectors(&self, a: usize) -> Result<ProjectorPair> {
        let el = self.element(a)?;
        let onto = el.projector();
        let n = self.ambient_dim;
        let mut comp = MatBuf::zeros(n, n);
        for i in 0..n * n {
            comp.data[i] = -onto.data[i];
        }
        for i in 0..n {
            comp.data[i * n + i] += 1.0;
        }
        Ok(ProjectorPair {
            onto_subspace: onto,
            onto_complement: comp,
        })
    }

    /// Orthonormal basis of the complement `X^a` (canonicalized).
    pub fn complement_basis(&self, a: usize) -> Result<MatBuf> {
        let pair = self.projectors(a)?;
        let n = self.ambient_dim;
        let mut q = pair.onto_complement.clone();
        let vals = eigh_inplace(&mut q)?;
        let cols: Vec<Vec<f64>> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.5)
            .map(|(i, _)| q.col(i).to_vec())
            .collect();
        let mut basis = MatBuf::from_cols(n, cols);
        let rank = orthonormalize_columns(&mut basis);
        basis = truncate_cols(&basis, rank);
        canonicalize(&mut basis);
        Ok(basis)
    }

    /// Elements strictly between `a_min` and `a` in the order.
    pub fn strictly_between_min_and(&self, a: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&b| b != self.a_min && b != a && self.lt(b, a))
            .collect()
    }

    /// JSON serialization: basis vectors row-major at 17 significant digits,
    /// order as adjacency list.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct El {
            dim: usize,
            basis: Vec<Vec<f64>>,
        }
        #[derive(Serialize)]
        struct Doc {
            ambient_dim: usize,
            a_min: usize,
            a_max: usize,
            elements: Vec<El>,
            order: Vec<Vec<usize>>,
        }
        let elements = self
            .elements
            .iter()
            .map(|e| El {
                dim: e.dim(),
                basis: (0..e.dim()).map(|j| e.basis.col(j).to_vec()).collect(),
            })
            .collect();
        let order = (0..self.len())
            .map(|a| (0..self.len()).filter(|&b| self.leq(a, b)).collect())
            .collect();
        let doc = Doc {
            ambient_dim: self.ambient_dim,
            a_min: self.a_min,
            a_max: self.a_max,
            elements,
            order,
        };
        jsonio::to_string_sig17(&doc)
    }

    pub fn from_json(s: &str) -> Result<SubspaceLattice> {
        #[derive(Deserialize)]
        struct El {
            dim: usize,
            basis: Vec<Vec<f64>>,
        }
        #[derive(Deserialize)]
        struct Doc {
            ambient_dim: usize,
            elements: Vec<El>,
        }
        let doc: Doc = serde_json::from_str(s)?;
        let gens: Vec<Subspace> = doc
            .elements
            .iter()
            .filter(|e| e.dim > 0)
            .map(|e| Subspace::from_vectors(doc.ambient_dim, &e.basis))
            .collect::<Result<_>>()?;
        generate_lattice(&gens, doc.ambient_dim)
    }
}

fn push_unique(elements: &mut Vec<Subspace>, s: Subspace) -> bool {
    if elements.iter().any(|e| e.approx_eq(&s)) {
        false
    } else {
        elements.push(s);
        true
    }
}

/// Modified Gram-Schmidt with column pivoting; returns the numerical rank and
/// leaves the orthonormal columns in the leading positions.
fn orthonormalize_columns(m: &mut MatBuf) -> usize {
    let rows = m.rows;
    let cols = m.cols;
    let mut rank = 0usize;
    for _ in 0..cols {
        // pick the remaining column with largest norm
        let mut best = rank;
        let mut best_norm = -1.0;
        for j in rank..cols {
            let n: f64 = m.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > best_norm {
                best_norm = n;
                best = j;
            }
        }
        if best_norm < INCLUSION_TOL {
            break;
        }
        if best != rank {
            for i in 0..rows {
                m.data.swap(best * rows + i, rank * rows + i);
            }
        }
        let nrm: f64 = m.col(rank).iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in m.col_mut(rank) {
            *v /= nrm;
        }
        // two orthogonalization passes for the trailing columns
        for _pass in 0..2 {
            for j in (rank + 1)..cols {
                let c: f64 = {
                    let pivot = &m.data[rank * rows..(rank + 1) * rows];
                    m.data[j * rows..(j + 1) * rows]
                        .iter()
                        .zip(pivot)
                        .map(|(a, b)| a * b)
                        .sum()
                };
                let (head, tail) = m.data.split_at_mut(j * rows);
                let pivot = &head[rank * rows..(rank + 1) * rows];
                for (a, b) in tail[..rows].iter_mut().zip(pivot) {
                    *a -= c * *b;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn truncate_cols(m: &MatBuf, k: usize) -> MatBuf {
    MatBuf {
        rows: m.rows,
        cols: k,
        data: m.data[..m.rows * k].to_vec(),
    }
}

/// Deterministic basis: Gram-Schmidt of the projector columns with pivoting
/// (depends only on the subspace, not the input basis), signs fixed so the
/// largest-magnitude entry of each column is positive.
fn canonicalize(basis: &mut MatBuf) {
    if basis.cols == 0 {
        return;
    }
    let n = basis.rows;
    let proj = {
        let s = Subspace {
            ambient: n,
            basis: basis.clone(),
        };
        s.projector()
    };
    let mut cols = MatBuf {
        rows: n,
        cols: n,
        data: proj.data,
    };
    let rank = orthonormalize_columns(&mut cols);
    debug_assert_eq!(rank, basis.cols);
    let mut out = truncate_cols(&cols, rank);
    for j in 0..out.cols {
        let col = out.col(j);
        let mut imax = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[imax].abs() + 1e-14 {
                imax = i;
            }
        }
        if col[imax] < 0.0 {
            for v in out.col_mut(j) {
                *v = -*v;
            }
        }
    }
    *basis = out;
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap() {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(ambient: usize, k: usize) -> Subspace {
        let mut v = vec![0.0; ambient];
        v[k] = 1.0;
        Subspace::from_vectors(ambient, &[v]).unwrap()
    }

    #[test]
    fn two_axes_close_to_four_elements() {
        let lat = generate_lattice(&[axis(2, 0), axis(2, 1)], 2).unwrap();
        assert_eq!(lat.len(), 4);
        assert_eq!(lat.element(lat.a_min).unwrap().dim(), 2);
        assert_eq!(lat.element(lat.a_max).unwrap().dim(), 0);
        // x-axis and y-axis are incomparable
        let lines: Vec<usize> = (0..4).filter(|&a| lat.element(a).unwrap().dim() == 1).collect();
        assert_eq!(lines.len(), 2);
        assert!(!lat.leq(lines[0], lines[1]));
        assert!(!lat.leq(lines[1], lines[0]));
        // every line ≤ a_max, and a_min ≤ everything
        for a in 0..4 {
            assert!(lat.leq(lat.a_min, a));
            assert!(lat.leq(a, lat.a_max));
            assert!(lat.leq(a, a), "reflexivity");
        }
    }

    #[test]
    fn zero_generator_in_r1() {
        let lat = generate_lattice(&[Subspace::zero(1)], 1).unwrap();
        assert_eq!(lat.len(), 2);
        assert_eq!(lat.element(lat.a_min).unwrap().dim(), 1);
        assert_eq!(lat.element(lat.a_max).unwrap().dim(), 0);
    }

    #[test]
    fn three_lines_make_five_elements() {
        // oracle: brute-force closure — three distinct lines in R² pairwise
        // intersect in {0}, so the family is {R², l1, l2, l3, {0}}
        let l1 = axis(2, 0);
        let l2 = axis(2, 1);
        let l3 = Subspace::from_vectors(2, &[vec![1.0, 1.0]]).unwrap();
        let lat = generate_lattice(&[l1.clone(), l2.clone(), l3.clone()], 2).unwrap();
        assert_eq!(lat.len(), 5);
        // brute-force: every pairwise intersection is an element
        for i in 0..lat.len() {
            for j in 0..lat.len() {
                let cap = lat.element(i).unwrap().intersect(lat.element(j).unwrap());
                assert!(
                    lat.elements().iter().any(|e| e.approx_eq(&cap)),
                    "closure violated for pair ({i},{j})"
                );
            }
        }
        // each line ≤ a_max
        for a in 0..lat.len() {
            if lat.element(a).unwrap().dim() == 1 {
                assert!(lat.leq(a, lat.a_max));
            }
        }
    }

    #[test]
    fn nontrivial_intersection_rejected() {
        let err = generate_lattice(&[axis(2, 0)], 2).unwrap_err();
        match err {
            Error::NonTrivialIntersection { dim } => assert_eq!(dim, 1),
            e => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn degenerate_generator_rejected() {
        let err = Subspace::from_vectors(2, &[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap_err();
        match err {
            Error::DegenerateGenerator { rank, cols } => {
                assert_eq!(rank, 1);
                assert_eq!(cols, 2);
            }
            e => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn diagonal_line_projector() {
        let s = 0.5f64.sqrt();
        let d = Subspace::from_vectors(2, &[vec![s, s]]).unwrap();
        let p = d.projector();
        for v in &p.data {
            assert!((v - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn projector_pair_extremes() {
        let lat = generate_lattice(&[axis(2, 0), axis(2, 1)], 2).unwrap();
        let pmin = lat.projectors(lat.a_min).unwrap();
        let pmax = lat.projectors(lat.a_max).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((pmin.onto_subspace.get(i, j) - id).abs() < 1e-12);
                assert!(pmin.onto_complement.get(i, j).abs() < 1e-12);
                assert!(pmax.onto_subspace.get(i, j).abs() < 1e-12);
                assert!((pmax.onto_complement.get(i, j) - id).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_roundtrip_preserves_order() {
        let lat = generate_lattice(&[axis(2, 0), axis(2, 1)], 2).unwrap();
        let s = lat.to_json().unwrap();
        let lat2 = SubspaceLattice::from_json(&s).unwrap();
        assert_eq!(lat.len(), lat2.len());
        for a in 0..lat.len() {
            for b in 0..lat.len() {
                assert_eq!(lat.leq(a, b), lat2.leq(a, b));
            }
            assert!(lat.element(a).unwrap().approx_eq(lat2.element(a).unwrap()));
        }
    }
}
