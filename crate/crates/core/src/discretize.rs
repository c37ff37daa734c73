//! Assembly of discrete operators: Dirichlet Laplacian, the full coupled
//! operator `P`, subsystem operators `P^a`, dilation generators `A` and
//! `A_V`, and finite-difference helper modes.
//!
//! Conventions: second-order central differences on the cell-centered grid
//! with zero ghost values (homogeneous Dirichlet at the walls `±(L + h/2)`);
//! first-order coupling terms are assembled in the anti-symmetrized form
//! `(r̃·D + D·r̃)/2` and the `(k, j)` block is the transpose of the `(j, k)`
//! block, so `P` is symmetric by construction.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{Csr, MatBuf};
use crate::model::{Mode, ProblemSpec, WeightFn};
use crate::operator::{DiscreteOperator, OpKind};

/// Single-channel `-Δ` with homogeneous Dirichlet boundary.
pub fn laplacian_csr(grid: &Grid) -> Csr {
    let n = grid.points_per_axis;
    let h2 = grid.spacing() * grid.spacing();
    let npts = grid.len();
    let mut trips = Vec::with_capacity(npts * (1 + 2 * grid.dim));
    match grid.dim {
        1 => {
            for i in 0..n {
                trips.push((i, i, 2.0 / h2));
                if i + 1 < n {
                    trips.push((i, i + 1, -1.0 / h2));
                    trips.push((i + 1, i, -1.0 / h2));
                }
            }
        }
        2 => {
            let idx = |ix: usize, iy: usize| iy * n + ix;
            for iy in 0..n {
                for ix in 0..n {
                    let p = idx(ix, iy);
                    trips.push((p, p, 4.0 / h2));
                    if ix + 1 < n {
                        trips.push((p, idx(ix + 1, iy), -1.0 / h2));
                        trips.push((idx(ix + 1, iy), p, -1.0 / h2));
                    }
                    if iy + 1 < n {
                        trips.push((p, idx(ix, iy + 1), -1.0 / h2));
                        trips.push((idx(ix, iy + 1), p, -1.0 / h2));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Csr::from_triplets(npts, npts, trips)
}

/// Central-difference gradient along one axis (exactly antisymmetric).
pub fn gradient_csr(grid: &Grid, axis: usize) -> Csr {
    let n = grid.points_per_axis;
    let two_h = 2.0 * grid.spacing();
    let npts = grid.len();
    let mut trips = Vec::with_capacity(2 * npts);
    let stride = match (grid.dim, axis) {
        (1, 0) => 1,
        (2, 0) => 1,
        (2, 1) => n,
        _ => panic!("axis {axis} out of range for {}D grid", grid.dim),
    };
    let axis_index = |p: usize| -> usize {
        if stride == 1 {
            p % n
        } else {
            p / n
        }
    };
    for p in 0..npts {
        let i = axis_index(p);
        if i + 1 < n {
            trips.push((p, p + stride, 1.0 / two_h));
            trips.push((p + stride, p, -1.0 / two_h));
        }
    }
    Csr::from_triplets(npts, npts, trips)
}

/// `-Δ` as a single-channel [`DiscreteOperator`].
pub fn build_laplacian(grid: &Grid) -> DiscreteOperator {
    DiscreteOperator::new(OpKind::Symmetric, grid.clone(), 1, laplacian_csr(grid))
}

/// The generator of dilations `A = (x·p + p·x)/2`, stored as `-i·M` with
/// `M = (x·D + D·x)/2` exactly antisymmetric.
pub fn build_a(grid: &Grid) -> DiscreteOperator {
    let npts = grid.len();
    let mut m = Csr::zeros(npts, npts);
    for axis in 0..grid.dim {
        let d = gradient_csr(grid, axis);
        let coords: Vec<f64> = (0..npts).map(|p| grid.point(p)[axis]).collect();
        let x = Csr::diag(&coords);
        let xd = x.matmul(&d);
        let dx = d.matmul(&x);
        m = m.add_scaled(1.0, &xd.add_scaled(0.5, &dx, 0.5), 1.0);
    }
    DiscreteOperator::new(OpKind::SkewGenerator, grid.clone(), 1, m)
}

/// The adapted generator `A_V = ∇a·p + p·∇a`, stored as `-i·M` with
/// `M = ∇a·D + D·∇a`. With β = 0 this reproduces [`build_a`] exactly.
pub fn build_av(grid: &Grid, weight: &WeightFn) -> DiscreteOperator {
    let npts = grid.len();
    let grads: Vec<Vec<f64>> = (0..npts).map(|p| weight.grad(&grid.point(p))).collect();
    let mut m = Csr::zeros(npts, npts);
    for axis in 0..grid.dim {
        let d = gradient_csr(grid, axis);
        let w: Vec<f64> = grads.iter().map(|g| g[axis]).collect();
        let wdiag = Csr::diag(&w);
        let wd = wdiag.matmul(&d);
        let dw = d.matmul(&wdiag);
        m = m.add_scaled(1.0, &wd.add_scaled(1.0, &dw, 1.0), 1.0);
    }
    DiscreteOperator::new(OpKind::SkewGenerator, grid.clone(), 1, m)
}

/// Per-block scalar data for the generic channel-space assembler.
struct BlockCoeffs {
    /// per-channel potential values on the grid
    potentials: Vec<Vec<f64>>,
    /// (j, k, per-axis r̃ values, r̂ values) with j ≤ k
    couplings: Vec<(usize, usize, Vec<Vec<f64>>, Vec<f64>)>,
}

fn assemble(grid: &Grid, channels: usize, coeffs: &BlockCoeffs) -> DiscreteOperator {
    let npts = grid.len();
    let dim_total = channels * npts;
    let lap = laplacian_csr(grid);
    let grads: Vec<Csr> = (0..grid.dim).map(|a| gradient_csr(grid, a)).collect();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let push_block = |mat: &Csr, jb: usize, kb: usize, trips: &mut Vec<(usize, usize, f64)>| {
        let (ro, co) = (jb * npts, kb * npts);
        for r in 0..mat.rows {
            for idx in mat.indptr[r]..mat.indptr[r + 1] {
                trips.push((ro + r, co + mat.indices[idx], mat.data[idx]));
            }
        }
    };
    for (j, v) in coeffs.potentials.iter().enumerate() {
        push_block(&lap, j, j, &mut trips);
        push_block(&Csr::diag(v), j, j, &mut trips);
    }
    for (j, k, r_tilde, r_hat) in &coeffs.couplings {
        // first-order part in anti-symmetrized form
        let mut block = Csr::diag(r_hat);
        for (axis, w) in r_tilde.iter().enumerate() {
            let wdiag = Csr::diag(w);
            let wd = wdiag.matmul(&grads[axis]);
            let dw = grads[axis].matmul(&wdiag);
            block = block.add_scaled(1.0, &wd.add_scaled(0.5, &dw, 0.5), 1.0);
        }
        if j == k {
            // diagonal coupling blocks are Hermitized; the antisymmetric
            // first-order part cancels and only the multiplication survives
            let sym = block.symmetrize(false);
            push_block(&sym, *j, *j, &mut trips);
        } else {
            let blockt = block.transpose();
            push_block(&block, *j, *k, &mut trips);
            push_block(&blockt, *k, *j, &mut trips);
        }
    }
    let mat = Csr::from_triplets(dim_total, dim_total, trips);
    DiscreteOperator::new(OpKind::Symmetric, grid.clone(), channels, mat)
}

/// Channel potential values on the grid.
pub fn potential_on_grid(spec: &ProblemSpec, grid: &Grid, j: usize) -> Vec<f64> {
    grid.evaluate(|x| spec.potential_value(j, x))
}

/// The full multistate operator `P = diag(-Δ + V_1, …, -Δ + V_m) + R`.
pub fn build_p(spec: &ProblemSpec, grid: &Grid) -> Result<DiscreteOperator> {
    spec.validate_structure()?;
    if grid.dim != spec.ambient_dim {
        return Err(Error::SpecInvalid(format!(
            "grid dimension {} does not match spec ambient dimension {}",
            grid.dim, spec.ambient_dim
        )));
    }
    let potentials = (0..spec.channel_count)
        .map(|j| potential_on_grid(spec, grid, j))
        .collect();
    let couplings = spec
        .couplings
        .iter()
        .map(|c| {
            let r_tilde: Vec<Vec<f64>> = (0..grid.dim)
                .map(|axis| grid.evaluate(|x| c.r_tilde_value(x)[axis]))
                .collect();
            let r_hat = grid.evaluate(|x| c.r_hat_value(x));
            (c.j, c.k, r_tilde, r_hat)
        })
        .collect();
    Ok(assemble(
        grid,
        spec.channel_count,
        &BlockCoeffs {
            potentials,
            couplings,
        },
    ))
}

/// A subsystem operator `P^a` on the internal space `X^a`, or the bare
/// channel constants when `X^a = {0}`.
pub enum Subsystem {
    /// `X^a = {0}`: the subsystem is `diag(c_1, …, c_m)` without a grid.
    Constant { constants: Vec<f64> },
    Operator {
        op: DiscreteOperator,
        grid: Grid,
        /// columns span `X^a` inside the ambient space
        embedding: MatBuf,
    },
}

/// Restrict the many-body data to the internal space of lattice element `a`,
/// keeping exactly the terms with `b ≤ a`.
pub fn build_subsystem(spec: &ProblemSpec, parent: &Grid, a: usize) -> Result<Subsystem> {
    if spec.mode != Mode::ManyBody {
        return Err(Error::NotManyBody);
    }
    let lat = spec
        .lattice
        .as_ref()
        .ok_or_else(|| Error::SpecInvalid("many-body spec has no lattice".into()))?;
    lat.element(a)?;
    let embedding = lat.complement_basis(a)?;
    let internal_dim = embedding.cols;
    if internal_dim == 0 {
        return Ok(Subsystem::Constant {
            constants: spec.potentials.iter().map(|p| p.constant).collect(),
        });
    }
    let grid = Grid::new(internal_dim, parent.half_width, parent.points_per_axis);
    let embed = |xi: &[f64]| -> Vec<f64> {
        (0..spec.ambient_dim)
            .map(|i| (0..internal_dim).map(|l| embedding.get(i, l) * xi[l]).sum())
            .collect()
    };
    let potentials: Vec<Vec<f64>> = (0..spec.channel_count)
        .map(|j| {
            grid.evaluate(|xi| {
                let x = embed(xi);
                let mut v = spec.potentials[j].constant;
                for t in &spec.potentials[j].manybody_terms {
                    if lat.leq(t.element, a) {
                        v += t.value(&x);
                    }
                }
                v
            })
        })
        .collect();
    let mut couplings = Vec::new();
    for c in &spec.couplings {
        let b = c
            .lattice_element
            .ok_or_else(|| Error::SpecInvalid("many-body coupling without element".into()))?;
        if !lat.leq(b, a) {
            continue;
        }
        // r̃ is X^b-valued; its sub-grid components are Eᵀ r̃
        let r_tilde: Vec<Vec<f64>> = (0..internal_dim)
            .map(|axis| {
                grid.evaluate(|xi| {
                    let x = embed(xi);
                    let w = c.r_tilde_value(&x);
                    (0..spec.ambient_dim)
                        .map(|i| embedding.get(i, axis) * w[i])
                        .sum()
                })
            })
            .collect();
        let r_hat = grid.evaluate(|xi| c.r_hat_value(&embed(xi)));
        couplings.push((c.j, c.k, r_tilde, r_hat));
    }
    let op = assemble(
        &grid,
        spec.channel_count,
        &BlockCoeffs {
            potentials,
            couplings,
        },
    );
    Ok(Subsystem::Operator {
        op,
        grid,
        embedding,
    })
}

/// Exact eigenvalue of the discrete Dirichlet Laplacian for the sine mode
/// with index `k ≥ 1` along one axis: `(2/h²)(1 - cos(kπh/(2L̃)))` with
/// `2L̃ = 2L + h` the wall separation.
pub fn dirichlet_eigenvalue_1d(grid: &Grid, k: usize) -> f64 {
    let h = grid.spacing();
    let n = grid.points_per_axis;
    (2.0 / (h * h)) * (1.0 - (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
}

/// Normalized sine eigenmode of the Dirichlet Laplacian (tensor product in
/// 2D), exact on the discrete grid.
pub fn sine_mode(grid: &Grid, ks: &[usize]) -> Vec<f64> {
    assert_eq!(ks.len(), grid.dim);
    let n = grid.points_per_axis;
    let axis_mode = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n)
            .map(|i| ((i as f64 + 1.0) * k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin())
            .collect();
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        v
    };
    match grid.dim {
        1 => axis_mode(ks[0]),
        2 => {
            let (mx, my) = (axis_mode(ks[0]), axis_mode(ks[1]));
            let mut out = Vec::with_capacity(n * n);
            for y in 0..n {
                for x in 0..n {
                    out.push(mx[x] * my[y]);
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh_inplace;
    use crate::model::{AngularPreset, ChannelPotential, CouplingTerm, RadialPreset, VectorPreset};
    use crate::operator::commutator;

    #[test]
    fn laplacian_constant_interior_and_sine_modes() {
        let grid = Grid::new(1, 10.0, 64);
        let lap = build_laplacian(&grid);
        // constant vector: zero in the interior (boundary rows feel the wall)
        let ones = vec![1.0; 64];
        let mut out = vec![0.0; 64];
        lap.apply_real(&ones, &mut out);
        for v in &out[1..63] {
            assert!(v.abs() < 1e-12);
        }
        // sine modes are exact eigenvectors
        for k in [1usize, 3, 11] {
            let mode = sine_mode(&grid, &[k]);
            let ev = dirichlet_eigenvalue_1d(&grid, k);
            let mut lm = vec![0.0; 64];
            lap.apply_real(&mode, &mut lm);
            for (a, b) in lm.iter().zip(&mode) {
                assert!((a - ev * b).abs() < 1e-9, "mode {k}");
            }
        }
    }

    #[test]
    fn laplacian_smallest_eigenvalue_near_continuum() {
        // L = 10, N = 256: smallest eigenvalue ≈ (π/20)² within 1%
        let grid = Grid::new(1, 10.0, 256);
        let lap = build_laplacian(&grid);
        let mut dense = lap.dense();
        let vals = eigh_inplace(&mut dense).unwrap();
        let target = (std::f64::consts::PI / 20.0).powi(2);
        assert!(
            (vals[0] - target).abs() / target < 0.01,
            "{} vs {target}",
            vals[0]
        );
        // Dirichlet positivity
        assert!(vals[0] > 0.0);
    }

    #[test]
    fn dilation_generator_structure() {
        let grid = Grid::new(1, 8.0, 128);
        let a = build_a(&grid);
        assert_eq!(a.hermitian_defect, 0.0, "antisymmetric by construction");
        // parity: A maps an even real vector to an odd one (times -i)
        let even: Vec<f64> = (0..128)
            .map(|p| (-grid.point(p)[0].powi(2) / 4.0).exp())
            .collect();
        let state = crate::grid::DiscreteState::from_real(1, &even);
        let out = a.apply(&state);
        // output purely imaginary, odd
        for p in 0..128 {
            assert!(out.values[p].re.abs() < 1e-14);
            let q = 127 - p;
            assert!((out.values[p].im + out.values[q].im).abs() < 1e-10);
        }
        // ⟨u, Au⟩ real for a complex test vector
        let mut z = crate::grid::DiscreteState::zeros(1, 128);
        for (i, v) in z.values.iter_mut().enumerate() {
            *v = num_complex::Complex64::new((i as f64 * 0.1).sin(), (i as f64 * 0.2).cos());
        }
        let az = a.apply(&z);
        assert!(z.inner(&az).im.abs() < 1e-10 * z.norm_sq());
    }

    #[test]
    fn gaussian_packet_dilation_expectation() {
        // ⟨A⟩ on a Gaussian with center x0 and momentum k0 is x0·k0
        let grid = Grid::new(1, 20.0, 512);
        let a = build_a(&grid);
        let (x0, k0, sigma) = (3.0, 1.4, 2.0);
        let mut psi = crate::grid::DiscreteState::zeros(1, 512);
        for p in 0..512 {
            let x = grid.point(p)[0];
            let amp = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            psi.values[p] = num_complex::Complex64::from_polar(amp, k0 * x);
        }
        psi.normalize();
        let got = a.expectation(&psi);
        let expect = x0 * k0;
        assert!(
            (got - expect).abs() < 0.02 * expect.abs().max(1.0),
            "⟨A⟩ = {got}, expected {expect}"
        );
    }

    #[test]
    fn av_with_beta_zero_equals_a() {
        let grid = Grid::new(2, 6.0, 24);
        let spec = ProblemSpec {
            channel_count: 1,
            ambient_dim: 2,
            mode: Mode::Homogeneous,
            potentials: vec![ChannelPotential {
                homogeneous: Some(AngularPreset::CosineHomogeneous {
                    amplitude: 1.0,
                    harmonic: 1,
                    phase: 0.0,
                    offset: 0.0,
                }),
                decaying: None,
                constant: 0.0,
                manybody_terms: Vec::new(),
            }],
            couplings: Vec::new(),
            lattice: None,
        };
        let w = crate::model::weight_a(&spec, &[crate::model::CutoffFn::One], 0.0).unwrap();
        let av = build_av(&grid, &w);
        let a = build_a(&grid);
        let diff = av.matrix().add_scaled(1.0, a.matrix(), -1.0);
        let worst = diff.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(worst < 1e-12, "A_V(β=0) deviates from A by {worst}");
    }

    #[test]
    fn commutator_of_multiplier_with_a_is_radial_derivative() {
        // i[V, A] = -x·∇V for a multiplication operator
        let grid = Grid::new(1, 12.0, 256);
        let vvals: Vec<f64> = (0..256)
            .map(|p| {
                let x = grid.point(p)[0];
                (-x * x / 4.0).exp()
            })
            .collect();
        let v = DiscreteOperator::new(
            OpKind::Symmetric,
            grid.clone(),
            1,
            Csr::diag(&vvals),
        );
        let a = build_a(&grid);
        let c = commutator(&v, &a).unwrap();
        // expected multiplier: -x·V'(x) = x²/2·exp(-x²/4)
        let probe = sine_mode(&grid, &[3]);
        let mut got = vec![0.0; 256];
        c.apply_real(&probe, &mut got);
        for p in 2..254 {
            let x = grid.point(p)[0];
            let expected = (x * x / 2.0) * (-x * x / 4.0).exp() * probe[p];
            assert!(
                (got[p] - expected).abs() < 5e-3,
                "at x = {x}: {} vs {expected}",
                got[p]
            );
        }
    }

    #[test]
    fn block_structure_and_constant_coupling_split() {
        // m = 2, V = 0, r̂ = g constant: spectrum splits into -Δ ± g
        let grid = Grid::new(1, 10.0, 96);
        let g = 0.35;
        let spec = ProblemSpec {
            channel_count: 2,
            ambient_dim: 1,
            mode: Mode::Decaying,
            potentials: vec![
                ChannelPotential::constant_only(0.0),
                ChannelPotential::constant_only(0.0),
            ],
            couplings: vec![CouplingTerm {
                j: 0,
                k: 1,
                r_tilde: VectorPreset::Zero,
                r_hat: RadialPreset::Constant { value: g },
                lattice_element: None,
                decay_rate: 0.0,
                projector: None,
            }],
            lattice: None,
        };
        let p = build_p(&spec, &grid).unwrap();
        assert_eq!(p.hermitian_defect, 0.0);
        let mut dense = p.dense();
        let vals = eigh_inplace(&mut dense).unwrap();
        let mut expected: Vec<f64> = (1..=96)
            .flat_map(|k| {
                let e = dirichlet_eigenvalue_1d(&grid, k);
                [e - g, e + g]
            })
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip(&expected) {
            assert!((v - e).abs() < 1e-9, "{v} vs {e}");
        }
    }

    #[test]
    fn single_channel_reduces_to_scalar_operator() {
        let grid = Grid::new(1, 10.0, 64);
        let spec = ProblemSpec {
            channel_count: 1,
            ambient_dim: 1,
            mode: Mode::Decaying,
            potentials: vec![ChannelPotential {
                homogeneous: None,
                decaying: Some((
                    RadialPreset::GaussianWell {
                        depth: -2.0,
                        width: 1.0,
                    },
                    0.0,
                )),
                constant: 0.0,
                manybody_terms: Vec::new(),
            }],
            couplings: Vec::new(),
            lattice: None,
        };
        let p = build_p(&spec, &grid).unwrap();
        let lap = laplacian_csr(&grid);
        let vvals = potential_on_grid(&spec, &grid, 0);
        let direct = lap.add_scaled(1.0, &Csr::diag(&vvals), 1.0);
        let diff = p.matrix().add_scaled(1.0, &direct, -1.0);
        assert!(diff.data.iter().all(|v| v.abs() < 1e-14));
    }
}
