//! Eigen-analysis: spectral windows `E_P(I)`, smooth filters `f(P)`,
//! Mourre-estimate certification with compact-remainder diagnostics,
//! threshold sets `𝒯^a` with the gap `d(λ)`, and essential-spectrum probes.
//!
//! Compactness of the Mourre remainder is replaced by its desk-scale shadow:
//! finitely many negative modes, each localized near the origin, with a
//! count that is stable under box growth.

use crate::chebyshev::ChebyshevExpansion;
use crate::discretize::{build_subsystem, laplacian_csr, potential_on_grid, Subsystem};
use crate::error::{Error, Result};
use crate::grid::{DiscreteState, Grid};
use crate::jsonio;
use crate::linalg::{dgemm, eigh_inplace, lowest_eigenpairs_below, spectral_bounds, Csr, LanczosOpts, MatBuf};
use crate::model::ProblemSpec;
use crate::operator::{commutator, DiscreteOperator, OpKind};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;

/// An open energy interval `I = (λ - δ, λ + δ)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralWindow {
    pub center: f64,
    pub half_width: f64,
}

impl SpectralWindow {
    pub fn new(center: f64, half_width: f64) -> Self {
        assert!(half_width > 0.0);
        SpectralWindow { center, half_width }
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, e: f64) -> bool {
        e > self.lo() && e < self.hi()
    }
}

/// Eigensolver routing and certification parameters.
#[derive(Clone, Debug)]
pub struct EigenEngine {
    /// dense path for operator dimension at or below this
    pub dense_cap: usize,
    pub lanczos: LanczosOpts,
    /// rerun the iterative path with a different seed and block size and
    /// require the same eigenvalue count in the window
    pub verify_iterative: bool,
    /// mass fraction radius (×L) for the localization metric
    pub localization_radius_frac: f64,
    /// a mode counts as "localized" above this mass fraction
    pub localized_threshold: f64,
    /// an eigenvector counts as "delocalized" below this mass fraction
    pub delocalized_threshold: f64,
    /// slack when counting negative modes of the restricted form
    pub mode_tol: f64,
    /// eigenvalues must sit this far below Σ^b to count as bound states
    pub embed_tol: f64,
}

impl Default for EigenEngine {
    fn default() -> Self {
        EigenEngine {
            dense_cap: 4200,
            lanczos: LanczosOpts::default(),
            verify_iterative: true,
            localization_radius_frac: 0.25,
            localized_threshold: 0.9,
            delocalized_threshold: 0.5,
            mode_tol: 1e-8,
            embed_tol: 1e-8,
        }
    }
}

/// Orthogonal projector onto the span of eigenvectors with eigenvalue in a
/// window, represented through the orthonormal eigenbasis.
pub struct WindowProjection {
    pub window: SpectralWindow,
    pub eigenvalues: Vec<f64>,
    /// dim × rank, orthonormal columns
    pub basis: MatBuf,
}

impl WindowProjection {
    pub fn rank(&self) -> usize {
        self.basis.cols
    }

    /// `U Uᵀ x`.
    pub fn project_real(&self, x: &[f64]) -> Vec<f64> {
        let k = self.rank();
        let dim = self.basis.rows;
        let mut out = vec![0.0; dim];
        for j in 0..k {
            let col = self.basis.col(j);
            let c: f64 = col.iter().zip(x).map(|(a, b)| a * b).sum();
            for (o, v) in out.iter_mut().zip(col) {
                *o += c * v;
            }
        }
        out
    }

    pub fn projector_dense(&self) -> MatBuf {
        if self.rank() == 0 {
            return MatBuf::zeros(self.basis.rows, self.basis.rows);
        }
        dgemm(false, true, 1.0, &self.basis, &self.basis)
    }
}

/// All eigenpairs of a symmetric operator with eigenvalue below `cutoff`.
///
/// Dense path when the dimension is within the cap, block Lanczos otherwise
/// (with an optional independent re-run as a missed-eigenvalue guard).
pub fn eigenpairs_below(
    op: &DiscreteOperator,
    cutoff: f64,
    engine: &EigenEngine,
) -> Result<(Vec<f64>, MatBuf)> {
    assert_eq!(op.kind, OpKind::Symmetric);
    let dim = op.dim();
    if dim <= engine.dense_cap {
        let mut dense = op.dense();
        let vals = eigh_inplace(&mut dense)?;
        let keep: Vec<usize> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= cutoff)
            .map(|(i, _)| i)
            .collect();
        let basis = dense.select_cols(&keep);
        let kept: Vec<f64> = keep.iter().map(|&i| vals[i]).collect();
        Ok((kept, basis))
    } else {
        let mat = op.matrix();
        let (vals, basis) =
            lowest_eigenpairs_below(dim, |x, y| mat.apply(x, y), cutoff, &engine.lanczos)?;
        if engine.verify_iterative {
            let mut opts = engine.lanczos.clone();
            opts.seed = opts.seed.wrapping_add(0x9e3779b9);
            opts.block_size += 2;
            let (vals2, _) = lowest_eigenpairs_below(dim, |x, y| mat.apply(x, y), cutoff, &opts)?;
            if vals.len() != vals2.len() {
                return Err(Error::EigensolverFailure(format!(
                    "iterative eigensolver count mismatch below {cutoff}: {} vs {}",
                    vals.len(),
                    vals2.len()
                )));
            }
            for (a, b) in vals.iter().zip(&vals2) {
                if (a - b).abs() > 1e-6 {
                    return Err(Error::EigensolverFailure(format!(
                        "iterative eigensolver value mismatch: {a} vs {b}"
                    )));
                }
            }
        }
        Ok((vals, basis))
    }
}

/// `E_P(I)` via explicit eigenpairs in the window. An empty window yields
/// the zero projector (rank 0), which is legal.
pub fn window_projection(
    op: &DiscreteOperator,
    window: SpectralWindow,
    engine: &EigenEngine,
) -> Result<WindowProjection> {
    let margin = 0.05 * window.half_width;
    let (vals, basis) = eigenpairs_below(op, window.hi() + margin, engine)?;
    let keep: Vec<usize> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| window.contains(v))
        .map(|(i, _)| i)
        .collect();
    Ok(WindowProjection {
        window,
        eigenvalues: keep.iter().map(|&i| vals[i]).collect(),
        basis: basis.select_cols(&keep),
    })
}

// ---------------------------------------------------------------------------
// smooth filters
// ---------------------------------------------------------------------------

/// Smooth compactly supported bump profile: 1 on the plateau, 0 outside the
/// support, C∞ monotone between.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FilterProfile {
    pub center: f64,
    pub plateau_radius: f64,
    pub support_radius: f64,
}

impl FilterProfile {
    pub fn new(center: f64, plateau_radius: f64, support_radius: f64) -> Self {
        assert!(0.0 < plateau_radius && plateau_radius < support_radius);
        FilterProfile {
            center,
            plateau_radius,
            support_radius,
        }
    }

    pub fn eval(&self, e: f64) -> f64 {
        let d = (e - self.center).abs();
        crate::model::cinf_step(
            (self.support_radius - d) / (self.support_radius - self.plateau_radius),
        )
    }
}

enum FilterPath {
    Dense { vals: Vec<f64>, vecs: MatBuf },
    Chebyshev { exp: ChebyshevExpansion },
}

/// A reusable operator function `f(P)` for a smooth bump profile.
pub struct SmoothFilter<'a> {
    op: &'a DiscreteOperator,
    pub profile: FilterProfile,
    path: FilterPath,
}

impl<'a> SmoothFilter<'a> {
    /// Chebyshev target accuracy for the iterative path.
    pub const CHEB_TARGET: f64 = 1e-12;

    pub fn new(op: &'a DiscreteOperator, profile: FilterProfile, engine: &EigenEngine) -> Result<Self> {
        assert_eq!(op.kind, OpKind::Symmetric);
        let path = if op.dim() <= engine.dense_cap {
            let mut dense = op.dense();
            let vals = eigh_inplace(&mut dense)?;
            FilterPath::Dense { vals, vecs: dense }
        } else {
            let mat = op.matrix();
            let (lo, hi) = spectral_bounds(op.dim(), |x, y| mat.apply(x, y), 90, 0x0b0b);
            let exp =
                ChebyshevExpansion::of_function(|e| profile.eval(e), lo, hi, Self::CHEB_TARGET);
            FilterPath::Chebyshev { exp }
        };
        Ok(SmoothFilter { op, profile, path })
    }

    /// Sup-norm error bound of the operator-function approximation.
    pub fn error_bound(&self) -> f64 {
        match &self.path {
            FilterPath::Dense { .. } => 0.0,
            FilterPath::Chebyshev { exp } => exp.tail_bound,
        }
    }

    pub fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        match &self.path {
            FilterPath::Dense { vals, vecs } => {
                let dim = x.len();
                let mut out = vec![0.0; dim];
                for (i, &lam) in vals.iter().enumerate() {
                    let f = self.profile.eval(lam);
                    if f.abs() < 1e-300 {
                        continue;
                    }
                    let col = vecs.col(i);
                    let c: f64 = col.iter().zip(x).map(|(a, b)| a * b).sum();
                    let cf = c * f;
                    for (o, v) in out.iter_mut().zip(col) {
                        *o += cf * v;
                    }
                }
                out
            }
            FilterPath::Chebyshev { exp } => {
                let mat = self.op.matrix();
                exp.apply_real(|v, y| mat.apply(v, y), x)
            }
        }
    }

    pub fn apply_state(&self, state: &DiscreteState) -> DiscreteState {
        let (re, im) = state.split_re_im();
        let fre = self.apply_real(&re);
        let fim = self.apply_real(&im);
        DiscreteState::from_re_im(state.channels, &fre, &fim)
    }

    /// `⟨ψ, f(P)ψ⟩ / ‖ψ‖²` — the spectral mass seen through the profile.
    pub fn mass_fraction(&self, state: &DiscreteState) -> f64 {
        let f = self.apply_state(state);
        state.inner(&f).re / state.norm_sq()
    }
}

// ---------------------------------------------------------------------------
// Mourre certification
// ---------------------------------------------------------------------------

/// Mourre diagnostics on a single box.
#[derive(Clone, Debug, Serialize)]
pub struct MourreRung {
    pub half_width: f64,
    pub window: SpectralWindow,
    pub gamma_target: f64,
    pub window_rank: usize,
    /// min of `⟨u, i[P, conj] u⟩` over the unit sphere of `Ran E_P(I)`
    pub rayleigh_min: Option<f64>,
    /// eigenvalues of the restricted form below `gamma_target - mode_tol`
    pub negative_modes: usize,
    /// mass fraction of each negative mode inside `|x| ≤ L/4`
    pub localization: Vec<f64>,
    /// eigenvalues of P inside the window
    pub window_eigenvalues: Vec<f64>,
    /// eigenvalues of the restricted commutator form
    pub form_eigenvalues: Vec<f64>,
}

/// Full report across a box ladder, with the certification verdict.
#[derive(Clone, Debug, Serialize)]
pub struct MourreReport {
    pub window: SpectralWindow,
    pub gamma_target: f64,
    pub rungs: Vec<MourreRung>,
    /// (box half-width, negative-mode count) per rung
    pub stability: Vec<(f64, usize)>,
    /// "Mourre-compatible": counts equal on the top two rungs and every
    /// negative mode localized at or above the threshold
    pub certified: bool,
    /// rayleigh_min over the finest rung
    pub rayleigh_min: Option<f64>,
    pub negative_modes: usize,
    pub localization: Vec<f64>,
}

impl MourreReport {
    pub fn to_json(&self) -> Result<String> {
        jsonio::to_string_sig17(self)
    }
}

/// Restricted commutator positivity on one box: the Hermitian form of
/// `i[P, conj]` on `Ran E_P(I)` relative to `gamma_target`.
pub fn mourre_report(
    p: &DiscreteOperator,
    conj: &DiscreteOperator,
    window: SpectralWindow,
    gamma_target: f64,
    engine: &EigenEngine,
) -> Result<MourreRung> {
    let c = commutator(p, conj)?;
    let wp = window_projection(p, window, engine)?;
    let k = wp.rank();
    let half_width = p.grid.half_width;
    if k == 0 {
        return Ok(MourreRung {
            half_width,
            window,
            gamma_target,
            window_rank: 0,
            rayleigh_min: None,
            negative_modes: 0,
            localization: Vec::new(),
            window_eigenvalues: Vec::new(),
            form_eigenvalues: Vec::new(),
        });
    }
    // W = Uᵀ C U on the window basis
    let dim = p.dim();
    let mut cu = MatBuf::zeros(dim, k);
    for j in 0..k {
        let mut col = vec![0.0; dim];
        c.matrix().apply(wp.basis.col(j), &mut col);
        cu.col_mut(j).copy_from_slice(&col);
    }
    let mut w = dgemm(true, false, 1.0, &wp.basis, &cu);
    for i in 0..k {
        for j in 0..i {
            let s = 0.5 * (w.get(i, j) + w.get(j, i));
            w.set(i, j, s);
            w.set(j, i, s);
        }
    }
    let mut wv = w.clone();
    let form_vals = eigh_inplace(&mut wv)?;
    let rayleigh_min = form_vals.first().copied();
    let mut negative = Vec::new();
    for (i, &v) in form_vals.iter().enumerate() {
        if v < gamma_target - engine.mode_tol {
            negative.push(i);
        }
    }
    // localization of each negative mode on the grid
    let radius = engine.localization_radius_frac * half_width * 2.0 * 0.5; // L/4 by default
    let mut localization = Vec::with_capacity(negative.len());
    for &i in &negative {
        let y = wv.col(i);
        // grid vector z = U y
        let mut z = vec![0.0; dim];
        for (j, &c_j) in y.iter().enumerate() {
            for (zi, bi) in z.iter_mut().zip(wp.basis.col(j)) {
                *zi += c_j * bi;
            }
        }
        localization.push(localization_fraction(&p.grid, p.channels, &z, radius));
    }
    Ok(MourreRung {
        half_width,
        window,
        gamma_target,
        window_rank: k,
        rayleigh_min,
        negative_modes: negative.len(),
        localization,
        window_eigenvalues: wp.eigenvalues,
        form_eigenvalues: form_vals,
    })
}

/// Mass fraction of a channel-stacked real vector inside Euclidean radius.
pub fn localization_fraction(grid: &Grid, channels: usize, z: &[f64], radius: f64) -> f64 {
    let npts = grid.len();
    let mut inside = 0.0;
    let mut total = 0.0;
    for ch in 0..channels {
        for p in 0..npts {
            let v = z[ch * npts + p];
            let m = v * v;
            total += m;
            if grid.radius(p) <= radius {
                inside += m;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}

/// Run [`mourre_report`] over a ladder of boxes and assemble the verdict:
/// negative-mode counts must agree on the top two rungs and every negative
/// mode there must be localized.
pub fn mourre_certify<F>(
    mut build: F,
    ladder: &[Grid],
    window: SpectralWindow,
    gamma_target: f64,
    engine: &EigenEngine,
) -> Result<MourreReport>
where
    F: FnMut(&Grid) -> Result<(DiscreteOperator, DiscreteOperator)>,
{
    assert!(ladder.len() >= 2, "certification needs at least two rungs");
    let mut rungs = Vec::new();
    for grid in ladder {
        let (p, conj) = build(grid)?;
        rungs.push(mourre_report(&p, &conj, window, gamma_target, engine)?);
    }
    let stability: Vec<(f64, usize)> = rungs
        .iter()
        .map(|r| (r.half_width, r.negative_modes))
        .collect();
    let top = &rungs[rungs.len() - 1];
    let prev = &rungs[rungs.len() - 2];
    let counts_stable = top.negative_modes == prev.negative_modes;
    let localized = top
        .localization
        .iter()
        .chain(prev.localization.iter())
        .all(|&l| l >= engine.localized_threshold);
    let certified = counts_stable && localized;
    Ok(MourreReport {
        window,
        gamma_target,
        stability,
        certified,
        rayleigh_min: top.rayleigh_min,
        negative_modes: top.negative_modes,
        localization: top.localization.clone(),
        rungs,
    })
}

// ---------------------------------------------------------------------------
// thresholds and the gap d(λ)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Provenance {
    ChannelConstant { channel: usize },
    SubsystemEigenvalue { element: usize, index: usize },
}

/// The threshold set `𝒯^a` with provenance and its infimum Σ.
#[derive(Clone, Debug, Serialize)]
pub struct ThresholdSet {
    pub values: Vec<(f64, Provenance)>,
    pub sigma: f64,
}

impl ThresholdSet {
    pub fn plain_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.0).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        jsonio::to_string_sig17(self)
    }
}

/// `𝒯^a = ⋃_{a_min < b < a} σ_pp(P^b) ∪ {c_1, …, c_m}`, with subsystem point
/// spectra taken strictly below each subsystem's own essential onset
/// (computed by the same recursion).
pub fn thresholds(
    spec: &ProblemSpec,
    grid: &Grid,
    a: usize,
    engine: &EigenEngine,
) -> Result<ThresholdSet> {
    let lat = spec
        .lattice
        .as_ref()
        .ok_or_else(|| Error::SpecInvalid("thresholds need a many-body lattice".into()))?;
    lat.element(a)?;
    let mut pp_memo: HashMap<usize, Vec<f64>> = HashMap::new();
    let vals = threshold_values(spec, grid, a, engine, &mut pp_memo, 0)?;
    let sigma = vals
        .iter()
        .map(|v| v.0)
        .fold(f64::INFINITY, f64::min);
    let mut values = vals;
    values.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(ThresholdSet { values, sigma })
}

fn threshold_values(
    spec: &ProblemSpec,
    grid: &Grid,
    a: usize,
    engine: &EigenEngine,
    pp_memo: &mut HashMap<usize, Vec<f64>>,
    depth: usize,
) -> Result<Vec<(f64, Provenance)>> {
    let lat = spec.lattice.as_ref().unwrap();
    if depth > lat.len() {
        return Err(Error::RecursionDepth);
    }
    let mut out: Vec<(f64, Provenance)> = spec
        .potentials
        .iter()
        .enumerate()
        .map(|(j, p)| (p.constant, Provenance::ChannelConstant { channel: j }))
        .collect();
    for b in 0..lat.len() {
        if b == lat.a_min || b == a || !lat.lt(b, a) {
            continue;
        }
        let pp = match pp_memo.get(&b) {
            Some(v) => v.clone(),
            None => {
                // Σ^b from the recursion, then bound states of P^b below it
                let tb = threshold_values(spec, grid, b, engine, pp_memo, depth + 1)?;
                let sigma_b = tb.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
                let eigs = subsystem_point_spectrum(spec, grid, b, sigma_b, engine)?;
                pp_memo.insert(b, eigs.clone());
                eigs
            }
        };
        for (idx, &e) in pp.iter().enumerate() {
            out.push((e, Provenance::SubsystemEigenvalue { element: b, index: idx }));
        }
    }
    Ok(out)
}

fn subsystem_point_spectrum(
    spec: &ProblemSpec,
    grid: &Grid,
    b: usize,
    sigma_b: f64,
    engine: &EigenEngine,
) -> Result<Vec<f64>> {
    match build_subsystem(spec, grid, b)? {
        Subsystem::Constant { .. } => Ok(Vec::new()),
        Subsystem::Operator { op, .. } => {
            let cutoff = sigma_b - engine.embed_tol;
            let (vals, _) = eigenpairs_below(&op, cutoff, engine)?;
            Ok(vals)
        }
    }
}

/// `d(λ) = inf{λ - τ | τ ≤ λ, τ ∈ 𝒯}`.
pub fn d_lambda(t: &ThresholdSet, lambda: f64) -> Result<f64> {
    if lambda < t.sigma {
        return Err(Error::BelowSigma {
            lambda,
            sigma: t.sigma,
        });
    }
    Ok(t.values
        .iter()
        .map(|v| v.0)
        .filter(|&tau| tau <= lambda)
        .map(|tau| lambda - tau)
        .fold(f64::INFINITY, f64::min))
}

// ---------------------------------------------------------------------------
// essential spectrum probes
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SigmaEssReport {
    /// min over the sphere of the homogeneous part plus the channel constant
    pub analytic: f64,
    /// (box half-width, numerical onset) per ladder rung; the onset is the
    /// lowest eigenvalue whose eigenvector is not localized
    pub onsets: Vec<(f64, Option<f64>)>,
    /// |analytic - onset| on the finest rung
    pub difference: Option<f64>,
}

/// Assemble the single-channel operator `P_j` on a grid.
pub fn single_channel_operator(spec: &ProblemSpec, grid: &Grid, j: usize) -> DiscreteOperator {
    let lap = laplacian_csr(grid);
    let v = potential_on_grid(spec, grid, j);
    let mat = lap.add_scaled(1.0, &Csr::diag(&v), 1.0);
    DiscreteOperator::new(OpKind::Symmetric, grid.clone(), 1, mat)
}

/// Two estimates of `Σ_j = min_ω Ṽ_j(ω)`: the analytic sphere minimum and
/// the numerical onset of non-localized spectrum over a box ladder.
pub fn sigma_ess_bottom(
    spec: &ProblemSpec,
    ladder: &[Grid],
    j: usize,
    engine: &EigenEngine,
) -> Result<SigmaEssReport> {
    let pot = &spec.potentials[j];
    let analytic = match &pot.homogeneous {
        Some(a) => {
            // sampled sphere minimum (presets also expose the exact value)
            let sampled = (0..8192)
                .map(|i| a.value(std::f64::consts::TAU * i as f64 / 8192.0))
                .fold(f64::INFINITY, f64::min);
            sampled.min(a.min_value()) + pot.constant
        }
        None => pot.constant,
    };
    let mut onsets = Vec::new();
    for grid in ladder {
        let op = single_channel_operator(spec, grid, j);
        // search above the analytic onset with a margin for box modes
        let cutoff = analytic + 1.0;
        let (vals, basis) = eigenpairs_below(&op, cutoff, engine)?;
        let radius = engine.localization_radius_frac * grid.half_width * 2.0 * 0.5;
        let mut onset = None;
        for (i, &v) in vals.iter().enumerate() {
            let loc = localization_fraction(grid, 1, basis.col(i), radius);
            if loc < engine.delocalized_threshold {
                onset = Some(v);
                break;
            }
        }
        onsets.push((grid.half_width, onset));
    }
    let difference = onsets
        .last()
        .and_then(|(_, o)| o.as_ref())
        .map(|o| (o - analytic).abs());
    Ok(SigmaEssReport {
        analytic,
        onsets,
        difference,
    })
}

/// Weyl-sequence residual `‖(P_j - λ) u^k‖ / ‖u^k‖` for the translated bump
/// `u^k = k^{-n/2} e^{i√(λ-Σ_j) ω₀·x} φ((x - k²ω₀)/k)`.
pub fn weyl_residual(
    spec: &ProblemSpec,
    grid: &Grid,
    j: usize,
    lambda: f64,
    k: f64,
) -> Result<f64> {
    let pot = &spec.potentials[j];
    let (sigma_j, omega0) = match &pot.homogeneous {
        Some(a) => {
            let (mut best_th, mut best) = (0.0, f64::INFINITY);
            for i in 0..8192 {
                let th = std::f64::consts::TAU * i as f64 / 8192.0;
                let v = a.value(th);
                if v < best {
                    best = v;
                    best_th = th;
                }
            }
            (
                best + pot.constant,
                match grid.dim {
                    1 => vec![1.0],
                    _ => vec![best_th.cos(), best_th.sin()],
                },
            )
        }
        None => (
            pot.constant,
            match grid.dim {
                1 => vec![1.0],
                _ => vec![1.0, 0.0],
            },
        ),
    };
    if lambda < sigma_j {
        return Err(Error::BelowSigma {
            lambda,
            sigma: sigma_j,
        });
    }
    // bump of width k centered at k²ω₀ must fit well inside the box
    if k * k + k > 0.95 * grid.half_width {
        return Err(Error::BoxTooSmall {
            half_width: grid.half_width,
            k,
        });
    }
    let momentum = (lambda - sigma_j).sqrt();
    let op = single_channel_operator(spec, grid, j);
    let npts = grid.len();
    let mut u = DiscreteState::zeros(1, npts);
    for p in 0..npts {
        let x = grid.point(p);
        let mut y2 = 0.0;
        let mut phase = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let d = (xi - k * k * omega0[i]) / k;
            y2 += d * d;
            phase += momentum * omega0[i] * xi;
        }
        if y2 < 1.0 {
            let amp = (-1.0 / (1.0 - y2)).exp();
            u.values[p] = Complex64::from_polar(amp, phase);
        }
    }
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::BoxTooSmall {
            half_width: grid.half_width,
            k,
        });
    }
    let pu = op.apply(&u);
    let mut resid_sq = 0.0;
    for (a, b) in pu.values.iter().zip(&u.values) {
        resid_sq += (a - lambda * b).norm_sqr();
    }
    Ok(resid_sq.sqrt() / norm)
}

/// Count of eigenvalues in the window whose eigenvectors are localized.
pub fn eigencount_window(
    op: &DiscreteOperator,
    window: SpectralWindow,
    engine: &EigenEngine,
) -> Result<usize> {
    let wp = window_projection(op, window, engine)?;
    let radius = engine.localization_radius_frac * op.grid.half_width * 2.0 * 0.5;
    let mut count = 0;
    for i in 0..wp.rank() {
        let loc = localization_fraction(&op.grid, op.channels, wp.basis.col(i), radius);
        if loc >= engine.localized_threshold {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{build_laplacian, build_p, dirichlet_eigenvalue_1d};
    use crate::model::{ChannelPotential, Mode, RadialPreset};

    fn free_two_channel(grid_l: f64, n: usize) -> (ProblemSpec, Grid) {
        let spec = ProblemSpec {
            channel_count: 2,
            ambient_dim: 1,
            mode: Mode::Decaying,
            potentials: vec![
                ChannelPotential::constant_only(0.0),
                ChannelPotential::constant_only(1.0),
            ],
            couplings: Vec::new(),
            lattice: None,
        };
        (spec, Grid::new(1, grid_l, n))
    }

    #[test]
    fn window_rank_matches_mode_count_formula() {
        // free 1D channel, I = (0.9, 1.1), L = 40
        let grid = Grid::new(1, 40.0, 512);
        let lap = build_laplacian(&grid);
        let engine = EigenEngine::default();
        let window = SpectralWindow::new(1.0, 0.1);
        let wp = window_projection(&lap, window, &engine).unwrap();
        let expected = (1..=512)
            .filter(|&k| window.contains(dirichlet_eigenvalue_1d(&grid, k)))
            .count();
        assert_eq!(wp.rank(), expected);
        assert!(expected > 0);
    }

    #[test]
    fn empty_and_full_windows() {
        let grid = Grid::new(1, 10.0, 128);
        let lap = build_laplacian(&grid);
        let engine = EigenEngine::default();
        // below the spectrum: zero projector
        let wp = window_projection(&lap, SpectralWindow::new(-5.0, 1.0), &engine).unwrap();
        assert_eq!(wp.rank(), 0);
        // covering everything: identity
        let hi = 4.0 / grid.spacing().powi(2) + 1.0;
        let wp2 =
            window_projection(&lap, SpectralWindow::new(hi / 2.0, hi / 2.0 + 1.0), &engine)
                .unwrap();
        assert_eq!(wp2.rank(), 128);
        // projector algebra: E² = E = Eᵀ
        let e = wp2.projector_dense();
        for i in 0..128 {
            for j in 0..128 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((e.get(i, j) - id).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn filter_acts_as_functional_calculus_on_eigenvectors() {
        let grid = Grid::new(1, 10.0, 128);
        let lap = build_laplacian(&grid);
        let engine = EigenEngine::default();
        let e3 = dirichlet_eigenvalue_1d(&grid, 3);
        let profile = FilterProfile::new(e3, 0.005, 0.02);
        let filter = SmoothFilter::new(&lap, profile, &engine).unwrap();
        let mode = crate::discretize::sine_mode(&grid, &[3]);
        let out = filter.apply_real(&mode);
        for (a, b) in out.iter().zip(&mode) {
            assert!((a - b).abs() < 1e-9, "f(E₃) = 1 should fix the mode");
        }
        // a mode far outside the support is annihilated
        let mode9 = crate::discretize::sine_mode(&grid, &[9]);
        let out9 = filter.apply_real(&mode9);
        assert!(out9.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn chebyshev_filter_matches_dense_path() {
        let grid = Grid::new(1, 10.0, 256);
        let lap = build_laplacian(&grid);
        let mut dense_engine = EigenEngine::default();
        dense_engine.dense_cap = 4096;
        let mut cheb_engine = EigenEngine::default();
        cheb_engine.dense_cap = 1; // force the iterative path
        let profile = FilterProfile::new(1.0, 0.2, 0.5);
        let fd = SmoothFilter::new(&lap, profile, &dense_engine).unwrap();
        let fc = SmoothFilter::new(&lap, profile, &cheb_engine).unwrap();
        let probe: Vec<f64> = (0..256).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let yd = fd.apply_real(&probe);
        let yc = fc.apply_real(&probe);
        let err: f64 = yd
            .iter()
            .zip(&yc)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8, "dense vs Chebyshev filter differ by {err}");
    }

    #[test]
    fn free_two_channel_mourre_rayleigh() {
        // P = diag(-Δ, -Δ+1), λ = 1.5, δ = 0.1: rayleigh_min ≥ 2(λ-c₂-δ) - tol
        let (spec, grid) = free_two_channel(40.0, 1024);
        let p = build_p(&spec, &grid).unwrap();
        let conj = crate::discretize::build_a(&grid).replicate(2);
        let engine = EigenEngine::default();
        let window = SpectralWindow::new(1.5, 0.1);
        let rung = mourre_report(&p, &conj, window, 0.75, &engine).unwrap();
        assert!(rung.window_rank > 0);
        let rm = rung.rayleigh_min.unwrap();
        assert!(rm >= 0.8 - 0.05, "rayleigh_min = {rm}");
        assert_eq!(rung.negative_modes, 0);
    }

    #[test]
    fn empty_window_is_vacuous_pass() {
        let (spec, grid) = free_two_channel(10.0, 64);
        let p = build_p(&spec, &grid).unwrap();
        let conj = crate::discretize::build_a(&grid).replicate(2);
        let engine = EigenEngine::default();
        let rung =
            mourre_report(&p, &conj, SpectralWindow::new(-3.0, 0.5), 1.0, &engine).unwrap();
        assert_eq!(rung.window_rank, 0);
        assert_eq!(rung.negative_modes, 0);
        assert!(rung.rayleigh_min.is_none());
    }

    #[test]
    fn bound_state_shows_as_localized_negative_mode() {
        // V = -8 exp(-x²): Rayleigh value ≈ 0 on a bound state (virial),
        // which sits below any positive target
        let grid = Grid::new(1, 40.0, 1024);
        let spec = ProblemSpec {
            channel_count: 1,
            ambient_dim: 1,
            mode: Mode::Decaying,
            potentials: vec![ChannelPotential {
                homogeneous: None,
                decaying: Some((
                    RadialPreset::GaussianWell {
                        depth: -8.0,
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
        let engine = EigenEngine::default();
        // locate the ground state energy
        let (vals, _) = eigenpairs_below(&p, 0.0, &engine).unwrap();
        assert!(!vals.is_empty(), "the deep well must bind");
        let e0 = vals[0];
        assert!(e0 < -3.0);
        let conj = crate::discretize::build_a(&grid);
        let rung = mourre_report(
            &p,
            &conj,
            SpectralWindow::new(e0, 0.05),
            0.5,
            &engine,
        )
        .unwrap();
        assert!(rung.window_rank >= 1);
        assert!(rung.negative_modes >= 1);
        for &l in &rung.localization {
            assert!(l > 0.95, "bound state localization {l}");
        }
        // the Rayleigh value on the bound state is ≈ 0 (discrete virial)
        let rm = rung.rayleigh_min.unwrap();
        assert!(rm.abs() < 0.05, "virial value {rm}");
    }

    #[test]
    fn d_lambda_from_definition() {
        let t = ThresholdSet {
            values: vec![
                (0.0, Provenance::ChannelConstant { channel: 0 }),
                (1.0, Provenance::ChannelConstant { channel: 1 }),
            ],
            sigma: 0.0,
        };
        assert!((d_lambda(&t, 1.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(d_lambda(&t, 1.0).unwrap(), 0.0);
        assert!(matches!(
            d_lambda(&t, -0.5),
            Err(Error::BelowSigma { .. })
        ));
        let t2 = ThresholdSet {
            values: vec![
                (-2.13, Provenance::ChannelConstant { channel: 0 }),
                (0.0, Provenance::ChannelConstant { channel: 1 }),
                (1.0, Provenance::ChannelConstant { channel: 2 }),
            ],
            sigma: -2.13,
        };
        assert!((d_lambda(&t2, 0.7).unwrap() - 0.7).abs() < 1e-15);
        // monotonicity: adding a threshold never increases d(λ)
        let mut t3 = t.clone();
        t3.values.push((1.3, Provenance::ChannelConstant { channel: 2 }));
        assert!(d_lambda(&t3, 1.5).unwrap() <= d_lambda(&t, 1.5).unwrap());
    }

    #[test]
    fn weyl_residual_shrinks_with_scale() {
        // free 1D channel, λ = 1: residual O(1/k)
        let spec = ProblemSpec {
            channel_count: 1,
            ambient_dim: 1,
            mode: Mode::Decaying,
            potentials: vec![ChannelPotential::constant_only(0.0)],
            couplings: Vec::new(),
            lattice: None,
        };
        let grid = Grid::new(1, 30.0, 2048);
        let r2 = weyl_residual(&spec, &grid, 0, 1.0, 2.0).unwrap();
        let r4 = weyl_residual(&spec, &grid, 0, 1.0, 4.0).unwrap();
        let ratio = r2 / r4;
        assert!(
            (1.6..=2.6).contains(&ratio),
            "O(1/k) shrink expected, got ratio {ratio} ({r2} → {r4})"
        );
        // residual always dominates the distance to the spectrum (here 0)
        assert!(r2 > 0.0);
        // box too small
        assert!(matches!(
            weyl_residual(&spec, &grid, 0, 1.0, 6.0),
            Err(Error::BoxTooSmall { .. })
        ));
    }
}
