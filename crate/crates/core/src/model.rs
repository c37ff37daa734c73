//! Analytic model data: channel potentials `V_j = Ṽ_j + W_j + c_j` (or
//! many-body sums `Σ_b v_j^b + c_j`), first-order couplings, crossing
//! directions on the sphere, direction cutoffs `χ_j`, and the adapted
//! dilation weight `a(x) = (1 - 2β Σ_j Ṽ_j χ_j)|x|²/4`.
//!
//! Potentials and couplings come from a closed preset library so that
//! gradients are analytic and configurations stay serializable.

use crate::error::{Error, Result};
use crate::lattice::SubspaceLattice;
use crate::linalg::MatBuf;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// smooth C∞ profiles
// ---------------------------------------------------------------------------

#[inline]
fn bump_piece(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

#[inline]
fn bump_piece_deriv(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp() / (u * u)
    }
}

/// C∞ monotone step: 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn cinf_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = bump_piece(u);
        let b = bump_piece(1.0 - u);
        a / (a + b)
    }
}

/// Derivative of [`cinf_step`].
pub fn cinf_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        let a = bump_piece(u);
        let b = bump_piece(1.0 - u);
        let da = bump_piece_deriv(u);
        let db = -bump_piece_deriv(1.0 - u);
        (da * b - a * db) / ((a + b) * (a + b))
    }
}

/// Interior radial switch: 0 for `r ≤ 1/4`, 1 for `r ≥ 1/2`. Homogeneous
/// data is multiplied by this blend so it becomes smooth at the origin while
/// staying exactly degree-zero homogeneous outside `|x| = 1/2`.
pub fn radial_blend(r: f64) -> f64 {
    cinf_step((r - 0.25) / 0.25)
}

pub fn radial_blend_deriv(r: f64) -> f64 {
    cinf_step_deriv((r - 0.25) / 0.25) / 0.25
}

// ---------------------------------------------------------------------------
// preset library
// ---------------------------------------------------------------------------

/// Degree-zero homogeneous data: a function on the unit circle.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularPreset {
    /// `amplitude · cos(harmonic · (θ - phase)) + offset`
    CosineHomogeneous {
        amplitude: f64,
        #[serde(default = "one_u32")]
        harmonic: u32,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    Zero,
}

fn one_u32() -> u32 {
    1
}

impl AngularPreset {
    pub fn value(&self, theta: f64) -> f64 {
        match self {
            AngularPreset::CosineHomogeneous {
                amplitude,
                harmonic,
                phase,
                offset,
            } => amplitude * ((*harmonic as f64) * (theta - phase)).cos() + offset,
            AngularPreset::Zero => 0.0,
        }
    }

    pub fn deriv(&self, theta: f64) -> f64 {
        match self {
            AngularPreset::CosineHomogeneous {
                amplitude,
                harmonic,
                phase,
                ..
            } => {
                let k = *harmonic as f64;
                -amplitude * k * (k * (theta - phase)).sin()
            }
            AngularPreset::Zero => 0.0,
        }
    }

    /// Minimum over the circle (analytic for the preset family).
    pub fn min_value(&self) -> f64 {
        match self {
            AngularPreset::CosineHomogeneous {
                amplitude, offset, ..
            } => offset - amplitude.abs(),
            AngularPreset::Zero => 0.0,
        }
    }
}

/// Radial scalar profiles used for decaying potentials, coupling
/// coefficients and many-body internal data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialPreset {
    /// `strength · ⟨x⟩^{-power}` with `⟨x⟩ = (1 + |x|²)^{1/2}`
    CoulombLike { strength: f64, power: f64 },
    /// `depth · exp(-r²/width²)`
    GaussianWell { depth: f64, width: f64 },
    Constant { value: f64 },
    Zero,
}

impl RadialPreset {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialPreset::CoulombLike { strength, power } => {
                strength * (1.0 + r * r).powf(-power / 2.0)
            }
            RadialPreset::GaussianWell { depth, width } => depth * (-(r * r) / (width * width)).exp(),
            RadialPreset::Constant { value } => *value,
            RadialPreset::Zero => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RadialPreset::Zero)
            || matches!(self, RadialPreset::Constant { value } if *value == 0.0)
    }
}

/// Vector-valued coupling coefficient `r̃`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorPreset {
    /// fixed direction scaled by a radial profile
    Directional {
        direction: Vec<f64>,
        profile: RadialPreset,
    },
    /// radial field `x · g(|x|)`
    RadialField { profile: RadialPreset },
    Zero,
}

impl VectorPreset {
    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            VectorPreset::Directional { direction, profile } => {
                let g = profile.value(r);
                direction.iter().map(|d| d * g).collect()
            }
            VectorPreset::RadialField { profile } => {
                let g = profile.value(r);
                x.iter().map(|v| v * g).collect()
            }
            VectorPreset::Zero => vec![0.0; x.len()],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorPreset::Zero)
    }
}

// ---------------------------------------------------------------------------
// channel potentials and couplings
// ---------------------------------------------------------------------------

/// One many-body interaction term `v_j^b`, a function of `x^b = Π^b x` only.
#[derive(Clone, Debug)]
pub struct ManyBodyTerm {
    /// lattice element index `b`
    pub element: usize,
    pub preset: RadialPreset,
    /// the projector actually used when evaluating; filled with `Π^b` by the
    /// builders, checked against the lattice by `validate_assumptions`
    pub projector: MatBuf,
}

impl ManyBodyTerm {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut norm_sq = 0.0;
        let n = self.projector.rows;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.projector.get(i, j) * x[j];
            }
            norm_sq += acc * acc;
        }
        self.preset.value(norm_sq.sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct ChannelPotential {
    /// `Ṽ_j`: degree-zero homogeneous outside `|x| ≥ 1/2`, blended inside
    pub homogeneous: Option<AngularPreset>,
    /// `W_j` with its nominal decay rate (`|W| ~ ⟨x⟩^{-rate}` scale)
    pub decaying: Option<(RadialPreset, f64)>,
    /// `c_j`
    pub constant: f64,
    pub manybody_terms: Vec<ManyBodyTerm>,
}

impl ChannelPotential {
    pub fn constant_only(c: f64) -> Self {
        ChannelPotential {
            homogeneous: None,
            decaying: None,
            constant: c,
            manybody_terms: Vec::new(),
        }
    }

    /// Full potential value at a point (homogeneous part blended at origin).
    pub fn value(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = self.constant;
        if let Some(ang) = &self.homogeneous {
            v += homogeneous_value(ang, x);
        }
        if let Some((w, _)) = &self.decaying {
            v += w.value(r);
        }
        for t in &self.manybody_terms {
            v += t.value(x);
        }
        v
    }
}

/// Degree-zero extension with interior blend: `blend(|x|)·Ṽ(θ(x))`.
pub fn homogeneous_value(preset: &AngularPreset, x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r < 1e-300 {
        return 0.0;
    }
    let b = radial_blend(r);
    if b == 0.0 {
        return 0.0;
    }
    let theta = match x.len() {
        1 => {
            if x[0] >= 0.0 {
                0.0
            } else {
                std::f64::consts::PI
            }
        }
        2 => x[1].atan2(x[0]),
        _ => unreachable!("homogeneous data only supported in dimensions 1 and 2"),
    };
    b * preset.value(theta)
}

/// Off-diagonal coupling `r_{jk} = r̃_{jk}·∇ + r̂_{jk}`, stored once per
/// unordered channel pair; the adjoint block is generated at assembly.
#[derive(Clone, Debug)]
pub struct CouplingTerm {
    pub j: usize,
    pub k: usize,
    pub r_tilde: VectorPreset,
    pub r_hat: RadialPreset,
    /// many-body mode: the coefficients are functions of `x^b` only
    pub lattice_element: Option<usize>,
    /// nominal decay rate ρ
    pub decay_rate: f64,
    /// projector `Π^b` used for evaluation in many-body mode
    pub projector: Option<MatBuf>,
}

impl CouplingTerm {
    fn internal_coords(&self, x: &[f64]) -> Vec<f64> {
        match &self.projector {
            Some(p) => {
                let n = p.rows;
                (0..n)
                    .map(|i| (0..n).map(|j| p.get(i, j) * x[j]).sum())
                    .collect()
            }
            None => x.to_vec(),
        }
    }

    pub fn r_hat_value(&self, x: &[f64]) -> f64 {
        let xi = self.internal_coords(x);
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.r_hat.value(r)
    }

    /// `r̃` as a vector in ambient coordinates (many-body: supported in `X^b`).
    pub fn r_tilde_value(&self, x: &[f64]) -> Vec<f64> {
        let xi = self.internal_coords(x);
        self.r_tilde.value(&xi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Assumption-2 style data: bounded `(x·∇)^l V_j`, per-channel Mourre
    Decaying,
    /// Assumption-3 style data: homogeneous + decaying potentials
    Homogeneous,
    /// Assumption-4 style data: many-body sums over a subspace lattice
    ManyBody,
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub channel_count: usize,
    pub ambient_dim: usize,
    pub mode: Mode,
    pub potentials: Vec<ChannelPotential>,
    pub couplings: Vec<CouplingTerm>,
    pub lattice: Option<SubspaceLattice>,
}

impl ProblemSpec {
    /// Structural validation (counts, indices, mode constraints).
    pub fn validate_structure(&self) -> Result<()> {
        if self.potentials.len() != self.channel_count {
            return Err(Error::SpecInvalid(format!(
                "{} potentials for {} channels",
                self.potentials.len(),
                self.channel_count
            )));
        }
        if self.mode == Mode::Homogeneous && self.ambient_dim < 2 {
            return Err(Error::SpecInvalid(
                "homogeneous mode requires ambient dimension ≥ 2 \
                 (sphere gradients do not exist in 1D)"
                    .into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.couplings {
            if c.j > c.k || c.k >= self.channel_count {
                return Err(Error::SpecInvalid(format!(
                    "coupling ({}, {}) out of range or unordered (need j ≤ k < m)",
                    c.j, c.k
                )));
            }
            if !seen.insert((c.j, c.k)) {
                return Err(Error::SpecInvalid(format!(
                    "duplicate coupling pair ({}, {})",
                    c.j, c.k
                )));
            }
        }
        match self.mode {
            Mode::ManyBody => {
                let lat = self.lattice.as_ref().ok_or_else(|| {
                    Error::SpecInvalid("many-body mode requires a lattice".into())
                })?;
                for p in &self.potentials {
                    if p.homogeneous.is_some() || p.decaying.is_some() {
                        return Err(Error::SpecInvalid(
                            "many-body potentials are sums of v_j^b + c_j only".into(),
                        ));
                    }
                    for t in &p.manybody_terms {
                        if t.element >= lat.len() {
                            return Err(Error::SpecInvalid(format!(
                                "many-body term references element {}",
                                t.element
                            )));
                        }
                        if t.element == lat.a_min {
                            return Err(Error::SpecInvalid(
                                "v_j^{a_min} must vanish (term on a_min given)".into(),
                            ));
                        }
                    }
                }
                for c in &self.couplings {
                    match c.lattice_element {
                        None => {
                            return Err(Error::SpecInvalid(
                                "many-body couplings must name a lattice element".into(),
                            ))
                        }
                        Some(b) if b == lat.a_min => {
                            return Err(Error::SpecInvalid(
                                "r^{a_min} must vanish (coupling on a_min given)".into(),
                            ))
                        }
                        Some(b) if b >= lat.len() => {
                            return Err(Error::SpecInvalid(format!(
                                "coupling references element {b}"
                            )))
                        }
                        _ => {}
                    }
                }
            }
            _ => {
                for p in &self.potentials {
                    if !p.manybody_terms.is_empty() {
                        return Err(Error::SpecInvalid(
                            "many-body terms given outside many-body mode".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn potential_value(&self, j: usize, x: &[f64]) -> f64 {
        self.potentials[j].value(x)
    }
}

// ---------------------------------------------------------------------------
// crossing directions on S¹
// ---------------------------------------------------------------------------

/// The directions `ω_k` where some homogeneous potential equals λ, with the
/// channel membership sets `J_{ω_k}`.
#[derive(Clone, Debug)]
pub struct CrossingSet {
    /// angles of the ω_k on S¹, in [0, 2π)
    pub thetas: Vec<f64>,
    /// unit vectors ω_k
    pub directions: Vec<[f64; 2]>,
    /// J_{ω_k}: channels j with Ṽ_j(ω_k) = λ
    pub memberships: Vec<Vec<usize>>,
    pub energy: f64,
}

impl CrossingSet {
    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Minimal pairwise angular separation (2π if fewer than two directions).
    pub fn min_separation(&self) -> f64 {
        let m = self.thetas.len();
        if m < 2 {
            return std::f64::consts::TAU;
        }
        let mut sep = std::f64::consts::TAU;
        for i in 0..m {
            for j in (i + 1)..m {
                sep = sep.min(angular_distance(self.thetas[i], self.thetas[j]));
            }
        }
        sep
    }
}

pub fn angular_distance(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d = std::f64::consts::TAU - d;
    }
    d
}

/// Number of scan points on the circle for root bracketing.
const THETA_SCAN: usize = 4096;
/// Roots closer than this (radians) are identified as one direction.
const MERGE_TOL: f64 = 1e-6;
/// |dṼ/dθ| below this at a root flags λ as a critical value.
const CRITICAL_DERIV_TOL: f64 = 1e-6;

/// Locate all directions with `Ṽ_j(ω) = λ` for some channel.
///
/// Uniform scan plus bisection; tangential crossings are rejected because
/// the energy must not be a critical value of the homogeneous data.
pub fn find_crossings(spec: &ProblemSpec, lambda: f64) -> Result<CrossingSet> {
    if spec.mode != Mode::Homogeneous {
        return Err(Error::SpecInvalid(
            "find_crossings requires homogeneous mode".into(),
        ));
    }
    let tau = std::f64::consts::TAU;
    let mut roots: Vec<(f64, usize)> = Vec::new(); // (θ, channel)
    for (j, pot) in spec.potentials.iter().enumerate() {
        let ang = match &pot.homogeneous {
            Some(a) => a.clone(),
            None => AngularPreset::Zero,
        };
        let g = |th: f64| ang.value(th) - lambda;
        // flat-touch guard: function grazes zero without sign change
        let mut min_abs: f64 = f64::INFINITY;
        let mut has_sign_change = false;
        let mut prev = g(0.0);
        for i in 1..=THETA_SCAN {
            let th = tau * i as f64 / THETA_SCAN as f64;
            let cur = g(th);
            min_abs = min_abs.min(cur.abs());
            if prev == 0.0 || prev * cur < 0.0 {
                has_sign_change = true;
                // bisect on [th - dθ, th]
                let mut lo = th - tau / THETA_SCAN as f64;
                let mut hi = th;
                let mut glo = prev;
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid);
                    if gm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if glo * gm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        glo = gm;
                    }
                }
                let root = 0.5 * (lo + hi);
                let d = ang.deriv(root);
                if d.abs() < CRITICAL_DERIV_TOL {
                    return Err(Error::CriticalValue {
                        channel: j,
                        theta: root,
                        derivative: d.abs(),
                        lambda,
                    });
                }
                let root = root.rem_euclid(tau);
                if !roots
                    .iter()
                    .any(|&(t, c)| c == j && angular_distance(t, root) < MERGE_TOL)
                {
                    roots.push((root, j));
                }
            }
            prev = cur;
        }
        if !has_sign_change && min_abs < 1e-10 {
            return Err(Error::CriticalValue {
                channel: j,
                theta: 0.0,
                derivative: 0.0,
                lambda,
            });
        }
    }
    // merge directions shared between channels
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut thetas: Vec<f64> = Vec::new();
    let mut memberships: Vec<Vec<usize>> = Vec::new();
    for (th, j) in roots {
        match thetas
            .iter()
            .position(|&t| angular_distance(t, th) < MERGE_TOL)
        {
            Some(k) => {
                if !memberships[k].contains(&j) {
                    memberships[k].push(j);
                }
            }
            None => {
                thetas.push(th);
                memberships.push(vec![j]);
            }
        }
    }
    for m in &mut memberships {
        m.sort_unstable();
    }
    let directions = thetas.iter().map(|&t| [t.cos(), t.sin()]).collect();
    Ok(CrossingSet {
        thetas,
        directions,
        memberships,
        energy: lambda,
    })
}

/// Per-direction margins of the gradient condition
/// `∇Ṽ_j(ω_k) · Σ_{l ∈ J_k} ∇Ṽ_l(ω_k) > 0`.
#[derive(Clone, Debug, Serialize)]
pub struct GradientConditionReport {
    /// (direction index, channel, margin, pass)
    pub entries: Vec<(usize, usize, f64, bool)>,
    pub all_pass: bool,
}

pub fn check_gradient_condition(
    crossings: &CrossingSet,
    spec: &ProblemSpec,
) -> GradientConditionReport {
    let mut entries = Vec::new();
    let mut all_pass = true;
    for (k, th) in crossings.thetas.iter().enumerate() {
        // tangential derivative of the degree-zero extension on |x| = 1
        let deriv = |j: usize| -> f64 {
            spec.potentials[j]
                .homogeneous
                .as_ref()
                .map(|a| a.deriv(*th))
                .unwrap_or(0.0)
        };
        let total: f64 = crossings.memberships[k].iter().map(|&l| deriv(l)).sum();
        for &j in &crossings.memberships[k] {
            let margin = deriv(j) * total;
            let pass = margin > 0.0;
            all_pass &= pass;
            entries.push((k, j, margin, pass));
        }
    }
    GradientConditionReport { entries, all_pass }
}

// ---------------------------------------------------------------------------
// direction cutoffs χ_j
// ---------------------------------------------------------------------------

/// Smooth degree-zero cutoff for one channel: 1 near its owned crossing
/// directions, 0 near all other crossing directions.
#[derive(Clone, Debug)]
pub enum CutoffFn {
    Zero,
    One,
    Bumps { centers: Vec<f64>, width: f64 },
}

impl CutoffFn {
    /// Angular profile (without the interior blend).
    pub fn angular_value(&self, theta: f64) -> f64 {
        match self {
            CutoffFn::Zero => 0.0,
            CutoffFn::One => 1.0,
            CutoffFn::Bumps { centers, width } => centers
                .iter()
                .map(|&c| plateau_bump(angular_distance(theta, c), *width))
                .sum(),
        }
    }

    pub fn angular_deriv(&self, theta: f64) -> f64 {
        match self {
            CutoffFn::Zero | CutoffFn::One => 0.0,
            CutoffFn::Bumps { centers, width } => {
                let mut acc = 0.0;
                for &c in centers {
                    let mut d = (theta - c).rem_euclid(std::f64::consts::TAU);
                    let sign;
                    if d > std::f64::consts::PI {
                        d = std::f64::consts::TAU - d;
                        sign = -1.0;
                    } else {
                        sign = 1.0;
                    }
                    acc += sign * plateau_bump_deriv(d, *width);
                }
                acc
            }
        }
    }

    /// Full value at a point: interior blend times the angular profile
    /// (the `One` variant ignores the blend — it is a test convenience).
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            CutoffFn::Zero => 0.0,
            CutoffFn::One => 1.0,
            CutoffFn::Bumps { .. } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let b = radial_blend(r);
                if b == 0.0 {
                    return 0.0;
                }
                let theta = x[1].atan2(x[0]);
                b * self.angular_value(theta)
            }
        }
    }
}

/// 1 for `d ≤ width/2`, 0 for `d ≥ width`, smooth monotone between.
fn plateau_bump(d: f64, width: f64) -> f64 {
    cinf_step((width - d) / (0.5 * width))
}

fn plateau_bump_deriv(d: f64, width: f64) -> f64 {
    -cinf_step_deriv((width - d) / (0.5 * width)) / (0.5 * width)
}

/// Build the cutoff family for every channel.
///
/// `χ_j = 1` within `width/2` of each ω_k with `j ∈ J_k`, `χ_j = 0` within
/// `width/2` of every other crossing direction; channels with no crossing get
/// the zero function.
pub fn build_cutoffs(crossings: &CrossingSet, width: f64, channel_count: usize) -> Result<Vec<CutoffFn>> {
    let sep = crossings.min_separation();
    // support of an owned bump is width; the foreign zero-region is width/2
    if 1.5 * width > sep {
        return Err(Error::WidthTooLarge {
            width,
            separation: sep,
        });
    }
    let mut out = Vec::with_capacity(channel_count);
    for j in 0..channel_count {
        let centers: Vec<f64> = crossings
            .thetas
            .iter()
            .zip(&crossings.memberships)
            .filter(|(_, m)| m.contains(&j))
            .map(|(&t, _)| t)
            .collect();
        if centers.is_empty() {
            out.push(CutoffFn::Zero);
        } else {
            out.push(CutoffFn::Bumps { centers, width });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// the weight a(x) and its gradient
// ---------------------------------------------------------------------------

/// The adapted dilation weight `a(x) = (1 - 2β Σ_j Ṽ_j(x) χ_j(x)) |x|²/4`
/// with analytic gradient.
#[derive(Clone, Debug)]
pub struct WeightFn {
    pub beta: f64,
    terms: Vec<(AngularPreset, CutoffFn)>,
}

/// Value and polar first derivatives of one factor at a point.
struct PolarEval {
    v: f64,
    dr: f64,
    dth: f64,
}

fn homogeneous_polar(ang: &AngularPreset, r: f64, theta: f64) -> PolarEval {
    let b = radial_blend(r);
    let db = radial_blend_deriv(r);
    PolarEval {
        v: b * ang.value(theta),
        dr: db * ang.value(theta),
        dth: b * ang.deriv(theta),
    }
}

fn cutoff_polar(c: &CutoffFn, r: f64, theta: f64) -> PolarEval {
    match c {
        CutoffFn::Zero => PolarEval {
            v: 0.0,
            dr: 0.0,
            dth: 0.0,
        },
        CutoffFn::One => PolarEval {
            v: 1.0,
            dr: 0.0,
            dth: 0.0,
        },
        CutoffFn::Bumps { .. } => {
            let b = radial_blend(r);
            let db = radial_blend_deriv(r);
            PolarEval {
                v: b * c.angular_value(theta),
                dr: db * c.angular_value(theta),
                dth: b * c.angular_deriv(theta),
            }
        }
    }
}

impl WeightFn {
    /// `s(x) = Σ_j Ṽ_j(x) χ_j(x)` and its gradient.
    fn s_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < 1e-14 || self.terms.is_empty() {
            return (0.0, vec![0.0; n]);
        }
        let theta = if n == 2 { x[1].atan2(x[0]) } else { 0.0 };
        let mut s = 0.0;
        let (mut s_dr, mut s_dth) = (0.0, 0.0);
        for (ang, cut) in &self.terms {
            let a = homogeneous_polar(ang, r, theta);
            let c = cutoff_polar(cut, r, theta);
            s += a.v * c.v;
            s_dr += a.dr * c.v + a.v * c.dr;
            s_dth += a.dth * c.v + a.v * c.dth;
        }
        let mut grad = vec![0.0; n];
        match n {
            1 => {
                grad[0] = s_dr * x[0].signum();
            }
            2 => {
                let (er_x, er_y) = (x[0] / r, x[1] / r);
                // ê_θ = (-sin θ, cos θ)
                grad[0] = s_dr * er_x - s_dth * er_y / r;
                grad[1] = s_dr * er_y + s_dth * er_x / r;
            }
            _ => unreachable!(),
        }
        (s, grad)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let (s, _) = self.s_and_grad(x);
        (1.0 - 2.0 * self.beta * s) * r2 / 4.0
    }

    /// `∇a = -(β/2)|x|²∇s + (1 - 2βs)x/2`.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let (s, gs) = self.s_and_grad(x);
        x.iter()
            .zip(&gs)
            .map(|(&xi, &gi)| -(self.beta / 2.0) * r2 * gi + (1.0 - 2.0 * self.beta * s) * xi / 2.0)
            .collect()
    }

    /// Gradient of `g(x) = |x|² s(x)`; used by the β surrogate check.
    pub fn grad_r2s(&self, x: &[f64]) -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let (s, gs) = self.s_and_grad(x);
        x.iter()
            .zip(&gs)
            .map(|(&xi, &gi)| 2.0 * xi * s + r2 * gi)
            .collect()
    }
}

/// Assemble the weight, failing if the positivity margin
/// `1 - 2β Σ Ṽ_j χ_j ≥ 1/2` does not hold (sampled densely in angle and on
/// interior rings; outside the blend the expression is radius-independent).
pub fn weight_a(spec: &ProblemSpec, cutoffs: &[CutoffFn], beta: f64) -> Result<WeightFn> {
    assert!(beta >= 0.0);
    let terms: Vec<(AngularPreset, CutoffFn)> = spec
        .potentials
        .iter()
        .zip(cutoffs)
        .map(|(p, c)| {
            (
                p.homogeneous.clone().unwrap_or(AngularPreset::Zero),
                c.clone(),
            )
        })
        .collect();
    let w = WeightFn { beta, terms };
    if beta > 0.0 {
        let mut margin = f64::INFINITY;
        for ring in [0.3, 0.4, 0.45, 0.6, 1.0, 2.0] {
            for i in 0..2048 {
                let th = std::f64::consts::TAU * i as f64 / 2048.0;
                let x = [ring * th.cos(), ring * th.sin()];
                let (s, _) = w.s_and_grad(&x);
                margin = margin.min(1.0 - 2.0 * beta * s);
            }
        }
        if margin < 0.5 {
            return Err(Error::BetaTooLarge { beta, margin });
        }
    }
    Ok(w)
}

/// Halve β from 0.5 until the weight positivity margin holds and the
/// discrete surrogate of the second-order condition — pointwise positive
/// semidefiniteness of `I - 2β·Hess(|x|² Σ Ṽ_j χ_j)` — holds on a sample of
/// grid points. Returns the selected β.
pub fn auto_select_beta(
    spec: &ProblemSpec,
    cutoffs: &[CutoffFn],
    sample_points: &[Vec<f64>],
) -> Result<(f64, WeightFn)> {
    let mut beta = 0.5;
    for _ in 0..24 {
        match weight_a(spec, cutoffs, beta) {
            Ok(w) => {
                if surrogate_psd_holds(&w, beta, sample_points) {
                    return Ok((beta, w));
                }
            }
            Err(Error::BetaTooLarge { .. }) => {}
            Err(e) => return Err(e),
        }
        beta *= 0.5;
    }
    Err(Error::BetaTooLarge {
        beta,
        margin: f64::NAN,
    })
}

fn surrogate_psd_holds(w: &WeightFn, beta: f64, points: &[Vec<f64>]) -> bool {
    let fd = 1e-4;
    for x in points {
        let n = x.len();
        // FD Hessian of g = |x|² s from the analytic gradient
        let mut hess = vec![0.0; n * n];
        for l in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += fd;
            xm[l] -= fd;
            let gp = w.grad_r2s(&xp);
            let gm = w.grad_r2s(&xm);
            for i in 0..n {
                hess[l * n + i] = (gp[i] - gm[i]) / (2.0 * fd);
            }
        }
        // M = I - 2β H, symmetrized; require min eigenvalue ≥ -1e-6
        let min_eig = match n {
            1 => 1.0 - 2.0 * beta * hess[0],
            2 => {
                let h01 = 0.5 * (hess[1] + hess[2]);
                let m00 = 1.0 - 2.0 * beta * hess[0];
                let m11 = 1.0 - 2.0 * beta * hess[3];
                let m01 = -2.0 * beta * h01;
                let tr = 0.5 * (m00 + m11);
                let det_part = (0.25 * (m00 - m11) * (m00 - m11) + m01 * m01).sqrt();
                tr - det_part
            }
            _ => unreachable!(),
        };
        if min_eig < -1e-6 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// assumption validation report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    /// `None` means informational / delegated
    pub passed: Option<bool>,
    pub detail: String,
    /// sampled decay curves: (label, [(radius, value)])
    pub curves: Vec<(String, Vec<(f64, f64)>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed.unwrap_or(true))
    }
}

/// Sampled numerical surrogates of the standing decay/structure assumptions.
///
/// Radial derivatives `(x·∇)^l f` for `l ≤ 2` are measured along rays out to
/// the box scale; the single-operator Mourre bound of the decaying-mode
/// assumption is delegated to `spectral::mourre_report` per channel.
pub fn validate_assumptions(spec: &ProblemSpec, lambda: f64, half_width: f64) -> AssumptionReport {
    let mut checks = Vec::new();
    let rays = ray_directions(spec.ambient_dim);
    let radii: Vec<f64> = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|f| f * half_width)
        .collect();

    // homogeneity of the Ṽ_j
    if spec.mode == Mode::Homogeneous {
        let mut worst = 0.0f64;
        for p in &spec.potentials {
            if let Some(ang) = &p.homogeneous {
                for ray in &rays {
                    for s in [1.0, 2.0, 4.0] {
                        let x1: Vec<f64> = ray.iter().map(|d| d * 0.75).collect();
                        let xs: Vec<f64> = ray.iter().map(|d| d * 0.75 * s).collect();
                        worst = worst
                            .max((homogeneous_value(ang, &x1) - homogeneous_value(ang, &xs)).abs());
                    }
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "homogeneous degree-zero extension".into(),
            passed: Some(worst <= 1e-12),
            detail: format!("max |V~(sx) - V~(x)| = {worst:.3e} for s in [1,4], |x| ≥ 1/2"),
            curves: Vec::new(),
        });
        match find_crossings(spec, lambda) {
            Ok(cr) => {
                let rep = check_gradient_condition(&cr, spec);
                checks.push(AssumptionCheck {
                    name: "crossing gradient condition".into(),
                    passed: Some(rep.all_pass),
                    detail: format!(
                        "{} crossing directions, margins {:?}",
                        cr.thetas.len(),
                        rep.entries
                            .iter()
                            .map(|e| e.2)
                            .collect::<Vec<_>>()
                    ),
                    curves: Vec::new(),
                });
            }
            Err(e) => checks.push(AssumptionCheck {
                name: "crossing gradient condition".into(),
                passed: Some(false),
                detail: format!("{e}"),
                curves: Vec::new(),
            }),
        }
    }

    // decaying parts W_j
    for (j, p) in spec.potentials.iter().enumerate() {
        if let Some((w, _rate)) = &p.decaying {
            let f = |x: &[f64]| w.value(x.iter().map(|v| v * v).sum::<f64>().sqrt());
            let (curves, passed) = decay_curves(&f, &rays, &radii);
            checks.push(AssumptionCheck {
                name: format!("W_{j} decay o(1) with radial derivatives"),
                passed: Some(passed),
                detail: "require value at box edge ≤ half of the inner-quarter value".into(),
                curves,
            });
        }
    }

    // couplings
    for c in &spec.couplings {
        if !c.r_hat.is_zero() {
            let cc = c.clone();
            let f = move |x: &[f64]| cc.r_hat_value(x);
            let (curves, passed) = decay_curves(&f, &rays, &radii);
            checks.push(AssumptionCheck {
                name: format!("coupling r̂_{{{},{}}} decay o(1)", c.j, c.k),
                passed: Some(passed),
                detail: format!("nominal ρ = {}", c.decay_rate),
                curves,
            });
        }
        if !c.r_tilde.is_zero() {
            let cc = c.clone();
            let f = move |x: &[f64]| {
                cc.r_tilde_value(x)
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            };
            let (curves, passed) = decay_curves(&f, &rays, &radii);
            checks.push(AssumptionCheck {
                name: format!("coupling |r̃_{{{},{}}}| decay o(1)", c.j, c.k),
                passed: Some(passed),
                detail: format!("nominal ρ = {}", c.decay_rate),
                curves,
            });
        }
    }

    // many-body structure
    if spec.mode == Mode::ManyBody {
        if let Some(lat) = &spec.lattice {
            for (j, p) in spec.potentials.iter().enumerate() {
                for t in &p.manybody_terms {
                    let ok_proj = lat
                        .projectors(t.element)
                        .map(|pp| {
                            pp.onto_complement
                                .data
                                .iter()
                                .zip(&t.projector.data)
                                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                                <= 1e-12
                        })
                        .unwrap_or(false);
                    // invariance along X_b: moving along the subspace must not
                    // change the value
                    let mut worst = 0.0f64;
                    if let Ok(el) = lat.element(t.element) {
                        let b = el.basis();
                        for col in 0..b.cols {
                            let shift: Vec<f64> = b.col(col).to_vec();
                            for scale in [0.5, 2.0] {
                                let x0: Vec<f64> = (0..spec.ambient_dim)
                                    .map(|i| 0.3 + 0.17 * i as f64)
                                    .collect();
                                let x1: Vec<f64> = x0
                                    .iter()
                                    .zip(&shift)
                                    .map(|(a, s)| a + s * scale)
                                    .collect();
                                worst = worst.max((t.value(&x0) - t.value(&x1)).abs());
                            }
                        }
                    }
                    let passed = ok_proj && worst <= 1e-10;
                    checks.push(AssumptionCheck {
                        name: format!("v_{j}^{} depends on x^b only", t.element),
                        passed: Some(passed),
                        detail: format!(
                            "projector matches Π^b: {ok_proj}; invariance defect along X_b: {worst:.3e}"
                        ),
                        curves: Vec::new(),
                    });
                    // internal decay of v^b
                    if let Ok(basis) = lat.complement_basis(t.element) {
                        if basis.cols > 0 {
                            let tt = t.clone();
                            let dirs: Vec<Vec<f64>> = (0..basis.cols)
                                .flat_map(|c| {
                                    let v = basis.col(c).to_vec();
                                    let neg = v.iter().map(|a| -a).collect();
                                    [v, neg]
                                })
                                .collect();
                            let f = move |x: &[f64]| tt.value(x);
                            let (curves, passed) = decay_curves(&f, &dirs, &radii);
                            checks.push(AssumptionCheck {
                                name: format!("v_{j}^{} internal decay o(1)", t.element),
                                passed: Some(passed),
                                detail: String::new(),
                                curves,
                            });
                        }
                    }
                }
            }
        }
    }

    if spec.mode == Mode::Decaying {
        // boundedness of (x·∇)^l V_j is informational at desk scale
        for (j, p) in spec.potentials.iter().enumerate() {
            let pc = p.clone();
            let f = move |x: &[f64]| pc.value(x);
            let (curves, _) = decay_curves(&f, &rays, &radii);
            let max_abs = curves
                .iter()
                .flat_map(|(_, pts)| pts.iter().map(|p| p.1.abs()))
                .fold(0.0f64, f64::max);
            checks.push(AssumptionCheck {
                name: format!("(x·∇)^l V_{j} bounded (l ≤ 2)"),
                passed: Some(max_abs.is_finite()),
                detail: format!("max sampled magnitude {max_abs:.3e}"),
                curves,
            });
        }
        checks.push(AssumptionCheck {
            name: "per-channel Mourre bound at λ".into(),
            passed: None,
            detail: format!(
                "delegated to spectral::mourre_report on each diagonal channel at λ = {lambda}"
            ),
            curves: Vec::new(),
        });
    }

    AssumptionReport { checks }
}

fn ray_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / 8.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => unreachable!(),
    }
}

/// Sample `(x·∇)^l f` for `l = 0, 1, 2` along rays at the given radii.
/// Pass criterion: for each l, the max over rays at the outermost radius is
/// at most half of the innermost one (or everything is essentially zero).
fn decay_curves<F: Fn(&[f64]) -> f64>(
    f: &F,
    rays: &[Vec<f64>],
    radii: &[f64],
) -> (Vec<(String, Vec<(f64, f64)>)>, bool) {
    let mut curves = Vec::new();
    let mut passed = true;
    for l in 0..=2usize {
        let mut pts = Vec::new();
        for &r in radii {
            let mut worst = 0.0f64;
            for ray in rays {
                let g = |rr: f64| {
                    let x: Vec<f64> = ray.iter().map(|d| d * rr).collect();
                    f(&x)
                };
                let h = (1e-3 * r).max(1e-6);
                let val = match l {
                    0 => g(r),
                    1 => r * (g(r + h) - g(r - h)) / (2.0 * h),
                    _ => {
                        // (x·∇)² f = r f' + r² f''
                        let f1 = (g(r + h) - g(r - h)) / (2.0 * h);
                        let f2 = (g(r + h) - 2.0 * g(r) + g(r - h)) / (h * h);
                        r * f1 + r * r * f2
                    }
                };
                worst = worst.max(val.abs());
            }
            pts.push((r, worst));
        }
        let inner = pts.first().map(|p| p.1).unwrap_or(0.0);
        let outer = pts.last().map(|p| p.1).unwrap_or(0.0);
        let all_tiny = pts.iter().all(|p| p.1 <= 1e-10);
        if !(all_tiny || outer <= 0.5 * inner + 1e-12) {
            passed = false;
        }
        curves.push((format!("(x·∇)^{l}"), pts));
    }
    (curves, passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homog_spec(presets: Vec<AngularPreset>) -> ProblemSpec {
        let m = presets.len();
        ProblemSpec {
            channel_count: m,
            ambient_dim: 2,
            mode: Mode::Homogeneous,
            potentials: presets
                .into_iter()
                .map(|a| ChannelPotential {
                    homogeneous: Some(a),
                    decaying: None,
                    constant: 0.0,
                    manybody_terms: Vec::new(),
                })
                .collect(),
            couplings: Vec::new(),
            lattice: None,
        }
    }

    fn cosine(phase: f64) -> AngularPreset {
        AngularPreset::CosineHomogeneous {
            amplitude: 1.0,
            harmonic: 1,
            phase,
            offset: 0.0,
        }
    }

    #[test]
    fn crossings_of_cosine_at_zero() {
        let spec = homog_spec(vec![cosine(0.0)]);
        let cr = find_crossings(&spec, 0.0).unwrap();
        // cos θ = 0 at θ = π/2, 3π/2, i.e. ω = (0, ±1)
        assert_eq!(cr.thetas.len(), 2);
        for (d, m) in cr.directions.iter().zip(&cr.memberships) {
            assert!(d[0].abs() < 1e-7);
            assert!((d[1].abs() - 1.0).abs() < 1e-7);
            assert_eq!(m, &vec![0]);
        }
    }

    #[test]
    fn identical_channels_share_directions() {
        let spec = homog_spec(vec![cosine(0.0), cosine(0.0)]);
        let cr = find_crossings(&spec, 0.0).unwrap();
        assert_eq!(cr.thetas.len(), 2);
        for m in &cr.memberships {
            assert_eq!(m, &vec![0, 1]);
        }
    }

    #[test]
    fn two_rotated_cosines_give_four_singletons() {
        // oracle: cos θ = 0.3 at θ = ±acos(0.3); the rotated channel shifts
        // both roots by π/4
        let spec = homog_spec(vec![cosine(0.0), cosine(std::f64::consts::FRAC_PI_4)]);
        let cr = find_crossings(&spec, 0.3).unwrap();
        assert_eq!(cr.thetas.len(), 4);
        let root = 0.3f64.acos();
        let tau = std::f64::consts::TAU;
        let mut expected = vec![
            root,
            tau - root,
            (root + std::f64::consts::FRAC_PI_4).rem_euclid(tau),
            (-root + std::f64::consts::FRAC_PI_4).rem_euclid(tau),
        ];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got = cr.thetas.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, e) in got.iter().zip(&expected) {
            assert!(
                angular_distance(*g, *e) < 1e-8,
                "root {g} expected {e}"
            );
        }
        for m in &cr.memberships {
            assert_eq!(m.len(), 1);
        }
    }

    #[test]
    fn critical_value_rejected() {
        let spec = homog_spec(vec![cosine(0.0)]);
        // λ = 1 is the max of cos θ: tangential crossing
        let err = find_crossings(&spec, 1.0).unwrap_err();
        assert!(matches!(err, Error::CriticalValue { .. }));
    }

    #[test]
    fn gradient_condition_margins() {
        // identical channels: margin = 2|∇V|² > 0
        let spec = homog_spec(vec![cosine(0.0), cosine(0.0)]);
        let cr = find_crossings(&spec, 0.0).unwrap();
        let rep = check_gradient_condition(&cr, &spec);
        assert!(rep.all_pass);
        for (_, _, margin, _) in &rep.entries {
            assert!((margin - 2.0).abs() < 1e-9, "margin {margin}");
        }
        // opposite channels cancel
        let spec2 = homog_spec(vec![
            cosine(0.0),
            AngularPreset::CosineHomogeneous {
                amplitude: -1.0,
                harmonic: 1,
                phase: 0.0,
                offset: 0.0,
            },
        ]);
        let cr2 = find_crossings(&spec2, 0.0).unwrap();
        let rep2 = check_gradient_condition(&cr2, &spec2);
        assert!(!rep2.all_pass);
        for (_, _, margin, pass) in &rep2.entries {
            assert!(margin.abs() < 1e-9);
            assert!(!pass);
        }
    }

    #[test]
    fn cutoff_plateaus_and_zeros() {
        // two crossings at angular distance π, width π/4
        let spec = homog_spec(vec![cosine(0.0), cosine(std::f64::consts::PI)]);
        let cr = find_crossings(&spec, 0.5).unwrap();
        // cos θ = 0.5 at ±π/3; rotated channel at π ± π/3
        assert_eq!(cr.thetas.len(), 4);
        let width = std::f64::consts::FRAC_PI_4;
        let cuts = build_cutoffs(&cr, width, 2).unwrap();
        for (k, th) in cr.thetas.iter().enumerate() {
            for j in 0..2 {
                let owned = cr.memberships[k].contains(&j);
                for d in [-0.49, 0.0, 0.49] {
                    let theta = th + d * width / 2.0 * 0.999;
                    let v = cuts[j].angular_value(theta);
                    if owned {
                        assert!((v - 1.0).abs() < 1e-12, "plateau violated: {v}");
                    } else {
                        assert!(v.abs() < 1e-12, "zero region violated: {v}");
                    }
                }
            }
        }
        // values in [0, 1] on a dense grid
        for i in 0..4096 {
            let th = std::f64::consts::TAU * i as f64 / 4096.0;
            for c in &cuts {
                let v = c.angular_value(th);
                assert!((-1e-15..=1.0 + 1e-15).contains(&v));
            }
        }
    }

    #[test]
    fn width_too_large_rejected() {
        let spec = homog_spec(vec![cosine(0.0)]);
        let cr = find_crossings(&spec, 0.0).unwrap(); // directions π/2, 3π/2 (sep π)
        let err = build_cutoffs(&cr, 2.2, 1).unwrap_err();
        assert!(matches!(err, Error::WidthTooLarge { .. }));
    }

    #[test]
    fn no_crossing_channel_gets_zero_cutoff() {
        let spec = homog_spec(vec![
            cosine(0.0),
            AngularPreset::CosineHomogeneous {
                amplitude: 0.2,
                harmonic: 1,
                phase: 0.0,
                offset: 5.0,
            },
        ]);
        let cr = find_crossings(&spec, 0.0).unwrap();
        let cuts = build_cutoffs(&cr, 0.3, 2).unwrap();
        assert!(matches!(cuts[1], CutoffFn::Zero));
    }

    #[test]
    fn weight_value_oracle() {
        // Ṽ_1 = cos θ, χ_1 ≡ 1, β = 0.1, x = (2,0): a = (1 - 0.2)·4/4 = 0.8
        let spec = homog_spec(vec![cosine(0.0)]);
        let w = weight_a(&spec, &[CutoffFn::One], 0.1).unwrap();
        assert!((w.value(&[2.0, 0.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn weight_beta_zero_is_quarter_r2() {
        let spec = homog_spec(vec![cosine(0.0)]);
        let w = weight_a(&spec, &[CutoffFn::One], 0.0).unwrap();
        for x in [[1.3, -0.4], [0.1, 0.0], [-3.0, 2.0]] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            assert_eq!(w.value(&x), r2 / 4.0);
            let g = w.grad(&x);
            assert!((g[0] - x[0] / 2.0).abs() < 1e-15);
            assert!((g[1] - x[1] / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_gradient_matches_fd() {
        let spec = homog_spec(vec![cosine(0.0), cosine(1.1)]);
        let cr = find_crossings(&spec, 0.3).unwrap();
        let cuts = build_cutoffs(&cr, 0.2, 2).unwrap();
        let w = weight_a(&spec, &cuts, 0.05).unwrap();
        let h = 1e-6;
        for x in [[1.7, 0.9], [0.4, -0.35], [-2.0, 0.01], [0.2, 0.1]] {
            let g = w.grad(&x);
            for l in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[l] += h;
                xm[l] -= h;
                let fd = (w.value(&xp) - w.value(&xm)) / (2.0 * h);
                assert!(
                    (g[l] - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                    "grad mismatch at {x:?} axis {l}: {} vs {fd}",
                    g[l]
                );
            }
        }
    }

    #[test]
    fn beta_too_large_detected() {
        let spec = homog_spec(vec![AngularPreset::CosineHomogeneous {
            amplitude: 0.0,
            harmonic: 1,
            phase: 0.0,
            offset: 10.0,
        }]);
        let err = weight_a(&spec, &[CutoffFn::One], 0.4).unwrap_err();
        assert!(matches!(err, Error::BetaTooLarge { .. }));
    }

    #[test]
    fn constant_coupling_fails_decay_check() {
        let mut spec = homog_spec(vec![cosine(0.0), cosine(0.5)]);
        spec.couplings.push(CouplingTerm {
            j: 0,
            k: 1,
            r_tilde: VectorPreset::Zero,
            r_hat: RadialPreset::Constant { value: 0.5 },
            lattice_element: None,
            decay_rate: 0.0,
            projector: None,
        });
        let rep = validate_assumptions(&spec, 0.3, 40.0);
        let coupling_check = rep
            .checks
            .iter()
            .find(|c| c.name.contains("r̂"))
            .expect("coupling check present");
        assert_eq!(coupling_check.passed, Some(false));
    }

    #[test]
    fn coulomb_like_coupling_passes_decay_check() {
        let mut spec = homog_spec(vec![cosine(0.0), cosine(0.5)]);
        spec.couplings.push(CouplingTerm {
            j: 0,
            k: 1,
            r_tilde: VectorPreset::Zero,
            r_hat: RadialPreset::CoulombLike {
                strength: 0.3,
                power: 1.0,
            },
            lattice_element: None,
            decay_rate: 1.0,
            projector: None,
        });
        let rep = validate_assumptions(&spec, 0.3, 40.0);
        let coupling_check = rep.checks.iter().find(|c| c.name.contains("r̂")).unwrap();
        assert_eq!(coupling_check.passed, Some(true));
    }

    #[test]
    fn smooth_step_profile_properties() {
        assert_eq!(cinf_step(-0.1), 0.0);
        assert_eq!(cinf_step(1.1), 1.0);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let u = i as f64 / 1000.0;
            let v = cinf_step(u);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-15, "monotone");
            prev = v;
        }
    }
}
