//! Lattice field states and right-hand sides for the original,
//! interaction-representation, and effective systems.
//!
//! All three dynamics share one monomial-table core: the original and
//! interaction forms run over every momentum-matching monomial of the
//! Galerkin box, the effective form over the frequency-matching subset.
//! Rotation frequencies enter the evolution as Ω_k = −ω_k, matching the
//! −iν⁻¹ω_k v_k linear term of both lattice models.

mod monomials;
mod snapshot;

pub use monomials::{CubicMonomial, MonomialTable, QuadMonomial, TableKind};
pub use snapshot::{snapshot_from_json, snapshot_to_json};

use crate::lattice::{BoxGrid, Dispersion, WaveVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("state grid (dim {state_dim}, cutoff {state_cutoff}) does not match params (dim {params_dim}, cutoff {params_cutoff})")]
    GridMismatch {
        state_dim: usize,
        state_cutoff: i32,
        params_dim: usize,
        params_cutoff: i32,
    },
    #[error("monomial table built for a different model or cutoff")]
    TableMismatch,
    #[error("damping profile must be strictly positive, found {0} at {1}")]
    NonPositiveDamping(f64, WaveVector),
    #[error("monomial table budget exceeded: {found} > {budget}")]
    TableBudget { found: usize, budget: usize },
    #[error("snapshot parse error: {0}")]
    Snapshot(String),
}

/// Complex amplitudes {v_k} (or {a_k}) on a truncated lattice box.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: BoxGrid,
    /// Slow time τ.
    pub tau: f64,
    /// Real-field constraint v_{−k} = v_k*.
    pub reality: bool,
    amps: Vec<Complex64>,
}

impl FieldState {
    pub fn zero(dim: usize, cutoff: i32, reality: bool) -> Self {
        let grid = BoxGrid::new(dim, cutoff);
        FieldState {
            grid,
            tau: 0.0,
            reality,
            amps: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amp(&self, k: &WaveVector) -> Complex64 {
        self.grid.index(k).map(|i| self.amps[i]).unwrap_or_default()
    }

    pub fn amp_at(&self, idx: usize) -> Complex64 {
        self.amps[idx]
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Set v_k; under the reality constraint also sets v_{−k} = v_k*.
    pub fn set(&mut self, k: &WaveVector, value: Complex64) {
        let idx = self.grid.index(k).expect("mode inside the box");
        self.amps[idx] = value;
        if self.reality {
            let ni = self.grid.neg_index(idx);
            self.amps[ni] = value.conj();
            if ni == idx {
                // k = 0 must be real
                self.amps[idx] = Complex64::new(value.re, 0.0);
            }
        }
    }

    /// Symmetrize to v_{−k} = v_k* (projects onto the real-field subspace).
    pub fn enforce_reality(&mut self) {
        for idx in 0..self.amps.len() {
            let ni = self.grid.neg_index(idx);
            if ni < idx {
                continue;
            }
            if ni == idx {
                self.amps[idx] = Complex64::new(self.amps[idx].re, 0.0);
            } else {
                let avg = 0.5 * (self.amps[idx] + self.amps[ni].conj());
                self.amps[idx] = avg;
                self.amps[ni] = avg.conj();
            }
        }
    }

    /// Max |v_{−k} − v_k*| over the box.
    pub fn reality_defect(&self) -> f64 {
        (0..self.amps.len())
            .map(|i| (self.amps[self.grid.neg_index(i)] - self.amps[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Wave action I_k = |v_k|²/2.
    pub fn action(&self, k: &WaveVector) -> f64 {
        0.5 * self.amp(k).norm_sqr()
    }
}

/// Damping / forcing profile over modes.
#[derive(Debug, Clone)]
pub enum Profile {
    Uniform(f64),
    /// coeff · |k|^exponent, clamped below at `min`.
    PowerLaw { coeff: f64, exponent: f64, min: f64 },
    PerMode(BTreeMap<WaveVector, f64>),
}

impl Profile {
    pub fn eval(&self, k: &WaveVector) -> f64 {
        match self {
            Profile::Uniform(v) => *v,
            Profile::PowerLaw { coeff, exponent, min } => {
                let kk = (k.norm_sq() as f64).sqrt();
                (coeff * kk.powf(*exponent)).max(*min)
            }
            Profile::PerMode(map) => map.get(k).copied().unwrap_or(0.0),
        }
    }
}

/// The two lattice models; exact rationals are kept for the resonance
/// machinery, with float views for the dynamics.
#[derive(Debug, Clone)]
pub enum Model {
    /// Cubic lattice Schrödinger: coupling iδ, ω_k = |k|²/L².
    Nls {
        dim: usize,
        box_size: BigRational,
        delta: f64,
    },
    /// Beta-plane quadratic model; ω_k = −mρ/(m²+n²ρ²+Fρ²).
    Chm { rho: BigRational, froude: BigRational },
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Nls { dim, .. } => *dim,
            Model::Chm { .. } => 2,
        }
    }

    pub fn dispersion(&self) -> Dispersion {
        match self {
            Model::Nls { dim, box_size, .. } => Dispersion::nls(*dim, box_size.clone()),
            Model::Chm { rho, froude } => Dispersion::chm(rho.clone(), froude.clone()),
        }
    }

    /// Real fields only for the beta-plane model.
    pub fn reality(&self) -> bool {
        matches!(self, Model::Chm { .. })
    }

    pub fn nonlinearity_degree(&self) -> u8 {
        match self {
            Model::Nls { .. } => 3,
            Model::Chm { .. } => 2,
        }
    }
}

/// Slow-time convention relating ν to ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuConvention {
    /// ν = ε² (the cubic-model scaling).
    CubicNls,
    /// ν = ε^q for nonlinearity degree q.
    GeneralQ,
}

pub fn nu_from_epsilon(epsilon: f64, q: u8, convention: NuConvention) -> f64 {
    match convention {
        NuConvention::CubicNls => epsilon * epsilon,
        NuConvention::GeneralQ => epsilon.powi(i32::from(q)),
    }
}

/// Full parameter set of the damped/forced weakly nonlinear system.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub model: Model,
    pub cutoff: i32,
    /// Amplitude parameter ε (bookkeeping; the slow-time system integrates
    /// with ν explicit).
    pub epsilon: f64,
    /// Slow-time parameter ν > 0.
    pub nu: f64,
    /// Forcing switch μ ∈ {0, 1}.
    pub mu: u8,
    pub gamma: Profile,
    pub forcing: Profile,
}

impl ModelParams {
    pub fn grid(&self) -> BoxGrid {
        BoxGrid::new(self.model.dim(), self.cutoff)
    }

    /// Rotation frequency Ω_k = −ω_k entering dv_k/dτ = iν⁻¹Ω_k v_k + …
    pub fn rotation(&self, k: &WaveVector) -> f64 {
        let disp = self.model.dispersion();
        -disp.omega_f64(k).expect("mode dimension matches model")
    }

    pub fn gamma_at(&self, k: &WaveVector) -> f64 {
        self.gamma.eval(k)
    }

    /// Weight w_k of the quadratic form Σ w_k |v_k|² that the model's
    /// nonlinearity conserves: 1 for the cubic model, m²+n²ρ²+Fρ² for the
    /// beta-plane model (the Jacobian pairing).
    pub fn conservation_weight(&self, k: &WaveVector) -> f64 {
        match &self.model {
            Model::Nls { .. } => 1.0,
            Model::Chm { rho, froude } => {
                let rho2 = rational_f64(&(rho * rho));
                let f = rational_f64(froude);
                let m = f64::from(k.m());
                let n = f64::from(k.n());
                m * m + (n * n + f) * rho2
            }
        }
    }

    /// Σ w_k |v_k|², the model's decaying quadratic norm.
    pub fn weighted_norm_sq(&self, state: &FieldState) -> f64 {
        self.grid()
            .iter()
            .enumerate()
            .map(|(i, k)| self.conservation_weight(&k) * state.amp_at(i).norm_sqr())
            .sum()
    }

    pub fn forcing_at(&self, k: &WaveVector) -> f64 {
        self.forcing.eval(k)
    }

    /// min_k γ_k over the box; must be positive.
    pub fn gamma_star(&self) -> f64 {
        self.grid()
            .iter()
            .map(|k| self.gamma.eval(&k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        for k in self.grid().iter() {
            let g = self.gamma.eval(&k);
            if !(g > 0.0) {
                return Err(FieldError::NonPositiveDamping(g, k));
            }
        }
        Ok(())
    }

    fn check_state(&self, state: &FieldState) -> Result<(), FieldError> {
        if state.grid().dim() != self.model.dim() || state.grid().cutoff() != self.cutoff {
            return Err(FieldError::GridMismatch {
                state_dim: state.grid().dim(),
                state_cutoff: state.grid().cutoff(),
                params_dim: self.model.dim(),
                params_cutoff: self.cutoff,
            });
        }
        Ok(())
    }
}

pub fn rational_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap()
}

fn apply_monomials(
    table: &MonomialTable,
    amps: &[Complex64],
    out: &mut [Complex64],
    phase: Option<(f64, f64)>, // (ν⁻¹, τ): multiply each term by exp(i ν⁻¹ Λ τ)
) {
    match &table.kind {
        TableKind::Cubic(monos) => {
            for m in monos {
                let mut term = m.coeff * amps[m.k1] * amps[m.k2] * amps[m.k3].conj();
                if let Some((inv_nu, tau)) = phase {
                    if m.mismatch != 0.0 {
                        term *= Complex64::from_polar(1.0, inv_nu * m.mismatch * tau);
                    }
                }
                out[m.k] += term;
            }
        }
        TableKind::Quadratic(monos) => {
            for m in monos {
                let mut term = m.coeff * amps[m.k1] * amps[m.k2];
                if let Some((inv_nu, tau)) = phase {
                    if m.mismatch != 0.0 {
                        term *= Complex64::from_polar(1.0, inv_nu * m.mismatch * tau);
                    }
                }
                out[m.k] += term;
            }
        }
    }
}

/// Nonlinearity P(v) alone, from a monomial table (no damping, no rotation).
pub fn nonlinearity(
    state: &FieldState,
    params: &ModelParams,
    table: &MonomialTable,
) -> Result<FieldState, FieldError> {
    params.check_state(state)?;
    table.check(params)?;
    let mut out = FieldState::zero(params.model.dim(), params.cutoff, state.reality);
    out.tau = state.tau;
    apply_monomials(table, &state.amps, &mut out.amps, None);
    Ok(out)
}

/// dv_k/dτ = iν⁻¹Ω_k v_k + P_k(v) − γ_k v_k (forcing handled by the
/// integrator). `table` must hold the full momentum-matching monomials.
pub fn original_rhs(
    state: &FieldState,
    _tau: f64,
    params: &ModelParams,
    table: &MonomialTable,
) -> Result<FieldState, FieldError> {
    params.check_state(state)?;
    table.check(params)?;
    let mut out = FieldState::zero(params.model.dim(), params.cutoff, state.reality);
    out.tau = state.tau;
    apply_monomials(table, &state.amps, &mut out.amps, None);
    let inv_nu = 1.0 / params.nu;
    for (idx, k) in params.grid().iter().enumerate() {
        let lin = Complex64::new(-params.gamma_at(&k), inv_nu * params.rotation(&k));
        out.amps[idx] += lin * state.amps[idx];
    }
    Ok(out)
}

/// da_k/dτ = R_k(a, ν⁻¹τ) − γ_k a_k, each monomial carrying its oscillatory
/// factor exp(iν⁻¹ Λ τ) with Λ the rotation mismatch.
pub fn interaction_rhs(
    state: &FieldState,
    tau: f64,
    params: &ModelParams,
    table: &MonomialTable,
) -> Result<FieldState, FieldError> {
    params.check_state(state)?;
    table.check(params)?;
    let mut out = FieldState::zero(params.model.dim(), params.cutoff, state.reality);
    out.tau = state.tau;
    apply_monomials(
        table,
        &state.amps,
        &mut out.amps,
        Some((1.0 / params.nu, tau)),
    );
    for (idx, k) in params.grid().iter().enumerate() {
        out.amps[idx] -= params.gamma_at(&k) * state.amps[idx];
    }
    Ok(out)
}

/// dã_k/dτ = R_k(ã) − γ_k ã_k over the resonant monomials only; autonomous.
pub fn effective_rhs(
    state: &FieldState,
    params: &ModelParams,
    table: &MonomialTable,
) -> Result<FieldState, FieldError> {
    params.check_state(state)?;
    table.check_resonant(params)?;
    let mut out = FieldState::zero(params.model.dim(), params.cutoff, state.reality);
    out.tau = state.tau;
    apply_monomials(table, &state.amps, &mut out.amps, None);
    for (idx, k) in params.grid().iter().enumerate() {
        out.amps[idx] -= params.gamma_at(&k) * state.amps[idx];
    }
    Ok(out)
}

/// a_k = exp(−iν⁻¹Ω_k τ) v_k at the state's own time.
pub fn to_interaction(state: &FieldState, params: &ModelParams) -> Result<FieldState, FieldError> {
    params.check_state(state)?;
    let mut out = state.clone();
    let inv_nu = 1.0 / params.nu;
    for (idx, k) in params.grid().iter().enumerate() {
        out.amps[idx] *= Complex64::from_polar(1.0, -inv_nu * params.rotation(&k) * state.tau);
    }
    Ok(out)
}

/// Inverse of [`to_interaction`].
pub fn from_interaction(state: &FieldState, params: &ModelParams) -> Result<FieldState, FieldError> {
    params.check_state(state)?;
    let mut out = state.clone();
    let inv_nu = 1.0 / params.nu;
    for (idx, k) in params.grid().iter().enumerate() {
        out.amps[idx] *= Complex64::from_polar(1.0, inv_nu * params.rotation(&k) * state.tau);
    }
    Ok(out)
}

/// Re Σ_k w_k P_k(v) v̄_k with the model's conservation weight w_k: the
/// nonlinearity's contribution to the decaying quadratic norm. Zero to
/// roundoff for both built-in models (for the cubic model w ≡ 1, so this is
/// the plain pairing; the beta-plane Jacobian conserves the D_k-weighted
/// pairing, not the unweighted one).
pub fn dissipation_sign(
    state: &FieldState,
    params: &ModelParams,
    table: &MonomialTable,
) -> Result<f64, FieldError> {
    let p = nonlinearity(state, params, table)?;
    Ok(params
        .grid()
        .iter()
        .enumerate()
        .map(|(i, k)| params.conservation_weight(&k) * (p.amps[i] * state.amps[i].conj()).re)
        .sum())
}
