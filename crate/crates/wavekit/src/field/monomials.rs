//! Precomputed monomial tables backing the RHS evaluations.
//!
//! A table row stores dense grid indices, the slot-symmetrized coefficient
//! (multiplicity included), and the rotation mismatch Λ driving the
//! interaction-representation phase factor. Resonant tables are filtered
//! with the exact integer/rational predicates, never by float comparison.

use super::{rational_f64, FieldError, Model, ModelParams};
use crate::lattice::{chm_triad_resonant_scaled, BoxGrid, WaveVector};
use crate::resonance::chm_symmetrized_coupling;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Default ceiling on stored monomials.
pub const DEFAULT_TABLE_BUDGET: usize = 10_000_000;

/// Term c · a_{k1} a_{k2} a*_{k3} in the equation for mode `k`.
#[derive(Debug, Clone, Copy)]
pub struct CubicMonomial {
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,
    pub k: usize,
    pub coeff: Complex64,
    /// Rotation mismatch Λ = Ω₁+Ω₂−Ω₃−Ω_k; zero exactly on resonance.
    pub mismatch: f64,
}

/// Term c · a_{k1} a_{k2} in the equation for mode `k`.
#[derive(Debug, Clone, Copy)]
pub struct QuadMonomial {
    pub k1: usize,
    pub k2: usize,
    pub k: usize,
    pub coeff: Complex64,
    pub mismatch: f64,
}

#[derive(Debug, Clone)]
pub enum TableKind {
    Cubic(Vec<CubicMonomial>),
    Quadratic(Vec<QuadMonomial>),
}

#[derive(Debug, Clone)]
pub struct MonomialTable {
    pub kind: TableKind,
    pub resonant_only: bool,
    dim: usize,
    cutoff: i32,
    signature: String,
}

impl MonomialTable {
    pub fn len(&self) -> usize {
        match &self.kind {
            TableKind::Cubic(v) => v.len(),
            TableKind::Quadratic(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn signature_of(params: &ModelParams) -> String {
        format!("{:?}|K={}", params.model, params.cutoff)
    }

    pub(super) fn check(&self, params: &ModelParams) -> Result<(), FieldError> {
        if self.dim != params.model.dim()
            || self.cutoff != params.cutoff
            || self.signature != Self::signature_of(params)
        {
            return Err(FieldError::TableMismatch);
        }
        Ok(())
    }

    pub(super) fn check_resonant(&self, params: &ModelParams) -> Result<(), FieldError> {
        self.check(params)?;
        if !self.resonant_only {
            return Err(FieldError::TableMismatch);
        }
        Ok(())
    }

    /// Every momentum-matching monomial of the Galerkin box.
    pub fn full(params: &ModelParams, budget: Option<usize>) -> Result<Self, FieldError> {
        Self::build(params, false, budget.unwrap_or(DEFAULT_TABLE_BUDGET))
    }

    /// The frequency-matching subset (diagonal monomials included).
    pub fn resonant(params: &ModelParams, budget: Option<usize>) -> Result<Self, FieldError> {
        Self::build(params, true, budget.unwrap_or(DEFAULT_TABLE_BUDGET))
    }

    fn build(params: &ModelParams, resonant: bool, budget: usize) -> Result<Self, FieldError> {
        let grid = params.grid();
        let kind = match &params.model {
            Model::Nls { box_size, delta, .. } => {
                TableKind::Cubic(build_cubic(&grid, box_size, *delta, resonant, budget)?)
            }
            Model::Chm { rho, froude } => {
                TableKind::Quadratic(build_quadratic(&grid, rho, froude, resonant, budget)?)
            }
        };
        Ok(MonomialTable {
            kind,
            resonant_only: resonant,
            dim: params.model.dim(),
            cutoff: params.cutoff,
            signature: Self::signature_of(params),
        })
    }
}

fn build_cubic(
    grid: &BoxGrid,
    box_size: &BigRational,
    delta: f64,
    resonant: bool,
    budget: usize,
) -> Result<Vec<CubicMonomial>, FieldError> {
    let cutoff = grid.cutoff();
    let inv_l2 = 1.0 / rational_f64(&(box_size * box_size));
    let vs: Vec<WaveVector> = grid.iter().collect();
    let mut monos = Vec::new();
    if delta == 0.0 {
        return Ok(monos);
    }
    for (i1, k1) in vs.iter().enumerate() {
        for (i2, k2) in vs.iter().enumerate().skip(i1) {
            let mult = if i1 == i2 { 1.0 } else { 2.0 };
            let coeff = Complex64::new(0.0, delta * mult);
            let pair = k1.add(k2);
            for (i3, k3) in vs.iter().enumerate() {
                let k = pair.sub(k3);
                if !k.in_box(cutoff) {
                    continue;
                }
                let freq_gap = k1.norm_sq() + k2.norm_sq() - k3.norm_sq() - k.norm_sq();
                if resonant && freq_gap != 0 {
                    continue;
                }
                // Ω = −ω: Λ = −(ω₁+ω₂−ω₃−ω_k)
                let mismatch = -(freq_gap as f64) * inv_l2;
                monos.push(CubicMonomial {
                    k1: i1,
                    k2: i2,
                    k3: i3,
                    k: grid.index(&k).unwrap(),
                    coeff,
                    mismatch,
                });
                if monos.len() > budget {
                    return Err(FieldError::TableBudget {
                        found: monos.len(),
                        budget,
                    });
                }
            }
        }
    }
    monos.sort_by_key(|m| (m.k, m.k1, m.k2, m.k3));
    Ok(monos)
}

fn build_quadratic(
    grid: &BoxGrid,
    rho: &BigRational,
    froude: &BigRational,
    resonant: bool,
    budget: usize,
) -> Result<Vec<QuadMonomial>, FieldError> {
    let cutoff = grid.cutoff();
    let rho2 = rho * rho;
    let rho2_pair = (
        rho2.numer().to_i64().expect("rho² numerator fits i64"),
        rho2.denom().to_i64().expect("rho² denominator fits i64"),
    );
    let froude_pair = (
        froude.numer().to_i64().expect("froude numerator fits i64"),
        froude.denom().to_i64().expect("froude denominator fits i64"),
    );
    let disp = crate::lattice::Dispersion::chm(rho.clone(), froude.clone());
    let omega = |k: &WaveVector| disp.omega_f64(k).unwrap();
    let vs: Vec<WaveVector> = grid.iter().collect();
    let mut monos = Vec::new();
    for (i1, k1) in vs.iter().enumerate() {
        for (i2, k2) in vs.iter().enumerate().skip(i1) {
            let k = k1.add(k2);
            if !k.in_box(cutoff) {
                continue;
            }
            if resonant
                && !chm_triad_resonant_scaled(
                    (k1.m().into(), k1.n().into()),
                    (k2.m().into(), k2.n().into()),
                    (k.m().into(), k.n().into()),
                    rho2_pair,
                    froude_pair,
                )
            {
                continue;
            }
            let c = chm_symmetrized_coupling(k1, k2, &k, rho, froude);
            if c.is_zero() {
                continue;
            }
            // Ω = −ω: Λ = −(ω₁+ω₂−ω_k)
            let mismatch = if resonant {
                0.0
            } else {
                -(omega(k1) + omega(k2) - omega(&k))
            };
            monos.push(QuadMonomial {
                k1: i1,
                k2: i2,
                k: grid.index(&k).unwrap(),
                coeff: Complex64::new(rational_f64(&c), 0.0),
                mismatch,
            });
            if monos.len() > budget {
                return Err(FieldError::TableBudget {
                    found: monos.len(),
                    budget,
                });
            }
        }
    }
    monos.sort_by_key(|m| (m.k, m.k1, m.k2));
    Ok(monos)
}
