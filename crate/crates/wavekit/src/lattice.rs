//! Integer wavevectors, dispersion laws, and exact resonance predicates.
//!
//! Resonance membership is a combinatorial fact, so the predicates here run
//! in exact integer/rational arithmetic. Floating point enters only through
//! user-supplied custom dispersion tables, which carry their own tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Hard cap on lattice dimension; keeps `WaveVector` inline and `Copy`.
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} exceeds supported maximum {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("custom dispersion has no entry for {0}")]
    MissingTableEntry(WaveVector),
}

/// A lattice mode index k ∈ Zᵈ, stored inline.
///
/// For the 2-d beta-plane model the components are named `m` (zonal) and
/// `n` (meridional), in that order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector {
    comps: [i32; MAX_DIM],
    dim: u8,
}

impl WaveVector {
    pub fn new(comps: &[i32]) -> Self {
        assert!(
            !comps.is_empty() && comps.len() <= MAX_DIM,
            "dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0i32; MAX_DIM];
        c[..comps.len()].copy_from_slice(comps);
        WaveVector {
            comps: c,
            dim: comps.len() as u8,
        }
    }

    pub fn d1(k: i32) -> Self {
        Self::new(&[k])
    }

    pub fn d2(m: i32, n: i32) -> Self {
        Self::new(&[m, n])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn comps(&self) -> &[i32] {
        &self.comps[..self.dim as usize]
    }

    /// Zonal component (2-d convention).
    pub fn m(&self) -> i32 {
        self.comps[0]
    }

    /// Meridional component (2-d convention).
    pub fn n(&self) -> i32 {
        self.comps[1]
    }

    pub fn norm_sq(&self) -> i64 {
        self.comps()
            .iter()
            .map(|&c| i64::from(c) * i64::from(c))
            .sum()
    }

    pub fn sup_norm(&self) -> i32 {
        self.comps().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn dot(&self, other: &WaveVector) -> i64 {
        assert_eq!(self.dim, other.dim);
        self.comps()
            .iter()
            .zip(other.comps())
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum()
    }

    pub fn add(&self, other: &WaveVector) -> WaveVector {
        assert_eq!(self.dim, other.dim);
        let mut c = [0i32; MAX_DIM];
        for i in 0..self.dim() {
            c[i] = self.comps[i] + other.comps[i];
        }
        WaveVector {
            comps: c,
            dim: self.dim,
        }
    }

    pub fn sub(&self, other: &WaveVector) -> WaveVector {
        assert_eq!(self.dim, other.dim);
        let mut c = [0i32; MAX_DIM];
        for i in 0..self.dim() {
            c[i] = self.comps[i] - other.comps[i];
        }
        WaveVector {
            comps: c,
            dim: self.dim,
        }
    }

    pub fn neg(&self) -> WaveVector {
        let mut c = [0i32; MAX_DIM];
        for i in 0..self.dim() {
            c[i] = -self.comps[i];
        }
        WaveVector {
            comps: c,
            dim: self.dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps().iter().all(|&c| c == 0)
    }

    /// Representative of the reality class {k, −k}: the lexicographically
    /// larger of the two (first nonzero component positive).
    pub fn reality_rep(&self) -> WaveVector {
        for &c in self.comps() {
            if c > 0 {
                return *self;
            }
            if c < 0 {
                return self.neg();
            }
        }
        *self
    }

    pub fn in_box(&self, cutoff: i32) -> bool {
        self.sup_norm() <= cutoff
    }
}

impl serde::Serialize for WaveVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.comps().serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for WaveVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let comps = Vec::<i32>::deserialize(deserializer)?;
        if comps.is_empty() || comps.len() > MAX_DIM {
            return Err(serde::de::Error::custom(format!(
                "wavevector dimension must be 1..={MAX_DIM}"
            )));
        }
        Ok(WaveVector::new(&comps))
    }
}

impl fmt::Debug for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.comps().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Iterate all vectors of the d-dimensional box |k|∞ ≤ cutoff in lex order.
pub fn box_iter(dim: usize, cutoff: i32) -> impl Iterator<Item = WaveVector> {
    assert!(dim >= 1 && dim <= MAX_DIM);
    let side = (2 * cutoff + 1) as i64;
    let total = side.pow(dim as u32);
    (0..total).map(move |idx| {
        let mut c = [0i32; MAX_DIM];
        let mut rem = idx;
        for i in (0..dim).rev() {
            c[i] = (rem % side) as i32 - cutoff;
            rem /= side;
        }
        WaveVector {
            comps: c,
            dim: dim as u8,
        }
    })
}

/// Dense indexing of the d-dimensional box |k|∞ ≤ cutoff, row-major in the
/// `box_iter` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxGrid {
    dim: usize,
    cutoff: i32,
    side: i64,
    len: usize,
}

impl BoxGrid {
    pub fn new(dim: usize, cutoff: i32) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM && cutoff >= 0);
        let side = (2 * cutoff + 1) as i64;
        BoxGrid {
            dim,
            cutoff,
            side,
            len: side.pow(dim as u32) as usize,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: &WaveVector) -> Option<usize> {
        if k.dim() != self.dim || !k.in_box(self.cutoff) {
            return None;
        }
        let mut idx = 0i64;
        for &c in k.comps() {
            idx = idx * self.side + i64::from(c + self.cutoff);
        }
        Some(idx as usize)
    }

    pub fn vector(&self, idx: usize) -> WaveVector {
        assert!(idx < self.len);
        let mut c = [0i32; MAX_DIM];
        let mut rem = idx as i64;
        for i in (0..self.dim).rev() {
            c[i] = (rem % self.side) as i32 - self.cutoff;
            rem /= self.side;
        }
        WaveVector::new(&c[..self.dim])
    }

    /// Index of −k.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.len - 1 - idx
    }

    pub fn iter(&self) -> impl Iterator<Item = WaveVector> {
        box_iter(self.dim, self.cutoff)
    }
}

/// A frequency value: exact rational for the built-in laws, float for
/// table-backed custom laws.
#[derive(Debug, Clone, PartialEq)]
pub enum Freq {
    Exact(BigRational),
    Approx(f64),
}

impl Freq {
    pub fn to_f64(&self) -> f64 {
        match self {
            Freq::Exact(r) => rational_to_f64(r),
            Freq::Approx(x) => *x,
        }
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let numer = bigint_to_f64(r.numer());
    let denom = bigint_to_f64(r.denom());
    numer / denom
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    // num-bigint's ToPrimitive covers this, but keep the dependency surface
    // explicit.
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// A dispersion law k ↦ ω_k on the integer lattice.
#[derive(Debug, Clone)]
pub enum Dispersion {
    /// ω_k = |k|² / L² on the d-torus of size L.
    Nls { dim: usize, box_size: BigRational },
    /// ω_k = −mρ / (m² + n²ρ² + Fρ²) on the 2-d strip of aspect ratio ρ,
    /// Froude number F.
    Chm { rho: BigRational, froude: BigRational },
    /// Table-backed law with an absolute tolerance for frequency comparison.
    Custom {
        dim: usize,
        table: BTreeMap<WaveVector, f64>,
        tol: f64,
    },
}

/// Default absolute tolerance for custom float dispersion tables.
pub const CUSTOM_DISPERSION_TOL: f64 = 1e-12;

impl Dispersion {
    pub fn nls(dim: usize, box_size: BigRational) -> Self {
        assert!(box_size.is_positive(), "box size must be positive");
        Dispersion::Nls { dim, box_size }
    }

    pub fn nls_unit(dim: usize) -> Self {
        Self::nls(dim, BigRational::from_integer(1.into()))
    }

    pub fn chm(rho: BigRational, froude: BigRational) -> Self {
        assert!(rho.is_positive(), "rho must be positive");
        assert!(!froude.is_negative(), "Froude number must be nonnegative");
        Dispersion::Chm { rho, froude }
    }

    pub fn chm_unit() -> Self {
        Self::chm(
            BigRational::from_integer(1.into()),
            BigRational::from_integer(0.into()),
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            Dispersion::Nls { dim, .. } => *dim,
            Dispersion::Chm { .. } => 2,
            Dispersion::Custom { dim, .. } => *dim,
        }
    }

    fn check_dim(&self, k: &WaveVector) -> Result<(), LatticeError> {
        if k.dim() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: k.dim(),
            });
        }
        Ok(())
    }

    /// Exact frequency ω_k (float for custom tables).
    pub fn omega(&self, k: &WaveVector) -> Result<Freq, LatticeError> {
        self.check_dim(k)?;
        match self {
            Dispersion::Nls { box_size, .. } => {
                let n2 = BigRational::from_integer(k.norm_sq().into());
                Ok(Freq::Exact(n2 / (box_size * box_size)))
            }
            Dispersion::Chm { rho, froude } => {
                let m = k.m();
                if m == 0 {
                    // The numerator −mρ vanishes; at k = 0 with F = 0 the
                    // denominator does too, so short-circuit before dividing.
                    return Ok(Freq::Exact(BigRational::zero()));
                }
                let rho2 = rho * rho;
                let m_r = BigRational::from_integer(m.into());
                let n2_r = BigRational::from_integer((i64::from(k.n()) * i64::from(k.n())).into());
                let m2_r = BigRational::from_integer((i64::from(m) * i64::from(m)).into());
                let denom = m2_r + (n2_r + froude) * &rho2;
                Ok(Freq::Exact(-m_r * rho / denom))
            }
            Dispersion::Custom { table, .. } => table
                .get(k)
                .map(|&w| Freq::Approx(w))
                .ok_or(LatticeError::MissingTableEntry(*k)),
        }
    }

    pub fn omega_f64(&self, k: &WaveVector) -> Result<f64, LatticeError> {
        Ok(self.omega(k)?.to_f64())
    }
}

/// True iff Σ inputs = Σ outputs componentwise (exact integers).
pub fn momentum_match(
    inputs: &[WaveVector],
    outputs: &[WaveVector],
) -> Result<bool, LatticeError> {
    let dim = inputs
        .first()
        .or_else(|| outputs.first())
        .map(WaveVector::dim)
        .unwrap_or(1);
    for k in inputs.iter().chain(outputs) {
        if k.dim() != dim {
            return Err(LatticeError::DimensionMismatch {
                expected: dim,
                got: k.dim(),
            });
        }
    }
    let mut sum = [0i64; MAX_DIM];
    for k in inputs {
        for (i, &c) in k.comps().iter().enumerate() {
            sum[i] += i64::from(c);
        }
    }
    for k in outputs {
        for (i, &c) in k.comps().iter().enumerate() {
            sum[i] -= i64::from(c);
        }
    }
    Ok(sum[..dim].iter().all(|&s| s == 0))
}

/// True iff Σ ω over inputs = Σ ω over outputs.
///
/// Exact for the built-in laws (for NLS the 1/L² factor cancels and the test
/// is the integer identity Σ|k_in|² = Σ|k_out|²); custom tables compare with
/// their declared absolute tolerance.
pub fn frequency_match(
    disp: &Dispersion,
    inputs: &[WaveVector],
    outputs: &[WaveVector],
) -> Result<bool, LatticeError> {
    match disp {
        Dispersion::Nls { .. } => {
            for k in inputs.iter().chain(outputs) {
                disp.check_dim(k)?;
            }
            let lhs: i64 = inputs.iter().map(WaveVector::norm_sq).sum();
            let rhs: i64 = outputs.iter().map(WaveVector::norm_sq).sum();
            Ok(lhs == rhs)
        }
        Dispersion::Chm { rho, froude } => {
            for k in inputs.iter().chain(outputs) {
                disp.check_dim(k)?;
            }
            // ω_k = −mρ / (m² + n²ρ² + Fρ²): the global factor ρ cancels,
            // leaving a condition rational in ρ². Compare the two sides as
            // exact rationals.
            let rho2 = rho * rho;
            let side = |ks: &[WaveVector]| -> BigRational {
                let mut acc = BigRational::zero();
                for k in ks {
                    let m = i64::from(k.m());
                    if m == 0 {
                        continue;
                    }
                    let n2 = i64::from(k.n()) * i64::from(k.n());
                    let denom = BigRational::from_integer((m * m).into())
                        + (BigRational::from_integer(n2.into()) + froude) * &rho2;
                    acc += BigRational::from_integer(m.into()) / denom;
                }
                acc
            };
            Ok(side(inputs) == side(outputs))
        }
        Dispersion::Custom { tol, .. } => {
            let mut acc = 0.0;
            for k in inputs {
                acc += disp.omega_f64(k)?;
            }
            for k in outputs {
                acc -= disp.omega_f64(k)?;
            }
            Ok(acc.abs() <= *tol)
        }
    }
}

/// Fast integer-only NLS four-wave predicate: k₁+k₂ = k₃+k and
/// |k₁|²+|k₂|² = |k₃|²+|k|². The box size never enters.
pub fn nls_quadruple_resonant(
    k1: &WaveVector,
    k2: &WaveVector,
    k3: &WaveVector,
    k: &WaveVector,
) -> bool {
    let dim = k.dim();
    for i in 0..dim {
        if k1.comps()[i] + k2.comps()[i] != k3.comps()[i] + k.comps()[i] {
            return false;
        }
    }
    k1.norm_sq() + k2.norm_sq() == k3.norm_sq() + k.norm_sq()
}

/// Exact CHM triad frequency predicate in scaled integer arithmetic.
///
/// With ρ² = p/q and F = u/v, each denominator m² + n²ρ² + Fρ² scales to
/// Dᵢ = m²qv + n²pv + up; the common factor ρ/(qv) cancels from the
/// condition m₁/D₁ + m₂/D₂ = m/D.
pub fn chm_triad_resonant_scaled(
    k1: (i64, i64),
    k2: (i64, i64),
    k: (i64, i64),
    rho2: (i64, i64),
    froude: (i64, i64),
) -> bool {
    if k1.0 + k2.0 != k.0 || k1.1 + k2.1 != k.1 {
        return false;
    }
    let (p, q) = rho2;
    let (u, v) = froude;
    let d = |mv: i64, nv: i64| -> i128 {
        i128::from(mv) * i128::from(mv) * i128::from(q) * i128::from(v)
            + i128::from(nv) * i128::from(nv) * i128::from(p) * i128::from(v)
            + i128::from(u) * i128::from(p)
    };
    let d1 = d(k1.0, k1.1);
    let d2 = d(k2.0, k2.1);
    let dk = d(k.0, k.1);
    // A zero scaled denominator only happens at k = (0,0) with F = 0, where
    // the mode carries zero frequency; treat its term as zero.
    let term = |mv: i64, dv: i128| -> Option<(i128, i128)> {
        if mv == 0 {
            Some((0, 1))
        } else if dv == 0 {
            None
        } else {
            Some((i128::from(mv), dv))
        }
    };
    let (Some((n1, e1)), Some((n2, e2)), Some((nk, ek))) =
        (term(k1.0, d1), term(k2.0, d2), term(k.0, dk))
    else {
        return false;
    };
    // n1/e1 + n2/e2 == nk/ek, cross-multiplied.
    n1.checked_mul(e2)
        .zip(n2.checked_mul(e1))
        .and_then(|(a, b)| a.checked_add(b))
        .and_then(|s| s.checked_mul(ek))
        .zip(
            nk.checked_mul(e1)
                .and_then(|x| x.checked_mul(e2)),
        )
        .map(|(lhs, rhs)| lhs == rhs)
        .expect("CHM resonance predicate overflow: cutoff or parameters too large")
}
