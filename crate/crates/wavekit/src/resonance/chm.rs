//! Beta-plane triad enumeration, the exceptional set of aspect ratios, and
//! the exact symmetrized coupling.

use super::algebraic::{RhoSquared, TriadPoly};
use super::{ResonantTuple, TriadCase, TupleKind};
use crate::lattice::{box_iter, chm_triad_resonant_scaled, WaveVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

fn rat_to_i64_pair(r: &BigRational) -> (i64, i64) {
    let n = r
        .numer()
        .to_i64()
        .expect("rational numerator too large for triad arithmetic");
    let d = r
        .denom()
        .to_i64()
        .expect("rational denominator too large for triad arithmetic");
    (n, d)
}

fn classify(m1: i32, m2: i32, m: i32) -> TriadCase {
    match (m1 == 0, m2 == 0, m == 0) {
        (true, true, true) => TriadCase::Zonal,
        (false, false, true) => TriadCase::StandardB,
        (true, false, false) | (false, true, false) => TriadCase::StandardA,
        (false, false, false) => TriadCase::NonStandard,
        // m = m₁ + m₂ rules out exactly one nonzero entry.
        _ => unreachable!("zero pattern impossible under momentum conservation"),
    }
}

/// Numerator of the slot-symmetrized coupling of the unordered pair
/// {k₁, k₂} feeding mode k:
///
///   (m₁n₂ − n₁m₂) · [(m₁² − m₂²) + (n₁² − n₂²)ρ²]
///
/// which is the ρ²-rational part deciding whether the tuple is dynamically
/// inert. Vanishes identically for zonal triads and for the standard-B
/// pattern (the two slot orders cancel).
fn sym_coupling_numerator(k1: &WaveVector, k2: &WaveVector, rho2: &BigRational) -> BigRational {
    let (m1, n1) = (i64::from(k1.m()), i64::from(k1.n()));
    let (m2, n2) = (i64::from(k2.m()), i64::from(k2.n()));
    let cross = m1 * n2 - n1 * m2;
    if cross == 0 {
        return BigRational::zero();
    }
    let dm = BigRational::from_integer((m1 * m1 - m2 * m2).into());
    let dn = BigRational::from_integer((n1 * n1 - n2 * n2).into());
    BigRational::from_integer(cross.into()) * (dm + dn * rho2)
}

/// Exact symmetrized coupling of the monomial v_{k₁} v_{k₂} in the equation
/// for k, i.e. c(k₁,k₂;k) + c(k₂,k₁;k) with
/// c(k₁,k₂;k) = (m₁²+n₁²ρ²)(m₁n₂−n₁m₂) / (ρ(m²+n²ρ²+Fρ²)).
/// For k₁ = k₂ the single ordered term applies (and is zero).
pub fn chm_symmetrized_coupling(
    k1: &WaveVector,
    k2: &WaveVector,
    k: &WaveVector,
    rho: &BigRational,
    froude: &BigRational,
) -> BigRational {
    let rho2 = rho * rho;
    let numer = sym_coupling_numerator(k1, k2, &rho2);
    if numer.is_zero() {
        return BigRational::zero();
    }
    let m2 = BigRational::from_integer((i64::from(k.m()) * i64::from(k.m())).into());
    let n2 = BigRational::from_integer((i64::from(k.n()) * i64::from(k.n())).into());
    let denom = rho * (m2 + (n2 + froude) * &rho2);
    if denom.is_zero() {
        // Only k = (0,0) with F = 0; the numerator vanishes there too.
        return BigRational::zero();
    }
    numer / denom
}

/// All triads (k₁,k₂,k) within the box satisfying the beta-plane resonance
/// conditions at aspect ratio ρ² and Froude number F, unordered in the input
/// slots, labeled by case and marked inert when the symmetrized coupling
/// vanishes.
pub fn enumerate_chm_triads(
    rho2: &BigRational,
    froude: &BigRational,
    cutoff: i32,
) -> Vec<ResonantTuple> {
    let rho2_pair = rat_to_i64_pair(rho2);
    let froude_pair = rat_to_i64_pair(froude);
    let mut out = Vec::new();
    for k1 in box_iter(2, cutoff) {
        for k2 in box_iter(2, cutoff) {
            if k2 < k1 {
                continue;
            }
            let k = k1.add(&k2);
            if !k.in_box(cutoff) {
                continue;
            }
            if !chm_triad_resonant_scaled(
                (k1.m().into(), k1.n().into()),
                (k2.m().into(), k2.n().into()),
                (k.m().into(), k.n().into()),
                rho2_pair,
                froude_pair,
            ) {
                continue;
            }
            let case = classify(k1.m(), k2.m(), k.m());
            let inert = sym_coupling_numerator(&k1, &k2, rho2).is_zero();
            out.push(ResonantTuple {
                inputs: vec![k1, k2],
                outputs: vec![k],
                kind: TupleKind::ChmTriad(case),
                sym_coupling_zero: inert,
            });
        }
    }
    out.sort();
    out
}

/// One exceptional ρ² value together with a triad generating it.
#[derive(Debug, Clone)]
pub struct ExceptionalEntry {
    pub value: RhoSquared,
    pub triad: [WaveVector; 3],
    pub poly: TriadPoly,
}

/// The exceptional set 𝒵 of ρ² values admitting a non-standard resonance
/// within the box.
#[derive(Debug, Clone)]
pub struct ExceptionalSet {
    pub entries: Vec<ExceptionalEntry>,
    pub cutoff: i32,
}

impl ExceptionalSet {
    pub fn contains(&self, rho2: &BigRational) -> bool {
        self.entries.iter().any(|e| match &e.value {
            RhoSquared::Rational(r) => r == rho2,
            // A rational never equals a surd of an irreducible quadratic.
            RhoSquared::Surd(_) => false,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Integer triad polynomial a₀ + a₁ρ² + a₂ρ⁴ obtained by clearing
/// denominators in the frequency condition. With F = u/v the scaled
/// denominators are D̃ᵢ = mᵢ²v + (nᵢ²v + u)ρ².
pub fn triad_poly(
    k1: &WaveVector,
    k2: &WaveVector,
    k: &WaveVector,
    froude: &BigRational,
) -> TriadPoly {
    let (u, v) = rat_to_i64_pair(froude);
    let (u, v) = (i128::from(u), i128::from(v));
    let comp = |kv: &WaveVector| -> (i128, i128, i128) {
        let m = i128::from(kv.m());
        let n = i128::from(kv.n());
        (m, m * m * v, n * n * v + u)
    };
    let (m1, al1, be1) = comp(k1);
    let (m2, al2, be2) = comp(k2);
    let (m, al, be) = comp(k);
    let a0 = m1 * al2 * al + m2 * al1 * al - m * al1 * al2;
    let a1 = m1 * (al2 * be + al * be2) + m2 * (al1 * be + al * be1) - m * (al1 * be2 + al2 * be1);
    let a2 = m1 * be2 * be + m2 * be1 * be - m * be1 * be2;
    // Printed closed form of the constant term, used as a cross-check.
    debug_assert_eq!(
        a0,
        m1 * m2 * m * (m1 * m1 + m2 * m2 + m1 * m2) * v * v,
        "constant-term cross-check failed for {k1:?},{k2:?} -> {k:?}"
    );
    TriadPoly {
        a2: BigInt::from(a2),
        a1: BigInt::from(a1),
        a0: BigInt::from(a0),
    }
}

/// All positive ρ² roots of the triad polynomials over triads in the box
/// with every zonal number nonzero, deduplicated by exact value.
pub fn exceptional_rhos(froude: &BigRational, cutoff: i32) -> ExceptionalSet {
    let mut seen = std::collections::BTreeSet::new();
    let mut entries = Vec::new();
    for k1 in box_iter(2, cutoff) {
        for k2 in box_iter(2, cutoff) {
            if k2 < k1 {
                continue;
            }
            let k = k1.add(&k2);
            if !k.in_box(cutoff) || k1.m() == 0 || k2.m() == 0 || k.m() == 0 {
                continue;
            }
            let poly = triad_poly(&k1, &k2, &k, froude);
            for root in poly.positive_roots() {
                if seen.insert(root.clone()) {
                    entries.push(ExceptionalEntry {
                        value: root,
                        triad: [k1, k2, k],
                        poly: poly.clone(),
                    });
                }
            }
        }
    }
    entries.sort_by(|a, b| {
        a.value
            .to_f64()
            .partial_cmp(&b.value.to_f64())
            .unwrap()
            .then_with(|| a.value.cmp(&b.value))
    });
    ExceptionalSet { entries, cutoff }
}

/// True iff no non-standard resonance exists at this ρ² within the box.
pub fn is_typical(rho2: &BigRational, froude: &BigRational, cutoff: i32) -> bool {
    let rho2_pair = rat_to_i64_pair(rho2);
    let froude_pair = rat_to_i64_pair(froude);
    for k1 in box_iter(2, cutoff) {
        for k2 in box_iter(2, cutoff) {
            if k2 < k1 {
                continue;
            }
            let k = k1.add(&k2);
            if !k.in_box(cutoff) || k1.m() == 0 || k2.m() == 0 || k.m() == 0 {
                continue;
            }
            if chm_triad_resonant_scaled(
                (k1.m().into(), k1.n().into()),
                (k2.m().into(), k2.n().into()),
                (k.m().into(), k.n().into()),
                rho2_pair,
                froude_pair,
            ) {
                return false;
            }
        }
    }
    true
}
