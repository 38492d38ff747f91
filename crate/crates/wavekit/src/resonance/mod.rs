//! Enumeration of resonant tuples and the induced lattice clustering.
//!
//! Four-wave resonances of the cubic lattice Schrödinger model are integer
//! rectangles; three-wave resonances of the beta-plane model split into the
//! zonal, standard and non-standard cases, the latter existing only for an
//! exceptional algebraic set of aspect ratios ρ². Everything here is exact.

pub mod algebraic;
mod chm;
mod cluster;
mod nls;

pub use algebraic::{QuadraticSurd, RhoSquared, TriadPoly};
pub use chm::{
    chm_symmetrized_coupling, enumerate_chm_triads, exceptional_rhos, is_typical,
    ExceptionalEntry, ExceptionalSet,
};
pub use cluster::{clusters, Cluster, ClusterPartition, UnionFind};
pub use nls::{completing_rectangle, enumerate_nls_quadruples, is_rectangle};

use crate::lattice::WaveVector;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResonanceError {
    #[error("enumeration budget exceeded: {found} tuples found, budget {budget}")]
    BudgetExceeded { found: usize, budget: usize },
    #[error("unsupported dimension {0} for this enumeration")]
    UnsupportedDimension(usize),
}

/// Case label for beta-plane triads, after the zero pattern of the zonal
/// numbers (m₁, m₂, m). The "exactly one nonzero" pattern admits no solution
/// and never appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriadCase {
    /// (i): all zonal numbers vanish; the coupling is identically zero.
    Zonal,
    /// (iii-a): one input is zonal, the output is not.
    StandardA,
    /// (iii-b): the output is zonal, the inputs are not.
    StandardB,
    /// (iv): no zonal number vanishes; exists only when ρ² is a root of the
    /// triad polynomial.
    NonStandard,
}

impl TriadCase {
    pub fn label(self) -> &'static str {
        match self {
            TriadCase::Zonal => "i",
            TriadCase::StandardA => "iii-a",
            TriadCase::StandardB => "iii-b",
            TriadCase::NonStandard => "iv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TupleKind {
    NlsQuadruple,
    ChmTriad(TriadCase),
}

/// A momentum- and frequency-matching tuple: `inputs` are the unconjugated
/// slots, `outputs` the conjugated slots plus the equation mode, which is
/// stored last.
///
/// Input slots are sorted; tuples equal up to input permutation are stored
/// once. `sym_coupling_zero` marks tuples whose slot-symmetrized coupling
/// vanishes: they satisfy the resonance relations but are dynamically inert
/// and take no part in clustering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResonantTuple {
    pub inputs: Vec<WaveVector>,
    pub outputs: Vec<WaveVector>,
    pub kind: TupleKind,
    pub sym_coupling_zero: bool,
}

impl ResonantTuple {
    /// The mode whose evolution equation carries this tuple's monomial.
    pub fn equation_mode(&self) -> WaveVector {
        *self.outputs.last().expect("tuple has an equation mode")
    }

    pub fn members(&self) -> impl Iterator<Item = &WaveVector> {
        self.inputs.iter().chain(self.outputs.iter())
    }
}

impl Serialize for ResonantTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let kind = match self.kind {
            TupleKind::NlsQuadruple => "nls-quadruple".to_string(),
            TupleKind::ChmTriad(case) => format!("chm-triad-{}", case.label()),
        };
        let mut s = serializer.serialize_struct("ResonantTuple", 4)?;
        s.serialize_field("inputs", &self.inputs)?;
        s.serialize_field("outputs", &self.outputs)?;
        s.serialize_field("kind", &kind)?;
        s.serialize_field("coupling_zero", &self.sym_coupling_zero)?;
        s.end()
    }
}
