use thiserror::Error;

use crate::chain_algebra::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("a chain needs at least two values, got {0}")]
    ChainTooShort(usize),
    #[error("duplicate chain label `{0}`")]
    DuplicateLabel(String),
    #[error("conjunction table is {rows}x{cols}, chain has {n} values")]
    DimensionMismatch { n: usize, rows: usize, cols: usize },
    #[error("table entry ({row},{col}) = {value} is outside the chain")]
    EntryOutOfRange { row: usize, col: usize, value: usize },
    #[error("conjunction table violates {}", .0.summary())]
    AxiomViolation(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error(
        "refusing to enumerate conjunctions on a {n}-element chain (cap {cap}): \
         the search is exponential in the chain length; raise the cap explicitly"
    )]
    CapExceeded { n: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("renaming covers {got} source values, algebra has {expected}")]
    NotTotal { expected: usize, got: usize },
    #[error("image of {value} is {lo}..{hi}, outside the {len}-element target chain or reversed")]
    BadImage { value: usize, lo: usize, hi: usize, len: usize },
    #[error("value map has {got} entries, expected {expected}")]
    MapLength { expected: usize, got: usize },
    #[error("value map sends {value} to {image}, outside the {len}-element target chain")]
    MapOutOfRange { value: usize, image: usize, len: usize },
    #[error("map is not compatible with the conjunction: T({a},{c}) and T({b},{d}) land in different classes")]
    Incompatible { a: usize, b: usize, c: usize, d: usize },
    #[error("map classes do not respect negation at {value}")]
    NegationIncompatible { value: usize },
    #[error("embedding is not injective and order-preserving at position {0}")]
    NotOrderEmbedding(usize),
    #[error("embedding must send bottom to bottom and top to top")]
    BoundsNotPreserved,
    #[error("target negation does not restrict to the source negation at {0}")]
    NegationMismatch(usize),
    #[error("map does not preserve the conjunction at ({0},{1})")]
    ConjunctionNotPreserved(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntailmentError {
    #[error("atom #{0} is not declared in the signature")]
    UndeclaredAtom(usize),
    #[error("weight {lo}..{hi} is not an interval of the {len}-element chain")]
    BadWeight { lo: usize, hi: usize, len: usize },
    #[error("{atoms} atoms over a {n}-element chain exceeds the valuation cap of {cap} atoms")]
    SignatureTooLarge { atoms: usize, n: usize, cap: usize },
    #[error("a conjunction needs at least one literal")]
    EmptyConjunction,
    #[error("trace step #{0} does not reproduce its stored weight")]
    ReplayMismatch(usize),
    #[error("trace step #{0} cites a premise that is not in the premise set")]
    UnknownPremise(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslationError {
    #[error("renaming is not a quasi-morphism: {0}")]
    NotQuasiMorphism(String),
    #[error("trace leaf #{0} does not correspond to a translated premise")]
    UntraceableLeaf(usize),
    #[error("sentence is not derivable in the target logic")]
    NotDerivable,
    #[error("trace step #{0} cannot be replayed with the source operators")]
    ReplayFailed(usize),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Entailment(#[from] EntailmentError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("no candidate with id {0} in the current phase")]
    UnknownCandidate(usize),
    #[error("session is {0} and accepts no further selections")]
    Closed(&'static str),
    #[error("candidate {0} no longer passes the quasi-morphism check")]
    StaleCandidate(usize),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
