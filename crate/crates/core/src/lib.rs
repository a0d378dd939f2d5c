//! Finite multiple-valued logics over chains: conjunction tables, their
//! interval extensions, (quasi-)morphisms between them, a graded entailment
//! engine, translation of derivations, and an interactive renaming generator.

pub mod chain_algebra;
pub mod entailment;
pub mod error;
pub mod generator;
pub mod interval_algebra;
pub mod morphism;
pub mod translation;

pub use chain_algebra::{Algebra, Chain, ConjTable, Value};
pub use entailment::{Closure, DerivationTrace, EngineConfig, Formula, KnowledgeModule, Literal, MpRule, Sentence};
pub use error::{AlgebraError, EntailmentError, EnumerationError, GeneratorError, MorphismError, TranslationError};
pub use generator::{Phase, Session, SessionInput};
pub use interval_algebra::{Interval, IntervalAlgebra};
pub use morphism::Renaming;
pub use translation::Bridge;
