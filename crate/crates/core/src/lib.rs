//! Executable coarse geometry on finite windows of bounded-geometry spaces.
//!
//! The crate is organised around [`space::Window`]: a finite subset of a metric
//! space carrying exact ambient distances. On windows it computes scale-`r`
//! components ([`scale`]), colored covers witnessing asymptotic dimension
//! bounds ([`asdim`]), Følner sets and paradoxical decompositions
//! ([`amenability`]), finite-propagation operators with exact relation checks
//! ([`roe`]) and coarse maps ([`maps`]). Every object serializes to JSON
//! ([`json`]) and can be re-verified from scratch.

pub mod amenability;
pub mod asdim;
pub mod cli;
pub mod error;
pub mod json;
pub mod maps;
pub mod roe;
pub mod scale;
pub mod space;

pub use error::{Error, Result};
pub use space::{PointId, Space, SpaceSpec, Window, Word};
