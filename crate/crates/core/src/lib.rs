//! Analysis and exact answer counting for unions of conjunctive queries.
//!
//! The crate covers relational structures and homomorphisms, per-query
//! analysis (acyclicity, treewidth, contracts, #cores), the inclusion-exclusion
//! CQ expansion of a UCQ with its coefficients, several mutually checking
//! counting engines, and the reduction from simplicial complexes to UCQs whose
//! expansion coefficient encodes the reduced Euler characteristic.

pub mod analysis;
pub mod canon;
pub mod caps;
pub mod cli;
pub mod counting;
pub mod error;
pub mod expansion;
pub mod generate;
pub mod hom;
pub mod io;
pub mod simplicial;
pub mod structure;

pub use caps::Caps;
pub use error::{Error, Result};
pub use structure::{ConjunctiveQuery, Elem, GaifmanGraph, Signature, Structure, Symbol, Ucq};
