//! Core data model for the evolvekit toolkit: metamodels, typed object-graph
//! models, canonical JSON interchange, and syntactic conformance checking.
//!
//! Metamodels and models are immutable after load. Every operation here is a
//! pure function returning new values, so they can be shared freely across
//! threads.

mod conformance;
mod error;
mod io;
mod metamodel;
mod model;

pub use conformance::{check_conformance, ConformanceReport, Violation, ViolationCode};
pub use error::CoreError;
pub use io::{load_metamodel, load_model, save_metamodel, save_model};
pub use metamodel::{
    MAssociation, MAttribute, MClass, MContainment, MaxBound, Metamodel, Multiplicity, PrimType,
};
pub use model::{Literal, MLink, MObject, Model};
