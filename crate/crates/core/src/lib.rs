//! Uncertainty-annotated databases.
//!
//! Relations are annotated with elements of a commutative semiring. An
//! incomplete database is a relation over per-world annotation vectors, and a
//! UA-database pairs a best-guess world with an under-approximation of the
//! certain annotations so that query answers stay sandwiched between the two.

pub mod error;
pub mod fixtures;
pub mod gen;
pub mod io;
pub mod kdb;
pub mod models;
pub mod rewriter;
pub mod semirings;
pub mod syntax;
pub mod uaa;
pub mod uadb;
pub mod value;
pub mod worlds;

pub use error::{Error, Result};
pub use kdb::{eval, AttrRef, Database, KRelation, Predicate, Query, Schema, Tuple};
pub use semirings::{Access, Element, Semiring};
pub use value::{CmpOp, Value};
