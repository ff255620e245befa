//! Verification toolkit for arithmetic-universe sketch contexts.
//!
//! The crate represents contexts, context extensions, equivalence extensions,
//! context maps and 2-cells as finite symbolic data; checks Chevalley-style
//! (op)fibration certificates for context extension maps; and cross-validates
//! them against two independent decidable oracles — a finite-category
//! implementation of the Johnstone fibration criterion and a finite-set
//! strict-model evaluator.
//!
//! All values are immutable after construction and every operation is a pure
//! function, so everything here is safe to share across threads.

pub mod name;
pub mod sketch;
pub mod context;
pub mod equiv;
pub mod maps;
pub mod chevalley;
pub mod fincat;
pub mod finset;
pub mod corpus;
pub mod report;

pub use name::{EdgeId, Name, NodeId};
pub use sketch::{Commutativity, Edge, Sketch, SketchHom, Universal, ValidationReport};
