//! Exact optimization for vehicle routing with negotiable flexible time
//! windows. The operator offers per-customer discount rates, customers answer
//! with the flexibility that minimizes their own inconvenience-minus-rebate,
//! and the whole interaction is folded into one mixed-integer program through
//! KKT conditions and strong duality.
//!
//! The resulting program is solved three ways: monolithically, by generalized
//! Benders decomposition, and by a dual-decomposition variant whose cuts come
//! from integer Lagrangian subproblems. Exhaustive enumeration oracles certify
//! every layer on small instances.

pub mod decomposition;
pub mod formulations;
pub mod harness;
pub mod lower_level;
pub mod milp;
pub mod model;
pub mod oracle;

pub use model::{CostParams, Instance, Node, NodeKind};
