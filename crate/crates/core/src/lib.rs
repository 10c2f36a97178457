//! Finite-carrier workbench for co-quantale valued logic.

pub mod builtins;
pub mod cli;
pub mod coquantale;
pub mod elementary;
pub mod enumerate;
pub mod formula;
pub mod lattice;
pub mod laws;
pub mod report;
pub mod semantics;
pub mod space;
pub mod text;
pub mod ultra;
