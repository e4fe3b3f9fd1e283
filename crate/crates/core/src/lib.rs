//! Base-extension semantics for intuitionistic propositional logic.

pub mod bases;
pub mod completeness;
pub mod cps;
pub mod heyting;
pub mod nuclei;
pub mod search;
pub mod support;
pub mod syntax;
