//! Modelling and detecting crosstalk between signalling pathways.
//!
//! Pathways are written as guarded-command modules, composed with a small
//! process algebra, compiled to explicit CTMCs and checked against CSL
//! properties.

pub mod algebra;
pub mod crosstalk;
pub mod csl;
pub mod ctmc;
pub mod lang;
pub mod stdlib;
