//! Low-discrepancy point generation with exact algebraic arithmetic, exact
//! discrepancy measurement, and sharp copula bounds through linear
//! assignment.

pub mod exactfield;

pub use exactfield::{AlgExt, Field, FieldError, FieldExt, FieldSpec, Rational};
pub mod numeration;
pub mod partitions;
pub mod sequences;
pub mod discrepancy;
pub mod copula;
