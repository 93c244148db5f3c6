//! Computations with open subgroups of GL2(Z_3) at finite level: closure,
//! conjugacy, cusps and genus of the attached modular curves, the basis
//! change across a rational 3-isogeny, and a rule-based classifier of 3-adic
//! images on isogeny-torsion graphs.

pub mod catalog;
pub mod classifier;
pub mod cusps;
pub mod error;
pub mod lmfdb;
pub mod modmat;
pub mod report;
pub mod subgroup;
pub mod transform;

pub use error::{Error, Result};
pub use modmat::{Mat2, Modulus};
pub use subgroup::{is_conjugate, is_conjugate_into, Line, Subgroup};
