//! Higher-order mean curvatures, Newton transformations and integral
//! inequalities on hypersurfaces, evaluated numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod cli;
pub mod error;
pub mod geom;
pub mod ineq;
pub mod measure;
pub mod ode;
pub mod rigidity;
pub mod selftest;
pub mod soliton;
pub mod symfun;

pub use error::{LabError, Result};
