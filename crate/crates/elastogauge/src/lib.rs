//! Elastic wave operators on flat and curved backgrounds: material tensor
//! algebra, transformation laws, a time-domain boundary-value solver, and
//! boundary-measurement experiments probing which parameter changes leave
//! the boundary data invariant.

pub mod bump;
pub mod config;
pub mod dn;
pub mod domain;
pub mod error;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod material;
pub mod operators;
pub mod runner;
pub mod solver;
pub mod tensor;

pub use domain::{Domain, Point};
pub use error::{Error, Result};
