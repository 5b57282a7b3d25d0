//! Explicit time-domain finite-difference solver for the displacement
//! boundary-value problem on rectangular domains (2-D, with 3-D supported at
//! reduced grid sizes; keep 3-D grids at or below 64^3).

pub mod grid;
pub mod stencil;
pub mod time;

pub use grid::{Face, Grid, NodeKind};
pub use stencil::{discrete_elastic_laplacian, DiscreteElasticOperator};
pub use time::{
    cfl_dt, discrete_energy, solve_ibvp, solve_with_observer, BoundarySignal, DirichletData,
    SolveOptions, SolveResult, SuperposedSignal,
};
