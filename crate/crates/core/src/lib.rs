//! Semidefinite bounds and primal heuristics for the quadratic cycle cover
//! problem.

pub mod error;
pub mod linalg;
pub mod graph;
pub mod instance;
pub mod facial;
pub mod cuts;
pub mod projections;
pub mod oracle;
pub mod lp;
pub mod solver;
pub mod heuristics;

pub use error::{QccpError, Result};
pub use facial::Basis;
pub use graph::{CycleCover, DiGraph};
pub use instance::{CostModel, QcpInstance};
pub use linalg::{Mat, SymMat};
pub use solver::{Level, Method, PrsmParams, SolveReport, SolverState};
pub use heuristics::{UbConfig, UbSuite, UpperBound};
