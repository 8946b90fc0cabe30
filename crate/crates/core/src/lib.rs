//! Morse index theory for Morse–Sturm systems `J'' = R(t) J` on [0, 1] with a
//! possibly indefinite constant metric: focal instants, Maslov index and
//! discretized index forms, plus the reduction from semi-Riemannian geodesics.

pub mod config;
pub mod error;
pub mod fixtures;
pub mod indexform;
pub mod focal;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod ode;
pub mod problem;
pub mod search;
pub mod solver;

pub use config::{Tolerances, DEFAULT_MESH_SCHEDULE};
pub use error::{Error, Result};
pub use forms::{Inertia, MetricForm, Subspace};
pub use problem::{BoundaryData, CoefficientPath, MorseSturmProblem, WitnessSeed};
pub use solver::{FundamentalSolution, TimelikeWitness};
