//! Lagrangian-decomposition traffic-engineering solver: α-fair rate
//! allocation over fixed paths with closed-form ADMM-style iterates.

pub mod controller;
pub mod error;
pub mod exec;
pub mod kernels;
pub mod model;
pub mod oracles;
pub mod projection;
pub mod reduce;

pub use controller::{solve, AlphaTarget, SolveResult, SolverConfig};
pub use error::{Result, TeError};
pub use exec::{Executor, Parallelism};
pub use model::{
    build_instance, validate_allocation, Commodity, CommodityKey, Edge, Instance, PathSet, Topology,
    ViolationReport,
};
