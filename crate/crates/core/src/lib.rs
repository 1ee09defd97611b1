//! Verification laboratory for the Cauchy problem of fourth-order linear
//! hyperbolic equations with constant coefficients in the plane.

pub mod config;
pub mod expr;
pub mod geometry;
pub mod maxprin;
pub mod solver;
pub mod symbol;
pub mod traces;

use thiserror::Error;

pub use config::{ConfigError, RunConfig, Tolerances};
pub use expr::{parse, Expr, ParseError, Var};
pub use geometry::{
    build_pentagon, determinacy_region, DeterminacyTriangle, Gamma0, PentagonDomain, Point, Polygon,
};
pub use maxprin::{BatchSummary, HypothesisReport, Verdict};
pub use solver::{cascade_solve, CauchyData, NodeMask, ProblemInstance, SolutionGrid};
pub use symbol::{build_symbol, HyperbolicSymbol, SymbolCoefficients, SymbolError};
pub use traces::{TraceError, TraceSet};

/// Any failure of the library, grouped so front ends can map kinds to exit
/// statuses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Solve(#[from] solver::SolveError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Maxprin(#[from] maxprin::MaxprinError),
}
