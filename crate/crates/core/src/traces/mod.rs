//! Boundary traces on the initial segment and on characteristic edges, and
//! quadrature checks of the Green-type identities behind weak solutions.

mod disk;
mod flux;
mod identity;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{self, DiffError, EvalError, Expr, Var};
use crate::geometry::GeometryError;
use crate::solver::CauchyData;
use crate::symbol::{eval_symbol, HyperbolicSymbol};

pub use disk::{wave_disk_demo, DecadeTest, DiskReport, DiskRow, DEFAULT_DISK_EXPONENT};
pub use flux::{green_flux_residual, BilinearFlux};
pub use identity::{
    gamma0_identity_residual, gamma0_identity_residual_with, kernel_identity_residual, tilde_traces, Bump,
    EdgeTraces,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("bump support violation: {0}")]
    BumpSupportViolation(String),
    #[error("root index {0} out of range 1..=4")]
    InvalidRootIndex(usize),
    #[error("kernel profile must be a function of x1 only")]
    ProfileNotUnivariate,
    #[error("disk exponent must be negative, got {0}")]
    NonNegativeExponent(f64),
    #[error("radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),
}

/// Sides of an integral identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub side_a: f64,
    pub side_b: f64,
    pub residual: f64,
    pub order: u32,
}

impl IdentityReport {
    fn new(side_a: f64, side_b: f64, order: u32) -> Self {
        IdentityReport {
            side_a,
            side_b,
            residual: (side_a - side_b).abs(),
            order,
        }
    }
}

/// `L u = sum_p a_p d1^{4-p} d2^p u`, symbolically.
pub fn apply_operator(sym: &HyperbolicSymbol, u: &Expr) -> Result<Expr, DiffError> {
    let a = sym.coeffs().as_array();
    let mut acc = Expr::Const(0.0);
    for (p, ap) in a.iter().enumerate() {
        if *ap != 0.0 {
            acc = expr::add(acc, expr::mul(Expr::Const(*ap), u.partial(4 - p, p)?));
        }
    }
    Ok(acc)
}

/// The four traces `L(0)u .. L(3)u` on `Gamma0` as functions of `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub traces: [Expr; 4],
}

impl TraceSet {
    pub fn eval(&self, k: usize, x1: f64) -> Result<f64, EvalError> {
        self.traces[k].eval1(x1)
    }

    /// Smallest value of each trace on `n` equispaced points of `[a, b]`,
    /// with the point where it occurs.
    pub fn minima(&self, a: f64, b: f64, n: usize) -> Result<[(f64, f64); 4], EvalError> {
        let mut out = [(f64::INFINITY, a); 4];
        for i in 0..n {
            let x = if n == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            };
            for (k, slot) in out.iter_mut().enumerate() {
                let v = self.eval(k, x)?;
                if v < slot.0 {
                    *slot = (v, x);
                }
            }
        }
        Ok(out)
    }

    /// Multiplies trace `k` by `factor`. Used to inject faults in tests.
    pub fn perturbed(&self, k: usize, factor: f64) -> TraceSet {
        let mut t = self.clone();
        t.traces[k] = expr::mul(Expr::Const(factor), t.traces[k].clone());
        t
    }
}

/// Traces on the flat initial segment with `nu = (0, -1)`:
///
/// `L(3-i)u = -sum_{p=i+1}^{4} a_p d1^{4-p} d2^{p-1-i} u`, `i = 0..=3`, with
/// the vertical derivatives taken from the Cauchy data. Explicitly
/// `L(0) = -a4 phi`, `L(1) = a4 psi - a3 phi'`,
/// `L(2) = -a4 sigma + a3 psi' - a2 phi''`,
/// `L(3) = a4 chi - a3 sigma' + a2 psi'' - a1 phi'''`.
pub fn gamma0_traces(sym: &HyperbolicSymbol, data: &CauchyData) -> Result<TraceSet, DiffError> {
    let a = sym.coeffs().as_array();
    let mut traces: [Expr; 4] = std::array::from_fn(|_| Expr::Const(0.0));
    for i in 0..4 {
        let mut acc = Expr::Const(0.0);
        for (p, ap) in a.iter().enumerate().skip(i + 1) {
            let term = data.vertical(p - 1 - i).nth_derivative(Var::X1, 4 - p)?;
            acc = expr::sub(acc, expr::mul(Expr::Const(*ap), term));
        }
        traces[3 - i] = acc;
    }
    Ok(TraceSet { traces })
}

/// `L(0)u = -L(nu) phi` computed through the symbol at `nu = (0, -1)`.
pub fn l0_via_symbol(sym: &HyperbolicSymbol, data: &CauchyData) -> Expr {
    let l_nu = eval_symbol(sym.coeffs(), [0.0, -1.0]);
    expr::mul(Expr::Const(-l_nu), data.phi.clone())
}
