//! Characteristic cascade for `L u = f` on the determinacy triangle.
//!
//! `L = a0 P1 P2 P3 P4` with `Pj = d/dx1 - lambda_j d/dx2`. The solver runs
//! four first-order transports `P1 w1 = f / a0`, `P2 w2 = w1`, `P3 w3 = w2`,
//! `P4 u = w3`. Each transport integrates its source backward along the
//! characteristic to `Gamma0` with composite Simpson; the boundary value there
//! comes from the Cauchy data.

mod grid;
mod residual;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{self, DiffError, EvalError, Expr, Var};
use crate::geometry::{determinacy_region, DeterminacyTriangle, Gamma0, Point};
use crate::symbol::{elementary_symmetric, HyperbolicSymbol};

pub use grid::{GridSpec, NodeMask, SolutionGrid};
pub use residual::{fd_residual, Residual};

use grid::SNAP;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("characteristic root is zero")]
    ZeroRoot,
    #[error("source undefined along the characteristic through ({0}, {1})")]
    SourceUndefined(f64, f64),
    #[error("grid step {0} leaves no interior node in the determinacy triangle")]
    EmptyRegion(f64),
    #[error("invalid grid step {0}")]
    InvalidStep(f64),
    #[error("stage order must be a permutation of 0..4")]
    InvalidOrder,
    #[error("grid too coarse for the residual stencil")]
    GridTooCoarse,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Traces of `u` on `Gamma0`, all functions of `x1`:
/// `phi = u`, `psi = du/dnu`, `sigma = d^2u/dnu^2`, `chi = d^3u/dnu^3` with
/// `nu = (0, -1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub phi: Expr,
    pub psi: Expr,
    pub sigma: Expr,
    pub chi: Expr,
}

impl CauchyData {
    /// Data induced on `x2 = 0` by a smooth function of `(x1, x2)`.
    pub fn from_solution(u: &Expr) -> Result<CauchyData, DiffError> {
        let zero = Expr::Const(0.0);
        let d = |k: usize| -> Result<Expr, DiffError> {
            Ok(u.nth_derivative(Var::X2, k)?.substitute(Var::X2, &zero))
        };
        Ok(CauchyData {
            phi: d(0)?,
            psi: -d(1)?,
            sigma: d(2)?,
            chi: -d(3)?,
        })
    }

    /// `d^k u / dx2^k` on `Gamma0` for `k = 0..=3`.
    pub fn vertical(&self, k: usize) -> Expr {
        match k {
            0 => self.phi.clone(),
            1 => -self.psi.clone(),
            2 => self.sigma.clone(),
            3 => -self.chi.clone(),
            _ => panic!("no vertical derivative of order {k} in Cauchy data"),
        }
    }

    /// Boundary values on `Gamma0` of `prod_{j in roots} Pj u` for at most
    /// three factors.
    pub fn transported(&self, roots: &[f64]) -> Result<Expr, DiffError> {
        assert!(roots.len() <= 3, "Cauchy data fixes at most three transports");
        // prod (d1 - l d2) = sum_k (-1)^k e_k d1^{n-k} d2^k
        let e = elementary_symmetric(roots);
        let n = roots.len();
        let mut acc = Expr::Const(0.0);
        for (k, ek) in e.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = self.vertical(k).nth_derivative(Var::X1, n - k)?;
            acc = expr::add(acc, expr::mul(Expr::Const(sign * ek), term));
        }
        Ok(acc)
    }
}

/// A complete Cauchy problem with its discretization step.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub symbol: HyperbolicSymbol,
    pub gamma0: Gamma0,
    pub data: CauchyData,
    pub f: Expr,
    pub h: f64,
}

impl ProblemInstance {
    pub fn region(&self) -> DeterminacyTriangle {
        determinacy_region(&self.symbol, self.gamma0)
    }
}

/// Source term of a single transport.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Expr(&'a Expr),
    Grid(&'a SolutionGrid),
}

impl Source<'_> {
    fn at(&self, p: Point) -> Result<Option<f64>, EvalError> {
        match self {
            Source::Expr(e) => e.eval(p[0], p[1]).map(Some),
            Source::Grid(g) => Ok(g.interpolate(p)),
        }
    }

    fn margin(&self) -> f64 {
        match self {
            Source::Expr(_) => 0.0,
            Source::Grid(g) => g.interior_margin,
        }
    }
}

/// Solves `(d/dx1 - lambda d/dx2) w = source` on the triangle's grid with
/// `w = boundary(x1)` on `Gamma0`.
///
/// An expression source gives values at every triangle node. A grid source
/// loses one step of lateral margin: nodes at least `h` deeper than the
/// source's interior are guaranteed, shallower nodes get a value only when
/// their characteristic stays where the source is defined.
pub fn transport_solve(
    lambda: f64,
    source: Source<'_>,
    boundary: &Expr,
    region: &DeterminacyTriangle,
    h: f64,
) -> Result<SolutionGrid, SolveError> {
    if lambda == 0.0 {
        return Err(SolveError::ZeroRoot);
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(SolveError::InvalidStep(h));
    }
    let spec = match source {
        Source::Grid(g) => g.spec,
        Source::Expr(_) => GridSpec::covering(region, h),
    };
    let interior_margin = match source {
        Source::Expr(_) => 0.0,
        Source::Grid(_) => source.margin() + spec.h,
    };
    let mask = SolutionGrid::classify(region, spec, interior_margin);
    let values = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            if mask[k] == NodeMask::Outside {
                return Ok(None);
            }
            let (i, j) = (k % spec.nx, k / spec.nx);
            let v = transport_node(lambda, &source, boundary, spec.point(i, j), spec.h)?;
            if v.is_none() && mask[k] == NodeMask::Interior {
                let p = spec.point(i, j);
                return Err(SolveError::SourceUndefined(p[0], p[1]));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    Ok(SolutionGrid {
        spec,
        interior_margin,
        values,
        mask,
    })
}

fn transport_node(
    lambda: f64,
    source: &Source<'_>,
    boundary: &Expr,
    p: Point,
    h: f64,
) -> Result<Option<f64>, EvalError> {
    let [x1, x2] = p;
    let foot = x1 + x2 / lambda;
    let w0 = boundary.eval1(foot)?;
    if x2 <= 0.0 {
        return Ok(Some(w0));
    }
    let n = 2 * ((x2 / h - SNAP).ceil().max(1.0) as usize);
    let ds = x2 / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let s = k as f64 * ds;
        let q = [foot - s / lambda, s];
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        match source.at(q)? {
            Some(v) => acc += w * v,
            None => return Ok(None),
        }
    }
    Ok(Some(w0 - acc * ds / 3.0 / lambda))
}

/// Cascade with stages in ascending root order.
pub fn cascade_solve(inst: &ProblemInstance) -> Result<SolutionGrid, SolveError> {
    cascade_solve_ordered(inst, [0, 1, 2, 3])
}

/// Cascade where stage `k` inverts the factor of root `order[k]`
/// (0-based, ascending roots). The factors commute, so every order solves the
/// same problem.
pub fn cascade_solve_ordered(inst: &ProblemInstance, order: [usize; 4]) -> Result<SolutionGrid, SolveError> {
    let mut seen = [false; 4];
    for &o in &order {
        if o > 3 || seen[o] {
            return Err(SolveError::InvalidOrder);
        }
        seen[o] = true;
    }
    let roots = inst.symbol.roots();
    let region = inst.region();
    let source = expr::div(inst.f.clone(), Expr::Const(inst.symbol.a0()));
    let mut field: Option<SolutionGrid> = None;
    for k in 0..4 {
        let suffix: Vec<f64> = order[k + 1..].iter().map(|&o| roots[o]).collect();
        let boundary = inst.data.transported(&suffix)?;
        let src = match &field {
            None => Source::Expr(&source),
            Some(g) => Source::Grid(g),
        };
        field = Some(transport_solve(roots[order[k]], src, &boundary, &region, inst.h)?);
    }
    let u = field.expect("four stages ran");
    if u.interior_count() == 0 {
        return Err(SolveError::EmptyRegion(inst.h));
    }
    Ok(u)
}

/// Largest nodal error on the interior mask against an exact solution, with
/// the node where it occurs.
pub fn max_interior_error(grid: &SolutionGrid, exact: &Expr) -> Result<(f64, Point), EvalError> {
    let mut worst = (0.0, [f64::NAN, f64::NAN]);
    for (_, _, p, v) in grid.interior_nodes() {
        let e = (v - exact.eval(p[0], p[1])?).abs();
        if e > worst.0 || worst.1[0].is_nan() {
            worst = (e, p);
        }
    }
    Ok(worst)
}

/// One row of a grid refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// `log2(previous error / error)`; absent on the first row.
    pub order: Option<f64>,
}

/// Refinement study: solves at each step of `steps` and measures the error
/// at the interior nodes of the first (coarsest) grid, which are nodes of
/// every finer grid when the steps halve.
pub fn convergence_study(
    inst: &ProblemInstance,
    exact: &Expr,
    steps: &[f64],
) -> Result<Vec<ConvergenceRow>, SolveError> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut probes: Vec<Point> = Vec::new();
    for (n, &h) in steps.iter().enumerate() {
        let mut run = inst.clone();
        run.h = h;
        let u = cascade_solve(&run)?;
        if n == 0 {
            probes = u.interior_nodes().map(|(_, _, p, _)| p).collect();
        }
        let mut error: f64 = 0.0;
        for p in &probes {
            let v = u.interpolate(*p).ok_or(SolveError::SourceUndefined(p[0], p[1]))?;
            error = error.max((v - exact.eval(p[0], p[1])?).abs());
        }
        let order = rows.last().map(|r| (r.error / error).log2());
        rows.push(ConvergenceRow { h, error, order });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::symbol::{build_symbol, SymbolCoefficients};

    fn sym(a: [f64; 5]) -> HyperbolicSymbol {
        build_symbol(SymbolCoefficients::new(a).unwrap()).unwrap()
    }

    fn instance(a: [f64; 5], u: &str, f: &str, h: f64) -> ProblemInstance {
        ProblemInstance {
            symbol: sym(a),
            gamma0: Gamma0::new(0.0, 1.0).unwrap(),
            data: CauchyData::from_solution(&parse(u).unwrap()).unwrap(),
            f: parse(f).unwrap(),
            h,
        }
    }

    const WAVE: [f64; 5] = [1.0, 0.0, -5.0, 0.0, 4.0];

    #[test]
    fn induced_data_of_exponential() {
        let d = CauchyData::from_solution(&parse("exp(x1 + 2*x2)").unwrap()).unwrap();
        let e = 1f64.exp();
        assert!((d.phi.eval1(1.0).unwrap() - e).abs() < 1e-14);
        assert!((d.psi.eval1(1.0).unwrap() + 2.0 * e).abs() < 1e-14);
        assert!((d.sigma.eval1(1.0).unwrap() - 4.0 * e).abs() < 1e-14);
        assert!((d.chi.eval1(1.0).unwrap() + 8.0 * e).abs() < 1e-14);
    }

    #[test]
    fn transported_boundary_data_matches_direct_application() {
        let u = parse("sin(x1 + 0.3*x2) * exp(x2)").unwrap();
        let d = CauchyData::from_solution(&u).unwrap();
        let roots = [-2.0, -1.0, 1.0, 2.0];
        for start in 1..=4 {
            let mut direct = u.clone();
            for &l in &roots[start..] {
                direct = direct.transport(l).unwrap();
            }
            let via = d.transported(&roots[start..]).unwrap();
            for x in [0.1, 0.4, 0.9] {
                let want = direct.eval(x, 0.0).unwrap();
                let got = via.eval1(x).unwrap();
                assert!((got - want).abs() < 1e-12, "start {start} x {x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn affine_solution_is_exact() {
        let inst = instance(WAVE, "1 + 2*x1 + 3*x2", "0", 0.05);
        let u = cascade_solve(&inst).unwrap();
        assert!(u.interior_count() > 0);
        let (err, _) = max_interior_error(&u, &parse("1 + 2*x1 + 3*x2").unwrap()).unwrap();
        assert!(err <= 1e-10, "{err}");
    }

    fn wave_region() -> DeterminacyTriangle {
        determinacy_region(&sym(WAVE), Gamma0::new(0.0, 1.0).unwrap())
    }

    #[test]
    fn transport_examples() {
        let region = wave_region();
        let zero = Expr::Const(0.0);
        let g = transport_solve(-1.0, Source::Expr(&zero), &parse("x1^2").unwrap(), &region, 0.1).unwrap();
        assert!((g.value(5, 3).unwrap() - 0.04).abs() < 1e-14);

        let one = Expr::Const(1.0);
        let g = transport_solve(2.0, Source::Expr(&one), &zero, &region, 0.1).unwrap();
        assert!((g.value(4, 2).unwrap() + 0.1).abs() < 1e-14);
        for (_, _, p, v) in g.interior_nodes() {
            assert!((v + p[1] / 2.0).abs() < 1e-14);
        }

        let g = transport_solve(1.0, Source::Expr(&zero), &parse("exp(x1)").unwrap(), &region, 0.1).unwrap();
        assert!((g.value(5, 3).unwrap() - 0.8f64.exp()).abs() < 1e-14);

        assert_eq!(
            transport_solve(0.0, Source::Expr(&one), &zero, &region, 0.1).unwrap_err(),
            SolveError::ZeroRoot
        );
    }

    #[test]
    fn grid_source_loses_one_step_of_margin() {
        let region = wave_region();
        let one = Expr::Const(1.0);
        let zero = Expr::Const(0.0);
        let w1 = transport_solve(1.0, Source::Expr(&one), &zero, &region, 0.05).unwrap();
        assert_eq!(w1.interior_margin, 0.0);
        let w2 = transport_solve(-2.0, Source::Grid(&w1), &zero, &region, 0.05).unwrap();
        assert_eq!(w2.interior_margin, 0.05);
        // P2 w2 = -x2 with w2 = 0 on Gamma0: w2 = -x2^2 / 4
        for (_, _, p, v) in w2.interior_nodes() {
            assert!((v + p[1] * p[1] / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_example() {
        let inst = instance(WAVE, "x1^4", "24", 0.01);
        let u = cascade_solve(&inst).unwrap();
        assert_eq!(u.spec.point(50, 30), [0.5, 0.3]);
        assert_eq!(u.mask_at(50, 30), NodeMask::Interior);
        assert!((u.value(50, 30).unwrap() - 0.0625).abs() < 1e-4);
    }

    #[test]
    fn linearity() {
        let a = instance(WAVE, "x1^4", "24", 0.02);
        let b = instance(WAVE, "-exp(x1 + x2)", "0", 0.02);
        let sum = instance(WAVE, "x1^4 - exp(x1 + x2)", "24", 0.02);
        let (ua, ub, us) = (
            cascade_solve(&a).unwrap(),
            cascade_solve(&b).unwrap(),
            cascade_solve(&sum).unwrap(),
        );
        for k in 0..us.values.len() {
            if us.mask[k] == NodeMask::Interior {
                let s = ua.values[k].unwrap() + ub.values[k].unwrap();
                assert!((us.values[k].unwrap() - s).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn scaling_symbol_and_source() {
        let a = instance(WAVE, "x1^4 + x1*x2", "24", 0.02);
        let u = cascade_solve(&a).unwrap();
        let mut b = a.clone();
        b.symbol = a.symbol.scaled(3.7).unwrap();
        b.f = a.f.clone() * Expr::Const(3.7);
        let v = cascade_solve(&b).unwrap();
        for k in 0..u.values.len() {
            if u.mask[k] == NodeMask::Interior {
                assert!((u.values[k].unwrap() - v.values[k].unwrap()).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn exponential_example_converges() {
        let inst = instance(WAVE, "-exp(x1 + x2)", "0", 0.02);
        let u = cascade_solve(&inst).unwrap();
        let (err, _) = max_interior_error(&u, &parse("-exp(x1 + x2)").unwrap()).unwrap();
        assert!(err < 1e-3, "{err}");
        let p = [0.5, 0.3];
        assert!((u.interpolate(p).unwrap() + 0.8f64.exp()).abs() < 1e-3);
    }

    #[test]
    fn second_order_in_h() {
        let inst = instance(WAVE, "exp(x1 + x2) + x1^4", "24", 0.04);
        let rows =
            convergence_study(&inst, &parse("exp(x1 + x2) + x1^4").unwrap(), &[0.04, 0.02, 0.01]).unwrap();
        for r in &rows[1..] {
            let q = r.order.unwrap();
            assert!((1.7..=2.5).contains(&q), "{rows:?}");
        }
    }

    #[test]
    fn order_of_stages_does_not_matter() {
        let inst = instance(WAVE, "exp(x1 + x2) + x1^4", "24", 0.02);
        let base = cascade_solve(&inst).unwrap();
        let other = cascade_solve_ordered(&inst, [3, 1, 0, 2]).unwrap();
        for (_, _, p, v) in base.interior_nodes() {
            if let Some(w) = other.interpolate(p) {
                assert!((v - w).abs() < 5e-4);
            }
        }
        assert_eq!(
            cascade_solve_ordered(&inst, [0, 0, 1, 2]).unwrap_err(),
            SolveError::InvalidOrder
        );
    }

    #[test]
    fn empty_region_for_huge_step() {
        let inst = instance(WAVE, "x1", "0", 0.4);
        assert_eq!(cascade_solve(&inst).unwrap_err(), SolveError::EmptyRegion(0.4));
    }
}
