use serde::Serialize;

use super::{NodeMask, SolutionGrid, SolveError};
use crate::expr::Expr;
use crate::geometry::Point;
use crate::symbol::HyperbolicSymbol;

/// Largest finite-difference residual and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub max: f64,
    pub at: Point,
    /// Number of nodes where the stencil fit.
    pub nodes: usize,
}

/// Centered stencils for `d^k/dx^k`, `k = 0..=4`, on offsets `-2..=2`,
/// without the `h^-k` factor.
const STENCILS: [[f64; 5]; 5] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

/// `max |L_h u - f|` over nodes whose whole 5x5 neighbourhood is interior.
pub fn fd_residual(sym: &HyperbolicSymbol, u: &SolutionGrid, f: &Expr) -> Result<Residual, SolveError> {
    let spec = u.spec;
    let interior = |i: usize, j: usize| u.mask_at(i, j) == NodeMask::Interior && u.value(i, j).is_some();
    let span = |along_x: bool| {
        let mut best = 0;
        let (outer, inner) = if along_x {
            (spec.ny, spec.nx)
        } else {
            (spec.nx, spec.ny)
        };
        for o in 0..outer {
            let mut run = 0;
            for n in 0..inner {
                let ok = if along_x { interior(n, o) } else { interior(o, n) };
                run = if ok { run + 1 } else { 0 };
                best = best.max(run);
            }
        }
        best
    };
    if span(true) < 5 || span(false) < 5 {
        return Err(SolveError::GridTooCoarse);
    }
    let a = sym.coeffs().as_array();
    let h = spec.h;
    let mut weights = [[0.0; 5]; 5];
    for (p, ap) in a.iter().enumerate() {
        let scale = ap / h.powi(4);
        for (di, sx) in STENCILS[4 - p].iter().enumerate() {
            for (dj, sy) in STENCILS[p].iter().enumerate() {
                weights[di][dj] += scale * sx * sy;
            }
        }
    }
    let mut out = Residual {
        max: 0.0,
        at: [f64::NAN, f64::NAN],
        nodes: 0,
    };
    for j in 2..spec.ny.saturating_sub(2) {
        'node: for i in 2..spec.nx.saturating_sub(2) {
            let mut lu = 0.0;
            for di in 0..5 {
                for dj in 0..5 {
                    let (ii, jj) = (i + di - 2, j + dj - 2);
                    if !interior(ii, jj) {
                        continue 'node;
                    }
                    if weights[di][dj] != 0.0 {
                        lu += weights[di][dj] * u.value(ii, jj).unwrap_or(0.0);
                    }
                }
            }
            let p = spec.point(i, j);
            let r = (lu - f.eval(p[0], p[1])?).abs();
            out.nodes += 1;
            if r > out.max || out.at[0].is_nan() {
                out.max = r;
                out.at = p;
            }
        }
    }
    if out.nodes == 0 {
        return Err(SolveError::GridTooCoarse);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{determinacy_region, Gamma0};
    use crate::solver::GridSpec;
    use crate::symbol::{build_symbol, SymbolCoefficients};

    fn sampled(sym: &HyperbolicSymbol, u: &str, h: f64) -> SolutionGrid {
        let region = determinacy_region(sym, Gamma0::new(0.0, 1.0).unwrap());
        let spec = GridSpec::covering(&region, h);
        let mask = SolutionGrid::classify(&region, spec, 3.0 * h);
        let e = parse(u).unwrap();
        let mut values = Vec::new();
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let k = spec.index(i, j);
                let [x, y] = spec.point(i, j);
                values.push((mask[k] != NodeMask::Outside).then(|| e.eval(x, y).unwrap()));
            }
        }
        SolutionGrid {
            spec,
            interior_margin: 3.0 * h,
            values,
            mask,
        }
    }

    fn wave() -> HyperbolicSymbol {
        build_symbol(SymbolCoefficients::new([1.0, 0.0, -5.0, 0.0, 4.0]).unwrap()).unwrap()
    }

    #[test]
    fn quartic_monomial_is_exact() {
        let s = wave();
        let g = sampled(&s, "x1^4", 0.025);
        let r = fd_residual(&s, &g, &parse("24").unwrap()).unwrap();
        assert!(r.max <= 1e-8, "{r:?}");
        assert!(r.nodes > 0);
    }

    #[test]
    fn mixed_quartic_uses_all_stencils() {
        // L(x1^2 x2^2) = a2 * 4
        let s = wave();
        let g = sampled(&s, "x1^2 * x2^2 + x1*x2^3", 0.025);
        let r = fd_residual(&s, &g, &parse("-20").unwrap()).unwrap();
        assert!(r.max <= 1e-7, "{r:?}");
    }

    #[test]
    fn affine_field() {
        let s = wave();
        let g = sampled(&s, "x1 + x2", 0.025);
        let r = fd_residual(&s, &g, &Expr::Const(0.0)).unwrap();
        assert!(r.max <= 1e-10 * 0.025f64.powi(-4), "{r:?}");
    }

    #[test]
    fn too_coarse() {
        let s = wave();
        let g = sampled(&s, "x1", 0.2);
        assert_eq!(
            fd_residual(&s, &g, &Expr::Const(0.0)).unwrap_err(),
            SolveError::GridTooCoarse
        );
    }
}
