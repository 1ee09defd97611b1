use crate::expr::{self, DiffError, Expr, Var};
use crate::geometry::{edge_quadrature, polygon_quadrature, Polygon};
use crate::symbol::HyperbolicSymbol;

use super::{apply_operator, IdentityReport, TraceError};

/// Vector field `F(u, v)` with `div F = L u * v - u * L v`.
///
/// Each term `a_p d1^{4-p} d2^p` is written as an ordered product
/// `d_1 d_2 d_3 d_4` (all `d1` factors first) and telescoped:
/// `F = sum_k (-1)^{k-1} e(d_k) (d_{k+1}..d_4 u)(d_1..d_{k-1} v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearFlux {
    pub components: [Expr; 2],
}

impl BilinearFlux {
    pub fn new(sym: &HyperbolicSymbol, u: &Expr, v: &Expr) -> Result<Self, DiffError> {
        let a = sym.coeffs().as_array();
        let mut comp = [Expr::Const(0.0), Expr::Const(0.0)];
        for (p, ap) in a.iter().enumerate() {
            if *ap == 0.0 {
                continue;
            }
            let factors: Vec<Var> = (0..4)
                .map(|k| if k < 4 - p { Var::X1 } else { Var::X2 })
                .collect();
            for k in 0..4 {
                let mut du = u.clone();
                for d in &factors[k + 1..] {
                    du = du.derivative(*d)?;
                }
                let mut dv = v.clone();
                for d in &factors[..k] {
                    dv = dv.derivative(*d)?;
                }
                let sign = if k % 2 == 0 { *ap } else { -*ap };
                let slot = match factors[k] {
                    Var::X1 => 0,
                    Var::X2 => 1,
                };
                let term = expr::mul(Expr::Const(sign), expr::mul(du, dv));
                comp[slot] = expr::add(comp[slot].clone(), term);
            }
        }
        Ok(BilinearFlux { components: comp })
    }

    pub fn divergence(&self) -> Result<Expr, DiffError> {
        Ok(expr::add(
            self.components[0].derivative(Var::X1)?,
            self.components[1].derivative(Var::X2)?,
        ))
    }
}

/// Compares `int_Omega (L u v - u L v)` with the boundary flux
/// `oint F . nu ds` on a polygon.
pub fn green_flux_residual(
    sym: &HyperbolicSymbol,
    u: &Expr,
    v: &Expr,
    poly: &Polygon,
    order: u32,
) -> Result<IdentityReport, TraceError> {
    let lu = apply_operator(sym, u)?;
    let lv = apply_operator(sym, v)?;
    let flux = BilinearFlux::new(sym, u, v)?;
    let area_rule = polygon_quadrature(poly, order)?;
    let side_a = area_rule.integrate(|[x, y]| -> Result<f64, TraceError> {
        Ok(lu.eval(x, y)? * v.eval(x, y)? - u.eval(x, y)? * lv.eval(x, y)?)
    })?;
    let mut side_b = 0.0;
    for edge in poly.edges(None) {
        let rule = edge_quadrature(&edge, order)?;
        side_b += rule.integrate(|[x, y]| -> Result<f64, TraceError> {
            Ok(flux.components[0].eval(x, y)? * edge.normal[0]
                + flux.components[1].eval(x, y)? * edge.normal[1])
        })?;
    }
    Ok(IdentityReport::new(side_a, side_b, order))
}
