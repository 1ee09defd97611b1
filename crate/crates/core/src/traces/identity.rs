use serde::Serialize;

use crate::expr::{self, Expr, Var};
use crate::geometry::{
    edge_quadrature, gauss_legendre_interval, polygon_quadrature, Edge, Gamma0, GeometryError, Location,
    Point, Polygon, SUPPORTED_ORDERS,
};
use crate::solver::CauchyData;
use crate::symbol::HyperbolicSymbol;

use super::{apply_operator, gamma0_traces, IdentityReport, TraceError, TraceSet};

/// Panels per direction of the composite rules on the bump rectangle.
const PANELS: usize = 8;

/// Polynomial cutoff on `[left, right] x [0, height]`:
/// `(4 (x1 - l)(r - x1) / (r - l)^2)^4 ((height - x2) / height)^4`.
/// It vanishes to fourth order on the sides and the top, so only the
/// initial segment contributes boundary terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub left: f64,
    pub right: f64,
    pub height: f64,
}

impl Bump {
    /// Checks that the support rectangle stands on the open initial segment
    /// and lies inside `domain`.
    pub fn new(
        gamma0: Gamma0,
        domain: &Polygon,
        left: f64,
        right: f64,
        height: f64,
    ) -> Result<Bump, TraceError> {
        let violation = |why: String| Err(TraceError::BumpSupportViolation(why));
        if !(left < right && height > 0.0) {
            return violation(format!("empty rectangle [{left}, {right}] x [0, {height}]"));
        }
        if !(gamma0.a < left && right < gamma0.b) {
            return violation(format!(
                "[{left}, {right}] not inside the open segment ({}, {})",
                gamma0.a, gamma0.b
            ));
        }
        for i in 0..=4 {
            for j in 0..=4 {
                let p = [left + (right - left) * i as f64 / 4.0, height * j as f64 / 4.0];
                if domain.locate(p) == Location::Outside {
                    return violation(format!("point ({}, {}) outside the domain", p[0], p[1]));
                }
            }
        }
        for v in domain.vertices() {
            if v[0] > left && v[0] < right && v[1] > 0.0 && v[1] < height {
                return violation(format!("domain vertex ({}, {}) inside the support", v[0], v[1]));
            }
        }
        Ok(Bump { left, right, height })
    }

    /// Centred support chosen among a few widths to maximise
    /// `min(width / 2, height)`, which keeps the derivatives of the cutoff
    /// moderate.
    pub fn fit(gamma0: Gamma0, domain: &Polygon) -> Result<Bump, TraceError> {
        let len = gamma0.length();
        let mid = 0.5 * (gamma0.a + gamma0.b);
        let mut best: Option<Bump> = None;
        for frac in [0.8, 0.6, 0.5, 0.4, 0.3, 0.2] {
            let (l, r) = (mid - 0.5 * frac * len, mid + 0.5 * frac * len);
            // largest admissible height by bisection
            let (mut lo, mut hi) = (0.0, len);
            for _ in 0..50 {
                let h = 0.5 * (lo + hi);
                if Bump::new(gamma0, domain, l, r, h).is_ok() {
                    lo = h;
                } else {
                    hi = h;
                }
            }
            if lo == 0.0 {
                continue;
            }
            let cand = Bump::new(gamma0, domain, l, r, lo)?;
            let score = |b: &Bump| (0.5 * (b.right - b.left)).min(b.height);
            if best.as_ref().map_or(true, |b| score(&cand) > score(b)) {
                best = Some(cand);
            }
        }
        best.ok_or_else(|| {
            TraceError::BumpSupportViolation("no rectangle above the segment fits the domain".into())
        })
    }

    pub fn expr(&self) -> Expr {
        let x1 = Expr::Var(Var::X1);
        let x2 = Expr::Var(Var::X2);
        let (l, r, h) = (self.left, self.right, self.height);
        let beta =
            Expr::Const(4.0 / ((r - l) * (r - l))) * (x1.clone() - Expr::Const(l)) * (Expr::Const(r) - x1);
        let gamma = (Expr::Const(h) - x2) / Expr::Const(h);
        beta.powf(4.0) * gamma.powf(4.0)
    }

    fn nodes(&self, order: u32) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>), TraceError> {
        if !SUPPORTED_ORDERS.contains(&order) {
            return Err(GeometryError::UnsupportedOrder(order).into());
        }
        // exact per panel up to degree 2 order + 1
        let n = order as usize + 1;
        let composite = |lo: f64, hi: f64| {
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            let step = (hi - lo) / PANELS as f64;
            for k in 0..PANELS {
                let (x, w) = gauss_legendre_interval(n, lo + k as f64 * step, lo + (k + 1) as f64 * step);
                xs.extend(x);
                ws.extend(w);
            }
            (xs, ws)
        };
        let (x, wx) = composite(self.left, self.right);
        let (y, wy) = composite(0.0, self.height);
        Ok((x, wx, y, wy))
    }
}

/// Checks `(Lu, v) - (u, Lv) = sum_j int_Gamma0 L(3-j)u d_nu^j v ds` for
/// `v = bump * w`, with the traces built from `data`.
pub fn gamma0_identity_residual(
    sym: &HyperbolicSymbol,
    data: &CauchyData,
    u: &Expr,
    w: &Expr,
    bump: &Bump,
    order: u32,
) -> Result<IdentityReport, TraceError> {
    let traces = gamma0_traces(sym, data)?;
    gamma0_identity_residual_with(sym, &traces, u, w, bump, order)
}

/// As [`gamma0_identity_residual`] with caller-supplied traces.
pub fn gamma0_identity_residual_with(
    sym: &HyperbolicSymbol,
    traces: &TraceSet,
    u: &Expr,
    w: &Expr,
    bump: &Bump,
    order: u32,
) -> Result<IdentityReport, TraceError> {
    let v = expr::mul(bump.expr(), w.clone());
    let lu = apply_operator(sym, u)?;
    let lv = apply_operator(sym, &v)?;
    let (xs, wxs, ys, wys) = bump.nodes(order)?;
    let mut side_a = 0.0;
    for (y, wy) in ys.iter().zip(&wys) {
        let mut row = 0.0;
        for (x, wx) in xs.iter().zip(&wxs) {
            row += wx * (lu.eval(*x, *y)? * v.eval(*x, *y)? - u.eval(*x, *y)? * lv.eval(*x, *y)?);
        }
        side_a += wy * row;
    }
    // d_nu = -d2 on the initial segment
    let mut normal_derivs = Vec::with_capacity(4);
    let mut d = v.clone();
    for j in 0..4 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        normal_derivs.push(expr::mul(Expr::Const(sign), d.clone()));
        d = d.derivative(Var::X2)?;
    }
    let mut side_b = 0.0;
    for (x, wx) in xs.iter().zip(&wxs) {
        let mut s = 0.0;
        for (j, dv) in normal_derivs.iter().enumerate() {
            s += traces.eval(3 - j, *x)? * dv.eval(*x, 0.0)?;
        }
        side_b += wx * s;
    }
    Ok(IdentityReport::new(side_a, side_b, order))
}

/// `u, P4 u, P3 P4 u, P2 P3 P4 u`: the derivative parts of the tilde traces.
fn nested_transports(sym: &HyperbolicSymbol, u: &Expr) -> Result<[Expr; 4], TraceError> {
    let r = sym.roots();
    let d0 = u.clone();
    let d1 = d0.transport(r[3])?;
    let d2 = d1.transport(r[2])?;
    let d3 = d2.transport(r[1])?;
    Ok([d0, d1, d2, d3])
}

/// Sampled tilde traces along one boundary edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeTraces {
    pub edge: Edge,
    pub points: Vec<Point>,
    /// `values[p][i]` is the `p`-th trace at `points[i]`: `<nu, a^4> u`,
    /// `<nu, a^3> P4 u`, `<nu, a^2> P3 P4 u`, `<nu, a^1> P2 P3 P4 u`.
    pub values: [Vec<f64>; 4],
}

/// Tilde traces on every edge of a polygon whose characteristic edges carry
/// root labels, at `samples` equispaced points per edge.
pub fn tilde_traces(
    sym: &HyperbolicSymbol,
    u: &Expr,
    domain: &Polygon,
    samples: usize,
) -> Result<Vec<EdgeTraces>, TraceError> {
    let roots = sym.roots();
    let dirs = sym.directions();
    let d = nested_transports(sym, u)?;
    let mut out = Vec::new();
    for edge in domain.edges(Some(&roots)) {
        let mut points = Vec::with_capacity(samples);
        let mut values: [Vec<f64>; 4] = Default::default();
        for i in 0..samples {
            let t = if samples == 1 {
                0.5
            } else {
                i as f64 / (samples - 1) as f64
            };
            let p = [
                edge.start[0] + t * (edge.end[0] - edge.start[0]),
                edge.start[1] + t * (edge.end[1] - edge.start[1]),
            ];
            for (k, vals) in values.iter_mut().enumerate() {
                let pair = dirs[3 - k].pair(edge.normal);
                vals.push(pair * d[k].eval(p[0], p[1])?);
            }
            points.push(p);
        }
        out.push(EdgeTraces { edge, points, values });
    }
    Ok(out)
}

/// Checks the kernel form of the Green identity for `v = profile(x2 +
/// lambda_j x1)`, which `P_j` annihilates:
///
/// `int Lu v = a0 oint [<nu,a1> P2P3P4u v - <nu,a2> P3P4u P1v
///                    + <nu,a3> P4u P2P1v - <nu,a4> u P3P2P1v] ds`.
///
/// `root_index` is 1-based in ascending root order; `profile` is written in
/// the variable `x1`.
pub fn kernel_identity_residual(
    sym: &HyperbolicSymbol,
    u: &Expr,
    root_index: usize,
    profile: &Expr,
    domain: &Polygon,
    order: u32,
) -> Result<IdentityReport, TraceError> {
    if !(1..=4).contains(&root_index) {
        return Err(TraceError::InvalidRootIndex(root_index));
    }
    if profile.depends_on(Var::X2) {
        return Err(TraceError::ProfileNotUnivariate);
    }
    let roots = sym.roots();
    let dirs = sym.directions();
    let lambda = roots[root_index - 1];
    let arg = expr::add(
        Expr::Var(Var::X2),
        expr::mul(Expr::Const(lambda), Expr::Var(Var::X1)),
    );
    let v = profile.substitute(Var::X1, &arg);
    let lu = apply_operator(sym, u)?;
    let side_a = polygon_quadrature(domain, order)?
        .integrate(|[x, y]| -> Result<f64, TraceError> { Ok(lu.eval(x, y)? * v.eval(x, y)?) })?;

    let du = nested_transports(sym, u)?;
    // v, P1 v, P2 P1 v, P3 P2 P1 v
    let v1 = v.transport(roots[0])?;
    let v2 = v1.transport(roots[1])?;
    let v3 = v2.transport(roots[2])?;
    let dv = [v, v1, v2, v3];
    let mut side_b = 0.0;
    for edge in domain.edges(Some(&roots)) {
        let pairs: [f64; 4] = std::array::from_fn(|k| dirs[k].pair(edge.normal));
        side_b += edge_quadrature(&edge, order)?.integrate(|[x, y]| -> Result<f64, TraceError> {
            let mut s = 0.0;
            for k in 0..4 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * pairs[k] * du[3 - k].eval(x, y)? * dv[k].eval(x, y)?;
            }
            Ok(s)
        })?;
    }
    Ok(IdentityReport::new(side_a, sym.a0() * side_b, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{build_pentagon, determinacy_region};
    use crate::symbol::{build_symbol, coeffs_from_roots, SymbolCoefficients};

    fn wave() -> HyperbolicSymbol {
        build_symbol(SymbolCoefficients::new([1.0, 0.0, -5.0, 0.0, 4.0]).unwrap()).unwrap()
    }

    fn pentagon(sym: &HyperbolicSymbol) -> Polygon {
        build_pentagon(sym, Gamma0::new(0.25, 0.75).unwrap(), [0.5, 0.3])
            .unwrap()
            .polygon()
            .clone()
    }

    fn triangle_bump(sym: &HyperbolicSymbol) -> (Bump, Polygon) {
        let g = Gamma0::new(0.0, 1.0).unwrap();
        let poly = determinacy_region(sym, g).polygon();
        (Bump::fit(g, &poly).unwrap(), poly)
    }

    #[test]
    fn bump_vanishes_to_fourth_order_on_its_sides() {
        let s = wave();
        let (b, _) = triangle_bump(&s);
        let e = b.expr();
        for k in 0..4 {
            let d = e.nth_derivative(Var::X1, k).unwrap();
            assert!(d.eval(b.left, 0.01).unwrap().abs() < 1e-12);
            let d = e.nth_derivative(Var::X2, k).unwrap();
            assert!(d.eval(0.5, b.height).unwrap().abs() < 1e-12);
        }
        assert!((e.eval(0.5 * (b.left + b.right), 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bump_support_violation() {
        let s = wave();
        let g = Gamma0::new(0.0, 1.0).unwrap();
        let poly = determinacy_region(&s, g).polygon();
        assert!(matches!(
            Bump::new(g, &poly, 0.1, 0.9, 0.4),
            Err(TraceError::BumpSupportViolation(_))
        ));
        assert!(matches!(
            Bump::new(g, &poly, 0.0, 0.9, 0.01),
            Err(TraceError::BumpSupportViolation(_))
        ));
        assert!(Bump::new(g, &poly, 0.1, 0.9, 0.05).is_ok());
    }

    #[test]
    fn quartic_identity_on_initial_segment() {
        let s = wave();
        let (bump, _) = triangle_bump(&s);
        let u = parse("x1^4").unwrap();
        let data = CauchyData::from_solution(&u).unwrap();
        let r = gamma0_identity_residual(&s, &data, &u, &Expr::Const(1.0), &bump, 7).unwrap();
        assert!(r.residual <= 1e-8, "{r:?}");
        assert!(r.side_a.abs() > 1e-3);
    }

    #[test]
    fn generic_symbol_and_data_satisfy_the_identity() {
        let s = build_symbol(coeffs_from_roots(0.8, [-1.7, -0.4, 0.9, 2.5]).unwrap()).unwrap();
        let (bump, _) = triangle_bump(&s);
        let u = parse("sin(x1 + 2*x2) + x1^3*x2 - exp(x2 - x1)").unwrap();
        let data = CauchyData::from_solution(&u).unwrap();
        let w = parse("1 + x1*x2").unwrap();
        let r = gamma0_identity_residual(&s, &data, &u, &w, &bump, 7).unwrap();
        assert!(r.residual <= 1e-8 * (1.0 + r.side_a.abs()), "{r:?}");
    }

    #[test]
    fn corrupted_trace_breaks_the_identity() {
        let s = wave();
        let (bump, _) = triangle_bump(&s);
        let u = parse("x1^4 + x2^2").unwrap();
        let data = CauchyData::from_solution(&u).unwrap();
        let t = gamma0_traces(&s, &data).unwrap().perturbed(2, -1.0);
        let r = gamma0_identity_residual_with(&s, &t, &u, &Expr::Const(1.0), &bump, 7).unwrap();
        assert!(r.residual > 1e-3, "{r:?}");
    }

    #[test]
    fn zero_data_near_support() {
        let s = wave();
        let (bump, _) = triangle_bump(&s);
        let u = parse("x2^4").unwrap();
        let data = CauchyData::from_solution(&u).unwrap();
        let r = gamma0_identity_residual(&s, &data, &u, &Expr::Const(1.0), &bump, 7).unwrap();
        assert!(r.side_b.abs() <= 1e-10);
        assert!(r.residual <= 1e-10, "{r:?}");
    }

    #[test]
    fn negated_data_flips_both_sides() {
        let s = wave();
        let (bump, _) = triangle_bump(&s);
        let u = parse("x1^4 + cos(x2)").unwrap();
        let neg = -u.clone();
        let one = Expr::Const(1.0);
        let a = gamma0_identity_residual(&s, &CauchyData::from_solution(&u).unwrap(), &u, &one, &bump, 7)
            .unwrap();
        let b = gamma0_identity_residual(
            &s,
            &CauchyData::from_solution(&neg).unwrap(),
            &neg,
            &one,
            &bump,
            7,
        )
        .unwrap();
        let sum = ((a.side_a + b.side_a) - (a.side_b + b.side_b)).abs();
        assert!(sum <= 2e-8);
    }

    #[test]
    fn tilde_traces_vanish_on_matching_edges() {
        let s = wave();
        let p = pentagon(&s);
        let u = parse("exp(x1) * sin(x2) + x1^4").unwrap();
        let t = tilde_traces(&s, &u, &p, 7).unwrap();
        assert_eq!(t.len(), 5);
        for e in &t {
            if let Some(j) = e.edge.root {
                // the trace paired with a^{j+1} is index 3 - j
                for v in &e.values[3 - j] {
                    assert!(v.abs() <= 1e-12, "edge root {j}: {v}");
                }
            }
        }
    }

    #[test]
    fn tilde_traces_of_simple_functions() {
        let s = wave();
        let p = pentagon(&s);
        let dirs = *s.directions();
        let t = tilde_traces(&s, &Expr::Const(1.0), &p, 3).unwrap();
        for e in &t {
            for k in 1..4 {
                assert!(e.values[k].iter().all(|v| *v == 0.0));
            }
            let want = dirs[3].pair(e.edge.normal);
            assert!(e.values[0].iter().all(|v| (v - want).abs() < 1e-15));
        }
        let t = tilde_traces(&s, &parse("x1").unwrap(), &p, 3).unwrap();
        for e in &t {
            let want = dirs[2].pair(e.edge.normal);
            assert!(e.values[1].iter().all(|v| (v - want).abs() < 1e-15));
        }
    }

    #[test]
    fn kernel_identity_cases() {
        let s = wave();
        let p = pentagon(&s);
        let l2 = s.roots()[1];
        let ker = parse(&format!("(x2 + ({l2})*x1)^3")).unwrap();
        let cases = [
            (ker, 3, parse("exp(x1)").unwrap()),
            (parse("x1^4").unwrap(), 1, Expr::Const(1.0)),
            (parse("x1^4").unwrap(), 4, parse("x1").unwrap()),
        ];
        for (u, j, h) in cases {
            let r = kernel_identity_residual(&s, &u, j, &h, &p, 7).unwrap();
            assert!(r.residual <= 1e-8, "j={j}: {r:?}");
        }
        // non-polynomial integrands: quadrature-limited
        let u = parse("sin(x1 + x2) * x2").unwrap();
        let r = kernel_identity_residual(&s, &u, 2, &parse("cos(2*x1)").unwrap(), &p, 7).unwrap();
        assert!(r.residual <= 1e-6, "{r:?}");
        assert_eq!(
            kernel_identity_residual(&s, &Expr::Const(1.0), 0, &Expr::Const(1.0), &p, 7).unwrap_err(),
            TraceError::InvalidRootIndex(0)
        );
    }

    #[test]
    fn kernel_identity_respects_leading_coefficient() {
        let s = wave().scaled(2.5).unwrap();
        let p = pentagon(&s);
        let u = parse("x1^4 + x1*x2^2").unwrap();
        let r = kernel_identity_residual(&s, &u, 2, &parse("x1^2").unwrap(), &p, 7).unwrap();
        assert!(r.residual <= 1e-8, "{r:?}");
        assert!(r.side_a.abs() > 1e-4);
    }
}
