//! Characteristic geometry: feet on the initial line, the domain of
//! determinacy, the characteristic pentagon through a point, and quadrature
//! on polygons and edges.

mod quadrature;

use serde::Serialize;
use thiserror::Error;

use crate::symbol::HyperbolicSymbol;

pub use quadrature::{
    edge_quadrature, gauss_legendre, gauss_legendre_interval, polygon_quadrature, triangle_quadrature,
    AreaRule, EdgeRule, SUPPORTED_ORDERS,
};

pub type Point = [f64; 2];

/// Tolerance for point classification against polygon edges.
pub const POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("characteristic root is zero")]
    ZeroRoot,
    #[error("invalid initial segment [{a}, {b}]: need b - a >= 1e-6")]
    InvalidGamma0 { a: f64, b: f64 },
    #[error("point ({0}, {1}) must lie strictly above the initial line")]
    NotAboveGamma0(f64, f64),
    #[error("no root assignment yields a valid characteristic pentagon")]
    NoValidPentagon,
    #[error("unsupported quadrature order {0} (supported: 3, 5, 7)")]
    UnsupportedOrder(u32),
}

/// The initial segment `{x1 in [a, b], x2 = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gamma0 {
    pub a: f64,
    pub b: f64,
}

impl Gamma0 {
    pub fn new(a: f64, b: f64) -> Result<Self, GeometryError> {
        if !(a.is_finite() && b.is_finite()) || b - a < 1e-6 {
            return Err(GeometryError::InvalidGamma0 { a, b });
        }
        Ok(Gamma0 { a, b })
    }

    /// Outer normal of the region above the line.
    pub fn normal(&self) -> Point {
        [0.0, -1.0]
    }

    /// Boundary tangent, oriented from `b` back to `a`.
    pub fn tangent(&self) -> Point {
        [-1.0, 0.0]
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Where the characteristic line through `p` with direction `(1, -lambda)`
/// meets `x2 = 0`.
pub fn foot(p: Point, lambda: f64) -> Result<f64, GeometryError> {
    if lambda == 0.0 {
        return Err(GeometryError::ZeroRoot);
    }
    Ok(p[0] + p[1] / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A directed boundary edge with unit outer normal and unit tangent along the
/// boundary order. `root` is the 0-based index of the characteristic family
/// the edge belongs to, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub start: Point,
    pub end: Point,
    pub normal: Point,
    pub tangent: Point,
    pub root: Option<usize>,
}

impl Edge {
    pub fn length(&self) -> f64 {
        dist(self.start, self.end)
    }

    /// Distance from `p` to the segment.
    pub fn distance(&self, p: Point) -> f64 {
        let d = sub(self.end, self.start);
        let len2 = dot(d, d);
        let t = if len2 == 0.0 {
            0.0
        } else {
            (dot(sub(p, self.start), d) / len2).clamp(0.0, 1.0)
        };
        dist(p, [self.start[0] + t * d[0], self.start[1] + t * d[1]])
    }
}

fn sub(p: Point, q: Point) -> Point {
    [p[0] - q[0], p[1] - q[1]]
}

fn dot(p: Point, q: Point) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

fn cross(p: Point, q: Point) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

fn dist(p: Point, q: Point) -> f64 {
    let d = sub(p, q);
    dot(d, d).sqrt()
}

/// Simple polygon given by its vertices in boundary order (either orientation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point>,
    roots: Vec<Option<usize>>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        let n = vertices.len();
        Polygon {
            vertices,
            roots: vec![None; n],
        }
    }

    /// Polygon whose edge `i` (from vertex `i` to `i + 1`) belongs to the
    /// characteristic family `roots[i]`.
    pub fn with_roots(vertices: Vec<Point>, roots: Vec<Option<usize>>) -> Self {
        assert_eq!(vertices.len(), roots.len());
        Polygon { vertices, roots }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Shoelace area, positive for counterclockwise order.
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let v = &self.vertices;
        let n = v.len();
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let c = cross(p, q);
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        [cx / (6.0 * a), cy / (6.0 * a)]
    }

    /// Boundary edges with outer normals. Characteristic edges get the exact
    /// family normal `(lambda, 1) / |(lambda, 1)|` (sign chosen outward), so
    /// that `<normal, a^j>` vanishes identically on them.
    pub fn edges(&self, roots: Option<&[f64; 4]>) -> Vec<Edge> {
        let v = &self.vertices;
        let n = v.len();
        let ccw = self.signed_area() > 0.0;
        (0..n)
            .map(|i| {
                let (start, end) = (v[i], v[(i + 1) % n]);
                let d = sub(end, start);
                let len = dot(d, d).sqrt();
                let tangent = [d[0] / len, d[1] / len];
                let geometric = if ccw {
                    [tangent[1], -tangent[0]]
                } else {
                    [-tangent[1], tangent[0]]
                };
                let root = self.roots[i];
                let normal = match (root, roots) {
                    (Some(j), Some(r)) => {
                        let l = r[j];
                        let m = (l * l + 1.0).sqrt();
                        let exact = [l / m, 1.0 / m];
                        if dot(exact, geometric) >= 0.0 {
                            exact
                        } else {
                            [-exact[0], -exact[1]]
                        }
                    }
                    _ => geometric,
                };
                Edge {
                    start,
                    end,
                    normal,
                    tangent,
                    root,
                }
            })
            .collect()
    }

    /// Inside/boundary/outside with [`POINT_TOL`] for the boundary band.
    pub fn locate(&self, p: Point) -> Location {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            let e = Edge {
                start: v[i],
                end: v[(i + 1) % n],
                normal: [0.0, 0.0],
                tangent: [0.0, 0.0],
                root: None,
            };
            if e.distance(p) <= POINT_TOL {
                return Location::Boundary;
            }
        }
        // crossing number
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// True when no two non-adjacent edges meet and no edge is degenerate.
    pub fn is_simple(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let scale = v.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        if (0..n).any(|i| dist(v[i], v[(i + 1) % n]) <= 1e-12 * scale) {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_meet(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n], 1e-12 * scale) {
                    return false;
                }
            }
        }
        true
    }
}

fn segments_meet(p1: Point, p2: Point, q1: Point, q2: Point, tol: f64) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point| {
        Edge {
            start: a,
            end: b,
            normal: [0.0; 2],
            tangent: [0.0; 2],
            root: None,
        }
        .distance(p)
            <= tol
    };
    on(p1, p2, q1) || on(p1, p2, q2) || on(q1, q2, p1) || on(q1, q2, p2)
}

/// Domain of determinacy of `[a, b]`: all points of the upper half-plane whose
/// four backward characteristics land inside `[a, b]`.
///
/// With `m = min_j 1/lambda_j` and `M = max_j 1/lambda_j` it is the triangle
/// `x1 + m x2 >= a`, `x1 + M x2 <= b`, `x2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterminacyTriangle {
    pub gamma0: Gamma0,
    /// Root index (0-based) realizing the smallest foot.
    pub left_root: usize,
    /// Root index (0-based) realizing the largest foot.
    pub right_root: usize,
    pub apex: Point,
    min_inv: f64,
    max_inv: f64,
}

impl DeterminacyTriangle {
    pub fn height(&self) -> f64 {
        self.apex[1]
    }

    /// Signed distance-like margins `(left, right)` of `p` from the two
    /// lateral edges, measured in the max norm. Positive inside.
    pub fn lateral_margins(&self, p: Point) -> (f64, f64) {
        let left = (p[0] + self.min_inv * p[1] - self.gamma0.a) / (1.0 + self.min_inv.abs());
        let right = (self.gamma0.b - p[0] - self.max_inv * p[1]) / (1.0 + self.max_inv.abs());
        (left, right)
    }

    /// Smaller of the two lateral max-norm margins.
    pub fn lateral_margin(&self, p: Point) -> f64 {
        let (l, r) = self.lateral_margins(p);
        l.min(r)
    }

    /// Closed-set membership with [`POINT_TOL`] slack.
    pub fn contains(&self, p: Point) -> bool {
        p[1] >= -POINT_TOL && self.lateral_margin(p) >= -POINT_TOL
    }

    pub fn polygon(&self) -> Polygon {
        Polygon::with_roots(
            vec![[self.gamma0.a, 0.0], [self.gamma0.b, 0.0], self.apex],
            vec![None, Some(self.right_root), Some(self.left_root)],
        )
    }

    /// `[min, max]` of `x1` over the triangle.
    pub fn x1_range(&self) -> (f64, f64) {
        let xs = [self.gamma0.a, self.gamma0.b, self.apex[0]];
        (
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

pub fn determinacy_region(sym: &HyperbolicSymbol, g: Gamma0) -> DeterminacyTriangle {
    let roots = sym.roots();
    let inv = roots.map(|l| 1.0 / l);
    let mut left_root = 0;
    let mut right_root = 0;
    for j in 1..4 {
        if inv[j] < inv[left_root] {
            left_root = j;
        }
        if inv[j] > inv[right_root] {
            right_root = j;
        }
    }
    let (m, big_m) = (inv[left_root], inv[right_root]);
    let height = (g.b - g.a) / (big_m - m);
    DeterminacyTriangle {
        gamma0: g,
        left_root,
        right_root,
        apex: [g.a - m * height, height],
        min_inv: m,
        max_inv: big_m,
    }
}

/// The characteristic pentagon `a O1 C O2 b` through the point `C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PentagonDomain {
    /// `(a,0), O1, C, O2, (b,0)` in boundary order.
    pub vertices: [Point; 5],
    /// Edges `a->O1, O1->C, C->O2, O2->b, b->a`.
    pub edges: Vec<Edge>,
    /// Root index (0-based, ascending roots) carried by the four
    /// characteristic edges in the order above.
    pub assignment: [usize; 4],
    #[serde(skip)]
    polygon: Polygon,
}

impl PentagonDomain {
    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    pub fn locate(&self, p: Point) -> Location {
        self.polygon.locate(p)
    }
}

/// Intersection of the line through `p` with direction `(1, -lp)` and the
/// line through `q` with direction `(1, -lq)`.
fn intersect(p: Point, lp: f64, q: Point, lq: f64) -> Point {
    // x2 = p2 - lp (x1 - p1) = q2 - lq (x1 - q1)
    let x1 = (q[1] - p[1] + lq * q[0] - lp * p[0]) / (lq - lp);
    [x1, p[1] - lp * (x1 - p[0])]
}

/// All root assignments in lexicographic order.
fn assignments() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let s = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|k| s[i] != s[k]));
                    if distinct {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

/// Candidate pentagon for one assignment, `None` when it violates the
/// pentagon invariants.
pub fn pentagon_for_assignment(
    sym: &HyperbolicSymbol,
    g: Gamma0,
    c: Point,
    assignment: [usize; 4],
) -> Option<PentagonDomain> {
    let r = sym.roots();
    let a = [g.a, 0.0];
    let b = [g.b, 0.0];
    let o1 = intersect(a, r[assignment[0]], c, r[assignment[1]]);
    let o2 = intersect(c, r[assignment[2]], b, r[assignment[3]]);
    let ok_height = |o: Point| o[1] > 0.0 && o[1] <= c[1] + 1e-12 && o[0].is_finite();
    if !ok_height(o1) || !ok_height(o2) {
        return None;
    }
    let vertices = [a, o1, c, o2, b];
    let polygon = Polygon::with_roots(
        vertices.to_vec(),
        vec![
            Some(assignment[0]),
            Some(assignment[1]),
            Some(assignment[2]),
            Some(assignment[3]),
            None,
        ],
    );
    if polygon.area() <= 1e-14 || !polygon.is_simple() {
        return None;
    }
    let edges = polygon.edges(Some(&r));
    Some(PentagonDomain {
        vertices,
        edges,
        assignment,
        polygon,
    })
}

/// First valid pentagon over the lexicographic enumeration of root
/// assignments to the edges `a->O1, O1->C, C->O2, O2->b`.
pub fn build_pentagon(sym: &HyperbolicSymbol, g: Gamma0, c: Point) -> Result<PentagonDomain, GeometryError> {
    if !(c[1] > 0.0) || !c[0].is_finite() {
        return Err(GeometryError::NotAboveGamma0(c[0], c[1]));
    }
    assignments()
        .into_iter()
        .find_map(|s| pentagon_for_assignment(sym, g, c, s))
        .ok_or(GeometryError::NoValidPentagon)
}
