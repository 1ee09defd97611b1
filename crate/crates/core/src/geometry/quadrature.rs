use std::sync::OnceLock;

use super::{Edge, GeometryError, Point, Polygon};

/// Nodes and weights of a quadrature rule over a 2D region.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Nodes and arc-length weights along an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl AreaRule {
    /// Weighted sum of `f` over the rule nodes.
    pub fn integrate<E>(&self, mut f: impl FnMut(Point) -> Result<f64, E>) -> Result<f64, E> {
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += w * f(*p)?;
        }
        Ok(acc)
    }
}

impl EdgeRule {
    pub fn integrate<E>(&self, mut f: impl FnMut(Point) -> Result<f64, E>) -> Result<f64, E> {
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += w * f(*p)?;
        }
        Ok(acc)
    }
}

pub const SUPPORTED_ORDERS: [u32; 3] = [3, 5, 7];

fn check_order(order: u32) -> Result<(), GeometryError> {
    if SUPPORTED_ORDERS.contains(&order) {
        Ok(())
    } else {
        Err(GeometryError::UnsupportedOrder(order))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule on `[lo, hi]`.
pub fn gauss_legendre_interval(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

/// Symmetric triangle rule in barycentric coordinates, weights summing to 1.
#[derive(Debug, Clone)]
struct TriangleRule {
    bary: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl TriangleRule {
    fn push_centroid(&mut self, w: f64) {
        let t = 1.0 / 3.0;
        self.bary.push([t, t, t]);
        self.weights.push(w);
    }

    fn push_s21(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.bary.push(p);
            self.weights.push(w);
        }
    }

    fn push_s111(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.bary.push(p);
            self.weights.push(w);
        }
    }
}

fn triangle_rule(order: u32) -> &'static TriangleRule {
    static DEG3: OnceLock<TriangleRule> = OnceLock::new();
    static DEG5: OnceLock<TriangleRule> = OnceLock::new();
    static DEG7: OnceLock<TriangleRule> = OnceLock::new();
    let empty = || TriangleRule {
        bary: Vec::new(),
        weights: Vec::new(),
    };
    match order {
        3 => DEG3.get_or_init(|| {
            // Hammer-Stroud 4-point rule
            let mut r = empty();
            r.push_centroid(-27.0 / 48.0);
            r.push_s21(0.2, 25.0 / 48.0);
            r
        }),
        5 => DEG5.get_or_init(|| {
            // Radon 7-point rule
            let s = 15f64.sqrt();
            let mut r = empty();
            r.push_centroid(9.0 / 40.0);
            r.push_s21((6.0 - s) / 21.0, (155.0 - s) / 1200.0);
            r.push_s21((6.0 + s) / 21.0, (155.0 + s) / 1200.0);
            r
        }),
        _ => DEG7.get_or_init(|| {
            // Dunavant 13-point rule, parameters re-solved from the moment
            // equations in extended precision
            let mut r = empty();
            r.push_centroid(-0.149_570_044_467_681_750_63);
            r.push_s21(0.065_130_102_902_215_811_538, 0.053_347_235_608_838_491_27);
            r.push_s21(0.260_345_966_079_039_826_93, 0.175_615_257_433_207_811_75);
            r.push_s111(
                0.048_690_315_425_316_411_793,
                0.312_865_496_004_873_861_41,
                0.077_113_760_890_257_140_26,
            );
            r
        }),
    }
}

/// Quadrature over a triangle exact for polynomials of total degree `order`.
/// The weights carry the sign of the triangle's orientation.
pub fn triangle_quadrature(tri: [Point; 3], order: u32) -> Result<AreaRule, GeometryError> {
    check_order(order)?;
    let rule = triangle_rule(order);
    let signed = 0.5
        * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
            - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]));
    let mut points = Vec::with_capacity(rule.bary.len());
    let mut weights = Vec::with_capacity(rule.bary.len());
    for (l, w) in rule.bary.iter().zip(&rule.weights) {
        points.push([
            l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
            l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
        ]);
        weights.push(w * signed);
    }
    Ok(AreaRule { points, weights })
}

/// Fan triangulation from the centroid with a symmetric Gauss rule on each
/// triangle. Signed fan weights make the rule exact for any simple polygon,
/// convex or not.
pub fn polygon_quadrature(poly: &Polygon, order: u32) -> Result<AreaRule, GeometryError> {
    check_order(order)?;
    let c = poly.centroid();
    let orientation = poly.signed_area().signum();
    let v = poly.vertices();
    let mut out = AreaRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    for i in 0..v.len() {
        let tri = triangle_quadrature([c, v[i], v[(i + 1) % v.len()]], order)?;
        out.points.extend(tri.points);
        out.weights.extend(tri.weights.iter().map(|w| w * orientation));
    }
    Ok(out)
}

/// Gauss-Legendre rule with `ceil((order + 1) / 2)` nodes along the edge,
/// weights in arc length.
pub fn edge_quadrature(edge: &Edge, order: u32) -> Result<EdgeRule, GeometryError> {
    check_order(order)?;
    let n = (order as usize + 2) / 2;
    Ok(segment_rule(edge.start, edge.end, n))
}

pub(crate) fn segment_rule(start: Point, end: Point, n: usize) -> EdgeRule {
    let (t, w) = gauss_legendre_interval(n, 0.0, 1.0);
    let len = ((end[0] - start[0]).powi(2) + (end[1] - start[1]).powi(2)).sqrt();
    EdgeRule {
        points: t
            .iter()
            .map(|s| {
                [
                    start[0] + s * (end[0] - start[0]),
                    start[1] + s * (end[1] - start[1]),
                ]
            })
            .collect(),
        weights: w.iter().map(|wi| wi * len).collect(),
    }
}
