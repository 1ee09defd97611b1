//! The wave operator `d1 d2` on the unit disk with `u = (1 - x1^2)^p`.
//!
//! On the circle of radius `r` the classical trace `I(r) = oint u ds` blows up
//! as `r -> 1` when `p <= -1/2`, while `u` stays square integrable for
//! `p > -3/4` and the `L(0)`-trace `-x1 x2 u` stays square integrable on the
//! circles.

use std::f64::consts::{FRAC_PI_2, LN_10};

use serde::Serialize;

use super::TraceError;
use crate::geometry::gauss_legendre_interval;

pub const DEFAULT_DISK_EXPONENT: f64 = -0.625;

const REL_TOL: f64 = 1e-8;
const GL_POINTS: usize = 10;
const MAX_PANELS: usize = 1 << 16;
/// Decades of `1 - r` probed by the convergence tests.
const DECADES: usize = 8;
/// Increment ratio below which a decade sequence counts as convergent.
const RATIO_LIMIT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskRow {
    pub r: f64,
    pub i: f64,
    pub n: f64,
    /// Panels used by the adaptive rule for `I(r)`.
    pub panels: usize,
}

/// Increments of a quantity over successive decades of `1 - r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecadeTest {
    pub increments: Vec<f64>,
    pub last_ratio: f64,
    pub converges: bool,
}

impl DecadeTest {
    fn new(increments: Vec<f64>) -> Self {
        let k = increments.len();
        let last_ratio = (increments[k - 1] / increments[k - 2]).abs();
        DecadeTest {
            converges: last_ratio < RATIO_LIMIT,
            increments,
            last_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskReport {
    pub p: f64,
    pub rows: Vec<DiskRow>,
    /// Least-squares slope of `log I` against `log(1 - r^2)`.
    pub slope_raw: Option<f64>,
    /// Slope of `log |I(r_{k+1}) - I(r_k)|` against `log(1 - r_k^2)`, which
    /// removes the bounded part of `I` and isolates the singular power. Only
    /// meaningful for geometric radii such as `r = 1 - 10^-k`.
    pub slope: Option<f64>,
    /// Convergence of `I(r)` as `r -> 1`.
    pub trace_limit: DecadeTest,
    /// Convergence of `int_K u^2` through the radial integral.
    pub membership: DecadeTest,
}

impl DiskReport {
    pub fn trace_blows_up(&self) -> bool {
        !self.trace_limit.converges
    }

    pub fn in_l2(&self) -> bool {
        self.membership.converges
    }
}

/// Globally adaptive Gauss-Legendre: panels whose two-level error estimate is
/// above their share of the tolerance are halved until the total estimate
/// meets `REL_TOL`. Returns the integral and the final panel count.
fn adaptive(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, usize) {
    let gl = |a: f64, b: f64| {
        let (x, w) = gauss_legendre_interval(GL_POINTS, a, b);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>()
    };
    let refine = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        let coarse = gl(a, b);
        let fine = gl(a, m) + gl(m, b);
        (a, b, fine, (fine - coarse).abs())
    };
    let mut panels = vec![refine(lo, hi)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= REL_TOL * total.abs() || panels.len() >= MAX_PANELS {
            return (total, panels.len());
        }
        let share = REL_TOL * total.abs() / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        for p in panels {
            if p.3 > share {
                let m = 0.5 * (p.0 + p.1);
                next.push(refine(p.0, m));
                next.push(refine(m, p.1));
            } else {
                next.push(p);
            }
        }
        panels = next;
    }
}

/// `1 - r^2 cos^2 t`, written to keep its size near `t = 0` as `r -> 1`.
fn base(r: f64, t: f64) -> f64 {
    (1.0 - r) * (1.0 + r) + (r * t.sin()).powi(2)
}

/// `int_{|x| = r} u ds` by symmetry over a quarter turn.
fn ring_integral(p: f64, r: f64) -> (f64, usize) {
    let (v, n) = adaptive(&|t| base(r, t).powf(p) * r, 0.0, FRAC_PI_2);
    (4.0 * v, n)
}

/// `int_{|x| = r} (x1 x2 u)^2 ds`.
fn l0_norm(p: f64, r: f64) -> f64 {
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        (r * r * s * c).powi(2) * base(r, t).powf(2.0 * p) * r
    };
    4.0 * adaptive(&f, 0.0, FRAC_PI_2).0
}

/// `int_{|x| = r} u^2 ds`.
fn ring_square(p: f64, r: f64) -> f64 {
    4.0 * adaptive(&|t| base(r, t).powf(2.0 * p) * r, 0.0, FRAC_PI_2).0
}

fn decade_radius(t: f64) -> f64 {
    1.0 - 10f64.powf(-t)
}

/// Integral of `g(r)` over `r in [1 - 10^-k, 1 - 10^-(k+1)]` in the variable
/// `t = -log10(1 - r)`.
fn decade_integral(g: &dyn Fn(f64) -> f64, k: f64) -> f64 {
    let (t, w) = gauss_legendre_interval(GL_POINTS, k, k + 1.0);
    t.iter()
        .zip(&w)
        .map(|(t, w)| w * g(decade_radius(*t)) * LN_10 * 10f64.powf(-t))
        .sum()
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Tabulates `I(r)` and `N(r)` on the given radii, fits the blow-up rate of
/// `I`, and tests the limits of `I` and of the radial `L^2` integral.
pub fn wave_disk_demo(p: f64, radii: &[f64]) -> Result<DiskReport, TraceError> {
    if !(p < 0.0) {
        return Err(TraceError::NonNegativeExponent(p));
    }
    for &r in radii {
        if !(r > 0.0 && r < 1.0) {
            return Err(TraceError::InvalidRadius(r));
        }
    }
    let rows: Vec<DiskRow> = radii
        .iter()
        .map(|&r| {
            let (i, panels) = ring_integral(p, r);
            DiskRow {
                r,
                i,
                n: l0_norm(p, r),
                panels,
            }
        })
        .collect();

    let log_gap = |r: f64| ((1.0 - r) * (1.0 + r)).ln();
    let xs: Vec<f64> = rows.iter().map(|row| log_gap(row.r)).collect();
    let ys: Vec<f64> = rows.iter().map(|row| row.i.ln()).collect();
    let slope_raw = fit_slope(&xs, &ys);

    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.r.total_cmp(&b.r));
    let (mut dx, mut dy) = (Vec::new(), Vec::new());
    for w in sorted.windows(2) {
        let d = (w[1].i - w[0].i).abs();
        if d > 0.0 {
            dx.push(log_gap(w[0].r));
            dy.push(d.ln());
        }
    }
    let slope = fit_slope(&dx, &dy);

    let limits: Vec<f64> = (1..=DECADES + 1)
        .map(|k| ring_integral(p, decade_radius(k as f64)).0)
        .collect();
    let trace_limit = DecadeTest::new(limits.windows(2).map(|w| (w[1] - w[0]).abs()).collect());

    let g = |r: f64| ring_square(p, r);
    let membership = DecadeTest::new((1..=DECADES).map(|k| decade_integral(&g, k as f64)).collect());

    Ok(DiskReport {
        p,
        rows,
        slope_raw,
        slope,
        trace_limit,
        membership,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radii() -> Vec<f64> {
        (2..=6).map(|k| 1.0 - 10f64.powi(-k)).collect()
    }

    #[test]
    fn adaptive_rule_on_smooth_and_peaked_integrands() {
        let (v, _) = adaptive(&|t: f64| t.cos(), 0.0, FRAC_PI_2);
        assert!((v - 1.0).abs() < 1e-13);
        // int_0^1 (e^2 + t^2)^-1 dt = atan(1/e)/e
        let e = 1e-4;
        let (v, n) = adaptive(&|t: f64| 1.0 / (e * e + t * t), 0.0, 1.0);
        let exact = (1.0 / e).atan() / e;
        assert!(((v - exact) / exact).abs() < 1e-8);
        assert!(n > 1);
    }

    #[test]
    fn ring_integral_against_closed_form() {
        // p = -1/2: int_0^{2pi} (1 - r^2 cos^2)^{-1/2} r dt = 4 r K(r)
        let r: f64 = 0.6;
        let mut k = 0.0;
        let (x, w) = gauss_legendre_interval(40, 0.0, FRAC_PI_2);
        for (t, w) in x.iter().zip(&w) {
            k += w / (1.0 - r * r * t.sin().powi(2)).sqrt();
        }
        let (v, _) = ring_integral(-0.5, r);
        assert!((v - 4.0 * r * k).abs() < 1e-12);
    }

    #[test]
    fn default_exponent_table() {
        let rep = wave_disk_demo(DEFAULT_DISK_EXPONENT, &radii()).unwrap();
        let want_i = [17.226132, 27.433693, 40.948894, 58.956699, 82.968278];
        let want_n = [3.419984, 4.9670124, 5.8523893, 6.3511637, 6.6316954];
        for (row, (wi, wn)) in rep.rows.iter().zip(want_i.iter().zip(&want_n)) {
            assert!(((row.i - wi) / wi).abs() < 1e-6, "{row:?}");
            assert!(((row.n - wn) / wn).abs() < 1e-6, "{row:?}");
        }
        assert!((rep.slope.unwrap() + 0.124).abs() < 0.002);
        assert!((rep.slope_raw.unwrap() + 0.170).abs() < 0.002);
        assert!(rep.trace_blows_up());
        assert!(rep.in_l2());
    }

    #[test]
    fn membership_verdicts() {
        assert!(!wave_disk_demo(-2.5, &radii()).unwrap().in_l2());
        let mild = wave_disk_demo(-0.25, &radii()).unwrap();
        assert!(mild.in_l2());
        assert!(!mild.trace_blows_up());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            wave_disk_demo(0.5, &radii()).unwrap_err(),
            TraceError::NonNegativeExponent(0.5)
        );
        assert_eq!(
            wave_disk_demo(-0.5, &[1.0]).unwrap_err(),
            TraceError::InvalidRadius(1.0)
        );
    }
}
