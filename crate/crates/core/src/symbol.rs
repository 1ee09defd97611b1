//! Quartic symbol of the operator
//! `a0 u_{1111} + a1 u_{1112} + a2 u_{1122} + a3 u_{1222} + a4 u_{2222}`,
//! its characteristic roots and the factorization into transport operators.
//!
//! With roots `l1 < l2 < l3 < l4` of `a0 l^4 + a1 l^3 + a2 l^2 + a3 l + a4`,
//! the symbol factors as `L(xi) = a0 * prod_j (xi1 - lj xi2)`, so that
//! `L = a0 P1 P2 P3 P4` with `Pj = d/dx1 - lj d/dx2`. The factor vector of
//! root `j` is `a^j = (1, -lj)` and the characteristic normal is `(lj, 1)`.

use nalgebra::{Complex, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum separation between two roots before the symbol counts as degenerate.
pub const GAP_TOL: f64 = 1e-6;
/// Largest imaginary part still accepted as a real root.
pub const IMAG_TOL: f64 = 1e-8;
/// Roots below this magnitude make the initial line characteristic.
pub const ZERO_ROOT_TOL: f64 = 1e-9;

const NEWTON_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error("leading coefficient a0 vanishes")]
    ZeroLeading,
    #[error("coefficient {0} is not finite")]
    NonFinite(usize),
    #[error("not hyperbolic: characteristic root {re} {sign} {im}i is not real", sign = if *.im < 0.0 { '-' } else { '+' }, im = .im.abs())]
    NonRealRoots { re: f64, im: f64 },
    #[error("degenerate symbol: roots {0} and {1} coincide")]
    MultipleRoots(f64, f64),
    #[error("zero characteristic root: the line x2 = 0 is characteristic")]
    ZeroRoot,
    #[error("roots are not admissible: {0}")]
    DegenerateRoots(String),
}

/// The five operator coefficients `a0..a4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct SymbolCoefficients([f64; 5]);

impl SymbolCoefficients {
    pub fn new(a: [f64; 5]) -> Result<Self, SymbolError> {
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(SymbolError::NonFinite(i));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || a[0].abs() <= 1e-12 * scale {
            return Err(SymbolError::ZeroLeading);
        }
        Ok(SymbolCoefficients(a))
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.0
    }

    /// `a_p`, the coefficient of `d^4 / dx1^(4-p) dx2^p`.
    pub fn get(&self, p: usize) -> f64 {
        self.0[p]
    }

    pub fn scaled(&self, c: f64) -> Result<Self, SymbolError> {
        SymbolCoefficients::new(self.0.map(|v| v * c))
    }

    /// Characteristic polynomial `a0 l^4 + ... + a4` and its derivative.
    fn poly(&self, z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
        let mut p = Complex::new(self.0[0], 0.0);
        let mut dp = Complex::new(0.0, 0.0);
        for &c in &self.0[1..] {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }
}

impl TryFrom<[f64; 5]> for SymbolCoefficients {
    type Error = SymbolError;
    fn try_from(a: [f64; 5]) -> Result<Self, Self::Error> {
        SymbolCoefficients::new(a)
    }
}

impl From<SymbolCoefficients> for [f64; 5] {
    fn from(c: SymbolCoefficients) -> Self {
        c.0
    }
}

/// One characteristic family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicDirection {
    /// 1-based root index in ascending order.
    pub index: usize,
    pub root: f64,
    /// `a^j = (1, -lambda_j)`.
    pub tangent: [f64; 2],
    /// `(lambda_j, 1)`, orthogonal to the tangent.
    pub normal: [f64; 2],
    /// `-lambda_j`, slope of the characteristic lines in the (x1, x2) plane.
    pub slope: f64,
    /// `atan(slope)` in radians.
    pub angle: f64,
}

impl CharacteristicDirection {
    fn new(index: usize, root: f64) -> Self {
        CharacteristicDirection {
            index,
            root,
            tangent: [1.0, -root],
            normal: [root, 1.0],
            slope: -root,
            angle: (-root).atan(),
        }
    }

    /// `<v, a^j>` for a real vector `v`.
    pub fn pair(&self, v: [f64; 2]) -> f64 {
        v[0] - self.root * v[1]
    }
}

/// A classified hyperbolic symbol: coefficients, sorted real roots and
/// factor directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicSymbol {
    coeffs: SymbolCoefficients,
    roots: [f64; 4],
    directions: [CharacteristicDirection; 4],
}

impl HyperbolicSymbol {
    pub fn coeffs(&self) -> &SymbolCoefficients {
        &self.coeffs
    }

    pub fn a0(&self) -> f64 {
        self.coeffs.get(0)
    }

    /// Roots in ascending order.
    pub fn roots(&self) -> [f64; 4] {
        self.roots
    }

    pub fn directions(&self) -> &[CharacteristicDirection; 4] {
        &self.directions
    }

    /// Value of the symbol at `xi`.
    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        eval_symbol(&self.coeffs, xi)
    }

    /// `a0 * prod_j <xi, a^j>`.
    pub fn eval_factored(&self, xi: [f64; 2]) -> f64 {
        self.directions.iter().fold(self.a0(), |acc, d| acc * d.pair(xi))
    }

    /// The same operator with all coefficients multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, SymbolError> {
        build_symbol(self.coeffs.scaled(c)?)
    }
}

/// `L(xi) = a0 xi1^4 + a1 xi1^3 xi2 + a2 xi1^2 xi2^2 + a3 xi1 xi2^3 + a4 xi2^4`.
pub fn eval_symbol(c: &SymbolCoefficients, xi: [f64; 2]) -> f64 {
    let [x, y] = xi;
    let a = c.as_array();
    let mut acc = 0.0;
    for (p, ap) in a.iter().enumerate() {
        acc += ap * x.powi(4 - p as i32) * y.powi(p as i32);
    }
    acc
}

// Parlett-Reinsch balancing with power-of-two scale factors.
fn balance(m: &mut Matrix4<f64>) {
    const RADIX: f64 = 2.0;
    loop {
        let mut done = true;
        for i in 0..4 {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..4 {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..4 {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Companion-matrix eigenvalues of the characteristic polynomial, polished by
/// Newton steps on the quartic.
pub fn characteristic_roots(c: &SymbolCoefficients) -> [Complex<f64>; 4] {
    let a = c.as_array();
    let mut m = Matrix4::<f64>::zeros();
    for k in 0..4 {
        m[(0, k)] = -a[k + 1] / a[0];
    }
    for k in 1..4 {
        m[(k, k - 1)] = 1.0;
    }
    balance(&mut m);
    let eig = m.complex_eigenvalues();
    let mut out = [Complex::new(0.0, 0.0); 4];
    for (slot, z0) in out.iter_mut().zip(eig.iter()) {
        let mut z = *z0;
        for _ in 0..NEWTON_STEPS {
            let (p, dp) = c.poly(z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            let next = z - step;
            // stop once a step no longer improves the residual
            if c.poly(next).0.norm() > p.norm() {
                break;
            }
            z = next;
            if step.norm() <= 1e-16 * z.norm().max(1.0) {
                break;
            }
        }
        *slot = z;
    }
    out
}

/// Classify the symbol and compute its factorization.
pub fn build_symbol(coeffs: SymbolCoefficients) -> Result<HyperbolicSymbol, SymbolError> {
    let zs = characteristic_roots(&coeffs);
    if let Some(z) = zs.iter().find(|z| z.im.abs() > IMAG_TOL) {
        return Err(SymbolError::NonRealRoots { re: z.re, im: z.im });
    }
    let mut roots = zs.map(|z| z.re);
    roots.sort_by(f64::total_cmp);
    for w in roots.windows(2) {
        if w[1] - w[0] < GAP_TOL {
            return Err(SymbolError::MultipleRoots(w[0], w[1]));
        }
    }
    if roots.iter().any(|r| r.abs() < ZERO_ROOT_TOL) {
        return Err(SymbolError::ZeroRoot);
    }
    let directions = [0, 1, 2, 3].map(|j| CharacteristicDirection::new(j + 1, roots[j]));
    Ok(HyperbolicSymbol {
        coeffs,
        roots,
        directions,
    })
}

/// Elementary symmetric polynomials `e_0..e_n` of `xs`.
pub fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (n, &x) in xs.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// Coefficients `a_k = a0 (-1)^k e_k(roots)` of the operator with the given
/// characteristic roots.
pub fn coeffs_from_roots(a0: f64, roots: [f64; 4]) -> Result<SymbolCoefficients, SymbolError> {
    if !a0.is_finite() || a0 == 0.0 {
        return Err(SymbolError::ZeroLeading);
    }
    if roots.iter().any(|r| !r.is_finite() || r.abs() < ZERO_ROOT_TOL) {
        return Err(SymbolError::DegenerateRoots(format!(
            "roots must be finite and nonzero, got {roots:?}"
        )));
    }
    let mut sorted = roots;
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] < GAP_TOL) {
        return Err(SymbolError::DegenerateRoots(format!(
            "roots must be separated by at least {GAP_TOL}, got {roots:?}"
        )));
    }
    let e = elementary_symmetric(&sorted);
    let mut a = [0.0; 5];
    for k in 0..5 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        a[k] = a0 * sign * e[k];
    }
    SymbolCoefficients::new(a)
}
