//! Empirical test of the maximum principle: if `L u = f <= 0` and the four
//! traces on `Gamma0` are non-negative, then `u <= 0` in the domain of
//! determinacy.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{write_atomic, RunConfig, Tolerances};
use crate::expr::{self, EvalError, Expr, Var};
use crate::geometry::{Gamma0, Point};
use crate::solver::{cascade_solve, max_interior_error, CauchyData, ProblemInstance, SolveError};
use crate::symbol::{build_symbol, coeffs_from_roots, HyperbolicSymbol};
use crate::traces::gamma0_traces;

pub const DEFAULT_SAMPLES: usize = 33;
const MAX_DRAWS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaxprinError {
    #[error("no admissible instance found for seed {0}")]
    Infeasible(u64),
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("differentiation failed: {0}")]
    Diff(String),
}

/// Sampled minimum of one sign condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub minimum: f64,
    pub at: Point,
    pub pass: bool,
}

impl Condition {
    fn new(minimum: f64, at: Point, tol: f64) -> Self {
        Condition {
            minimum,
            at,
            pass: minimum >= -tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// Minimum of `-f` over the determinacy triangle.
    pub source: Condition,
    /// Minima of `L(0)u .. L(3)u` over `Gamma0`.
    pub traces: [Condition; 4],
    pub check_tol: f64,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.source.pass && self.traces.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub max_u: f64,
    pub at: Point,
    pub pass: bool,
    pub conclusion_tol: f64,
    /// Interior nodes where `u > conclusion_tol`.
    pub violations: Vec<Point>,
}

/// Samples `-f` on an `n x n` lattice of the determinacy triangle and the
/// traces on `n` points of `[a, b]`.
pub fn check_hypotheses(
    inst: &ProblemInstance,
    n_samples: usize,
    check_tol: f64,
) -> Result<HypothesisReport, MaxprinError> {
    let n = n_samples.max(2);
    let region = inst.region();
    let [apex_x, height] = region.apex;
    let g = inst.gamma0;
    let mut source = (f64::INFINITY, [g.a, 0.0]);
    for j in 0..n {
        let t = j as f64 / (n - 1) as f64;
        let (lo, hi) = (g.a + t * (apex_x - g.a), g.b + t * (apex_x - g.b));
        for i in 0..n {
            let s = i as f64 / (n - 1) as f64;
            let p = [lo + s * (hi - lo), t * height];
            let v = -inst.f.eval(p[0], p[1])?;
            if v < source.0 {
                source = (v, p);
            }
        }
    }
    let traces = gamma0_traces(&inst.symbol, &inst.data).map_err(|e| MaxprinError::Diff(e.to_string()))?;
    let minima = traces.minima(g.a, g.b, n)?;
    Ok(HypothesisReport {
        source: Condition::new(source.0, source.1, check_tol),
        traces: minima.map(|(m, x)| Condition::new(m, [x, 0.0], check_tol)),
        check_tol,
    })
}

/// Solves the instance and inspects the sign of `u` on the interior mask.
pub fn verify_conclusion(inst: &ProblemInstance, conclusion_tol: f64) -> Result<Verdict, MaxprinError> {
    let u = cascade_solve(inst)?;
    let mut max_u = f64::NEG_INFINITY;
    let mut at = [f64::NAN, f64::NAN];
    let mut violations = Vec::new();
    for (_, _, p, v) in u.interior_nodes() {
        if v > max_u {
            max_u = v;
            at = p;
        }
        if v > conclusion_tol {
            violations.push(p);
        }
    }
    Ok(Verdict {
        max_u,
        at,
        pass: max_u <= conclusion_tol,
        conclusion_tol,
        violations,
    })
}

/// A generated instance with its closed-form solution.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub seed: u64,
    pub instance: ProblemInstance,
    pub exact: Expr,
    pub report: HypothesisReport,
    /// Random draws consumed before acceptance; `None` when the single-mode
    /// fallback was used.
    pub draws: Option<usize>,
}

impl GeneratedInstance {
    pub fn config(&self, tolerances: Tolerances) -> RunConfig {
        let mut c = RunConfig::from_instance(&self.instance, 7, tolerances);
        c.seed = Some(self.seed);
        c
    }
}

/// Four roots of one common sign with magnitudes in `[0.3, 3]`, pairwise
/// gap at least 0.2, and `1/min - 1/max >= 0.5` so the determinacy triangle
/// stays at most twice as tall as `Gamma0` is long.
///
/// One common sign makes `a4 > 0`, which `L(0)u = -a4 phi >= 0` needs for
/// negative `phi`, and makes every single mode with `theta <= 0` admissible.
/// With two roots of each sign no single mode passes: for a root `l` with
/// the other roots `m`, the conditions on `L(1)` and `L(2)` reduce to
/// `sigma2(m) >= 0` and `l * sum(m) >= 0`, which cannot hold together.
fn draw_roots(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    loop {
        let mut m: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.3..=3.0));
        m.sort_by(f64::total_cmp);
        let gaps = m.windows(2).all(|w| w[1] - w[0] >= 0.2);
        if gaps && 1.0 / m[0] - 1.0 / m[3] >= 0.5 {
            let mut r = m.map(|x| sign * x);
            r.sort_by(f64::total_cmp);
            return r;
        }
    }
}

/// `-sum_j c_j exp(theta_j (x2 + lambda_j x1))`.
fn kernel_combination(roots: &[f64; 4], c: &[f64; 4], theta: &[f64; 4]) -> Expr {
    let mut acc = Expr::Const(0.0);
    for j in 0..4 {
        if c[j] == 0.0 {
            continue;
        }
        let arg = expr::mul(
            Expr::Const(theta[j]),
            expr::add(
                Expr::Var(Var::X2),
                expr::mul(Expr::Const(roots[j]), Expr::Var(Var::X1)),
            ),
        );
        let mode = expr::mul(Expr::Const(c[j]), Expr::Call(expr::Func::Exp, Box::new(arg)));
        acc = expr::add(acc, mode);
    }
    expr::neg(acc)
}

fn assemble(symbol: &HyperbolicSymbol, exact: &Expr, h: f64) -> Result<ProblemInstance, MaxprinError> {
    Ok(ProblemInstance {
        symbol: symbol.clone(),
        gamma0: Gamma0::new(0.0, 1.0).expect("unit segment"),
        data: CauchyData::from_solution(exact).map_err(|e| MaxprinError::Diff(e.to_string()))?,
        f: Expr::Const(0.0),
        h,
    })
}

/// Seeded instance from the exponential kernel family with all hypotheses
/// passing at the given tolerance.
pub fn generate_instance(seed: u64, h: f64, check_tol: f64) -> Result<GeneratedInstance, MaxprinError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last: Option<HyperbolicSymbol> = None;
    for draw in 1..=MAX_DRAWS {
        let roots = draw_roots(&mut rng);
        let a0: f64 = rng.random_range(0.5..=2.0);
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..=1.0));
        let theta: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let Ok(symbol) = coeffs_from_roots(a0, roots).and_then(build_symbol) else {
            continue;
        };
        if c.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let exact = kernel_combination(&symbol.roots(), &c, &theta);
        let instance = assemble(&symbol, &exact, h)?;
        let report = check_hypotheses(&instance, DEFAULT_SAMPLES, check_tol)?;
        if report.all_pass() {
            return Ok(GeneratedInstance {
                seed,
                instance,
                exact,
                report,
                draws: Some(draw),
            });
        }
        last = Some(symbol);
    }
    let symbol = last.ok_or(MaxprinError::Infeasible(seed))?;
    // single mode on the first root; theta = 0 (u = -1) always passes
    let mut thetas = vec![-1.0, 1.0];
    let mut t = 0.5;
    while t > 1e-3 {
        thetas.extend([-t, t]);
        t *= 0.5;
    }
    thetas.push(0.0);
    for th in thetas {
        let exact = kernel_combination(&symbol.roots(), &[1.0, 0.0, 0.0, 0.0], &[th, 0.0, 0.0, 0.0]);
        let instance = assemble(&symbol, &exact, h)?;
        let report = check_hypotheses(&instance, DEFAULT_SAMPLES, check_tol)?;
        if report.all_pass() {
            return Ok(GeneratedInstance {
                seed,
                instance,
                exact,
                report,
                draws: None,
            });
        }
    }
    Err(MaxprinError::Infeasible(seed))
}

/// Outcome of one batch instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub seed: u64,
    pub hypotheses_pass: bool,
    pub conclusion_pass: bool,
    pub max_u: f64,
    /// Max interior deviation from the closed-form solution.
    pub max_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub n: usize,
    pub seed0: u64,
    pub h: f64,
    pub instances_run: usize,
    pub infeasible: Vec<u64>,
    pub hypothesis_pass: usize,
    pub conclusion_pass: usize,
    pub worst_max_u: f64,
    pub worst_seed: Option<u64>,
    pub worst_error: f64,
    pub failures: Vec<InstanceOutcome>,
}

impl BatchSummary {
    pub fn all_pass(&self) -> bool {
        self.infeasible.is_empty() && self.hypothesis_pass == self.n && self.conclusion_pass == self.n
    }
}

/// Worker count from `CHARPENT_THREADS`; 0 or unset means automatic.
pub fn threads_from_env() -> usize {
    std::env::var("CHARPENT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn run_one(
    seed: u64,
    h: f64,
    tol: &Tolerances,
    dump_dir: Option<&Path>,
) -> Result<Option<InstanceOutcome>, MaxprinError> {
    let gen = match generate_instance(seed, h, tol.check_tol) {
        Ok(g) => g,
        Err(MaxprinError::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let verdict = verify_conclusion(&gen.instance, tol.conclusion_tol)?;
    let u = cascade_solve(&gen.instance)?;
    let (max_error, _) = max_interior_error(&u, &gen.exact)?;
    let mut dump = None;
    if !verdict.pass {
        if let Some(dir) = dump_dir {
            let path = dir.join(format!("failure-seed-{seed}.json"));
            let text = gen.config(tol.clone()).to_json();
            if write_atomic(&path, text.as_bytes()).is_ok() {
                dump = Some(path);
            }
        }
    }
    Ok(Some(InstanceOutcome {
        seed,
        hypotheses_pass: gen.report.all_pass(),
        conclusion_pass: verdict.pass,
        max_u: verdict.max_u,
        max_error,
        dump,
    }))
}

/// Generates and verifies instances `seed0 .. seed0 + n`. Instances run in
/// parallel; the summary is assembled in seed order and does not depend on
/// scheduling. Conclusion failures are written to `dump_dir` as configs.
pub fn batch_verify(
    n: usize,
    seed0: u64,
    h: f64,
    tol: &Tolerances,
    dump_dir: Option<&Path>,
) -> Result<BatchSummary, MaxprinError> {
    if n == 0 {
        return Err(MaxprinError::EmptyBatch);
    }
    let work = || {
        (0..n as u64)
            .into_par_iter()
            .map(|i| run_one(seed0 + i, h, tol, dump_dir).map(|o| (seed0 + i, o)))
            .collect::<Result<Vec<_>, _>>()
    };
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(threads_from_env())
        .build()
    {
        Ok(pool) => pool.install(work)?,
        Err(_) => work()?,
    };
    let mut s = BatchSummary {
        n,
        seed0,
        h,
        instances_run: 0,
        infeasible: Vec::new(),
        hypothesis_pass: 0,
        conclusion_pass: 0,
        worst_max_u: f64::NEG_INFINITY,
        worst_seed: None,
        worst_error: 0.0,
        failures: Vec::new(),
    };
    for (seed, outcome) in results {
        let Some(o) = outcome else {
            s.infeasible.push(seed);
            continue;
        };
        s.instances_run += 1;
        s.hypothesis_pass += usize::from(o.hypotheses_pass);
        s.conclusion_pass += usize::from(o.conclusion_pass);
        s.worst_error = s.worst_error.max(o.max_error);
        if o.max_u > s.worst_max_u {
            s.worst_max_u = o.max_u;
            s.worst_seed = Some(seed);
        }
        if !o.conclusion_pass {
            s.failures.push(o);
        }
    }
    Ok(s)
}
