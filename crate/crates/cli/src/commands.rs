use std::path::Path;

use charpent_core::maxprin::{
    batch_verify, check_hypotheses, generate_instance, verify_conclusion, DEFAULT_SAMPLES,
};
use charpent_core::solver::fd_residual;
use charpent_core::traces::{
    gamma0_identity_residual_with, gamma0_traces, green_flux_residual, kernel_identity_residual,
    wave_disk_demo, Bump, IdentityReport, TraceError,
};
use charpent_core::{build_pentagon, cascade_solve, parse, Error, ProblemInstance, RunConfig, Tolerances};
use serde::Serialize;

use crate::output::{disk_csv, emit, grid_csv, json};
use crate::Common;

const DEFAULT_H: f64 = 0.01;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = match e {
            Error::Config(_) => 2,
            Error::Symbol(_) => 3,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load(args: &Common) -> Result<RunConfig, Failure> {
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| Failure::usage("--config is required"))?;
    Ok(RunConfig::from_path(path)?)
}

fn write(path: Option<&Path>, text: &str) -> Outcome {
    emit(path, text).map_err(|e| Failure::verification(format!("cannot write output: {e}")))
}

fn step(args: &Common, fallback: f64) -> Result<f64, Failure> {
    let h = args.h.unwrap_or(fallback);
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(Failure::usage(format!("--h must be positive, got {h}")))
    }
}

#[derive(Serialize)]
struct Classification {
    coefficients: [f64; 5],
    roots: [f64; 4],
    directions: Vec<charpent_core::symbol::CharacteristicDirection>,
}

pub fn classify(args: &Common) -> Outcome {
    let cfg = load(args)?;
    let sym = cfg.symbol()?;
    let report = Classification {
        coefficients: cfg.coefficients,
        roots: sym.roots(),
        directions: sym.directions().to_vec(),
    };
    write(args.out.as_deref(), &json(&report))
}

pub fn solve(args: &Common) -> Outcome {
    let cfg = load(args)?;
    let inst = cfg.instance(Some(step(args, cfg.grid.h)?))?;
    let u = cascade_solve(&inst)?;
    write(args.out.as_deref(), &grid_csv(&u))?;
    let summary = match fd_residual(&inst.symbol, &u, &inst.f) {
        Ok(r) => format!(
            "fd residual {:.3e} at ({:.4}, {:.4}) over {} nodes",
            r.max, r.at[0], r.at[1], r.nodes
        ),
        Err(e) => format!("fd residual unavailable: {e}"),
    };
    let line = format!(
        "{} interior nodes at h = {}; {summary}",
        u.interior_count(),
        inst.h
    );
    if args.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

#[derive(Serialize)]
struct GreenReport {
    flux: IdentityReport,
    gamma0: IdentityReport,
    kernel: IdentityReport,
    tol: f64,
    pass: bool,
}

pub fn green(args: &Common) -> Outcome {
    let cfg = load(args)?;
    let g = cfg
        .green
        .as_ref()
        .ok_or_else(|| Failure::config("the green section is required"))?;
    let c = cfg.c.ok_or_else(|| Failure::config("the point C is required"))?;
    let sym = cfg.symbol()?;
    let gamma0 = cfg.segment()?;
    let order = cfg.grid.quad_order;
    let pentagon = build_pentagon(&sym, gamma0, c)?;
    let poly = pentagon.polygon();
    let parsed = |text: &str| parse(text).map_err(|e| Failure::config(e.to_string()));
    let (u, v, profile) = (parsed(&g.u)?, parsed(&g.v)?, parsed(&g.hprofile)?);

    let flux = green_flux_residual(&sym, &u, &v, poly, order)?;
    let mut traces = gamma0_traces(&sym, &cfg.cauchy_data()?).map_err(TraceError::from)?;
    if args.inject_trace_fault {
        traces = traces.perturbed(2, -1.0);
    }
    let bump = Bump::fit(gamma0, poly)?;
    let on_gamma0 = gamma0_identity_residual_with(&sym, &traces, &u, &v, &bump, order)?;
    let kernel = kernel_identity_residual(&sym, &u, g.root_index, &profile, poly, order)?;

    let within = |r: &IdentityReport| r.residual <= g.tol * r.side_a.abs().max(1.0);
    let pass = within(&flux) && within(&on_gamma0) && within(&kernel);
    let report = GreenReport {
        flux,
        gamma0: on_gamma0,
        kernel,
        tol: g.tol,
        pass,
    };
    write(args.out.as_deref(), &json(&report))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::verification(
            "an identity residual exceeds its tolerance",
        ))
    }
}

#[derive(Serialize)]
struct MaxprinReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    hypotheses: charpent_core::HypothesisReport,
    verdict: charpent_core::Verdict,
    pass: bool,
}

pub fn maxprin(args: &Common) -> Outcome {
    let cfg = match &args.config {
        Some(_) => Some(load(args)?),
        None => None,
    };
    let tol = cfg.as_ref().map(|c| c.tolerances.clone()).unwrap_or_default();
    let (seed, exact, inst): (Option<u64>, Option<String>, ProblemInstance) = match (args.seed, &cfg) {
        (Some(seed), _) => {
            let h = step(args, cfg.as_ref().map_or(DEFAULT_H, |c| c.grid.h))?;
            let g = generate_instance(seed, h, tol.check_tol)?;
            (Some(seed), Some(g.exact.to_string()), g.instance)
        }
        (None, Some(c)) => {
            let h = step(args, c.grid.h)?;
            (c.seed, None, c.instance(Some(h))?)
        }
        (None, None) => return Err(Failure::usage("give --config or --seed")),
    };
    let hypotheses = check_hypotheses(&inst, DEFAULT_SAMPLES, tol.check_tol)?;
    let verdict = verify_conclusion(&inst, tol.conclusion_tol)?;
    let pass = hypotheses.all_pass() && verdict.pass;
    let report = MaxprinReport {
        seed,
        exact,
        hypotheses,
        verdict,
        pass,
    };
    write(args.out.as_deref(), &json(&report))?;
    if pass {
        Ok(())
    } else if !report.hypotheses.all_pass() {
        Err(Failure::verification("hypotheses do not hold for this instance"))
    } else {
        Err(Failure::verification(format!(
            "conclusion fails: max u = {:.3e}",
            report.verdict.max_u
        )))
    }
}

pub fn maxprin_batch(args: &Common) -> Outcome {
    let cfg = match &args.config {
        Some(_) => Some(load(args)?),
        None => None,
    };
    let batch = cfg.as_ref().and_then(|c| c.batch.clone());
    let n = args
        .n
        .or(batch.as_ref().map(|b| b.n))
        .ok_or_else(|| Failure::usage("give --n or a batch section"))?;
    if n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let seed0 = args.seed.or(batch.as_ref().map(|b| b.seed0)).unwrap_or(1);
    let h = step(args, cfg.as_ref().map_or(DEFAULT_H, |c| c.grid.h))?;
    let tol: Tolerances = cfg.as_ref().map(|c| c.tolerances.clone()).unwrap_or_default();
    let dump_dir = match args.out.as_deref().and_then(Path::parent) {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let summary = batch_verify(n, seed0, h, &tol, Some(&dump_dir))?;
    write(args.out.as_deref(), &json(&summary))?;
    if summary.all_pass() {
        Ok(())
    } else {
        Err(Failure::verification(format!(
            "{} of {} conclusions pass, {} infeasible seeds",
            summary.conclusion_pass,
            summary.n,
            summary.infeasible.len()
        )))
    }
}

pub fn wave_disk(args: &Common) -> Outcome {
    let cfg = load(args)?;
    let d = cfg
        .disk_demo
        .as_ref()
        .ok_or_else(|| Failure::config("the disk_demo section is required"))?;
    let rep = wave_disk_demo(d.p, &d.radii)?;
    write(args.out.as_deref(), &disk_csv(&rep.rows))?;
    let fmt = |s: Option<f64>| s.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    let lines = [
        format!("p = {}", rep.p),
        format!(
            "slope of log I against log(1 - r^2): {} (raw fit {})",
            fmt(rep.slope),
            fmt(rep.slope_raw)
        ),
        format!(
            "classical trace: {} (last increment ratio {:.3})",
            if rep.trace_blows_up() {
                "blows up"
            } else {
                "converges"
            },
            rep.trace_limit.last_ratio
        ),
        format!(
            "square integrable on the disk: {} (last increment ratio {:.3})",
            if rep.in_l2() { "yes" } else { "no" },
            rep.membership.last_ratio
        ),
    ];
    for l in lines {
        if args.out.is_some() {
            println!("{l}");
        } else {
            eprintln!("{l}");
        }
    }
    Ok(())
}
