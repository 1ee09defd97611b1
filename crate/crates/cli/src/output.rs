use std::fmt::Write;
use std::path::Path;

use charpent_core::config::write_atomic;
use charpent_core::traces::DiskRow;
use charpent_core::SolutionGrid;
use serde::Serialize;

/// Lossless decimal form of a double.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x1,x2,u,mask` for every node, row-major by `x2` then `x1`. `u` is left
/// empty where the solver produced no value.
pub fn grid_csv(u: &SolutionGrid) -> String {
    let spec = u.spec;
    let mut out = String::from("x1,x2,u,mask\n");
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let [x1, x2] = spec.point(i, j);
            let v = u.value(i, j).map(real).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                real(x1),
                real(x2),
                v,
                u.mask_at(i, j).as_str()
            );
        }
    }
    out
}

pub fn disk_csv(rows: &[DiskRow]) -> String {
    let mut out = String::from("r,I,N,panels\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", real(r.r), real(r.i), real(r.n), r.panels);
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes to `path` atomically, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
