//! JSON run configuration shared by the command line and the failure dumps of
//! the batch harness.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Expr};
use crate::geometry::{Gamma0, SUPPORTED_ORDERS};
use crate::solver::{CauchyData, ProblemInstance};
use crate::symbol::{build_symbol, SymbolCoefficients, SymbolError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Json(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub phi: String,
    pub psi: String,
    pub sigma: String,
    pub chi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    #[serde(default = "default_quad_order")]
    pub quad_order: u32,
}

fn default_quad_order() -> u32 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_check_tol")]
    pub check_tol: f64,
    #[serde(default = "default_conclusion_tol")]
    pub conclusion_tol: f64,
}

fn default_check_tol() -> f64 {
    1e-10
}

fn default_conclusion_tol() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            check_tol: default_check_tol(),
            conclusion_tol: default_conclusion_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskDemoConfig {
    pub p: f64,
    pub radii: Vec<f64>,
}

/// Manufactured pair for the identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub u: String,
    pub v: String,
    /// Profile `h` of the kernel test function `h(x2 + lambda_j x1)`,
    /// written in `x1`.
    pub hprofile: String,
    /// 1-based root index `j`.
    pub root_index: usize,
    /// Residual bound, relative to `max(1, |side_a|)`, applied to each
    /// identity.
    #[serde(default = "default_green_tol")]
    pub tol: f64,
}

fn default_green_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub n: usize,
    pub seed0: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub coefficients: [f64; 5],
    pub gamma0: SegmentConfig,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<[f64; 2]>,
    pub data: DataConfig,
    pub f: String,
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disk_demo: Option<DiskDemoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<GreenConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchConfig>,
}

fn parse_field(field: &'static str, text: &str) -> Result<Expr, ConfigError> {
    parse(text).map_err(|e| invalid(field, e))
}

impl RunConfig {
    /// Parses and validates. Symbol hyperbolicity is not checked here; see
    /// [`RunConfig::symbol`].
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Json(format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        SymbolCoefficients::new(self.coefficients).map_err(|e| invalid("coefficients", e))?;
        self.segment()?;
        if let Some(c) = self.c {
            if !(c[0].is_finite() && c[1].is_finite()) {
                return Err(invalid("C", "must be finite"));
            }
        }
        self.cauchy_data()?;
        self.source()?;
        let h = self.grid.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("grid.h", format!("must be positive, got {h}")));
        }
        if !SUPPORTED_ORDERS.contains(&self.grid.quad_order) {
            return Err(invalid("grid.quad_order", "supported orders are 3, 5, 7"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.check_tol", t.check_tol),
            ("tolerances.conclusion_tol", t.conclusion_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if let Some(d) = &self.disk_demo {
            if !(d.p.is_finite() && d.p < 0.0) {
                return Err(invalid("disk_demo.p", format!("must be negative, got {}", d.p)));
            }
            if d.radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
                return Err(invalid("disk_demo.radii", "radii must lie in (0, 1)"));
            }
        }
        if let Some(g) = &self.green {
            parse_field("green.u", &g.u)?;
            parse_field("green.v", &g.v)?;
            let hp = parse_field("green.hprofile", &g.hprofile)?;
            if hp.depends_on(crate::expr::Var::X2) {
                return Err(invalid("green.hprofile", "must be a function of x1 only"));
            }
            if !(1..=4).contains(&g.root_index) {
                return Err(invalid("green.root_index", "must be in 1..=4"));
            }
            if !(g.tol.is_finite() && g.tol >= 0.0) {
                return Err(invalid(
                    "green.tol",
                    format!("must be non-negative, got {}", g.tol),
                ));
            }
        }
        if let Some(b) = &self.batch {
            if b.n == 0 {
                return Err(invalid("batch.n", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn segment(&self) -> Result<Gamma0, ConfigError> {
        Gamma0::new(self.gamma0.a, self.gamma0.b).map_err(|e| invalid("gamma0", e))
    }

    pub fn cauchy_data(&self) -> Result<CauchyData, ConfigError> {
        Ok(CauchyData {
            phi: parse_field("data.phi", &self.data.phi)?,
            psi: parse_field("data.psi", &self.data.psi)?,
            sigma: parse_field("data.sigma", &self.data.sigma)?,
            chi: parse_field("data.chi", &self.data.chi)?,
        })
    }

    pub fn source(&self) -> Result<Expr, ConfigError> {
        parse_field("f", &self.f)
    }

    /// Classifies the symbol; fails for non-hyperbolic coefficients.
    pub fn symbol(&self) -> Result<crate::symbol::HyperbolicSymbol, SymbolError> {
        build_symbol(SymbolCoefficients::new(self.coefficients)?)
    }

    /// Problem instance at the configured step (or `h` when given).
    pub fn instance(&self, h: Option<f64>) -> Result<ProblemInstance, crate::Error> {
        let symbol = self.symbol()?;
        Ok(ProblemInstance {
            symbol,
            gamma0: self.segment()?,
            data: self.cauchy_data()?,
            f: self.source()?,
            h: h.unwrap_or(self.grid.h),
        })
    }

    /// Config reproducing an instance; expressions are stored in their
    /// printed form, which parses back to the same tree.
    pub fn from_instance(inst: &ProblemInstance, quad_order: u32, tolerances: Tolerances) -> Self {
        RunConfig {
            coefficients: inst.symbol.coeffs().as_array(),
            gamma0: SegmentConfig {
                a: inst.gamma0.a,
                b: inst.gamma0.b,
            },
            c: None,
            data: DataConfig {
                phi: inst.data.phi.to_string(),
                psi: inst.data.psi.to_string(),
                sigma: inst.data.sigma.to_string(),
                chi: inst.data.chi.to_string(),
            },
            f: inst.f.to_string(),
            grid: GridConfig {
                h: inst.h,
                quad_order,
            },
            tolerances,
            seed: None,
            disk_demo: None,
            green: None,
            batch: None,
        }
    }
}

/// Writes through a temporary file in the same directory and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}
