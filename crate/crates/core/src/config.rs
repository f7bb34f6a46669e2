//! TOML run files. Sections: `[equation]`, `[kernel]`, `[discretization]`,
//! `[initial]` and, for sweeps, `[sweep]`. Errors carry the dotted key path.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::Kernel;
use crate::limit_lab::{EpsGrid, Family, InitialModes, SweepSpec};
use crate::solver::{EquationForm, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{key}: {reason}")]
pub struct ConfigError {
    /// dotted path of the offending key, `"<root>"` for whole-file problems
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, reason: impl fmt::Display) -> Self {
        Self {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}

/// A kernel given either as `"abel:1,0.5"` or as a table with a `family` key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "String")]
pub struct KernelField(pub Kernel);

#[derive(Deserialize)]
#[serde(untagged)]
enum KernelRepr {
    Text(String),
    Table(Kernel),
}

impl TryFrom<KernelRepr> for KernelField {
    type Error = String;
    fn try_from(r: KernelRepr) -> Result<Self, String> {
        let k = match r {
            KernelRepr::Text(s) => s.parse::<Kernel>().map_err(|e| e.to_string())?,
            KernelRepr::Table(k) => k,
        };
        k.validate().map_err(|e| e.to_string())?;
        Ok(Self(k))
    }
}

impl From<KernelField> for String {
    fn from(k: KernelField) -> Self {
        k.0.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub length: f64,
    pub modes: usize,
    pub grid: usize,
    pub dt: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub nondegeneracy_floor: f64,
    pub ball_threshold: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            length: c.length,
            modes: c.modes,
            grid: c.grid,
            dt: c.dt,
            t_final: c.t_final,
            fp_tol: c.fp_tol,
            fp_max_iters: c.fp_max_iters,
            nondegeneracy_floor: c.nondegeneracy_floor,
            ball_threshold: c.ball_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    VanishingDiffusivity,
    VanishingRelaxation,
    WesterveltRelaxation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub family: FamilyKind,
    /// base kernel of a vanishing-diffusivity family
    pub kernel: Option<KernelField>,
    pub delta: Option<f64>,
    pub tau_theta: Option<f64>,
    pub rho: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "eps_max")]
    pub eps_max: f64,
    #[serde(default = "eps_min")]
    pub eps_min: f64,
    #[serde(default = "points")]
    pub points: usize,
    pub expected_rate: Option<f64>,
    #[serde(default = "rate_tolerance")]
    pub rate_tolerance: f64,
    #[serde(default = "noise_factor")]
    pub noise_factor: f64,
}

fn eps_max() -> f64 {
    EpsGrid::default().max
}
fn eps_min() -> f64 {
    EpsGrid::default().min
}
fn points() -> usize {
    EpsGrid::default().points
}
fn rate_tolerance() -> f64 {
    0.15
}
fn noise_factor() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub equation: EquationForm,
    pub kernel: Option<KernelField>,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub initial: InitialModes,
    pub sweep: Option<SweepSection>,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de =
            toml::Deserializer::parse(text).map_err(|e| ConfigError::new("<root>", e.message()))?;
        let file: RunFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::new(
                if path == "." { "<root>".into() } else { path },
                inner.message(),
            )
        })?;
        file.solver_config()?;
        Ok(file)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let d = self.discretization;
        let c = SolverConfig {
            equation: self.equation,
            length: d.length,
            modes: d.modes,
            grid: d.grid,
            dt: d.dt,
            t_final: d.t_final,
            fp_tol: d.fp_tol,
            fp_max_iters: d.fp_max_iters,
            nondegeneracy_floor: d.nondegeneracy_floor,
            ball_threshold: d.ball_threshold,
        };
        c.validate().map_err(|e| match e {
            crate::solver::SolverError::Config { key, reason } => {
                let section = if key.starts_with("equation.") {
                    ""
                } else {
                    "discretization."
                };
                ConfigError::new(format!("{section}{key}"), reason)
            }
            other => ConfigError::new("discretization", other),
        })?;
        Ok(c)
    }

    pub fn kernel(&self) -> Result<Kernel, ConfigError> {
        self.kernel
            .map(|k| k.0)
            .ok_or_else(|| ConfigError::new("kernel", "missing [kernel] section"))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::new("sweep", "missing [sweep] section"))?;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| ConfigError::new(format!("sweep.{key}"), "required for this family"))
        };
        let family = match s.family {
            FamilyKind::VanishingDiffusivity => Family::VanishingDiffusivity {
                base: s
                    .kernel
                    .ok_or_else(|| ConfigError::new("sweep.kernel", "required for this family"))?
                    .0,
            },
            FamilyKind::VanishingRelaxation => Family::VanishingRelaxation {
                delta: need(s.delta, "delta")?,
                tau_theta: s.tau_theta.unwrap_or(1.0),
                a: need(s.a, "a")?,
                b: need(s.b, "b")?,
            },
            FamilyKind::WesterveltRelaxation => Family::WesterveltRelaxation {
                delta: need(s.delta, "delta")?,
                rho: s.rho.unwrap_or(1.0),
                a: need(s.a, "a")?,
                b: need(s.b, "b")?,
            },
        };
        family
            .limit()
            .map_err(|e| ConfigError::new("sweep.family", e))?;
        family
            .kernel(s.eps_max)
            .map_err(|e| ConfigError::new("sweep", e))?;
        let eps = EpsGrid {
            max: s.eps_max,
            min: s.eps_min,
            points: s.points,
        };
        eps.values()
            .map_err(|e| ConfigError::new("sweep.eps_max", e))?;
        if !(s.rate_tolerance >= 0.0) {
            return Err(ConfigError::new("sweep.rate_tolerance", "must be >= 0"));
        }
        if !(s.noise_factor >= 0.0) {
            return Err(ConfigError::new("sweep.noise_factor", "must be >= 0"));
        }
        let config = self.solver_config()?;
        Ok(SweepSpec {
            config,
            family,
            initial: self.initial.clone(),
            eps,
            expected_rate: s.expected_rate,
            rate_tolerance: s.rate_tolerance,
            noise_factor: s.noise_factor,
        })
    }
}
