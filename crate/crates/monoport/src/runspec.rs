//! Run files: which netlist, how it is driven, the grid and solver settings.
//!
//! Relative paths inside a run file resolve against the run file's directory.

use std::path::{Path, PathBuf};

use monoport_core::network::{DriveKind, DriveProblem, Orientation};
use monoport_core::signal::{sample_drive, DriveSpec, Sinusoid};
use monoport_core::solvers::{Algorithm, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::Netlist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub netlist: PathBuf,
    pub drive: Drive,
    pub discretization: Discretization,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub kind: Kind,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub sinusoids: Vec<Wave>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Current,
    Voltage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    pub amplitude: f64,
    /// Hz, a multiple of `1 / period_seconds`.
    pub frequency: f64,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n_steps: usize,
    pub period_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    #[serde(default)]
    pub algorithm: Option<AlgorithmName>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Port orientation to iterate in; the drive's natural one by default.
    #[serde(default)]
    pub orientation: Option<OrientationName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmName {
    Auto,
    Forward,
    Dr,
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Auto => Algorithm::Auto,
            AlgorithmName::Forward => Algorithm::ForwardStep,
            AlgorithmName::Dr => Algorithm::DouglasRachford,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OrientationName {
    Impedance,
    Admittance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Standard output when absent.
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    /// Standard error when absent.
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    #[serde(default)]
    pub verbosity: Verbosity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Quiet,
    #[default]
    Normal,
    /// One log line per iteration.
    Verbose,
}

impl RunSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::RunSpec(e.to_string()))
    }

    /// Reads a run file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        let mut spec = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        spec.resolve_paths(base);
        Ok(spec)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.netlist);
        self.output.csv_path.as_mut().map(fix);
        self.output.log_path.as_mut().map(fix);
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.discretization;
        if d.n_steps < 2 {
            return Err(Error::RunSpec(format!("n_steps = {} must be at least 2", d.n_steps)));
        }
        if !(d.period_seconds > 0.0 && d.period_seconds.is_finite()) {
            return Err(Error::RunSpec(format!("period_seconds = {} must be positive", d.period_seconds)));
        }
        Ok(())
    }

    pub fn drive_spec(&self) -> DriveSpec {
        DriveSpec {
            bias: self.drive.bias,
            sinusoids: self
                .drive
                .sinusoids
                .iter()
                .map(|w| Sinusoid {
                    amplitude: w.amplitude,
                    frequency: w.frequency,
                    phase: w.phase,
                })
                .collect(),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        let mut cfg = SolverConfig::default();
        if let Some(a) = s.algorithm {
            cfg = cfg.with_algorithm(a.into());
        }
        if let Some(a) = s.alpha {
            cfg = cfg.with_alpha(a);
        }
        if let Some(l) = s.lambda {
            cfg = cfg.with_lambda(l);
        }
        if let Some(t) = s.tol {
            cfg = cfg.with_tol(t);
        }
        if let Some(m) = s.max_iter {
            cfg = cfg.with_max_iter(m);
        }
        cfg
    }

    /// Samples the drive and builds the problem on `netlist`.
    pub fn problem(&self, netlist: &Netlist) -> Result<DriveProblem> {
        self.validate()?;
        let d = &self.discretization;
        let drive = sample_drive(&self.drive_spec(), d.n_steps, d.period_seconds)?;
        let kind = match self.drive.kind {
            Kind::Current => DriveKind::Current,
            Kind::Voltage => DriveKind::Voltage,
        };
        let p = netlist.to_oneport()?;
        Ok(match self.solver.orientation {
            None => DriveProblem::new(p, drive, kind)?,
            Some(o) => {
                let o = match o {
                    OrientationName::Impedance => Orientation::Impedance,
                    OrientationName::Admittance => Orientation::Admittance,
                };
                DriveProblem::with_orientation(p, drive, kind, o)?
            }
        })
    }
}
