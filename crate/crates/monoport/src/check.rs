//! Property checks of a netlist's port relation in both orientations.

use std::fmt;

use monoport_core::diagnostics::{run_suite, Estimate, PropertyReport, RandomSampler, Suite, DEFAULT_SEED};
use monoport_core::network::Orientation;
use serde::Serialize;

use crate::error::Result;
use crate::netlist::Netlist;

pub const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub trials: usize,
    pub seed: u64,
    pub n_steps: usize,
    pub period: f64,
    pub center: f64,
    pub amplitude: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: DEFAULT_SEED,
            n_steps: 32,
            period: 1.0,
            center: 0.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub netlist: Option<String>,
    pub n_steps: usize,
    pub period_seconds: f64,
    pub trials: usize,
    pub seed: u64,
    pub orientations: Vec<OrientationReport>,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrientationReport {
    pub orientation: String,
    pub relation: String,
    pub checks: Vec<CheckRow>,
    pub coercivity: EstimateRow,
    pub cocoercivity: EstimateRow,
    pub lipschitz: EstimateRow,
    pub certified_m: Option<f64>,
    pub certified_l: Option<f64>,
    pub violations: usize,
}

/// Non-finite numbers serialize as `null`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub property: String,
    pub trials: usize,
    pub violations: usize,
    pub skipped: usize,
    pub worst_margin: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub value: Option<f64>,
    pub samples: usize,
    pub skipped: usize,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&PropertyReport> for CheckRow {
    fn from(r: &PropertyReport) -> Self {
        Self {
            property: r.property.clone(),
            trials: r.trials,
            violations: r.violations,
            skipped: r.skipped,
            worst_margin: finite(r.worst_margin),
            tolerance: finite(r.tolerance),
            passed: r.passed(),
        }
    }
}

impl From<&Estimate> for EstimateRow {
    fn from(e: &Estimate) -> Self {
        Self {
            value: finite(e.value),
            samples: e.samples,
            skipped: e.skipped,
        }
    }
}

impl OrientationReport {
    fn new(o: Orientation, s: &Suite) -> Self {
        Self {
            orientation: o.to_string(),
            relation: s.relation.clone(),
            checks: s.checks().into_iter().map(CheckRow::from).collect(),
            coercivity: (&s.coercivity).into(),
            cocoercivity: (&s.cocoercivity).into(),
            lipschitz: (&s.lipschitz).into(),
            certified_m: s.certified_m,
            certified_l: s.certified_l,
            violations: s.violations(),
        }
    }
}

pub fn run_check(netlist: &Netlist, opts: &CheckOptions) -> Result<CheckReport> {
    let p = netlist.to_oneport()?;
    let mut orientations = Vec::with_capacity(2);
    for o in [Orientation::Impedance, Orientation::Admittance] {
        let rel = p.relation(o, opts.n_steps, opts.period)?;
        let mut sampler = RandomSampler::new(opts.seed)
            .with_center(opts.center)
            .with_amplitude(opts.amplitude);
        let suite = run_suite(rel.as_ref(), &mut sampler, opts.trials, &LAMBDAS);
        orientations.push(OrientationReport::new(o, &suite));
    }
    Ok(CheckReport {
        netlist: netlist.name.clone(),
        n_steps: opts.n_steps,
        period_seconds: opts.period,
        trials: opts.trials,
        seed: opts.seed,
        violations: orientations.iter().map(|o| o.violations).sum(),
        orientations,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.5e}"))
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.orientations {
            writeln!(f, "{}: {}", o.orientation, o.relation)?;
            writeln!(
                f,
                "  {:<22} {:>6} {:>6} {:>6} {:>13}  status",
                "property", "trials", "viol", "skip", "worst"
            )?;
            for c in &o.checks {
                writeln!(
                    f,
                    "  {:<22} {:>6} {:>6} {:>6} {:>13}  {}",
                    c.property,
                    c.trials,
                    c.violations,
                    c.skipped,
                    opt(c.worst_margin),
                    if c.passed { "pass" } else { "FAIL" }
                )?;
            }
            writeln!(
                f,
                "  estimates: coercivity {} cocoercivity {} lipschitz {} (certified m {}, L {})",
                opt(o.coercivity.value),
                opt(o.cocoercivity.value),
                opt(o.lipschitz.value),
                opt(o.certified_m),
                opt(o.certified_l)
            )?;
        }
        write!(f, "violations: {}", self.violations)
    }
}
