//! Fixed-point iterations and the problem-level dispatcher.

mod fixed_point;
mod newton;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use fixed_point::{
    auto_step, consensus_iterate, douglas_rachford, douglas_rachford_sum, dr_iterate, forward_step, forward_step_ctx, picard, ConsensusOutcome, DrOutcome,
    DIVERGENCE_FACTOR, DIVERGENCE_WINDOW,
};
pub use newton::{guarded_newton, guarded_newton_traced, NewtonOutcome, NEWTON_MAX_ITER};

use crate::error::{check_dim, Error, Result};
use crate::network::{audit_solution, DriveKind, DriveProblem, ResidualReport};
use crate::operators::{shift, zero_relation, Relation, RelationRef};
use crate::signal::{PeriodicSignal, Vector};

/// Ratios before this index are ignored by [`empirical_contraction`].
pub const BURN_IN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Auto,
    ForwardStep,
    DouglasRachford,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Auto => "auto",
            Algorithm::ForwardStep => "forward",
            Algorithm::DouglasRachford => "dr",
        })
    }
}

impl core::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Algorithm::Auto),
            "forward" | "forward-step" => Ok(Algorithm::ForwardStep),
            "dr" | "douglas-rachford" => Ok(Algorithm::DouglasRachford),
            other => Err(Error::invalid(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Forward step size; `m/L²` when absent.
    pub alpha: Option<f64>,
    /// Resolvent parameter.
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Starting iterate; all zeros when absent or of the wrong length.
    pub initial_guess: Option<Vector>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Auto,
            alpha: None,
            lambda: 1.0,
            tol: 1e-8,
            max_iter: 10_000,
            initial_guess: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Configuration(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Configuration("max_iter must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Configuration(format!("lambda = {} must be positive", self.lambda)));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Configuration(format!("alpha = {a} must be positive")));
            }
        }
        Ok(())
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_initial_guess(mut self, x0: Vector) -> Self {
        self.initial_guess = Some(x0);
        self
    }

    pub(crate) fn start(&self, n: usize) -> Vector {
        match &self.initial_guess {
            Some(x) if x.len() == n => x.clone(),
            _ => Vector::zeros(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveAlgorithm {
    Picard,
    ForwardStep,
    DouglasRachford,
    /// Dense linear solve of an affine inclusion.
    Direct,
    /// No iteration was needed.
    Evaluation,
}

impl fmt::Display for SolveAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveAlgorithm::Picard => "picard",
            SolveAlgorithm::ForwardStep => "forward-step",
            SolveAlgorithm::DouglasRachford => "douglas-rachford",
            SolveAlgorithm::Direct => "direct",
            SolveAlgorithm::Evaluation => "evaluation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vector,
    pub converged: bool,
    pub iterations: usize,
    /// Relative residuals, one per iteration (forward step also records the
    /// starting residual).
    pub residual_history: Vec<f64>,
    pub empirical_contraction: Option<f64>,
    pub algorithm: SolveAlgorithm,
    /// α for forward step, λ for Douglas-Rachford.
    pub step_size: Option<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Geometric mean of successive residual ratios after [`BURN_IN`].
pub fn empirical_contraction(history: &[f64]) -> Option<f64> {
    if history.len() < BURN_IN + 2 {
        return None;
    }
    let first = history[BURN_IN];
    let last = *history.last()?;
    if !(first > 0.0 && last > 0.0) {
        return None;
    }
    let steps = (history.len() - 1 - BURN_IN) as f64;
    Some(libm::pow(last / first, 1.0 / steps))
}

/// Configuration and bookkeeping shared by nested solves.
#[derive(Debug, Clone, Default)]
pub struct SolveContext {
    pub config: SolverConfig,
    /// Reports of every inner solve, in completion order.
    pub reports: Vec<SolveReport>,
    /// Return the last iterate of an unconverged inner solve instead of an error.
    pub accept_unconverged: bool,
}

impl SolveContext {
    pub fn new(config: SolverConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }
}

/// Finds `x` with `y ∈ S(x)`.
pub fn solve_inclusion(rel: &RelationRef, y: &Vector, cfg: &SolverConfig) -> Result<SolveReport> {
    let mut ctx = SolveContext::new(cfg.clone());
    solve_inclusion_ctx(rel, y, &mut ctx)
}

/// [`solve_inclusion`] using `ctx.config`.
///
/// `Auto` picks, in order: forward step for an affine map with `m > 0` when
/// the predicted iteration count fits in `max_iter`; a dense solve for other
/// affine maps; Douglas-Rachford on the summands of a sum (on the product
/// space when there are more than two); forward step
/// when constants are known; otherwise the proximal point iteration
/// (Douglas-Rachford against the zero relation).
pub fn solve_inclusion_ctx(rel: &RelationRef, y: &Vector, ctx: &mut SolveContext) -> Result<SolveReport> {
    let cfg = ctx.config.clone();
    cfg.validate()?;
    check_dim(rel.dim(), y.len())?;
    let n = rel.dim();
    let chosen = match cfg.algorithm {
        Algorithm::Auto => auto_choice(rel, &cfg),
        Algorithm::ForwardStep => Choice::ForwardStep,
        Algorithm::DouglasRachford if rel.summands().is_some() => Choice::Split,
        Algorithm::DouglasRachford => Choice::Proximal,
    };
    log::debug!("solving {} ∋ y with {chosen:?}", rel.label());
    match chosen {
        Choice::ForwardStep => forward_step_ctx(shift(rel.clone(), y.clone())?.as_ref(), ctx),
        Choice::Direct => {
            let a = rel.affine().expect("direct solve of an affine relation");
            let x = a.solve(y)?;
            let res = (a.apply_affine(&x)? - y).norm() / (1.0 + y.norm());
            Ok(fixed_point::report(x, res <= cfg.tol, 1, alloc::vec![res], SolveAlgorithm::Direct, None))
        }
        Choice::Split => {
            let terms = rel.summands().expect("split of a sum");
            let s1 = shift(terms[0].clone(), y.clone())?;
            match &terms[1..] {
                [right] => douglas_rachford(s1.as_ref(), right.as_ref(), &cfg),
                rest => {
                    let all: Vec<&dyn Relation> =
                        core::iter::once(s1.as_ref()).chain(rest.iter().map(|t| t.as_ref())).collect();
                    douglas_rachford_sum(&all, &cfg)
                }
            }
        }
        Choice::Proximal => {
            let s1 = shift(rel.clone(), y.clone())?;
            douglas_rachford(s1.as_ref(), zero_relation(n).as_ref(), &cfg)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    ForwardStep,
    Direct,
    Split,
    Proximal,
}

fn auto_choice(rel: &RelationRef, cfg: &SolverConfig) -> Choice {
    if let Some(a) = rel.affine() {
        let c = a.constants_affine();
        if c.m > 0.0 && (cfg.alpha.is_some() || predicted_iterations(c.m, c.l, cfg.tol) <= cfg.max_iter as f64) {
            return Choice::ForwardStep;
        }
        return Choice::Direct;
    }
    if rel.summands().is_some() {
        return Choice::Split;
    }
    match (rel.coercivity(), rel.lipschitz()) {
        (Some(m), Some(_)) if m > 0.0 => Choice::ForwardStep,
        _ => Choice::Proximal,
    }
}

/// Iterations for the bound `(1 − m²/L²)^k` to reach `tol`.
pub fn predicted_iterations(m: f64, l: f64, tol: f64) -> f64 {
    let q = 1.0 - (m * m) / (l * l);
    if q <= 0.0 {
        return 1.0;
    }
    libm::ceil(libm::log(tol) / libm::log(q))
}

/// Outcome of [`solve_problem`].
#[derive(Debug, Clone)]
pub struct ProblemReport {
    /// Combined report whose solution is the unknown port waveform.
    pub report: SolveReport,
    /// Every inner solve that contributed.
    pub solves: Vec<SolveReport>,
    pub current: PeriodicSignal,
    pub voltage: PeriodicSignal,
    pub audit: ResidualReport,
}

/// Computes the port waveform that the drive does not fix.
///
/// The relation mapping the drive to the unknown is evaluated; inverses
/// inside it run their own inner solves under `cfg`. An inner solve that
/// fails to converge yields a report with `converged = false` rather than an
/// error.
pub fn solve_problem(p: &DriveProblem, cfg: &SolverConfig) -> Result<ProblemReport> {
    cfg.validate()?;
    let rel = p.driven_relation()?;
    let mut ctx = SolveContext::new(cfg.clone());
    ctx.accept_unconverged = true;
    let u = rel.apply_with(p.drive().samples(), &mut ctx)?;
    let unknown = p.drive().with_samples(u)?;
    let report = aggregate(unknown.samples().clone(), &ctx.reports);
    let (current, voltage) = match p.kind() {
        DriveKind::Current => (p.drive().clone(), unknown.clone()),
        DriveKind::Voltage => (unknown.clone(), p.drive().clone()),
    };
    let audit = audit_solution(p, &unknown);
    Ok(ProblemReport {
        report,
        solves: ctx.reports,
        current,
        voltage,
        audit,
    })
}

fn aggregate(solution: Vector, reports: &[SolveReport]) -> SolveReport {
    let Some(main) = reports.iter().max_by_key(|r| r.iterations) else {
        return fixed_point::report(solution, true, 0, Vec::new(), SolveAlgorithm::Evaluation, None);
    };
    SolveReport {
        solution,
        converged: reports.iter().all(|r| r.converged),
        iterations: reports.iter().map(|r| r.iterations).sum(),
        residual_history: main.residual_history.clone(),
        empirical_contraction: main.empirical_contraction,
        algorithm: main.algorithm,
        step_size: main.step_size,
    }
}

/// One line per iteration followed by a summary line.
pub fn format_log(report: &SolveReport) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (k, r) in report.residual_history.iter().enumerate() {
        let _ = writeln!(s, "iter={k} residual={r:e}");
    }
    let _ = write!(
        s,
        "converged={} iterations={} residual={:e} algorithm={}",
        report.converged,
        report.iterations,
        report.final_residual(),
        report.algorithm
    );
    if let Some(c) = report.empirical_contraction {
        let _ = write!(s, " contraction={c:.9}");
    }
    s.push('\n');
    s
}
