//! Sampling checks of monotonicity, coercivity, cocoercivity, Lipschitz
//! bounds and resolvent identities.
//!
//! Estimates are bounds from finitely many samples: coercivity and
//! cocoercivity estimates are upper bounds of the true constants, Lipschitz
//! estimates lower bounds.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operators::{Relation, SignalSet};
use crate::signal::Vector;
use crate::solvers::{SolveContext, SolverConfig};

pub const DEFAULT_SEED: u64 = 0x005e_ed0f_d1a9;

/// Inner-product margins below `−ABS_TOL` count as violations.
pub const ABS_TOL: f64 = 1e-10;

/// Resolvent recovery errors above this count as violations.
pub const RESOLVENT_TOL: f64 = 1e-8;

/// Inner solves behind `apply` (inverses) run this tight so that their
/// tolerance does not show up as a property violation.
pub const EVAL_TOL: f64 = 1e-13;

fn eval(s: &dyn Relation, u: &Vector) -> Option<Vector> {
    let cfg = SolverConfig::default().with_tol(EVAL_TOL).with_max_iter(100_000);
    s.apply_with(u, &mut SolveContext::new(cfg)).ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property: String,
    pub trials: usize,
    pub violations: usize,
    /// Trials dropped because a sample left the domain or was degenerate.
    pub skipped: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    /// First offending pair.
    pub witness: Option<(Vector, Vector)>,
}

impl PropertyReport {
    fn new(property: &str, tolerance: f64, worst: f64) -> Self {
        Self {
            property: property.into(),
            trials: 0,
            violations: 0,
            skipped: 0,
            worst_margin: worst,
            tolerance,
            witness: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn violate(&mut self, a: &Vector, b: &Vector) {
        self.violations += 1;
        if self.witness.is_none() {
            self.witness = Some((a.clone(), b.clone()));
        }
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {:>6} {:>6} {:>6} {:>13.5e}  {}",
            self.property,
            self.trials,
            self.violations,
            self.skipped,
            self.worst_margin,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// A sampled constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Draws points and pairs of points from a domain.
pub trait PairSampler {
    fn sample(&mut self, domain: &SignalSet, n: usize) -> Vector;
    fn sample_pair(&mut self, domain: &SignalSet, n: usize) -> (Vector, Vector);
}

/// Uniform samples in `[−a, a]^N` projected onto the domain. Pair
/// differences cycle through uniform noise, a single harmonic and a constant
/// offset, so slow and DC directions are not missed.
#[derive(Debug, Clone)]
pub struct RandomSampler {
    rng: ChaCha8Rng,
    amplitude: f64,
    center: f64,
    counter: usize,
}

impl RandomSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            amplitude: 1.0,
            center: 0.0,
            counter: 0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Shifts samples to `center ± amplitude`.
    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    fn uniform(&mut self, n: usize) -> Vector {
        let (a, c) = (self.amplitude, self.center);
        Vector::from_fn(n, |_, _| c + self.rng.gen_range(-a..=a))
    }

    fn direction(&mut self, n: usize) -> Vector {
        let kind = self.counter % 3;
        self.counter += 1;
        let a = self.amplitude;
        match kind {
            0 => Vector::from_fn(n, |_, _| self.rng.gen_range(-a..=a)),
            1 => {
                let k = self.rng.gen_range(1..=(n / 2).max(1)) as f64;
                let phase = self.rng.gen_range(0.0..2.0 * PI);
                let amp = self.rng.gen_range(0.1 * a..=a);
                Vector::from_fn(n, |j, _| amp * libm::sin(2.0 * PI * k * j as f64 / n as f64 + phase))
            }
            _ => {
                let c = self.rng.gen_range(0.1 * a..=a);
                Vector::from_element(n, if self.rng.gen_bool(0.5) { c } else { -c })
            }
        }
    }
}

impl Default for RandomSampler {
    fn default() -> Self {
        Self::new(DEFAULT_SEED)
    }
}

/// Subtracts the mean for zero-mean domains and reflects samples below a
/// lower bound across it.
pub fn project(domain: &SignalSet, mut u: Vector) -> Vector {
    if domain.zero_mean {
        let m = u.mean();
        u.add_scalar_mut(-m);
    }
    if let Some(lo) = domain.lower {
        for x in u.iter_mut() {
            if *x <= lo {
                *x = 2.0 * lo - *x;
            }
        }
    }
    u
}

impl PairSampler for RandomSampler {
    fn sample(&mut self, domain: &SignalSet, n: usize) -> Vector {
        let u = self.uniform(n);
        project(domain, u)
    }

    fn sample_pair(&mut self, domain: &SignalSet, n: usize) -> (Vector, Vector) {
        let u = self.uniform(n);
        let v = &u + self.direction(n);
        (project(domain, u), project(domain, v))
    }
}

struct Diff {
    du: Vector,
    dy: Vector,
    /// `‖S(u)‖ + ‖S(v)‖`, the scale of rounding error in `dy`.
    y_scale: f64,
    u: Vector,
    v: Vector,
}

fn sample_diff(s: &dyn Relation, sampler: &mut dyn PairSampler) -> Option<Diff> {
    let (u, v) = sampler.sample_pair(&s.domain(), s.dim());
    let yu = eval(s, &u)?;
    let yv = eval(s, &v)?;
    Some(Diff {
        du: &u - &v,
        y_scale: yu.norm() + yv.norm(),
        dy: yu - yv,
        u,
        v,
    })
}

fn diffs<'a>(
    s: &'a dyn Relation,
    sampler: &'a mut dyn PairSampler,
    trials: usize,
) -> impl Iterator<Item = Option<Diff>> + 'a {
    (0..trials).map(move |_| sample_diff(s, sampler))
}

/// Normalized margin `⟨Δu, Δy⟩ / (‖Δu‖·max(‖Δy‖, ‖S(u)‖ + ‖S(v)‖))` over
/// `trials` pairs. The output norms keep roundoff in a vanishing `Δy` from
/// reading as a violation.
pub fn check_monotone(s: &dyn Relation, sampler: &mut dyn PairSampler, trials: usize) -> PropertyReport {
    monotone_over(diffs(s, sampler, trials))
}

fn monotone_over(ds: impl IntoIterator<Item = impl core::borrow::Borrow<Option<Diff>>>) -> PropertyReport {
    let mut r = PropertyReport::new("monotone", ABS_TOL, f64::INFINITY);
    for d in ds {
        let Some(d) = d.borrow() else {
            r.skipped += 1;
            continue;
        };
        r.trials += 1;
        let denom = d.du.norm() * d.dy.norm().max(d.y_scale);
        let margin = if denom > 0.0 { d.du.dot(&d.dy) / denom } else { 0.0 };
        r.worst_margin = r.worst_margin.min(margin);
        if margin < -ABS_TOL {
            r.violate(&d.u, &d.v);
        }
    }
    r
}

#[derive(Clone, Copy)]
enum Constant {
    Coercivity,
    Cocoercivity,
    Lipschitz,
}

impl Constant {
    fn ratio(self, d: &Diff) -> Option<f64> {
        match self {
            Constant::Coercivity => {
                let n2 = d.du.norm_squared();
                (n2 > 0.0).then(|| d.du.dot(&d.dy) / n2)
            }
            Constant::Cocoercivity => {
                let n2 = d.dy.norm_squared();
                (n2 > 0.0).then(|| d.du.dot(&d.dy) / n2)
            }
            Constant::Lipschitz => {
                let n = d.du.norm();
                (n > 0.0).then(|| d.dy.norm() / n)
            }
        }
    }

    fn over(self, ds: impl IntoIterator<Item = impl core::borrow::Borrow<Option<Diff>>>) -> Estimate {
        let lipschitz = matches!(self, Constant::Lipschitz);
        let mut e = Estimate {
            value: if lipschitz { 0.0 } else { f64::INFINITY },
            samples: 0,
            skipped: 0,
        };
        for d in ds {
            match d.borrow().as_ref().and_then(|d| self.ratio(d)) {
                Some(q) => {
                    e.samples += 1;
                    e.value = if lipschitz { e.value.max(q) } else { e.value.min(q) };
                }
                None => e.skipped += 1,
            }
        }
        e
    }
}

/// `min ⟨Δu, Δy⟩ / ‖Δu‖²`.
pub fn estimate_coercivity(s: &dyn Relation, sampler: &mut dyn PairSampler, trials: usize) -> Estimate {
    Constant::Coercivity.over(diffs(s, sampler, trials))
}

/// `min ⟨Δu, Δy⟩ / ‖Δy‖²`.
pub fn estimate_cocoercivity(s: &dyn Relation, sampler: &mut dyn PairSampler, trials: usize) -> Estimate {
    Constant::Cocoercivity.over(diffs(s, sampler, trials))
}

/// `max ‖Δy‖ / ‖Δu‖`.
pub fn estimate_lipschitz(s: &dyn Relation, sampler: &mut dyn PairSampler, trials: usize) -> Estimate {
    Constant::Lipschitz.over(diffs(s, sampler, trials))
}

/// Worst `‖res(u + λS(u), λ) − u‖` over `trials` points per `λ`.
pub fn check_resolvent(
    s: &dyn Relation,
    sampler: &mut dyn PairSampler,
    lambdas: &[f64],
    trials: usize,
) -> PropertyReport {
    let mut r = PropertyReport::new("resolvent", RESOLVENT_TOL, 0.0);
    for &lambda in lambdas {
        let map = match s.resolvent_map(lambda) {
            Ok(m) => m,
            Err(_) => {
                r.skipped += trials;
                continue;
            }
        };
        for _ in 0..trials {
            let u = sampler.sample(&s.domain(), s.dim());
            let Some(y) = eval(s, &u) else {
                r.skipped += 1;
                continue;
            };
            r.trials += 1;
            let err = match map(&(&u + y * lambda)) {
                Ok(x) => (x - &u).norm(),
                Err(_) => f64::INFINITY,
            };
            r.worst_margin = r.worst_margin.max(err);
            if !(err <= RESOLVENT_TOL) {
                r.violate(&u, &Vector::from_element(1, lambda));
            }
        }
    }
    r
}

/// Every check and estimate for one relation, plus consistency of the
/// estimates with the relation's certified constants.
#[derive(Debug, Clone)]
pub struct Suite {
    pub relation: String,
    pub monotone: PropertyReport,
    pub resolvent: PropertyReport,
    /// Certified `m` does not exceed the sampled coercivity.
    pub coercivity_bound: PropertyReport,
    /// Sampled Lipschitz ratio does not exceed the certified `L`.
    pub lipschitz_bound: PropertyReport,
    pub coercivity: Estimate,
    pub cocoercivity: Estimate,
    pub lipschitz: Estimate,
    pub certified_m: Option<f64>,
    pub certified_l: Option<f64>,
}

impl Suite {
    pub fn checks(&self) -> [&PropertyReport; 4] {
        [
            &self.monotone,
            &self.resolvent,
            &self.coercivity_bound,
            &self.lipschitz_bound,
        ]
    }

    pub fn violations(&self) -> usize {
        self.checks().iter().map(|c| c.violations).sum()
    }
}

/// The monotonicity check and the three estimates share one set of
/// `trials` pairs.
pub fn run_suite(s: &dyn Relation, sampler: &mut dyn PairSampler, trials: usize, lambdas: &[f64]) -> Suite {
    let pairs: Vec<Option<Diff>> = diffs(s, sampler, trials).collect();
    let monotone = monotone_over(&pairs);
    let coercivity = Constant::Coercivity.over(&pairs);
    let cocoercivity = Constant::Cocoercivity.over(&pairs);
    let lipschitz = Constant::Lipschitz.over(&pairs);
    let resolvent = check_resolvent(s, sampler, lambdas, trials.div_ceil(lambdas.len().max(1)));
    let (m, l) = (s.coercivity(), s.lipschitz());

    let mut coercivity_bound = PropertyReport::new("coercivity-bound", ABS_TOL, f64::INFINITY);
    if let Some(m) = m {
        coercivity_bound.trials = 1;
        let margin = coercivity.value - m;
        coercivity_bound.worst_margin = margin;
        if margin < -ABS_TOL * (1.0 + m.abs()) {
            coercivity_bound.violations = 1;
        }
    }
    let mut lipschitz_bound = PropertyReport::new("lipschitz-bound", ABS_TOL, f64::INFINITY);
    if let Some(l) = l {
        lipschitz_bound.trials = 1;
        let margin = l - lipschitz.value;
        lipschitz_bound.worst_margin = margin;
        if margin < -1e-9 * (1.0 + l) {
            lipschitz_bound.violations = 1;
        }
    }
    Suite {
        relation: s.label(),
        monotone,
        resolvent,
        coercivity_bound,
        lipschitz_bound,
        coercivity,
        cocoercivity,
        lipschitz,
        certified_m: m,
        certified_l: l,
    }
}
