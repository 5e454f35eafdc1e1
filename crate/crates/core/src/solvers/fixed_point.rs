use alloc::vec::Vec;

use super::{empirical_contraction, SolveAlgorithm, SolveContext, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::operators::{Relation, SignalSet};
use crate::signal::Vector;

/// Forward step aborts once the residual exceeds this multiple of the best
/// residual seen, checked from iteration `DIVERGENCE_WINDOW` on.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
pub const DIVERGENCE_WINDOW: usize = 50;

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: alloc::boxed::Box::new(e),
    }
}

/// `x ← F(x)` until `‖x⁺ − x‖ ≤ tol·(1 + ‖x‖)`.
pub fn picard(f: impl Fn(&Vector) -> Result<Vector>, x0: Vector, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let mut x = x0;
    let mut history = Vec::new();
    for k in 1..=cfg.max_iter {
        let next = f(&x).map_err(at(k))?;
        let res = (&next - &x).norm() / (1.0 + x.norm());
        history.push(res);
        x = next;
        if !res.is_finite() {
            return Err(Error::Diverged { iteration: k, residual: res });
        }
        if res <= cfg.tol {
            return Ok(report(x, true, k, history, SolveAlgorithm::Picard, None));
        }
    }
    Ok(report(x, false, cfg.max_iter, history, SolveAlgorithm::Picard, None))
}

/// Step size `m/L²` from certified constants.
pub fn auto_step(ds: &dyn Relation) -> Result<f64> {
    match (ds.coercivity(), ds.lipschitz()) {
        (Some(m), Some(l)) if m > 0.0 && l > 0.0 => Ok(m / (l * l)),
        _ => Err(Error::Configuration(alloc::format!(
            "no step size given and {} has no known coercivity m > 0 and Lipschitz constant L",
            ds.label()
        ))),
    }
}

pub fn forward_step(ds: &dyn Relation, cfg: &SolverConfig) -> Result<SolveReport> {
    let mut ctx = SolveContext::new(cfg.clone());
    forward_step_ctx(ds, &mut ctx)
}

/// `x ← x − α·ΔS(x)` until `‖ΔS(x)‖ ≤ tol·(1 + ‖ΔS(x⁰)‖)`.
pub fn forward_step_ctx(ds: &dyn Relation, ctx: &mut SolveContext) -> Result<SolveReport> {
    let cfg = ctx.config.clone();
    cfg.validate()?;
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => auto_step(ds)?,
    };
    let mut x = cfg.start(ds.dim());
    let mut r = ds.apply_with(&x, ctx).map_err(at(0))?;
    let scale = 1.0 + r.norm();
    let mut res = r.norm() / scale;
    let mut best = res;
    let mut history = alloc::vec![res];
    let mut k = 0;
    while res > cfg.tol {
        if k == cfg.max_iter {
            return Ok(report(x, false, k, history, SolveAlgorithm::ForwardStep, Some(alpha)));
        }
        x -= &r * alpha;
        k += 1;
        r = ds.apply_with(&x, ctx).map_err(at(k))?;
        res = r.norm() / scale;
        history.push(res);
        log::trace!("forward step iter={k} residual={res:e}");
        if !res.is_finite() || (k >= DIVERGENCE_WINDOW && res > DIVERGENCE_FACTOR * best) {
            return Err(Error::Diverged { iteration: k, residual: res });
        }
        best = libm::fmin(best, res);
    }
    Ok(report(x, true, k, history, SolveAlgorithm::ForwardStep, Some(alpha)))
}

#[derive(Debug, Clone)]
pub struct DrOutcome {
    /// `x^{k+1}`.
    pub x: Vector,
    /// `x^{k+1/2}`.
    pub half: Vector,
    /// The auxiliary iterate `i` after the last update.
    pub aux: Vector,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// The Douglas-Rachford loop over two resolvent maps:
///
/// ```text
/// x½ = r₁(i),  z = 2x½ − i,  x = r₂(z),  i ← i + x − x½
/// ```
///
/// stopping when `‖x − x½‖ ≤ tol·(1 + ‖x‖)`. `observe` sees each residual.
pub fn dr_iterate<F1, F2>(
    r1: &F1,
    r2: &F2,
    i0: Vector,
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, f64),
) -> Result<DrOutcome>
where
    F1: Fn(&Vector) -> Result<Vector> + ?Sized,
    F2: Fn(&Vector) -> Result<Vector> + ?Sized,
{
    let mut i = i0;
    let mut last = None;
    for k in 1..=max_iter {
        let half = r1(&i).map_err(at(k))?;
        let z = &half * 2.0 - &i;
        let x = r2(&z).map_err(at(k))?;
        let diff = &x - &half;
        let residual = diff.norm() / (1.0 + x.norm());
        observe(k, residual);
        if !residual.is_finite() {
            return Err(Error::Diverged { iteration: k, residual });
        }
        i += diff;
        if residual <= tol {
            return Ok(DrOutcome {
                x,
                half,
                aux: i,
                iterations: k,
                converged: true,
                residual,
            });
        }
        last = Some((x, half, residual));
    }
    let (x, half, residual) = last.ok_or_else(|| Error::Configuration("max_iter must be at least 1".into()))?;
    Ok(DrOutcome {
        x,
        half,
        aux: i,
        iterations: max_iter,
        converged: false,
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct ConsensusOutcome {
    /// Output of each resolvent in the last sweep.
    pub outputs: Vec<Vector>,
    /// Their mean.
    pub x: Vector,
    /// One auxiliary iterate per resolvent.
    pub aux: Vec<Vector>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Douglas-Rachford on the product space for `0 ∈ Σₖ Tₖ(x)`, given the maps
/// `rₖ = (I + Tₖ)⁻¹`:
///
/// ```text
/// x̄ = mean(wₖ),  xₖ = rₖ(2x̄ − wₖ),  wₖ ← wₖ + xₖ − x̄
/// ```
///
/// One level of iteration however many terms there are. Stops when
/// `‖(xₖ − x̄)ₖ‖ ≤ tol·(1 + ‖(xₖ)ₖ‖)`.
pub fn consensus_iterate<F>(
    maps: &[F],
    w0: Vec<Vector>,
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, f64),
) -> Result<ConsensusOutcome>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if maps.is_empty() || maps.len() != w0.len() {
        return Err(Error::Configuration("one start vector per resolvent is required".into()));
    }
    if max_iter == 0 {
        return Err(Error::Configuration("max_iter must be at least 1".into()));
    }
    let m = maps.len() as f64;
    let mut w = w0;
    let mut k = 0;
    loop {
        k += 1;
        let bar = w.iter().skip(1).fold(w[0].clone(), |acc, v| acc + v) / m;
        let outputs = maps
            .iter()
            .zip(&w)
            .map(|(r, wk)| r(&(&bar * 2.0 - wk)))
            .collect::<Result<Vec<_>>>()
            .map_err(at(k))?;
        let (mut num, mut den) = (0.0, 0.0);
        for (wk, xk) in w.iter_mut().zip(&outputs) {
            let d = xk - &bar;
            num += d.norm_squared();
            den += xk.norm_squared();
            *wk += d;
        }
        let residual = libm::sqrt(num) / (1.0 + libm::sqrt(den));
        observe(k, residual);
        if !residual.is_finite() {
            return Err(Error::Diverged { iteration: k, residual });
        }
        let converged = residual <= tol;
        if converged || k == max_iter {
            let x = outputs.iter().skip(1).fold(outputs[0].clone(), |acc, v| acc + v) / m;
            return Ok(ConsensusOutcome {
                outputs,
                x,
                aux: w,
                iterations: k,
                converged,
                residual,
            });
        }
    }
}

impl ConsensusOutcome {
    /// The output of a term whose domain is bounded below, else of one with
    /// a zero-mean domain, else the mean. The outputs agree to tolerance, but
    /// only a term's own output is sure to lie in its domain.
    pub fn pick(&self, domains: &[SignalSet]) -> Vector {
        domains
            .iter()
            .position(|d| d.lower.is_some())
            .or_else(|| domains.iter().position(|d| d.zero_mean))
            .map_or_else(|| self.x.clone(), |k| self.outputs[k].clone())
    }
}

/// Finds `x` with `0 ∈ Σₖ Sₖ(x)` by [`consensus_iterate`] on the resolvents
/// `(I + λSₖ)⁻¹`.
pub fn douglas_rachford_sum(terms: &[&dyn Relation], cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let Some(first) = terms.first() else {
        return Err(Error::Configuration("a sum needs at least one term".into()));
    };
    for t in terms {
        crate::error::check_dim(first.dim(), t.dim())?;
    }
    let maps = terms.iter().map(|t| t.resolvent_map(cfg.lambda)).collect::<Result<Vec<_>>>()?;
    let start = cfg.start(first.dim());
    let mut history = Vec::new();
    let out = consensus_iterate(&maps, alloc::vec![start; terms.len()], cfg.tol, cfg.max_iter, |k, r| {
        log::trace!("douglas-rachford iter={k} residual={r:e}");
        history.push(r);
    })?;
    let domains: Vec<SignalSet> = terms.iter().map(|t| t.domain()).collect();
    Ok(report(
        out.pick(&domains),
        out.converged,
        out.iterations,
        history,
        SolveAlgorithm::DouglasRachford,
        Some(cfg.lambda),
    ))
}

/// Finds `x` with `0 ∈ S₁(x) + S₂(x)`.
pub fn douglas_rachford(s1: &dyn Relation, s2: &dyn Relation, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    crate::error::check_dim(s1.dim(), s2.dim())?;
    let r1 = s1.resolvent_map(cfg.lambda)?;
    let r2 = s2.resolvent_map(cfg.lambda)?;
    let mut history = Vec::new();
    let out = dr_iterate(&*r1, &*r2, cfg.start(s1.dim()), cfg.tol, cfg.max_iter, |k, r| {
        log::trace!("douglas-rachford iter={k} residual={r:e}");
        history.push(r);
    })?;
    Ok(report(
        out.x,
        out.converged,
        out.iterations,
        history,
        SolveAlgorithm::DouglasRachford,
        Some(cfg.lambda),
    ))
}

pub(crate) fn report(
    solution: Vector,
    converged: bool,
    iterations: usize,
    residual_history: Vec<f64>,
    algorithm: SolveAlgorithm,
    step_size: Option<f64>,
) -> SolveReport {
    let empirical_contraction = empirical_contraction(&residual_history);
    SolveReport {
        solution,
        converged,
        iterations,
        residual_history,
        empirical_contraction,
        algorithm,
        step_size,
    }
}
