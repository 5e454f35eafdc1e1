//! Relations on ℝ^N and the operations that preserve monotonicity.
//!
//! A relation is represented by what can be done with it: evaluate it where it
//! is single valued, evaluate its resolvent `(I + λS)⁻¹`, and report known
//! constants. Combinators build sums, inverses, scalings, shifts and
//! congruences; affine pieces are collapsed into a single matrix when possible.

mod affine;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use nalgebra::DMatrix;

pub use affine::{
    apply_affine, constants_affine, resolvent_affine, resolvent_of_inverse_affine, AffineConstants,
    AffineOperator,
};

use crate::error::{check_dim, Error, Result};
use crate::signal::{check_zero_mean, PeriodicSignal, Vector, ZERO_MEAN_TOL};
use crate::solvers::{self, dr_iterate, SolveContext};

/// Resolvent `(I + λS)⁻¹` bound to one `λ`, with any factorization done once.
pub type ResolventMap<'a> = Box<dyn Fn(&Vector) -> Result<Vector> + 'a>;

pub type RelationRef = Arc<dyn Relation>;

/// Tolerance of the inner iterations used for resolvents without closed form.
const INNER_TOL: f64 = 1e-13;
const INNER_MAX_ITER: usize = 100_000;

/// Coarse description of a domain or range: optionally zero-mean, optionally
/// bounded strictly below sample by sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SignalSet {
    pub zero_mean: bool,
    pub lower: Option<f64>,
}

impl SignalSet {
    pub const ALL: Self = Self {
        zero_mean: false,
        lower: None,
    };
    pub const ZERO_MEAN: Self = Self {
        zero_mean: true,
        lower: None,
    };

    pub fn above(lower: f64) -> Self {
        Self {
            zero_mean: false,
            lower: Some(lower),
        }
    }

    pub fn is_all(&self) -> bool {
        *self == Self::ALL
    }

    pub fn intersect(self, other: Self) -> Self {
        let lower = match (self.lower, other.lower) {
            (Some(a), Some(b)) => Some(libm::fmax(a, b)),
            (a, b) => a.or(b),
        };
        Self {
            zero_mean: self.zero_mean || other.zero_mean,
            lower,
        }
    }

    pub fn check(&self, u: &Vector) -> Result<()> {
        if let Some(lo) = self.lower {
            if let Some(k) = u.iter().position(|&x| !(x > lo)) {
                return Err(Error::domain_at(
                    format!("sample {:e} must exceed {lo:e}", u[k]),
                    k,
                ));
            }
        }
        if self.zero_mean {
            check_zero_mean(u, ZERO_MEAN_TOL)?;
        }
        Ok(())
    }

    pub fn contains(&self, u: &Vector) -> bool {
        self.check(u).is_ok()
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("resolvent parameter λ = {lambda} must be positive")))
    }
}

/// A relation on ℝ^N given by its capabilities.
pub trait Relation: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    /// Evaluates the relation, running inner solves through `ctx` when the
    /// relation is an implicit inverse.
    fn apply_with(&self, u: &Vector, ctx: &mut SolveContext) -> Result<Vector>;

    fn apply(&self, u: &Vector) -> Result<Vector> {
        self.apply_with(u, &mut SolveContext::default())
    }

    fn apply_signal(&self, u: &PeriodicSignal) -> Result<PeriodicSignal> {
        u.with_samples(self.apply(u.samples())?)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>>;

    fn resolvent(&self, z: &Vector, lambda: f64) -> Result<Vector> {
        (self.resolvent_map(lambda)?)(z)
    }

    /// Certified lower bound on the coercivity constant. `Some(0.0)` means
    /// monotone; `None` means nothing is known.
    fn coercivity(&self) -> Option<f64> {
        None
    }

    /// Certified Lipschitz constant of the single-valued part.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    fn domain(&self) -> SignalSet {
        SignalSet::ALL
    }

    fn range(&self) -> SignalSet {
        SignalSet::ALL
    }

    fn check_domain(&self, u: &Vector) -> Result<()> {
        check_dim(self.dim(), u.len())?;
        self.domain().check(u)
    }

    /// The relation as a single affine map, when it is one.
    fn affine(&self) -> Option<&AffineOperator> {
        None
    }

    fn summands(&self) -> Option<&[RelationRef]> {
        None
    }

    fn inverse_of(&self) -> Option<&RelationRef> {
        None
    }

    /// Closed-form evaluation of the inverse relation, if available.
    fn inverse_apply(&self, _y: &Vector) -> Option<Result<Vector>> {
        None
    }

    /// `(g, T)` when the relation is `g·J` on an `N`-sample grid of period `T`.
    fn integral_gain(&self) -> Option<(f64, f64)> {
        None
    }
}

pub fn zero_relation(n: usize) -> RelationRef {
    Arc::new(AffineOperator::zeros(n).with_label("zero"))
}

pub fn identity_relation(n: usize) -> RelationRef {
    Arc::new(AffineOperator::identity(n).with_label("identity"))
}

/// The relational inverse `{(y, u) : (u, y) ∈ S}`.
#[derive(Debug)]
pub struct Inverse {
    inner: RelationRef,
}

pub fn invert(s: RelationRef) -> RelationRef {
    if let Some(inner) = s.inverse_of() {
        return inner.clone();
    }
    Arc::new(Inverse { inner: s })
}

impl Relation for Inverse {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn label(&self) -> String {
        format!("inv({})", self.inner.label())
    }

    fn apply_with(&self, y: &Vector, ctx: &mut SolveContext) -> Result<Vector> {
        self.check_domain(y)?;
        if let Some(r) = self.inner.inverse_apply(y) {
            return r;
        }
        let report = solvers::solve_inclusion_ctx(&self.inner, y, ctx)
            .map_err(|e| e.context(format!("inverting {}", self.inner.label())))?;
        let (converged, iterations, residual) = (report.converged, report.iterations, report.final_residual());
        let x = report.solution.clone();
        ctx.reports.push(report);
        if converged || ctx.accept_unconverged {
            Ok(x)
        } else {
            Err(Error::NotConverged { iterations, residual })
        }
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        if let Some(a) = self.inner.affine() {
            return a.inverse_resolvent_factor(lambda);
        }
        // res_{λS⁻¹}(z) = z − λ·res_{S/λ}(z/λ)
        let inner = self.inner.resolvent_map(1.0 / lambda)?;
        Ok(Box::new(move |z: &Vector| {
            let p = inner(&(z / lambda))?;
            Ok(z - p * lambda)
        }))
    }

    fn coercivity(&self) -> Option<f64> {
        let m = self.inner.coercivity()?;
        match self.inner.lipschitz() {
            Some(l) if m > 0.0 && l > 0.0 => Some(m / (l * l)),
            _ => Some(0.0),
        }
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.coercivity().filter(|&m| m > 0.0).map(|m| 1.0 / m)
    }

    fn domain(&self) -> SignalSet {
        self.inner.range()
    }

    fn range(&self) -> SignalSet {
        self.inner.domain()
    }

    fn inverse_of(&self) -> Option<&RelationRef> {
        Some(&self.inner)
    }

    fn inverse_apply(&self, y: &Vector) -> Option<Result<Vector>> {
        Some(self.inner.apply(y))
    }
}

/// `S₁ + … + Sₘ`, kept flat: nested sums are spliced in, `g·J` terms on the
/// same grid merge, and affine terms are summed into one last term.
#[derive(Debug)]
pub struct Sum {
    terms: Vec<RelationRef>,
    collapsed: Option<AffineOperator>,
}

pub fn add(s1: RelationRef, s2: RelationRef) -> Result<RelationRef> {
    add_all([s1, s2])
}

fn affine_sum(parts: &[RelationRef]) -> Result<Option<AffineOperator>> {
    let mut it = parts.iter();
    let Some(first) = it.next() else { return Ok(None) };
    let a0 = first.affine().expect("affine part");
    let (mut m, mut b, mut zero_mean) = (a0.matrix().clone(), a0.offset().clone(), a0.range().zero_mean);
    for p in it {
        let a = p.affine().expect("affine part");
        m += a.matrix();
        b += a.offset();
        zero_mean &= a.range().zero_mean;
    }
    let label = parts.iter().map(|p| p.label()).collect::<Vec<_>>().join(" + ");
    let range = if zero_mean { SignalSet::ZERO_MEAN } else { SignalSet::ALL };
    Ok(Some(AffineOperator::new(m, b)?.with_label(label).with_range(range)))
}

/// Sum of at least one relation.
pub fn add_all(parts: impl IntoIterator<Item = RelationRef>) -> Result<RelationRef> {
    let mut flat = Vec::new();
    for p in parts {
        match p.summands() {
            Some(ts) if p.affine().is_none() => flat.extend(ts.iter().cloned()),
            _ => flat.push(p),
        }
    }
    let Some(first) = flat.first() else {
        return Err(Error::invalid("empty sum"));
    };
    let n = first.dim();
    for p in &flat {
        check_dim(n, p.dim())?;
    }
    let (affine, other): (Vec<RelationRef>, Vec<RelationRef>) = flat.into_iter().partition(|p| p.affine().is_some());
    let mut terms: Vec<RelationRef> = Vec::new();
    for p in other {
        let merged = p.integral_gain().and_then(|(g, t)| {
            terms.iter().position(|q| q.integral_gain().is_some_and(|(_, tq)| tq == t)).map(|k| (k, g, t))
        });
        match merged {
            Some((k, g, t)) => {
                let label = format!("({} + {})", terms[k].label(), p.label());
                let g0 = terms[k].integral_gain().expect("integral term").0;
                terms[k] = Arc::new(crate::elements::ScaledIntegral::new(g0 + g, n, t, label)?);
            }
            None => terms.push(p),
        }
    }
    let collapsed = affine_sum(&affine)?;
    match (terms.len(), affine.len()) {
        (1, 0) => return Ok(terms.pop().expect("one term")),
        (0, 1) => return Ok(affine[0].clone()),
        _ => {}
    }
    if terms.is_empty() {
        return Ok(Arc::new(Sum { terms: affine, collapsed }));
    }
    if let Some(a) = collapsed {
        terms.push(Arc::new(a));
    }
    Ok(Arc::new(Sum { terms, collapsed: None }))
}

impl Sum {
    fn check_summands(&self, u: &Vector) -> Result<()> {
        for (k, s) in self.terms.iter().enumerate() {
            s.check_domain(u)
                .map_err(|e| e.context(format!("summand {} ({})", k + 1, s.label())))?;
        }
        Ok(())
    }
}

/// Resolvent of `Σ terms` with no collapsed affine part.
fn sum_resolvent<'a>(terms: &'a [RelationRef], lambda: f64) -> Result<ResolventMap<'a>> {
    // S + α·I + b: (1 + λα)x + λS(x) ∋ z − λb.
    if let [rest @ .., last] = terms {
        if let Some(a) = last.affine() {
            if let Some(alpha) = a.scaled_identity_factor().filter(|&al| al >= 0.0 && !rest.is_empty()) {
                let k = 1.0 + lambda * alpha;
                let inner = sum_resolvent(rest, lambda / k)?;
                let b = a.offset() * lambda;
                return Ok(Box::new(move |z: &Vector| inner(&((z - &b) / k))));
            }
        }
    }
    match terms {
        [] => Err(Error::invalid("empty sum")),
        [s] => s.resolvent_map(lambda),
        [left, right] => binary_resolvent(left, right, lambda),
        _ => consensus_resolvent(terms, lambda),
    }
}

fn binary_resolvent<'a>(left: &'a RelationRef, right: &'a RelationRef, lambda: f64) -> Result<ResolventMap<'a>> {
    // 0 ∈ x − z + λS₁x + λS₂x split as (λS₁ + ½(·−z)) + (λS₂ + ½(·−z)),
    // each half ½-strongly monotone with a resolvent of the same form.
    let r1 = left.resolvent_map(lambda / 1.5)?;
    let r2 = right.resolvent_map(lambda / 1.5)?;
    // Callers tend to pass slowly varying z, so the auxiliary iterate of
    // the previous call is a good start.
    let warm: RefCell<Option<(Vector, Vector)>> = RefCell::new(None);
    let left_bounded = left.domain().lower.is_some();
    Ok(Box::new(move |z: &Vector| {
        let hz = z * 0.5;
        let f1 = |w: &Vector| r1(&((w + &hz) / 1.5));
        let f2 = |w: &Vector| r2(&((w + &hz) / 1.5));
        // At the fixed point i = 1.5·x + 1.5·λ'S₁(x) − z/2.
        let i0 = match warm.borrow().as_ref() {
            Some((i, z_old)) => i - (z - z_old) * 0.5,
            None => z.clone(),
        };
        let out = dr_iterate(&f1, &f2, i0, INNER_TOL, INNER_MAX_ITER, |_, _| {})?;
        if !out.converged {
            return Err(Error::NotConverged {
                iterations: out.iterations,
                residual: out.residual,
            }
            .context("resolvent of a sum"));
        }
        *warm.borrow_mut() = Some((out.aux, z.clone()));
        // Both halves agree to tolerance; the left output respects a hard
        // lower bound on the left domain, which the right output may not.
        Ok(if left_bounded { out.half } else { out.x })
    }))
}

fn consensus_resolvent(terms: &[RelationRef], lambda: f64) -> Result<ResolventMap<'_>> {
    // 0 ∈ Σₖ (λSₖ + (·−z)/m), each term (1/m)-strongly monotone.
    let m = terms.len() as f64;
    let k = 1.0 + 1.0 / m;
    let maps = terms.iter().map(|t| t.resolvent_map(lambda / k)).collect::<Result<Vec<_>>>()?;
    let domains: Vec<SignalSet> = terms.iter().map(|t| t.domain()).collect();
    let warm: RefCell<Option<(Vec<Vector>, Vector)>> = RefCell::new(None);
    Ok(Box::new(move |z: &Vector| {
        let zm = &(z / m);
        let fs: Vec<_> = maps.iter().map(|r| move |w: &Vector| r(&((w + zm) / k))).collect();
        let w0 = match warm.borrow().as_ref() {
            Some((w, z_old)) => {
                let dz = (z - z_old) / m;
                w.iter().map(|wk| wk + &dz).collect()
            }
            None => alloc::vec![z.clone(); terms.len()],
        };
        let out = solvers::consensus_iterate(&fs, w0, INNER_TOL, INNER_MAX_ITER, |_, _| {})?;
        if !out.converged {
            return Err(Error::NotConverged {
                iterations: out.iterations,
                residual: out.residual,
            }
            .context("resolvent of a sum"));
        }
        let x = out.pick(&domains);
        *warm.borrow_mut() = Some((out.aux, z.clone()));
        Ok(x)
    }))
}

impl Relation for Sum {
    fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    fn label(&self) -> String {
        format!("({})", self.terms.iter().map(|t| t.label()).collect::<Vec<_>>().join(" + "))
    }

    fn apply_with(&self, u: &Vector, ctx: &mut SolveContext) -> Result<Vector> {
        check_dim(self.dim(), u.len())?;
        self.check_summands(u)?;
        if let Some(a) = &self.collapsed {
            return a.apply_affine(u);
        }
        let mut y = Vector::zeros(u.len());
        for (k, t) in self.terms.iter().enumerate() {
            y += t
                .apply_with(u, ctx)
                .map_err(|e| e.context(format!("summand {} ({})", k + 1, t.label())))?;
        }
        Ok(y)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        if let Some(a) = &self.collapsed {
            return a.resolvent_map(lambda);
        }
        sum_resolvent(&self.terms, lambda)
    }

    fn coercivity(&self) -> Option<f64> {
        if let Some(a) = &self.collapsed {
            return a.coercivity();
        }
        self.terms.iter().map(|t| t.coercivity()).sum()
    }

    fn lipschitz(&self) -> Option<f64> {
        if let Some(a) = &self.collapsed {
            return a.lipschitz();
        }
        self.terms.iter().map(|t| t.lipschitz()).sum()
    }

    fn domain(&self) -> SignalSet {
        self.terms.iter().skip(1).fold(self.terms[0].domain(), |d, t| d.intersect(t.domain()))
    }

    fn range(&self) -> SignalSet {
        match &self.collapsed {
            Some(a) => a.range(),
            None if self.terms.iter().all(|t| t.range().zero_mean) => SignalSet::ZERO_MEAN,
            None => SignalSet::ALL,
        }
    }

    fn check_domain(&self, u: &Vector) -> Result<()> {
        check_dim(self.dim(), u.len())?;
        self.check_summands(u)
    }

    fn affine(&self) -> Option<&AffineOperator> {
        self.collapsed.as_ref()
    }

    fn summands(&self) -> Option<&[RelationRef]> {
        Some(&self.terms)
    }

    // y ∈ S(x) + αx + b with α > 0 is x = (I + S/α)⁻¹((y − b)/α). Purely
    // affine sums are left to the configured solver.
    fn inverse_apply(&self, y: &Vector) -> Option<Result<Vector>> {
        if self.collapsed.is_some() {
            return None;
        }
        let (last, rest) = self.terms.split_last()?;
        let a = last.affine()?;
        let alpha = a.scaled_identity_factor().filter(|&al| al > 0.0)?;
        if rest.is_empty() {
            return None;
        }
        Some(sum_resolvent(rest, 1.0 / alpha).and_then(|r| r(&((y - a.offset()) / alpha))))
    }
}

/// `α·S` for `α > 0`.
#[derive(Debug)]
pub struct Scaled {
    alpha: f64,
    inner: RelationRef,
    collapsed: Option<AffineOperator>,
}

pub fn scale(alpha: f64, s: RelationRef) -> Result<RelationRef> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("scale factor {alpha} must be positive")));
    }
    if alpha == 1.0 {
        return Ok(s);
    }
    let collapsed = match s.affine() {
        Some(a) => Some(
            AffineOperator::new(a.matrix() * alpha, a.offset() * alpha)?
                .with_label(format!("{alpha}·{}", s.label()))
                .with_range(a.range()),
        ),
        None => None,
    };
    Ok(Arc::new(Scaled {
        alpha,
        inner: s,
        collapsed,
    }))
}

impl Relation for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn label(&self) -> String {
        format!("{}·{}", self.alpha, self.inner.label())
    }

    fn apply_with(&self, u: &Vector, ctx: &mut SolveContext) -> Result<Vector> {
        Ok(self.inner.apply_with(u, ctx)? * self.alpha)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        self.inner.resolvent_map(self.alpha * lambda)
    }

    fn coercivity(&self) -> Option<f64> {
        self.inner.coercivity().map(|m| m * self.alpha)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz().map(|l| l * self.alpha)
    }

    fn domain(&self) -> SignalSet {
        self.inner.domain()
    }

    fn range(&self) -> SignalSet {
        SignalSet {
            zero_mean: self.inner.range().zero_mean,
            lower: None,
        }
    }

    fn check_domain(&self, u: &Vector) -> Result<()> {
        self.inner.check_domain(u)
    }

    fn affine(&self) -> Option<&AffineOperator> {
        self.collapsed.as_ref()
    }

    fn inverse_apply(&self, y: &Vector) -> Option<Result<Vector>> {
        self.inner.inverse_apply(&(y / self.alpha))
    }
}

/// `u ↦ S(u) − y`.
#[derive(Debug)]
pub struct Shifted {
    inner: RelationRef,
    y: Vector,
    collapsed: Option<AffineOperator>,
}

pub fn shift(s: RelationRef, y: Vector) -> Result<RelationRef> {
    check_dim(s.dim(), y.len())?;
    let collapsed = match s.affine() {
        Some(a) => Some(
            AffineOperator::new(a.matrix().clone(), a.offset() - &y)?.with_label(format!("Δ{}", s.label())),
        ),
        None => None,
    };
    Ok(Arc::new(Shifted {
        inner: s,
        y,
        collapsed,
    }))
}

impl Relation for Shifted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn label(&self) -> String {
        format!("Δ{}", self.inner.label())
    }

    fn apply_with(&self, u: &Vector, ctx: &mut SolveContext) -> Result<Vector> {
        Ok(self.inner.apply_with(u, ctx)? - &self.y)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        let inner = self.inner.resolvent_map(lambda)?;
        let dy = &self.y * lambda;
        Ok(Box::new(move |z: &Vector| inner(&(z + &dy))))
    }

    fn coercivity(&self) -> Option<f64> {
        self.inner.coercivity()
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }

    fn domain(&self) -> SignalSet {
        self.inner.domain()
    }

    fn check_domain(&self, u: &Vector) -> Result<()> {
        self.inner.check_domain(u)
    }

    fn affine(&self) -> Option<&AffineOperator> {
        self.collapsed.as_ref()
    }

    fn inverse_apply(&self, y: &Vector) -> Option<Result<Vector>> {
        self.inner.inverse_apply(&(y + &self.y))
    }
}

/// `x ↦ Mᵀ·F(M·x)` with `M` of size s×t and `F` on ℝ^s.
#[derive(Debug)]
pub struct Congruence {
    m: DMatrix<f64>,
    inner: RelationRef,
    norm_sq: f64,
}

pub fn congruence(m: DMatrix<f64>, f: RelationRef) -> Result<RelationRef> {
    check_dim(f.dim(), m.nrows())?;
    let t = m.ncols();
    if m.is_square() && m == DMatrix::identity(t, t) {
        return Ok(f);
    }
    if m.iter().all(|&x| x == 0.0) {
        return Ok(zero_relation(t));
    }
    if let Some(a) = f.affine() {
        let mt = m.transpose();
        return Ok(Arc::new(
            AffineOperator::new(&mt * a.matrix() * &m, &mt * a.offset())?
                .with_label(format!("Mᵀ{}M", f.label())),
        ));
    }
    let norm = m.singular_values().max();
    Ok(Arc::new(Congruence {
        m,
        inner: f,
        norm_sq: norm * norm,
    }))
}

impl Relation for Congruence {
    fn dim(&self) -> usize {
        self.m.ncols()
    }

    fn label(&self) -> String {
        format!("Mᵀ{}M", self.inner.label())
    }

    fn apply_with(&self, x: &Vector, ctx: &mut SolveContext) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        let y = self.inner.apply_with(&(&self.m * x), ctx)?;
        Ok(self.m.tr_mul(&y))
    }

    /// No closed form; runs a forward step on `x + λMᵀF(Mx) − z`, which is
    /// 1-coercive, so `F` must be Lipschitz.
    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        let lf = self.inner.lipschitz().ok_or_else(|| {
            Error::Unsupported(format!("resolvent of Mᵀ{}M needs a Lipschitz inner relation", self.inner.label()))
        })?;
        let l = 1.0 + lambda * self.norm_sq * lf;
        let alpha = 1.0 / (l * l);
        Ok(Box::new(move |z: &Vector| {
            let g = |x: &Vector| -> Result<Vector> { Ok(x + self.apply(x)? * lambda - z) };
            let mut x = z.clone();
            let r0 = g(&x)?.norm();
            for _ in 0..INNER_MAX_ITER {
                let gx = g(&x)?;
                if gx.norm() <= INNER_TOL * (1.0 + r0) {
                    return Ok(x);
                }
                x -= gx * alpha;
            }
            Err(Error::NotConverged {
                iterations: INNER_MAX_ITER,
                residual: g(&x)?.norm(),
            })
        }))
    }

    fn coercivity(&self) -> Option<f64> {
        self.inner.coercivity().map(|_| 0.0)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz().map(|l| l * self.norm_sq)
    }

    fn check_domain(&self, x: &Vector) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        self.inner.check_domain(&(&self.m * x))
    }
}

/// Block-diagonal `(x₁, x₂, …) ↦ (S₁x₁, S₂x₂, …)`.
#[derive(Debug)]
pub struct Concatenation {
    parts: Vec<RelationRef>,
    dim: usize,
}

pub fn concatenate(parts: Vec<RelationRef>) -> Result<RelationRef> {
    if parts.is_empty() {
        return Err(Error::invalid("empty concatenation"));
    }
    let dim = parts.iter().map(|p| p.dim()).sum();
    Ok(Arc::new(Concatenation { parts, dim }))
}

impl Concatenation {
    fn blocks(&self) -> impl Iterator<Item = (usize, &RelationRef)> {
        self.parts.iter().scan(0, |off, p| {
            let start = *off;
            *off += p.dim();
            Some((start, p))
        })
    }
}

impl Relation for Concatenation {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> String {
        let names: Vec<String> = self.parts.iter().map(|p| p.label()).collect();
        format!("[{}]", names.join(", "))
    }

    fn apply_with(&self, u: &Vector, ctx: &mut SolveContext) -> Result<Vector> {
        check_dim(self.dim, u.len())?;
        let mut y = Vector::zeros(self.dim);
        for (start, p) in self.blocks() {
            let n = p.dim();
            let yk = p.apply_with(&u.rows(start, n).into_owned(), ctx)?;
            y.rows_mut(start, n).copy_from(&yk);
        }
        Ok(y)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        let maps = self
            .blocks()
            .map(|(start, p)| Ok((start, p.dim(), p.resolvent_map(lambda)?)))
            .collect::<Result<Vec<_>>>()?;
        let dim = self.dim;
        Ok(Box::new(move |z: &Vector| {
            check_dim(dim, z.len())?;
            let mut x = Vector::zeros(dim);
            for (start, n, r) in &maps {
                let xk = r(&z.rows(*start, *n).into_owned())?;
                x.rows_mut(*start, *n).copy_from(&xk);
            }
            Ok(x)
        }))
    }

    fn coercivity(&self) -> Option<f64> {
        self.parts
            .iter()
            .map(|p| p.coercivity())
            .try_fold(f64::INFINITY, |acc, m| m.map(|m| libm::fmin(acc, m)))
    }

    fn lipschitz(&self) -> Option<f64> {
        self.parts
            .iter()
            .map(|p| p.lipschitz())
            .try_fold(0.0, |acc, l| l.map(|l| libm::fmax(acc, l)))
    }

    fn check_domain(&self, u: &Vector) -> Result<()> {
        check_dim(self.dim, u.len())?;
        for (start, p) in self.blocks() {
            p.check_domain(&u.rows(start, p.dim()).into_owned())?;
        }
        Ok(())
    }
}
