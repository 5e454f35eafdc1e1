//! Device laws: scalar resistors lifted sample by sample, and LTI capacitors
//! and inductors built from the discrete derivative and integral.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Error, Result};
use crate::operators::{check_lambda, AffineOperator, Relation, RelationRef, ResolventMap, SignalSet};
use crate::signal::{make_derivative, make_integral, DerivativeOperator, IntegralOperator, Vector};
use crate::solvers::{guarded_newton, SolveContext};

/// A monotone relation on ℝ, single valued on its domain.
pub trait ScalarLaw: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn value(&self, x: f64) -> Result<f64>;

    fn slope(&self, x: f64) -> f64;

    /// The unique `x` with `x + λ·value(x) = z`.
    fn resolvent(&self, z: f64, lambda: f64) -> Result<f64>;

    /// Some `x` with `value(x) = y`.
    fn inverse_value(&self, y: f64) -> Result<f64>;

    /// Strict lower bound of the domain.
    fn domain_lower(&self) -> Option<f64> {
        None
    }

    /// Strict lower bound of the range.
    fn range_lower(&self) -> Option<f64> {
        None
    }

    /// Smallest slope and, if bounded, the largest absolute slope.
    fn slope_bounds(&self) -> (f64, Option<f64>);
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {x} must be finite and positive")))
    }
}

/// `v = R·i`. A negative `R` is accepted so that non-monotone networks can
/// be built as negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearResistor {
    pub r: f64,
}

impl LinearResistor {
    pub fn new(r: f64) -> Result<Self> {
        if r == 0.0 || !r.is_finite() {
            return Err(Error::invalid(format!("resistance {r} must be finite and nonzero")));
        }
        Ok(Self { r })
    }
}

impl ScalarLaw for LinearResistor {
    fn name(&self) -> String {
        format!("R={}", self.r)
    }

    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.r * x)
    }

    fn slope(&self, _x: f64) -> f64 {
        self.r
    }

    fn resolvent(&self, z: f64, lambda: f64) -> Result<f64> {
        let d = 1.0 + lambda * self.r;
        if d.abs() < 1e-14 {
            return Err(Error::Singular { pivot_ratio: d.abs() });
        }
        Ok(z / d)
    }

    fn inverse_value(&self, y: f64) -> Result<f64> {
        Ok(y / self.r)
    }

    fn slope_bounds(&self) -> (f64, Option<f64>) {
        (self.r, Some(self.r.abs()))
    }
}

/// Current-controlled Shockley law `v = n·V_T·ln(i/I_s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockleyDiode {
    pub is: f64,
    pub n: f64,
    pub vt: f64,
}

impl ShockleyDiode {
    pub fn new(is: f64, n: f64, vt: f64) -> Result<Self> {
        positive("I_s", is)?;
        positive("V_T", vt)?;
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::invalid(format!("ideality factor {n} must be at least 1")));
        }
        Ok(Self { is, n, vt })
    }

    pub fn nvt(&self) -> f64 {
        self.n * self.vt
    }

    pub fn conductance(&self) -> DiodeConductance {
        DiodeConductance { diode: *self }
    }
}

impl Default for ShockleyDiode {
    fn default() -> Self {
        Self {
            is: 1e-14,
            n: 1.0,
            vt: 0.02585,
        }
    }
}

pub fn diode_v_of_i(d: &ShockleyDiode, i: f64) -> Result<f64> {
    if !(i > -d.is) {
        return Err(Error::domain(format!("diode current {i:e} must exceed −I_s = {:e}", -d.is)));
    }
    let r = i / d.is;
    let ln = if r > -0.5 {
        libm::log1p(r)
    } else {
        libm::log((i + d.is) / d.is)
    };
    Ok(d.nvt() * ln)
}

/// Solves `x + λ·v(x) = z` for `x > −I_s` by guarded Newton.
///
/// When the root lies closer to `−I_s` than one ulp can resolve, the nearest
/// representable current above `−I_s` is returned.
pub fn diode_resolvent_scalar(d: &ShockleyDiode, z: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !z.is_finite() {
        return Err(Error::invalid("resolvent argument is not finite"));
    }
    let nvt = d.nvt();
    let h = |x: f64| -> (f64, f64) {
        let v = diode_v_of_i(d, x).unwrap_or(f64::NEG_INFINITY);
        (x + lambda * v - z, 1.0 + lambda * nvt / (x + d.is))
    };
    let tol = 1e-12 * (1.0 + z.abs());
    let mut lo = libm::fmax(-d.is * (1.0 - 1e-12), libm::fmin(0.0, z));
    let mut hi = libm::fmax(0.0, z);
    // Walk the lower end toward −I_s until h changes sign.
    while h(lo).0 > 0.0 {
        hi = lo;
        let mut next = -d.is + (lo + d.is) * 1e-4;
        if !(next > -d.is) || next >= lo {
            next = libm::nextafter(-d.is, f64::INFINITY);
            if next >= lo || h(next).0 > 0.0 {
                return Ok(next);
            }
        }
        lo = next;
    }
    guarded_newton(h, lo, hi, tol)
}

impl ScalarLaw for ShockleyDiode {
    fn name(&self) -> String {
        format!("diode(Is={:e}, n={}, VT={})", self.is, self.n, self.vt)
    }

    fn value(&self, x: f64) -> Result<f64> {
        diode_v_of_i(self, x)
    }

    fn slope(&self, x: f64) -> f64 {
        self.nvt() / (x + self.is)
    }

    fn resolvent(&self, z: f64, lambda: f64) -> Result<f64> {
        diode_resolvent_scalar(self, z, lambda)
    }

    fn inverse_value(&self, y: f64) -> Result<f64> {
        self.conductance().value(y)
    }

    fn domain_lower(&self) -> Option<f64> {
        Some(-self.is)
    }

    fn slope_bounds(&self) -> (f64, Option<f64>) {
        (0.0, None)
    }
}

/// Voltage-controlled form `i = I_s·(exp(v/(n·V_T)) − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeConductance {
    pub diode: ShockleyDiode,
}

impl ScalarLaw for DiodeConductance {
    fn name(&self) -> String {
        format!("diode⁻¹(Is={:e}, n={}, VT={})", self.diode.is, self.diode.n, self.diode.vt)
    }

    fn value(&self, v: f64) -> Result<f64> {
        let i = self.diode.is * libm::expm1(v / self.diode.nvt());
        if i.is_finite() {
            Ok(i)
        } else {
            Err(Error::domain(format!("diode voltage {v:e} overflows the exponential")))
        }
    }

    fn slope(&self, v: f64) -> f64 {
        self.diode.is / self.diode.nvt() * libm::exp(v / self.diode.nvt())
    }

    fn resolvent(&self, z: f64, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        let (is, nvt) = (self.diode.is, self.diode.nvt());
        let h = |x: f64| -> (f64, f64) {
            let e = libm::exp(x / nvt);
            (x + lambda * is * libm::expm1(x / nvt) - z, 1.0 + lambda * is / nvt * e)
        };
        let (lo, hi) = if z >= 0.0 {
            (0.0, libm::fmin(z, nvt * libm::log1p(z / (lambda * is))))
        } else {
            (z, 0.0)
        };
        guarded_newton(h, lo, hi, 1e-12 * (1.0 + z.abs()))
    }

    fn inverse_value(&self, y: f64) -> Result<f64> {
        diode_v_of_i(&self.diode, y)
    }

    fn range_lower(&self) -> Option<f64> {
        Some(-self.diode.is)
    }

    fn slope_bounds(&self) -> (f64, Option<f64>) {
        (0.0, None)
    }
}

/// Continuous monotone piecewise-linear law through sorted `(x, y)` points,
/// extended linearly beyond the end points.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearResistor {
    points: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

impl PiecewiseLinearResistor {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("piecewise-linear law needs at least two points"));
        }
        if points.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::invalid("piecewise-linear point is not finite"));
        }
        let mut slopes = Vec::with_capacity(points.len() - 1);
        for (k, w) in points.windows(2).enumerate() {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if !(dx > 0.0) {
                return Err(Error::invalid(format!("breakpoints {k} and {} are not increasing", k + 1)));
            }
            if dy < 0.0 {
                return Err(Error::invalid(format!("segment {k} has negative slope")));
            }
            slopes.push(dy / dx);
        }
        Ok(Self { points, slopes })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Segment index for `x`, end segments extended.
    fn segment(&self, x: f64) -> usize {
        let k = self.points.partition_point(|p| p.0 <= x);
        k.saturating_sub(1).min(self.slopes.len() - 1)
    }
}

impl ScalarLaw for PiecewiseLinearResistor {
    fn name(&self) -> String {
        format!("pwl({} points)", self.points.len())
    }

    fn value(&self, x: f64) -> Result<f64> {
        let k = self.segment(x);
        let (x0, y0) = self.points[k];
        Ok(y0 + self.slopes[k] * (x - x0))
    }

    fn slope(&self, x: f64) -> f64 {
        self.slopes[self.segment(x)]
    }

    fn resolvent(&self, z: f64, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        // g(x) = x + λ·pwl(x) is strictly increasing and piecewise linear;
        // locate z among the breakpoint images.
        let k = self
            .points
            .partition_point(|&(x, y)| x + lambda * y <= z)
            .saturating_sub(1)
            .min(self.slopes.len() - 1);
        let (x0, y0) = self.points[k];
        Ok(x0 + (z - x0 - lambda * y0) / (1.0 + lambda * self.slopes[k]))
    }

    fn inverse_value(&self, y: f64) -> Result<f64> {
        // First point at or above y; the segment before it rises through y,
        // which picks the leftmost preimage on flat runs.
        let k = self.points.partition_point(|p| p.1 < y);
        let seg = k.saturating_sub(1).min(self.slopes.len() - 1);
        let (x0, y0) = self.points[seg];
        let s = self.slopes[seg];
        if s == 0.0 {
            if y == y0 {
                return Ok(x0);
            }
            return Err(Error::domain(format!("{y:e} is outside the range of the piecewise-linear law")));
        }
        Ok(x0 + (y - y0) / s)
    }

    fn slope_bounds(&self) -> (f64, Option<f64>) {
        let min = self.slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.slopes.iter().copied().fold(0.0, f64::max);
        (min, Some(max))
    }
}

/// A scalar law applied independently at every sample.
#[derive(Debug, Clone)]
pub struct Pointwise {
    law: Arc<dyn ScalarLaw>,
    n: usize,
}

pub fn lift_pointwise(law: Arc<dyn ScalarLaw>, n: usize) -> Result<RelationRef> {
    if n == 0 {
        return Err(Error::invalid("pointwise lift needs N ≥ 1"));
    }
    Ok(Arc::new(Pointwise { law, n }))
}

impl Pointwise {
    pub fn law(&self) -> &dyn ScalarLaw {
        self.law.as_ref()
    }

    fn map(&self, u: &Vector, f: impl Fn(f64) -> Result<f64>) -> Result<Vector> {
        check_dim(self.n, u.len())?;
        let mut out = Vector::zeros(self.n);
        for (k, &x) in u.iter().enumerate() {
            out[k] = f(x).map_err(|e| match e {
                Error::Domain { constraint, .. } => Error::domain_at(constraint, k),
                other => other.context(format!("sample {k}")),
            })?;
        }
        Ok(out)
    }
}

impl Relation for Pointwise {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        self.law.name()
    }

    fn apply_with(&self, u: &Vector, _ctx: &mut SolveContext) -> Result<Vector> {
        self.map(u, |x| self.law.value(x))
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        Ok(Box::new(move |z: &Vector| self.map(z, |x| self.law.resolvent(x, lambda))))
    }

    fn coercivity(&self) -> Option<f64> {
        let (m, _) = self.law.slope_bounds();
        (m >= 0.0).then_some(m)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.law.slope_bounds().1
    }

    fn domain(&self) -> SignalSet {
        SignalSet {
            zero_mean: false,
            lower: self.law.domain_lower(),
        }
    }

    fn range(&self) -> SignalSet {
        SignalSet {
            zero_mean: false,
            lower: self.law.range_lower(),
        }
    }

    fn inverse_apply(&self, y: &Vector) -> Option<Result<Vector>> {
        Some(self.map(y, |x| self.law.inverse_value(x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacitor {
    pub c: f64,
}

impl Capacitor {
    pub fn new(c: f64) -> Result<Self> {
        positive("capacitance", c)?;
        Ok(Self { c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inductor {
    pub l: f64,
}

impl Inductor {
    pub fn new(l: f64) -> Result<Self> {
        positive("inductance", l)?;
        Ok(Self { l })
    }
}

/// The v→i map `C·D`.
pub fn capacitor_admittance(c: &Capacitor, n: usize, period: f64) -> Result<AffineOperator> {
    positive("capacitance", c.c)?;
    let d = make_derivative(n, period)?;
    Ok(AffineOperator::linear(d.matrix() * c.c)?
        .with_label(format!("C={} admittance", c.c))
        .with_range(SignalSet::ZERO_MEAN))
}

/// The i→v map `(1/C)·J` on zero-mean currents.
pub fn capacitor_impedance(c: &Capacitor, n: usize, period: f64) -> Result<RelationRef> {
    positive("capacitance", c.c)?;
    Ok(Arc::new(ScaledIntegral::new(1.0 / c.c, n, period, format!("C={} impedance", c.c))?))
}

/// The i→v map `L·D`.
pub fn inductor_impedance(l: &Inductor, n: usize, period: f64) -> Result<AffineOperator> {
    positive("inductance", l.l)?;
    let d = make_derivative(n, period)?;
    Ok(AffineOperator::linear(d.matrix() * l.l)?
        .with_label(format!("L={} impedance", l.l))
        .with_range(SignalSet::ZERO_MEAN))
}

/// The v→i map `(1/L)·J` on zero-mean voltages.
pub fn inductor_admittance(l: &Inductor, n: usize, period: f64) -> Result<RelationRef> {
    positive("inductance", l.l)?;
    Ok(Arc::new(ScaledIntegral::new(1.0 / l.l, n, period, format!("L={} admittance", l.l))?))
}

/// `g·J`: the inverse of `D/g`, defined on zero-mean signals. Its maximal
/// monotone extension adds arbitrary constants to the output, which the
/// resolvent accounts for.
#[derive(Debug, Clone)]
pub struct ScaledIntegral {
    gain: f64,
    d: DerivativeOperator,
    j: IntegralOperator,
    label: String,
}

impl ScaledIntegral {
    pub fn new(gain: f64, n: usize, period: f64, label: String) -> Result<Self> {
        positive("gain", gain)?;
        Ok(Self {
            gain,
            d: make_derivative(n, period)?,
            j: make_integral(n, period)?,
            label,
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }
}

/// Solves `(I + c·D)x = w` for the cyclic difference in O(N).
fn solve_shifted_difference(w: &Vector, c: f64) -> Vector {
    // b·x_k − a·x_{k−1} = w_k cyclically, with r = a/b < 1.
    let n = w.len();
    let a = c;
    let b = 1.0 + c;
    let r = a / b;
    let mut p = Vector::zeros(n);
    let mut prev = 0.0;
    for k in 0..n {
        prev = (w[k] + a * prev) / b;
        p[k] = prev;
    }
    let last = p[n - 1] / (1.0 - libm::pow(r, n as f64));
    let mut rk = r;
    for k in 0..n {
        p[k] += rk * last;
        rk *= r;
    }
    p
}

impl Relation for ScaledIntegral {
    fn dim(&self) -> usize {
        self.j.n()
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn apply_with(&self, u: &Vector, _ctx: &mut SolveContext) -> Result<Vector> {
        Ok(self.j.apply(u)? * self.gain)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        // y = z − (I + D/μ)⁻¹z with μ = λg.
        let c = self.d.scale() / (lambda * self.gain);
        let n = self.dim();
        Ok(Box::new(move |z: &Vector| {
            check_dim(n, z.len())?;
            Ok(z - solve_shifted_difference(z, c))
        }))
    }

    fn coercivity(&self) -> Option<f64> {
        Some(0.0)
    }

    fn domain(&self) -> SignalSet {
        SignalSet::ZERO_MEAN
    }

    fn check_domain(&self, u: &Vector) -> Result<()> {
        self.j.check_domain(u)
    }

    fn inverse_apply(&self, y: &Vector) -> Option<Result<Vector>> {
        Some(self.d.apply(y).map(|x| x / self.gain))
    }

    fn integral_gain(&self) -> Option<(f64, f64)> {
        Some((self.gain, self.d.period()))
    }
}
