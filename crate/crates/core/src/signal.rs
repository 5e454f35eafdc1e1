//! One-period signal space and the discrete derivative and integral.
//!
//! Sample `k` of a signal sits at `t_k = k·T/N` and indices wrap modulo `N`.
//! The derivative is the backward difference scaled by `N/T`; the integral is
//! its inverse between zero-mean signals and signals with a zero last sample.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;

/// Default relative tolerance of the zero-mean domain check of [`IntegralOperator`].
pub const ZERO_MEAN_TOL: f64 = 1e-9;

/// One period of a real discrete trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal {
    samples: Vector,
    period: f64,
}

impl PeriodicSignal {
    pub fn new(samples: Vector, period: f64) -> Result<Self> {
        check_grid(samples.len(), period)?;
        if let Some(k) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(alloc::format!("sample {k} is not finite")));
        }
        Ok(Self { samples, period })
    }

    pub fn from_vec(samples: Vec<f64>, period: f64) -> Result<Self> {
        Self::new(Vector::from_vec(samples), period)
    }

    pub fn zeros(n: usize, period: f64) -> Result<Self> {
        Self::new(Vector::zeros(n), period)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; a signal holds at least two samples.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn samples(&self) -> &Vector {
        &self.samples
    }

    pub fn into_samples(self) -> Vector {
        self.samples
    }

    /// Sample at index `k` taken modulo `N`.
    pub fn at(&self, k: isize) -> f64 {
        let n = self.len() as isize;
        self.samples[k.rem_euclid(n) as usize]
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.time(j))
    }

    pub fn mean(&self) -> f64 {
        mean(self)
    }

    pub fn with_samples(&self, samples: Vector) -> Result<Self> {
        check_dim(self.len(), samples.len())?;
        Self::new(samples, self.period)
    }
}

impl fmt::Display for PeriodicSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PeriodicSignal(N={}, T={})", self.len(), self.period)
    }
}

/// Arithmetic mean of the samples.
pub fn mean(s: &PeriodicSignal) -> f64 {
    s.samples.mean()
}

pub(crate) fn check_grid(n: usize, period: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(alloc::format!("N = {n}, need at least 2 samples")));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid(alloc::format!("period {period} must be finite and positive")));
    }
    Ok(())
}

/// A discretization of d/dt and its inverse on the one-period grid.
pub trait Discretization: fmt::Debug + Send + Sync {
    fn n(&self) -> usize;
    fn period(&self) -> f64;
    fn derivative(&self, u: &Vector) -> Result<Vector>;
    fn integral(&self, u: &Vector) -> Result<Vector>;
    /// Dense N×N matrix of the derivative.
    fn derivative_matrix(&self) -> DMatrix<f64>;
}

/// Backward difference, the default scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardDifference {
    pub d: DerivativeOperator,
    pub j: IntegralOperator,
}

impl BackwardDifference {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        Ok(Self {
            d: make_derivative(n, period)?,
            j: make_integral(n, period)?,
        })
    }
}

impl Discretization for BackwardDifference {
    fn n(&self) -> usize {
        self.d.n
    }
    fn period(&self) -> f64 {
        self.d.period
    }
    fn derivative(&self, u: &Vector) -> Result<Vector> {
        self.d.apply(u)
    }
    fn integral(&self, u: &Vector) -> Result<Vector> {
        self.j.apply(u)
    }
    fn derivative_matrix(&self) -> DMatrix<f64> {
        self.d.matrix()
    }
}

/// `y_k = (N/T)(u_k − u_{k−1})` with the index taken modulo `N`.
///
/// On the zero-offset domain (`u_{N−1} = 0`) the first `N−1` outputs are
/// `(N/T)·D_T·u_T` and the last is minus their sum, so the output has zero
/// mean. The cyclic form extends the same map to every vector in ℝ^N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOperator {
    n: usize,
    period: f64,
}

pub fn make_derivative(n: usize, period: f64) -> Result<DerivativeOperator> {
    check_grid(n, period)?;
    Ok(DerivativeOperator { n, period })
}

impl DerivativeOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `N/T`.
    pub fn scale(&self) -> f64 {
        self.n as f64 / self.period
    }

    pub fn apply(&self, u: &Vector) -> Result<Vector> {
        check_dim(self.n, u.len())?;
        let s = self.scale();
        let n = self.n;
        Ok(Vector::from_fn(n, |k, _| s * (u[k] - u[(k + n - 1) % n])))
    }

    pub fn apply_signal(&self, u: &PeriodicSignal) -> Result<PeriodicSignal> {
        u.with_samples(self.apply(u.samples())?)
    }

    /// Checks the zero-offset convention `u_{N−1} = 0`.
    pub fn check_offset(&self, u: &Vector, tol: f64) -> Result<()> {
        check_dim(self.n, u.len())?;
        let last = u[self.n - 1];
        if last.abs() > tol * (u.norm() + 1.0) {
            return Err(Error::domain_at(
                alloc::format!("zero offset: last sample {last:e} must vanish"),
                self.n - 1,
            ));
        }
        Ok(())
    }

    /// The full circulant matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.scale();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = s;
            m[(k, (k + n - 1) % n)] = -s;
        }
        m
    }

    /// The unscaled lower-bidiagonal block `D_T` of size `N−1`.
    pub fn difference_block(&self) -> DMatrix<f64> {
        let n = self.n - 1;
        DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                1.0
            } else if r == c + 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// `(N/T)·D_T`.
    pub fn truncated_matrix(&self) -> DMatrix<f64> {
        self.difference_block() * self.scale()
    }
}

/// `y_k = (T/N)·Σ_{j≤k} u_j` for `k ≤ N−2` and `y_{N−1} = 0`, defined on
/// zero-mean inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralOperator {
    n: usize,
    period: f64,
    zero_mean_tol: f64,
}

pub fn make_integral(n: usize, period: f64) -> Result<IntegralOperator> {
    check_grid(n, period)?;
    Ok(IntegralOperator {
        n,
        period,
        zero_mean_tol: ZERO_MEAN_TOL,
    })
}

impl IntegralOperator {
    /// Replaces the relative zero-mean tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::invalid("zero-mean tolerance must be finite and nonnegative"));
        }
        self.zero_mean_tol = tol;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn zero_mean_tol(&self) -> f64 {
        self.zero_mean_tol
    }

    /// `T/N`.
    pub fn scale(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn check_domain(&self, u: &Vector) -> Result<()> {
        check_dim(self.n, u.len())?;
        check_zero_mean(u, self.zero_mean_tol)
    }

    pub fn apply(&self, u: &Vector) -> Result<Vector> {
        self.check_domain(u)?;
        let s = self.scale();
        let mut y = Vector::zeros(self.n);
        let mut acc = 0.0;
        for k in 0..self.n - 1 {
            acc += u[k];
            y[k] = s * acc;
        }
        Ok(y)
    }

    pub fn apply_signal(&self, u: &PeriodicSignal) -> Result<PeriodicSignal> {
        u.with_samples(self.apply(u.samples())?)
    }

    /// The unscaled lower-triangular all-ones block `J_T` of size `N−1`.
    pub fn summation_block(&self) -> DMatrix<f64> {
        let n = self.n - 1;
        DMatrix::from_fn(n, n, |r, c| if c <= r { 1.0 } else { 0.0 })
    }

    /// `(T/N)·J_T`.
    pub fn truncated_matrix(&self) -> DMatrix<f64> {
        self.summation_block() * self.scale()
    }

    /// N×N matrix agreeing with [`apply`](Self::apply) on zero-mean inputs.
    pub fn matrix(&self) -> DMatrix<f64> {
        let s = self.scale();
        let n = self.n;
        DMatrix::from_fn(n, n, |r, c| if r + 1 < n && c <= r { s } else { 0.0 })
    }
}

pub(crate) fn check_zero_mean(u: &Vector, tol: f64) -> Result<()> {
    let m = u.mean();
    if m.abs() > tol * (u.norm() + 1.0) {
        return Err(Error::domain(alloc::format!(
            "zero mean: input mean {m:e} exceeds tolerance {tol:e}·(‖u‖+1)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// Hz; must be an integer multiple of 1/T.
    pub frequency: f64,
    /// Radians.
    pub phase: f64,
}

/// `bias + Σ a_k·sin(2π f_k t + φ_k)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriveSpec {
    pub bias: f64,
    pub sinusoids: Vec<Sinusoid>,
}

impl DriveSpec {
    pub fn constant(bias: f64) -> Self {
        Self {
            bias,
            sinusoids: Vec::new(),
        }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self::constant(0.0).with(amplitude, frequency, 0.0)
    }

    pub fn with(mut self, amplitude: f64, frequency: f64, phase: f64) -> Self {
        self.sinusoids.push(Sinusoid {
            amplitude,
            frequency,
            phase,
        });
        self
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }
}

pub fn sample_drive(spec: &DriveSpec, n: usize, period: f64) -> Result<PeriodicSignal> {
    check_grid(n, period)?;
    if !spec.bias.is_finite() {
        return Err(Error::invalid("drive bias is not finite"));
    }
    for (k, s) in spec.sinusoids.iter().enumerate() {
        if !(s.amplitude.is_finite() && s.frequency.is_finite() && s.phase.is_finite()) {
            return Err(Error::invalid(alloc::format!("sinusoid {k} has a non-finite parameter")));
        }
        let cycles = s.frequency * period;
        if libm::fabs(cycles - libm::round(cycles)) > 1e-9 * libm::fmax(1.0, libm::fabs(cycles)) {
            return Err(Error::invalid(alloc::format!(
                "sinusoid {k}: frequency {} Hz is not a multiple of 1/T = {} Hz",
                s.frequency,
                1.0 / period
            )));
        }
    }
    let samples = Vector::from_fn(n, |j, _| {
        let t = j as f64 * period / n as f64;
        spec.bias
            + spec
                .sinusoids
                .iter()
                .map(|s| s.amplitude * libm::sin(2.0 * PI * s.frequency * t + s.phase))
                .sum::<f64>()
    });
    PeriodicSignal::new(samples, period)
}
