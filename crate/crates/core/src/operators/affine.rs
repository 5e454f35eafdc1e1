use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use core::fmt;

use nalgebra::{DMatrix, Dyn, SymmetricEigen, LU};
use once_cell::race::OnceBox;

use super::{check_lambda, Relation, ResolventMap, SignalSet};
use crate::error::{check_dim, Error, Result};
use crate::signal::{PeriodicSignal, Vector};
use crate::solvers::SolveContext;

/// Pivot ratio below which a factorization is treated as singular.
const SINGULAR_RATIO: f64 = 1e-14;

/// Exact constants of an affine map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineConstants {
    /// Smallest eigenvalue of the symmetric part; negative when not monotone.
    pub m: f64,
    /// Largest singular value.
    pub l: f64,
}

/// `u ↦ A·u + b`.
pub struct AffineOperator {
    a: DMatrix<f64>,
    b: Vector,
    domain: SignalSet,
    range: SignalSet,
    label: String,
    constants: OnceBox<AffineConstants>,
    lu: OnceBox<Factor>,
    pinv: OnceBox<DMatrix<f64>>,
}

struct Factor {
    lu: LU<f64, Dyn, Dyn>,
    pivot_ratio: f64,
}

fn factor(m: DMatrix<f64>) -> Factor {
    let lu = m.lu();
    let d = lu.u().diagonal().abs();
    let max = d.max();
    let pivot_ratio = if max > 0.0 { d.min() / max } else { 0.0 };
    Factor { lu, pivot_ratio }
}

impl Factor {
    fn solve(&self, rhs: &Vector) -> Result<Vector> {
        if self.pivot_ratio < SINGULAR_RATIO {
            return Err(Error::Singular {
                pivot_ratio: self.pivot_ratio,
            });
        }
        self.lu.solve(rhs).ok_or(Error::Singular {
            pivot_ratio: self.pivot_ratio,
        })
    }
}

impl AffineOperator {
    pub fn new(a: DMatrix<f64>, b: Vector) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(format!("matrix is {}×{}, must be square", a.nrows(), a.ncols())));
        }
        check_dim(a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("affine operator has non-finite entries"));
        }
        Ok(Self {
            a,
            b,
            domain: SignalSet::ALL,
            range: SignalSet::ALL,
            label: String::from("affine"),
            constants: OnceBox::new(),
            lu: OnceBox::new(),
            pinv: OnceBox::new(),
        })
    }

    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, Vector::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self::new(DMatrix::from_diagonal_element(n, n, s), Vector::zeros(n)).expect("finite diagonal")
    }

    pub fn zeros(n: usize) -> Self {
        Self::scaled_identity(n, 0.0)
    }

    /// The constant map `u ↦ b`.
    pub fn constant(b: Vector) -> Result<Self> {
        let n = b.len();
        Self::new(DMatrix::zeros(n, n), b)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Records that outputs lie in `range` (e.g. the zero-mean range of D).
    pub fn with_range(mut self, range: SignalSet) -> Self {
        self.range = range;
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `α` when the matrix is `α·I`.
    pub fn scaled_identity_factor(&self) -> Option<f64> {
        let alpha = self.a[(0, 0)];
        let n = self.a.nrows();
        let exact = (0..n).all(|r| (0..n).all(|c| self.a[(r, c)] == if r == c { alpha } else { 0.0 }));
        exact.then_some(alpha)
    }

    pub fn offset(&self) -> &Vector {
        &self.b
    }

    pub fn apply_affine(&self, u: &Vector) -> Result<Vector> {
        check_dim(self.a.ncols(), u.len())?;
        Ok(&self.a * u + &self.b)
    }

    pub fn constants_affine(&self) -> AffineConstants {
        *self.constants.get_or_init(|| {
            let sym = (&self.a + self.a.transpose()) * 0.5;
            let m = SymmetricEigen::new(sym).eigenvalues.min();
            let l = self.a.singular_values().max();
            Box::new(AffineConstants { m, l })
        })
    }

    /// True when the symmetric part is positive semidefinite up to rounding.
    pub fn is_monotone(&self) -> bool {
        let c = self.constants_affine();
        c.m >= -1e-10 * libm::fmax(1.0, c.l)
    }

    /// Solves `(I + λA)x = z − λb`.
    pub fn resolvent_affine(&self, z: &Vector, lambda: f64) -> Result<Vector> {
        (self.resolvent_factor(lambda)?)(z)
    }

    fn resolvent_factor(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        let n = self.a.nrows();
        let f = factor(DMatrix::identity(n, n) + &self.a * lambda);
        let shift = &self.b * lambda;
        Ok(Box::new(move |z: &Vector| {
            check_dim(n, z.len())?;
            f.solve(&(z - &shift))
        }))
    }

    /// Resolvent of the inverse relation: solves `(A + λI)y = A·z + λb`.
    pub fn resolvent_of_inverse_affine(&self, z: &Vector, lambda: f64) -> Result<Vector> {
        (self.inverse_resolvent_factor(lambda)?)(z)
    }

    pub(crate) fn inverse_resolvent_factor(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        check_lambda(lambda)?;
        let n = self.a.nrows();
        let f = factor(&self.a + DMatrix::identity(n, n) * lambda);
        let shift = &self.b * lambda;
        Ok(Box::new(move |z: &Vector| {
            check_dim(n, z.len())?;
            f.solve(&(&self.a * z + &shift))
        }))
    }

    /// Finds `x` with `A·x + b = y`. Falls back to the pseudo-inverse when `A`
    /// is singular and reports a domain error when `y` has no preimage.
    pub fn solve(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.a.nrows(), y.len())?;
        let rhs = y - &self.b;
        let f = self.lu.get_or_init(|| Box::new(factor(self.a.clone())));
        if f.pivot_ratio >= SINGULAR_RATIO {
            if let Ok(x) = f.solve(&rhs) {
                return Ok(x);
            }
        }
        let pinv = self.pinv.get_or_try_init(|| {
            self.a
                .clone()
                .pseudo_inverse(1e-12 * libm::fmax(1.0, self.a.amax()))
                .map(Box::new)
                .map_err(|e| Error::Numerical(String::from(e)))
        })?;
        let x = pinv * &rhs;
        let r = (&self.a * &x - &rhs).norm();
        if r > 1e-8 * (1.0 + y.norm()) {
            return Err(Error::domain(format!(
                "no preimage under singular {}: residual {r:e}",
                self.label
            )));
        }
        Ok(x)
    }
}

impl Clone for AffineOperator {
    fn clone(&self) -> Self {
        let mut c = Self::new(self.a.clone(), self.b.clone()).expect("validated");
        c.domain = self.domain;
        c.range = self.range;
        c.label = self.label.clone();
        if let Some(k) = self.constants.get() {
            let _ = c.constants.set(Box::new(*k));
        }
        c
    }
}

impl fmt::Debug for AffineOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineOperator")
            .field("label", &self.label)
            .field("dim", &self.a.nrows())
            .field("constants", &self.constants.get())
            .finish()
    }
}

impl Relation for AffineOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn apply_with(&self, u: &Vector, _ctx: &mut SolveContext) -> Result<Vector> {
        self.apply_affine(u)
    }

    fn resolvent_map(&self, lambda: f64) -> Result<ResolventMap<'_>> {
        self.resolvent_factor(lambda)
    }

    fn coercivity(&self) -> Option<f64> {
        self.is_monotone().then(|| libm::fmax(self.constants_affine().m, 0.0))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.constants_affine().l)
    }

    fn domain(&self) -> SignalSet {
        self.domain
    }

    fn range(&self) -> SignalSet {
        self.range
    }

    fn affine(&self) -> Option<&AffineOperator> {
        Some(self)
    }
}

pub fn apply_affine(a: &AffineOperator, u: &PeriodicSignal) -> Result<PeriodicSignal> {
    u.with_samples(a.apply_affine(u.samples())?)
}

pub fn resolvent_affine(a: &AffineOperator, z: &Vector, lambda: f64) -> Result<Vector> {
    a.resolvent_affine(z, lambda)
}

pub fn resolvent_of_inverse_affine(a: &AffineOperator, z: &Vector, lambda: f64) -> Result<Vector> {
    a.resolvent_of_inverse_affine(z, lambda)
}

/// `(m, L)`.
pub fn constants_affine(a: &AffineOperator) -> (f64, f64) {
    let c = a.constants_affine();
    (c.m, c.l)
}
