//! Series/parallel one-ports, their port relations, and drive problems.

mod audit;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub use audit::{audit_solution, Branch, ResidualReport};

use crate::elements::{
    capacitor_admittance, capacitor_impedance, inductor_admittance, inductor_impedance, lift_pointwise,
    Capacitor, Inductor, PiecewiseLinearResistor, ShockleyDiode,
};
use crate::error::{Error, Result};
use crate::operators::{add, add_all, invert, shift, AffineOperator, RelationRef};
use crate::signal::{PeriodicSignal, Vector};

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Ohms. Negative values build non-monotone negative controls.
    Resistor { r: f64 },
    Diode(ShockleyDiode),
    PiecewiseLinear(PiecewiseLinearResistor),
    /// Farads.
    Capacitor { c: f64 },
    /// Henries.
    Inductor { l: f64 },
}

impl Element {
    pub fn label(&self) -> String {
        match self {
            Element::Resistor { r } => format!("R={r}"),
            Element::Diode(d) => format!("diode(Is={:e})", d.is),
            Element::PiecewiseLinear(p) => format!("pwl({} points)", p.points().len()),
            Element::Capacitor { c } => format!("C={c}"),
            Element::Inductor { l } => format!("L={l}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Element::Resistor { r } if *r == 0.0 || !r.is_finite() => {
                Err(Error::invalid(format!("resistance {r} must be finite and nonzero")))
            }
            Element::Diode(d) => ShockleyDiode::new(d.is, d.n, d.vt).map(|_| ()),
            Element::Capacitor { c } => Capacitor::new(*c).map(|_| ()),
            Element::Inductor { l } => Inductor::new(*l).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn is_monotone(&self) -> bool {
        !matches!(self, Element::Resistor { r } if *r < 0.0)
    }

    /// The i→v relation.
    pub fn impedance(&self, n: usize, period: f64) -> Result<RelationRef> {
        self.validate()?;
        Ok(match self {
            Element::Resistor { r } => Arc::new(AffineOperator::scaled_identity(n, *r).with_label(self.label())),
            Element::Diode(d) => lift_pointwise(Arc::new(*d), n)?,
            Element::PiecewiseLinear(p) => lift_pointwise(Arc::new(p.clone()), n)?,
            Element::Capacitor { c } => capacitor_impedance(&Capacitor::new(*c)?, n, period)?,
            Element::Inductor { l } => Arc::new(inductor_impedance(&Inductor::new(*l)?, n, period)?),
        })
    }

    /// The v→i relation.
    pub fn admittance(&self, n: usize, period: f64) -> Result<RelationRef> {
        self.validate()?;
        Ok(match self {
            Element::Resistor { r } => {
                Arc::new(AffineOperator::scaled_identity(n, 1.0 / r).with_label(format!("G={}", 1.0 / r)))
            }
            Element::Diode(d) => lift_pointwise(Arc::new(d.conductance()), n)?,
            Element::PiecewiseLinear(_) => invert(self.impedance(n, period)?),
            Element::Capacitor { c } => Arc::new(capacitor_admittance(&Capacitor::new(*c)?, n, period)?),
            Element::Inductor { l } => inductor_admittance(&Inductor::new(*l)?, n, period)?,
        })
    }
}

/// A series/parallel composition tree.
#[derive(Debug, Clone, PartialEq)]
pub enum OnePort {
    Element(Element),
    Series(Vec<OnePort>),
    Parallel(Vec<OnePort>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Current in, voltage out.
    Impedance,
    /// Voltage in, current out.
    Admittance,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Impedance => "impedance",
            Orientation::Admittance => "admittance",
        })
    }
}

impl OnePort {
    pub fn resistor(r: f64) -> Self {
        OnePort::Element(Element::Resistor { r })
    }

    pub fn capacitor(c: f64) -> Self {
        OnePort::Element(Element::Capacitor { c })
    }

    pub fn inductor(l: f64) -> Self {
        OnePort::Element(Element::Inductor { l })
    }

    pub fn diode(d: ShockleyDiode) -> Self {
        OnePort::Element(Element::Diode(d))
    }

    pub fn pwl(points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(OnePort::Element(Element::PiecewiseLinear(PiecewiseLinearResistor::new(points)?)))
    }

    pub fn series(children: Vec<OnePort>) -> Result<Self> {
        let p = OnePort::Series(children);
        p.validate()?;
        Ok(p)
    }

    pub fn parallel(children: Vec<OnePort>) -> Result<Self> {
        let p = OnePort::Parallel(children);
        p.validate()?;
        Ok(p)
    }

    /// Checks arity and element parameters; errors name the offending path.
    pub fn validate(&self) -> Result<()> {
        self.walk_validate("/")
    }

    fn walk_validate(&self, path: &str) -> Result<()> {
        match self {
            OnePort::Element(e) => e.validate().map_err(|err| construction(path, &err)),
            OnePort::Series(cs) | OnePort::Parallel(cs) => {
                if cs.len() < 2 {
                    return Err(Error::Construction {
                        path: path.into(),
                        reason: format!("{} node needs at least two children", self.kind_name()),
                    });
                }
                cs.iter()
                    .enumerate()
                    .try_for_each(|(k, c)| c.walk_validate(&child_path(path, k)))
            }
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            OnePort::Element(_) => "element",
            OnePort::Series(_) => "series",
            OnePort::Parallel(_) => "parallel",
        }
    }

    pub fn children(&self) -> &[OnePort] {
        match self {
            OnePort::Element(_) => &[],
            OnePort::Series(cs) | OnePort::Parallel(cs) => cs,
        }
    }

    /// Path of the first non-monotone element, if any.
    pub fn non_monotone_leaf(&self) -> Option<String> {
        self.find_leaf("/", &|e| !e.is_monotone())
    }

    fn find_leaf(&self, path: &str, pred: &dyn Fn(&Element) -> bool) -> Option<String> {
        match self {
            OnePort::Element(e) => pred(e).then(|| path.to_string()),
            _ => self
                .children()
                .iter()
                .enumerate()
                .find_map(|(k, c)| c.find_leaf(&child_path(path, k), pred)),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&Element> {
        match self {
            OnePort::Element(e) => alloc::vec![e],
            _ => self.children().iter().flat_map(|c| c.leaves()).collect(),
        }
    }

    pub fn relation(&self, orientation: Orientation, n: usize, period: f64) -> Result<RelationRef> {
        match orientation {
            Orientation::Impedance => impedance_relation(self, n, period),
            Orientation::Admittance => admittance_relation(self, n, period),
        }
    }
}

pub(crate) fn child_path(path: &str, k: usize) -> String {
    if path == "/" {
        format!("/{k}")
    } else {
        format!("{path}/{k}")
    }
}

fn construction(path: &str, err: &Error) -> Error {
    match err {
        Error::Construction { .. } => err.clone(),
        other => Error::Construction {
            path: path.into(),
            reason: other.to_string(),
        },
    }
}

/// i→v relation: series adds child impedances, parallel inverts the sum of
/// child admittances.
pub fn impedance_relation(p: &OnePort, n: usize, period: f64) -> Result<RelationRef> {
    build(p, Orientation::Impedance, n, period, "/")
}

/// v→i relation, the dual of [`impedance_relation`].
pub fn admittance_relation(p: &OnePort, n: usize, period: f64) -> Result<RelationRef> {
    build(p, Orientation::Admittance, n, period, "/")
}

fn build(p: &OnePort, o: Orientation, n: usize, period: f64, path: &str) -> Result<RelationRef> {
    let children = |o: Orientation| -> Result<Vec<RelationRef>> {
        p.children()
            .iter()
            .enumerate()
            .map(|(k, c)| build(c, o, n, period, &child_path(path, k)))
            .collect()
    };
    let sum = |rs: Vec<RelationRef>| add_all(rs).map_err(|e| construction(path, &e));
    match (p, o) {
        (OnePort::Element(e), Orientation::Impedance) => e.impedance(n, period),
        (OnePort::Element(e), Orientation::Admittance) => e.admittance(n, period),
        (OnePort::Series(_), Orientation::Impedance) => sum(children(o)?),
        (OnePort::Parallel(_), Orientation::Admittance) => sum(children(o)?),
        (OnePort::Series(_), Orientation::Admittance) => Ok(invert(sum(children(Orientation::Impedance)?)?)),
        (OnePort::Parallel(_), Orientation::Impedance) => Ok(invert(sum(children(Orientation::Admittance)?)?)),
    }
    .map_err(|e| construction(path, &e))
}

/// Nodes whose requested orientation is obtained by inverting a sum, which
/// costs an inner solve at every evaluation.
pub fn orientation_report(p: &OnePort, orientation: Orientation) -> Vec<String> {
    let mut out = Vec::new();
    collect_inversions(p, orientation, "/", &mut out);
    out
}

fn collect_inversions(p: &OnePort, o: Orientation, path: &str, out: &mut Vec<String>) {
    let child_o = match (p, o) {
        (OnePort::Element(Element::PiecewiseLinear(_)), Orientation::Admittance) => {
            out.push(format!("{path}: piecewise-linear admittance by closed-form inverse"));
            return;
        }
        (OnePort::Element(_), _) => return,
        (OnePort::Series(_), Orientation::Admittance) => {
            out.push(format!("{path}: series node in admittance form inverts the sum of child impedances"));
            Orientation::Impedance
        }
        (OnePort::Parallel(_), Orientation::Impedance) => {
            out.push(format!("{path}: parallel node in impedance form inverts the sum of child admittances"));
            Orientation::Admittance
        }
        _ => o,
    };
    for (k, c) in p.children().iter().enumerate() {
        collect_inversions(c, child_o, &child_path(path, k), out);
    }
}

/// `u ↦ S(u) − y⋆`.
pub fn delta_relation(s: RelationRef, y_star: &PeriodicSignal) -> Result<RelationRef> {
    shift(s, y_star.samples().clone())
}

/// Negative feedback `(F⁻¹ + G)⁻¹`.
pub fn feedback(f: RelationRef, g: RelationRef) -> Result<RelationRef> {
    Ok(invert(add(invert(f), g)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    Current,
    Voltage,
}

impl DriveKind {
    /// Orientation that maps the drive straight to the unknown.
    pub fn natural_orientation(self) -> Orientation {
        match self {
            DriveKind::Current => Orientation::Impedance,
            DriveKind::Voltage => Orientation::Admittance,
        }
    }
}

impl fmt::Display for DriveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriveKind::Current => "current",
            DriveKind::Voltage => "voltage",
        })
    }
}

/// A one-port driven by a known port current or voltage.
#[derive(Debug, Clone)]
pub struct DriveProblem {
    oneport: OnePort,
    drive: PeriodicSignal,
    kind: DriveKind,
    orientation: Orientation,
}

impl DriveProblem {
    /// Validates the tree, rejects non-monotone elements and checks the drive
    /// against the domain of the port relation.
    pub fn new(oneport: OnePort, drive: PeriodicSignal, kind: DriveKind) -> Result<Self> {
        let orientation = kind.natural_orientation();
        Self::with_orientation(oneport, drive, kind, orientation)
    }

    /// As [`new`](Self::new), but solving in the given orientation. When it
    /// differs from the drive's natural one, the port relation is inverted
    /// iteratively.
    pub fn with_orientation(
        oneport: OnePort,
        drive: PeriodicSignal,
        kind: DriveKind,
        orientation: Orientation,
    ) -> Result<Self> {
        oneport.validate()?;
        if let Some(path) = oneport.non_monotone_leaf() {
            return Err(Error::Construction {
                path,
                reason: "element is not monotone; steady-state solves need monotone elements".into(),
            });
        }
        let p = Self {
            oneport,
            drive,
            kind,
            orientation,
        };
        p.driven_relation()?
            .check_domain(p.drive.samples())
            .map_err(|e| e.context(format!("{} drive outside the port relation's domain", p.kind)))?;
        Ok(p)
    }

    pub fn oneport(&self) -> &OnePort {
        &self.oneport
    }

    pub fn drive(&self) -> &PeriodicSignal {
        &self.drive
    }

    pub fn kind(&self) -> DriveKind {
        self.kind
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn n(&self) -> usize {
        self.drive.len()
    }

    pub fn period(&self) -> f64 {
        self.drive.period()
    }

    pub fn impedance(&self) -> Result<RelationRef> {
        impedance_relation(&self.oneport, self.n(), self.period())
    }

    pub fn admittance(&self) -> Result<RelationRef> {
        admittance_relation(&self.oneport, self.n(), self.period())
    }

    /// Relation taking the drive to the unknown port waveform.
    pub fn driven_relation(&self) -> Result<RelationRef> {
        let rel = self.oneport.relation(self.orientation, self.n(), self.period())?;
        Ok(if self.orientation == self.kind.natural_orientation() {
            rel
        } else {
            invert(rel)
        })
    }

    /// The port relation shifted by the drive, whose zeros are solutions.
    pub fn delta(&self) -> Result<RelationRef> {
        let rel = self.oneport.relation(self.orientation, self.n(), self.period())?;
        if self.orientation == self.kind.natural_orientation() {
            shift(invert(rel), self.drive.samples().clone())
        } else {
            shift(rel, self.drive.samples().clone())
        }
    }

    pub fn drive_vector(&self) -> &Vector {
        self.drive.samples()
    }
}
