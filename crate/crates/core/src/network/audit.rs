use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{child_path, DriveKind, DriveProblem, Element, OnePort};
use crate::error::Result;
use crate::operators::RelationRef;
use crate::signal::{make_derivative, PeriodicSignal, Vector};
use crate::solvers::{SolveContext, SolverConfig};

/// Current and voltage reconstructed for one node of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub path: String,
    pub label: String,
    pub current: Vector,
    pub voltage: Vector,
}

/// Max-norm residuals of the interconnection and device constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub kcl: f64,
    pub kvl: f64,
    pub device: f64,
    pub branches: Vec<Branch>,
    /// Anything that prevented an exact check; the affected residual is set
    /// to infinity.
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn worst(&self) -> f64 {
        self.kcl.max(self.kvl).max(self.device)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

/// Reconstructs every branch current and voltage from the port waveforms and
/// reports how well KCL, KVL and the device laws hold.
///
/// In each series node one child takes the remaining voltage: the first with
/// a restricted domain (a diode, a capacitor), else the first without a
/// Lipschitz impedance. The others get `Z(i)`. The slack child's share is
/// projected onto its graph through its resolvent so that unrepresentable
/// voltages are never formed. Parallel nodes are the dual.
/// Any mismatch then appears in the KCL and KVL residuals.
pub fn audit_solution(p: &DriveProblem, u_star: &PeriodicSignal) -> ResidualReport {
    let mut a = Auditor {
        n: p.n(),
        period: p.period(),
        ctx: SolveContext::new(SolverConfig::default().with_tol(1e-12).with_max_iter(100_000)),
        report: ResidualReport::default(),
    };
    if u_star.len() != p.n() {
        return ResidualReport {
            kcl: f64::INFINITY,
            kvl: f64::INFINITY,
            device: f64::INFINITY,
            branches: Vec::new(),
            notes: alloc::vec![format!("solution has {} samples, problem has {}", u_star.len(), p.n())],
        };
    }
    let (i, v) = match p.kind() {
        DriveKind::Current => (p.drive_vector().clone(), u_star.samples().clone()),
        DriveKind::Voltage => (u_star.samples().clone(), p.drive_vector().clone()),
    };
    a.walk(p.oneport(), "/", i, v);
    a.report
}

struct Auditor {
    n: usize,
    period: f64,
    ctx: SolveContext,
    report: ResidualReport,
}

fn amax(x: &Vector) -> f64 {
    x.amax()
}

fn node_label(node: &OnePort) -> String {
    match node {
        OnePort::Element(e) => e.label(),
        OnePort::Series(cs) => format!("series({})", cs.len()),
        OnePort::Parallel(cs) => format!("parallel({})", cs.len()),
    }
}

impl Auditor {
    fn note_err(&mut self, which: Which, path: &str, what: &str, e: impl ToString) {
        self.report.notes.push(format!("{path}: {what}: {}", e.to_string()));
        match which {
            Which::Kcl => self.report.kcl = f64::INFINITY,
            Which::Kvl => self.report.kvl = f64::INFINITY,
            Which::Device => self.report.device = f64::INFINITY,
        }
    }

    fn walk(&mut self, node: &OnePort, path: &str, i: Vector, v: Vector) {
        self.report.branches.push(Branch {
            path: path.into(),
            label: node_label(node),
            current: i.clone(),
            voltage: v.clone(),
        });
        match node {
            OnePort::Element(e) => {
                let r = self.device_residual(e, &i, &v);
                match r {
                    Ok(r) => self.report.device = self.report.device.max(r),
                    Err(err) => self.note_err(Which::Device, path, "device law", err),
                }
            }
            OnePort::Series(cs) => self.composite(cs, path, i, v, true),
            OnePort::Parallel(cs) => self.composite(cs, path, v, i, false),
        }
    }

    /// `shared` is the common variable (series: current, parallel: voltage);
    /// `total` the port quantity that splits among children.
    fn composite(&mut self, cs: &[OnePort], path: &str, shared: Vector, total: Vector, series: bool) {
        let orientation = if series {
            super::Orientation::Impedance
        } else {
            super::Orientation::Admittance
        };
        let (split_which, shared_which) = if series {
            (Which::Kvl, Which::Kcl)
        } else {
            (Which::Kcl, Which::Kvl)
        };
        let mut rels: Vec<Option<RelationRef>> = Vec::with_capacity(cs.len());
        for (k, c) in cs.iter().enumerate() {
            match c.relation(orientation, self.n, self.period) {
                Ok(r) => rels.push(Some(r)),
                Err(e) => {
                    self.note_err(split_which, &child_path(path, k), "relation", e);
                    rels.push(None);
                }
            }
        }
        // A restricted domain means a normal-cone part in the graph, which
        // plain evaluation would drop, so such a child is preferred.
        let slack = rels
            .iter()
            .position(|r| r.as_ref().is_some_and(|r| !r.domain().is_all()))
            .or_else(|| rels.iter().position(|r| r.as_ref().is_some_and(|r| r.lipschitz().is_none())));
        let mut parts: Vec<Option<Vector>> = alloc::vec![None; cs.len()];
        let mut sum = Vector::zeros(self.n);
        for (k, rel) in rels.iter().enumerate() {
            if Some(k) == slack {
                continue;
            }
            let Some(rel) = rel else { continue };
            match rel.apply_with(&shared, &mut self.ctx) {
                Ok(y) => {
                    sum += &y;
                    parts[k] = Some(y);
                }
                Err(e) => self.note_err(split_which, &child_path(path, k), "evaluation", e),
            }
        }
        let mut shared_for: Vec<Vector> = alloc::vec![shared.clone(); cs.len()];
        if let Some(s) = slack {
            let rel = rels[s].as_ref().expect("slack has a relation");
            let required = &total - &sum;
            // Minty: (a, b) with a + b = w lies on the graph iff a = res(w).
            let w = &shared + &required;
            match rel.resolvent(&w, 1.0) {
                Ok(a) => {
                    let b = &w - &a;
                    let gap = amax(&(&a - &shared));
                    match shared_which {
                        Which::Kcl => self.report.kcl = self.report.kcl.max(gap),
                        _ => self.report.kvl = self.report.kvl.max(gap),
                    }
                    sum += &b;
                    shared_for[s] = a;
                    parts[s] = Some(b);
                }
                Err(e) => self.note_err(split_which, &child_path(path, s), "projection", e),
            }
        }
        let split = amax(&(&total - &sum));
        match split_which {
            Which::Kvl => self.report.kvl = self.report.kvl.max(split),
            _ => self.report.kcl = self.report.kcl.max(split),
        }
        for (k, c) in cs.iter().enumerate() {
            if let Some(y) = parts[k].take() {
                let x = core::mem::replace(&mut shared_for[k], Vector::zeros(0));
                let path = child_path(path, k);
                if series {
                    self.walk(c, &path, x, y);
                } else {
                    self.walk(c, &path, y, x);
                }
            }
        }
    }

    fn device_residual(&mut self, e: &Element, i: &Vector, v: &Vector) -> Result<f64> {
        Ok(match e {
            Element::Resistor { r } => amax(&(v - i * *r)),
            Element::Diode(_) | Element::PiecewiseLinear(_) => {
                let z = e.impedance(self.n, self.period)?;
                amax(&(i - z.resolvent(&(i + v), 1.0)?))
            }
            Element::Capacitor { c } => {
                let d = make_derivative(self.n, self.period)?;
                amax(&(d.apply(v)? * *c - i))
            }
            Element::Inductor { l } => {
                let d = make_derivative(self.n, self.period)?;
                amax(&(d.apply(i)? * *l - v))
            }
        })
    }
}

#[derive(Clone, Copy)]
enum Which {
    Kcl,
    Kvl,
    Device,
}
