//! JSON netlists: a tree of `series` / `parallel` nodes over elements.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "root": {
//!     "type": "series",
//!     "children": [
//!       { "type": "element", "kind": "diode" },
//!       { "type": "parallel", "children": [
//!         { "type": "element", "kind": "resistor", "r": 1.0 },
//!         { "type": "element", "kind": "capacitor", "c": 1.0 }
//!       ] }
//!     ]
//!   }
//! }
//! ```

use std::path::Path;
use std::sync::LazyLock;

use monoport_core::elements::{PiecewiseLinearResistor, ShockleyDiode};
use monoport_core::network::{Element, OnePort};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// The published netlist schema (JSON Schema, draft 2020-12).
pub const SCHEMA_TEXT: &str = include_str!("../schema/netlist.schema.json");

static VALIDATOR: LazyLock<jsonschema::Validator> = LazyLock::new(|| {
    let schema: Value = serde_json::from_str(SCHEMA_TEXT).expect("bundled schema is JSON");
    jsonschema::validator_for(&schema).expect("bundled schema compiles")
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub root: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Series { children: Vec<Node> },
    Parallel { children: Vec<Node> },
    Element(ElementSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ElementSpec {
    Resistor {
        r: f64,
    },
    Capacitor {
        c: f64,
    },
    Inductor {
        l: f64,
    },
    Diode {
        #[serde(default = "default_is")]
        is: f64,
        #[serde(default = "default_n")]
        n: f64,
        #[serde(default = "default_vt")]
        vt: f64,
    },
    /// `(current, voltage)` breakpoints.
    Pwl {
        points: Vec<(f64, f64)>,
    },
}

fn default_is() -> f64 {
    ShockleyDiode::default().is
}

fn default_n() -> f64 {
    ShockleyDiode::default().n
}

fn default_vt() -> f64 {
    ShockleyDiode::default().vt
}

/// Every schema error in `doc`, or `Ok` when it conforms.
pub fn validate(doc: &Value) -> Result<()> {
    let errors: Vec<String> = VALIDATOR
        .iter_errors(doc)
        .map(|e| {
            let at = e.instance_path.to_string();
            format!("{}: {e}", if at.is_empty() { "/" } else { &at })
        })
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Schema(errors))
    }
}

impl Netlist {
    pub fn new(root: Node) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: None,
            description: None,
            root,
        }
    }

    /// Validates against the schema, then deserializes.
    pub fn from_value(doc: Value) -> Result<Self> {
        validate(&doc)?;
        serde_json::from_value(doc).map_err(|e| Error::Schema(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        let doc = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        Self::from_value(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlists serialize")
    }

    /// Builds and validates the network tree.
    pub fn to_oneport(&self) -> Result<OnePort> {
        let p = self.root.to_oneport()?;
        p.validate()?;
        Ok(p)
    }
}

impl Node {
    pub fn element(e: ElementSpec) -> Self {
        Node::Element(e)
    }

    pub fn to_oneport(&self) -> Result<OnePort> {
        let children = |cs: &[Node]| cs.iter().map(Node::to_oneport).collect::<Result<Vec<_>>>();
        Ok(match self {
            Node::Series { children: cs } => OnePort::series(children(cs)?)?,
            Node::Parallel { children: cs } => OnePort::parallel(children(cs)?)?,
            Node::Element(e) => OnePort::Element(e.to_element()?),
        })
    }
}

impl From<&OnePort> for Node {
    fn from(p: &OnePort) -> Self {
        let children = |cs: &[OnePort]| cs.iter().map(Node::from).collect();
        match p {
            OnePort::Series(cs) => Node::Series { children: children(cs) },
            OnePort::Parallel(cs) => Node::Parallel { children: children(cs) },
            OnePort::Element(e) => Node::Element(ElementSpec::from(e)),
        }
    }
}

impl ElementSpec {
    pub fn to_element(&self) -> Result<Element> {
        let e = match self {
            ElementSpec::Resistor { r } => Element::Resistor { r: *r },
            ElementSpec::Capacitor { c } => Element::Capacitor { c: *c },
            ElementSpec::Inductor { l } => Element::Inductor { l: *l },
            ElementSpec::Diode { is, n, vt } => Element::Diode(ShockleyDiode::new(*is, *n, *vt)?),
            ElementSpec::Pwl { points } => Element::PiecewiseLinear(PiecewiseLinearResistor::new(points.clone())?),
        };
        e.validate()?;
        Ok(e)
    }
}

impl From<&Element> for ElementSpec {
    fn from(e: &Element) -> Self {
        match e {
            Element::Resistor { r } => ElementSpec::Resistor { r: *r },
            Element::Capacitor { c } => ElementSpec::Capacitor { c: *c },
            Element::Inductor { l } => ElementSpec::Inductor { l: *l },
            Element::Diode(d) => ElementSpec::Diode {
                is: d.is,
                n: d.n,
                vt: d.vt,
            },
            Element::PiecewiseLinear(p) => ElementSpec::Pwl {
                points: p.points().to_vec(),
            },
        }
    }
}
