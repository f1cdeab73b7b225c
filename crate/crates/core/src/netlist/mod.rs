//! SPICE-like netlist model, parser and writer.
//!
//! ```text
//! title line
//! * comment
//! Rname n+ n- value
//! Cname n+ n- value
//! Vname n+ n- [dc] value | pulse(v1 v2 td tr tf pw per) | pwl(t1 v1 t2 v2 ...)
//! Dname anode cathode [model] [key=value ...]          (zener)
//! Mname drain gate source bulk [model] [key=value ...]
//! XMRname n+ n- [model] [key=value ...]                 (memristor)
//! + continuation of the previous card
//! .model name mosfet|nmos|pmos|zener|memristor key=value ...
//! .op
//! .dc Vname start stop step
//! .tran tstop dt
//! .end
//! ```
//!
//! Names, nodes and model names are case-insensitive and normalized to lower
//! case. Ground is node `0`.

mod number;
mod parse;
mod write;

pub use number::parse_number;
pub use parse::parse_netlist;
pub use write::serialize_netlist;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::devices::{DeviceParams, MemristorParams, MosfetParams, ZenerParams};

pub const GROUND: &str = "0";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}: unknown element kind `{name}`")]
    UnknownElementKind { line: usize, name: String },
    #[error("line {line}: `{name}` expects {expected} fields, found {found}")]
    ArityError {
        line: usize,
        name: String,
        expected: String,
        found: usize,
    },
    #[error("line {line}: duplicate element name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: malformed number `{token}`")]
    MalformedNumber { line: usize, token: String },
    #[error("line {line}: unknown model `{name}`")]
    UnknownModel { line: usize, name: String },
    #[error("line {line}: invalid parameter: {message}")]
    InvalidParameter { line: usize, message: String },
    #[error("line {line}: invalid directive: {message}")]
    InvalidDirective { line: usize, message: String },
    #[error("circuit has no elements")]
    EmptyCircuit,
}

impl NetlistError {
    /// Source line the error refers to; 0 for errors not tied to a line.
    pub fn line(&self) -> usize {
        match self {
            NetlistError::UnknownElementKind { line, .. }
            | NetlistError::ArityError { line, .. }
            | NetlistError::DuplicateName { line, .. }
            | NetlistError::MalformedNumber { line, .. }
            | NetlistError::UnknownModel { line, .. }
            | NetlistError::InvalidParameter { line, .. }
            | NetlistError::InvalidDirective { line, .. } => *line,
            NetlistError::EmptyCircuit => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Resistor,
    Capacitor,
    VoltageSource,
    Zener,
    Mosfet,
    Memristor,
}

impl ElementKind {
    /// Kind selected by an element name's leading letters.
    pub fn from_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        if lower.starts_with("xmr") {
            return Some(ElementKind::Memristor);
        }
        match lower.chars().next()? {
            'r' => Some(ElementKind::Resistor),
            'c' => Some(ElementKind::Capacitor),
            'v' => Some(ElementKind::VoltageSource),
            'd' => Some(ElementKind::Zener),
            'm' => Some(ElementKind::Mosfet),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            ElementKind::Mosfet => 4,
            _ => 2,
        }
    }

    pub fn of(params: &DeviceParams) -> Self {
        match params {
            DeviceParams::Resistor { .. } => ElementKind::Resistor,
            DeviceParams::Capacitor { .. } => ElementKind::Capacitor,
            DeviceParams::Source(_) => ElementKind::VoltageSource,
            DeviceParams::Zener(_) => ElementKind::Zener,
            DeviceParams::Mosfet(_) => ElementKind::Mosfet,
            DeviceParams::Memristor(_) => ElementKind::Memristor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub terminals: Vec<String>,
    pub params: DeviceParams,
    /// Model card the parameters were resolved from, if any.
    pub model: Option<String>,
}

impl Element {
    pub fn new(name: &str, terminals: &[&str], params: DeviceParams) -> Self {
        Element {
            name: name.to_ascii_lowercase(),
            terminals: terminals.iter().map(|t| t.to_ascii_lowercase()).collect(),
            params,
            model: None,
        }
    }

    pub fn with_model(mut self, model: &str) -> Self {
        self.model = Some(model.to_ascii_lowercase());
        self
    }

    pub fn kind(&self) -> ElementKind {
        ElementKind::of(&self.params)
    }
}

/// Parameters of a `.model` card, fully resolved against the defaults.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelCard {
    Mosfet(MosfetParams),
    Zener(ZenerParams),
    Memristor(MemristorParams),
}

impl ModelCard {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelCard::Mosfet(_) => "mosfet",
            ModelCard::Zener(_) => "zener",
            ModelCard::Memristor(_) => "memristor",
        }
    }

    pub(crate) fn params(&self) -> DeviceParams {
        match self {
            ModelCard::Mosfet(p) => DeviceParams::Mosfet(p.clone()),
            ModelCard::Zener(p) => DeviceParams::Zener(p.clone()),
            ModelCard::Memristor(p) => DeviceParams::Memristor(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisDirective {
    Op,
    DcSweep {
        source: String,
        start: f64,
        stop: f64,
        step: f64,
    },
    Transient {
        tstop: f64,
        dt: f64,
    },
}

impl AnalysisDirective {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            AnalysisDirective::Op => Ok(()),
            AnalysisDirective::DcSweep {
                start, stop, step, ..
            } => {
                if !(*step > 0.0) {
                    return Err(format!("sweep step must be > 0, got {step}"));
                }
                if !(*stop > *start) {
                    return Err(format!("sweep stop {stop} must exceed start {start}"));
                }
                Ok(())
            }
            AnalysisDirective::Transient { tstop, dt } => {
                if !(*tstop > 0.0) {
                    return Err(format!("tran stop time must be > 0, got {tstop}"));
                }
                if !(*dt > 0.0) {
                    return Err(format!("tran step must be > 0, got {dt}"));
                }
                Ok(())
            }
        }
    }
}

/// A parsed or built circuit: nodes, ordered elements, model cards and
/// attached analysis directives.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub title: String,
    pub nodes: BTreeSet<String>,
    pub elements: Vec<Element>,
    pub models: BTreeMap<String, ModelCard>,
    pub analyses: Vec<AnalysisDirective>,
}

impl Circuit {
    pub fn new(title: impl Into<String>) -> Self {
        Circuit {
            title: title.into(),
            nodes: BTreeSet::new(),
            elements: Vec::new(),
            models: BTreeMap::new(),
            analyses: Vec::new(),
        }
    }

    /// Adds an element, enforcing name uniqueness, terminal count and
    /// parameter validity.
    pub fn add(&mut self, element: Element) -> Result<&mut Self, NetlistError> {
        self.add_at(element, 0)
    }

    pub(crate) fn add_at(
        &mut self,
        mut element: Element,
        line: usize,
    ) -> Result<&mut Self, NetlistError> {
        element.name = element.name.to_ascii_lowercase();
        let kind = element.kind();
        if ElementKind::from_name(&element.name) != Some(kind) {
            return Err(NetlistError::UnknownElementKind {
                line,
                name: element.name,
            });
        }
        if element.terminals.len() != kind.arity() {
            return Err(NetlistError::ArityError {
                line,
                name: element.name,
                expected: format!("{} terminal", kind.arity()),
                found: element.terminals.len(),
            });
        }
        if self.element(&element.name).is_some() {
            return Err(NetlistError::DuplicateName {
                line,
                name: element.name,
            });
        }
        if let Some(model) = &element.model {
            if !self.models.contains_key(model) {
                return Err(NetlistError::UnknownModel {
                    line,
                    name: model.clone(),
                });
            }
        }
        element
            .params
            .validate()
            .map_err(|e| NetlistError::InvalidParameter {
                line,
                message: format!("{}: {e}", element.name),
            })?;
        for t in element.terminals.iter_mut() {
            *t = t.to_ascii_lowercase();
            self.nodes.insert(t.clone());
        }
        self.elements.push(element);
        Ok(self)
    }

    pub fn add_model(&mut self, name: &str, card: ModelCard) -> &mut Self {
        self.models.insert(name.to_ascii_lowercase(), card);
        self
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn element_mut(&mut self, name: &str) -> Option<&mut Element> {
        self.elements
            .iter_mut()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    /// Checks every circuit invariant.
    pub fn validate(&self) -> Result<(), NetlistError> {
        if self.elements.is_empty() {
            return Err(NetlistError::EmptyCircuit);
        }
        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if !seen.insert(e.name.to_ascii_lowercase()) {
                return Err(NetlistError::DuplicateName {
                    line: 0,
                    name: e.name.clone(),
                });
            }
            if e.terminals.len() != e.kind().arity() {
                return Err(NetlistError::ArityError {
                    line: 0,
                    name: e.name.clone(),
                    expected: format!("{} terminal", e.kind().arity()),
                    found: e.terminals.len(),
                });
            }
            if let Some(t) = e.terminals.iter().find(|t| !self.nodes.contains(*t)) {
                return Err(NetlistError::InvalidParameter {
                    line: 0,
                    message: format!("{} references unknown node {t}", e.name),
                });
            }
        }
        for a in &self.analyses {
            a.validate()
                .map_err(|message| NetlistError::InvalidDirective { line: 0, message })?;
        }
        Ok(())
    }

    /// Non-ground node names in solver order.
    pub fn signal_nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .map(String::as_str)
            .filter(|n| *n != GROUND)
    }
}
