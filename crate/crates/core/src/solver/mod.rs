//! Modified nodal analysis: DC operating point, DC sweep and fixed-step
//! transient integration.
//!
//! Unknowns are the non-ground node voltages, then one branch current per
//! voltage source, then (in transient analysis only) one state per memristor.
//! Nonlinear systems are solved with damped Newton–Raphson; when the direct
//! iteration fails the solver retries with gmin stepping and then source
//! stepping.

mod dc;
pub mod linalg;
mod mna;
mod transient;

pub use dc::{dc_operating_point, dc_sweep};
pub use transient::transient;

use thiserror::Error;

use crate::devices::DeviceError;
use crate::netlist::NetlistError;
use crate::scalar::Scalar;

pub use crate::devices::Method;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T = f64> {
    pub reltol: T,
    pub abstol_v: T,
    pub abstol_i: T,
    pub max_newton_iters: usize,
    pub gmin_start: T,
    pub gmin_final: T,
    pub source_steps: usize,
    /// Largest node-voltage change accepted per Newton iteration, V.
    pub damping_limit: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            reltol: T::lit(1e-3),
            abstol_v: T::lit(1e-6),
            abstol_i: T::lit(1e-9),
            max_newton_iters: 100,
            gmin_start: T::lit(1e-3),
            gmin_final: T::lit(1e-12),
            source_steps: 10,
            damping_limit: T::lit(0.5),
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            self.reltol,
            self.abstol_v,
            self.abstol_i,
            self.gmin_start,
            self.gmin_final,
            self.damping_limit,
        ]
        .iter()
        .all(|v| *v > T::zero());
        if !positive || self.max_newton_iters == 0 || self.source_steps == 0 {
            return Err(SolverError::InvalidInput(
                "solver options must all be positive".into(),
            ));
        }
        if !(self.gmin_final < self.gmin_start) {
            return Err(SolverError::InvalidInput(
                "gmin_final must be smaller than gmin_start".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("no convergence{}: max normalized residual {residual:.3e}", at.as_ref().map(|a| format!(" at {a}")).unwrap_or_default())]
    NoConvergence { at: Option<String>, residual: f64 },
    #[error("singular matrix: no DC path at `{node}`")]
    SingularMatrix { node: String },
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("{0}")]
    InvalidInput(String),
}

impl SolverError {
    pub(crate) fn at(self, where_: String) -> Self {
        match self {
            SolverError::NoConvergence { residual, .. } => SolverError::NoConvergence {
                at: Some(where_),
                residual,
            },
            other => other,
        }
    }
}

/// Homotopy used to reach a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Strategy {
    #[default]
    Direct,
    GminStepping,
    SourceStepping,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Direct => "direct",
            Strategy::GminStepping => "gmin-stepping",
            Strategy::SourceStepping => "source-stepping",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    /// Linear solves over the whole analysis.
    pub newton_iterations: usize,
    /// Iterations of the last accepted Newton solve.
    pub last_iterations: usize,
    /// Most aggressive fallback needed by any solution point.
    pub strategy: Strategy,
}

impl SolveStats {
    pub(crate) fn absorb(&mut self, other: SolveStats) {
        self.newton_iterations += other.newton_iterations;
        self.last_iterations = other.last_iterations;
        self.strategy = self.strategy.max(other.strategy);
    }
}

/// Node voltages and source branch currents at one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint<T = f64> {
    /// Non-ground nodes, sorted by name.
    pub nodes: Vec<String>,
    pub voltages: Vec<T>,
    pub sources: Vec<String>,
    /// Current through each source from its positive to negative terminal
    /// inside the source.
    pub branch_currents: Vec<T>,
    pub stats: SolveStats,
}

impl<T: Scalar> OperatingPoint<T> {
    /// Voltage of `node`; ground reads 0.
    pub fn voltage(&self, node: &str) -> Option<T> {
        if node == crate::netlist::GROUND {
            return Some(T::zero());
        }
        self.nodes
            .iter()
            .position(|n| n.eq_ignore_ascii_case(node))
            .map(|k| self.voltages[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub input: T,
    /// Aligned with [`SweepResult::nodes`].
    pub voltages: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T = f64> {
    pub variable: String,
    pub nodes: Vec<String>,
    pub rows: Vec<SweepRow<T>>,
    pub stats: SolveStats,
}

impl<T: Scalar> SweepResult<T> {
    pub fn inputs(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.input).collect()
    }

    pub fn column(&self, node: &str) -> Option<Vec<T>> {
        if node == crate::netlist::GROUND {
            return Some(vec![T::zero(); self.rows.len()]);
        }
        let k = self
            .nodes
            .iter()
            .position(|n| n.eq_ignore_ascii_case(node))?;
        Some(self.rows.iter().map(|r| r.voltages[k]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranRow<T> {
    pub t: T,
    pub voltages: Vec<T>,
    /// Aligned with [`TransientResult::memristors`].
    pub states: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult<T = f64> {
    pub nodes: Vec<String>,
    pub memristors: Vec<String>,
    pub dt: T,
    pub rows: Vec<TranRow<T>>,
    pub stats: SolveStats,
}

impl<T: Scalar> TransientResult<T> {
    pub fn times(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, node: &str) -> Option<Vec<T>> {
        if node == crate::netlist::GROUND {
            return Some(vec![T::zero(); self.rows.len()]);
        }
        let k = self
            .nodes
            .iter()
            .position(|n| n.eq_ignore_ascii_case(node))?;
        Some(self.rows.iter().map(|r| r.voltages[k]).collect())
    }

    pub fn state(&self, memristor: &str) -> Option<Vec<T>> {
        let k = self
            .memristors
            .iter()
            .position(|n| n.eq_ignore_ascii_case(memristor))?;
        Some(self.rows.iter().map(|r| r.states[k]).collect())
    }
}
