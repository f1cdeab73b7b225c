//! Behavioral device models and their linearizations.
//!
//! Every model is a pure function of its parameter record and operating point.
//! Currents are positive flowing from the first terminal to the second. The
//! p-channel MOSFET is handled by mirroring all terminal voltages, so netlists
//! list `(drain, gate, source, bulk)` physically for both polarities.

mod memristor;
mod mosfet;
mod source;
mod stamp;
mod zener;

pub use memristor::{
    memristance, memristor_state_rate, memristor_state_step, window, window_slope, MemristorParams,
};
pub use mosfet::{mosfet_current, mosfet_eval, MosfetOp, MosfetParams, Polarity};
pub use source::SourceWaveform;
pub use stamp::{limexp, stamp, Integration, LocalStamp, Method, Stamp, StampContext};
pub use zener::{zener_conductance, zener_current, ZenerParams};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    /// Operating point outside the validity range of a model equation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameter record violates its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Parameter record of any netlist element.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceParams<T = f64> {
    Resistor { ohms: T },
    Capacitor { farads: T },
    Source(SourceWaveform<T>),
    Zener(ZenerParams<T>),
    Mosfet(MosfetParams<T>),
    Memristor(MemristorParams<T>),
}

impl<T: Scalar> DeviceParams<T> {
    pub fn cast<U: Scalar>(&self) -> DeviceParams<U> {
        use crate::scalar::cast;
        match self {
            DeviceParams::Resistor { ohms } => DeviceParams::Resistor { ohms: cast(*ohms) },
            DeviceParams::Capacitor { farads } => DeviceParams::Capacitor {
                farads: cast(*farads),
            },
            DeviceParams::Source(w) => DeviceParams::Source(w.cast()),
            DeviceParams::Zener(p) => DeviceParams::Zener(p.cast()),
            DeviceParams::Mosfet(p) => DeviceParams::Mosfet(p.cast()),
            DeviceParams::Memristor(p) => DeviceParams::Memristor(p.cast()),
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        match self {
            DeviceParams::Resistor { ohms } => {
                if !(*ohms > T::zero()) || !ohms.is_finite() {
                    return Err(DeviceError::InvalidParams(format!(
                        "resistance must be positive, got {ohms}"
                    )));
                }
                Ok(())
            }
            DeviceParams::Capacitor { farads } => {
                if !(*farads > T::zero()) || !farads.is_finite() {
                    return Err(DeviceError::InvalidParams(format!(
                        "capacitance must be positive, got {farads}"
                    )));
                }
                Ok(())
            }
            DeviceParams::Source(w) => w.validate(),
            DeviceParams::Zener(p) => p.validate(),
            DeviceParams::Mosfet(p) => p.validate(),
            DeviceParams::Memristor(p) => p.validate(),
        }
    }

    /// Number of terminals the element kind connects.
    pub fn arity(&self) -> usize {
        match self {
            DeviceParams::Mosfet(_) => 4,
            _ => 2,
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        matches!(self, DeviceParams::Zener(_) | DeviceParams::Mosfet(_))
    }
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), DeviceError> {
    if cond {
        Ok(())
    } else {
        Err(DeviceError::InvalidParams(msg()))
    }
}
