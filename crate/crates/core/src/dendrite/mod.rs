//! Behavioral dendrite model: threshold transfer functions, branches with
//! ±1 synaptic weights, and a soma that combines branch spikes.
//!
//! Inputs are logic values `{0, 1}` scaled by the model's `logic_high`. A −1
//! weight feeds the complement `logic_high − x`, the way an inverter in
//! front of the branch would.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DendriteError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expected {expected} inputs, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Inverter decision: `+1` below `theta1`, `−1` at or above it.
pub fn f1<T: Scalar>(x: T, theta1: T) -> T {
    if x < theta1 {
        T::one()
    } else {
        -T::one()
    }
}

/// `level − x` for `x ∈ [0, level]`.
pub fn complement<T: Scalar>(x: T, level: T) -> Result<T, DendriteError> {
    if !(x >= T::zero() && x <= level) {
        return Err(DendriteError::Domain(format!(
            "complement input {x} outside [0, {level}]"
        )));
    }
    Ok(level - x)
}

fn non_negative<T: Scalar>(a: T, what: &str) -> Result<(), DendriteError> {
    if a >= T::zero() {
        Ok(())
    } else {
        Err(DendriteError::Domain(format!(
            "{what} input {a} is negative"
        )))
    }
}

/// Saturating transfer normalized to `[0, 1]`.
pub fn f_sat<T: Scalar>(a: T, theta2: T) -> Result<T, DendriteError> {
    non_negative(a, "f_sat")?;
    Ok(if a >= theta2 { T::one() } else { a / theta2 })
}

/// Saturating transfer clamped at `theta2` (the Zener-limited form).
pub fn f_sat_clamp<T: Scalar>(a: T, theta2: T) -> Result<T, DendriteError> {
    non_negative(a, "f_sat_clamp")?;
    Ok(if a >= theta2 { theta2 } else { a })
}

/// Branch spike: `0` once `b` reaches `theta2 − epsilon`, `1` below.
pub fn f_spk1<T: Scalar>(b: T, theta2: T, epsilon: T) -> T {
    if b >= theta2 - epsilon {
        T::zero()
    } else {
        T::one()
    }
}

/// Soma spike: `0` once `c` reaches `theta3`, `1` below.
pub fn f_spk2<T: Scalar>(c: T, theta3: T) -> T {
    if c >= theta3 {
        T::zero()
    } else {
        T::one()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitKind {
    InverterF1,
    SatNormalized,
    SatClamp,
    Spike1,
    Spike2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdUnit<T = f64> {
    pub kind: UnitKind,
    pub theta: T,
    /// Only used by [`UnitKind::Spike1`].
    pub epsilon: T,
    pub level: T,
}

impl<T: Scalar> ThresholdUnit<T> {
    pub fn new(kind: UnitKind, theta: T, epsilon: T, level: T) -> Result<Self, DendriteError> {
        if !(theta > T::zero()) {
            return Err(DendriteError::InvalidThreshold(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if !(epsilon >= T::zero() && epsilon < theta) {
            return Err(DendriteError::InvalidThreshold(format!(
                "epsilon {epsilon} outside [0, {theta})"
            )));
        }
        Ok(ThresholdUnit {
            kind,
            theta,
            epsilon,
            level,
        })
    }

    pub fn sat_clamp(theta2: T) -> Result<Self, DendriteError> {
        Self::new(UnitKind::SatClamp, theta2, T::zero(), T::one())
    }

    pub fn spike1(theta2: T, epsilon: T) -> Result<Self, DendriteError> {
        Self::new(UnitKind::Spike1, theta2, epsilon, T::one())
    }

    pub fn spike2(theta3: T) -> Result<Self, DendriteError> {
        Self::new(UnitKind::Spike2, theta3, T::zero(), T::one())
    }

    pub fn apply(&self, x: T) -> Result<T, DendriteError> {
        match self.kind {
            UnitKind::InverterF1 => Ok(f1(x, self.theta)),
            UnitKind::SatNormalized => f_sat(x, self.theta),
            UnitKind::SatClamp => f_sat_clamp(x, self.theta),
            UnitKind::Spike1 => Ok(f_spk1(x, self.theta, self.epsilon)),
            UnitKind::Spike2 => Ok(f_spk2(x, self.theta)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DendriteBranch<T = f64> {
    pub weights: Vec<Weight>,
    pub sat_unit: ThresholdUnit<T>,
    pub spike_unit: ThresholdUnit<T>,
}

impl<T: Scalar> DendriteBranch<T> {
    /// Branch spike for logic inputs already scaled by `logic_high`.
    pub fn eval(&self, inputs: &[T], logic_high: T) -> Result<T, DendriteError> {
        let mut b = T::zero();
        for (w, &x) in self.weights.iter().zip(inputs) {
            b = b + match w {
                Weight::Plus => x,
                Weight::Minus => complement(x, logic_high)?,
            };
        }
        let a = self.sat_unit.apply(b)?;
        self.spike_unit.apply(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SomaCombine {
    Sum,
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronModel<T = f64> {
    pub arity: usize,
    pub branches: Vec<DendriteBranch<T>>,
    pub soma_combine: SomaCombine,
    pub soma_unit: ThresholdUnit<T>,
    pub logic_high: T,
}

impl<T: Scalar> NeuronModel<T> {
    /// Builds a model and checks the soma threshold condition
    /// `max > theta3 > max / 2`, where `max` is the soma input with every
    /// branch firing.
    pub fn new(
        arity: usize,
        branches: Vec<DendriteBranch<T>>,
        soma_combine: SomaCombine,
        soma_unit: ThresholdUnit<T>,
        logic_high: T,
    ) -> Result<Self, DendriteError> {
        let m = NeuronModel {
            arity,
            branches,
            soma_combine,
            soma_unit,
            logic_high,
        };
        m.check_structure()?;
        let max = m.max_soma_input();
        let theta3 = m.soma_unit.theta;
        if !(theta3 < max && theta3 > max / T::lit(2.0)) {
            return Err(DendriteError::InvalidThreshold(format!(
                "condition max(F_spk1(b)) > theta3 > max(F_spk1(b))/2 violated: theta3 = {theta3}, max = {max}"
            )));
        }
        Ok(m)
    }

    fn check_structure(&self) -> Result<(), DendriteError> {
        if self.branches.is_empty() {
            return Err(DendriteError::InvalidModel("no branches".into()));
        }
        if self.arity == 0 || self.arity > 20 {
            return Err(DendriteError::InvalidModel(format!(
                "arity {} outside 1..=20",
                self.arity
            )));
        }
        if !(self.logic_high > T::zero()) {
            return Err(DendriteError::InvalidModel(
                "logic_high must be positive".into(),
            ));
        }
        for (k, b) in self.branches.iter().enumerate() {
            if b.weights.len() != self.arity {
                return Err(DendriteError::InvalidModel(format!(
                    "branch {k} has {} weights for arity {}",
                    b.weights.len(),
                    self.arity
                )));
            }
        }
        Ok(())
    }

    /// Soma input when every branch spikes.
    pub fn max_soma_input(&self) -> T {
        match self.soma_combine {
            SomaCombine::Sum => T::lit(self.branches.len() as f64),
            SomaCombine::Average => T::one(),
        }
    }

    /// Combined soma input for logic inputs in `{0, 1}`.
    pub fn soma_input(&self, inputs: &[u8]) -> Result<T, DendriteError> {
        if inputs.len() != self.arity {
            return Err(DendriteError::ArityMismatch {
                expected: self.arity,
                found: inputs.len(),
            });
        }
        let scaled = inputs
            .iter()
            .map(|&x| match x {
                0 => Ok(T::zero()),
                1 => Ok(self.logic_high),
                _ => Err(DendriteError::Domain(format!(
                    "logic input {x} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<T>, _>>()?;
        let mut c = T::zero();
        for b in &self.branches {
            c = c + b.eval(&scaled, self.logic_high)?;
        }
        Ok(match self.soma_combine {
            SomaCombine::Sum => c,
            SomaCombine::Average => c / T::lit(self.branches.len() as f64),
        })
    }
}

/// Output bit of the neuron.
pub fn eval_neuron<T: Scalar>(m: &NeuronModel<T>, inputs: &[u8]) -> Result<u8, DendriteError> {
    let c = m.soma_input(inputs)?;
    Ok(if m.soma_unit.apply(c)? > T::zero() {
        1
    } else {
        0
    })
}

/// Two-branch XOR neuron: branch A weights `(+1, −1)`, branch B `(−1, +1)`,
/// averaging soma.
pub fn xor_model<T: Scalar>(
    theta2: T,
    epsilon: T,
    theta3: T,
    logic_high: T,
) -> Result<NeuronModel<T>, DendriteError> {
    if !(theta2 > logic_high && theta2 < T::lit(2.0) * logic_high) {
        return Err(DendriteError::InvalidThreshold(format!(
            "theta2 {theta2} must lie in ({logic_high}, {})",
            T::lit(2.0) * logic_high
        )));
    }
    let branch = |weights: [Weight; 2]| -> Result<DendriteBranch<T>, DendriteError> {
        Ok(DendriteBranch {
            weights: weights.to_vec(),
            sat_unit: ThresholdUnit::new(UnitKind::SatClamp, theta2, T::zero(), logic_high)?,
            spike_unit: ThresholdUnit::new(UnitKind::Spike1, theta2, epsilon, logic_high)?,
        })
    };
    NeuronModel::new(
        2,
        vec![
            branch([Weight::Plus, Weight::Minus])?,
            branch([Weight::Minus, Weight::Plus])?,
        ],
        SomaCombine::Average,
        ThresholdUnit::new(UnitKind::Spike2, theta3, T::zero(), logic_high)?,
        logic_high,
    )
}

/// Default XOR neuron: `theta2 = 1.5`, `epsilon = 0.1`, `theta3 = 0.75`,
/// `logic_high = 1`.
pub fn default_xor_model<T: Scalar>() -> NeuronModel<T> {
    xor_model(T::lit(1.5), T::lit(0.1), T::lit(0.75), T::one())
        .expect("default XOR thresholds are valid")
}

/// Logic inputs of row `r` in lexicographic order, first input most significant.
pub fn input_row(arity: usize, r: usize) -> Vec<u8> {
    (0..arity)
        .map(|i| ((r >> (arity - 1 - i)) & 1) as u8)
        .collect()
}

/// Outputs for all `2^arity` input rows in lexicographic order.
pub fn truth_table<T: Scalar>(m: &NeuronModel<T>) -> Result<Vec<u8>, DendriteError> {
    (0..1usize << m.arity)
        .map(|r| eval_neuron(m, &input_row(m.arity, r)))
        .collect()
}

pub const XOR_TABLE: [u8; 4] = [0, 1, 1, 0];

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid<T = f64> {
    pub theta2: Vec<T>,
    pub epsilon: Vec<T>,
    pub theta3: Vec<T>,
    pub logic_high: T,
}

impl<T: Scalar> CalibrationGrid<T> {
    /// Inclusive uniform grid `start, start + step, …, ≤ stop`.
    pub fn linspace(start: T, stop: T, step: T) -> Vec<T> {
        if !(step > T::zero()) || stop < start {
            return vec![start];
        }
        let n = ((stop - start) / step + T::lit(1e-9))
            .floor()
            .to_f64_lossy() as usize;
        (0..=n).map(|k| start + step * T::lit(k as f64)).collect()
    }
}

/// Grid points `(theta2, epsilon, theta3)` whose XOR model is valid and
/// realizes the XOR truth table, in grid order.
pub fn calibrate_xor<T: Scalar>(grid: &CalibrationGrid<T>) -> Vec<(T, T, T)> {
    let mut hits = Vec::new();
    for &t2 in &grid.theta2 {
        for &eps in &grid.epsilon {
            for &t3 in &grid.theta3 {
                let Ok(m) = xor_model(t2, eps, t3, grid.logic_high) else {
                    continue;
                };
                if truth_table(&m).is_ok_and(|t| t == XOR_TABLE) {
                    hits.push((t2, eps, t3));
                }
            }
        }
    }
    hits
}
