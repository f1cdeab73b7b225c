//! Linear ion drift memristor with a Joglekar window.
//!
//! The internal state `w ∈ [0, 1]` interpolates the resistance between
//! `r_off` (w = 0) and `r_on` (w = 1).

use super::{require, DeviceError, Method};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct MemristorParams<T = f64> {
    pub r_on: T,
    pub r_off: T,
    /// Initial (and DC) state.
    pub w0: T,
    /// State velocity per unit current, 1/(A·s).
    pub k_drift: T,
    /// Window exponent.
    pub p_window: u32,
}

impl<T: Scalar> Default for MemristorParams<T> {
    fn default() -> Self {
        MemristorParams {
            r_on: T::lit(1e3),
            r_off: T::lit(100e3),
            w0: T::lit(0.5),
            k_drift: T::lit(1e4),
            p_window: 2,
        }
    }
}

impl<T: Scalar> MemristorParams<T> {
    pub fn with_w0(mut self, w0: T) -> Self {
        self.w0 = w0;
        self
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        require(self.r_on > T::zero() && self.r_on < self.r_off, || {
            format!(
                "need 0 < ron < roff, got ron={} roff={}",
                self.r_on, self.r_off
            )
        })?;
        require(self.w0 >= T::zero() && self.w0 <= T::one(), || {
            format!("w0 must lie in [0, 1], got {}", self.w0)
        })?;
        require(self.k_drift >= T::zero(), || {
            format!("k must be >= 0, got {}", self.k_drift)
        })?;
        require(self.p_window >= 1, || {
            format!("p must be >= 1, got {}", self.p_window)
        })
    }

    pub fn cast<U: Scalar>(&self) -> MemristorParams<U> {
        MemristorParams {
            r_on: cast(self.r_on),
            r_off: cast(self.r_off),
            w0: cast(self.w0),
            k_drift: cast(self.k_drift),
            p_window: self.p_window,
        }
    }

    pub(crate) fn resistance_unchecked(&self, w: T) -> T {
        self.r_on * w + self.r_off * (T::one() - w)
    }
}

/// Resistance at state `w`.
pub fn memristance<T: Scalar>(p: &MemristorParams<T>, w: T) -> Result<T, DeviceError> {
    if !(w >= T::zero() && w <= T::one()) {
        return Err(DeviceError::Domain(format!(
            "memristor state {w} outside [0, 1]"
        )));
    }
    Ok(p.resistance_unchecked(w))
}

/// Joglekar window `f(w) = 1 − (2w − 1)^(2p)`.
pub fn window<T: Scalar>(p: &MemristorParams<T>, w: T) -> T {
    T::one() - (T::lit(2.0) * w - T::one()).powi(2 * p.p_window as i32)
}

/// df/dw.
pub fn window_slope<T: Scalar>(p: &MemristorParams<T>, w: T) -> T {
    let e = 2 * p.p_window as i32;
    -T::lit(2.0 * e as f64) * (T::lit(2.0) * w - T::one()).powi(e - 1)
}

/// dw/dt for current `i` flowing from the first terminal to the second.
pub fn memristor_state_rate<T: Scalar>(p: &MemristorParams<T>, w: T, i: T) -> T {
    p.k_drift * i * window(p, w)
}

/// One implicit step of the state equation under a current held constant
/// over the step. The result is clamped to `[0, 1]`.
pub fn memristor_state_step<T: Scalar>(
    p: &MemristorParams<T>,
    w_prev: T,
    i: T,
    dt: T,
    method: Method,
) -> T {
    let a = p.k_drift * i;
    let half = T::lit(0.5);
    let explicit_part = match method {
        Method::BackwardEuler => T::zero(),
        Method::Trapezoidal => half * dt * a * window(p, w_prev),
    };
    let implicit_weight = match method {
        Method::BackwardEuler => dt,
        Method::Trapezoidal => half * dt,
    };
    // g(w) = w − w_prev − explicit − h·a·f(w) = 0
    let mut w = w_prev;
    for _ in 0..50 {
        let g = w - w_prev - explicit_part - implicit_weight * a * window(p, w);
        let dg = T::one() - implicit_weight * a * window_slope(p, w);
        let step = g / dg;
        w = w - step;
        if step.abs() <= T::epsilon() * T::lit(16.0) {
            break;
        }
    }
    w.max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let p = MemristorParams::<f64>::default();
        assert_eq!(memristance(&p, 0.0).unwrap(), 100e3);
        assert_eq!(memristance(&p, 1.0).unwrap(), 1e3);
        assert!((memristance(&p, 0.5).unwrap() - 50.5e3).abs() < 1e-9);
        assert!(memristance(&p, 1.01).is_err());
        assert!(memristance(&p, -0.01).is_err());
    }

    #[test]
    fn window_shape() {
        let p = MemristorParams::<f64>::default();
        assert_eq!(window(&p, 0.0), 0.0);
        assert_eq!(window(&p, 1.0), 0.0);
        assert_eq!(window(&p, 0.5), 1.0);
        let i = 2e-5;
        assert!((memristor_state_rate(&p, 0.5, i) - p.k_drift * i).abs() < 1e-15);
        assert_eq!(memristor_state_rate(&p, 1.0, i), 0.0);
    }

    fn rk4_reference(p: &MemristorParams<f64>, w0: f64, i: f64, t: f64, n: usize) -> f64 {
        let h = t / n as f64;
        let f = |w: f64| memristor_state_rate(p, w, i);
        let mut w = w0;
        for _ in 0..n {
            let k1 = f(w);
            let k2 = f(w + 0.5 * h * k1);
            let k3 = f(w + 0.5 * h * k2);
            let k4 = f(w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        w
    }

    #[test]
    fn implicit_step_matches_fine_reference() {
        let p = MemristorParams::<f64>::default();
        let i = 1e-5;
        let (horizon, steps) = (1.0, 100);
        let dt = horizon / steps as f64;
        for method in [Method::BackwardEuler, Method::Trapezoidal] {
            let mut w = 0.5;
            for _ in 0..steps {
                w = memristor_state_step(&p, w, i, dt, method);
            }
            let reference = rk4_reference(&p, 0.5, i, horizon, steps * 100);
            assert!(
                (w - reference).abs() < 1e-6,
                "{method:?}: {w} vs {reference}"
            );
        }
    }

    #[test]
    fn step_never_leaves_unit_interval() {
        let p = MemristorParams::<f64>::default();
        let mut w = 0.99;
        for _ in 0..1000 {
            w = memristor_state_step(&p, w, 1.0, 1.0, Method::BackwardEuler);
            assert!((0.0..=1.0).contains(&w));
        }
    }
}
