use super::{require, DeviceError};
use crate::scalar::{cast, Scalar};

/// Zener diode: forward junction plus a reverse breakdown exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct ZenerParams<T = f64> {
    /// Forward saturation current, A.
    pub i_sat: T,
    pub n_ideality: T,
    pub v_thermal: T,
    /// Reverse breakdown magnitude, V. Sets the clamp height of the dendrite cells.
    pub vz: T,
    /// Current at the breakdown knee, A.
    pub i_bv: T,
}

impl<T: Scalar> Default for ZenerParams<T> {
    fn default() -> Self {
        ZenerParams {
            i_sat: T::lit(1e-14),
            n_ideality: T::lit(1.2),
            v_thermal: T::lit(0.02585),
            vz: T::lit(4.2),
            i_bv: T::lit(1e-3),
        }
    }
}

impl<T: Scalar> ZenerParams<T> {
    pub fn with_vz(mut self, vz: T) -> Self {
        self.vz = vz;
        self
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        require(self.i_sat > T::zero(), || {
            format!("is must be > 0, got {}", self.i_sat)
        })?;
        require(self.vz > T::zero(), || {
            format!("vz must be > 0, got {}", self.vz)
        })?;
        require(self.i_bv > T::zero(), || {
            format!("ibv must be > 0, got {}", self.i_bv)
        })?;
        require(self.v_thermal > T::zero(), || {
            format!("vt must be > 0, got {}", self.v_thermal)
        })?;
        require(
            self.n_ideality >= T::one() && self.n_ideality <= T::lit(2.0),
            || format!("n must lie in [1, 2], got {}", self.n_ideality),
        )
    }

    pub fn cast<U: Scalar>(&self) -> ZenerParams<U> {
        ZenerParams {
            i_sat: cast(self.i_sat),
            n_ideality: cast(self.n_ideality),
            v_thermal: cast(self.v_thermal),
            vz: cast(self.vz),
            i_bv: cast(self.i_bv),
        }
    }

    pub(crate) fn nvt(&self) -> T {
        self.n_ideality * self.v_thermal
    }
}

/// Anode-to-cathode current at voltage `v` (anode minus cathode).
pub fn zener_current<T: Scalar>(p: &ZenerParams<T>, v: T) -> T {
    let nvt = p.nvt();
    p.i_sat * ((v / nvt).exp() - T::one()) - p.i_bv * (-(v + p.vz) / nvt).exp()
}

/// Small-signal conductance di/dv.
pub fn zener_conductance<T: Scalar>(p: &ZenerParams<T>, v: T) -> T {
    let nvt = p.nvt();
    (p.i_sat * (v / nvt).exp() + p.i_bv * (-(v + p.vz) / nvt).exp()) / nvt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_zero_at_zero_bias() {
        let p = ZenerParams::<f64>::default();
        assert!(zener_current(&p, 0.0).abs() < 1e-9);
    }

    #[test]
    fn breakdown_knee_current() {
        let p = ZenerParams::<f64>::default();
        let i = zener_current(&p, -4.2);
        // i = -i_sat*(1 - e^{-4.2/nvt}) - i_bv
        assert!(i < 0.0);
        assert!(i.abs() > p.i_bv / 2.0 && i.abs() < p.i_bv * 2.0, "{i}");
    }

    #[test]
    fn blocking_inside_breakdown_window() {
        let p = ZenerParams::<f64>::default();
        assert!(zener_current(&p, -3.0).abs() < 1e-6);
    }

    #[test]
    fn strictly_increasing_on_mv_grid() {
        // On the reverse plateau the current sits at -i_sat to within one ulp,
        // so the f64 samples are only required not to decrease; strictness is
        // checked on the grid increments written without cancellation.
        let p = ZenerParams::<f64>::default();
        let nvt = p.nvt();
        let mut prev = zener_current(&p, -20.0);
        let mut strict_in_f64 = 0;
        for k in 1..=22_000 {
            let v0 = -20.0 + (k - 1) as f64 * 1e-3;
            let v = -20.0 + k as f64 * 1e-3;
            let i = zener_current(&p, v);
            assert!(i >= prev, "decreasing at v={v}: {prev} -> {i}");
            if i > prev {
                strict_in_f64 += 1;
            }
            let (a0, a1) = (v0 / nvt, v / nvt);
            let (b0, b1) = (-(v0 + p.vz) / nvt, -(v + p.vz) / nvt);
            let forward = p.i_sat * a0.exp() * (a1 - a0).exp_m1();
            let reverse = p.i_bv * b1.exp() * (b0 - b1).exp_m1();
            assert!(forward + reverse > 0.0, "flat increment at v={v}");
            prev = i;
        }
        assert!(strict_in_f64 > 10_000);
    }

    #[test]
    fn conductance_matches_finite_difference_at_zero() {
        let p = ZenerParams::<f64>::default();
        // Central difference written as sinh terms so that neither the -1 nor
        // the two exponentials cancel.
        let h = 1e-9;
        let nvt = p.nvt();
        let a = h / nvt;
        let sinh2 = a.exp_m1() - (-a).exp_m1();
        let fd = (p.i_sat + p.i_bv * (-p.vz / nvt).exp()) * sinh2 / (2.0 * h);
        let g = zener_conductance(&p, 0.0);
        assert!(((fd - g) / g).abs() < 1e-12, "fd={fd} g={g}");
    }
}
