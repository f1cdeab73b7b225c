//! Level-1 (square law) MOSFET with channel-length modulation and body effect.

use super::{require, DeviceError};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    N,
    P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MosfetParams<T = f64> {
    pub polarity: Polarity,
    /// Zero-bias threshold magnitude, V.
    pub vth0: T,
    /// Process transconductance, A/V².
    pub kprime: T,
    pub w_over_l: T,
    /// Channel-length modulation, 1/V.
    pub lambda: T,
    /// Body-effect coefficient, V^0.5.
    pub gamma: T,
    /// Surface potential term 2φF, V.
    pub phi2: T,
}

impl<T: Scalar> MosfetParams<T> {
    /// Representative 0.18 µm n-channel device.
    pub fn nmos() -> Self {
        MosfetParams {
            polarity: Polarity::N,
            vth0: T::lit(0.45),
            kprime: T::lit(170e-6),
            w_over_l: T::one(),
            lambda: T::lit(0.05),
            gamma: T::lit(0.4),
            phi2: T::lit(0.7),
        }
    }

    /// Representative 0.18 µm p-channel device.
    pub fn pmos() -> Self {
        MosfetParams {
            polarity: Polarity::P,
            kprime: T::lit(60e-6),
            ..Self::nmos()
        }
    }

    pub fn with_polarity(polarity: Polarity) -> Self {
        match polarity {
            Polarity::N => Self::nmos(),
            Polarity::P => Self::pmos(),
        }
    }

    pub fn with_wl(mut self, w_over_l: T) -> Self {
        self.w_over_l = w_over_l;
        self
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        require(self.kprime > T::zero(), || {
            format!("kp must be > 0, got {}", self.kprime)
        })?;
        require(self.w_over_l > T::zero(), || {
            format!("wl must be > 0, got {}", self.w_over_l)
        })?;
        require(self.lambda >= T::zero(), || {
            format!("lambda must be >= 0, got {}", self.lambda)
        })?;
        require(self.gamma >= T::zero(), || {
            format!("gamma must be >= 0, got {}", self.gamma)
        })?;
        require(self.phi2 > T::zero(), || {
            format!("phi2 must be > 0, got {}", self.phi2)
        })?;
        require(self.vth0.is_finite(), || "vth0 must be finite".into())
    }

    pub fn cast<U: Scalar>(&self) -> MosfetParams<U> {
        MosfetParams {
            polarity: self.polarity,
            vth0: cast(self.vth0),
            kprime: cast(self.kprime),
            w_over_l: cast(self.w_over_l),
            lambda: cast(self.lambda),
            gamma: cast(self.gamma),
            phi2: cast(self.phi2),
        }
    }

    fn beta(&self) -> T {
        self.kprime * self.w_over_l
    }
}

/// Drain current and its partial derivatives at one operating point.
///
/// All quantities are in the source-referenced frame: for a p-channel device
/// they describe the mirrored (n-equivalent) transistor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MosfetOp<T> {
    pub id: T,
    /// ∂id/∂vgs
    pub gm: T,
    /// ∂id/∂vds
    pub gds: T,
    /// ∂id/∂vsb
    pub gmb: T,
}

/// Drain current for source-referenced voltages.
///
/// For p-channel devices pass the mirrored magnitudes `(vsg, vsd, vbs)`.
pub fn mosfet_current<T: Scalar>(
    p: &MosfetParams<T>,
    vgs: T,
    vds: T,
    vsb: T,
) -> Result<T, DeviceError> {
    mosfet_eval(p, vgs, vds, vsb).map(|op| op.id)
}

/// Drain current with analytic derivatives.
///
/// For `vds < 0` the drain and source swap roles; the result is expressed in
/// the original terminal frame.
pub fn mosfet_eval<T: Scalar>(
    p: &MosfetParams<T>,
    vgs: T,
    vds: T,
    vsb: T,
) -> Result<MosfetOp<T>, DeviceError> {
    if vds >= T::zero() {
        forward(p, vgs, vds, vsb)
    } else {
        // Reversed: the drain acts as source.
        let r = forward(p, vgs - vds, -vds, vsb + vds)?;
        Ok(MosfetOp {
            id: -r.id,
            gm: -r.gm,
            gds: r.gm + r.gds - r.gmb,
            gmb: -r.gmb,
        })
    }
}

fn forward<T: Scalar>(
    p: &MosfetParams<T>,
    vgs: T,
    vds: T,
    vsb: T,
) -> Result<MosfetOp<T>, DeviceError> {
    let body = p.phi2 + vsb;
    if body < T::zero() {
        return Err(DeviceError::Domain(format!(
            "phi2 + vsb = {body} < 0: body junction forward biased beyond model validity"
        )));
    }
    let sqrt_body = body.sqrt();
    let vth = p.vth0 + p.gamma * (sqrt_body - p.phi2.sqrt());
    let dvth_dvsb = if sqrt_body > T::zero() {
        p.gamma / (T::lit(2.0) * sqrt_body)
    } else {
        T::zero()
    };
    let vov = vgs - vth;
    if vov <= T::zero() {
        return Ok(MosfetOp::default());
    }
    let beta = p.beta();
    let clm = T::one() + p.lambda * vds;
    let half = T::lit(0.5);
    let (id, did_dvov, gds) = if vds < vov {
        let core = vov * vds - half * vds * vds;
        (
            beta * core * clm,
            beta * vds * clm,
            beta * (vov - vds) * clm + beta * core * p.lambda,
        )
    } else {
        (
            half * beta * vov * vov * clm,
            beta * vov * clm,
            half * beta * vov * vov * p.lambda,
        )
    };
    Ok(MosfetOp {
        id,
        gm: did_dvov,
        gds,
        gmb: -did_dvov * dvth_dvsb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(kprime: f64, wl: f64) -> MosfetParams<f64> {
        MosfetParams {
            polarity: Polarity::N,
            vth0: 0.45,
            kprime,
            w_over_l: wl,
            lambda: 0.0,
            gamma: 0.0,
            phi2: 0.7,
        }
    }

    #[test]
    fn cutoff_is_zero() {
        let p = plain(200e-6, 2.0);
        for vds in [0.0, 0.3, 1.0, 3.0] {
            assert_eq!(mosfet_current(&p, 0.2, vds, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn saturation_hand_value() {
        // (200e-6 / 2) * 2 * (1.0 - 0.45)^2 = 60.5e-6
        let p = plain(200e-6, 2.0);
        let id = mosfet_current(&p, 1.0, 1.0, 0.0).unwrap();
        assert!((id - 60.5e-6).abs() < 1e-15, "{id}");
    }

    #[test]
    fn region_boundary_agrees() {
        let p = MosfetParams::<f64>::nmos();
        let vov = 0.55;
        let vgs = p.vth0 + vov;
        let beta = p.kprime * p.w_over_l;
        let triode = beta * (vov * vov - vov * vov / 2.0) * (1.0 + p.lambda * vov);
        let sat = 0.5 * beta * vov * vov * (1.0 + p.lambda * vov);
        assert!(((triode - sat) / sat).abs() < 1e-15);
        let below = mosfet_current(&p, vgs, vov - 1e-12, 0.0).unwrap();
        let above = mosfet_current(&p, vgs, vov + 1e-12, 0.0).unwrap();
        assert!(((below - above) / sat).abs() < 1e-10);
    }

    #[test]
    fn forward_body_bias_beyond_phi2_is_domain_error() {
        let p = MosfetParams::<f64>::nmos();
        assert!(matches!(
            mosfet_current(&p, 1.0, 1.0, -0.8),
            Err(DeviceError::Domain(_))
        ));
    }

    #[test]
    fn body_effect_raises_threshold() {
        let p = MosfetParams::<f64>::nmos();
        let a = mosfet_current(&p, 1.0, 1.0, 0.0).unwrap();
        let b = mosfet_current(&p, 1.0, 1.0, 0.5).unwrap();
        assert!(b < a);
    }

    #[test]
    fn reversed_drain_source_is_antisymmetric() {
        let p = MosfetParams::<f64>::nmos();
        // Swap: terminals d/s exchange, currents negate.
        let (vg, vd, vs, vb) = (1.4, 0.2, 0.9, 0.0);
        let fwd = mosfet_current(&p, vg - vs, vd - vs, vs - vb).unwrap();
        let swp = mosfet_current(&p, vg - vd, vs - vd, vd - vb).unwrap();
        assert!((fwd + swp).abs() < 1e-18);
    }

    #[test]
    fn f32_matches_f64() {
        let p64 = MosfetParams::<f64>::nmos();
        let p32: MosfetParams<f32> = p64.cast();
        let a = mosfet_current(&p64, 1.2, 0.4, 0.1).unwrap();
        let b = mosfet_current(&p32, 1.2, 0.4, 0.1).unwrap() as f64;
        assert!(((a - b) / a).abs() < 1e-5);
    }
}
