//! Per-element linearization used by the nodal solver.

use super::{
    memristor::MemristorParams, mosfet::mosfet_eval, zener::ZenerParams, DeviceError, DeviceParams,
    MosfetParams, Polarity,
};
use crate::scalar::Scalar;

/// Exponent above which [`limexp`] continues linearly.
const EXP_LIMIT: f64 = 40.0;

/// Implicit integration rule for reactive and stateful elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    BackwardEuler,
    Trapezoidal,
}

/// Companion-model history of one element across a timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration<T> {
    pub dt: T,
    pub method: Method,
    /// Branch voltage at the previous accepted time point.
    pub v_prev: T,
    /// Branch current at the previous accepted time point.
    pub i_prev: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampContext<T> {
    /// Conductance added across every nonlinear junction.
    pub gmin: T,
    pub time: T,
    /// Multiplier on every independent source (source stepping).
    pub source_scale: T,
    /// `None` in DC analyses.
    pub integration: Option<Integration<T>>,
    /// Memristor state guess during transient analysis.
    pub state: Option<T>,
    /// Clamp junction arguments that would leave the model's validity range.
    /// Used inside Newton iterations only.
    pub limit_junctions: bool,
}

impl<T: Scalar> StampContext<T> {
    pub fn dc(gmin: T) -> Self {
        StampContext {
            gmin,
            time: T::zero(),
            source_scale: T::one(),
            integration: None,
            state: None,
            limit_junctions: false,
        }
    }
}

/// Terminal currents and their Jacobian for a conductive element.
///
/// `current[k]` is the current entering the element through terminal `k`
/// (equivalently leaving the attached node), `jac[k][j]` its derivative with
/// respect to terminal voltage `j`, and `d_state[k]` its derivative with
/// respect to the element's internal state, when it has one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalStamp<T> {
    pub arity: usize,
    pub current: [T; 4],
    pub jac: [[T; 4]; 4],
    pub d_state: [T; 4],
}

impl<T: Scalar> LocalStamp<T> {
    fn two_terminal(i: T, g: T) -> Self {
        let z = T::zero();
        LocalStamp {
            arity: 2,
            current: [i, -i, z, z],
            jac: [[g, -g, z, z], [-g, g, z, z], [z; 4], [z; 4]],
            d_state: [z; 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stamp<T> {
    Conductive(LocalStamp<T>),
    /// Ideal voltage source: `v(t0) − v(t1) = volts`, solved with a branch current.
    VoltageBranch {
        volts: T,
    },
}

/// `exp(x)` continued linearly above a fixed limit, with its derivative.
pub fn limexp<T: Scalar>(x: T) -> (T, T) {
    let limit = T::lit(EXP_LIMIT);
    if x < limit {
        let e = x.exp();
        (e, e)
    } else {
        let e = limit.exp();
        (e * (T::one() + x - limit), e)
    }
}

/// Linearizes one element around the terminal voltages `v`.
pub fn stamp<T: Scalar>(
    params: &DeviceParams<T>,
    v: &[T],
    ctx: &StampContext<T>,
) -> Result<Stamp<T>, DeviceError> {
    let arity = params.arity();
    if v.len() < arity {
        return Err(DeviceError::Domain(format!(
            "stamp needs {arity} terminal voltages, got {}",
            v.len()
        )));
    }
    let stamp = match params {
        DeviceParams::Resistor { ohms } => {
            let g = T::one() / *ohms;
            LocalStamp::two_terminal(g * (v[0] - v[1]), g)
        }
        DeviceParams::Capacitor { farads } => match &ctx.integration {
            None => LocalStamp::two_terminal(T::zero(), T::zero()),
            Some(h) => {
                let vb = v[0] - v[1];
                let (geq, hist) = match h.method {
                    Method::BackwardEuler => (*farads / h.dt, T::zero()),
                    Method::Trapezoidal => (T::lit(2.0) * *farads / h.dt, h.i_prev),
                };
                LocalStamp::two_terminal(geq * (vb - h.v_prev) - hist, geq)
            }
        },
        DeviceParams::Source(w) => {
            return Ok(Stamp::VoltageBranch {
                volts: w.value_at(ctx.time) * ctx.source_scale,
            })
        }
        DeviceParams::Zener(p) => zener_stamp(p, v[0] - v[1], ctx),
        DeviceParams::Memristor(p) => memristor_stamp(p, v[0] - v[1], ctx),
        DeviceParams::Mosfet(p) => mosfet_stamp(p, [v[0], v[1], v[2], v[3]], ctx)?,
    };
    Ok(Stamp::Conductive(stamp))
}

fn zener_stamp<T: Scalar>(p: &ZenerParams<T>, vj: T, ctx: &StampContext<T>) -> LocalStamp<T> {
    let nvt = p.nvt();
    let (ef, def) = limexp(vj / nvt);
    let (er, der) = limexp(-(vj + p.vz) / nvt);
    let i = p.i_sat * (ef - T::one()) - p.i_bv * er + ctx.gmin * vj;
    let g = (p.i_sat * def + p.i_bv * der) / nvt + ctx.gmin;
    LocalStamp::two_terminal(i, g)
}

fn memristor_stamp<T: Scalar>(
    p: &MemristorParams<T>,
    vb: T,
    ctx: &StampContext<T>,
) -> LocalStamp<T> {
    match ctx.state {
        None => {
            let g = T::one() / p.resistance_unchecked(p.w0);
            LocalStamp::two_terminal(g * vb, g)
        }
        Some(w) => {
            // Resistance saturates at the state bounds.
            let inside = w >= T::zero() && w <= T::one();
            let r = p.resistance_unchecked(w.max(T::zero()).min(T::one()));
            let g = T::one() / r;
            let mut s = LocalStamp::two_terminal(g * vb, g);
            let di_dw = if inside {
                vb * (p.r_off - p.r_on) / (r * r)
            } else {
                T::zero()
            };
            s.d_state[0] = di_dw;
            s.d_state[1] = -di_dw;
            s
        }
    }
}

/// Terminal order: drain, gate, source, bulk.
fn mosfet_stamp<T: Scalar>(
    p: &MosfetParams<T>,
    v: [T; 4],
    ctx: &StampContext<T>,
) -> Result<LocalStamp<T>, DeviceError> {
    let [vd, vg, vs, mut vb] = v;
    // Mirror p-channel devices into the n-channel frame.
    let sign = match p.polarity {
        Polarity::N => T::one(),
        Polarity::P => -T::one(),
    };
    if ctx.limit_junctions {
        // Keep phi2 + v(low terminal → bulk) from crossing zero while iterating.
        let low = if sign > T::zero() {
            vd.min(vs)
        } else {
            vd.max(vs)
        };
        let margin = T::lit(1e-3) * p.phi2;
        let body = p.phi2 + sign * (low - vb);
        if body < margin {
            vb = low + sign * (p.phi2 - margin);
        }
    }
    let vgs = sign * (vg - vs);
    let vds = sign * (vd - vs);
    let vsb = sign * (vs - vb);
    let op = mosfet_eval(p, vgs, vds, vsb)?;
    let z = T::zero();
    // Derivatives of the mirrored drain current w.r.t. physical terminal voltages.
    let d = [
        sign * op.gds,
        sign * op.gm,
        sign * (op.gmb - op.gm - op.gds),
        -sign * op.gmb,
    ];
    // Physical current into the drain terminal.
    let id = sign * op.id + ctx.gmin * (vd - vs);
    let mut jac = [[z; 4]; 4];
    for j in 0..4 {
        jac[0][j] = sign * d[j];
        jac[2][j] = -sign * d[j];
    }
    jac[0][0] = jac[0][0] + ctx.gmin;
    jac[0][2] = jac[0][2] - ctx.gmin;
    jac[2][0] = jac[2][0] - ctx.gmin;
    jac[2][2] = jac[2][2] + ctx.gmin;
    Ok(LocalStamp {
        arity: 4,
        current: [id, z, -id, z],
        jac,
        d_state: [z; 4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{zener_conductance, MosfetParams, ZenerParams};

    fn conductive(s: Stamp<f64>) -> LocalStamp<f64> {
        match s {
            Stamp::Conductive(l) => l,
            Stamp::VoltageBranch { .. } => panic!("expected conductive stamp"),
        }
    }

    #[test]
    fn resistor_textbook_stamp() {
        let s = conductive(
            stamp(
                &DeviceParams::Resistor { ohms: 1e3 },
                &[0.0, 0.0],
                &StampContext::dc(0.0),
            )
            .unwrap(),
        );
        assert_eq!(s.jac[0][0], 1e-3);
        assert_eq!(s.jac[1][1], 1e-3);
        assert_eq!(s.jac[0][1], -1e-3);
        assert_eq!(s.jac[1][0], -1e-3);
    }

    #[test]
    fn zener_conductance_at_zero_bias() {
        let p = ZenerParams::<f64>::default();
        let s = conductive(
            stamp(
                &DeviceParams::Zener(p.clone()),
                &[0.0, 0.0],
                &StampContext::dc(0.0),
            )
            .unwrap(),
        );
        let g = zener_conductance(&p, 0.0);
        assert!(((s.jac[0][0] - g) / g).abs() < 1e-12);
    }

    #[test]
    fn mosfet_cutoff_has_only_gmin() {
        let gmin = 1e-12;
        let s = conductive(
            stamp(
                &DeviceParams::Mosfet(MosfetParams::<f64>::nmos()),
                &[1.0, 0.2, 0.0, 0.0],
                &StampContext::dc(gmin),
            )
            .unwrap(),
        );
        assert!((s.current[0] - gmin * 1.0).abs() < 1e-24);
        assert_eq!(s.jac[0][1], 0.0);
        assert_eq!(s.jac[0][0], gmin);
    }

    #[test]
    fn pmos_conducts_source_to_drain() {
        let p = MosfetParams::<f64>::pmos();
        // Source at 1.6 V, gate at 0 V, drain at 0.8 V.
        let s = conductive(
            stamp(
                &DeviceParams::Mosfet(p),
                &[0.8, 0.0, 1.6, 1.6],
                &StampContext::dc(0.0),
            )
            .unwrap(),
        );
        assert!(s.current[0] < 0.0, "current leaves through the drain");
        assert_eq!(s.current[0], -s.current[2]);
    }

    #[test]
    fn limiting_keeps_body_valid() {
        let p = MosfetParams::<f64>::nmos();
        let params = DeviceParams::Mosfet(p);
        let v = [1.0, 1.5, 0.0, 1.5];
        assert!(stamp(&params, &v, &StampContext::dc(0.0)).is_err());
        let ctx = StampContext {
            limit_junctions: true,
            ..StampContext::dc(0.0)
        };
        assert!(stamp(&params, &v, &ctx).is_ok());
    }
}
