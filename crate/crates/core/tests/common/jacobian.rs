use dendrite_sim::devices::{
    stamp, DeviceParams, Integration, LocalStamp, MemristorParams, Method, MosfetParams, Polarity,
    Stamp, StampContext, ZenerParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const H: f64 = 1e-7;

/// One device evaluation point.
pub type Case = (DeviceParams, Vec<f64>, StampContext<f64>);

fn conductive(p: &DeviceParams, v: &[f64], ctx: &StampContext<f64>) -> LocalStamp<f64> {
    match stamp(p, v, ctx).unwrap() {
        Stamp::Conductive(s) => s,
        Stamp::VoltageBranch { .. } => unreachable!(),
    }
}

/// Central differences of every terminal current w.r.t. every terminal
/// voltage, compared entry by entry. The absolute floor is the round-off
/// bound of the difference quotient itself: one ulp on each terminal voltage
/// propagated through the row's conductances, plus one ulp on the current.
pub fn check((p, v, ctx): &Case) -> Result<(), String> {
    let s = conductive(p, v, ctx);
    let n = v.len();
    let imax = s.current[..n].iter().fold(0.0f64, |m, i| m.max(i.abs()));
    let vmax = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for j in 0..n {
        let mut up = v.to_vec();
        let mut dn = v.to_vec();
        up[j] += H;
        dn[j] -= H;
        let su = conductive(p, &up, ctx);
        let sd = conductive(p, &dn, ctx);
        for k in 0..n {
            let fd = (su.current[k] - sd.current[k]) / (2.0 * H);
            let an = s.jac[k][j];
            let row: f64 = s.jac[k][..n].iter().map(|g| g.abs()).sum();
            let floor = 8.0 * f64::EPSILON * (imax + vmax * row) / H;
            if (fd - an).abs() > 1e-6 * an.abs().max(fd.abs()) + floor {
                return Err(format!(
                    "{p:?} at {v:?}: d i{k}/d v{j} analytic {an} fd {fd}"
                ));
            }
        }
    }
    if let Some(w) = ctx.state {
        let up = StampContext {
            state: Some(w + H),
            ..*ctx
        };
        let dn = StampContext {
            state: Some(w - H),
            ..*ctx
        };
        let fd = (conductive(p, v, &up).current[0] - conductive(p, v, &dn).current[0]) / (2.0 * H);
        let an = s.d_state[0];
        if (fd - an).abs() > 1e-6 * an.abs().max(fd.abs()) + 1e-18 {
            return Err(format!("{p:?} at {v:?}: d i/d w analytic {an} fd {fd}"));
        }
    }
    Ok(())
}

pub fn mosfet_cases(n: usize) -> Vec<Case> {
    let mut rng = StdRng::seed_from_u64(7);
    (0..n)
        .map(|k| {
            let pol = if k % 2 == 0 { Polarity::N } else { Polarity::P };
            let p = DeviceParams::Mosfet(
                MosfetParams::with_polarity(pol).with_wl(rng.gen_range(0.5..30.0)),
            );
            let (vd, vg, vs): (f64, f64, f64) = (
                rng.gen_range(-0.5..3.0),
                rng.gen_range(-0.5..3.0),
                rng.gen_range(-0.5..3.0),
            );
            // Bulk kept inside the model's validity range for both polarities.
            let low = if pol == Polarity::N {
                vd.min(vs)
            } else {
                vd.max(vs)
            };
            let vb = match pol {
                Polarity::N => low - rng.gen_range(-0.5..1.5),
                Polarity::P => low + rng.gen_range(-0.5..1.5),
            };
            (p, vec![vd, vg, vs, vb], StampContext::dc(1e-12))
        })
        .collect()
}

pub fn zener_cases(n: usize) -> Vec<Case> {
    let mut rng = StdRng::seed_from_u64(11);
    (0..n)
        .map(|_| {
            let p = DeviceParams::Zener(ZenerParams::default().with_vz(rng.gen_range(2.0..6.0)));
            let v = vec![rng.gen_range(-7.0..0.9), rng.gen_range(-1.0..1.0)];
            (p, v, StampContext::dc(1e-12))
        })
        .collect()
}

/// Resistor, capacitor companion, and memristor with and without a state
/// unknown, `n` points each.
pub fn passive_cases(n: usize) -> Vec<Case> {
    let mut rng = StdRng::seed_from_u64(13);
    let mut out = Vec::new();
    for _ in 0..n {
        let v = vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let r = DeviceParams::Resistor {
            ohms: rng.gen_range(10.0..1e6),
        };
        out.push((r, v.clone(), StampContext::dc(0.0)));

        let mut ctx = StampContext::dc(0.0);
        ctx.integration = Some(Integration {
            dt: rng.gen_range(1e-7..1e-3),
            method: if rng.gen() {
                Method::BackwardEuler
            } else {
                Method::Trapezoidal
            },
            v_prev: rng.gen_range(-5.0..5.0),
            i_prev: rng.gen_range(-1e-3..1e-3),
        });
        let cap = DeviceParams::Capacitor {
            farads: rng.gen_range(1e-12..1e-6),
        };
        out.push((cap, v.clone(), ctx));

        let m = DeviceParams::Memristor(MemristorParams::default());
        out.push((m.clone(), v.clone(), StampContext::dc(0.0)));
        let mut ctx = StampContext::dc(0.0);
        ctx.state = Some(rng.gen_range(0.01..0.99));
        out.push((m, v, ctx));
    }
    out
}
