use super::dc::grid_len;
use super::mna::{Env, System, TranEnv};
use super::{SolveStats, SolverError, SolverOptions, TranRow, TransientResult};
use crate::devices::{memristance, DeviceParams, Method};
use crate::netlist::Circuit;
use crate::scalar::Scalar;

/// Fixed-step transient analysis from the DC operating point at `t = 0`.
///
/// Memristor states are unknowns of the Newton system and are integrated
/// with the same method as the capacitors. With [`Method::Trapezoidal`] the
/// first step is taken with backward Euler so that a source discontinuity at
/// `t = 0` does not excite the trapezoidal rule's ringing mode.
pub fn transient<T: Scalar>(
    c: &Circuit,
    tstop: T,
    dt: T,
    method: Method,
    opts: &SolverOptions<T>,
) -> Result<TransientResult<T>, SolverError> {
    opts.validate()?;
    if !(dt > T::zero()) || !(tstop > T::zero()) || dt > tstop {
        return Err(SolverError::InvalidInput(format!(
            "transient needs 0 < dt <= tstop, got tstop {tstop} dt {dt}"
        )));
    }
    let sys = System::<T>::compile(c, true)?;
    let dc_sys = System::<T>::compile(c, false)?;
    let mut stats = SolveStats::default();

    let (op, s) = dc_sys
        .solve_with_fallbacks(&vec![T::zero(); dc_sys.dim()], &Env::dc(opts), opts)
        .map_err(|e| e.at("t = 0".into()))?;
    stats.absorb(s);

    let mut x = vec![T::zero(); sys.dim()];
    x[..op.len()].copy_from_slice(&op);
    let mut history: Vec<Option<(T, T)>> = vec![None; sys.elements.len()];
    for (k, e) in sys.elements.iter().enumerate() {
        match &e.params {
            DeviceParams::Capacitor { .. } => {
                history[k] = Some((sys.branch_voltage(e, &x), T::zero()));
            }
            DeviceParams::Memristor(p) => {
                let st = e.state.expect("memristor state allocated");
                x[st] = p.w0;
                let i = sys.branch_voltage(e, &x) / memristance(p, p.w0)?;
                history[k] = Some((p.w0, i));
            }
            _ => {}
        }
    }

    let steps = grid_len(0.0, tstop.to_f64_lossy(), dt.to_f64_lossy()) - 1;
    let mut rows = Vec::with_capacity(steps + 1);
    let row = |t: T, x: &[T]| TranRow {
        t,
        voltages: x[..sys.n_nodes].to_vec(),
        states: x[sys.n_nodes + sys.n_branches..].to_vec(),
    };
    rows.push(row(T::zero(), &x));

    for n in 1..=steps {
        let t = dt * T::lit(n as f64);
        let step_method = if n == 1 {
            Method::BackwardEuler
        } else {
            method
        };
        let env = Env {
            time: t,
            tran: Some(TranEnv {
                dt,
                method: step_method,
                history: &history,
            }),
            ..Env::dc(opts)
        };
        let (xn, s) = sys
            .solve_with_fallbacks(&x, &env, opts)
            .map_err(|e| e.at(format!("t = {t}")))?;
        stats.absorb(s);
        x = xn;

        let mut next = history.clone();
        for (k, e) in sys.elements.iter().enumerate() {
            match &e.params {
                DeviceParams::Capacitor { farads } => {
                    let (v_prev, i_prev) = history[k].expect("capacitor history");
                    let v = sys.branch_voltage(e, &x);
                    let i = match step_method {
                        Method::BackwardEuler => *farads / dt * (v - v_prev),
                        Method::Trapezoidal => T::lit(2.0) * *farads / dt * (v - v_prev) - i_prev,
                    };
                    next[k] = Some((v, i));
                }
                DeviceParams::Memristor(p) => {
                    let st = e.state.expect("memristor state allocated");
                    let w = x[st].max(T::zero()).min(T::one());
                    x[st] = w;
                    let i = sys.branch_voltage(e, &x) / memristance(p, w)?;
                    next[k] = Some((w, i));
                }
                _ => {}
            }
        }
        history = next;
        rows.push(row(t, &x));
    }

    Ok(TransientResult {
        nodes: sys.nodes.clone(),
        memristors: sys.memristor_names(),
        dt,
        rows,
        stats,
    })
}
