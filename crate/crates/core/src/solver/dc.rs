use super::mna::{Env, System};
use super::{OperatingPoint, SolveStats, SolverError, SolverOptions, SweepResult, SweepRow};
use crate::netlist::Circuit;
use crate::scalar::Scalar;

fn operating_point<T: Scalar>(sys: &System<T>, x: &[T], stats: SolveStats) -> OperatingPoint<T> {
    OperatingPoint {
        nodes: sys.nodes.clone(),
        voltages: x[..sys.n_nodes].to_vec(),
        sources: sys.source_names(),
        branch_currents: x[sys.n_nodes..sys.n_nodes + sys.n_branches].to_vec(),
        stats,
    }
}

/// DC operating point. Capacitors are open and memristors sit at `w0`.
pub fn dc_operating_point<T: Scalar>(
    c: &Circuit,
    opts: &SolverOptions<T>,
) -> Result<OperatingPoint<T>, SolverError> {
    opts.validate()?;
    let sys = System::<T>::compile(c, false)?;
    let seed = vec![T::zero(); sys.dim()];
    let (x, stats) = sys.solve_with_fallbacks(&seed, &Env::dc(opts), opts)?;
    Ok(operating_point(&sys, &x, stats))
}

/// Number of grid points `floor((stop − start)/step) + 1`, tolerant to
/// round-off in the quotient.
pub(crate) fn grid_len(start: f64, stop: f64, step: f64) -> usize {
    let q = (stop - start) / step;
    (q + 1e-9 * q.abs().max(1.0)).floor() as usize + 1
}

/// DC sweep of one DC voltage source with continuation: every solution seeds
/// the next grid point.
pub fn dc_sweep<T: Scalar>(
    c: &Circuit,
    source: &str,
    start: T,
    stop: T,
    step: T,
    opts: &SolverOptions<T>,
) -> Result<SweepResult<T>, SolverError> {
    opts.validate()?;
    if !(step > T::zero()) || !(stop > start) {
        return Err(SolverError::InvalidInput(format!(
            "sweep needs step > 0 and stop > start, got {start}..{stop} step {step}"
        )));
    }
    let mut sys = System::<T>::compile(c, false)?;
    // Validates the source before any solve.
    sys.set_dc_source(source, start)?;
    let n = grid_len(
        start.to_f64_lossy(),
        stop.to_f64_lossy(),
        step.to_f64_lossy(),
    );
    let env = Env::dc(opts);
    let mut rows = Vec::with_capacity(n);
    let mut stats = SolveStats::default();
    let mut seed = vec![T::zero(); sys.dim()];
    for k in 0..n {
        let value = start + step * T::lit(k as f64);
        sys.set_dc_source(source, value)?;
        let (x, s) = match sys.solve_with_fallbacks(&seed, &env, opts) {
            Ok(ok) => ok,
            Err(SolverError::NoConvergence { .. }) if k > 0 => {
                // Lost continuation: retry the point from scratch.
                let zero = vec![T::zero(); sys.dim()];
                sys.solve_with_fallbacks(&zero, &env, opts)
                    .map_err(|e| e.at(format!("{} = {}", source, value)))?
            }
            Err(e) => return Err(e.at(format!("{} = {}", source, value))),
        };
        stats.absorb(s);
        rows.push(SweepRow {
            input: value,
            voltages: x[..sys.n_nodes].to_vec(),
        });
        seed = x;
    }
    Ok(SweepResult {
        variable: source.to_ascii_lowercase(),
        nodes: sys.nodes.clone(),
        rows,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn grid_counts() {
        assert_eq!(grid_len(0.0, 6.0, 0.05), 121);
        assert_eq!(grid_len(0.0, 1.0, 0.3), 4);
        assert_eq!(grid_len(0.0, 0.01, 0.005), 3);
    }

    #[test]
    fn divider_is_exact_in_one_iteration() {
        let c = parse_netlist("V1 1 0 1.0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
        let op = dc_operating_point::<f64>(&c, &SolverOptions::default()).unwrap();
        assert!((op.voltage("2").unwrap() - 0.5).abs() < 1e-12);
        assert!((op.voltage("1").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(op.stats.last_iterations, 1);
        assert!((op.branch_currents[0] + 0.5e-3).abs() < 1e-15);
    }

    #[test]
    fn divider_in_f32() {
        let c = parse_netlist("V1 1 0 1.0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
        let op = dc_operating_point::<f32>(&c, &SolverOptions::default()).unwrap();
        assert!((op.voltage("2").unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn floating_network_is_singular() {
        let c = parse_netlist("* float\nR1 a b 1k\nR2 b c 1k").unwrap();
        let err = dc_operating_point::<f64>(&c, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::SingularMatrix { .. }), "{err:?}");
    }

    #[test]
    fn sweep_divider_is_linear() {
        let c = parse_netlist("V1 1 0 0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
        let s = dc_sweep::<f64>(&c, "v1", 0.0, 1.0, 0.1, &SolverOptions::default()).unwrap();
        assert_eq!(s.rows.len(), 11);
        for r in &s.rows {
            assert!((r.voltages[1] - r.input / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_rejects_non_dc_source() {
        let c = parse_netlist("* p\nV1 1 0 pulse(0 1 0 0 0 1 2)\nR1 1 0 1k").unwrap();
        assert!(matches!(
            dc_sweep::<f64>(&c, "v1", 0.0, 1.0, 0.1, &SolverOptions::default()),
            Err(SolverError::InvalidInput(_))
        ));
        assert!(dc_sweep::<f64>(&c, "r1", 0.0, 1.0, 0.1, &SolverOptions::default()).is_err());
    }
}
