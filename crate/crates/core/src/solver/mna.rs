//! Compiled MNA system, residual/Jacobian assembly and the Newton kernel.

use std::collections::BTreeMap;

use super::linalg::DenseMatrix;
use super::{SolveStats, SolverError, SolverOptions, Strategy};
use crate::devices::{
    stamp, window, window_slope, DeviceError, DeviceParams, Integration, Method, SourceWaveform,
    Stamp, StampContext,
};
use crate::netlist::{Circuit, GROUND};
use crate::scalar::Scalar;

/// Absolute tolerance on memristor state equations.
const STATE_ABSTOL: f64 = 1e-9;
/// Largest memristor state change accepted per Newton iteration.
const STATE_DAMPING: f64 = 0.1;

#[derive(Debug, Clone)]
pub(crate) struct CompiledElement<T> {
    pub name: String,
    pub params: DeviceParams<T>,
    pub terms: [Option<usize>; 4],
    pub branch: Option<usize>,
    pub state: Option<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct System<T> {
    pub nodes: Vec<String>,
    pub elements: Vec<CompiledElement<T>>,
    pub n_nodes: usize,
    pub n_branches: usize,
    pub n_states: usize,
    pub linear: bool,
}

/// Per-timestep history of reactive and stateful elements, indexed like
/// [`System::elements`]: `(branch voltage, branch current)` for capacitors and
/// `(state, current)` for memristors.
#[derive(Debug, Clone)]
pub(crate) struct TranEnv<'a, T> {
    pub dt: T,
    pub method: Method,
    pub history: &'a [Option<(T, T)>],
}

#[derive(Debug, Clone)]
pub(crate) struct Env<'a, T> {
    pub gmin_ground: T,
    pub gmin_junction: T,
    pub source_scale: T,
    pub time: T,
    pub tran: Option<TranEnv<'a, T>>,
}

impl<T: Scalar> Env<'_, T> {
    pub fn dc(opts: &SolverOptions<T>) -> Self {
        Env {
            gmin_ground: T::zero(),
            gmin_junction: opts.gmin_final,
            source_scale: T::one(),
            time: T::zero(),
            tran: None,
        }
    }
}

pub(crate) struct Assembly<T> {
    pub jac: DenseMatrix<T>,
    pub residual: Vec<T>,
    /// Per-row tolerance on the residual.
    pub tol: Vec<T>,
}

impl<T: Scalar> System<T> {
    pub fn compile(c: &Circuit, with_states: bool) -> Result<Self, SolverError> {
        c.validate()?;
        let nodes: Vec<String> = c.signal_nodes().map(str::to_string).collect();
        let index: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| (n.as_str(), k))
            .collect();
        let n_nodes = nodes.len();
        let mut n_branches = 0;
        let mut n_states = 0;
        let mut elements = Vec::with_capacity(c.elements.len());
        for e in &c.elements {
            let mut terms = [None; 4];
            for (k, t) in e.terminals.iter().enumerate() {
                terms[k] = if t == GROUND {
                    None
                } else {
                    Some(index[t.as_str()])
                };
            }
            let params: DeviceParams<T> = e.params.cast();
            let branch = matches!(params, DeviceParams::Source(_)).then(|| {
                n_branches += 1;
                n_branches - 1
            });
            let state = (with_states && matches!(params, DeviceParams::Memristor(_))).then(|| {
                n_states += 1;
                n_states - 1
            });
            elements.push(CompiledElement {
                name: e.name.clone(),
                params,
                terms,
                branch,
                state,
            });
        }
        for e in elements.iter_mut() {
            e.branch = e.branch.map(|b| n_nodes + b);
            e.state = e.state.map(|s| n_nodes + n_branches + s);
        }
        let linear = n_states == 0 && elements.iter().all(|e| !e.params.is_nonlinear());
        Ok(System {
            nodes,
            elements,
            n_nodes,
            n_branches,
            n_states,
            linear,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_nodes + self.n_branches + self.n_states
    }

    pub fn unknown_name(&self, k: usize) -> String {
        if k < self.n_nodes {
            return self.nodes[k].clone();
        }
        let owner = self
            .elements
            .iter()
            .find(|e| e.branch == Some(k) || e.state == Some(k));
        match owner {
            Some(e) if e.branch == Some(k) => format!("branch of {}", e.name),
            Some(e) => format!("state of {}", e.name),
            None => format!("unknown {k}"),
        }
    }

    pub fn source_names(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter(|e| e.branch.is_some())
            .map(|e| e.name.clone())
            .collect()
    }

    pub fn memristor_names(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter(|e| e.state.is_some())
            .map(|e| e.name.clone())
            .collect()
    }

    pub fn set_dc_source(&mut self, name: &str, value: T) -> Result<(), SolverError> {
        let e = self
            .elements
            .iter_mut()
            .find(|e| e.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| SolverError::InvalidInput(format!("no element named `{name}`")))?;
        match &mut e.params {
            DeviceParams::Source(w @ SourceWaveform::Dc(_)) => {
                *w = SourceWaveform::Dc(value);
                Ok(())
            }
            _ => Err(SolverError::InvalidInput(format!(
                "`{name}` is not a DC voltage source"
            ))),
        }
    }

    /// Voltage across the first two terminals of an element.
    pub fn branch_voltage(&self, e: &CompiledElement<T>, x: &[T]) -> T {
        let v = |t: Option<usize>| t.map_or(T::zero(), |k| x[k]);
        v(e.terms[0]) - v(e.terms[1])
    }

    fn element_context(
        &self,
        k: usize,
        e: &CompiledElement<T>,
        x: &[T],
        env: &Env<'_, T>,
        limit: bool,
    ) -> StampContext<T> {
        let mut ctx = StampContext {
            gmin: env.gmin_junction,
            time: env.time,
            source_scale: env.source_scale,
            integration: None,
            state: None,
            limit_junctions: limit,
        };
        if let Some(tran) = &env.tran {
            if let (DeviceParams::Capacitor { .. }, Some((v_prev, i_prev))) =
                (&e.params, tran.history[k])
            {
                ctx.integration = Some(Integration {
                    dt: tran.dt,
                    method: tran.method,
                    v_prev,
                    i_prev,
                });
            }
            if let Some(s) = e.state {
                ctx.state = Some(x[s]);
            }
        }
        ctx
    }

    /// Residual and Jacobian of the MNA equations at `x`.
    pub fn assemble(
        &self,
        x: &[T],
        env: &Env<'_, T>,
        opts: &SolverOptions<T>,
        limit: bool,
    ) -> Result<Assembly<T>, DeviceError> {
        let n = self.dim();
        let mut jac = DenseMatrix::zeros(n);
        let mut residual = vec![T::zero(); n];
        let mut scale = vec![T::zero(); n];
        let mut tol = vec![T::zero(); n];
        let mut v = [T::zero(); 4];

        for (k, e) in self.elements.iter().enumerate() {
            let arity = e.params.arity();
            for (vj, t) in v.iter_mut().zip(&e.terms) {
                *vj = t.map_or(T::zero(), |idx| x[idx]);
            }
            let ctx = self.element_context(k, e, x, env, limit);
            match stamp(&e.params, &v[..arity], &ctx)? {
                Stamp::Conductive(s) => {
                    for a in 0..arity {
                        let Some(r) = e.terms[a] else { continue };
                        residual[r] = residual[r] + s.current[a];
                        scale[r] = scale[r].max(s.current[a].abs());
                        for b in 0..arity {
                            if let Some(c) = e.terms[b] {
                                jac.add(r, c, s.jac[a][b]);
                            }
                        }
                        if let Some(st) = e.state {
                            jac.add(r, st, s.d_state[a]);
                        }
                    }
                    if let (Some(st), DeviceParams::Memristor(p), Some(tran)) =
                        (e.state, &e.params, &env.tran)
                    {
                        // The window polynomial is continued outside [0, 1] so a
                        // trapezoidal overshoot still has a root; the state is
                        // clamped once the step is accepted.
                        let w = x[st];
                        let (w_prev, i_prev) = tran.history[k].unwrap_or((p.w0, T::zero()));
                        let i = s.current[0];
                        let (h, explicit) = match tran.method {
                            Method::BackwardEuler => (tran.dt, T::zero()),
                            Method::Trapezoidal => {
                                let half = T::lit(0.5) * tran.dt;
                                (half, half * p.k_drift * i_prev * window(p, w_prev))
                            }
                        };
                        let f = window(p, w);
                        residual[st] = x[st] - w_prev - explicit - h * p.k_drift * i * f;
                        tol[st] = T::lit(STATE_ABSTOL) + opts.reltol * (x[st] - w_prev).abs();
                        jac.add(
                            st,
                            st,
                            T::one() - h * p.k_drift * (s.d_state[0] * f + i * window_slope(p, w)),
                        );
                        for b in 0..2 {
                            if let Some(c) = e.terms[b] {
                                jac.add(st, c, -h * p.k_drift * f * s.jac[0][b]);
                            }
                        }
                    }
                }
                Stamp::VoltageBranch { volts } => {
                    let br = e.branch.expect("voltage source has a branch unknown");
                    let i = x[br];
                    let mut row = -volts;
                    if let Some(p) = e.terms[0] {
                        residual[p] = residual[p] + i;
                        scale[p] = scale[p].max(i.abs());
                        jac.add(p, br, T::one());
                        jac.add(br, p, T::one());
                        row = row + x[p];
                    }
                    if let Some(m) = e.terms[1] {
                        residual[m] = residual[m] - i;
                        scale[m] = scale[m].max(i.abs());
                        jac.add(m, br, -T::one());
                        jac.add(br, m, -T::one());
                        row = row - x[m];
                    }
                    residual[br] = row;
                    tol[br] = opts.abstol_v + opts.reltol * volts.abs();
                }
            }
        }
        if env.gmin_ground > T::zero() {
            for r in 0..self.n_nodes {
                residual[r] = residual[r] + env.gmin_ground * x[r];
                jac.add(r, r, env.gmin_ground);
            }
        }
        for r in 0..self.n_nodes {
            tol[r] = opts.abstol_i + opts.reltol * scale[r];
        }
        Ok(Assembly { jac, residual, tol })
    }

    fn residual_norm(a: &Assembly<T>) -> T {
        a.residual
            .iter()
            .zip(&a.tol)
            .fold(T::zero(), |m, (r, t)| m.max(r.abs() / *t))
    }

    /// Damped Newton iteration from `x0`.
    ///
    /// Converged when every residual row is within tolerance at an iterate
    /// whose model evaluation is valid, and (for nonlinear systems) the last
    /// update was within tolerance as well.
    pub fn newton(
        &self,
        x0: &[T],
        env: &Env<'_, T>,
        opts: &SolverOptions<T>,
    ) -> Result<(Vec<T>, usize), SolverError> {
        let mut x = x0.to_vec();
        let mut update_ok = false;
        let mut last_norm = T::infinity();
        for iter in 0..=opts.max_newton_iters {
            let (asm, valid) = match self.assemble(&x, env, opts, false) {
                Ok(a) => (a, true),
                Err(DeviceError::Domain(_)) => (self.assemble(&x, env, opts, true)?, false),
                Err(e) => return Err(e.into()),
            };
            last_norm = Self::residual_norm(&asm);
            if iter > 0 && valid && last_norm <= T::one() && (self.linear || update_ok) {
                return Ok((x, iter));
            }
            if iter == opts.max_newton_iters {
                break;
            }
            let Assembly {
                mut jac, residual, ..
            } = asm;
            let mut dx: Vec<T> = residual.iter().map(|r| -*r).collect();
            jac.solve_in_place(&mut dx)
                .map_err(|k| SolverError::SingularMatrix {
                    node: self.unknown_name(k),
                })?;
            if dx.iter().any(|d| !d.is_finite()) {
                break;
            }
            update_ok = true;
            for (k, d) in dx.iter_mut().enumerate() {
                if !self.linear && k < self.n_nodes {
                    *d = d.max(-opts.damping_limit).min(opts.damping_limit);
                } else if k >= self.n_nodes + self.n_branches {
                    *d = d.max(-T::lit(STATE_DAMPING)).min(T::lit(STATE_DAMPING));
                }
                let new = x[k] + *d;
                let abstol = if k < self.n_nodes {
                    opts.abstol_v
                } else if k < self.n_nodes + self.n_branches {
                    opts.abstol_i
                } else {
                    T::lit(STATE_ABSTOL)
                };
                if d.abs() > opts.reltol * x[k].abs().max(new.abs()) + abstol {
                    update_ok = false;
                }
                x[k] = new;
            }
        }
        Err(SolverError::NoConvergence {
            at: None,
            residual: last_norm.to_f64_lossy(),
        })
    }

    /// Newton with the gmin-stepping and source-stepping fallbacks.
    pub fn solve_with_fallbacks(
        &self,
        seed: &[T],
        env: &Env<'_, T>,
        opts: &SolverOptions<T>,
    ) -> Result<(Vec<T>, SolveStats), SolverError> {
        let mut stats = SolveStats::default();
        let direct = match self.newton(seed, env, opts) {
            Ok((x, it)) => {
                stats.newton_iterations += it;
                stats.last_iterations = it;
                return Ok((x, stats));
            }
            Err(e @ (SolverError::Device(_) | SolverError::InvalidInput(_))) => return Err(e),
            Err(e) => e,
        };
        stats.newton_iterations += opts.max_newton_iters;

        // Gmin stepping: geometric ladder of conductances to ground.
        let mut x = seed.to_vec();
        let mut g = opts.gmin_start;
        let ten = T::lit(10.0);
        let gmin_result = loop {
            let stepped = Env {
                gmin_ground: g,
                ..env.clone()
            };
            match self.newton(&x, &stepped, opts) {
                Ok((xn, it)) => {
                    stats.newton_iterations += it;
                    x = xn;
                }
                Err(e) => break Err(e),
            }
            if g <= opts.gmin_final {
                break self.newton(&x, env, opts);
            }
            g = (g / ten).max(opts.gmin_final);
        };
        if let Ok((xn, it)) = gmin_result {
            stats.newton_iterations += it;
            stats.last_iterations = it;
            stats.strategy = Strategy::GminStepping;
            return Ok((xn, stats));
        }

        // Source stepping from the all-zero state.
        let mut x = vec![T::zero(); self.dim()];
        let steps = opts.source_steps;
        let mut failure = None;
        for k in 1..=steps {
            let stepped = Env {
                source_scale: env.source_scale * T::lit(k as f64 / steps as f64),
                ..env.clone()
            };
            match self.newton(&x, &stepped, opts) {
                Ok((xn, it)) => {
                    stats.newton_iterations += it;
                    stats.last_iterations = it;
                    x = xn;
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        match failure {
            None => {
                stats.strategy = Strategy::SourceStepping;
                Ok((x, stats))
            }
            Some(_) => Err(direct),
        }
    }
}
