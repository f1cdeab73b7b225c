use super::{symmetric_wl_p, Builder, CellError};
use crate::devices::{DeviceParams, MemristorParams, SourceWaveform, ZenerParams};
use crate::netlist::{AnalysisDirective, Circuit, Element, ModelCard};
use crate::solver::TransientResult;

/// Component values and stimulus of the XOR circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct XorParams {
    pub vdd: f64,
    /// State of every summing and averaging memristor.
    pub w0: f64,
    pub zener: ZenerParams,
    /// PMOS W/L of the mid-rail input inverters (NMOS W/L is 1).
    pub wl_p_mid: f64,
    /// PMOS W/L of the high-threshold branch and output inverters.
    pub wl_p_high: f64,
    /// Output load, F. Zero leaves it out.
    pub load_farads: f64,
    /// Duration of each input phase, s.
    pub phase: f64,
    pub rise: f64,
    pub dt: f64,
    /// Exchange the two input waveforms.
    pub swap_inputs: bool,
}

impl Default for XorParams {
    fn default() -> Self {
        XorParams {
            vdd: 5.0,
            w0: 0.5,
            zener: ZenerParams::default(),
            wl_p_mid: symmetric_wl_p(),
            wl_p_high: 31.0,
            load_farads: 10e-12,
            phase: 1e-3,
            rise: 10e-6,
            dt: 5e-6,
            swap_inputs: false,
        }
    }
}

impl XorParams {
    pub fn tstop(&self) -> f64 {
        4.0 * self.phase
    }

    pub fn validate(&self) -> Result<(), CellError> {
        let bad = |m: String| Err(CellError::InvalidParams(m));
        for (name, v) in [
            ("vdd", self.vdd),
            ("wl_p_mid", self.wl_p_mid),
            ("wl_p_high", self.wl_p_high),
            ("phase", self.phase),
            ("rise", self.rise),
            ("dt", self.dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.load_farads >= 0.0) {
            return bad(format!(
                "load must be non-negative, got {}",
                self.load_farads
            ));
        }
        if !(0.0..=1.0).contains(&self.w0) {
            return bad(format!("w0 {} outside [0, 1]", self.w0));
        }
        if self.rise >= 0.5 * self.phase || self.dt > 0.1 * self.phase {
            return bad("rise must be under half a phase and dt under a tenth".into());
        }
        self.zener
            .validate()
            .map_err(|e| CellError::InvalidParams(format!("zener: {e}")))
    }

    /// Inputs `(x1, x2)` of phase `k`: `(0,0), (0,1), (1,0), (1,1)`.
    pub fn phase_inputs(k: usize) -> [u8; 2] {
        [((k >> 1) & 1) as u8, (k & 1) as u8]
    }
}

/// Two-branch XOR dendrite circuit.
///
/// `inv1`/`inv2` invert `x2`/`x1`. Branch A sums `x1` and `¬x2` through two
/// memristors into node `a`, branch B sums `¬x1` and `x2` into `b`; Zeners
/// clamp both. High-threshold inverters `inv3`/`inv4` fire low only when both
/// branch inputs are high. Two memristors average their outputs into `c`,
/// and the high-threshold `inv5` drives `out`.
///
/// Inputs run through four phases `(0,0), (0,1), (1,0), (1,1)` of
/// `phase` seconds; `.tran 4·phase dt` is attached.
pub fn build_xor_circuit(p: &XorParams) -> Result<Circuit, CellError> {
    p.validate()?;
    let mut b = Builder::new("dendrite XOR neuron");
    b.cmos_models()
        .model("zen", ModelCard::Zener(p.zener.clone()))
        .model("mem", ModelCard::Memristor(MemristorParams::default()));
    let pulse = |delay: f64, high: f64, period: f64| {
        DeviceParams::Source(SourceWaveform::Pulse {
            v1: 0.0,
            v2: p.vdd,
            delay,
            rise: p.rise,
            fall: p.rise,
            width: high - p.rise,
            period,
        })
    };
    let mut x1 = pulse(2.0 * p.phase, 2.0 * p.phase, 4.0 * p.phase);
    let mut x2 = pulse(p.phase, p.phase, 2.0 * p.phase);
    if p.swap_inputs {
        std::mem::swap(&mut x1, &mut x2);
    }
    b.dc_source("vdd", "vdd", p.vdd)?
        .add(Element::new("vx1", &["x1", "0"], x1))?
        .add(Element::new("vx2", &["x2", "0"], x2))?
        .inverter("inv1", "x2", "nx2", "vdd", "0", p.wl_p_mid, 1.0)?
        .inverter("inv2", "x1", "nx1", "vdd", "0", p.wl_p_mid, 1.0)?
        .memristor("xmr_a1", "x1", "a", p.w0)?
        .memristor("xmr_a2", "nx2", "a", p.w0)?
        .zener("d_a", "0", "a")?
        .memristor("xmr_b1", "nx1", "b", p.w0)?
        .memristor("xmr_b2", "x2", "b", p.w0)?
        .zener("d_b", "0", "b")?
        .inverter("inv3", "a", "sa", "vdd", "0", p.wl_p_high, 1.0)?
        .inverter("inv4", "b", "sb", "vdd", "0", p.wl_p_high, 1.0)?
        .memristor("xmr_c1", "sa", "c", p.w0)?
        .memristor("xmr_c2", "sb", "c", p.w0)?
        .inverter("inv5", "c", "out", "vdd", "0", p.wl_p_high, 1.0)?;
    if p.load_farads > 0.0 {
        b.add(Element::new(
            "cload",
            &["out", "0"],
            DeviceParams::Capacitor {
                farads: p.load_farads,
            },
        ))?;
    }
    b.c.analyses.push(AnalysisDirective::Transient {
        tstop: p.tstop(),
        dt: p.dt,
    });
    b.finish()
}

/// Output of one input phase averaged over the phase's last 20%.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XorPhase {
    pub inputs: [u8; 2],
    pub settled: f64,
}

impl XorPhase {
    /// `Some(1)` above 70% of `vdd`, `Some(0)` below 30%, `None` in between.
    pub fn logic(&self, vdd: f64) -> Option<u8> {
        if self.settled > 0.7 * vdd {
            Some(1)
        } else if self.settled < 0.3 * vdd {
            Some(0)
        } else {
            None
        }
    }
}

/// Settled output of every phase. With swapped inputs the reported inputs
/// are swapped as well.
pub fn settled_truth_table(
    r: &TransientResult,
    p: &XorParams,
    output: &str,
) -> Result<Vec<XorPhase>, CellError> {
    let out = r
        .column(output)
        .ok_or_else(|| CellError::MissingNode(output.to_string()))?;
    let times = r.times();
    Ok((0..4)
        .map(|k| {
            let end = (k + 1) as f64 * p.phase;
            let start = end - 0.2 * p.phase;
            let window: Vec<f64> = times
                .iter()
                .zip(&out)
                .filter(|(t, _)| **t >= start - 1e-12 && **t <= end + 1e-12)
                .map(|(_, v)| *v)
                .collect();
            let mut inputs = XorParams::phase_inputs(k);
            if p.swap_inputs {
                inputs.swap(0, 1);
            }
            XorPhase {
                inputs,
                settled: window.iter().sum::<f64>() / window.len().max(1) as f64,
            }
        })
        .collect())
}
