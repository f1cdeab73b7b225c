//! Netlist builders for the dendrite cells, the XOR neuron and the
//! intensity-band detector, plus band extraction from DC sweeps.
//!
//! Every builder attaches the analysis its cell is meant for (`.dc` for the
//! cells and the detector, `.tran` for XOR) and names its models `zen`,
//! `nch`, `pch` and `mem`.

mod band;
mod xor;

pub use band::{
    crossvalidate, crossvalidate_xor, extract_band, median3, BandResponse, CrossValidation,
};
pub use xor::{build_xor_circuit, settled_truth_table, XorParams, XorPhase};

use thiserror::Error;

use crate::devices::{DeviceParams, MemristorParams, MosfetParams, SourceWaveform, ZenerParams};
use crate::netlist::{AnalysisDirective, Circuit, Element, ModelCard, NetlistError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("invalid cell parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("response is not unimodal: {crossings} half-height crossings")]
    NotUnimodal { crossings: usize },
    #[error("no band: peak {peak} is below twice the baseline {baseline}")]
    NoBand { peak: f64, baseline: f64 },
    #[error("output node `{0}` not in sweep")]
    MissingNode(String),
}

/// Sweep step used by the cell and detector builders, V.
pub const SWEEP_STEP: f64 = 0.05;

pub(crate) struct Builder {
    pub c: Circuit,
}

impl Builder {
    pub fn new(title: &str) -> Self {
        Builder {
            c: Circuit::new(title),
        }
    }

    pub fn model(&mut self, name: &str, card: ModelCard) -> &mut Self {
        self.c.add_model(name, card);
        self
    }

    pub fn add(&mut self, e: Element) -> Result<&mut Self, CellError> {
        self.c.add(e)?;
        Ok(self)
    }

    pub fn dc_source(&mut self, name: &str, p: &str, volts: f64) -> Result<&mut Self, CellError> {
        self.add(Element::new(
            name,
            &[p, "0"],
            DeviceParams::Source(SourceWaveform::Dc(volts)),
        ))
    }

    pub fn resistor(
        &mut self,
        name: &str,
        a: &str,
        b: &str,
        ohms: f64,
    ) -> Result<&mut Self, CellError> {
        self.add(Element::new(name, &[a, b], DeviceParams::Resistor { ohms }))
    }

    /// Memristor from the `mem` card with its state overridden to `w0`.
    pub fn memristor(
        &mut self,
        name: &str,
        a: &str,
        b: &str,
        w0: f64,
    ) -> Result<&mut Self, CellError> {
        let p = match self.c.models.get("mem") {
            Some(ModelCard::Memristor(p)) => p.clone(),
            _ => MemristorParams::default(),
        };
        self.add(
            Element::new(name, &[a, b], DeviceParams::Memristor(p.with_w0(w0))).with_model("mem"),
        )
    }

    /// Zener from the `zen` card, anode first.
    pub fn zener(
        &mut self,
        name: &str,
        anode: &str,
        cathode: &str,
    ) -> Result<&mut Self, CellError> {
        let p = match self.c.models.get("zen") {
            Some(ModelCard::Zener(p)) => p.clone(),
            _ => ZenerParams::default(),
        };
        self.add(Element::new(name, &[anode, cathode], DeviceParams::Zener(p)).with_model("zen"))
    }

    /// MOSFET from `model` with W/L overridden.
    #[allow(clippy::too_many_arguments)]
    pub fn mosfet(
        &mut self,
        name: &str,
        d: &str,
        g: &str,
        s: &str,
        b: &str,
        model: &str,
        wl: f64,
    ) -> Result<&mut Self, CellError> {
        let p = match self.c.models.get(model) {
            Some(ModelCard::Mosfet(p)) => p.clone(),
            _ => {
                return Err(CellError::InvalidParams(format!(
                    "no MOSFET model `{model}`"
                )))
            }
        };
        self.add(
            Element::new(name, &[d, g, s, b], DeviceParams::Mosfet(p.with_wl(wl)))
                .with_model(model),
        )
    }

    /// CMOS inverter `mp_<tag>` / `mn_<tag>` between `vdd` and `vss` with
    /// bulks tied to the supplies.
    #[allow(clippy::too_many_arguments)]
    pub fn inverter(
        &mut self,
        tag: &str,
        input: &str,
        output: &str,
        vdd: &str,
        vss: &str,
        wl_p: f64,
        wl_n: f64,
    ) -> Result<&mut Self, CellError> {
        self.mosfet(&format!("mp_{tag}"), output, input, vdd, vdd, "pch", wl_p)?
            .mosfet(&format!("mn_{tag}"), output, input, vss, vss, "nch", wl_n)
    }

    pub fn cmos_models(&mut self) -> &mut Self {
        self.model("nch", ModelCard::Mosfet(MosfetParams::nmos()))
            .model("pch", ModelCard::Mosfet(MosfetParams::pmos()))
    }

    pub fn finish(self) -> Result<Circuit, CellError> {
        self.c.validate()?;
        Ok(self.c)
    }
}

fn check_zener(z: &ZenerParams) -> Result<(), CellError> {
    z.validate()
        .map_err(|e| CellError::InvalidParams(format!("zener: {e}")))
}

/// W/L ratio of a PMOS that matches a unit NMOS, putting the inverter
/// threshold at mid-rail.
pub fn symmetric_wl_p() -> f64 {
    MosfetParams::<f64>::nmos().kprime / MosfetParams::<f64>::pmos().kprime
}

/// Pull-up from the input to the output of the spike cell, Ω.
const SPIKE_LOAD_OHMS: f64 = 50e3;
/// Gate divider of the spike cell: input → top → memristor → gate → bottom → 0.
const SPIKE_TOP_OHMS: f64 = 10e3;
const SPIKE_BOTTOM_OHMS: f64 = 18e3;
/// Pull-down W/L of the spike cell.
const SPIKE_WL_N: f64 = 4.0;

/// Dendrite spike cell.
///
/// The input drives the output through a 50 kΩ pull-up, which an NMOS
/// pull-down turns into an inverter stage. A divider of fixed resistors
/// around the memristor feeds a fraction of the input to the gate: the
/// output follows the input until the gate reaches the NMOS threshold and
/// then falls. The memristor state sets that input threshold (`w0 = 1`, low
/// resistance, fires earliest) and the Zener across the output bounds the
/// height of the spike.
///
/// Nodes: `in`, `d`, `g`, `out`. Sweep: `.dc vin 0 vdd 0.05`.
pub fn build_spike_cell(w0: f64, zener: &ZenerParams, vdd: f64) -> Result<Circuit, CellError> {
    check_zener(zener)?;
    if !(0.0..=1.0).contains(&w0) {
        return Err(CellError::InvalidParams(format!("w0 {w0} outside [0, 1]")));
    }
    if !(vdd > 0.0) {
        return Err(CellError::InvalidParams(format!(
            "vdd must be positive, got {vdd}"
        )));
    }
    let mut b = Builder::new("dendrite spike cell");
    b.cmos_models()
        .model("zen", ModelCard::Zener(zener.clone()))
        .model("mem", ModelCard::Memristor(MemristorParams::default()));
    b.dc_source("vin", "in", 0.0)?
        .resistor("rt", "in", "d", SPIKE_TOP_OHMS)?
        .memristor("xmr1", "d", "g", w0)?
        .resistor("rb", "g", "0", SPIKE_BOTTOM_OHMS)?
        .resistor("rl", "in", "out", SPIKE_LOAD_OHMS)?
        .mosfet("mn1", "out", "g", "0", "0", "nch", SPIKE_WL_N)?
        .zener("d1", "0", "out")?;
    b.c.analyses.push(AnalysisDirective::DcSweep {
        source: "vin".into(),
        start: 0.0,
        stop: vdd,
        step: SWEEP_STEP,
    });
    b.finish()
}

/// Dendrite saturation cell: input → memristor → output, Zener from ground
/// to the output. Below breakdown the output follows the input; above it the
/// Zener holds the output near its breakdown voltage.
///
/// Nodes: `in`, `out`. Sweep: `.dc vin 0 vdd 0.05`.
pub fn build_saturation_cell(zener: &ZenerParams, vdd: f64) -> Result<Circuit, CellError> {
    check_zener(zener)?;
    if !(vdd > 0.0) {
        return Err(CellError::InvalidParams(format!(
            "vdd must be positive, got {vdd}"
        )));
    }
    let mut b = Builder::new("dendrite saturation cell");
    b.model("zen", ModelCard::Zener(zener.clone()))
        .model("mem", ModelCard::Memristor(MemristorParams::default()));
    b.dc_source("vin", "in", 0.0)?
        .memristor("xmr1", "in", "out", 0.5)?
        .zener("d1", "0", "out")?;
    b.c.analyses.push(AnalysisDirective::DcSweep {
        source: "vin".into(),
        start: 0.0,
        stop: vdd,
        step: SWEEP_STEP,
    });
    b.finish()
}

/// Supplies, bulk biases and stage parameters of the intensity detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub vdd1: f64,
    pub vdd2: f64,
    pub vss1: f64,
    pub vss2: f64,
    pub bulk_p1: f64,
    pub bulk_n1: f64,
    pub bulk_n2: f64,
    /// State of the memristor loading the first stage.
    pub w0: f64,
    pub zener_model: String,
    pub zener: ZenerParams,
    /// Input sweep range, V.
    pub sweep_stop: f64,
}

impl DetectorConfig {
    /// 1.6 V supplies, `vss2 = 0.6 V`, bulks at 1 V.
    pub fn config1() -> Self {
        DetectorConfig {
            vdd1: 1.6,
            vdd2: 1.6,
            vss1: 1.6,
            vss2: 0.6,
            bulk_p1: 1.0,
            bulk_n1: 1.0,
            bulk_n2: 1.0,
            w0: 0.5,
            zener_model: "zen".into(),
            zener: ZenerParams::default(),
            sweep_stop: 3.0,
        }
    }

    /// `config1` with `vdd1 = vss1 = 1.9 V` and `vdd2 = 2.6 V`.
    pub fn config2() -> Self {
        DetectorConfig {
            vdd1: 1.9,
            vss1: 1.9,
            vdd2: 2.6,
            ..Self::config1()
        }
    }

    pub fn validate(&self) -> Result<(), CellError> {
        let bad = |m: String| Err(CellError::InvalidParams(m));
        if !(self.vdd1 > 0.0 && self.vdd2 > 0.0) {
            return bad(format!(
                "supplies must be positive: vdd1 {} vdd2 {}",
                self.vdd1, self.vdd2
            ));
        }
        let all = [
            self.vss1,
            self.vss2,
            self.bulk_p1,
            self.bulk_n1,
            self.bulk_n2,
            self.sweep_stop,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("detector voltages must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.w0) {
            return bad(format!("w0 {} outside [0, 1]", self.w0));
        }
        if !(self.sweep_stop > 0.0) {
            return bad(format!(
                "sweep stop must be positive, got {}",
                self.sweep_stop
            ));
        }
        if self.zener_model.is_empty() || self.zener_model.contains(char::is_whitespace) {
            return bad(format!("bad zener model name `{}`", self.zener_model));
        }
        check_zener(&self.zener)
    }
}

/// Surface potential of the first-stage PMOS card. Its bulk sits up to 0.9 V
/// below its source in the second supply configuration, which the default
/// 0.7 V would not admit.
const DETECTOR_PMOS_PHI2: f64 = 1.0;
/// First-stage W/L (PMOS, NMOS) and output inverter W/L (PMOS, NMOS).
const DETECTOR_WL: [f64; 4] = [4.0, 4.0, 9.0, 2.0];

/// Intensity-band detector.
///
/// `mp1` pulls the first-stage node `y` towards `vdd1` while the input is
/// low; `mn1`, with its drain on `vss1`, follows the input once it is high.
/// In between neither conducts and the memristor to ground drags `y` down,
/// giving an inverted spike; the Zener bounds `y`. The second inverter
/// (`mp2`, `mn2`, supplies `vdd2`/`vss2`) turns the dip into a band.
///
/// Nodes: `in`, `y`, `out`, plus supply and bulk nodes. Sweep:
/// `.dc vin 0 sweep_stop 0.05`.
pub fn build_intensity_detector(cfg: &DetectorConfig) -> Result<Circuit, CellError> {
    cfg.validate()?;
    let mut b = Builder::new("intensity band detector");
    let zen = cfg.zener_model.to_ascii_lowercase();
    b.cmos_models()
        .model(
            "pch1",
            ModelCard::Mosfet(MosfetParams {
                phi2: DETECTOR_PMOS_PHI2,
                ..MosfetParams::pmos()
            }),
        )
        .model(&zen, ModelCard::Zener(cfg.zener.clone()))
        .model("mem", ModelCard::Memristor(MemristorParams::default()));
    b.dc_source("vin", "in", 0.0)?
        .dc_source("vdd1", "vdd1", cfg.vdd1)?
        .dc_source("vss1", "vss1", cfg.vss1)?
        .dc_source("vdd2", "vdd2", cfg.vdd2)?
        .dc_source("vss2", "vss2", cfg.vss2)?
        .dc_source("vbp1", "bp1", cfg.bulk_p1)?
        .dc_source("vbn1", "bn1", cfg.bulk_n1)?
        .dc_source("vbn2", "bn2", cfg.bulk_n2)?
        .mosfet("mp1", "y", "in", "vdd1", "bp1", "pch1", DETECTOR_WL[0])?
        .mosfet("mn1", "vss1", "in", "y", "bn1", "nch", DETECTOR_WL[1])?
        .memristor("xmr1", "y", "0", cfg.w0)?;
    b.add(
        Element::new("d1", &["0", "y"], DeviceParams::Zener(cfg.zener.clone())).with_model(&zen),
    )?;
    b.mosfet("mp2", "out", "y", "vdd2", "vdd2", "pch", DETECTOR_WL[2])?
        .mosfet("mn2", "out", "y", "vss2", "bn2", "nch", DETECTOR_WL[3])?;
    b.c.analyses.push(AnalysisDirective::DcSweep {
        source: "vin".into(),
        start: 0.0,
        stop: cfg.sweep_stop,
        step: SWEEP_STEP,
    });
    b.finish()
}
