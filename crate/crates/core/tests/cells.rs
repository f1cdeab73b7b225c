mod common;

use common::{interior_maxima, smooth3};
use dendrite_sim::cells::*;
use dendrite_sim::dendrite::{default_xor_model, f_sat_clamp, truth_table};
use dendrite_sim::devices::ZenerParams;
use dendrite_sim::netlist::{parse_netlist, serialize_netlist, Circuit};
use dendrite_sim::solver::{dc_sweep, transient, Method, SolverOptions, SweepResult};

fn sweep(c: &Circuit, stop: f64) -> SweepResult {
    dc_sweep::<f64>(c, "vin", 0.0, stop, 0.05, &SolverOptions::default()).unwrap()
}

fn xor_table(p: &XorParams) -> Vec<XorPhase> {
    let c = build_xor_circuit(p).unwrap();
    let r = transient::<f64>(
        &c,
        p.tstop(),
        p.dt,
        Method::Trapezoidal,
        &SolverOptions::default(),
    )
    .unwrap();
    settled_truth_table(&r, p, "out").unwrap()
}

#[test]
fn every_builder_round_trips() {
    let z = ZenerParams::default();
    let circuits = [
        build_spike_cell(0.3, &z, 5.0).unwrap(),
        build_saturation_cell(&z, 6.0).unwrap(),
        build_xor_circuit(&XorParams::default()).unwrap(),
        build_intensity_detector(&DetectorConfig::config1()).unwrap(),
        build_intensity_detector(&DetectorConfig::config2()).unwrap(),
    ];
    for c in circuits {
        let text = serialize_netlist(&c);
        assert_eq!(parse_netlist(&text).unwrap(), c, "{text}");
    }
}

#[test]
fn saturation_cell_clamps_at_breakdown() {
    let c = build_saturation_cell(&ZenerParams::default(), 6.0).unwrap();
    let out = sweep(&c, 6.0).column("out").unwrap();
    let peak = out.iter().copied().fold(f64::MIN, f64::max);
    assert!((3.99..=4.41).contains(&peak), "peak {peak}");
    assert!(out[0].abs() <= 0.1);
    for w in out.windows(2) {
        assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn saturation_cell_agrees_with_clamp_unit() {
    let c = build_saturation_cell(&ZenerParams::default(), 6.0).unwrap();
    let s = sweep(&c, 6.0);
    let behavioral: Vec<f64> = s
        .inputs()
        .iter()
        .map(|v| f_sat_clamp(*v, 4.2).unwrap())
        .collect();
    let report = crossvalidate(&s.column("out").unwrap(), &behavioral);
    assert_eq!(report.points, 121);
    assert!(report.fraction() >= 0.95, "{report:?}");
}

#[test]
fn spike_cell_has_one_interior_peak_that_moves_with_state() {
    let z = ZenerParams::default();
    let mut peaks = Vec::new();
    for w0 in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let s = sweep(&build_spike_cell(w0, &z, 5.0).unwrap(), 5.0);
        let y = smooth3(&s.column("out").unwrap());
        let maxima = interior_maxima(&y);
        assert_eq!(maxima.len(), 1, "w0 {w0}: maxima at {maxima:?}");
        peaks.push(s.inputs()[maxima[0]]);
    }
    for w in peaks.windows(2) {
        assert!(w[1] < w[0], "peak positions {peaks:?}");
    }
}

#[test]
fn detector_band_grows_with_second_configuration() {
    let band = |cfg: DetectorConfig| {
        let stop = cfg.sweep_stop;
        extract_band(
            &sweep(&build_intensity_detector(&cfg).unwrap(), stop),
            "out",
        )
        .unwrap()
    };
    let b1 = band(DetectorConfig::config1());
    let b2 = band(DetectorConfig::config2());
    for b in [&b1, &b2] {
        assert!(b.theta_low < b.theta_high && b.height > 0.0);
        assert!(b.theta_low > 0.0 && b.theta_high < 3.0);
    }
    assert!(b2.width > b1.width, "{} vs {}", b2.width, b1.width);
    assert!(b2.height > b1.height, "{} vs {}", b2.height, b1.height);
}

#[test]
fn xor_circuit_settles_to_xor() {
    let p = XorParams::default();
    let table = xor_table(&p);
    let logic: Vec<u8> = table.iter().map(|ph| ph.logic(p.vdd).unwrap()).collect();
    assert_eq!(logic, vec![0, 1, 1, 0], "{table:?}");
    for ph in &table {
        let want_high = ph.inputs[0] != ph.inputs[1];
        if want_high {
            assert!(ph.settled > 0.7 * p.vdd);
        } else {
            assert!(ph.settled < 0.3 * p.vdd);
        }
    }
    let behavioral = truth_table(&default_xor_model::<f64>()).unwrap();
    assert_eq!(crossvalidate_xor(&logic, &behavioral).agree, 4);
}

#[test]
fn xor_circuit_is_symmetric_in_its_inputs() {
    let p = XorParams::default();
    let q = XorParams {
        swap_inputs: true,
        ..XorParams::default()
    };
    let by_inputs = |t: Vec<XorPhase>| {
        let mut v: Vec<([u8; 2], Option<u8>)> =
            t.iter().map(|ph| (ph.inputs, ph.logic(p.vdd))).collect();
        v.sort();
        v
    };
    assert_eq!(by_inputs(xor_table(&p)), by_inputs(xor_table(&q)));
}

#[test]
fn builders_reject_bad_parameters() {
    let z = ZenerParams::default();
    assert!(build_spike_cell(1.5, &z, 5.0).is_err());
    assert!(build_saturation_cell(&z, -1.0).is_err());
    assert!(build_xor_circuit(&XorParams {
        vdd: 0.0,
        ..XorParams::default()
    })
    .is_err());
    assert!(build_intensity_detector(&DetectorConfig {
        vdd1: 0.0,
        ..DetectorConfig::config1()
    })
    .is_err());
}
