use std::path::Path;

use super::{
    format_number, BuiltinCircuit, CliError, Command, Ctx, DetectorArgs, MethodArg, PgmArg, XorMode,
};
use crate::cells::{
    build_intensity_detector, build_saturation_cell, build_spike_cell, build_xor_circuit,
    extract_band, settled_truth_table, DetectorConfig, XorParams, SWEEP_STEP,
};
use crate::dendrite::{calibrate_xor, input_row, truth_table, xor_model, CalibrationGrid};
use crate::devices::{Method, ZenerParams};
use crate::imaging::{
    apply_detector, gen_gaussian_image, radial_profile, radial_profile_csv, read_pgm, ring_metrics,
    write_pgm, ImageGray, PgmVariant, ResponseLut,
};
use crate::netlist::{parse_netlist, serialize_netlist, AnalysisDirective, Circuit};
use crate::solver::{
    dc_operating_point, dc_sweep, transient, SolveStats, SolverOptions, SweepResult,
    TransientResult,
};

pub(crate) fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<(), CliError> {
    let opts = SolverOptions::default();
    match cmd {
        Command::Op { netlist, out } => {
            let c = read_netlist(netlist)?;
            let op = dc_operating_point::<f64>(&c, &opts)?;
            ctx.absorb(op.stats);
            let mut csv = String::from("node,voltage\n");
            for (n, v) in op.nodes.iter().zip(&op.voltages) {
                csv.push_str(&format!("{n},{}\n", format_number(*v)));
            }
            ctx.emit(out.as_deref(), csv.as_bytes())
        }
        Command::Sweep {
            netlist,
            source,
            from,
            to,
            step,
            out,
        } => {
            let c = read_netlist(netlist)?;
            let directive = c.analyses.iter().find_map(|a| match a {
                AnalysisDirective::DcSweep {
                    source,
                    start,
                    stop,
                    step,
                } => Some((source.clone(), *start, *stop, *step)),
                _ => None,
            });
            let need = |flag: &str| CliError::Usage(format!("no `.dc` line; pass --{flag}"));
            let src = match (source, &directive) {
                (Some(s), _) => s.clone(),
                (None, Some(d)) => d.0.clone(),
                (None, None) => return Err(need("source")),
            };
            let pick =
                |f: &Option<f64>, d: Option<f64>, name: &str| f.or(d).ok_or_else(|| need(name));
            let start = pick(from, directive.as_ref().map(|d| d.1), "from")?;
            let stop = pick(to, directive.as_ref().map(|d| d.2), "to")?;
            let step = pick(step, directive.as_ref().map(|d| d.3), "step")?;
            let s = dc_sweep::<f64>(&c, &src, start, stop, step, &opts)?;
            ctx.absorb(s.stats);
            ctx.emit(out.as_deref(), sweep_csv(&s).as_bytes())
        }
        Command::Tran {
            netlist,
            tstop,
            dt,
            method,
            out,
        } => {
            let c = read_netlist(netlist)?;
            let directive = c.analyses.iter().find_map(|a| match a {
                AnalysisDirective::Transient { tstop, dt } => Some((*tstop, *dt)),
                _ => None,
            });
            let need = |flag: &str| CliError::Usage(format!("no `.tran` line; pass --{flag}"));
            let tstop = tstop
                .or(directive.map(|d| d.0))
                .ok_or_else(|| need("tstop"))?;
            let dt = dt.or(directive.map(|d| d.1)).ok_or_else(|| need("dt"))?;
            let r = transient::<f64>(&c, tstop, dt, method_of(*method), &opts)?;
            ctx.absorb(r.stats);
            ctx.emit(out.as_deref(), tran_csv(&r, None).as_bytes())
        }
        Command::Xor {
            mode,
            theta2,
            eps,
            theta3,
            out,
        } => {
            let m = xor_model(*theta2, *eps, *theta3, 1.0)?;
            match mode {
                XorMode::Behavioral => {
                    let table = truth_table(&m)?;
                    let mut csv = String::from("x1,x2,out\n");
                    for (r, v) in table.iter().enumerate() {
                        let x = input_row(2, r);
                        csv.push_str(&format!("{},{},{v}\n", x[0], x[1]));
                    }
                    ctx.emit(out.as_deref(), csv.as_bytes())
                }
                XorMode::Circuit => {
                    let p = XorParams::default();
                    let c = build_xor_circuit(&p)?;
                    let r = transient::<f64>(&c, p.tstop(), p.dt, Method::Trapezoidal, &opts)?;
                    ctx.absorb(r.stats);
                    ctx.emit(
                        out.as_deref(),
                        tran_csv(&r, Some(&["x1", "x2", "out"])).as_bytes(),
                    )?;
                    let phases = settled_truth_table(&r, &p, "out")?;
                    let logic: Vec<String> = phases
                        .iter()
                        .map(|ph| ph.logic(p.vdd).map_or("?".to_string(), |b| b.to_string()))
                        .collect();
                    ctx.note(&format!("settled: {}", logic.join(",")));
                    Ok(())
                }
            }
        }
        Command::Detector {
            supplies,
            from,
            to,
            step,
            out,
            band,
        } => {
            let cfg = detector_config(supplies)?;
            let c = build_intensity_detector(&cfg)?;
            let s = dc_sweep::<f64>(&c, "vin", *from, *to, *step, &opts)?;
            ctx.absorb(s.stats);
            ctx.emit(out.as_deref(), sweep_csv(&s).as_bytes())?;
            let b = extract_band(&s, "out")?;
            let summary = format!(
                "theta_low,theta_high,height,width\n{},{},{},{}\n",
                format_number(b.theta_low),
                format_number(b.theta_high),
                format_number(b.height),
                format_number(b.width)
            );
            ctx.note(summary.trim_end());
            if let Some(p) = band {
                super::write_atomic(p, summary.as_bytes())?;
                ctx.report.outputs.push(p.clone());
            }
            Ok(())
        }
        Command::GenGaussian {
            size,
            sigma,
            format,
            out,
        } => {
            let sigma = sigma.unwrap_or(*size as f64 / 6.0);
            let img = gen_gaussian_image(*size, sigma)?;
            ctx.emit(out.as_deref(), &write_pgm(&img, variant(*format)))
        }
        Command::Segment {
            image,
            supplies,
            vmin,
            vmax,
            format,
            out,
            metrics,
            profile,
        } => {
            let bytes = std::fs::read(image).map_err(|e| CliError::io(image, e))?;
            let img = read_pgm(&bytes).map_err(|e| CliError::io(image, e))?;
            let cfg = detector_config(supplies)?;
            let (seg, stats) = segment_image(&img, &cfg, *vmin, *vmax)?;
            ctx.absorb(stats);
            ctx.emit(out.as_deref(), &write_pgm(&seg, variant(*format)))?;
            if let Some(p) = profile {
                super::write_atomic(p, radial_profile_csv(&radial_profile(&seg)?).as_bytes())?;
                ctx.report.outputs.push(p.clone());
            }
            if let Some(p) = metrics {
                let m = ring_metrics(&seg)?;
                let mut csv = match std::fs::read_to_string(p) {
                    Ok(s) if !s.is_empty() => s,
                    Ok(_) => String::new(),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
                    Err(e) => return Err(CliError::io(p, e)),
                };
                if csv.is_empty() {
                    csv.push_str("peak_radius,thickness,peak_brightness\n");
                } else if !csv.ends_with('\n') {
                    csv.push('\n');
                }
                csv.push_str(&format!(
                    "{},{},{}\n",
                    format_number(m.peak_radius),
                    format_number(m.thickness),
                    m.peak_brightness
                ));
                super::write_atomic(p, csv.as_bytes())?;
                ctx.report.outputs.push(p.clone());
            }
            Ok(())
        }
        Command::CalibrateXor {
            theta2,
            eps,
            theta3,
            out,
        } => {
            let grid = CalibrationGrid {
                theta2: parse_grid(theta2, "theta2")?,
                epsilon: parse_grid(eps, "eps")?,
                theta3: parse_grid(theta3, "theta3")?,
                logic_high: 1.0,
            };
            let hits = calibrate_xor(&grid);
            let mut csv = String::from("theta2,epsilon,theta3\n");
            for (a, b, c) in &hits {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    format_number(*a),
                    format_number(*b),
                    format_number(*c)
                ));
            }
            ctx.emit(out.as_deref(), csv.as_bytes())?;
            if hits.is_empty() {
                return Err(CliError::Empty("no grid point realizes XOR".into()));
            }
            Ok(())
        }
        Command::Netlist {
            circuit,
            vdd,
            supplies,
            out,
        } => {
            let z = ZenerParams::default();
            let c: Circuit = match circuit {
                BuiltinCircuit::SpikeCell => {
                    build_spike_cell(supplies.w0.unwrap_or(0.5), &z, vdd.unwrap_or(5.0))?
                }
                BuiltinCircuit::SatCell => build_saturation_cell(&z, vdd.unwrap_or(6.0))?,
                BuiltinCircuit::Xor => build_xor_circuit(&XorParams {
                    vdd: vdd.unwrap_or(5.0),
                    ..XorParams::default()
                })?,
                BuiltinCircuit::Detector => build_intensity_detector(&detector_config(supplies)?)?,
            };
            ctx.emit(out.as_deref(), serialize_netlist(&c).as_bytes())
        }
    }
}

fn read_netlist(path: &Path) -> Result<Circuit, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_netlist(&text)?)
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Be => Method::BackwardEuler,
        MethodArg::Trap => Method::Trapezoidal,
    }
}

fn variant(f: PgmArg) -> PgmVariant {
    match f {
        PgmArg::P2 => PgmVariant::P2,
        PgmArg::P5 => PgmVariant::P5,
    }
}

fn sweep_csv(s: &SweepResult) -> String {
    let mut csv = format!("input,{}\n", s.nodes.join(","));
    for r in &s.rows {
        csv.push_str(&format_number(r.input));
        for v in &r.voltages {
            csv.push(',');
            csv.push_str(&format_number(*v));
        }
        csv.push('\n');
    }
    csv
}

/// Waveform CSV of every node, or of the listed ones.
fn tran_csv(r: &TransientResult, only: Option<&[&str]>) -> String {
    let cols: Vec<usize> = match only {
        None => (0..r.nodes.len()).collect(),
        Some(names) => names
            .iter()
            .filter_map(|n| r.nodes.iter().position(|m| m == n))
            .collect(),
    };
    let header: Vec<&str> = cols.iter().map(|k| r.nodes[*k].as_str()).collect();
    let mut csv = format!("t,{}\n", header.join(","));
    for row in &r.rows {
        csv.push_str(&format_number(row.t));
        for k in &cols {
            csv.push(',');
            csv.push_str(&format_number(row.voltages[*k]));
        }
        csv.push('\n');
    }
    csv
}

/// `from:to:step` or a comma-separated list.
fn parse_grid(s: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad --{name} grid `{s}`"));
    let nums = |sep: char| -> Result<Vec<f64>, CliError> {
        s.split(sep)
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    };
    if s.contains(':') {
        let v = nums(':')?;
        if v.len() != 3 || !(v[2] > 0.0) || v[1] < v[0] {
            return Err(bad());
        }
        Ok(CalibrationGrid::linspace(v[0], v[1], v[2]))
    } else {
        nums(',')
    }
}

/// Named configuration (1 unless `--config 2`) with per-flag overrides.
pub fn detector_config(a: &DetectorArgs) -> Result<DetectorConfig, CliError> {
    let mut cfg = match a.config {
        Some(2) => DetectorConfig::config2(),
        _ => DetectorConfig::config1(),
    };
    let pairs = [
        (&mut cfg.vdd1, a.vdd1),
        (&mut cfg.vdd2, a.vdd2),
        (&mut cfg.vss1, a.vss1),
        (&mut cfg.vss2, a.vss2),
        (&mut cfg.bulk_p1, a.bulk_p1),
        (&mut cfg.bulk_n1, a.bulk_n1),
        (&mut cfg.bulk_n2, a.bulk_n2),
        (&mut cfg.w0, a.w0),
    ];
    for (field, flag) in pairs {
        if let Some(v) = flag {
            *field = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Detector transfer curve on a uniform grid covering both the configured
/// sweep and `[vmin, vmax]`.
pub fn detector_lut(
    cfg: &DetectorConfig,
    vmin: f64,
    vmax: f64,
) -> Result<(ResponseLut, SolveStats), CliError> {
    if !(vmin < vmax) || !vmin.is_finite() || !vmax.is_finite() {
        return Err(CliError::Usage(format!(
            "need vmin < vmax, got {vmin} and {vmax}"
        )));
    }
    let lo = vmin.min(0.0);
    let hi = vmax.max(cfg.sweep_stop);
    let n = ((hi - lo) / SWEEP_STEP - 1e-9).ceil().max(1.0);
    let step = (hi - lo) / n;
    let c = build_intensity_detector(cfg)?;
    let s = dc_sweep::<f64>(&c, "vin", lo, hi, step, &SolverOptions::default())?;
    let provenance = format!(
        "detector vdd1={} vdd2={} vss1={} vss2={}",
        cfg.vdd1, cfg.vdd2, cfg.vss1, cfg.vss2
    );
    Ok((ResponseLut::from_sweep(&s, "out", &provenance)?, s.stats))
}

/// Sweeps the detector and maps `img` through its transfer curve.
pub fn segment_image(
    img: &ImageGray,
    cfg: &DetectorConfig,
    vmin: f64,
    vmax: f64,
) -> Result<(ImageGray, SolveStats), CliError> {
    let (lut, stats) = detector_lut(cfg, vmin, vmax)?;
    Ok((apply_detector(img, &lut, vmin, vmax)?, stats))
}
