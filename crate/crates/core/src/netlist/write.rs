use std::fmt::Write as _;

use super::{AnalysisDirective, Circuit, Element, ModelCard};
use crate::devices::{
    DeviceParams, MemristorParams, MosfetParams, Polarity, SourceWaveform, ZenerParams,
};

/// Writes a circuit as netlist text that parses back to an equal circuit.
///
/// Floats use the shortest representation that round-trips exactly.
pub fn serialize_netlist(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* {}", c.title.trim());
    for (name, card) in &c.models {
        let _ = writeln!(out, ".model {name} {}", model_body(card));
    }
    for e in &c.elements {
        let _ = writeln!(out, "{}", element_card(e, c));
    }
    for a in &c.analyses {
        let _ = writeln!(out, "{}", directive_card(a));
    }
    out.push_str(".end\n");
    out
}

fn model_body(card: &ModelCard) -> String {
    match card {
        ModelCard::Mosfet(p) => format!("mosfet {}", mosfet_keys(p, None).join(" ")),
        ModelCard::Zener(p) => format!("zener {}", zener_keys(p, None).join(" ")),
        ModelCard::Memristor(p) => format!("memristor {}", memristor_keys(p, None).join(" ")),
    }
}

fn polarity_name(p: Polarity) -> &'static str {
    match p {
        Polarity::N => "n",
        Polarity::P => "p",
    }
}

/// `key=value` pairs of `p`, restricted to the ones differing from `base`.
fn mosfet_keys(p: &MosfetParams, base: Option<&MosfetParams>) -> Vec<String> {
    let mut keys = Vec::new();
    if base.is_none_or(|b| b.polarity != p.polarity) {
        keys.push(format!("type={}", polarity_name(p.polarity)));
    }
    let fields = [
        ("vth0", p.vth0, base.map(|b| b.vth0)),
        ("kp", p.kprime, base.map(|b| b.kprime)),
        ("wl", p.w_over_l, base.map(|b| b.w_over_l)),
        ("lambda", p.lambda, base.map(|b| b.lambda)),
        ("gamma", p.gamma, base.map(|b| b.gamma)),
        ("phi2", p.phi2, base.map(|b| b.phi2)),
    ];
    push_diff(&mut keys, &fields);
    keys
}

fn zener_keys(p: &ZenerParams, base: Option<&ZenerParams>) -> Vec<String> {
    let mut keys = Vec::new();
    let fields = [
        ("is", p.i_sat, base.map(|b| b.i_sat)),
        ("n", p.n_ideality, base.map(|b| b.n_ideality)),
        ("vt", p.v_thermal, base.map(|b| b.v_thermal)),
        ("vz", p.vz, base.map(|b| b.vz)),
        ("ibv", p.i_bv, base.map(|b| b.i_bv)),
    ];
    push_diff(&mut keys, &fields);
    keys
}

fn memristor_keys(p: &MemristorParams, base: Option<&MemristorParams>) -> Vec<String> {
    let mut keys = Vec::new();
    let fields = [
        ("ron", p.r_on, base.map(|b| b.r_on)),
        ("roff", p.r_off, base.map(|b| b.r_off)),
        ("w0", p.w0, base.map(|b| b.w0)),
        ("k", p.k_drift, base.map(|b| b.k_drift)),
        ("p", p.p_window as f64, base.map(|b| b.p_window as f64)),
    ];
    push_diff(&mut keys, &fields);
    keys
}

fn push_diff(keys: &mut Vec<String>, fields: &[(&str, f64, Option<f64>)]) {
    for &(k, v, b) in fields {
        if b != Some(v) {
            keys.push(format!("{k}={v}"));
        }
    }
}

fn element_card(e: &Element, c: &Circuit) -> String {
    let mut card = format!("{} {}", e.name, e.terminals.join(" "));
    let model = e
        .model
        .as_ref()
        .and_then(|m| c.models.get(m).map(|card| (m, card)));
    let extra: Vec<String> = match &e.params {
        DeviceParams::Resistor { ohms } => vec![format!("{ohms}")],
        DeviceParams::Capacitor { farads } => vec![format!("{farads}")],
        DeviceParams::Source(w) => vec![waveform(w)],
        DeviceParams::Zener(p) => {
            let base = match model {
                Some((_, ModelCard::Zener(b))) => b.clone(),
                _ => ZenerParams::default(),
            };
            zener_keys(p, Some(&base))
        }
        DeviceParams::Mosfet(p) => match model {
            Some((_, ModelCard::Mosfet(b))) => mosfet_keys(p, Some(b)),
            _ => {
                let mut keys = mosfet_keys(p, Some(&MosfetParams::with_polarity(p.polarity)));
                if p.polarity == Polarity::P {
                    keys.insert(0, "type=p".into());
                }
                keys
            }
        },
        DeviceParams::Memristor(p) => {
            let base = match model {
                Some((_, ModelCard::Memristor(b))) => b.clone(),
                _ => MemristorParams::default(),
            };
            memristor_keys(p, Some(&base))
        }
    };
    if let Some((name, _)) = model {
        card.push(' ');
        card.push_str(name);
    }
    for x in extra {
        card.push(' ');
        card.push_str(&x);
    }
    card
}

fn waveform(w: &SourceWaveform) -> String {
    match w {
        SourceWaveform::Dc(v) => format!("dc {v}"),
        SourceWaveform::Pulse {
            v1,
            v2,
            delay,
            rise,
            fall,
            width,
            period,
        } => format!("pulse({v1} {v2} {delay} {rise} {fall} {width} {period})"),
        SourceWaveform::Pwl(points) => {
            let body: Vec<String> = points.iter().map(|(t, v)| format!("{t} {v}")).collect();
            format!("pwl({})", body.join(" "))
        }
    }
}

fn directive_card(a: &AnalysisDirective) -> String {
    match a {
        AnalysisDirective::Op => ".op".into(),
        AnalysisDirective::DcSweep {
            source,
            start,
            stop,
            step,
        } => format!(".dc {source} {start} {stop} {step}"),
        AnalysisDirective::Transient { tstop, dt } => format!(".tran {tstop} {dt}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn divider_round_trip() {
        let c = parse_netlist("V1 1 0 1.0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
        let text = serialize_netlist(&c);
        assert_eq!(parse_netlist(&text).unwrap(), c);
    }

    #[test]
    fn models_and_overrides_round_trip() {
        let text = "* mixed\n\
            .model nch nmos vth0=0.5\n\
            .model zen zener vz=4.2 ibv=2m\n\
            Vin in 0 pulse(0 5 1m 10u 10u 1m 2m)\n\
            Vb b 0 pwl(0 0 1m 1 2m 0.5)\n\
            M1 out in 0 0 nch wl=2.5\n\
            M2 out in b b type=p lambda=0\n\
            D1 0 out zen\n\
            D2 0 b vz=3.3\n\
            XMR1 in out w0=0.1 p=3\n\
            C1 out 0 1n\n\
            .tran 4m 5u\n\
            .op\n";
        let c = parse_netlist(text).unwrap();
        let again = parse_netlist(&serialize_netlist(&c)).unwrap();
        assert_eq!(again, c);
    }
}
