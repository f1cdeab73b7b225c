use super::{
    number::parse_number, AnalysisDirective, Circuit, Element, ElementKind, ModelCard, NetlistError,
};
use crate::devices::{
    DeviceParams, MemristorParams, MosfetParams, Polarity, SourceWaveform, ZenerParams,
};

struct Card {
    line: usize,
    tokens: Vec<String>,
}

/// Parses netlist text into a [`Circuit`].
///
/// The first line is the title when it starts with `*` or when its first word
/// holds no digit (`Divider test`); otherwise it is read as an ordinary card
/// and the title is empty.
pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    let (title, cards) = split_cards(text);
    let mut circuit = Circuit::new(title);

    // Model cards may appear anywhere; resolve them before elements.
    for card in cards.iter().filter(|c| c.tokens[0] == ".model") {
        let (name, model) = parse_model(card)?;
        circuit.add_model(&name, model);
    }

    for card in &cards {
        let head = card.tokens[0].as_str();
        if head.starts_with('.') {
            match head {
                ".model" => {}
                ".end" => break,
                _ => {
                    let directive = parse_directive(card)?;
                    circuit.analyses.push(directive);
                }
            }
            continue;
        }
        let element = parse_element(card, &circuit)?;
        circuit.add_at(element, card.line)?;
    }

    for (card, directive) in cards
        .iter()
        .filter(|c| {
            c.tokens[0].starts_with('.') && !matches!(c.tokens[0].as_str(), ".model" | ".end")
        })
        .zip(&circuit.analyses)
    {
        if let AnalysisDirective::DcSweep { source, .. } = directive {
            let is_source = circuit
                .element(source)
                .is_some_and(|e| e.kind() == ElementKind::VoltageSource);
            if !is_source {
                return Err(NetlistError::InvalidDirective {
                    line: card.line,
                    message: format!("sweep source `{source}` is not a voltage source"),
                });
            }
        }
    }

    if circuit.elements.is_empty() {
        return Err(NetlistError::EmptyCircuit);
    }
    Ok(circuit)
}

fn split_cards(text: &str) -> (String, Vec<Card>) {
    let mut lines = text.lines().enumerate().peekable();
    let mut title = String::new();
    if let Some(&(_, first)) = lines.peek() {
        let trimmed = first.trim();
        let first_word = trimmed.split_whitespace().next().unwrap_or("");
        if let Some(rest) = trimmed.strip_prefix('*') {
            title = rest.trim().to_string();
            lines.next();
        } else if !first_word.starts_with('.') && !first_word.bytes().any(|b| b.is_ascii_digit()) {
            title = trimmed.to_string();
            lines.next();
        }
    }

    let mut cards: Vec<Card> = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('+') {
            if let Some(last) = cards.last_mut() {
                last.tokens.extend(tokenize(rest));
            }
            continue;
        }
        let tokens = tokenize(line);
        if !tokens.is_empty() {
            cards.push(Card {
                line: idx + 1,
                tokens,
            });
        }
    }
    (title, cards)
}

fn tokenize(line: &str) -> Vec<String> {
    let spaced: String = line
        .to_ascii_lowercase()
        .chars()
        .map(|c| match c {
            '(' | ')' | ',' => ' ',
            c => c,
        })
        .collect();
    let raw: Vec<&str> = spaced.split_whitespace().collect();
    // Re-join `key = value` written with spaces around the `=`.
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let t = raw[i];
        if t == "=" && !out.is_empty() && i + 1 < raw.len() {
            let last = out.pop().unwrap();
            out.push(format!("{last}={}", raw[i + 1]));
            i += 2;
        } else if t.ends_with('=') && i + 1 < raw.len() {
            out.push(format!("{t}{}", raw[i + 1]));
            i += 2;
        } else if t.starts_with('=') && !out.is_empty() {
            let last = out.pop().unwrap();
            out.push(format!("{last}{t}"));
            i += 1;
        } else {
            out.push(t.to_string());
            i += 1;
        }
    }
    out
}

fn number(token: &str, line: usize) -> Result<f64, NetlistError> {
    parse_number(token).ok_or_else(|| NetlistError::MalformedNumber {
        line,
        token: token.to_string(),
    })
}

fn arity_err(card: &Card, expected: &str) -> NetlistError {
    NetlistError::ArityError {
        line: card.line,
        name: card.tokens[0].clone(),
        expected: expected.to_string(),
        found: card.tokens.len() - 1,
    }
}

fn invalid(line: usize, message: String) -> NetlistError {
    NetlistError::InvalidParameter { line, message }
}

fn parse_directive(card: &Card) -> Result<AnalysisDirective, NetlistError> {
    let args = &card.tokens[1..];
    let directive = match card.tokens[0].as_str() {
        ".op" => {
            if !args.is_empty() {
                return Err(arity_err(card, "0"));
            }
            AnalysisDirective::Op
        }
        ".dc" => {
            if args.len() != 4 {
                return Err(arity_err(card, "4"));
            }
            AnalysisDirective::DcSweep {
                source: args[0].clone(),
                start: number(&args[1], card.line)?,
                stop: number(&args[2], card.line)?,
                step: number(&args[3], card.line)?,
            }
        }
        ".tran" => {
            if args.len() != 2 {
                return Err(arity_err(card, "2"));
            }
            AnalysisDirective::Transient {
                tstop: number(&args[0], card.line)?,
                dt: number(&args[1], card.line)?,
            }
        }
        other => {
            return Err(NetlistError::InvalidDirective {
                line: card.line,
                message: format!("unsupported directive `{other}`"),
            })
        }
    };
    directive
        .validate()
        .map_err(|message| NetlistError::InvalidDirective {
            line: card.line,
            message,
        })?;
    Ok(directive)
}

fn key_values(card: &Card, tokens: &[String]) -> Result<Vec<(String, String)>, NetlistError> {
    tokens
        .iter()
        .map(|t| match t.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
            _ => Err(invalid(card.line, format!("expected key=value, got `{t}`"))),
        })
        .collect()
}

fn parse_model(card: &Card) -> Result<(String, ModelCard), NetlistError> {
    if card.tokens.len() < 3 {
        return Err(arity_err(card, "at least 2"));
    }
    let name = card.tokens[1].clone();
    let kv = key_values(card, &card.tokens[3..])?;
    let model = match card.tokens[2].as_str() {
        kind @ ("mosfet" | "nmos" | "pmos") => {
            let mut polarity = match kind {
                "pmos" => Polarity::P,
                _ => Polarity::N,
            };
            if let Some((_, v)) = kv.iter().find(|(k, _)| k == "type") {
                polarity = parse_polarity(v, card.line)?;
            }
            let mut p = MosfetParams::with_polarity(polarity);
            for (k, v) in &kv {
                apply_mosfet(&mut p, k, v, card.line)?;
            }
            ModelCard::Mosfet(p)
        }
        "zener" => {
            let mut p = ZenerParams::default();
            for (k, v) in &kv {
                apply_zener(&mut p, k, v, card.line)?;
            }
            ModelCard::Zener(p)
        }
        "memristor" => {
            let mut p = MemristorParams::default();
            for (k, v) in &kv {
                apply_memristor(&mut p, k, v, card.line)?;
            }
            ModelCard::Memristor(p)
        }
        other => {
            return Err(invalid(
                card.line,
                format!("unknown model kind `{other}` for `{name}`"),
            ))
        }
    };
    model
        .params()
        .validate()
        .map_err(|e| invalid(card.line, format!("model {name}: {e}")))?;
    Ok((name, model))
}

fn parse_polarity(v: &str, line: usize) -> Result<Polarity, NetlistError> {
    match v {
        "n" | "nmos" => Ok(Polarity::N),
        "p" | "pmos" => Ok(Polarity::P),
        other => Err(invalid(
            line,
            format!("mosfet type must be n or p, got `{other}`"),
        )),
    }
}

fn apply_mosfet(p: &mut MosfetParams, k: &str, v: &str, line: usize) -> Result<(), NetlistError> {
    if k == "type" {
        p.polarity = parse_polarity(v, line)?;
        return Ok(());
    }
    let x = number(v, line)?;
    match k {
        "vth0" => p.vth0 = x,
        "kp" => p.kprime = x,
        "wl" => p.w_over_l = x,
        "lambda" => p.lambda = x,
        "gamma" => p.gamma = x,
        "phi2" => p.phi2 = x,
        other => return Err(invalid(line, format!("unknown mosfet parameter `{other}`"))),
    }
    Ok(())
}

fn apply_zener(p: &mut ZenerParams, k: &str, v: &str, line: usize) -> Result<(), NetlistError> {
    let x = number(v, line)?;
    match k {
        "is" => p.i_sat = x,
        "n" => p.n_ideality = x,
        "vt" => p.v_thermal = x,
        "vz" => p.vz = x,
        "ibv" => p.i_bv = x,
        other => return Err(invalid(line, format!("unknown zener parameter `{other}`"))),
    }
    Ok(())
}

fn apply_memristor(
    p: &mut MemristorParams,
    k: &str,
    v: &str,
    line: usize,
) -> Result<(), NetlistError> {
    let x = number(v, line)?;
    match k {
        "ron" => p.r_on = x,
        "roff" => p.r_off = x,
        "w0" => p.w0 = x,
        "k" => p.k_drift = x,
        "p" => {
            if x.fract() != 0.0 || !(1.0..=64.0).contains(&x) {
                return Err(invalid(
                    line,
                    format!("window exponent must be an integer in [1, 64], got {v}"),
                ));
            }
            p.p_window = x as u32;
        }
        other => {
            return Err(invalid(
                line,
                format!("unknown memristor parameter `{other}`"),
            ))
        }
    }
    Ok(())
}

fn parse_element(card: &Card, circuit: &Circuit) -> Result<Element, NetlistError> {
    let name = card.tokens[0].clone();
    let kind = ElementKind::from_name(&name).ok_or_else(|| NetlistError::UnknownElementKind {
        line: card.line,
        name: name.clone(),
    })?;
    let arity = kind.arity();
    if card.tokens.len() < 1 + arity {
        return Err(arity_err(card, &format!("at least {arity}")));
    }
    let terminals: Vec<String> = card.tokens[1..=arity].to_vec();
    let rest = &card.tokens[1 + arity..];
    let line = card.line;

    let mut model_name = None;
    let params = match kind {
        ElementKind::Resistor | ElementKind::Capacitor => {
            if rest.len() != 1 {
                return Err(arity_err(card, &format!("{}", arity + 1)));
            }
            let x = number(&rest[0], line)?;
            if kind == ElementKind::Resistor {
                DeviceParams::Resistor { ohms: x }
            } else {
                DeviceParams::Capacitor { farads: x }
            }
        }
        ElementKind::VoltageSource => DeviceParams::Source(parse_waveform(card, rest)?),
        ElementKind::Zener | ElementKind::Mosfet | ElementKind::Memristor => {
            let (model, kv_tokens) = match rest.first() {
                Some(t) if !t.contains('=') => (Some(t.clone()), &rest[1..]),
                _ => (None, rest),
            };
            let kv = key_values(card, kv_tokens)?;
            let base = match &model {
                Some(m) => {
                    let card_params =
                        circuit
                            .models
                            .get(m)
                            .ok_or_else(|| NetlistError::UnknownModel {
                                line,
                                name: m.clone(),
                            })?;
                    let params = card_params.params();
                    if ElementKind::of(&params) != kind {
                        return Err(invalid(
                            line,
                            format!(
                                "model `{m}` is a {} model, not usable by `{name}`",
                                card_params.kind_name()
                            ),
                        ));
                    }
                    params
                }
                None => match kind {
                    ElementKind::Zener => DeviceParams::Zener(ZenerParams::default()),
                    ElementKind::Memristor => DeviceParams::Memristor(MemristorParams::default()),
                    _ => {
                        let polarity = match kv.iter().find(|(k, _)| k == "type") {
                            Some((_, v)) => parse_polarity(v, line)?,
                            None => Polarity::N,
                        };
                        DeviceParams::Mosfet(MosfetParams::with_polarity(polarity))
                    }
                },
            };
            model_name = model;
            let mut params = base;
            for (k, v) in &kv {
                match &mut params {
                    DeviceParams::Zener(p) => apply_zener(p, k, v, line)?,
                    DeviceParams::Mosfet(p) => apply_mosfet(p, k, v, line)?,
                    DeviceParams::Memristor(p) => apply_memristor(p, k, v, line)?,
                    _ => unreachable!("model-based kinds only"),
                }
            }
            params
        }
    };
    Ok(Element {
        name,
        terminals,
        params,
        model: model_name,
    })
}

fn parse_waveform(card: &Card, rest: &[String]) -> Result<SourceWaveform, NetlistError> {
    let line = card.line;
    match rest.first().map(String::as_str) {
        None => Err(arity_err(card, "3")),
        Some("dc") => {
            if rest.len() != 2 {
                return Err(arity_err(card, "4"));
            }
            Ok(SourceWaveform::Dc(number(&rest[1], line)?))
        }
        Some("pulse") => {
            if rest.len() != 8 {
                return Err(arity_err(card, "10 (pulse v1 v2 td tr tf pw per)"));
            }
            let v: Vec<f64> = rest[1..]
                .iter()
                .map(|t| number(t, line))
                .collect::<Result<_, _>>()?;
            Ok(SourceWaveform::Pulse {
                v1: v[0],
                v2: v[1],
                delay: v[2],
                rise: v[3],
                fall: v[4],
                width: v[5],
                period: v[6],
            })
        }
        Some("pwl") => {
            let v: Vec<f64> = rest[1..]
                .iter()
                .map(|t| number(t, line))
                .collect::<Result<_, _>>()?;
            if v.is_empty() || !v.len().is_multiple_of(2) {
                return Err(arity_err(card, "an even number of pwl values"));
            }
            Ok(SourceWaveform::Pwl(
                v.chunks(2).map(|c| (c[0], c[1])).collect(),
            ))
        }
        Some(value) => {
            if rest.len() != 1 {
                return Err(arity_err(card, "3"));
            }
            Ok(SourceWaveform::Dc(number(value, line)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::DeviceParams;

    #[test]
    fn minimal_divider() {
        let c = parse_netlist("V1 1 0 1.0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
        assert_eq!(c.elements.len(), 3);
        let nodes: Vec<_> = c.nodes.iter().map(String::as_str).collect();
        assert_eq!(nodes, ["0", "1", "2"]);
        assert_eq!(c.title, "");
        assert_eq!(
            c.element("r1").unwrap().params,
            DeviceParams::Resistor { ohms: 1e3 }
        );
    }

    #[test]
    fn zener_from_model_card() {
        let c = parse_netlist("D1 2 0 ZEN\n.model ZEN zener vz=4.2").unwrap();
        let d = c.element("d1").unwrap();
        assert_eq!(d.model.as_deref(), Some("zen"));
        match &d.params {
            DeviceParams::Zener(p) => assert_eq!(p.vz, 4.2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_kind() {
        let err = parse_netlist("Q1 1 2 3 dev").unwrap_err();
        assert!(
            matches!(err, NetlistError::UnknownElementKind { line: 1, .. }),
            "{err:?}"
        );
        let err = parse_netlist("* t\nX1 1 2 sub").unwrap_err();
        assert!(matches!(
            err,
            NetlistError::UnknownElementKind { line: 2, .. }
        ));
    }

    #[test]
    fn titles() {
        let c = parse_netlist("Divider test\nV1 1 0 1\nR1 1 0 1k").unwrap();
        assert_eq!(c.title, "Divider test");
        let c = parse_netlist("* fig6 detector\nV1 1 0 1\nR1 1 0 1k").unwrap();
        assert_eq!(c.title, "fig6 detector");
    }

    #[test]
    fn error_classes() {
        assert!(matches!(
            parse_netlist("* t\nR1 1 0").unwrap_err(),
            NetlistError::ArityError { line: 2, .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nM1 1 2 0").unwrap_err(),
            NetlistError::ArityError { .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nR1 1 0 1k\nr1 1 0 2k").unwrap_err(),
            NetlistError::DuplicateName { line: 3, .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nR1 1 0 1kx").unwrap_err(),
            NetlistError::MalformedNumber { .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nD1 1 0 nothere").unwrap_err(),
            NetlistError::UnknownModel { .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nR1 1 0 -5").unwrap_err(),
            NetlistError::InvalidParameter { .. }
        ));
        assert!(matches!(
            parse_netlist("* only a title").unwrap_err(),
            NetlistError::EmptyCircuit
        ));
        assert!(matches!(
            parse_netlist("* t\nR1 1 0 1k\n.dc v9 0 1 0.1").unwrap_err(),
            NetlistError::InvalidDirective { .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nV1 1 0 1\nR1 1 0 1k\n.dc v1 1 0 0.1").unwrap_err(),
            NetlistError::InvalidDirective { .. }
        ));
        assert!(matches!(
            parse_netlist("* t\nR1 1 0 1k\n.tran 0 1u").unwrap_err(),
            NetlistError::InvalidDirective { .. }
        ));
    }

    #[test]
    fn continuation_models_and_instances() {
        let text = "* inverter\n\
            .model nch mosfet type=n\n\
            + vth0=0.5 kp=170u\n\
            .model pch pmos\n\
            Vdd vdd 0 1.6\n\
            Vin in 0 dc 0.8\n\
            Mp1 out in vdd vdd pch wl = 3\n\
            Mn1 out in 0 0 nch\n\
            XMR1 out 0 w0=0.25\n\
            .dc vin 0 1.6 10m\n\
            .end\n\
            R9 1 0 garbage";
        let c = parse_netlist(text).unwrap();
        assert_eq!(c.elements.len(), 5);
        match &c.element("mn1").unwrap().params {
            DeviceParams::Mosfet(p) => {
                assert_eq!(p.vth0, 0.5);
                assert_eq!(p.kprime, 170e-6);
            }
            other => panic!("{other:?}"),
        }
        match &c.element("mp1").unwrap().params {
            DeviceParams::Mosfet(p) => {
                assert_eq!(p.polarity, Polarity::P);
                assert_eq!(p.w_over_l, 3.0);
            }
            other => panic!("{other:?}"),
        }
        match &c.element("xmr1").unwrap().params {
            DeviceParams::Memristor(p) => assert_eq!(p.w0, 0.25),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            c.analyses,
            vec![AnalysisDirective::DcSweep {
                source: "vin".into(),
                start: 0.0,
                stop: 1.6,
                step: 0.01
            }]
        );
    }

    #[test]
    fn pulse_and_pwl_sources() {
        let c = parse_netlist(
            "* s\nV1 a 0 pulse(0 5 1m 10u 10u 1m 2m)\nV2 b 0 PWL(0 0, 1m 1)\nR1 a b 1k",
        )
        .unwrap();
        assert!(matches!(
            c.element("v1").unwrap().params,
            DeviceParams::Source(SourceWaveform::Pulse { v2, .. }) if v2 == 5.0
        ));
        assert!(matches!(
            &c.element("v2").unwrap().params,
            DeviceParams::Source(SourceWaveform::Pwl(p)) if p.len() == 2
        ));
    }
}
