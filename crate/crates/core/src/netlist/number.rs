/// Parses a number in plain or scientific notation with an optional SI scale
/// suffix: `t g meg k m u n p f` (case-insensitive, `m` is milli).
///
/// Anything after the suffix is rejected.
pub fn parse_number(token: &str) -> Option<f64> {
    let s = token.trim().to_ascii_lowercase();
    let bytes = s.as_bytes();
    let mut end = 0;
    if end < bytes.len() && (bytes[end] == b'+' || bytes[end] == b'-') {
        end += 1;
    }
    let digits_start = end;
    while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
        end += 1;
    }
    if !s[digits_start..end].bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    // Exponent only when followed by a digit, so "1meg" is not read as 1e-g.
    if end < bytes.len() && bytes[end] == b'e' {
        let mut k = end + 1;
        if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
            k += 1;
        }
        if k < bytes.len() && bytes[k].is_ascii_digit() {
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            end = k;
        }
    }
    let shift = match &s[end..] {
        "" => 0,
        "t" => 12,
        "g" => 9,
        "meg" => 6,
        "k" => 3,
        "m" => -3,
        "u" => -6,
        "n" => -9,
        "p" => -12,
        "f" => -15,
        _ => return None,
    };
    // Fold the suffix into the decimal exponent so that "170u" rounds
    // exactly like "170e-6".
    let body = &s[..end];
    let (digits, exp) = match body.find('e') {
        Some(k) => (&body[..k], body[k + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let value: f64 = format!("{digits}e{}", exp + shift).parse().ok()?;
    value.is_finite().then_some(value)
}
