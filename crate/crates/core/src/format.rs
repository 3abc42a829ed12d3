//! Number formatting shared by every text export.

/// Rounds to six significant digits.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Six-significant-digit decimal rendering, e.g. `0.333333`, `2.58496`, `7.2`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    let r = round6(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

/// Renders an optional metric; absent values become an empty field.
pub fn opt_num(x: Option<f64>, full_precision: bool) -> String {
    match x {
        Some(v) if full_precision => v.to_string(),
        Some(v) => sig6(v),
        None => String::new(),
    }
}

/// Rounds every float inside a JSON value to six significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round6(x)))
            {
                *n = x;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
