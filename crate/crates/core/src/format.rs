//! Fixed-precision number formatting for reports.
//!
//! Reports carry six significant digits so that regenerated documents are
//! byte-identical and golden files stay stable.

use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 6;

/// Rounds to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Six significant digits, fixed notation for magnitudes in `[1e-4, 1e6)`
/// and scientific notation otherwise.
pub fn sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", SIGNIFICANT_DIGITS - 1, 0.0);
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let exponent: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-4..6).contains(&exponent) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Rounds every floating-point number inside a JSON tree in place.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(num) if num.is_f64() => {
            if let Some(rounded) = num
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *num = rounded;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
