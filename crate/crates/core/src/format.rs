//! Deterministic serialisation: every float is rounded to 12 significant digits.

use serde::Serialize;
use serde_json::Value;

pub const SIG_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Float text for CSV cells.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r != 0.0 && (r.abs() >= 1e15 || r.abs() < 1e-6) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    let mut v = serde_json::to_value(x).expect("in-memory serialisation");
    round_value(&mut v);
    v
}

pub fn to_json<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(&to_value(x)).expect("in-memory serialisation")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(1e-9), "1e-9");
        assert_eq!(to_json(&vec![1.0 / 3.0]), "[\n  0.333333333333\n]");
    }
}
