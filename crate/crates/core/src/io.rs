//! Output helpers: every float is written with 17 significant digits.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};

/// `x` with 17 significant digits; infinities as `inf` / `-inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                if let Ok(m) = Number::from_str(&fmt17(x)) {
                    *n = m;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

/// Serialize to a JSON value with all floats rewritten to 17 digits.
pub fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    normalize(&mut v);
    Ok(v)
}

/// Pretty JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = to_value(value)?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

/// CSV text from a header and rows of floats.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt17(x)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extended::Extended;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        let v = to_value(&(0.1f64, 3usize, Extended::PosInfinity)).unwrap();
        assert_eq!(v[0].as_f64(), Some(0.1));
        assert_eq!(v[0].to_string(), "1.0000000000000001e-1");
        assert_eq!(v[1].to_string(), "3");
        assert_eq!(v[2], Value::String("inf".into()));
    }

    #[test]
    fn csv_round_trips() {
        let text = csv_table(&["a", "b"], &[vec![0.1, -2.5]]).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let row = r.records().next().unwrap().unwrap();
        assert_eq!(row[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(row[1].parse::<f64>().unwrap(), -2.5);
    }
}
