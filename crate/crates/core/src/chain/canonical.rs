//! Canonical JSON encoding used for every hash and signature preimage.
//!
//! Rules:
//! - object keys sorted by Unicode code point (byte order of their UTF-8 form)
//! - no whitespace outside strings
//! - integers only; any fractional or exponent number is rejected
//! - strings escaped exactly as `serde_json` escapes them

use serde::Serialize;
use serde_json::Value;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("non-integer number {0} cannot be canonically encoded")]
    NonInteger(String),
    #[error("value is not representable as JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Serializes `value` to canonical bytes.
pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let tree = serde_json::to_value(value)?;
    canonical_serialize(&tree)
}

/// Serializes a JSON document tree to canonical bytes.
pub fn canonical_serialize(doc: &Value) -> Result<Vec<u8>, CanonicalError> {
    let mut out = Vec::with_capacity(256);
    write_value(doc, &mut out)?;
    Ok(out)
}

fn write_value(value: &Value, out: &mut Vec<u8>) -> Result<(), CanonicalError> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").expect("write to Vec");
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").expect("write to Vec");
            } else {
                return Err(CanonicalError::NonInteger(n.to_string()));
            }
        }
        Value::String(s) => serde_json::to_writer(&mut *out, s)?,
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out)?;
            }
            out.push(b']');
        }
        Value::Object(map) => {
            // Sorting here keeps the output independent of the map's own ordering.
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
            out.push(b'{');
            for (i, (key, item)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                serde_json::to_writer(&mut *out, key)?;
                out.push(b':');
                write_value(item, out)?;
            }
            out.push(b'}');
        }
    }
    Ok(())
}
