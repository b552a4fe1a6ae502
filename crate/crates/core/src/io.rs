//! Serialization helpers shared by the file formats.

use sha2::{Digest, Sha256};

use crate::Error;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn expect_format(found: &str, expected: &str) -> Result<(), Error> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::Format { expected: expected.to_string(), found: found.to_string() })
    }
}

/// Compact JSON with a trailing newline. `serde_json` prints floats as the
/// shortest decimal that round-trips, which golden-file byte equality
/// relies on.
pub fn to_json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("document serializes");
    s.push('\n');
    s
}

/// `+∞` is written as `null` and read back as `+∞`.
pub mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::INFINITY {
            s.serialize_none()
        } else {
            Err(serde::ser::Error::custom(format!("cannot encode {v}")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Like [`infinite_as_null`] for optional values (absent stays absent).
pub mod opt_infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_some(x),
            _ => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

/// Set to `1` to let [`check_golden`] rewrite golden files.
pub const GOLDEN_REGEN_ENV: &str = "UNWIND_SIM_GOLDEN_REGEN";

pub fn golden_regen_enabled() -> bool {
    std::env::var(GOLDEN_REGEN_ENV).is_ok_and(|v| v == "1")
}

/// Compares `actual` with the golden file at `path`, or rewrites the file
/// when regeneration is enabled. The error names the first differing byte.
pub fn check_golden(path: &std::path::Path, actual: &str) -> Result<(), String> {
    if golden_regen_enabled() {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        }
        return std::fs::write(path, actual).map_err(|e| format!("{}: {e}", path.display()));
    }
    let expected = std::fs::read_to_string(path).map_err(|e| {
        format!("{}: {e} (run with {GOLDEN_REGEN_ENV}=1 to create it)", path.display())
    })?;
    if expected == actual {
        return Ok(());
    }
    let at = expected
        .bytes()
        .zip(actual.bytes())
        .position(|(a, b)| a != b)
        .unwrap_or(expected.len().min(actual.len()));
    Err(format!("{} differs from the golden file at byte {at}", path.display()))
}
