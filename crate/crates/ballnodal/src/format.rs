//! Number formatting shared by the report, CSV and CLI writers.

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Six significant digits for human-readable tables.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Serializer for `f64` fields that writes a 17-significant-digit JSON number.
pub fn serialize_sig17<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw =
        serde_json::value::RawValue::from_string(sig17(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn serialize_opt_sig17<S: serde::Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_sig17(v, s),
        None => s.serialize_none(),
    }
}
