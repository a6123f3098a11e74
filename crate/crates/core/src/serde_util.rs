//! Serialization helpers for scalar fields.

use serde::Serializer;

use crate::scalar::Scalar;

/// Finite values as JSON numbers (shortest round-trip form), non-finite
/// values as the strings `"inf"`, `"-inf"` or `"NaN"`.
pub fn scalar<S: Scalar, Ser: Serializer>(x: &S, s: Ser) -> Result<Ser::Ok, Ser::Error> {
    let v = x.as_f64();
    if v.is_finite() {
        s.serialize_f64(v)
    } else if v.is_nan() {
        s.serialize_str("NaN")
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Plain-text rendering used in CSV cells: shortest round-trip decimal.
pub fn fmt_scalar<S: Scalar>(x: S) -> String {
    let v = x.as_f64();
    if v.is_nan() {
        "NaN".to_owned()
    } else {
        format!("{v}")
    }
}
