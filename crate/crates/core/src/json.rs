//! JSON helpers shared by the report writers.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A real number written with exactly six decimals, so reports diff cleanly.
/// Non-finite values are written as `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fixed6(pub f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let mut text = format!("{:.6}", self.0);
        if text == "-0.000000" {
            text = "0.000000".into();
        }
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

pub(crate) fn fixed(v: Option<f64>) -> Option<Fixed6> {
    v.map(Fixed6)
}
