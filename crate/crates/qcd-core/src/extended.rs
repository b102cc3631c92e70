//! Extended real values for divergences that can legitimately be infinite.
//!
//! Divergences like the max-relative entropy diverge when the first argument's
//! support leaks outside the second's. Rather than threading raw `f64::INFINITY`
//! sentinels (and risking silent NaN arithmetic), finite-or-plus-infinity results
//! are carried in [`ExtendedReal`]. Values serialize to JSON as a plain number when
//! finite and as the string `"inf"` otherwise, so downstream tooling never meets
//! a bare IEEE infinity in its input.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// A value in `(-∞, ∞) ∪ {+∞}`: either strictly finite or positive infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    /// A strictly finite value (never NaN or ±∞).
    Finite(f64),
    /// Positive infinity.
    PosInf,
}

impl ExtendedReal {
    /// Wraps a float, mapping `+∞` to [`ExtendedReal::PosInf`].
    ///
    /// Panics on NaN or `-∞`; callers are expected to have screened those out.
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            ExtendedReal::Finite(v)
        } else if v == f64::INFINITY {
            ExtendedReal::PosInf
        } else {
            panic!("ExtendedReal::from_f64 called with {v}")
        }
    }

    /// Returns the value as `f64`, with `+∞` for the infinite case.
    pub fn as_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInf => f64::INFINITY,
        }
    }

    /// Returns the finite value, or `None` when infinite.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInf => None,
        }
    }

    /// True when the value is finite.
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Adds two extended reals; infinity absorbs.
    pub fn add(self, other: ExtendedReal) -> ExtendedReal {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PosInf,
        }
    }

    /// Scales by a nonnegative finite factor; `0 · ∞` is defined as `0`.
    pub fn scale(self, factor: f64) -> ExtendedReal {
        assert!(factor.is_finite() && factor >= 0.0, "scale factor must be finite and >= 0");
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v * factor),
            ExtendedReal::PosInf => {
                if factor == 0.0 {
                    ExtendedReal::Finite(0.0)
                } else {
                    ExtendedReal::PosInf
                }
            }
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.partial_cmp(b),
            (ExtendedReal::Finite(_), ExtendedReal::PosInf) => Some(Ordering::Less),
            (ExtendedReal::PosInf, ExtendedReal::Finite(_)) => Some(Ordering::Greater),
            (ExtendedReal::PosInf, ExtendedReal::PosInf) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInf => write!(f, "inf"),
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        ExtendedReal::from_f64(v)
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => serializer.serialize_f64(*v),
            ExtendedReal::PosInf => serializer.serialize_str("inf"),
        }
    }
}

struct ExtendedRealVisitor;

impl<'de> Visitor<'de> for ExtendedRealVisitor {
    type Value = ExtendedReal;

    fn expecting(&self, formatter: &mut fmt::Formatter) -> fmt::Result {
        formatter.write_str("a finite number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedReal, E> {
        if v.is_finite() {
            Ok(ExtendedReal::Finite(v))
        } else {
            Err(E::custom("non-finite number in ExtendedReal"))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedReal, E> {
        Ok(ExtendedReal::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedReal, E> {
        Ok(ExtendedReal::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedReal, E> {
        match v {
            "inf" | "+inf" => Ok(ExtendedReal::PosInf),
            _ => Err(E::custom(format!("unexpected string {v:?} in ExtendedReal"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        deserializer.deserialize_any(ExtendedRealVisitor)
    }
}

/// Serde adapter for `f64` fields that may legitimately hold `±∞`, mapping
/// them to the strings `"inf"` / `"-inf"` (JSON has no infinity literal).
pub mod serde_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            Err(serde::ser::Error::custom("NaN has no JSON representation"))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(de::Error::custom(format!("unrecognized numeric string {s:?}"))),
            },
        }
    }
}

/// Like [`serde_inf`] but for `Option<f64>` fields.
pub mod serde_inf_opt {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<f64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) => super::serde_inf::serialize(x, s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Num(v)) => Ok(Some(v)),
            Some(Raw::Str(s)) => match s.as_str() {
                "inf" | "+inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                _ => Err(de::Error::custom(format!("unrecognized numeric string {s:?}"))),
            },
        }
    }
}

/// Like [`serde_inf`] but for `Vec<f64>` fields.
pub mod serde_inf_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    struct Wrap(f64);

    impl Serialize for Wrap {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            super::serde_inf::serialize(&self.0, s)
        }
    }

    impl<'de> Deserialize<'de> for Wrap {
        fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            super::serde_inf::deserialize(d).map(Wrap)
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Wrap(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}
