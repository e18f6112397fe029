//! Reals extended with explicit infinite sentinels.
//!
//! Quantities such as turning points, the limiting depth `h0` or the
//! threshold `r0` may be infinite. They are carried as tagged values so
//! that no floating-point infinity ever enters arithmetic; serialized, the
//! infinite cases become the strings `"inf"` and `"-inf"`.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Strict comparison against a finite value.
    pub fn gt(self, v: f64) -> bool {
        match self {
            Extended::NegInfinity => false,
            Extended::Finite(x) => x > v,
            Extended::PosInfinity => true,
        }
    }

    pub fn lt(self, v: f64) -> bool {
        match self {
            Extended::NegInfinity => true,
            Extended::Finite(x) => x < v,
            Extended::PosInfinity => false,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        match self {
            Extended::NegInfinity => Extended::PosInfinity,
            Extended::Finite(x) => Extended::Finite(-x),
            Extended::PosInfinity => Extended::NegInfinity,
        }
    }

    /// Lossy conversion for plotting or reporting; infinities map to
    /// `f64` infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::NegInfinity => f64::NEG_INFINITY,
            Extended::Finite(x) => x,
            Extended::PosInfinity => f64::INFINITY,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == f64::INFINITY {
            Extended::PosInfinity
        } else if x == f64::NEG_INFINITY {
            Extended::NegInfinity
        } else {
            Extended::Finite(x)
        }
    }
}

impl From<f64> for Extended {
    fn from(x: f64) -> Self {
        Extended::from_f64(x)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInfinity => write!(f, "-inf"),
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::PosInfinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::NegInfinity => serializer.serialize_str("-inf"),
            Extended::Finite(x) => serializer.serialize_f64(*x),
            Extended::PosInfinity => serializer.serialize_str("inf"),
        }
    }
}

struct ExtendedVisitor;

impl<'de> Visitor<'de> for ExtendedVisitor {
    type Value = Extended;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Extended, E> {
        Ok(Extended::Finite(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Extended, E> {
        Ok(Extended::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Extended, E> {
        Ok(Extended::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Extended, E> {
        match v {
            "inf" | "+inf" => Ok(Extended::PosInfinity),
            "-inf" => Ok(Extended::NegInfinity),
            other => Err(E::custom(format!("unexpected string {other:?}"))),
        }
    }

    fn visit_map<A: de::MapAccess<'de>>(self, map: A) -> Result<Extended, A::Error> {
        // arbitrary_precision numbers arrive as a single-entry map
        let n = serde_json::Number::deserialize(de::value::MapAccessDeserializer::new(map))?;
        n.as_f64()
            .map(Extended::Finite)
            .ok_or_else(|| de::Error::custom("number out of range"))
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ExtendedVisitor)
    }
}
