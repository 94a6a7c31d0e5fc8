//! Extended integer heights `Z ∪ {−∞, +∞}`.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An interface height. The derived order puts `NegInf` below every finite
/// value and `PosInf` above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Height {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Height {
    pub const ZERO: Height = Height::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Height::Finite(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Height::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Finite values shift, infinities absorb.
    pub fn shift(self, k: i64) -> Height {
        match self {
            Height::Finite(v) => Height::Finite(v + k),
            other => other,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Height::NegInf => f64::NEG_INFINITY,
            Height::Finite(v) => v as f64,
            Height::PosInf => f64::INFINITY,
        }
    }

    /// `floor(v)` for a real value, with IEEE infinities mapped to the
    /// corresponding extended heights.
    pub fn floor_of(v: f64) -> Height {
        if v == f64::NEG_INFINITY {
            Height::NegInf
        } else if v == f64::INFINITY {
            Height::PosInf
        } else {
            Height::Finite(v.floor() as i64)
        }
    }
}

impl From<i64> for Height {
    fn from(v: i64) -> Self {
        Height::Finite(v)
    }
}

impl Add<i64> for Height {
    type Output = Height;

    fn add(self, rhs: i64) -> Height {
        self.shift(rhs)
    }
}

impl fmt::Display for Height {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Height::NegInf => f.write_str("-inf"),
            Height::Finite(v) => write!(f, "{v}"),
            Height::PosInf => f.write_str("inf"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("not a height: {0:?}")]
pub struct ParseHeightError(String);

impl FromStr for Height {
    type Err = ParseHeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "-inf" => Ok(Height::NegInf),
            "inf" | "+inf" => Ok(Height::PosInf),
            other => other
                .parse::<i64>()
                .map(Height::Finite)
                .map_err(|_| ParseHeightError(s.to_string())),
        }
    }
}

// JSON form: integers stay integers, infinities become "-inf" / "inf".
impl Serialize for Height {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Height::Finite(v) => serializer.serialize_i64(*v),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Height {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(v) => Ok(Height::Finite(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
