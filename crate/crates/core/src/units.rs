use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An information quantity stored in bits (log base 2).
///
/// `+inf` is a legitimate value: it is the sentinel for KL divergences and
/// risks under an absolute-continuity failure.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfoBits(pub f64);

impl InfoBits {
    pub const ZERO: InfoBits = InfoBits(0.0);
    pub const INFINITY: InfoBits = InfoBits(f64::INFINITY);

    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn nats(self) -> f64 {
        self.0 * std::f64::consts::LN_2
    }

    pub fn from_nats(nats: f64) -> Self {
        InfoBits(nats / std::f64::consts::LN_2)
    }

    pub fn in_units(self, units: Units) -> f64 {
        match units {
            Units::Bits => self.bits(),
            Units::Nats => self.nats(),
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Add for InfoBits {
    type Output = InfoBits;
    fn add(self, rhs: InfoBits) -> InfoBits {
        InfoBits(self.0 + rhs.0)
    }
}

impl Sub for InfoBits {
    type Output = InfoBits;
    fn sub(self, rhs: InfoBits) -> InfoBits {
        InfoBits(self.0 - rhs.0)
    }
}

impl fmt::Display for InfoBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = f.precision() {
            write!(f, "{:.*} bits", p, self.0)
        } else {
            write!(f, "{} bits", self.0)
        }
    }
}

/// Output unit for reported values. Everything is computed in bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    pub fn suffix(self) -> &'static str {
        match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        }
    }
}

impl FromStr for Units {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bits" => Ok(Units::Bits),
            "nats" => Ok(Units::Nats),
            other => Err(format!("unknown units '{other}' (expected bits or nats)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nats_round_trip() {
        let b = InfoBits(1.0);
        assert!((b.nats() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((InfoBits::from_nats(b.nats()).bits() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parses_units() {
        assert_eq!("nats".parse::<Units>().unwrap(), Units::Nats);
        assert!("bytes".parse::<Units>().is_err());
    }
}
