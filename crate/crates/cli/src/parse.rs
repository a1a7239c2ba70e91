//! Reals that parse from flags and config files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use oscbc::spec::{direction, operator, real, reals};

/// A real that accepts the [`real`] syntax from flags and from config files,
/// where it may also be a TOML number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl FromStr for Real {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        real(s).map(Real).map_err(|e| e.to_string())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Int(v) => Ok(Real(v as f64)),
            Raw::Text(s) => real(&s).map(Real).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_deserializes_from_number_or_text() {
        #[derive(Deserialize)]
        struct T {
            a: Real,
            b: Real,
            c: Real,
        }
        let t: T = toml::from_str("a = 0.5\nb = 3\nc = \"1/64\"").unwrap();
        assert_eq!((t.a.0, t.b.0, t.c.0), (0.5, 3.0, 1.0 / 64.0));
        assert!(toml::from_str::<T>("a = \"x\"\nb = 1\nc = 1").is_err());
    }
}
