//! Exact decimal overhead factors.
//!
//! Overheads like 1.1 and 0.99 enter integer formulas (`ceil(hi * k)`,
//! `floor(hi / (hi - lo))`) whose results must match exact decimal
//! arithmetic. IEEE-754 doubles get these wrong at the boundaries that
//! matter: 1.1 - 0.99 in f64 is slightly more than 0.11, so
//! `(1.1 / (1.1 - 0.99)).floor()` is 9 where the exact value is 10. An
//! [`Overhead`] therefore stores the value as an exact rational parsed
//! from decimal text, and f64 inputs are bridged through their shortest
//! round-trip decimal representation so `1.1f64` means the decimal 1.1.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Digit caps. Together they keep every intermediate product in the
/// integer formulas (ceil/floor products with u32 counts, the
/// hi/(hi - lo) quotient) comfortably inside i128.
const MAX_FRACTION_DIGITS: usize = 12;
const MAX_INTEGER_DIGITS: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OverheadError {
    #[error("invalid overhead {0:?}: expected a positive decimal like \"1.1\"")]
    Invalid(String),
    #[error("overhead {0:?} has more than {MAX_FRACTION_DIGITS} fractional digits")]
    TooPrecise(String),
    #[error("overhead {0:?} has more than {MAX_INTEGER_DIGITS} integer digits")]
    TooLarge(String),
    #[error("overhead must be positive, got {0:?}")]
    NotPositive(String),
}

/// A positive overhead factor with exact decimal semantics.
///
/// Equality, ordering, and hashing follow the numeric value ("1.10" equals
/// "1.1"); `Display` preserves the text the value was built from.
#[derive(Debug, Clone)]
pub struct Overhead {
    ratio: Ratio<i128>,
    text: String,
}

impl Overhead {
    /// Parses decimal text: digits, optionally followed by a dot and more
    /// digits. No sign, no exponent.
    pub fn from_decimal_str(s: &str) -> Result<Self, OverheadError> {
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let valid = !int_part.is_empty()
            && int_part.bytes().all(|b| b.is_ascii_digit())
            && frac_part.bytes().all(|b| b.is_ascii_digit())
            && (!s.contains('.') || !frac_part.is_empty());
        if !valid {
            return Err(OverheadError::Invalid(s.to_string()));
        }
        if frac_part.len() > MAX_FRACTION_DIGITS {
            return Err(OverheadError::TooPrecise(s.to_string()));
        }
        if int_part.trim_start_matches('0').len() > MAX_INTEGER_DIGITS {
            return Err(OverheadError::TooLarge(s.to_string()));
        }
        let digits: i128 = format!("{int_part}{frac_part}")
            .parse()
            .map_err(|_| OverheadError::Invalid(s.to_string()))?;
        let ratio = Ratio::new(digits, 10i128.pow(frac_part.len() as u32));
        if !ratio.is_positive() {
            return Err(OverheadError::NotPositive(s.to_string()));
        }
        Ok(Overhead {
            ratio,
            text: s.to_string(),
        })
    }

    /// Bridges an f64 through its shortest round-trip decimal form, so the
    /// double written `1.1` becomes the exact decimal 1.1.
    pub fn from_f64(value: f64) -> Result<Self, OverheadError> {
        if !value.is_finite() {
            return Err(OverheadError::Invalid(value.to_string()));
        }
        Self::from_decimal_str(&value.to_string())
    }

    pub(crate) fn ratio(&self) -> Ratio<i128> {
        self.ratio
    }

    /// ceil(self * k), exact.
    pub fn ceil_mul(&self, k: u64) -> u64 {
        (self.ratio * Ratio::from_integer(k as i128))
            .ceil()
            .to_integer() as u64
    }

    /// floor(self * k), exact.
    pub fn floor_mul(&self, k: u64) -> u64 {
        (self.ratio * Ratio::from_integer(k as i128))
            .floor()
            .to_integer() as u64
    }

    /// Nearest double, for reporting only; integer decisions never touch
    /// this.
    pub fn as_f64(&self) -> f64 {
        self.ratio.to_f64().expect("overhead ratio fits in f64")
    }
}

impl fmt::Display for Overhead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for Overhead {
    type Err = OverheadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_decimal_str(s)
    }
}

impl PartialEq for Overhead {
    fn eq(&self, other: &Self) -> bool {
        self.ratio == other.ratio
    }
}

impl Eq for Overhead {}

impl PartialOrd for Overhead {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Overhead {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ratio.cmp(&other.ratio)
    }
}

impl Hash for Overhead {
    fn hash<H: Hasher>(&self, state: &mut H) {
        // Ratio::new keeps values reduced, so equal values hash equal.
        self.ratio.hash(state);
    }
}

impl Serialize for Overhead {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Overhead {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl de::Visitor<'_> for Visitor {
            type Value = Overhead;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive decimal number or decimal string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Overhead, E> {
                Overhead::from_decimal_str(v).map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Overhead, E> {
                Overhead::from_f64(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Overhead, E> {
                Overhead::from_decimal_str(&v.to_string()).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Overhead, E> {
                Overhead::from_decimal_str(&v.to_string()).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}
