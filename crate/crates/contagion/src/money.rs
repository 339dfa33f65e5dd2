//! Exact decimal money amounts.
//!
//! Amounts are stored as integer minor units at a fixed internal scale of
//! 10^-6, so ingestion never round-trips through binary floating point.
//! The per-file decimal scale (default 2) only bounds how many fractional
//! digits an input row may carry.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Fractional digits of the internal fixed-point representation.
pub const INTERNAL_DECIMALS: u8 = 6;

const UNIT: i128 = 1_000_000;

/// A money amount in internal minor units (1e-6 of one currency unit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money {
    minor: i128,
}

/// Why a money token failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoneyParseError {
    Empty,
    InvalidCharacter(char),
    TooManyDecimals { found: usize, allowed: u8 },
    Overflow,
}

impl fmt::Display for MoneyParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoneyParseError::Empty => write!(f, "empty amount"),
            MoneyParseError::InvalidCharacter(c) => write!(f, "invalid character {c:?} in amount"),
            MoneyParseError::TooManyDecimals { found, allowed } => {
                write!(f, "{found} decimal places exceed the configured scale of {allowed}")
            }
            MoneyParseError::Overflow => write!(f, "amount out of range"),
        }
    }
}

impl std::error::Error for MoneyParseError {}

impl Money {
    pub const ZERO: Money = Money { minor: 0 };

    pub fn from_minor(minor: i128) -> Money {
        Money { minor }
    }

    /// Whole currency units, exact.
    pub fn from_units(units: i64) -> Money {
        Money { minor: units as i128 * UNIT }
    }

    pub fn minor(self) -> i128 {
        self.minor
    }

    pub fn is_negative(self) -> bool {
        self.minor < 0
    }

    pub fn is_positive(self) -> bool {
        self.minor > 0
    }

    pub fn is_zero(self) -> bool {
        self.minor == 0
    }

    pub fn to_f64(self) -> f64 {
        self.minor as f64 / UNIT as f64
    }

    /// Nearest representable amount with `decimals` fractional digits
    /// (ties away from zero). Used by the synthetic generator.
    pub fn from_f64_rounded(value: f64, decimals: u8) -> Money {
        let decimals = decimals.min(INTERNAL_DECIMALS);
        let factor = 10f64.powi(decimals as i32);
        let quantized = (value * factor).round();
        let step = 10i128.pow((INTERNAL_DECIMALS - decimals) as u32);
        Money { minor: quantized as i128 * step }
    }

    /// Parse a decimal token (`123`, `123.45`, `-0.5`). No thousands
    /// separators, no exponents; at most `max_decimals` fractional digits.
    pub fn parse(text: &str, max_decimals: u8) -> Result<Money, MoneyParseError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(MoneyParseError::Empty);
        }
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        if digits.is_empty() {
            return Err(MoneyParseError::Empty);
        }
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(MoneyParseError::Empty);
        }
        if frac_part.len() > max_decimals as usize {
            return Err(MoneyParseError::TooManyDecimals {
                found: frac_part.len(),
                allowed: max_decimals,
            });
        }
        let mut minor: i128 = 0;
        for c in int_part.chars() {
            let d = c.to_digit(10).ok_or(MoneyParseError::InvalidCharacter(c))?;
            minor = minor
                .checked_mul(10)
                .and_then(|m| m.checked_add(d as i128))
                .ok_or(MoneyParseError::Overflow)?;
        }
        minor = minor.checked_mul(UNIT).ok_or(MoneyParseError::Overflow)?;
        let mut frac_minor: i128 = 0;
        for c in frac_part.chars() {
            let d = c.to_digit(10).ok_or(MoneyParseError::InvalidCharacter(c))?;
            frac_minor = frac_minor * 10 + d as i128;
        }
        frac_minor *= 10i128.pow((INTERNAL_DECIMALS as usize - frac_part.len()) as u32);
        minor = minor.checked_add(frac_minor).ok_or(MoneyParseError::Overflow)?;
        if negative {
            minor = -minor;
        }
        Ok(Money { minor })
    }

    /// Render with exactly `decimals` fractional digits (truncating the
    /// internal sub-scale residue, which is zero for parsed inputs).
    pub fn format(self, decimals: u8) -> String {
        let decimals = decimals.min(INTERNAL_DECIMALS);
        let sign = if self.minor < 0 { "-" } else { "" };
        let abs = self.minor.unsigned_abs();
        let units = abs / UNIT as u128;
        if decimals == 0 {
            return format!("{sign}{units}");
        }
        let frac_full = abs % UNIT as u128;
        let step = 10u128.pow((INTERNAL_DECIMALS - decimals) as u32);
        let frac = frac_full / step;
        format!("{sign}{units}.{frac:0width$}", width = decimals as usize)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money { minor: self.minor + rhs.minor }
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.minor += rhs.minor;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money { minor: self.minor - rhs.minor }
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_fractional() {
        assert_eq!(Money::parse("10", 2).unwrap(), Money::from_units(10));
        assert_eq!(Money::parse("10.25", 2).unwrap().minor(), 10_250_000);
        assert_eq!(Money::parse("0.5", 2).unwrap().minor(), 500_000);
        assert_eq!(Money::parse("-3.10", 2).unwrap().minor(), -3_100_000);
    }

    #[test]
    fn rejects_excess_decimals() {
        let err = Money::parse("1.234", 2).unwrap_err();
        assert_eq!(err, MoneyParseError::TooManyDecimals { found: 3, allowed: 2 });
    }

    #[test]
    fn rejects_garbage() {
        assert!(Money::parse("", 2).is_err());
        assert!(Money::parse("1,000", 2).is_err());
        assert!(Money::parse("1e3", 2).is_err());
        assert!(Money::parse("-", 2).is_err());
        assert!(Money::parse(".", 2).is_err());
    }

    #[test]
    fn formats_at_scale() {
        assert_eq!(Money::parse("7", 2).unwrap().format(2), "7.00");
        assert_eq!(Money::parse("7.5", 2).unwrap().format(2), "7.50");
        assert_eq!(Money::parse("-0.25", 2).unwrap().format(2), "-0.25");
        assert_eq!(Money::parse("3.125", 4).unwrap().format(4), "3.1250");
    }

    #[test]
    fn format_parse_round_trip() {
        for text in ["0.00", "12.34", "99999999.99", "-1.01"] {
            let m = Money::parse(text, 2).unwrap();
            assert_eq!(Money::parse(&m.format(2), 2).unwrap(), m);
        }
    }

    #[test]
    fn rounded_from_f64() {
        assert_eq!(Money::from_f64_rounded(1.23, 2).minor(), 1_230_000);
        assert_eq!(Money::from_f64_rounded(2.0 / 3.0, 2).minor(), 670_000);
    }
}
