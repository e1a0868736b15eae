//! Exact arithmetic: dyadic rationals for measures, general rationals for the
//! stage thresholds whose denominators are not powers of two.
//!
//! Every value produced under the default depth caps stays far below the
//! `u128` range, so all operations are checked and panic on overflow rather
//! than rounding.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative dyadic rational `num / 2^log_den` in canonical form:
/// `num` is odd or zero, and zero is stored as `0 / 2^0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u128,
    log_den: u32,
}

impl Dyadic {
    pub fn new(num: u128, log_den: u32) -> Self {
        let mut d = Dyadic { num, log_den };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { num: 0, log_den: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: 1, log_den: 0 }
    }

    /// Measure of a cylinder of word length `n`, i.e. `2^-n`.
    pub fn cylinder(n: u32) -> Self {
        Dyadic { num: 1, log_den: n }
    }

    fn canonicalize(&mut self) {
        if self.num == 0 {
            self.log_den = 0;
            return;
        }
        while self.num & 1 == 0 && self.log_den > 0 {
            self.num >>= 1;
            self.log_den -= 1;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn log_denominator(&self) -> u32 {
        self.log_den
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.log_den.max(other.log_den);
        let a = self.num.checked_shl(d - self.log_den).expect("dyadic overflow");
        let b = other.num.checked_shl(d - other.log_den).expect("dyadic overflow");
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), d)
    }

    /// Exact difference; `None` when the result would be negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let d = self.log_den.max(other.log_den);
        let a = self.num.checked_shl(d - self.log_den)?;
        let b = other.num.checked_shl(d - other.log_den)?;
        a.checked_sub(b).map(|n| Dyadic::new(n, d))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Dyadic::new(
            self.num.checked_mul(other.num).expect("dyadic overflow"),
            self.log_den + other.log_den,
        )
    }

    pub fn to_ratio(&self) -> Ratio {
        assert!(self.log_den < 127, "denominator exponent out of range");
        Ratio::new(self.num, 1u128 << self.log_den)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.log_den.max(other.log_den);
        let a = self.num.checked_shl(d - self.log_den).expect("dyadic overflow");
        let b = other.num.checked_shl(d - other.log_den).expect("dyadic overflow");
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log_den == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.log_den)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid exact rational {0:?}")]
pub struct ParseRationalError(pub String);

impl FromStr for Dyadic {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_u = |t: &str| t.parse::<u128>().map_err(|_| ParseRationalError(s.to_string()));
        match s.split_once('/') {
            None => Ok(Dyadic::new(parse_u(s)?, 0)),
            Some((num, den)) => {
                let num = parse_u(num)?;
                if let Some(exp) = den.strip_prefix("2^") {
                    let exp: u32 = exp.parse().map_err(|_| ParseRationalError(s.to_string()))?;
                    Ok(Dyadic::new(num, exp))
                } else {
                    let den = parse_u(den)?;
                    if den == 0 || !den.is_power_of_two() {
                        return Err(ParseRationalError(s.to_string()));
                    }
                    Ok(Dyadic::new(num, den.trailing_zeros()))
                }
            }
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?  .parse().map_err(serde::de::Error::custom)
    }
}

/// A non-negative rational in lowest terms. Comparisons cross-multiply in
/// `u128`, which the depth caps keep safe.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den != 0, "zero denominator");
        if num == 0 {
            return Ratio { num: 0, den: 1 };
        }
        let g = gcd(num, den);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    pub fn one() -> Self {
        Ratio { num: 1, den: 1 }
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn denominator(&self) -> u128 {
        self.den
    }

    /// `1 - self`; panics when `self > 1`.
    pub fn one_minus(&self) -> Self {
        assert!(self.num <= self.den, "one_minus of a rational above 1");
        Ratio::new(self.den - self.num, self.den)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Ratio::new(
            self.num.checked_mul(other.num).expect("ratio overflow"),
            self.den.checked_mul(other.den).expect("ratio overflow"),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let den = self.den.checked_mul(other.den).expect("ratio overflow");
        let a = self.num.checked_mul(other.den).expect("ratio overflow");
        let b = other.num.checked_mul(self.den).expect("ratio overflow");
        Ratio::new(a.checked_add(b).expect("ratio overflow"), den)
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.num.checked_mul(other.den).expect("ratio overflow");
        let r = other.num.checked_mul(self.den).expect("ratio overflow");
        l.cmp(&r)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Ratio {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_u = |t: &str| t.parse::<u128>().map_err(|_| ParseRationalError(s.to_string()));
        match s.split_once('/') {
            None => Ok(Ratio::new(parse_u(s)?, 1)),
            Some((num, den)) => {
                let num = parse_u(num)?;
                if let Some(exp) = den.strip_prefix("2^") {
                    let exp: u32 = exp.parse().map_err(|_| ParseRationalError(s.to_string()))?;
                    assert!(exp < 127);
                    Ok(Ratio::new(num, 1u128 << exp))
                } else {
                    Ok(Ratio::new(num, parse_u(den)?))
                }
            }
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// The stage threshold `1 / (2^(2k+2) * (k+1))`.
pub fn stage_epsilon(k: u32) -> Ratio {
    let pow = 1u128.checked_shl(2 * k + 2).expect("stage too deep");
    Ratio::new(1, pow.checked_mul(u128::from(k) + 1).expect("stage too deep"))
}

/// The per-stage retention bound `1 / (2^(k+1) * (k+1))`.
pub fn stage_retention(k: u32) -> Ratio {
    let pow = 1u128.checked_shl(k + 1).expect("stage too deep");
    Ratio::new(1, pow.checked_mul(u128::from(k) + 1).expect("stage too deep"))
}
