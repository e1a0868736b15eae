//! Finite 0/1 words: nodes of the full binary tree, cylinder addresses, stems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A finite sequence over {0,1}. The empty word is valid and prints as `-`.
///
/// The derived `Ord` is the lexicographic order in which a proper prefix
/// precedes its extensions; on words of equal length it coincides with the
/// numeric order of [`BitWord::to_index`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitWord {
    bits: Vec<bool>,
}

impl BitWord {
    pub fn empty() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The all-zero word of length `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    /// The all-one word of length `n`.
    pub fn ones(n: usize) -> Self {
        Self {
            bits: vec![true; n],
        }
    }

    /// Word of length `len` whose bits spell `index` most-significant first.
    pub fn from_index(index: usize, len: usize) -> Self {
        assert!(len < usize::BITS as usize, "word length out of range");
        assert!(index < (1usize << len), "index out of range for length");
        let bits = (0..len).map(|i| (index >> (len - 1 - i)) & 1 == 1).collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn append_bit(&self, bit: bool) -> Self {
        let mut bits = self.bits.clone();
        bits.push(bit);
        Self { bits }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    /// The prefix of length `n` (requires `n <= len`).
    pub fn prefix(&self, n: usize) -> Self {
        assert!(n <= self.len(), "prefix length exceeds word length");
        Self {
            bits: self.bits[..n].to_vec(),
        }
    }

    /// Bits from position `n` on (requires `n <= len`).
    pub fn suffix_from(&self, n: usize) -> Self {
        assert!(n <= self.len(), "suffix start exceeds word length");
        Self {
            bits: self.bits[n..].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &Self) -> bool {
        self.len() <= other.len() && self.bits == other.bits[..self.len()]
    }

    /// Two words are compatible when one extends the other.
    pub fn compatible(&self, other: &Self) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The longer of two compatible words; `None` when they are incomparable.
    pub fn join(&self, other: &Self) -> Option<Self> {
        if self.is_prefix_of(other) {
            Some(other.clone())
        } else if other.is_prefix_of(self) {
            Some(self.clone())
        } else {
            None
        }
    }

    /// Coordinatewise addition modulo 2. On the overlap the bits are XORed;
    /// past the shorter word the bits of the longer word are copied.
    pub fn add(&self, other: &Self) -> Self {
        let (short, long) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut bits = Vec::with_capacity(long.len());
        for i in 0..long.len() {
            if i < short.len() {
                bits.push(short.bits[i] ^ long.bits[i]);
            } else {
                bits.push(long.bits[i]);
            }
        }
        Self { bits }
    }

    /// Bitwise complement (the word `ones(n) - self`).
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Complement every bit at position >= `from`, leaving the head intact.
    pub fn flip_from(&self, from: usize) -> Self {
        let mut bits = self.bits.clone();
        for b in bits.iter_mut().skip(from) {
            *b = !*b;
        }
        Self { bits }
    }

    /// Numeric value of the word read most-significant bit first.
    pub fn to_index(&self) -> usize {
        assert!(self.len() < usize::BITS as usize, "word too long for index");
        self.bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// All words of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> Vec<Self> {
        (0..1usize << n).map(|i| Self::from_index(i, n)).collect()
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "-");
        }
        for &b in &self.bits {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w[{}]", self)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid bit word {0:?}")]
pub struct ParseWordError(pub String);

impl FromStr for BitWord {
    type Err = ParseWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s == "-" || s == "\u{2205}" {
            return Ok(Self::empty());
        }
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(ParseWordError(s.to_string())),
            }
        }
        Ok(Self { bits })
    }
}

impl Serialize for BitWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The canonical length-lexicographic enumeration of all finite words:
/// `-`, `0`, `1`, `00`, `01`, `10`, `11`, `000`, ...
///
/// Tails of this enumeration still list a neighborhood base below every word,
/// which is what the dense-set bookkeeping of the engines relies on.
pub fn base_cylinder(n: usize) -> BitWord {
    let mut len = 0usize;
    let mut first = 0usize; // index of the first word of this length
    while n >= first + (1usize << len) {
        first += 1usize << len;
        len += 1;
    }
    BitWord::from_index(n - first, len)
}
