//! Fixed-width boolean vectors used for inputs, outputs, keys and states.
//!
//! The textual form is a string of `0`/`1` characters where character `i` is
//! bit `i`. For states, bit `i` is the value of flip-flop `i` in netlist
//! order, so `"1011"` on the 011 detector with a 2-bit counter reads
//! `S1 S0 C1 C0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid bit character {0:?} (expected '0' or '1')")]
    BadChar(char),
    #[error("width mismatch: expected {expected}, found {found}")]
    Width { expected: usize, found: usize },
    #[error("index {index} out of range for width {width}")]
    Index { index: usize, width: usize },
}

#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn zeros(width: usize) -> Self {
        Bits(vec![false; width])
    }

    pub fn ones(width: usize) -> Self {
        Bits(vec![true; width])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    /// Bit `i` of the result is bit `i` of `value`.
    pub fn from_u64(value: u64, width: usize) -> Self {
        debug_assert!(width <= 64);
        Bits((0..width).map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn to_u64(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<bool, BitsError> {
        self.0.get(index).copied().ok_or(BitsError::Index {
            index,
            width: self.0.len(),
        })
    }

    pub fn set(&mut self, index: usize, value: bool) -> Result<(), BitsError> {
        let width = self.0.len();
        match self.0.get_mut(index) {
            Some(b) => {
                *b = value;
                Ok(())
            }
            None => Err(BitsError::Index { index, width }),
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    pub fn hamming(&self, other: &Bits) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    pub fn expect_width(&self, expected: usize) -> Result<(), BitsError> {
        if self.0.len() == expected {
            Ok(())
        } else {
            Err(BitsError::Width {
                expected,
                found: self.0.len(),
            })
        }
    }
}

impl std::ops::Index<usize> for Bits {
    type Output = bool;
    fn index(&self, index: usize) -> &bool {
        &self.0[index]
    }
}

impl From<Vec<bool>> for Bits {
    fn from(v: Vec<bool>) -> Self {
        Bits(v)
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

impl FromStr for Bits {
    type Err = BitsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::BadChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bits)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Packed states are `u64` with bit `i` = flip-flop `i`. Lexicographic order
/// on the string form is the numeric order of the bit-reversed word.
pub(crate) fn lex_key(state: u64, width: usize) -> u64 {
    if width == 0 {
        0
    } else {
        state.reverse_bits() >> (64 - width)
    }
}

/// Parse a stimulus file: one frame per non-empty line, `#` comments allowed.
pub fn parse_frames(text: &str) -> Result<Vec<Bits>, BitsError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.replace([' ', '\t', ','], "").parse())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip_and_packing() {
        let b: Bits = "1011".parse().unwrap();
        assert_eq!(b.width(), 4);
        assert_eq!(b.to_string(), "1011");
        assert_eq!(b.to_u64(), 0b1101);
        assert_eq!(Bits::from_u64(0b1101, 4), b);
    }

    #[test]
    fn lex_key_orders_like_strings() {
        let width = 3;
        let mut states: Vec<u64> = (0..8).collect();
        states.sort_by_key(|&s| lex_key(s, width));
        let strings: Vec<String> = states
            .iter()
            .map(|&s| Bits::from_u64(s, width).to_string())
            .collect();
        let mut sorted = strings.clone();
        sorted.sort();
        assert_eq!(strings, sorted);
    }

    #[test]
    fn index_past_width_is_an_error() {
        let b = Bits::zeros(2);
        assert!(matches!(b.get(2), Err(BitsError::Index { .. })));
        assert!("10x".parse::<Bits>().is_err());
    }

    #[test]
    fn frames_ignore_comments_and_blanks() {
        let frames = parse_frames("0 1\n# c\n\n11\n").unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].to_string(), "11");
    }
}
