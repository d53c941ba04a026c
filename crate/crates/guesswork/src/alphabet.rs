//! Finite alphabets and index sequences.
//!
//! Symbols are dense integer indices `0..size`; alphabets carry no symbol
//! payloads so sequences can be bit-packed for exhaustive ball scans.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    pub size: usize,
    pub label: Option<String>,
}

impl Alphabet {
    pub fn new(size: usize) -> Self {
        Alphabet { size, label: None }
    }

    pub fn labeled(size: usize, label: &str) -> Self {
        Alphabet {
            size,
            label: Some(label.to_string()),
        }
    }

    pub fn binary() -> Self {
        Alphabet::new(2)
    }
}

/// A length-`n` word over an alphabet of indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequence {
    symbols: Vec<u16>,
}

impl Sequence {
    pub fn new(symbols: Vec<u16>, alphabet_size: usize) -> Result<Self> {
        for &s in &symbols {
            if (s as usize) >= alphabet_size {
                return Err(Error::SymbolOutOfRange {
                    symbol: s as usize,
                    alphabet: alphabet_size,
                });
            }
        }
        Ok(Sequence { symbols })
    }

    /// Unchecked construction for internal enumeration loops.
    pub(crate) fn from_raw(symbols: Vec<u16>) -> Self {
        Sequence { symbols }
    }

    /// Parses a symbol string: digits `0-9` then letters `a-z`/`A-Z`
    /// (like base-36 digits), each one symbol.
    pub fn parse_str(s: &str, alphabet_size: usize) -> Result<Self> {
        let mut symbols = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let v = ch
                .to_digit(36)
                .ok_or_else(|| Error::Domain(format!("invalid symbol character {ch:?}")))?;
            symbols.push(v as u16);
        }
        Sequence::new(symbols, alphabet_size)
    }

    /// Inverse of [`Sequence::parse_str`].
    pub fn to_symbol_string(&self) -> String {
        self.symbols
            .iter()
            .map(|&s| std::char::from_digit(s as u32, 36).unwrap_or('?'))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn sym(&self, i: usize) -> usize {
        self.symbols[i] as usize
    }

    /// Mixed-radix index of the sequence among all words of its length,
    /// first symbol most significant. Fails if the value would exceed `u64`.
    pub fn pack(&self, alphabet_size: usize) -> Option<u64> {
        let mut v: u64 = 0;
        for &s in &self.symbols {
            v = v.checked_mul(alphabet_size as u64)?;
            v = v.checked_add(s as u64)?;
        }
        Some(v)
    }

    /// Inverse of [`Sequence::pack`] for a known length.
    pub fn unpack(mut v: u64, n: usize, alphabet_size: usize) -> Self {
        let mut symbols = vec![0u16; n];
        for i in (0..n).rev() {
            symbols[i] = (v % alphabet_size as u64) as u16;
            v /= alphabet_size as u64;
        }
        Sequence { symbols }
    }
}

impl std::fmt::Display for Sequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_symbol_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_symbol() {
        assert!(Sequence::new(vec![0, 2], 2).is_err());
        assert!(Sequence::new(vec![0, 1], 2).is_ok());
    }

    #[test]
    fn parse_and_format_round_trip() {
        let s = Sequence::parse_str("01101101110010111", 2).unwrap();
        assert_eq!(s.len(), 17);
        assert_eq!(s.to_symbol_string(), "01101101110010111");
        let t = Sequence::parse_str("012012", 3).unwrap();
        assert_eq!(t.symbols(), &[0, 1, 2, 0, 1, 2]);
        assert!(Sequence::parse_str("013", 3).is_err());
    }

    #[test]
    fn pack_unpack_round_trip() {
        let s = Sequence::parse_str("0121", 3).unwrap();
        let v = s.pack(3).unwrap();
        assert_eq!(v, 0 * 27 + 1 * 9 + 2 * 3 + 1);
        assert_eq!(Sequence::unpack(v, 4, 3), s);
    }
}
