//! LZ78 incremental parsing, the bit-level code-length convention, and the
//! streaming decoder used as a sampler.
//!
//! Code-length convention: phrase j (1-based) costs ceil(log2 j) bits for its
//! prefix index plus ceil(log2 alpha) bits for its last symbol; an incomplete
//! final phrase costs ceil(log2(c+1)) bits for its dictionary index alone.
//! The code is uniquely decodable given the target length, so the Kraft sum
//! over every output length stays at most one and the induced weights satisfy
//! w(x) >= 2^-LZ(x).

use crate::alphabet::Sequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LzParse {
    /// Complete phrases as (prefix index, last symbol); index 0 is the empty
    /// root, phrase j is entry j-1.
    pub phrases: Vec<(usize, u16)>,
    /// Dictionary index of the incomplete final phrase, if any.
    pub tail: Option<usize>,
    pub alphabet_size: usize,
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        (x - 1).ilog2() + 1
    }
}

impl LzParse {
    /// Number of distinct complete phrases c(x).
    pub fn phrase_count(&self) -> usize {
        self.phrases.len()
    }

    /// Symbols of phrase `index` (1-based; 0 is the empty root).
    pub fn phrase_symbols(&self, index: usize) -> Vec<u16> {
        let mut rev = Vec::new();
        let mut i = index;
        while i != 0 {
            let (prefix, sym) = self.phrases[i - 1];
            rev.push(sym);
            i = prefix;
        }
        rev.reverse();
        rev
    }

    /// Rebuilds the parsed input.
    pub fn reconstruct(&self) -> Sequence {
        let mut symbols = Vec::new();
        for j in 1..=self.phrases.len() {
            symbols.extend(self.phrase_symbols(j));
        }
        if let Some(t) = self.tail {
            symbols.extend(self.phrase_symbols(t));
        }
        Sequence::from_raw(symbols)
    }

    /// Total code length in bits under the crate's convention.
    pub fn code_length(&self) -> u64 {
        let sym_bits = ceil_log2(self.alphabet_size) as u64;
        let mut bits = 0u64;
        for j in 1..=self.phrases.len() {
            bits += ceil_log2(j) as u64 + sym_bits;
        }
        if self.tail.is_some() {
            bits += ceil_log2(self.phrases.len() + 1) as u64;
        }
        bits
    }
}

/// Incremental (shortest new phrase) parse of a nonempty sequence.
pub fn lz78_parse(xhat: &Sequence, alphabet_size: usize) -> Result<LzParse> {
    if xhat.is_empty() {
        return Err(Error::EmptySequence);
    }
    // Trie over dictionary entries; children[node][symbol] = node+1 or 0.
    let mut children: Vec<Vec<u32>> = vec![vec![0; alphabet_size]];
    let mut phrases: Vec<(usize, u16)> = Vec::new();
    let mut node = 0usize;
    for i in 0..xhat.len() {
        let s = xhat.sym(i);
        if s >= alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                alphabet: alphabet_size,
            });
        }
        let child = children[node][s] as usize;
        if child != 0 {
            node = child;
        } else {
            phrases.push((node, s as u16));
            let new_id = children.len();
            children[node][s] = new_id as u32;
            children.push(vec![0; alphabet_size]);
            node = 0;
        }
    }
    let tail = if node != 0 { Some(node) } else { None };
    Ok(LzParse {
        phrases,
        tail,
        alphabet_size,
    })
}

/// LZ(x): code length in bits of the sequence under the crate's convention.
pub fn lz_code_length(xhat: &Sequence, alphabet_size: usize) -> Result<u64> {
    Ok(lz78_parse(xhat, alphabet_size)?.code_length())
}

/// Fair-bit supplier for the streaming decoder.
pub trait BitSource {
    fn next_bit(&mut self) -> u8;
}

pub struct RngBits<'a, R: rand::Rng> {
    rng: &'a mut R,
    buf: u64,
    left: u32,
}

impl<'a, R: rand::Rng> RngBits<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        RngBits {
            rng,
            buf: 0,
            left: 0,
        }
    }
}

impl<R: rand::Rng> BitSource for RngBits<'_, R> {
    fn next_bit(&mut self) -> u8 {
        if self.left == 0 {
            self.buf = self.rng.gen();
            self.left = 64;
        }
        let b = (self.buf & 1) as u8;
        self.buf >>= 1;
        self.left -= 1;
        b
    }
}

/// Bit slice source; reads past the end yield zeros.
pub struct SliceBits<'a> {
    bits: &'a [u8],
    pos: usize,
}

impl<'a> SliceBits<'a> {
    pub fn new(bits: &'a [u8]) -> Self {
        SliceBits { bits, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl BitSource for SliceBits<'_> {
    fn next_bit(&mut self) -> u8 {
        let b = self.bits.get(self.pos).copied().unwrap_or(0) & 1;
        self.pos += 1;
        b
    }
}

/// Encodes a parse to bits (MSB-first fields) under the convention.
pub fn lz_encode(parse: &LzParse) -> Vec<u8> {
    let sym_bits = ceil_log2(parse.alphabet_size);
    let mut bits = Vec::new();
    let mut push = |value: usize, width: u32| {
        for k in (0..width).rev() {
            bits.push(((value >> k) & 1) as u8);
        }
    };
    for (j, &(prefix, sym)) in parse.phrases.iter().enumerate() {
        push(prefix, ceil_log2(j + 1));
        push(sym as usize, sym_bits);
    }
    if let Some(t) = parse.tail {
        push(t, ceil_log2(parse.phrases.len() + 1));
    }
    bits
}

/// Streaming LZ decoder: consumes per-phrase fields until `n` symbols are
/// produced. Field values outside their valid range are redrawn, so any bit
/// stream decodes; a final phrase longer than the residual length is emitted
/// as the residual-length prefix of its dictionary string.
pub fn lz_decode_stream<B: BitSource>(bits: &mut B, n: usize, alphabet_size: usize) -> Sequence {
    let sym_bits = ceil_log2(alphabet_size);
    // Dictionary entry: (prefix index, symbol, materialized length).
    let mut dict: Vec<(usize, u16, usize)> = Vec::new();
    let mut out: Vec<u16> = Vec::with_capacity(n);

    let mut read_value = |bits: &mut B, width: u32, bound: usize| -> usize {
        loop {
            let mut v = 0usize;
            for _ in 0..width {
                v = (v << 1) | bits.next_bit() as usize;
            }
            if v < bound {
                return v;
            }
        }
    };

    let phrase_len = |dict: &[(usize, u16, usize)], idx: usize| -> usize {
        if idx == 0 {
            0
        } else {
            dict[idx - 1].2
        }
    };

    fn emit(dict: &[(usize, u16, usize)], idx: usize, take: usize, out: &mut Vec<u16>) {
        let mut rev = Vec::new();
        let mut i = idx;
        while i != 0 {
            let (prefix, sym, _) = dict[i - 1];
            rev.push(sym);
            i = prefix;
        }
        rev.reverse();
        out.extend(rev.into_iter().take(take));
    }

    while out.len() < n {
        let remaining = n - out.len();
        let j = dict.len() + 1;
        let idx = read_value(bits, ceil_log2(j), j);
        let len = phrase_len(&dict, idx);
        if len >= remaining {
            emit(&dict, idx, remaining, &mut out);
            break;
        }
        let sym = read_value(bits, sym_bits, alphabet_size) as u16;
        dict.push((idx, sym, len + 1));
        emit(&dict, dict.len(), len + 1, &mut out);
    }
    Sequence::from_raw(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str, alpha: usize) -> Sequence {
        Sequence::parse_str(s, alpha).unwrap()
    }

    #[test]
    fn paper_parsing_example() {
        let x = seq("01101101110010111", 2);
        let p = lz78_parse(&x, 2).unwrap();
        assert_eq!(p.phrase_count(), 8);
        let phrase_strings: Vec<String> = (1..=8)
            .map(|j| {
                p.phrase_symbols(j)
                    .iter()
                    .map(|&s| char::from(b'0' + s as u8))
                    .collect()
            })
            .collect();
        assert_eq!(
            phrase_strings,
            vec!["0", "1", "10", "11", "01", "110", "010", "111"]
        );
        assert_eq!(p.tail, None);
        assert_eq!(p.code_length(), 25);
        assert_eq!(p.reconstruct(), x);
    }

    #[test]
    fn all_zero_phrase_count_is_triangular() {
        for n in [1usize, 2, 3, 6, 10, 17, 40] {
            let x = Sequence::new(vec![0; n], 2).unwrap();
            let p = lz78_parse(&x, 2).unwrap();
            let c = ((((8 * n + 1) as f64).sqrt() - 1.0) / 2.0).ceil() as usize;
            assert_eq!(p.phrase_count(), c, "n={n}");
            assert_eq!(p.reconstruct(), x);
        }
    }

    #[test]
    fn single_symbol() {
        let x = seq("0", 2);
        let p = lz78_parse(&x, 2).unwrap();
        assert_eq!(p.phrase_count(), 1);
        assert_eq!(p.code_length(), 1);
    }

    #[test]
    fn phrases_within_a_parse_are_distinct() {
        for v in 0..(1u64 << 12) {
            let x = Sequence::unpack(v, 12, 2);
            let p = lz78_parse(&x, 2).unwrap();
            let mut seen = std::collections::HashSet::new();
            for j in 1..=p.phrase_count() {
                assert!(seen.insert(p.phrase_symbols(j)));
            }
            // Prefix links always point backwards.
            for (j, &(prefix, _)) in p.phrases.iter().enumerate() {
                assert!(prefix <= j);
            }
        }
    }

    #[test]
    fn decode_of_encode_identity_small() {
        for n in 1..=10usize {
            for v in 0..(1u64 << n) {
                let x = Sequence::unpack(v, n, 2);
                let p = lz78_parse(&x, 2).unwrap();
                let bits = lz_encode(&p);
                let mut src = SliceBits::new(&bits);
                let back = lz_decode_stream(&mut src, n, 2);
                assert_eq!(back, x, "n={n} v={v:b}");
                assert_eq!(src.consumed(), bits.len());
            }
        }
    }

    #[test]
    fn decode_simple_prefix_stream() {
        // Phrase fields (0,'0') then (1,'0') decode to 0 00 ... prefix.
        let bits = [0u8, /* sym 0 */ 1, /* idx=1 */ 0 /* sym 0 */];
        let mut src = SliceBits::new(&bits);
        let out = lz_decode_stream(&mut src, 3, 2);
        assert_eq!(out.to_symbol_string(), "000");
    }

    #[test]
    fn ternary_round_trip() {
        for v in 0..3u64.pow(6) {
            let x = Sequence::unpack(v, 6, 3);
            let p = lz78_parse(&x, 3).unwrap();
            assert_eq!(p.reconstruct(), x);
            let bits = lz_encode(&p);
            let mut src = SliceBits::new(&bits);
            assert_eq!(lz_decode_stream(&mut src, 6, 3), x);
        }
    }

    #[test]
    fn kraft_holds_small_lengths() {
        for n in 1..=10usize {
            let mut sum = 0.0f64;
            for v in 0..(1u64 << n) {
                let x = Sequence::unpack(v, n, 2);
                sum += 2f64.powi(-(lz_code_length(&x, 2).unwrap() as i32));
            }
            assert!(sum <= 1.0 + 1e-12, "n={n} kraft sum {sum}");
        }
    }
}
