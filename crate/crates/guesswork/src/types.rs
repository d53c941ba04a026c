//! Method-of-types utilities: empirical distributions, type enumeration,
//! and exact type-class sizes via big-integer multinomials.

use num_bigint::BigUint;

use crate::alphabet::Sequence;
use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// Empirical distribution of a nonempty sequence over `alphabet_size` symbols.
pub fn empirical_type(x: &Sequence, alphabet_size: usize) -> Result<Pmf> {
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    let counts = symbol_counts(x, alphabet_size)?;
    let n = x.len() as f64;
    Pmf::new(counts.iter().map(|&c| c as f64 / n).collect())
}

pub fn symbol_counts(x: &Sequence, alphabet_size: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; alphabet_size];
    for i in 0..x.len() {
        let s = x.sym(i);
        if s >= alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                alphabet: alphabet_size,
            });
        }
        counts[s] += 1;
    }
    Ok(counts)
}

/// All count vectors (c_0, ..., c_{alpha-1}) with sum n, lexicographic.
pub fn compositions(n: usize, alpha: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; alpha];
    fill(n, 0, &mut cur, &mut out);
    out
}

fn fill(remaining: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for c in 0..=remaining {
        cur[pos] = c;
        fill(remaining - c, pos + 1, cur, out);
    }
}

/// |T(Q)| = n! / prod(counts!), exact.
pub fn multinomial(counts: &[usize]) -> BigUint {
    let n: usize = counts.iter().sum();
    let mut num = BigUint::from(1u32);
    for k in 2..=n {
        num *= BigUint::from(k);
    }
    for &c in counts {
        for k in 2..=c {
            num /= BigUint::from(k);
        }
    }
    num
}

/// Multinomial coefficient as f64 (exact up to f64 rounding).
pub fn multinomial_f64(counts: &[usize]) -> f64 {
    biguint_to_f64(&multinomial(counts))
}

fn biguint_to_f64(v: &BigUint) -> f64 {
    let digits = v.to_radix_be(2);
    let mut acc = 0.0f64;
    for &bit in digits.iter().take(64) {
        acc = acc * 2.0 + bit as f64;
    }
    if digits.len() > 64 {
        acc * 2f64.powi(digits.len() as i32 - 64)
    } else {
        acc
    }
}

/// Entropy in bits of the type with the given counts.
pub fn type_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_type_examples() {
        let t = empirical_type(&Sequence::parse_str("0110", 2).unwrap(), 2).unwrap();
        assert_eq!(t.probs(), &[0.5, 0.5]);
        let t = empirical_type(&Sequence::parse_str("0000", 2).unwrap(), 2).unwrap();
        assert_eq!(t.probs(), &[1.0, 0.0]);
        let t = empirical_type(&Sequence::parse_str("012012", 3).unwrap(), 3).unwrap();
        for i in 0..3 {
            assert!((t.prob(i) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_sequence_rejected() {
        assert!(empirical_type(&Sequence::new(vec![], 2).unwrap(), 2).is_err());
    }

    #[test]
    fn composition_count_and_multinomials() {
        let comps = compositions(4, 2);
        assert_eq!(comps.len(), 5);
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u32));
        assert_eq!(multinomial_f64(&[2, 2]), 6.0);
        // Sum over types reproduces the whole space.
        let total: f64 = compositions(6, 3).iter().map(|c| multinomial_f64(c)).sum();
        assert_eq!(total, 3f64.powi(6));
    }

    #[test]
    fn type_entropy_matches_pmf_entropy() {
        let h = type_entropy(&[3, 1]);
        assert!((h - crate::info::binary_entropy(0.75)).abs() < 1e-12);
    }
}
