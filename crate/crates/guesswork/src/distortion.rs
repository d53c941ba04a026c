//! Per-letter distortion measures, distortion balls, and exact ball
//! enumeration.
//!
//! Boundary membership d(x, xhat) <= n*D must be deterministic, so when every
//! matrix entry and the level D admit an exact small-denominator rational
//! representation the threshold test runs in scaled integer arithmetic;
//! otherwise a 1e-9 absolute tolerance applies.

use crate::alphabet::Sequence;
use crate::error::{Error, Result};

/// Default cap on exhaustive reconstruction-space scans: n*log2(|alphabet|).
pub const DEFAULT_ENUM_CAP_BITS: u32 = 24;

const RATIONAL_DEN_CAP: i64 = 1_000_000;

/// Finds p/q with q <= cap such that |v - p/q| <= 1e-12 * max(1,|v|),
/// via continued fractions. Returns None when no small fraction matches.
fn to_rational(v: f64, cap: i64) -> Option<(i64, i64)> {
    if !v.is_finite() {
        return None;
    }
    let tol = 1e-12 * v.abs().max(1.0);
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, v.floor() as i64, 1i64);
    let mut frac = v - v.floor();
    for _ in 0..64 {
        if ((p1 as f64) / (q1 as f64) - v).abs() <= tol {
            return Some((p1, q1));
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let r = 1.0 / frac;
        let a = r.floor();
        frac = r - a;
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > cap {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if ((p1 as f64) / (q1 as f64) - v).abs() <= tol {
        Some((p1, q1))
    } else {
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> Option<i64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// Scaled-integer representation of the distortion matrix and level.
#[derive(Debug, Clone)]
struct ExactScale {
    /// d[x][xhat] * scale, exact integers.
    d_int: Vec<Vec<i64>>,
    /// D * scale, an exact integer.
    level_int: i64,
}

/// A per-letter distortion matrix d(x, xhat) >= 0 plus a per-letter level D.
#[derive(Debug, Clone)]
pub struct DistortionSpec {
    d: Vec<Vec<f64>>,
    level_d: f64,
    d_max: f64,
    exact: Option<ExactScale>,
}

impl DistortionSpec {
    pub fn new(d: Vec<Vec<f64>>, level_d: f64) -> Result<Self> {
        if d.is_empty() || d[0].is_empty() {
            return Err(Error::InvalidDistortion("empty matrix".into()));
        }
        let w = d[0].len();
        if d.iter().any(|row| row.len() != w) {
            return Err(Error::InvalidDistortion("ragged matrix".into()));
        }
        if d.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidDistortion(
                "entries must be finite and nonnegative".into(),
            ));
        }
        if !(level_d >= 0.0) {
            return Err(Error::InvalidDistortion(format!("level {level_d}")));
        }
        let d_max = d.iter().flatten().cloned().fold(0.0f64, f64::max);
        let exact = Self::build_exact(&d, level_d);
        Ok(DistortionSpec {
            d,
            level_d,
            d_max,
            exact,
        })
    }

    fn build_exact(d: &[Vec<f64>], level_d: f64) -> Option<ExactScale> {
        let mut den: i64 = 1;
        for &v in d.iter().flatten().chain(std::iter::once(&level_d)) {
            let (_, q) = to_rational(v, RATIONAL_DEN_CAP)?;
            den = lcm(den, q)?;
            if den > RATIONAL_DEN_CAP {
                return None;
            }
        }
        let scale_one = |v: f64| -> Option<i64> {
            let s = v * den as f64;
            let r = s.round();
            if (s - r).abs() < 1e-6 && r.abs() < 1e15 {
                Some(r as i64)
            } else {
                None
            }
        };
        let mut d_int = Vec::with_capacity(d.len());
        for row in d {
            let r: Option<Vec<i64>> = row.iter().map(|&v| scale_one(v)).collect();
            d_int.push(r?);
        }
        Some(ExactScale {
            d_int,
            level_int: scale_one(level_d)?,
        })
    }

    /// All-zero-diagonal Hamming distortion between equal-size alphabets.
    pub fn hamming(size: usize, level_d: f64) -> Result<Self> {
        let d = (0..size)
            .map(|x| (0..size).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        DistortionSpec::new(d, level_d)
    }

    pub fn with_level(&self, level_d: f64) -> Result<Self> {
        DistortionSpec::new(self.d.clone(), level_d)
    }

    pub fn level(&self) -> f64 {
        self.level_d
    }

    /// Largest matrix entry.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn source_alphabet_size(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruction_alphabet_size(&self) -> usize {
        self.d[0].len()
    }

    pub fn entry(&self, x: usize, xhat: usize) -> f64 {
        self.d[x][xhat]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.d
    }

    /// True when d(x, x) style lossless reproduction is available: every
    /// source row attains zero.
    pub fn every_row_attains_zero(&self) -> bool {
        self.d
            .iter()
            .all(|row| row.iter().any(|&v| v == 0.0))
    }

    /// True iff the spec is exact Hamming over equal-size alphabets.
    pub(crate) fn is_hamming(&self) -> bool {
        let n = self.d.len();
        if self.d[0].len() != n {
            return false;
        }
        (0..n).all(|i| {
            (0..n).all(|j| self.d[i][j] == if i == j { 0.0 } else { 1.0 })
        })
    }

    /// For Hamming specs, the integer radius of S(x) at length n: the largest
    /// k with k <= n*D under the spec's boundary semantics.
    pub(crate) fn hamming_radius(&self, n: usize) -> Option<usize> {
        if !self.is_hamming() {
            return None;
        }
        let inside = |k: usize| -> bool {
            if let Some(exact) = &self.exact {
                // d entries are exactly 0/1, so scaled distance is k * den.
                let den = exact.d_int[0][1];
                (k as i64) * den <= exact.level_int * n as i64
            } else {
                k as f64 <= self.level_d * n as f64 + 1e-9
            }
        };
        Some((0..=n).rev().find(|&k| inside(k)).unwrap_or(0))
    }

    fn check_pair(&self, x: &Sequence, xhat: &Sequence) -> Result<()> {
        if x.len() != xhat.len() {
            return Err(Error::LengthMismatch(x.len(), xhat.len()));
        }
        for i in 0..x.len() {
            if x.sym(i) >= self.d.len() {
                return Err(Error::SymbolOutOfRange {
                    symbol: x.sym(i),
                    alphabet: self.d.len(),
                });
            }
            if xhat.sym(i) >= self.d[0].len() {
                return Err(Error::SymbolOutOfRange {
                    symbol: xhat.sym(i),
                    alphabet: self.d[0].len(),
                });
            }
        }
        Ok(())
    }
}

/// Unnormalized per-block distortion: sum_i d(x_i, xhat_i).
pub fn total_distortion(x: &Sequence, xhat: &Sequence, spec: &DistortionSpec) -> Result<f64> {
    spec.check_pair(x, xhat)?;
    Ok((0..x.len())
        .map(|i| spec.entry(x.sym(i), xhat.sym(i)))
        .sum())
}

/// True iff d(x, xhat) <= n * D, ties inside.
pub fn in_ball(x: &Sequence, xhat: &Sequence, spec: &DistortionSpec) -> Result<bool> {
    spec.check_pair(x, xhat)?;
    Ok(in_ball_unchecked(x, xhat, spec))
}

pub(crate) fn in_ball_unchecked(x: &Sequence, xhat: &Sequence, spec: &DistortionSpec) -> bool {
    let n = x.len();
    if let Some(exact) = &spec.exact {
        let mut total: i64 = 0;
        for i in 0..n {
            total += exact.d_int[x.sym(i)][xhat.sym(i)];
        }
        total <= exact.level_int * n as i64
    } else {
        let total: f64 = (0..n)
            .map(|i| spec.entry(x.sym(i), xhat.sym(i)))
            .sum();
        total <= spec.level_d * n as f64 + 1e-9
    }
}

/// Iterator over the distortion ball S(x) = { xhat : d(x, xhat) <= n*D },
/// in lexicographic order over the reconstruction space.
pub struct BallIter<'a> {
    x: &'a Sequence,
    spec: &'a DistortionSpec,
    alphabet_size: usize,
    next_index: u64,
    total: u64,
}

impl<'a> Iterator for BallIter<'a> {
    type Item = Sequence;

    fn next(&mut self) -> Option<Sequence> {
        while self.next_index < self.total {
            let cand = Sequence::unpack(self.next_index, self.x.len(), self.alphabet_size);
            self.next_index += 1;
            if in_ball_unchecked(self.x, &cand, self.spec) {
                return Some(cand);
            }
        }
        None
    }
}

/// Exact enumeration of S(x). Guarded by `cap_bits >= n * log2(alphabet)`.
pub fn enumerate_ball<'a>(
    x: &'a Sequence,
    spec: &'a DistortionSpec,
    xhat_alphabet_size: usize,
    cap_bits: u32,
) -> Result<BallIter<'a>> {
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    let needed_bits = x.len() as f64 * (xhat_alphabet_size as f64).log2();
    if needed_bits > cap_bits as f64 {
        return Err(Error::CapExceeded {
            needed_bits,
            cap_bits,
        });
    }
    Ok(BallIter {
        x,
        spec,
        alphabet_size: xhat_alphabet_size,
        next_index: 0,
        total: (xhat_alphabet_size as u64).pow(x.len() as u32),
    })
}
