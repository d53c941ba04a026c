//! Universal guessing distributions over the reconstruction space: exact
//! weights, exact ball probabilities, and samplers.
//!
//! The type-weighted distribution puts mass 2^{-n H(type(x))} on each x (up
//! to normalization); the LZ-weighted one puts 2^{-LZ(x)}; the block-LZ one
//! applies the LZ weight independently per length-l block; the tilted i.i.d.
//! one is the non-universal single-letter baseline.

use rand::distributions::Distribution as _;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::WeightedAliasIndex;

use crate::alphabet::Sequence;
use crate::distortion::{enumerate_ball, DistortionSpec, DEFAULT_ENUM_CAP_BITS};
use crate::error::{Error, Result};
use crate::lz::{lz_code_length, lz_decode_stream, RngBits};
use crate::pmf::Pmf;
use crate::types::{compositions, multinomial_f64, symbol_counts, type_entropy};

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    TypeWeighted,
    LzWeighted,
    BlockLz { block_len: usize },
    TiltedIid { base: Pmf, rho: f64 },
    Uniform,
}

/// Enumeration budgets, in bits of reconstruction-space size.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    /// Exhaustive-normalizer budget for the LZ-weighted kind.
    pub normalizer_bits: u32,
    /// Exact alias-table sampling budget for the LZ-weighted kind.
    pub alias_bits: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            normalizer_bits: DEFAULT_ENUM_CAP_BITS,
            alias_bits: 18,
        }
    }
}

/// An exact weight; `normalized == false` marks the unnormalized 2^{-LZ}
/// lower bound returned when the normalizer scan exceeded its cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub value: f64,
    pub normalized: bool,
}

#[derive(Debug, Clone)]
enum State {
    TypeWeighted {
        z: f64,
        /// (counts, class probability) per type, for exact sampling.
        classes: Vec<(Vec<usize>, f64)>,
    },
    LzWeighted {
        z: Option<f64>,
        alias: Option<WeightedAliasIndex<f64>>,
    },
    BlockLz {
        block_len: usize,
        z_block: f64,
        block_weights: Vec<f64>,
        alias: WeightedAliasIndex<f64>,
    },
    TiltedIid {
        letter: Pmf,
    },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Exact,
    /// LZ streaming decode; exact at complete-phrase boundaries, approximate
    /// at the final truncation.
    StreamingApprox,
}

#[derive(Debug, Clone)]
pub struct GuessingDistribution {
    kind: Kind,
    n: usize,
    alphabet_size: usize,
    state: State,
}

impl GuessingDistribution {
    pub fn new(kind: Kind, n: usize, alphabet_size: usize) -> Result<Self> {
        Self::with_caps(kind, n, alphabet_size, Caps::default())
    }

    pub fn with_caps(kind: Kind, n: usize, alphabet_size: usize, caps: Caps) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        if alphabet_size < 2 {
            return Err(Error::Domain("alphabet size must be at least 2".into()));
        }
        let space_bits = n as f64 * (alphabet_size as f64).log2();
        let state = match &kind {
            Kind::TypeWeighted => {
                let mut z = 0.0;
                let mut classes = Vec::new();
                for counts in compositions(n, alphabet_size) {
                    let w = multinomial_f64(&counts)
                        * 2f64.powf(-(n as f64) * type_entropy(&counts));
                    z += w;
                    classes.push((counts, w));
                }
                for (_, w) in &mut classes {
                    *w /= z;
                }
                State::TypeWeighted { z, classes }
            }
            Kind::LzWeighted => {
                let z = if space_bits <= caps.normalizer_bits as f64 {
                    let total = (alphabet_size as u64).pow(n as u32);
                    let mut z = 0.0;
                    for v in 0..total {
                        let x = Sequence::unpack(v, n, alphabet_size);
                        z += 2f64.powi(-(lz_code_length(&x, alphabet_size)? as i32));
                    }
                    Some(z)
                } else {
                    None
                };
                let alias = if space_bits <= caps.alias_bits as f64 {
                    let total = (alphabet_size as u64).pow(n as u32);
                    let weights: Vec<f64> = (0..total)
                        .map(|v| {
                            let x = Sequence::unpack(v, n, alphabet_size);
                            2f64.powi(-(lz_code_length(&x, alphabet_size).unwrap() as i32))
                        })
                        .collect();
                    Some(
                        WeightedAliasIndex::new(weights)
                            .map_err(|e| Error::Domain(format!("alias table: {e}")))?,
                    )
                } else {
                    None
                };
                State::LzWeighted { z, alias }
            }
            Kind::BlockLz { block_len } => {
                let l = *block_len;
                if l == 0 || n % l != 0 {
                    return Err(Error::BlockStructure(format!(
                        "block length {l} must divide n={n}"
                    )));
                }
                let block_bits = l as f64 * (alphabet_size as f64).log2();
                if block_bits > caps.normalizer_bits as f64 {
                    return Err(Error::CapExceeded {
                        needed_bits: block_bits,
                        cap_bits: caps.normalizer_bits,
                    });
                }
                let total = (alphabet_size as u64).pow(l as u32);
                let block_weights: Vec<f64> = (0..total)
                    .map(|v| {
                        let b = Sequence::unpack(v, l, alphabet_size);
                        2f64.powi(-(lz_code_length(&b, alphabet_size).unwrap() as i32))
                    })
                    .collect();
                let z_block: f64 = block_weights.iter().sum();
                let alias = WeightedAliasIndex::new(block_weights.clone())
                    .map_err(|e| Error::Domain(format!("alias table: {e}")))?;
                State::BlockLz {
                    block_len: l,
                    z_block,
                    block_weights,
                    alias,
                }
            }
            Kind::TiltedIid { base, rho } => {
                if base.len() != alphabet_size {
                    return Err(Error::AlphabetMismatch(format!(
                        "tilt base over {} letters vs alphabet {alphabet_size}",
                        base.len()
                    )));
                }
                if !(*rho >= 0.0) {
                    return Err(Error::Domain(format!("moment order {rho}")));
                }
                let expo = 1.0 / (1.0 + rho);
                let letter =
                    Pmf::normalized(base.probs().iter().map(|&p| p.powf(expo)).collect())?;
                State::TiltedIid { letter }
            }
            Kind::Uniform => State::Uniform,
        };
        Ok(GuessingDistribution {
            kind,
            n,
            alphabet_size,
            state,
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// The normalizer, when an exact one is available. For the LZ kinds this
    /// is the Kraft sum (at most 1).
    pub fn normalizer(&self) -> Option<f64> {
        match &self.state {
            State::TypeWeighted { z, .. } => Some(*z),
            State::LzWeighted { z, .. } => *z,
            State::BlockLz { z_block, .. } => Some(*z_block),
            State::TiltedIid { .. } | State::Uniform => Some(1.0),
        }
    }

    pub fn sampling_mode(&self) -> SamplingMode {
        match &self.state {
            State::LzWeighted { alias: None, .. } => SamplingMode::StreamingApprox,
            _ => SamplingMode::Exact,
        }
    }

    /// Exact probability of one reconstruction word.
    pub fn weight(&self, xhat: &Sequence) -> Result<Weight> {
        if xhat.len() != self.n {
            return Err(Error::LengthMismatch(xhat.len(), self.n));
        }
        let value = match &self.state {
            State::TypeWeighted { z, .. } => {
                let counts = symbol_counts(xhat, self.alphabet_size)?;
                2f64.powf(-(self.n as f64) * type_entropy(&counts)) / z
            }
            State::LzWeighted { z, .. } => {
                let raw = 2f64.powi(-(lz_code_length(xhat, self.alphabet_size)? as i32));
                match z {
                    Some(z) => raw / z,
                    None => {
                        return Ok(Weight {
                            value: raw,
                            normalized: false,
                        })
                    }
                }
            }
            State::BlockLz {
                block_len,
                z_block,
                block_weights,
                ..
            } => {
                let mut log2w = 0.0;
                for chunk in xhat.symbols().chunks(*block_len) {
                    let b = Sequence::new(chunk.to_vec(), self.alphabet_size)?;
                    let v = b.pack(self.alphabet_size).unwrap() as usize;
                    log2w += (block_weights[v] / z_block).log2();
                }
                2f64.powf(log2w)
            }
            State::TiltedIid { letter } => (0..self.n)
                .map(|i| letter.prob(xhat.sym(i)))
                .product(),
            State::Uniform => (self.alphabet_size as f64).powi(-(self.n as i32)),
        };
        Ok(Weight {
            value,
            normalized: true,
        })
    }

    /// Exact P[S(x)] = sum of weights over the distortion ball of `x`.
    pub fn ball_probability(&self, x: &Sequence, spec: &DistortionSpec) -> Result<f64> {
        self.ball_probability_capped(x, spec, DEFAULT_ENUM_CAP_BITS)
    }

    pub fn ball_probability_capped(
        &self,
        x: &Sequence,
        spec: &DistortionSpec,
        cap_bits: u32,
    ) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch(x.len(), self.n));
        }
        if spec.level() >= spec.d_max() {
            return Ok(1.0);
        }
        let mut total = 0.0;
        let mut cap_hit: Option<Error> = None;
        {
            let mut add = |xhat: &Sequence| match self.weight(xhat) {
                Ok(w) if w.normalized => total += w.value,
                Ok(_) => {
                    cap_hit = Some(Error::CapExceeded {
                        needed_bits: self.n as f64 * (self.alphabet_size as f64).log2(),
                        cap_bits,
                    })
                }
                Err(e) => cap_hit = Some(e),
            };
            if let Some(radius) = spec.hamming_radius(self.n) {
                for_each_hamming_member(x, radius, self.alphabet_size, &mut add);
            } else {
                for xhat in enumerate_ball(x, spec, self.alphabet_size, cap_bits)? {
                    add(&xhat);
                }
            }
        }
        match cap_hit {
            Some(e) => Err(e),
            None => Ok(total.min(1.0)),
        }
    }

    /// Draws one word. LZ-weighted beyond the alias cap falls back to the
    /// streaming decoder.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sequence {
        match &self.state {
            State::TypeWeighted { classes, .. } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = &classes[classes.len() - 1].0;
                for (counts, p) in classes {
                    acc += p;
                    if u < acc {
                        chosen = counts;
                        break;
                    }
                }
                let mut symbols = Vec::with_capacity(self.n);
                for (sym, &c) in chosen.iter().enumerate() {
                    symbols.extend(std::iter::repeat(sym as u16).take(c));
                }
                symbols.shuffle(rng);
                Sequence::from_raw(symbols)
            }
            State::LzWeighted { alias, .. } => match alias {
                Some(alias) => {
                    let v = alias.sample(rng) as u64;
                    Sequence::unpack(v, self.n, self.alphabet_size)
                }
                None => self.sample_streaming(rng),
            },
            State::BlockLz {
                block_len, alias, ..
            } => {
                let mut symbols = Vec::with_capacity(self.n);
                for _ in 0..(self.n / block_len) {
                    let v = alias.sample(rng) as u64;
                    symbols.extend(
                        Sequence::unpack(v, *block_len, self.alphabet_size)
                            .symbols()
                            .iter()
                            .copied(),
                    );
                }
                Sequence::from_raw(symbols)
            }
            State::TiltedIid { letter } => Sequence::from_raw(
                (0..self.n).map(|_| letter.sample(rng) as u16).collect(),
            ),
            State::Uniform => Sequence::from_raw(
                (0..self.n)
                    .map(|_| rng.gen_range(0..self.alphabet_size) as u16)
                    .collect(),
            ),
        }
    }

    /// Streaming sampler: feeds fair bits to the LZ decoder. Only defined
    /// for the LZ-weighted kind.
    pub fn sample_streaming<R: Rng + ?Sized>(&self, rng: &mut R) -> Sequence {
        debug_assert!(matches!(self.kind, Kind::LzWeighted));
        let mut bits = RngBits::new(rng);
        lz_decode_stream(&mut bits, self.n, self.alphabet_size)
    }
}

/// Visits every sequence within Hamming distance `radius` of `x`, including
/// `x` itself, each exactly once.
fn for_each_hamming_member(
    x: &Sequence,
    radius: usize,
    alphabet_size: usize,
    f: &mut impl FnMut(&Sequence),
) {
    fn visit(
        scratch: &mut Vec<u16>,
        x: &Sequence,
        from: usize,
        budget: usize,
        alpha: usize,
        f: &mut impl FnMut(&Sequence),
    ) {
        f(&Sequence::from_raw(scratch.clone()));
        if budget == 0 {
            return;
        }
        for pos in from..x.len() {
            let orig = scratch[pos];
            for sub in 0..alpha as u16 {
                if sub == orig {
                    continue;
                }
                scratch[pos] = sub;
                visit(scratch, x, pos + 1, budget - 1, alpha, f);
            }
            scratch[pos] = orig;
        }
    }
    let mut scratch = x.symbols().to_vec();
    visit(&mut scratch, x, 0, radius, alphabet_size, f);
}
