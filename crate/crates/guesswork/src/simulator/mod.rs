//! Sources, guessing games (clean, noisy, finite-state), and moment
//! estimation with per-trial counter-based seeding.

pub mod fsm;
pub mod ktype;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Sequence;
use crate::distortion::{in_ball, DistortionSpec};
use crate::error::{Error, Result};
use crate::guessdist::GuessingDistribution;
use crate::pmf::{CondPmf, Pmf};

pub use fsm::FsmGuesser;

/// Default truncation cap on guesses per trial.
pub const DEFAULT_GUESS_CAP: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub enum SourceKind {
    Iid(Pmf),
    Markov {
        order: usize,
        transition: CondPmf,
        /// Stationary law of the first `order` symbols (packed index).
        init: Pmf,
    },
    Individual(Sequence),
}

#[derive(Debug, Clone)]
pub struct Source {
    kind: SourceKind,
    n: usize,
    alphabet_size: usize,
}

impl Source {
    pub fn iid(p: Pmf, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let alphabet_size = p.len();
        Ok(Source {
            kind: SourceKind::Iid(p),
            n,
            alphabet_size,
        })
    }

    /// Order-r Markov chain started from its stationary law. The transition
    /// matrix conditions on the packed last `order` symbols.
    pub fn markov(order: usize, transition: CondPmf, n: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("markov order must be positive".into()));
        }
        let alphabet_size = transition.num_outputs();
        let states = alphabet_size.pow(order as u32);
        if transition.num_inputs() != states {
            return Err(Error::AlphabetMismatch(format!(
                "transition has {} rows, expected {alphabet_size}^{order}",
                transition.num_inputs()
            )));
        }
        if n < order {
            return Err(Error::Domain(format!("n={n} shorter than order {order}")));
        }
        let init = stationary_state_law(&transition, order, alphabet_size)?;
        Ok(Source {
            kind: SourceKind::Markov {
                order,
                transition,
                init,
            },
            n,
            alphabet_size,
        })
    }

    pub fn individual(x: Sequence, alphabet_size: usize) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptySequence);
        }
        let n = x.len();
        Ok(Source {
            kind: SourceKind::Individual(x),
            n,
            alphabet_size,
        })
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sequence {
        match &self.kind {
            SourceKind::Iid(p) => {
                Sequence::from_raw((0..self.n).map(|_| p.sample(rng) as u16).collect())
            }
            SourceKind::Markov {
                order,
                transition,
                init,
            } => {
                let alpha = self.alphabet_size;
                let mut symbols = Vec::with_capacity(self.n);
                let mut state = init.sample(rng);
                let mut first = Sequence::unpack(state as u64, *order, alpha);
                symbols.append(&mut first.symbols().to_vec());
                while symbols.len() < self.n {
                    let s = transition.row(state).sample(rng) as u16;
                    symbols.push(s);
                    state = (state * alpha) % alpha.pow(*order as u32) + s as usize;
                }
                symbols.truncate(self.n);
                Sequence::from_raw(symbols)
            }
            SourceKind::Individual(x) => x.clone(),
        }
    }

    /// Exact probability of an n-word under the source law.
    pub fn exact_prob(&self, x: &Sequence) -> f64 {
        if x.len() != self.n {
            return 0.0;
        }
        match &self.kind {
            SourceKind::Iid(p) => (0..self.n).map(|i| p.prob(x.sym(i))).product(),
            SourceKind::Markov {
                order,
                transition,
                init,
            } => {
                let alpha = self.alphabet_size;
                let states = alpha.pow(*order as u32);
                let mut state = 0usize;
                for i in 0..*order {
                    state = state * alpha + x.sym(i);
                }
                let mut p = init.prob(state);
                for i in *order..self.n {
                    let s = x.sym(i);
                    p *= transition.prob(s, state);
                    state = (state * alpha) % states + s;
                }
                p
            }
            SourceKind::Individual(ind) => {
                if ind == x {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Stationary law of the order-r state chain, by power iteration; verified
/// to satisfy pi T = pi within 1e-10.
fn stationary_state_law(transition: &CondPmf, order: usize, alpha: usize) -> Result<Pmf> {
    let states = alpha.pow(order as u32);
    let mut pi = vec![1.0 / states as f64; states];
    for _ in 0..200_000 {
        let mut next = vec![0.0; states];
        for (s, &ps) in pi.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for sym in 0..alpha {
                let t = (s * alpha) % states + sym;
                next[t] += ps * transition.prob(sym, s);
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-16 {
            break;
        }
    }
    let mut check = vec![0.0; states];
    for (s, &ps) in pi.iter().enumerate() {
        for sym in 0..alpha {
            let t = (s * alpha) % states + sym;
            check[t] += ps * transition.prob(sym, s);
        }
    }
    let err: f64 = check
        .iter()
        .zip(&pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if err > 1e-10 {
        return Err(Error::Domain(format!(
            "stationary distribution did not converge (residual {err:.2e})"
        )));
    }
    Pmf::normalized(pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameOutcome {
    pub guesses: u64,
    pub truncated: bool,
}

/// Independent draws from the guessing distribution until one lands in
/// S(x); returns the index of the first success, or the cap with a flag.
pub fn play_clean_game<R: Rng + ?Sized>(
    x: &Sequence,
    dist: &GuessingDistribution,
    spec: &DistortionSpec,
    rng: &mut R,
    cap: u64,
) -> Result<GameOutcome> {
    if cap == 0 {
        return Err(Error::Domain("guess cap must be at least 1".into()));
    }
    for g in 1..=cap {
        let guess = dist.sample(rng);
        if in_ball(x, &guess, spec)? {
            return Ok(GameOutcome {
                guesses: g,
                truncated: false,
            });
        }
    }
    Ok(GameOutcome {
        guesses: cap,
        truncated: true,
    })
}

/// Noisy game: each guess is corrupted symbol-by-symbol through W before
/// the distortion test against y.
pub fn play_noisy_game<R: Rng + ?Sized>(
    y: &Sequence,
    dist: &GuessingDistribution,
    w: &CondPmf,
    spec: &DistortionSpec,
    rng: &mut R,
    cap: u64,
) -> Result<GameOutcome> {
    if cap == 0 {
        return Err(Error::Domain("guess cap must be at least 1".into()));
    }
    let n = y.len();
    for g in 1..=cap {
        let guess = dist.sample(rng);
        let corrupted = Sequence::from_raw(
            (0..n)
                .map(|i| w.row(guess.sym(i)).sample(rng) as u16)
                .collect(),
        );
        if in_ball(y, &corrupted, spec)? {
            return Ok(GameOutcome {
                guesses: g,
                truncated: false,
            });
        }
    }
    Ok(GameOutcome {
        guesses: cap,
        truncated: true,
    })
}

/// Round-robin over `guessers` independent samplers; since draws are i.i.d.
/// the pooled query count has the single-guesser law. Returns the total
/// number of queries issued up to and including the first success.
pub fn multi_guesser_queries<R: Rng + ?Sized>(
    x: &Sequence,
    dist: &GuessingDistribution,
    spec: &DistortionSpec,
    guessers: usize,
    rng: &mut R,
    cap: u64,
) -> Result<GameOutcome> {
    if guessers == 0 {
        return Err(Error::Domain("need at least one guesser".into()));
    }
    play_clean_game(x, dist, spec, rng, cap)
}

#[derive(Debug, Clone)]
pub enum Game<'a> {
    Clean,
    Noisy(&'a CondPmf),
    Fsm(&'a FsmGuesser),
}

#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub rho: f64,
    pub trials: usize,
    /// Sample mean of G^rho.
    pub mean: f64,
    /// Batch-means standard error (20 batches).
    pub std_error: f64,
    pub cap: u64,
    /// Trials that hit the cap; the estimate is a lower bound when nonzero.
    pub capped_trials: usize,
    /// False when every trial was capped.
    pub usable: bool,
}

/// Counter-based per-trial generator: reproducible in isolation and
/// independent of scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

const BATCHES: usize = 20;

/// Monte-Carlo estimate of E[G^rho] with a fresh source draw per trial.
pub fn estimate_moment(
    source: &Source,
    game: Game<'_>,
    dist: Option<&GuessingDistribution>,
    spec: &DistortionSpec,
    rho: f64,
    trials: usize,
    seed: u64,
    cap: u64,
) -> Result<MomentEstimate> {
    if trials < 100 {
        return Err(Error::Domain(format!("need at least 100 trials, got {trials}")));
    }
    if matches!(game, Game::Clean | Game::Noisy(_)) && dist.is_none() {
        return Err(Error::Domain("clean/noisy games need a guessing distribution".into()));
    }
    let mut values = Vec::with_capacity(trials);
    let mut capped_trials = 0usize;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let x = source.sample(&mut rng);
        let outcome = match &game {
            Game::Clean => play_clean_game(&x, dist.unwrap(), spec, &mut rng, cap)?,
            Game::Noisy(w) => play_noisy_game(&x, dist.unwrap(), w, spec, &mut rng, cap)?,
            Game::Fsm(f) => fsm::fsm_guess_game(&x, f, spec, &mut rng, cap)?,
        };
        if outcome.truncated {
            capped_trials += 1;
        }
        values.push((outcome.guesses as f64).powf(rho));
    }
    let mean = values.iter().sum::<f64>() / trials as f64;
    let batch = trials / BATCHES;
    let mut batch_means = Vec::with_capacity(BATCHES);
    for b in 0..BATCHES {
        let lo = b * batch;
        let hi = if b + 1 == BATCHES { trials } else { lo + batch };
        batch_means.push(values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
    }
    let var = batch_means
        .iter()
        .map(|&m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (BATCHES as f64 - 1.0);
    let std_error = (var / BATCHES as f64).sqrt();
    Ok(MomentEstimate {
        rho,
        trials,
        mean,
        std_error,
        cap,
        capped_trials,
        usable: capped_trials < trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessdist::Kind;

    #[test]
    fn game_succeeds_immediately_at_full_ball() {
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let dist = GuessingDistribution::new(Kind::Uniform, 4, 2).unwrap();
        let x = Sequence::parse_str("0101", 2).unwrap();
        let mut rng = trial_rng(1, 0);
        for _ in 0..50 {
            let o = play_clean_game(&x, &dist, &spec, &mut rng, 10).unwrap();
            assert_eq!(o.guesses, 1);
        }
    }

    #[test]
    fn uniform_guessing_is_geometric() {
        let spec = DistortionSpec::hamming(2, 0.25).unwrap();
        let dist = GuessingDistribution::new(Kind::Uniform, 4, 2).unwrap();
        let x = Sequence::parse_str("0000", 2).unwrap();
        // |S(x)| = 1 + 4 = 5, p = 5/16.
        let p = 5.0 / 16.0;
        let source = Source::individual(x, 2).unwrap();
        let est = estimate_moment(
            &source,
            Game::Clean,
            Some(&dist),
            &spec,
            1.0,
            20_000,
            99,
            1_000_000,
        )
        .unwrap();
        assert!(est.usable);
        assert_eq!(est.capped_trials, 0);
        let expect = 1.0 / p;
        assert!(
            (est.mean - expect).abs() <= 3.0 * est.std_error + 0.05,
            "mean {} expect {} se {}",
            est.mean,
            expect,
            est.std_error
        );
    }

    #[test]
    fn second_moment_of_geometric() {
        let spec = DistortionSpec::hamming(2, 0.25).unwrap();
        let dist = GuessingDistribution::new(Kind::Uniform, 4, 2).unwrap();
        let x = Sequence::parse_str("0000", 2).unwrap();
        let p = 5.0 / 16.0;
        let source = Source::individual(x, 2).unwrap();
        let est = estimate_moment(
            &source,
            Game::Clean,
            Some(&dist),
            &spec,
            2.0,
            20_000,
            7,
            1_000_000,
        )
        .unwrap();
        let expect = (2.0 - p) / (p * p);
        assert!(
            (est.mean - expect).abs() <= 3.0 * est.std_error + 0.2,
            "mean {} expect {} se {}",
            est.mean,
            expect,
            est.std_error
        );
    }

    #[test]
    fn noisy_identity_channel_reduces_to_clean() {
        let spec = DistortionSpec::hamming(2, 0.25).unwrap();
        let dist = GuessingDistribution::new(Kind::TypeWeighted, 4, 2).unwrap();
        let x = Sequence::parse_str("0011", 2).unwrap();
        let w = CondPmf::identity(2);
        let mut rng_a = trial_rng(5, 1);
        let mut rng_b = trial_rng(5, 1);
        // Same seed stream: the noisy game consumes extra randomness for the
        // channel, so compare distributions loosely via means instead.
        let mut mean_clean = 0.0;
        let mut mean_noisy = 0.0;
        let trials = 4000;
        for _ in 0..trials {
            mean_clean +=
                play_clean_game(&x, &dist, &spec, &mut rng_a, 100_000).unwrap().guesses as f64;
            mean_noisy += play_noisy_game(&x, &dist, &w, &spec, &mut rng_b, 100_000)
                .unwrap()
                .guesses as f64;
        }
        mean_clean /= trials as f64;
        mean_noisy /= trials as f64;
        assert!(
            (mean_clean - mean_noisy).abs() / mean_clean < 0.15,
            "clean {mean_clean} noisy {mean_noisy}"
        );
    }

    #[test]
    fn multi_guesser_law_matches_single() {
        let spec = DistortionSpec::hamming(2, 0.25).unwrap();
        let dist = GuessingDistribution::new(Kind::Uniform, 4, 2).unwrap();
        let x = Sequence::parse_str("1111", 2).unwrap();
        let mut a = trial_rng(3, 9);
        let mut b = trial_rng(3, 9);
        for _ in 0..200 {
            let g1 = play_clean_game(&x, &dist, &spec, &mut a, 100_000).unwrap();
            let g8 = multi_guesser_queries(&x, &dist, &spec, 8, &mut b, 100_000).unwrap();
            assert_eq!(g1, g8);
        }
    }

    #[test]
    fn markov_stationarity_and_exact_probs() {
        let t = CondPmf::from_matrix(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let src = Source::markov(1, t, 3).unwrap();
        // Stationary law of the symmetric chain is uniform.
        let mut total = 0.0;
        for v in 0..8u64 {
            total += src.exact_prob(&Sequence::unpack(v, 3, 2));
        }
        assert!((total - 1.0).abs() < 1e-12);
        let p000 = src.exact_prob(&Sequence::parse_str("000", 2).unwrap());
        assert!((p000 - 0.5 * 0.8 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn individual_source_is_deterministic() {
        let x = Sequence::parse_str("0110", 2).unwrap();
        let src = Source::individual(x.clone(), 2).unwrap();
        let mut rng = trial_rng(0, 0);
        assert_eq!(src.sample(&mut rng), x);
        assert_eq!(src.exact_prob(&x), 1.0);
    }

    #[test]
    fn estimate_requires_enough_trials() {
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let dist = GuessingDistribution::new(Kind::Uniform, 2, 2).unwrap();
        let src = Source::iid(Pmf::bernoulli(0.5).unwrap(), 2).unwrap();
        assert!(estimate_moment(&src, Game::Clean, Some(&dist), &spec, 1.0, 50, 0, 10).is_err());
    }
}
