//! Probability vectors and stochastic matrices over finite alphabets.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A probability mass function over `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates nonnegativity and unit sum (within 1e-12).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty".into()));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::InvalidPmf(format!("negative or NaN entry {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("sum {s} differs from 1")));
        }
        Ok(Pmf { probs })
    }

    /// Rescales a nonnegative vector to sum to one.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPmf("empty".into()));
        }
        if let Some(p) = weights.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::InvalidPmf(format!("negative or NaN entry {p}")));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidPmf("zero total mass".into()));
        }
        for w in &mut weights {
            *w /= s;
        }
        Ok(Pmf { probs: weights })
    }

    pub fn uniform(len: usize) -> Self {
        Pmf {
            probs: vec![1.0 / len as f64; len],
        }
    }

    /// Two-point distribution (p, 1-p).
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidPmf(format!("bernoulli parameter {p}")));
        }
        Ok(Pmf {
            probs: vec![p, 1.0 - p],
        })
    }

    pub fn point_mass(index: usize, len: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Pmf { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    /// Draws one index by inverse CDF.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// A row-stochastic matrix: one [`Pmf`] per conditioning symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPmf {
    rows: Vec<Pmf>,
}

impl CondPmf {
    pub fn new(rows: Vec<Pmf>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidPmf("no rows".into()));
        }
        let w = rows[0].len();
        if rows.iter().any(|r| r.len() != w) {
            return Err(Error::InvalidPmf("ragged rows".into()));
        }
        Ok(CondPmf { rows })
    }

    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.into_iter().map(Pmf::new).collect::<Result<_>>()?;
        CondPmf::new(rows)
    }

    /// Binary symmetric channel with crossover `delta`.
    pub fn bsc(delta: f64) -> Result<Self> {
        CondPmf::new(vec![Pmf::bernoulli(1.0 - delta)?, Pmf::bernoulli(delta)?])
    }

    pub fn identity(size: usize) -> Self {
        CondPmf {
            rows: (0..size).map(|i| Pmf::point_mass(i, size)).collect(),
        }
    }

    /// Number of conditioning symbols (rows).
    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    /// Size of the output alphabet (columns).
    pub fn num_outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &Pmf {
        &self.rows[x]
    }

    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.rows[x].prob(y)
    }

    /// Output marginal `sum_x input(x) * rows[x]`.
    pub fn output_marginal(&self, input: &Pmf) -> Result<Pmf> {
        if input.len() != self.num_inputs() {
            return Err(Error::AlphabetMismatch(format!(
                "input pmf of size {} vs {} rows",
                input.len(),
                self.num_inputs()
            )));
        }
        let mut out = vec![0.0; self.num_outputs()];
        for x in 0..self.num_inputs() {
            let px = input.prob(x);
            if px == 0.0 {
                continue;
            }
            for y in 0..self.num_outputs() {
                out[y] += px * self.prob(y, x);
            }
        }
        Pmf::normalized(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_sum_and_sign() {
        assert!(Pmf::new(vec![0.5, 0.5]).is_ok());
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn output_marginal_of_bsc() {
        let w = CondPmf::bsc(0.1).unwrap();
        let q = w.output_marginal(&Pmf::bernoulli(1.0).unwrap()).unwrap();
        assert!((q.prob(0) - 0.9).abs() < 1e-15);
        assert!((q.prob(1) - 0.1).abs() < 1e-15);
    }
}
