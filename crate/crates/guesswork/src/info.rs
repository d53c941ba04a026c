//! Information measures in bits (log base 2), with the 0*log(0) = 0 convention.

use crate::error::{Error, Result};
use crate::pmf::{CondPmf, Pmf};

pub const LN_2: f64 = std::f64::consts::LN_2;

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Shannon entropy H(Q) in bits.
pub fn entropy(q: &Pmf) -> f64 {
    -q.probs().iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Binary entropy function h(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Relative entropy D(Q || P) in bits. Support violations yield +infinity
/// rather than an error, so optimizers can skip infeasible points.
pub fn divergence(q: &Pmf, p: &Pmf) -> f64 {
    debug_assert_eq!(q.len(), p.len());
    let mut d = 0.0;
    for i in 0..q.len() {
        let qi = q.prob(i);
        if qi == 0.0 {
            continue;
        }
        let pi = p.prob(i);
        if pi == 0.0 {
            return f64::INFINITY;
        }
        d += qi * (qi / pi).log2();
    }
    d.max(0.0)
}

/// Conditional divergence D(Q_{Y|X} || W | Q_X) in bits.
pub fn cond_divergence(q_yx: &CondPmf, w: &CondPmf, q_x: &Pmf) -> f64 {
    let mut d = 0.0;
    for x in 0..q_x.len() {
        let px = q_x.prob(x);
        if px == 0.0 {
            continue;
        }
        d += px * divergence(q_yx.row(x), w.row(x));
    }
    d
}

/// Mutual information I(X;Y) in bits for input `q_x` and channel `q_yx`.
pub fn mutual_information(q_x: &Pmf, q_yx: &CondPmf) -> Result<f64> {
    let marginal = q_yx.output_marginal(q_x)?;
    Ok(cond_divergence(q_yx, &uniform_rows(&marginal, q_x.len()), q_x))
}

fn uniform_rows(row: &Pmf, n: usize) -> CondPmf {
    CondPmf::new(vec![row.clone(); n]).expect("valid rows")
}

/// Renyi entropy of order `alpha` (alpha > 0, alpha != 1) in bits.
pub fn renyi_entropy(p: &Pmf, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 {
        return Err(Error::Domain(format!("renyi order {alpha}")));
    }
    let s: f64 = p.probs().iter().map(|&pi| pi.powf(alpha)).sum();
    Ok(s.log2() / (1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_uniform_four() {
        assert!((entropy(&Pmf::uniform(4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_zero_on_equal() {
        let q = Pmf::bernoulli(0.3).unwrap();
        assert_eq!(divergence(&q, &q), 0.0);
    }

    #[test]
    fn divergence_infinite_on_support_violation() {
        let q = Pmf::bernoulli(0.5).unwrap();
        let p = Pmf::bernoulli(1.0).unwrap();
        assert!(divergence(&q, &p).is_infinite());
    }

    #[test]
    fn renyi_half_closed_form() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let expect = 2.0 * (0.3f64.sqrt() + 0.7f64.sqrt()).log2();
        assert!((renyi_entropy(&p, 0.5).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn renyi_tends_to_shannon() {
        let p = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let h = entropy(&p);
        for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
            assert!((renyi_entropy(&p, alpha).unwrap() - h).abs() <= 1e-3);
        }
    }

    #[test]
    fn mutual_information_of_identity_channel() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let i = mutual_information(&p, &CondPmf::identity(2)).unwrap();
        assert!((i - entropy(&p)).abs() < 1e-12);
    }
}
