//! Rate-distortion solvers: Blahut-Arimoto with slope bisection for the
//! per-letter R(D,Q), the same machinery over super-alphabets for
//! block-memoryless sources, and the binary-Hamming closed form used as a
//! test oracle.

use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::info::{binary_entropy, LN_2};
use crate::pmf::{CondPmf, Pmf};

/// Default super-alphabet cap for block solves.
pub const DEFAULT_SUPER_ALPHABET_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct RdSolution {
    /// Bits; per letter for [`rate_distortion`], per block for
    /// [`block_rate_distortion`].
    pub rate: f64,
    /// Achieving test channel P(xhat | x).
    pub test_channel: CondPmf,
    /// Reconstruction marginal induced by the source and the test channel.
    pub output_marginal: Pmf,
    /// Expected distortion of the test channel, same normalization as the
    /// solved level (per letter or per block).
    pub achieved_distortion: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; the best iterate is reported.
    pub converged: bool,
}

/// Zero-rate threshold: min over reconstruction letters of E_Q d(X, xhat).
pub fn d_max_threshold(q: &Pmf, spec: &DistortionSpec) -> f64 {
    (0..spec.reconstruction_alphabet_size())
        .map(|xh| {
            (0..q.len())
                .map(|x| q.prob(x) * spec.entry(x, xh))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum achievable distortion: E_Q min_xhat d(X, xhat).
pub fn d_min_threshold(q: &Pmf, spec: &DistortionSpec) -> f64 {
    (0..q.len())
        .map(|x| {
            q.prob(x)
                * (0..spec.reconstruction_alphabet_size())
                    .map(|xh| spec.entry(x, xh))
                    .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// R(D, Q) for a memoryless source, to within `tol` bits.
///
/// The slope (Lagrange) parameter is bisected until the certified dual lower
/// bound and the best feasible channel's mutual information agree within
/// `tol`; linear segments of the curve are resolved by mixing the two
/// bracketing channels.
pub fn rate_distortion(q: &Pmf, spec: &DistortionSpec, tol: f64) -> Result<RdSolution> {
    if q.len() != spec.source_alphabet_size() {
        return Err(Error::AlphabetMismatch(format!(
            "source pmf of size {} vs distortion rows {}",
            q.len(),
            spec.source_alphabet_size()
        )));
    }
    let target = spec.level();

    // Zero-mass source symbols break the BA update; solve on the support and
    // reinsert deterministic rows afterwards.
    let support: Vec<usize> = q.support().collect();
    if support.len() < q.len() {
        let reduced_q = Pmf::normalized(support.iter().map(|&x| q.prob(x)).collect())?;
        let reduced_d: Vec<Vec<f64>> = support
            .iter()
            .map(|&x| spec.matrix()[x].clone())
            .collect();
        let reduced_spec = DistortionSpec::new(reduced_d, target)?;
        let sol = rate_distortion(&reduced_q, &reduced_spec, tol)?;
        let nxh = spec.reconstruction_alphabet_size();
        let mut rows = Vec::with_capacity(q.len());
        let mut by_support = sol.test_channel;
        let mut it = support.iter().enumerate();
        let mut next = it.next();
        for x in 0..q.len() {
            if let Some((si, &sx)) = next {
                if sx == x {
                    rows.push(by_support.row(si).clone());
                    next = it.next();
                    continue;
                }
            }
            let best = (0..nxh)
                .min_by(|&a, &b| spec.entry(x, a).partial_cmp(&spec.entry(x, b)).unwrap())
                .unwrap();
            rows.push(Pmf::point_mass(best, nxh));
        }
        by_support = CondPmf::new(rows)?;
        let output_marginal = by_support.output_marginal(q)?;
        return Ok(RdSolution {
            rate: sol.rate,
            test_channel: by_support,
            output_marginal,
            achieved_distortion: sol.achieved_distortion,
            iterations: sol.iterations,
            converged: sol.converged,
        });
    }

    let d_max = d_max_threshold(q, spec);
    if target >= d_max - 1e-15 {
        // Zero-rate region: one reconstruction letter suffices.
        let nxh = spec.reconstruction_alphabet_size();
        let best = (0..nxh)
            .min_by(|&a, &b| {
                let ea: f64 = (0..q.len()).map(|x| q.prob(x) * spec.entry(x, a)).sum();
                let eb: f64 = (0..q.len()).map(|x| q.prob(x) * spec.entry(x, b)).sum();
                ea.partial_cmp(&eb).unwrap()
            })
            .unwrap();
        let rows = vec![Pmf::point_mass(best, nxh); q.len()];
        let channel = CondPmf::new(rows)?;
        return Ok(RdSolution {
            rate: 0.0,
            output_marginal: channel.output_marginal(q)?,
            test_channel: channel,
            achieved_distortion: d_max,
            iterations: 0,
            converged: true,
        });
    }

    let d_min = d_min_threshold(q, spec);
    if target < d_min - 1e-12 {
        return Err(Error::Domain(format!(
            "distortion level {target} below minimum achievable {d_min}"
        )));
    }
    if target <= d_min + 1e-12 {
        return min_rate_at_dmin(q, spec);
    }

    Solver::new(q, spec).solve(target, tol)
}

struct Solver<'a> {
    q: &'a Pmf,
    spec: &'a DistortionSpec,
    nx: usize,
    nxh: usize,
    /// Per-row minimum distortion, subtracted inside the exponent for
    /// numerical stability at large slopes.
    row_min: Vec<f64>,
}

struct SlopePoint {
    rate_nats: f64,
    dist: f64,
    lagrangian_lb_nats: f64,
    channel: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

const INNER_CAP: usize = 100_000;
const OUTER_CAP: usize = 300;
const SLOPE_CAP: f64 = 1e9;

impl<'a> Solver<'a> {
    fn new(q: &'a Pmf, spec: &'a DistortionSpec) -> Self {
        let nx = q.len();
        let nxh = spec.reconstruction_alphabet_size();
        let row_min = (0..nx)
            .map(|x| {
                (0..nxh)
                    .map(|xh| spec.entry(x, xh))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Solver {
            q,
            spec,
            nx,
            nxh,
            row_min,
        }
    }

    /// One Blahut-Arimoto run at fixed slope `s` (nats per distortion unit).
    fn run_slope(&self, s: f64, inner_tol_nats: f64, warm: Option<&[f64]>) -> SlopePoint {
        let (nx, nxh) = (self.nx, self.nxh);
        let kernel: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                (0..nxh)
                    .map(|xh| (-s * (self.spec.entry(x, xh) - self.row_min[x])).exp())
                    .collect()
            })
            .collect();
        let mut out = match warm {
            Some(w) => w.to_vec(),
            None => vec![1.0 / nxh as f64; nxh],
        };
        let mut den = vec![0.0; nx];
        let mut growth = vec![0.0; nxh];
        let mut iterations = 0;
        let mut converged = false;
        while iterations < INNER_CAP {
            iterations += 1;
            for x in 0..nx {
                den[x] = (0..nxh).map(|xh| out[xh] * kernel[x][xh]).sum();
            }
            for xh in 0..nxh {
                growth[xh] = (0..nx)
                    .map(|x| self.q.prob(x) * kernel[x][xh] / den[x])
                    .sum();
            }
            let max_growth = growth.iter().cloned().fold(0.0f64, f64::max);
            if max_growth.ln() <= inner_tol_nats {
                converged = true;
                break;
            }
            let mut total = 0.0;
            for xh in 0..nxh {
                out[xh] *= growth[xh];
                total += out[xh];
            }
            for o in &mut out {
                *o /= total;
            }
        }

        for x in 0..nx {
            den[x] = (0..nxh).map(|xh| out[xh] * kernel[x][xh]).sum();
        }
        let max_growth = (0..nxh)
            .map(|xh| {
                (0..nx)
                    .map(|x| self.q.prob(x) * kernel[x][xh] / den[x])
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max);
        // L(q) = -sum_x Q ln den'(x) + s * sum_x Q row_min(x)
        let shift: f64 = (0..nx)
            .map(|x| self.q.prob(x) * self.row_min[x])
            .sum();
        let l_nats: f64 = -(0..nx)
            .map(|x| self.q.prob(x) * den[x].ln())
            .sum::<f64>()
            + s * shift;
        let lagrangian_lb_nats = l_nats - max_growth.ln().max(0.0);

        let channel: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                (0..nxh)
                    .map(|xh| out[xh] * kernel[x][xh] / den[x])
                    .collect()
            })
            .collect();
        let (rate_nats, dist) = self.channel_rate_dist(&channel);
        SlopePoint {
            rate_nats,
            dist,
            lagrangian_lb_nats,
            channel,
            iterations,
            converged,
        }
    }

    /// Exact mutual information (nats) and expected distortion of a channel.
    fn channel_rate_dist(&self, channel: &[Vec<f64>]) -> (f64, f64) {
        let (nx, nxh) = (self.nx, self.nxh);
        let mut marginal = vec![0.0; nxh];
        for x in 0..nx {
            for xh in 0..nxh {
                marginal[xh] += self.q.prob(x) * channel[x][xh];
            }
        }
        let mut rate = 0.0;
        let mut dist = 0.0;
        for x in 0..nx {
            let px = self.q.prob(x);
            for xh in 0..nxh {
                let p = channel[x][xh];
                if p > 0.0 {
                    rate += px * p * (p / marginal[xh]).ln();
                    dist += px * p * self.spec.entry(x, xh);
                }
            }
        }
        (rate.max(0.0), dist)
    }

    fn solve(&self, target: f64, tol: f64) -> Result<RdSolution> {
        let tol_nats = tol * LN_2;
        let inner_tol = (tol_nats * 0.01).max(1e-15);

        let mut total_iters = 0usize;
        let mut best_lb = 0.0f64; // rate 0 is always a valid lower bound
        let mut best_ub: Option<(f64, Vec<Vec<f64>>, f64)> = None; // (rate nats, channel, dist)
        let mut infeasible: Option<SlopePoint> = None; // dist > target side

        let mut consider = |pt: &SlopePoint, s: f64, best_lb: &mut f64,
                            best_ub: &mut Option<(f64, Vec<Vec<f64>>, f64)>| {
            let lb = pt.lagrangian_lb_nats - s * target;
            if lb > *best_lb {
                *best_lb = lb;
            }
            if pt.dist <= target + 1e-13 {
                let better = match best_ub {
                    Some((r, _, _)) => pt.rate_nats < *r,
                    None => true,
                };
                if better {
                    *best_ub = Some((pt.rate_nats, pt.channel.clone(), pt.dist));
                }
            }
        };

        // Expand the slope upward until the constraint is met.
        let mut s_lo = 0.0f64;
        let mut s_hi = 1.0f64;
        let mut warm: Option<Vec<f64>> = None;
        loop {
            let pt = self.run_slope(s_hi, inner_tol, warm.as_deref());
            total_iters += pt.iterations;
            let feasible = pt.dist <= target + 1e-13;
            consider(&pt, s_hi, &mut best_lb, &mut best_ub);
            warm = Some(pt.channel.iter().fold(vec![0.0; self.nxh], |mut acc, row| {
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += v / self.nx as f64;
                }
                acc
            }));
            if feasible {
                break;
            }
            infeasible = Some(pt);
            s_lo = s_hi;
            s_hi *= 4.0;
            if s_hi > SLOPE_CAP {
                break;
            }
        }

        // Bisect the slope bracket.
        for _ in 0..OUTER_CAP {
            if let Some((ub, _, _)) = best_ub {
                if ub - best_lb <= tol_nats {
                    break;
                }
            }
            if s_hi - s_lo <= 1e-13 * s_hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (s_lo + s_hi);
            let pt = self.run_slope(mid, inner_tol, warm.as_deref());
            total_iters += pt.iterations;
            consider(&pt, mid, &mut best_lb, &mut best_ub);
            if pt.dist <= target + 1e-13 {
                s_hi = mid;
            } else {
                s_lo = mid;
                infeasible = Some(pt);
            }
        }

        // On a linear segment the bracket pins two channels straddling the
        // target; their distortion-matched mixture is feasible and optimal.
        let needs_mix = matches!((&best_ub, &infeasible), (Some((r, _, _)), Some(_)) if *r - best_lb > tol_nats);
        if needs_mix {
            let (ub_rate, ub_ch, ub_dist) = best_ub.clone().unwrap();
            let inf = infeasible.as_ref().unwrap();
            let lam = (inf.dist - target) / (inf.dist - ub_dist);
            if lam.is_finite() && (0.0..=1.0).contains(&lam) {
                let mixed: Vec<Vec<f64>> = ub_ch
                    .iter()
                    .zip(&inf.channel)
                    .map(|(hi, lo)| {
                        hi.iter()
                            .zip(lo)
                            .map(|(&a, &b)| lam * a + (1.0 - lam) * b)
                            .collect()
                    })
                    .collect();
                let (r, d) = self.channel_rate_dist(&mixed);
                if d <= target + 1e-12 && r < ub_rate {
                    best_ub = Some((r, mixed, d));
                }
            }
        }

        let (rate_nats, channel, dist) = best_ub.ok_or_else(|| {
            Error::Domain("slope expansion exhausted without a feasible channel".into())
        })?;
        let converged = rate_nats - best_lb <= tol_nats;
        let rows: Vec<Pmf> = channel
            .into_iter()
            .map(Pmf::normalized)
            .collect::<Result<_>>()?;
        let test_channel = CondPmf::new(rows)?;
        let output_marginal = test_channel.output_marginal(self.q)?;
        Ok(RdSolution {
            rate: rate_nats / LN_2,
            test_channel,
            output_marginal,
            achieved_distortion: dist,
            iterations: total_iters,
            converged,
        })
    }
}

/// R at the minimum achievable distortion: minimize mutual information over
/// channels supported on the per-row distortion minimizers.
fn min_rate_at_dmin(q: &Pmf, spec: &DistortionSpec) -> Result<RdSolution> {
    let nx = q.len();
    let nxh = spec.reconstruction_alphabet_size();
    let allowed: Vec<Vec<usize>> = (0..nx)
        .map(|x| {
            let m = (0..nxh)
                .map(|xh| spec.entry(x, xh))
                .fold(f64::INFINITY, f64::min);
            (0..nxh)
                .filter(|&xh| spec.entry(x, xh) <= m + 1e-12)
                .collect()
        })
        .collect();
    let mut out = vec![1.0 / nxh as f64; nxh];
    let mut channel = vec![vec![0.0; nxh]; nx];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < INNER_CAP {
        iterations += 1;
        for x in 0..nx {
            let den: f64 = allowed[x].iter().map(|&xh| out[xh]).sum();
            for v in &mut channel[x] {
                *v = 0.0;
            }
            for &xh in &allowed[x] {
                channel[x][xh] = out[xh] / den;
            }
        }
        let mut next = vec![0.0; nxh];
        for x in 0..nx {
            for xh in 0..nxh {
                next[xh] += q.prob(x) * channel[x][xh];
            }
        }
        let delta: f64 = next
            .iter()
            .zip(&out)
            .map(|(a, b)| (a - b).abs())
            .sum();
        out = next;
        if delta < 1e-15 {
            converged = true;
            break;
        }
    }
    let mut marginal = vec![0.0; nxh];
    for x in 0..nx {
        for xh in 0..nxh {
            marginal[xh] += q.prob(x) * channel[x][xh];
        }
    }
    let mut rate_nats = 0.0;
    let mut dist = 0.0;
    for x in 0..nx {
        for xh in 0..nxh {
            let p = channel[x][xh];
            if p > 0.0 {
                rate_nats += q.prob(x) * p * (p / marginal[xh]).ln();
                dist += q.prob(x) * p * spec.entry(x, xh);
            }
        }
    }
    let rows: Vec<Pmf> = channel
        .into_iter()
        .map(Pmf::normalized)
        .collect::<Result<_>>()?;
    let test_channel = CondPmf::new(rows)?;
    let output_marginal = test_channel.output_marginal(q)?;
    Ok(RdSolution {
        rate: rate_nats.max(0.0) / LN_2,
        test_channel,
        output_marginal,
        achieved_distortion: dist,
        iterations,
        converged,
    })
}

/// Closed-form binary-Hamming oracle: h(p) - h(D) for D < p, else 0.
pub fn binary_hamming_rd(p: f64, d: f64) -> Result<f64> {
    if !(0.0 < p && p <= 0.5) {
        return Err(Error::Domain(format!("source parameter {p}")));
    }
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("distortion level {d}")));
    }
    if d >= p {
        Ok(0.0)
    } else {
        Ok(binary_entropy(p) - binary_entropy(d))
    }
}

/// Builds the sum-of-letters distortion over K-fold super-alphabets.
pub fn super_distortion(spec: &DistortionSpec, k: usize, level_per_block: f64) -> Result<DistortionSpec> {
    let nx = spec.source_alphabet_size();
    let nxh = spec.reconstruction_alphabet_size();
    let sx = nx.pow(k as u32);
    let sxh = nxh.pow(k as u32);
    let mut d = vec![vec![0.0; sxh]; sx];
    for (a, row) in d.iter_mut().enumerate() {
        let asyms = unrank(a, k, nx);
        for (b, v) in row.iter_mut().enumerate() {
            let bsyms = unrank(b, k, nxh);
            *v = (0..k).map(|i| spec.entry(asyms[i], bsyms[i])).sum();
        }
    }
    DistortionSpec::new(d, level_per_block)
}

fn unrank(mut v: usize, k: usize, alpha: usize) -> Vec<usize> {
    let mut out = vec![0usize; k];
    for i in (0..k).rev() {
        out[i] = v % alpha;
        v /= alpha;
    }
    out
}

/// Unnormalized (bits per block) rate-distortion function of a
/// block-memoryless source Q^K at per-letter level `spec.level()`.
pub fn block_rate_distortion(
    qk: &Pmf,
    spec: &DistortionSpec,
    k: usize,
    tol: f64,
) -> Result<RdSolution> {
    let nx = spec.source_alphabet_size();
    let sx = nx
        .checked_pow(k as u32)
        .filter(|&s| s <= DEFAULT_SUPER_ALPHABET_CAP)
        .ok_or_else(|| Error::Domain(format!(
            "super-alphabet {nx}^{k} exceeds cap {DEFAULT_SUPER_ALPHABET_CAP}"
        )))?;
    if qk.len() != sx {
        return Err(Error::AlphabetMismatch(format!(
            "block pmf of size {} vs super-alphabet {sx}",
            qk.len()
        )));
    }
    let block_spec = super_distortion(spec, k, spec.level() * k as f64)?;
    rate_distortion(qk, &block_spec, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_hamming_oracle_values() {
        let v = binary_hamming_rd(0.3, 0.1).unwrap();
        assert!((v - (binary_entropy(0.3) - binary_entropy(0.1))).abs() < 1e-15);
        assert_eq!(binary_hamming_rd(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(binary_hamming_rd(0.5, 0.0).unwrap(), 1.0);
        assert!(binary_hamming_rd(0.6, 0.1).is_err());
        assert!(binary_hamming_rd(0.3, -0.1).is_err());
    }

    #[test]
    fn ba_matches_binary_hamming_closed_form() {
        let q = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let sol = rate_distortion(&q, &spec, 1e-8).unwrap();
        let oracle = binary_hamming_rd(0.3, 0.1).unwrap();
        assert!(
            (sol.rate - oracle).abs() < 1e-6,
            "rate {} vs oracle {}",
            sol.rate,
            oracle
        );
        assert!(sol.achieved_distortion <= 0.1 + 1e-9);
        assert!(sol.converged);
    }

    #[test]
    fn zero_rate_region() {
        let q = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.35).unwrap();
        let sol = rate_distortion(&q, &spec, 1e-9).unwrap();
        assert_eq!(sol.rate, 0.0);
    }

    #[test]
    fn lossless_point_is_entropy() {
        let q = Pmf::bernoulli(0.5).unwrap();
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let sol = rate_distortion(&q, &spec, 1e-9).unwrap();
        assert!((sol.rate - 1.0).abs() < 1e-9);
        let q = Pmf::bernoulli(0.3).unwrap();
        let sol = rate_distortion(&q, &spec, 1e-9).unwrap();
        assert!((sol.rate - binary_entropy(0.3)).abs() < 1e-9);
    }

    #[test]
    fn zero_mass_symbols_are_dropped_and_reinserted() {
        let q = Pmf::new(vec![0.3, 0.0, 0.7]).unwrap();
        let spec = DistortionSpec::hamming(3, 0.1).unwrap();
        let sol = rate_distortion(&q, &spec, 1e-8).unwrap();
        // Equivalent to a binary source under Hamming.
        let oracle = binary_hamming_rd(0.3, 0.1).unwrap();
        assert!((sol.rate - oracle).abs() < 1e-6);
        assert_eq!(sol.test_channel.num_inputs(), 3);
    }

    #[test]
    fn block_solver_additive_on_products() {
        let p = 0.3;
        let q1 = Pmf::bernoulli(p).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let probs: Vec<f64> = (0..4)
            .map(|v| {
                let b0 = (v >> 1) & 1;
                let b1 = v & 1;
                let f = |b: usize| if b == 0 { p } else { 1.0 - p };
                f(b0) * f(b1)
            })
            .collect();
        let qk = Pmf::new(probs).unwrap();
        let block = block_rate_distortion(&qk, &spec, 2, 1e-8).unwrap();
        let single = rate_distortion(&q1, &spec, 1e-8).unwrap();
        assert!(
            (block.rate - 2.0 * single.rate).abs() < 1e-5,
            "block {} vs 2x single {}",
            block.rate,
            2.0 * single.rate
        );
    }

    #[test]
    fn block_k1_matches_single_letter() {
        let q = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let a = block_rate_distortion(&q, &spec, 1, 1e-8).unwrap();
        let b = rate_distortion(&q, &spec, 1e-8).unwrap();
        assert!((a.rate - b.rate).abs() < 1e-9);
    }

    #[test]
    fn block_zero_at_dmax() {
        let q = Pmf::new(vec![0.25; 4]).unwrap();
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let sol = block_rate_distortion(&q, &spec, 2, 1e-8).unwrap();
        assert_eq!(sol.rate, 0.0);
    }
}
