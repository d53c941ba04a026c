//! Guesswork-exponent computations: the clean memoryless exponent
//! max_Q [rho R(D,Q) - D(Q||P)], the noisy-channel exponent with its Gamma
//! correction and two alternative saddle-point forms, the fixed-K
//! block-memoryless exponent, and exact finite-n reference moments.

use crate::alphabet::Sequence;
use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::guessdist::GuessingDistribution;
use crate::info::{divergence, entropy, mutual_information, LN_2};
use crate::pmf::{CondPmf, Pmf};
use crate::ratedist::{block_rate_distortion, rate_distortion};
use crate::simplex::{
    golden_max, golden_min, min_mixture_cross_entropy, nelder_mead_max_raw, nelder_mead_simplex,
    pmf_logits, simplex_grid, softmax_probs,
};

/// Search-resolution knobs shared by the exponent optimizers.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Simplex grid denominator.
    pub steps: usize,
    /// Nelder-Mead refinement iterations per seed.
    pub nm_iters: usize,
    /// Tolerance handed to the rate-distortion solver, bits.
    pub rd_tol: f64,
    /// Golden-section tolerance on slope variables.
    pub s_tol: f64,
    /// Tolerance for inner convex (V / mixture) problems.
    pub inner_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            steps: 64,
            nm_iters: 250,
            rd_tol: 1e-7,
            s_tol: 1e-4,
            inner_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    PrimalGrid,
    AltForm1,
    AltForm2,
    BlockK(usize),
}

#[derive(Debug, Clone)]
pub struct ExponentResult {
    /// Bits per symbol.
    pub value: f64,
    /// Dominant source distribution (a witness, not canonical).
    pub argmax_q: Pmf,
    pub method: Method,
    /// Optimal tilt slope for the alternative forms.
    pub s_star: Option<f64>,
    /// Inner minimizer for the alternative forms.
    pub witness_v: Option<Pmf>,
    /// True when a slope search ended at its bracket edge.
    pub boundary_hit: bool,
}

/// max over the simplex of `f`, by grid plus Nelder-Mead from the best grid
/// points and the provided seeds. Returns (argmax, max).
fn maximize_over_simplex(
    f: &impl Fn(&Pmf) -> f64,
    alpha: usize,
    grid: &GridSpec,
    extra_seeds: &[Pmf],
) -> (Pmf, f64) {
    let mut scored: Vec<(Pmf, f64)> = simplex_grid(alpha, grid.steps)
        .into_iter()
        .map(|q| {
            let v = f(&q);
            (q, v)
        })
        .filter(|(_, v)| v.is_finite())
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    scored.truncate(5);
    for seed in extra_seeds {
        let v = f(seed);
        if v.is_finite() {
            scored.push((seed.clone(), v));
        }
    }
    let mut best = scored
        .first()
        .cloned()
        .expect("at least one finite objective value on the grid");
    for (seed, _) in &scored {
        let (q, v) = nelder_mead_simplex(f, seed, grid.nm_iters, 0.5);
        if v > best.1 {
            best = (q, v);
        }
    }
    best
}

/// Clean-channel guesswork exponent max_Q [rho R(D,Q) - D(Q||P)] in bits.
pub fn clean_exponent(
    p: &Pmf,
    spec: &DistortionSpec,
    rho: f64,
    grid: &GridSpec,
) -> Result<ExponentResult> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("moment order {rho}")));
    }
    if p.len() != spec.source_alphabet_size() {
        return Err(Error::AlphabetMismatch(format!(
            "source of size {} vs distortion rows {}",
            p.len(),
            spec.source_alphabet_size()
        )));
    }
    let objective = |q: &Pmf| -> f64 {
        let div = divergence(q, p);
        if !div.is_finite() {
            return f64::NEG_INFINITY;
        }
        match rate_distortion(q, spec, grid.rd_tol) {
            Ok(sol) => rho * sol.rate - div,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // The tilted distribution is exact at D = 0 and a strong seed elsewhere.
    let tilt = Pmf::normalized(
        p.probs()
            .iter()
            .map(|&v| v.powf(1.0 / (1.0 + rho)))
            .collect(),
    )?;
    let (argmax_q, value) = maximize_over_simplex(&objective, p.len(), grid, &[p.clone(), tilt]);
    Ok(ExponentResult {
        value: value.max(0.0),
        argmax_q,
        method: Method::PrimalGrid,
        s_star: None,
        witness_v: None,
        boundary_hit: false,
    })
}

/// Noisy guessing problem instance: source P on Y, channel W from guesses in
/// X to Y, distortion on Y x Y, moment order rho.
#[derive(Debug, Clone)]
pub struct NoisySetup {
    pub p: Pmf,
    pub w: CondPmf,
    pub spec: DistortionSpec,
    pub rho: f64,
}

impl NoisySetup {
    pub fn new(p: Pmf, w: CondPmf, spec: DistortionSpec, rho: f64) -> Result<Self> {
        if w.num_outputs() != p.len() {
            return Err(Error::AlphabetMismatch(format!(
                "channel outputs {} vs source alphabet {}",
                w.num_outputs(),
                p.len()
            )));
        }
        if spec.source_alphabet_size() != p.len()
            || spec.reconstruction_alphabet_size() != p.len()
        {
            return Err(Error::AlphabetMismatch(
                "distortion must be on Y x Y".into(),
            ));
        }
        if !(rho >= 0.0) {
            return Err(Error::Domain(format!("moment order {rho}")));
        }
        Ok(NoisySetup { p, w, spec, rho })
    }

    fn smallest_positive_d(&self) -> f64 {
        self.spec
            .matrix()
            .iter()
            .flatten()
            .cloned()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Slope bracket end, nats per distortion unit.
    fn slope_cap(&self) -> f64 {
        let m = self.smallest_positive_d();
        if m.is_finite() {
            50.0 * LN_2 / m
        } else {
            50.0 * LN_2
        }
    }

    /// U_s(x, y) = sum_y' W(y'|x) e^{-s d(y, y')}.
    fn u_kernel(&self, s: f64) -> Vec<Vec<f64>> {
        let nx = self.w.num_inputs();
        let ny = self.p.len();
        (0..nx)
            .map(|x| {
                (0..ny)
                    .map(|y| {
                        (0..ny)
                            .map(|yp| self.w.prob(yp, x) * (-s * self.spec.entry(y, yp)).exp())
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Gamma(Q_Y) = min over output marginals reachable through W (the convex
/// hull of W's rows) of D(Q_Y || M), in bits.
pub fn gamma(q_y: &Pmf, w: &CondPmf, tol: f64) -> Result<f64> {
    if w.num_outputs() != q_y.len() {
        return Err(Error::AlphabetMismatch(format!(
            "channel outputs {} vs marginal size {}",
            w.num_outputs(),
            q_y.len()
        )));
    }
    let u: Vec<Vec<f64>> = (0..w.num_inputs())
        .map(|x| (0..w.num_outputs()).map(|y| w.prob(y, x)).collect())
        .collect();
    let (_, val_nats) = min_mixture_cross_entropy(q_y.probs(), &u, tol, 200_000);
    Ok((val_nats / LN_2 - entropy(q_y)).max(0.0))
}

/// Inner convex minimization over V of
/// -sum_y weights(y) ln(sum_x V(x) U(x,y)) - linear terms handled by caller.
fn min_v_cross_entropy(weights: &[f64], u: &[Vec<f64>], tol: f64) -> (Pmf, f64) {
    min_mixture_cross_entropy(weights, u, tol, 200_000)
}

/// Dual (Lagrangian) form of hat-R_W: sup_s inf_V of
/// [-sum_y Q(y) ln sum_x V(x) U_s(x,y)] - s D, reported in bits.
/// Returns (value_bits, s_star, v_star, boundary_hit).
pub fn rhat_w_dual(
    q_y: &Pmf,
    setup: &NoisySetup,
    grid: &GridSpec,
) -> Result<(f64, f64, Pmf, bool)> {
    let d = setup.spec.level();
    let s_cap = setup.slope_cap();
    let eval = |s: f64| -> f64 {
        let u = setup.u_kernel(s);
        let (_, val) = min_v_cross_entropy(q_y.probs(), &u, grid.inner_tol);
        val - s * d
    };
    let coarse = 48;
    let mut best_s = 0.0;
    let mut best_v = eval(0.0);
    for i in 1..=coarse {
        let s = s_cap * i as f64 / coarse as f64;
        let v = eval(s);
        if v > best_v {
            best_v = v;
            best_s = s;
        }
    }
    let lo = (best_s - s_cap / coarse as f64).max(0.0);
    let hi = (best_s + s_cap / coarse as f64).min(s_cap);
    let (s_star, val_nats) = golden_max(eval, lo, hi, grid.s_tol);
    let u = setup.u_kernel(s_star);
    let (v_star, _) = min_v_cross_entropy(q_y.probs(), &u, grid.inner_tol);
    let boundary = s_star > 0.995 * s_cap;
    Ok((val_nats.max(0.0) / LN_2, s_star, v_star, boundary))
}

/// hat-R_W(D, Q_Y): minimum over test channels meeting the distortion budget
/// of I(Y;Y') + Gamma(Q_Y'), in bits. Channel-space grid plus Nelder-Mead.
pub fn rhat_w(q_y: &Pmf, setup: &NoisySetup, grid: &GridSpec) -> Result<f64> {
    let ny = q_y.len();
    let d_budget = setup.spec.level();
    let expected_d = |rows: &[Pmf]| -> f64 {
        (0..ny)
            .map(|y| {
                q_y.prob(y)
                    * (0..ny)
                        .map(|yp| rows[y].prob(yp) * setup.spec.entry(y, yp))
                        .sum::<f64>()
            })
            .sum()
    };
    let objective = |rows: &[Pmf]| -> f64 {
        let channel = CondPmf::new(rows.to_vec()).expect("stochastic rows");
        let i = match mutual_information(q_y, &channel) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let marginal = match channel.output_marginal(q_y) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        let g = gamma(&marginal, &setup.w, grid.inner_tol).unwrap_or(f64::INFINITY);
        let excess = (expected_d(rows) - d_budget).max(0.0);
        i + g + 1e4 * excess
    };

    let mut best = f64::INFINITY;
    let mut best_rows: Option<Vec<Pmf>> = None;
    let mut consider = |rows: Vec<Pmf>| {
        let v = objective(&rows);
        if v < best {
            best = v;
            best_rows = Some(rows);
        }
    };

    // Seeds: the clean rate-distortion channel, its marginal as an
    // independent channel, and (for binary) a coarse grid of row pairs.
    if let Ok(rd) = rate_distortion(q_y, &setup.spec, grid.rd_tol) {
        let rows: Vec<Pmf> = (0..ny).map(|y| rd.test_channel.row(y).clone()).collect();
        consider(rows);
        consider(vec![rd.output_marginal.clone(); ny]);
    }
    consider(vec![Pmf::uniform(ny); ny]);
    if ny == 2 {
        let steps = grid.steps.min(32);
        for a in 0..=steps {
            for b in 0..=steps {
                let rows = vec![
                    Pmf::bernoulli(1.0 - a as f64 / steps as f64).unwrap(),
                    Pmf::bernoulli(b as f64 / steps as f64).unwrap(),
                ];
                consider(rows);
            }
        }
    }

    let start_rows = best_rows.ok_or_else(|| Error::Domain("no feasible test channel".into()))?;
    let start: Vec<f64> = start_rows.iter().flat_map(|r| pmf_logits(r)).collect();
    let unflatten = |z: &[f64]| -> Vec<Pmf> {
        z.chunks(ny)
            .map(|c| Pmf::new(softmax_probs(c)).expect("softmax row"))
            .collect()
    };
    let (z, neg) = nelder_mead_max_raw(
        |z| -objective(&unflatten(z)),
        &start,
        grid.nm_iters * 2,
        0.6,
    );
    let refined = -neg;
    let value = refined.min(best);
    let _ = unflatten(&z);
    Ok(value.max(0.0))
}

/// Best achievable noisy guessing exponent E_W(rho) in bits.
pub fn noisy_exponent(
    setup: &NoisySetup,
    method: Method,
    grid: &GridSpec,
) -> Result<ExponentResult> {
    match method {
        Method::PrimalGrid => {
            let objective = |q: &Pmf| -> f64 {
                let div = divergence(q, &setup.p);
                if !div.is_finite() {
                    return f64::NEG_INFINITY;
                }
                match rhat_w(q, setup, grid) {
                    Ok(r) => setup.rho * r - div,
                    Err(_) => f64::NEG_INFINITY,
                }
            };
            let (argmax_q, value) =
                maximize_over_simplex(&objective, setup.p.len(), grid, &[setup.p.clone()]);
            Ok(ExponentResult {
                value: value.max(0.0),
                argmax_q,
                method,
                s_star: None,
                witness_v: None,
                boundary_hit: false,
            })
        }
        Method::AltForm1 => alt_form(setup, grid, false),
        Method::AltForm2 => alt_form(setup, grid, true),
        Method::BlockK(_) => Err(Error::Domain(
            "block method is computed by block_exponent".into(),
        )),
    }
}

/// Shared saddle evaluation for the two alternative forms. Both reduce to
/// sup_s inf over a mixture parameter of ln sum_y P(y) M_s(y)^{-rho} with the
/// distortion tilt carried inside (form 2) or as an explicit -rho s D term
/// (form 1); they are evaluated through distinct kernels as written.
fn alt_form(setup: &NoisySetup, grid: &GridSpec, hull_form: bool) -> Result<ExponentResult> {
    let ny = setup.p.len();
    let nx = setup.w.num_inputs();
    let rho = setup.rho;
    let d = setup.spec.level();
    let s_cap = setup.slope_cap();

    // Objective in nats for mixture weights `v` at slope `s`.
    let mixture_value = |s: f64, v: &[f64]| -> f64 {
        let mut acc = 0.0f64;
        for y in 0..ny {
            let py = setup.p.prob(y);
            if py == 0.0 {
                continue;
            }
            let m = if hull_form {
                // sum_{y'} M(y') e^{s [D - d(y,y')]}, M in the hull of W rows
                let mut m = 0.0;
                for yp in 0..ny {
                    let mut myp = 0.0;
                    for x in 0..nx {
                        myp += v[x] * setup.w.prob(yp, x);
                    }
                    m += myp * (s * (d - setup.spec.entry(y, yp))).exp();
                }
                m
            } else {
                // sum_x V(x) U_s(x, y)
                let mut m = 0.0;
                for x in 0..nx {
                    let mut ux = 0.0;
                    for yp in 0..ny {
                        ux += setup.w.prob(yp, x) * (-s * setup.spec.entry(y, yp)).exp();
                    }
                    m += v[x] * ux;
                }
                m
            };
            if m <= 0.0 {
                return f64::INFINITY;
            }
            acc += py * m.powf(-rho);
        }
        let base = acc.ln();
        if hull_form {
            base
        } else {
            base - rho * s * d
        }
    };

    let inner_min = |s: f64| -> (Pmf, f64) {
        if nx == 2 {
            let f = |t: f64| mixture_value(s, &[t, 1.0 - t]);
            let (t, val) = golden_min(f, 0.0, 1.0, 1e-10);
            (Pmf::new(vec![t, 1.0 - t]).unwrap(), val)
        } else {
            let eval = |z: &[f64]| -mixture_value(s, &softmax_probs(z));
            let mut best: Option<(Vec<f64>, f64)> = None;
            for seed in [vec![0.0; nx]] {
                let (z, v) = nelder_mead_max_raw(&eval, &seed, grid.nm_iters, 0.8);
                if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                    best = Some((z, v));
                }
            }
            let (z, v) = best.unwrap();
            (Pmf::new(softmax_probs(&z)).unwrap(), -v)
        }
    };

    let eval_s = |s: f64| -> f64 { inner_min(s).1 };

    let coarse = 48;
    let mut best_s = 0.0;
    let mut best_v = eval_s(0.0);
    for i in 1..=coarse {
        let s = s_cap * i as f64 / coarse as f64;
        let v = eval_s(s);
        if v > best_v {
            best_v = v;
            best_s = s;
        }
    }
    let lo = (best_s - s_cap / coarse as f64).max(0.0);
    let hi = (best_s + s_cap / coarse as f64).min(s_cap);
    let (s_star, value_nats) = golden_max(eval_s, lo, hi, grid.s_tol);
    let (v_star, _) = inner_min(s_star);

    // Witness Q*: proportional to P(y) M(y)^{-rho} at the saddle.
    let mut qs = Vec::with_capacity(ny);
    for y in 0..ny {
        let py = setup.p.prob(y);
        if py == 0.0 {
            qs.push(0.0);
            continue;
        }
        let mut m = 0.0;
        for x in 0..nx {
            let mut ux = 0.0;
            for yp in 0..ny {
                ux += setup.w.prob(yp, x) * (-s_star * setup.spec.entry(y, yp)).exp();
            }
            m += v_star.prob(x) * ux;
        }
        qs.push(py * m.powf(-rho));
    }
    let argmax_q = Pmf::normalized(qs)?;

    Ok(ExponentResult {
        value: (value_nats / LN_2).max(0.0),
        argmax_q,
        method: if hull_form {
            Method::AltForm2
        } else {
            Method::AltForm1
        },
        s_star: Some(s_star),
        witness_v: Some(v_star),
        boundary_hit: s_star > 0.995 * s_cap,
    })
}

/// Fixed-K block exponent (1/K) sup_{Q^K} [rho R_K(D, Q^K) - D(Q^K || P^K)]
/// in bits per symbol. `pk` is the K-th order reference marginal.
pub fn block_exponent(
    pk: &Pmf,
    spec: &DistortionSpec,
    k: usize,
    rho: f64,
    grid: &GridSpec,
) -> Result<ExponentResult> {
    if k == 0 {
        return Err(Error::Domain("block length zero".into()));
    }
    if k == 1 {
        let mut r = clean_exponent(pk, spec, rho, grid)?;
        r.method = Method::BlockK(1);
        return Ok(r);
    }
    let alpha = spec.source_alphabet_size();
    let super_size = alpha.pow(k as u32);
    if pk.len() != super_size {
        return Err(Error::AlphabetMismatch(format!(
            "block pmf of size {} vs {alpha}^{k}",
            pk.len()
        )));
    }
    let objective = |q: &Pmf| -> f64 {
        let div = divergence(q, pk);
        if !div.is_finite() {
            return f64::NEG_INFINITY;
        }
        match block_rate_distortion(q, spec, k, grid.rd_tol) {
            Ok(sol) => (rho * sol.rate - div) / k as f64,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    // Super-simplex is too large for a dense grid; refine from structured
    // seeds instead: the reference itself, its tilt, the uniform, and the
    // product lift of the single-letter optimum.
    let tilt = Pmf::normalized(
        pk.probs()
            .iter()
            .map(|&v| v.powf(1.0 / (1.0 + rho)))
            .collect(),
    )?;
    let mut marginal1 = vec![0.0; alpha];
    for v in 0..super_size {
        marginal1[v / alpha.pow(k as u32 - 1)] += pk.prob(v);
    }
    let p1 = Pmf::normalized(marginal1)?;
    let single = clean_exponent(&p1, spec, rho, grid)?;
    let product_seed = product_lift(&single.argmax_q, k)?;

    let seeds = [pk.clone(), tilt, Pmf::uniform(super_size), product_seed];
    let mut best: Option<(Pmf, f64)> = None;
    for seed in &seeds {
        let v0 = objective(seed);
        if !v0.is_finite() {
            continue;
        }
        let (q, v) = nelder_mead_simplex(&objective, seed, grid.nm_iters * 3, 0.5);
        let (q, v) = if v0 > v { (seed.clone(), v0) } else { (q, v) };
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((q, v));
        }
    }
    let (argmax_q, value) =
        best.ok_or_else(|| Error::Domain("no feasible block distribution".into()))?;
    Ok(ExponentResult {
        value: value.max(0.0),
        argmax_q,
        method: Method::BlockK(k),
        s_star: None,
        witness_v: None,
        boundary_hit: false,
    })
}

/// K-fold product of a single-letter distribution, indexed like a packed
/// base-alpha word (first letter most significant).
pub fn product_lift(q1: &Pmf, k: usize) -> Result<Pmf> {
    let alpha = q1.len();
    let size = alpha.pow(k as u32);
    let mut probs = vec![1.0; size];
    for (v, p) in probs.iter_mut().enumerate() {
        let mut rest = v;
        for _ in 0..k {
            *p *= q1.prob(rest % alpha);
            rest /= alpha;
        }
    }
    Pmf::new(probs).or_else(|_| Pmf::normalized(vec![1.0; size]))
}

/// Exact finite-n guesswork moment rate for an explicit source law:
/// (1/n) log2 sum_x P(x) * Ptilde[S(x)]^{-rho}, in bits per symbol.
pub fn finite_n_reference(
    source_prob: impl Fn(&Sequence) -> f64,
    n: usize,
    source_alphabet: usize,
    dist: &GuessingDistribution,
    spec: &DistortionSpec,
    rho: f64,
    cap_bits: u32,
) -> Result<f64> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let needed = n as f64 * (source_alphabet as f64).log2();
    if needed > cap_bits as f64 {
        return Err(Error::CapExceeded {
            needed_bits: needed,
            cap_bits,
        });
    }
    let total = (source_alphabet as u64).pow(n as u32);
    let mut acc = 0.0f64;
    for v in 0..total {
        let x = Sequence::unpack(v, n, source_alphabet);
        let px = source_prob(&x);
        if px == 0.0 {
            continue;
        }
        let bp = dist.ball_probability_capped(&x, spec, cap_bits)?;
        acc += px * bp.powf(-rho);
    }
    Ok(acc.log2() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessdist::Kind;
    use crate::info::renyi_entropy;
    use crate::ratedist::binary_hamming_rd;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn clean_exponent_renyi_identity_at_zero_distortion() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let rho = 1.0;
        let got = clean_exponent(&p, &spec, rho, &grid()).unwrap();
        let expect = rho * renyi_entropy(&p, 1.0 / (1.0 + rho)).unwrap();
        assert!(
            (got.value - expect).abs() < 1e-3,
            "got {} expect {}",
            got.value,
            expect
        );
    }

    #[test]
    fn clean_exponent_uniform_is_log_alphabet() {
        let p = Pmf::uniform(2);
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let got = clean_exponent(&p, &spec, 1.0, &grid()).unwrap();
        assert!((got.value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn clean_exponent_zero_beyond_dmax() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let got = clean_exponent(&p, &spec, 1.0, &grid()).unwrap();
        assert!(got.value.abs() < 1e-9);
    }

    #[test]
    fn gamma_zero_for_identity_channel() {
        let w = CondPmf::identity(2);
        for q in [Pmf::bernoulli(0.3).unwrap(), Pmf::bernoulli(0.9).unwrap()] {
            assert!(gamma(&q, &w, 1e-12).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn gamma_is_divergence_for_rank_one_channel() {
        let r = Pmf::bernoulli(0.7).unwrap();
        let w = CondPmf::new(vec![r.clone(), r.clone()]).unwrap();
        let q = Pmf::bernoulli(0.3).unwrap();
        let got = gamma(&q, &w, 1e-12).unwrap();
        assert!((got - divergence(&q, &r)).abs() < 1e-8);
        assert!(gamma(&r, &w, 1e-12).unwrap() <= 1e-10);
    }

    #[test]
    fn gamma_positive_outside_hull() {
        let w = CondPmf::bsc(0.1).unwrap();
        let q = Pmf::bernoulli(0.95).unwrap();
        let got = gamma(&q, &w, 1e-12).unwrap();
        let expect = divergence(&q, &Pmf::bernoulli(0.9).unwrap());
        assert!((got - expect).abs() < 1e-6, "got {got} expect {expect}");
    }

    #[test]
    fn rhat_identity_channel_is_rate_distortion() {
        let q = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let setup = NoisySetup::new(q.clone(), CondPmf::identity(2), spec.clone(), 1.0).unwrap();
        let got = rhat_w(&q, &setup, &grid()).unwrap();
        let expect = binary_hamming_rd(0.3, 0.1).unwrap();
        assert!((got - expect).abs() < 5e-3, "got {got} expect {expect}");
        let (dual, _, _, _) = rhat_w_dual(&q, &setup, &grid()).unwrap();
        assert!((dual - expect).abs() < 5e-3, "dual {dual} expect {expect}");
    }

    #[test]
    fn rhat_zero_at_dmax() {
        let q = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let setup = NoisySetup::new(q.clone(), CondPmf::bsc(0.1).unwrap(), spec, 1.0).unwrap();
        assert!(rhat_w(&q, &setup, &grid()).unwrap() < 1e-6);
    }

    #[test]
    fn rhat_primal_matches_dual_on_bsc() {
        let q = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.05).unwrap();
        let setup = NoisySetup::new(q.clone(), CondPmf::bsc(0.1).unwrap(), spec, 1.0).unwrap();
        let primal = rhat_w(&q, &setup, &grid()).unwrap();
        let (dual, _, _, _) = rhat_w_dual(&q, &setup, &grid()).unwrap();
        assert!(
            (primal - dual).abs() < 5e-3,
            "primal {primal} dual {dual}"
        );
    }

    #[test]
    fn noisy_exponent_nonnegative_and_forms_agree() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let setup = NoisySetup::new(p, CondPmf::bsc(0.1).unwrap(), spec, 1.0).unwrap();
        let a1 = noisy_exponent(&setup, Method::AltForm1, &grid()).unwrap();
        let a2 = noisy_exponent(&setup, Method::AltForm2, &grid()).unwrap();
        assert!(a1.value >= 0.0);
        assert!((a1.value - a2.value).abs() < 1e-3);
    }

    #[test]
    fn noisy_identity_matches_clean() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let setup =
            NoisySetup::new(p.clone(), CondPmf::identity(2), spec.clone(), 1.0).unwrap();
        let clean = clean_exponent(&p, &spec, 1.0, &grid()).unwrap();
        let a1 = noisy_exponent(&setup, Method::AltForm1, &grid()).unwrap();
        assert!(
            (a1.value - clean.value).abs() < 1e-2,
            "alt1 {} clean {}",
            a1.value,
            clean.value
        );
    }

    #[test]
    fn block_k1_equals_clean() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let a = block_exponent(&p, &spec, 1, 1.0, &grid()).unwrap();
        let b = clean_exponent(&p, &spec, 1.0, &grid()).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn block_exponent_rho_zero_is_zero() {
        let p = product_lift(&Pmf::bernoulli(0.3).unwrap(), 2).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let got = block_exponent(&p, &spec, 2, 0.0, &grid()).unwrap();
        assert!(got.value.abs() < 1e-9);
    }

    #[test]
    fn block_exponent_iid_matches_clean() {
        let p1 = Pmf::bernoulli(0.3).unwrap();
        let pk = product_lift(&p1, 2).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let block = block_exponent(&pk, &spec, 2, 1.0, &grid()).unwrap();
        let clean = clean_exponent(&p1, &spec, 1.0, &grid()).unwrap();
        assert!(
            (block.value - clean.value).abs() < 1e-2,
            "block {} clean {}",
            block.value,
            clean.value
        );
        assert!(block.value >= clean.value - 1e-3);
    }

    #[test]
    fn finite_n_reference_trivial_cases() {
        let dist = GuessingDistribution::new(Kind::Uniform, 1, 2).unwrap();
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let v = finite_n_reference(|_| 0.5, 1, 2, &dist, &spec, 1.0, 24).unwrap();
        assert_eq!(v, 0.0);
        let v = finite_n_reference(|_| 0.5, 1, 2, &dist, &spec, 0.0, 24).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn finite_n_reference_hand_computed_n2() {
        // Uniform guessing, Hamming D=0.5 at n=2: |S(x)|=3 for every x, so
        // the reference is (1/2) log2( sum_x P(x) (3/4)^{-1} ) = .5 log2(4/3).
        let dist = GuessingDistribution::new(Kind::Uniform, 2, 2).unwrap();
        let spec = DistortionSpec::hamming(2, 0.5).unwrap();
        let p = Pmf::bernoulli(0.3).unwrap();
        let v = finite_n_reference(
            |x| (0..2).map(|i| p.prob(x.sym(i))).product(),
            2,
            2,
            &dist,
            &spec,
            1.0,
            24,
        )
        .unwrap();
        let expect = 0.5 * (4.0f64 / 3.0).log2();
        assert!((v - expect).abs() < 1e-12);
    }
}
