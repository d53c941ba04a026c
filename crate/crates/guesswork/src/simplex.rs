//! Small optimization utilities used by the exponent computations: simplex
//! grids, golden-section line search, Nelder-Mead over softmax-parametrized
//! distributions, and the multiplicative-update solver for mixture
//! cross-entropy problems.

use crate::pmf::Pmf;

/// All distributions with denominator `steps` on the `alpha`-simplex.
pub fn simplex_grid(alpha: usize, steps: usize) -> Vec<Pmf> {
    crate::types::compositions(steps, alpha)
        .into_iter()
        .map(|c| {
            Pmf::new(c.iter().map(|&k| k as f64 / steps as f64).collect())
                .expect("grid point is a valid pmf")
        })
        .collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of a unimodal function on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|t| -f(t), a, b, tol);
    (x, -v)
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn logits(p: &Pmf) -> Vec<f64> {
    p.probs().iter().map(|&v| (v.max(1e-12)).ln()).collect()
}

/// Nelder-Mead maximization of `f` over R^dim. Returns (argmax, max).
pub fn nelder_mead_max_raw(
    eval: impl Fn(&[f64]) -> f64,
    z0: &[f64],
    iters: usize,
    scale: f64,
) -> (Vec<f64>, f64) {
    let dim = z0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((z0.to_vec(), eval(z0)));
    for i in 0..dim {
        let mut z = z0.to_vec();
        z[i] += scale;
        let v = eval(&z);
        simplex.push((z, v));
    }

    for _ in 0..iters {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let worst = simplex.len() - 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| {
                simplex[..worst].iter().map(|(z, _)| z[j]).sum::<f64>() / worst as f64
            })
            .collect();
        let reflect: Vec<f64> = (0..dim)
            .map(|j| centroid[j] + (centroid[j] - simplex[worst].0[j]))
            .collect();
        let fr = eval(&reflect);
        if fr > simplex[0].1 {
            let expand: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - simplex[worst].0[j]))
                .collect();
            let fe = eval(&expand);
            simplex[worst] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > simplex[worst - 1].1 {
            simplex[worst] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + 0.5 * (simplex[worst].0[j] - centroid[j]))
                .collect();
            let fc = eval(&contract);
            if fc > simplex[worst].1 {
                simplex[worst] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let z: Vec<f64> = (0..dim)
                        .map(|j| best[j] + 0.5 * (entry.0[j] - best[j]))
                        .collect();
                    let v = eval(&z);
                    *entry = (z, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let (z, v) = simplex.swap_remove(0);
    (z, v)
}

/// Nelder-Mead maximization of `f` over the probability simplex, the point
/// parametrized as softmax of unconstrained logits. Returns (argmax, max).
pub fn nelder_mead_simplex(
    f: impl Fn(&Pmf) -> f64,
    start: &Pmf,
    iters: usize,
    scale: f64,
) -> (Pmf, f64) {
    let eval = |z: &[f64]| -> f64 {
        let p = Pmf::new(softmax(z)).expect("softmax is a pmf");
        f(&p)
    };
    let (z, v) = nelder_mead_max_raw(eval, &logits(start), iters, scale);
    (Pmf::new(softmax(&z)).expect("softmax is a pmf"), v)
}

/// Softmax over logits; exposed for parametrizing stochastic matrices.
pub fn softmax_probs(z: &[f64]) -> Vec<f64> {
    softmax(z)
}

/// Elementwise safe log for seeding logits from a distribution.
pub fn pmf_logits(p: &Pmf) -> Vec<f64> {
    logits(p)
}

/// Minimizes f(V) = -sum_y w(y) ln( sum_x V(x) U(x,y) ) over the simplex by
/// EM-style multiplicative updates; `weights` must sum to one. Returns
/// (argmin V, min value in nats).
pub fn min_mixture_cross_entropy(
    weights: &[f64],
    u: &[Vec<f64>], // u[x][y] >= 0
    tol: f64,
    max_iter: usize,
) -> (Pmf, f64) {
    let nx = u.len();
    let ny = weights.len();
    let mut v = vec![1.0 / nx as f64; nx];
    let mut m = vec![0.0; ny];
    let value = |m: &[f64]| -> f64 {
        let mut acc = 0.0;
        for y in 0..ny {
            if weights[y] > 0.0 {
                if m[y] <= 0.0 {
                    return f64::INFINITY;
                }
                acc -= weights[y] * m[y].ln();
            }
        }
        acc
    };
    for _ in 0..max_iter {
        for y in 0..ny {
            m[y] = (0..nx).map(|x| v[x] * u[x][y]).sum();
        }
        let mut growth = vec![0.0; nx];
        let mut worst: f64 = 0.0;
        for x in 0..nx {
            let mut g = 0.0;
            for y in 0..ny {
                if weights[y] > 0.0 && m[y] > 0.0 {
                    g += weights[y] * u[x][y] / m[y];
                }
            }
            growth[x] = g;
            if v[x] > 1e-300 {
                worst = worst.max((g - 1.0).abs());
            }
        }
        if worst <= tol {
            break;
        }
        let mut total = 0.0;
        for x in 0..nx {
            v[x] *= growth[x];
            total += v[x];
        }
        if total <= 0.0 {
            break;
        }
        for vx in &mut v {
            *vx /= total;
        }
    }
    for y in 0..ny {
        m[y] = (0..nx).map(|x| v[x] * u[x][y]).sum();
    }
    let val = value(&m);
    (
        Pmf::normalized(v).expect("EM iterate stays a valid pmf"),
        val,
    )
}
