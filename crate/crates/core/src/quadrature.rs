//! Gauss-Jacobi rules on `[-1, 1]` for the weight `(1-t)^alpha (1+t)^beta`.
//!
//! Nodes are seeded in double precision and polished by Newton's method at
//! the working precision; rules are cached per `(n, alpha, beta, prec)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::scalar::pow2;

/// First rule size tried by the node-doubling driver.
pub const START_NODES: usize = 64;
/// Largest rule size tried by the node-doubling driver.
pub const MAX_NODES: usize = 4096;

/// Nodes in decreasing order and matching weights.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

type Key = (usize, Rational, Rational, u32);

fn cache() -> &'static Mutex<HashMap<Key, Arc<GaussRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Jacobi polynomial `P_n` and `P_{n-1}` at `x` (three-term recurrence).
fn jacobi_pair_f64(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    if n == 0 {
        return (p0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn jacobi_deriv_f64(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let (pn, pn1) = jacobi_pair_f64(n, a, b, x);
    let nf = n as f64;
    let c = 2.0 * nf + a + b;
    let d = (nf * (a - b - c * x) * pn + 2.0 * (nf + a) * (nf + b) * pn1) / (c * (1.0 - x * x));
    (pn, d)
}

fn jacobi_deriv(n: usize, a: &Float, b: &Float, x: &Float, prec: u32) -> (Float, Float) {
    let one = Float::with_val(prec, 1);
    let mut p0 = one.clone();
    let mut p1 = Float::with_val(prec, a - b) + Float::with_val(prec, a + b) * x + Float::with_val(prec, 2) * x;
    p1 /= 2;
    let ab = Float::with_val(prec, a + b);
    let a2b2 = Float::with_val(prec, a * a) - Float::with_val(prec, b * b);
    for k in 2..=n {
        let kf = Float::with_val(prec, k);
        let c = Float::with_val(prec, 2 * &kf) + &ab;
        let a1 = Float::with_val(prec, 2 * &kf) * Float::with_val(prec, &kf + &ab) * Float::with_val(prec, &c - 2u32);
        let cm1 = Float::with_val(prec, &c - 1u32);
        let a2 = Float::with_val(prec, &cm1 * &a2b2);
        let a3 = Float::with_val(prec, &c - 2u32) * &cm1 * &c;
        let a4 = Float::with_val(prec, 2)
            * (Float::with_val(prec, &kf + a) - 1u32)
            * (Float::with_val(prec, &kf + b) - 1u32)
            * &c;
        let p2 = ((a2 + a3 * x) * &p1 - a4 * &p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    let nf = Float::with_val(prec, n);
    let c = Float::with_val(prec, 2 * &nf) + &ab;
    let t1 = Float::with_val(prec, &nf * (Float::with_val(prec, a - b) - Float::with_val(prec, &c * x))) * &p1;
    let t2 = Float::with_val(prec, 2) * Float::with_val(prec, &nf + a) * Float::with_val(prec, &nf + b) * &p0;
    let den = Float::with_val(prec, &c * (one - Float::with_val(prec, x * x)));
    let d = (t1 + t2) / den;
    (p1, d)
}

/// Initial node guesses (largest first), following the classical
/// asymptotic heuristics, then Newton in double precision.
#[allow(clippy::approx_constant)]
fn seeds(n: usize, a: f64, b: f64) -> Vec<f64> {
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => {
                let an = a / nf;
                let bn = b / nf;
                let r1 = (1.0 + a) * (2.78 / (4.0 + nf * nf) + 0.768 * an / nf);
                let r2 = 1.0 + 1.48 * an + 0.96 * bn + 0.452 * an * an + 0.83 * an * bn;
                1.0 - r1 / r2
            }
            1 => {
                let r1 = (4.1 + a) / ((1.0 + a) * (1.0 + 0.156 * a));
                let r2 = 1.0 + 0.06 * (nf - 8.0) * (1.0 + 0.12 * a) / nf;
                let r3 = 1.0 + 0.012 * b * (1.0 + 0.25 * a.abs()) / nf;
                z - (1.0 - z) * r1 * r2 * r3
            }
            2 => {
                let r1 = (1.67 + 0.28 * a) / (1.0 + 0.37 * a);
                let r2 = 1.0 + 0.22 * (nf - 8.0) / nf;
                let r3 = 1.0 + 8.0 * b / ((6.28 + b) * nf * nf);
                z - (x[0] - z) * r1 * r2 * r3
            }
            _ if i == n - 2 => {
                let r1 = (1.0 + 0.235 * b) / (0.766 + 0.119 * b);
                let r2 = 1.0 / (1.0 + 0.639 * (nf - 4.0) / (1.0 + 0.71 * (nf - 4.0)));
                let r3 = 1.0 / (1.0 + 20.0 * a / ((7.5 + a) * nf * nf));
                z + (z - x[n - 4]) * r1 * r2 * r3
            }
            _ if i == n - 1 => {
                let r1 = (1.0 + 0.37 * b) / (1.67 + 0.28 * b);
                let r2 = 1.0 / (1.0 + 0.22 * (nf - 8.0) / nf);
                let r3 = 1.0 / (1.0 + 8.0 * a / ((6.28 + a) * nf * nf));
                z + (z - x[n - 3]) * r1 * r2 * r3
            }
            _ => 3.0 * x[i - 1] - 3.0 * x[i - 2] + x[i - 3],
        };
        for _ in 0..100 {
            let (p, d) = jacobi_deriv_f64(n, a, b, z);
            let step = p / d;
            z -= step;
            if step.abs() <= 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        x[i] = z;
    }
    x
}

/// Gauss-Jacobi rule with `n` nodes; `alpha, beta > -1`.
pub fn gauss_jacobi(n: usize, alpha: &Rational, beta: &Rational, prec: u32, exec: Exec) -> Result<Arc<GaussRule>> {
    let key = (n, alpha.clone(), beta.clone(), prec);
    if let Some(r) = cache().lock().expect("quadrature cache poisoned").get(&key) {
        return Ok(r.clone());
    }
    let rule = Arc::new(build_rule(n, alpha, beta, prec, exec)?);
    cache().lock().expect("quadrature cache poisoned").insert(key, rule.clone());
    Ok(rule)
}

fn build_rule(n: usize, alpha: &Rational, beta: &Rational, prec: u32, exec: Exec) -> Result<GaussRule> {
    if n < 4 || *alpha <= -1 || *beta <= -1 {
        return Err(Error::InvalidArgument(format!("Gauss-Jacobi rule with n={n}, alpha={alpha}, beta={beta}")));
    }
    let work = prec + 32;
    let af = alpha.to_f64();
    let bf = beta.to_f64();
    let x0 = seeds(n, af, bf);
    let a = Float::with_val(work, alpha);
    let b = Float::with_val(work, beta);
    let tol = pow2(-(prec as i32) - 8, work);
    let polished: Vec<Result<(Float, Float)>> = par::map(exec, &x0, |&s| {
        let mut x = Float::with_val(work, s);
        let mut converged = false;
        for _ in 0..60 {
            let (p, d) = jacobi_deriv(n, &a, &b, &x, work);
            let step = Float::with_val(work, &p / &d);
            x -= &step;
            if Float::with_val(work, step.abs_ref()) <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNotConverged { nodes: n });
        }
        let (_, d) = jacobi_deriv(n, &a, &b, &x, work);
        Ok((x, d))
    });
    let nf = Float::with_val(work, n);
    let lg = |v: Float| v.ln_gamma();
    let ln_const = lg(Float::with_val(work, &nf + &a) + 1u32) + lg(Float::with_val(work, &nf + &b) + 1u32)
        - lg(Float::with_val(work, &nf + &a) + &b + 1u32)
        - lg(Float::with_val(work, &nf + 1u32));
    let two_pow = Float::with_val(work, 2).pow(Float::with_val(work, &a + &b) + 1u32);
    let constant = ln_const.exp() * two_pow;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for r in polished {
        let (x, d) = r?;
        let one_minus = Float::with_val(work, 1) - Float::with_val(work, x.square_ref());
        let w = Float::with_val(work, &constant / (one_minus * Float::with_val(work, d.square_ref())));
        nodes.push(Float::with_val(prec, &x));
        weights.push(Float::with_val(prec, &w));
    }
    let ordered = nodes.windows(2).all(|w| w[0] > w[1]);
    let inside = nodes.first().is_some_and(|x| *x < 1) && nodes.last().is_some_and(|x| *x > -1);
    if !ordered || !inside {
        return Err(Error::QuadratureNotConverged { nodes: n });
    }
    Ok(GaussRule { nodes, weights })
}
