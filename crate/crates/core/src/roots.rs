//! Polynomial roots in the float backend and a common real-root front end.

use nalgebra::DMatrix;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::poly::Polynomial;
use crate::scalar::{pow2, Cx, Scalar};
use crate::sturm;

type FPoly = Polynomial<Float>;

const MAX_ITER: usize = 400;

fn companion_seeds(p: &FPoly) -> Vec<(f64, f64)> {
    let n = p.degree().unwrap_or(0);
    let lead = p.leading().map(|l| l.to_f64()).unwrap_or(1.0);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -p.coeff(i).to_f64() / lead;
    }
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m, 1e-14, 2000) {
        let seeds: Vec<(f64, f64)> = schur.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect();
        if seeds.iter().all(|(a, b)| a.is_finite() && b.is_finite()) {
            return perturb_duplicates(seeds);
        }
    }
    let r = p.coeffs().iter().map(|c| (c.to_f64() / lead).abs()).fold(0.0, f64::max) + 1.0;
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            (r * t.cos(), r * t.sin())
        })
        .collect()
}

fn perturb_duplicates(mut seeds: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    for i in 0..seeds.len() {
        for j in 0..i {
            if seeds[i] == seeds[j] {
                let s = 1e-6 * (1.0 + seeds[i].0.abs());
                seeds[i].1 += s * (i as f64 + 1.0);
            }
        }
    }
    seeds
}

/// All complex roots (with multiplicity) via companion-matrix seeds and
/// Aberth-Ehrlich refinement at `prec` bits.
pub fn complex_roots(p: &FPoly, prec: u32) -> Result<Vec<Cx<Float>>> {
    let p = p.trim_negligible();
    let Some(n) = p.degree() else {
        return Err(Error::InvalidArgument("roots of the zero polynomial".into()));
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    let dp = p.derivative();
    let mut z: Vec<Cx<Float>> = companion_seeds(&p)
        .into_iter()
        .map(|(a, b)| Cx::new(Float::with_val(prec, a), Float::with_val(prec, b)))
        .collect();
    let tol = pow2(-(prec as i32) + 12, prec);
    let coarse = pow2(-(prec as i32) / 2, prec);
    let mut last = Float::with_val(prec, 1);
    for _ in 0..MAX_ITER {
        let mut max_step = Float::with_val(prec, 0);
        for k in 0..n {
            let pv = p.eval_cx(&z[k]);
            if pv.is_zero() {
                continue;
            }
            let Some(ratio) = pv.div(&dp.eval_cx(&z[k])) else {
                continue;
            };
            let mut sum = Cx::zero(prec);
            for (j, zj) in z.iter().enumerate() {
                if j != k {
                    if let Some(r) = z[k].sub(zj).recip() {
                        sum = sum.add(&r);
                    }
                }
            }
            let denom = Cx::one(prec).sub(&ratio.mul(&sum));
            let step = ratio.div(&denom).unwrap_or(ratio);
            let scale = Float::with_val(prec, 1) + Float::with_val(prec, z[k].abs_sq().sqrt());
            let rel = Float::with_val(prec, step.norm_max() / &scale);
            if rel > max_step {
                max_step = rel;
            }
            z[k] = z[k].sub(&step);
        }
        if max_step <= tol {
            return Ok(z);
        }
        last = max_step;
    }
    if last <= coarse {
        return Ok(z);
    }
    Err(Error::RootPrecisionLoss(format!("Aberth iteration stalled for degree {n}")))
}

/// Newton polish of a real root.
pub fn newton_real(p: &FPoly, x0: &Float, prec: u32) -> Result<Float> {
    let dp = p.derivative();
    let mut x = Float::with_val(prec, x0);
    let tol = pow2(-(prec as i32) + 8, prec);
    for _ in 0..MAX_ITER {
        let d = dp.eval(&x);
        if d.is_zero() {
            return Err(Error::RootPrecisionLoss("vanishing derivative".into()));
        }
        let step = Float::with_val(prec, p.eval(&x) / &d);
        x -= &step;
        let scale = Float::with_val(prec, 1) + Float::with_val(prec, x.abs_ref());
        if Float::with_val(prec, step.abs_ref()) <= Float::with_val(prec, &tol * &scale) {
            return Ok(x);
        }
    }
    Err(Error::RootPrecisionLoss("Newton did not converge".into()))
}

/// Real roots of `p` lying in `window`, sorted, to about `2^(-prec+8)`.
///
/// The exact backend isolates with Sturm sequences and bisects; the float
/// backend uses companion eigenvalues followed by Newton polishing.
pub fn real_roots<S: Scalar>(p: &Polynomial<S>, window: &Interval, prec: u32) -> Result<Vec<Float>> {
    if p.is_zero() {
        return Err(Error::InvalidArgument("roots of the zero polynomial".into()));
    }
    if S::EXACT {
        let rp: Polynomial<Rational> = p.convert(0);
        let st = sturm::Sturm::new(&rp);
        let width = Rational::from((1, 1)) >> (prec as i32 + 16);
        let coarse = Rational::from((1, 1)) >> 48;
        let work = prec + 32;
        let fp = st.base().to_float(work);
        let mut out = Vec::new();
        for e in sturm::roots_in(&rp, window) {
            let r = st.refine(&e, &coarse);
            if r.is_exact() {
                out.push(Float::with_val(prec, &r.lo));
                continue;
            }
            let polished = newton_real(&fp, &Float::with_val(work, &r.midpoint()), work)
                .ok()
                .filter(|x| *x > r.lo && *x <= r.hi);
            match polished {
                Some(x) => out.push(Float::with_val(prec, &x)),
                None => out.push(Float::with_val(prec, &st.refine(&r, &width).midpoint())),
            }
        }
        return Ok(out);
    }
    let fp = p.to_float(prec);
    let all = complex_roots(&fp, prec)?;
    let im_tol = pow2(-(prec as i32) / 2, prec);
    let mut out: Vec<Float> = Vec::new();
    for z in all {
        let scale = Float::with_val(prec, 1) + Float::with_val(prec, z.re.abs_ref());
        if Float::with_val(prec, z.im.abs_ref()) > Float::with_val(prec, &im_tol * &scale) {
            continue;
        }
        let x = newton_real(&fp, &z.re, prec).unwrap_or(z.re);
        let q = x.to_rational().unwrap_or_default();
        if window.contains(&q) {
            out.push(x);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out.dedup_by(|a, b| {
        let scale = Float::with_val(prec, 1) + Float::with_val(prec, b.abs_ref());
        Float::with_val(prec, &*a - &*b).abs() <= Float::with_val(prec, &im_tol * &scale)
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_roots_exact_backend() {
        let p = Polynomial::<Rational>::from_i64s(&[-3, 1], 0);
        let r = real_roots(&p, &Interval::from_i64(2, 4).unwrap(), 128).unwrap();
        assert_eq!(r, vec![Float::with_val(128, 3)]);
        let q = Polynomial::<Rational>::from_i64s(&[-1, 0, 1], 0);
        let r = real_roots(&q, &Interval::from_i64(0, 2).unwrap(), 128).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0], 1);
    }

    #[test]
    fn real_roots_float_backend() {
        let p = Polynomial::<Float>::from_i64s(&[-2, 0, 1], 256);
        let r = real_roots(&p, &Interval::from_i64(0, 2).unwrap(), 256).unwrap();
        assert_eq!(r.len(), 1);
        let s2 = Float::with_val(256, 2).sqrt();
        let err = Float::with_val(256, &r[0] - &s2).abs();
        assert!(err < pow2(-240, 256));
    }

    #[test]
    fn complex_roots_of_cyclotomic() {
        let p = Polynomial::<Float>::from_i64s(&[1, 0, 0, 0, 1], 128);
        let r = complex_roots(&p, 128).unwrap();
        assert_eq!(r.len(), 4);
        for z in &r {
            let m = z.abs_sq();
            let err = Float::with_val(128, m - 1u32).abs();
            assert!(err < pow2(-100, 128));
        }
    }
}
