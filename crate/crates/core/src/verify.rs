//! Identity battery over a Nikishin system at seeded random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Rational};
use serde::Serialize;

use crate::analysis;
use crate::error::Result;
use crate::hermite_pade;
use crate::nikishin::{LinearFormCoeffs, NikishinSystem};
use crate::par::{self, Exec};
use crate::poly::Polynomial;
use crate::samples;
use crate::scalar::{Cx, Scalar};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub params: String,
    /// Lossless text form of the residual; `"0"` when it vanishes exactly.
    pub residual: String,
    pub residual_f64: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub backend: String,
    pub seed: u64,
    pub points: usize,
    pub perturb: Option<String>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

/// Battery options.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub points: usize,
    /// Relative perturbation applied to one side of each identity.
    pub perturb: Option<Rational>,
    /// Largest order for the biorthogonality matrix and DR/ML comparison.
    pub max_order: usize,
    pub exec: Exec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, points: 20, perturb: None, max_order: 4, exec: Exec::Parallel }
    }
}

fn tolerance<S: Scalar>(prec: u32) -> S {
    if S::EXACT {
        S::zero(prec)
    } else {
        S::from_float(&crate::scalar::pow2(64 - prec as i32, prec), prec)
    }
}

fn result<S: Scalar>(name: &str, params: String, residual: S, tol: &S) -> CheckResult {
    let passed = residual.abs() <= *tol;
    CheckResult { name: name.into(), params, residual_f64: residual.to_f64(), residual: residual.to_repr(), passed }
}

fn random_poly<S: Scalar>(rng: &mut ChaCha8Rng, prec: u32) -> Polynomial<S> {
    let deg = rng.random_range(0..=5);
    let cs: Vec<Rational> = (0..=deg).map(|_| Rational::from((rng.random_range(-9..=9), rng.random_range(1..=4)))).collect();
    Polynomial::from_rationals(&cs, prec)
}

/// `(-1)^j p_hat_{m,j+1} + sum_{k=j+1}^{m-1} (-1)^k s_hat_{m,k+1} s_hat_{j+1,k} + (-1)^m s_hat_{j+1,m}`,
/// with the leading term taken from `p`.
fn mixed_fundamental<S: Scalar>(sys: &NikishinSystem<S>, p: &NikishinSystem<S>, j: usize, points: &[Cx<S>]) -> Result<S> {
    let m = sys.m();
    let prec = sys.prec();
    let sg = |k: usize| S::from_i64(if k.is_multiple_of(2) { 1 } else { -1 }, prec);
    let mut worst = S::zero(prec);
    for z in points {
        let mut acc = p.s_hat(m, j + 1, z)?.scale(&sg(j));
        for k in j + 1..m {
            acc = acc.add(&sys.s_hat(m, k + 1, z)?.mul(&sys.s_hat(j + 1, k, z)?).scale(&sg(k)));
        }
        acc = acc.add(&sys.s_hat(j + 1, m, z)?.scale(&sg(m)));
        worst = S::max_of(&worst, &acc.norm_max());
    }
    Ok(worst)
}

/// `max |(l(z) + tau_hat(z)) q_hat(z) - 1|` where `1/s_hat = l + tau_hat`.
fn stieltjes_round_trip<S: Scalar>(sys: &NikishinSystem<S>, q: &NikishinSystem<S>, g: usize, points: &[Cx<S>]) -> Result<S> {
    let prec = sys.prec();
    let (aff, tau) = sys.generator(g).stieltjes_inverse()?;
    let l = aff.poly();
    let mut worst = S::zero(prec);
    for z in points {
        let t = if tau.is_empty() { Cx::zero(prec) } else { tau.cauchy_transform(z)? };
        let r = l.eval_cx(z).add(&t).mul(&q.generator(g).cauchy_transform(z)?).sub(&Cx::one(prec));
        worst = S::max_of(&worst, &r.norm_max());
    }
    Ok(worst)
}

fn perturbed<S: Scalar>(sys: &NikishinSystem<S>, eps: &Option<Rational>) -> Result<NikishinSystem<S>> {
    let Some(eps) = eps else {
        return Ok(sys.clone());
    };
    let prec = sys.prec();
    let factor = S::from_rational(&Rational::from(eps + 1u32), prec);
    let gens = sys.generators().iter().map(|g| g.scaled(&factor)).collect();
    NikishinSystem::build(gens)
}

/// Fundamental identity for every level, the reduction identity for every
/// `(j, r)` with random coefficient polynomials of degree at most 5, the
/// Stieltjes inversion round trip of every generator, DR/ML agreement and
/// the biorthogonality matrix.
pub fn identity_battery<S: Scalar>(sys: &NikishinSystem<S>, opts: &VerifyOptions) -> Result<VerifyReport> {
    let m = sys.m();
    let prec = sys.prec();
    let tol: S = tolerance(prec);
    let points: Vec<Cx<S>> = samples::random_points(opts.seed, opts.points).iter().map(|z| z.convert(prec)).collect();
    let pert = perturbed(sys, &opts.perturb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let mut checks = Vec::new();

    for j in 0..m.saturating_sub(1) {
        let r = if opts.perturb.is_some() { mixed_fundamental(sys, &pert, j, &points)? } else { sys.check_fundamental_identity(j, &points)? };
        checks.push(result("fundamental", format!("j={j}"), r, &tol));
    }

    let pairs: Vec<(usize, usize)> = (0..m.saturating_sub(1)).flat_map(|j| (j + 1..m).map(move |r| (j, r))).collect();
    let coeffs: Vec<LinearFormCoeffs<S>> =
        pairs.iter().map(|_| LinearFormCoeffs { polys: (0..=m).map(|_| random_poly(&mut rng, prec)).collect() }).collect();
    let reds = par::map(opts.exec, &(0..pairs.len()).collect::<Vec<_>>(), |&i| pert.check_reduction_identity(&coeffs[i], pairs[i].0, pairs[i].1, &points));
    for ((j, r), v) in pairs.iter().zip(reds) {
        checks.push(result("reduction", format!("j={j},r={r}"), v?, &tol));
    }

    for g in 1..=m {
        if sys.generator(g).exact_transform().is_none() {
            continue;
        }
        let r = stieltjes_round_trip(sys, &pert, g, &points)?;
        checks.push(result("stieltjes_inverse", format!("generator={g}"), r, &tol));
    }

    let atoms = sys.min_atom_count().unwrap_or(usize::MAX);
    let orders: Vec<usize> = (1..=atoms.min(opts.max_order)).collect();
    let eq = par::map(opts.exec, &orders, |&n| hermite_pade::check_dr_ml_equivalence(sys, n));
    for (n, v) in orders.iter().zip(eq) {
        checks.push(result("dr_ml_equivalence", format!("n={n}"), v?, &tol));
    }

    let cap = atoms.saturating_sub(1).min(opts.max_order);
    if m >= 2 && cap >= 1 {
        let bio = analysis::biorthogonality_matrix(sys, cap, opts.exec)?;
        let scale = bio.min_diagonal().abs();
        let off = bio.max_off_diagonal();
        let mut c = result("biorthogonality", format!("N={cap}"), off.clone(), &tol);
        c.passed = bio.is_biorthogonal();
        checks.push(c);
        let mut d = result("biorthogonality_diagonal", format!("N={cap}"), scale.clone(), &tol);
        d.passed = !scale.is_zero();
        checks.push(d);
    }

    let passed = checks.iter().all(|c| c.passed);
    let backend = if S::EXACT { "rational".to_string() } else { format!("f{prec}") };
    Ok(VerifyReport { backend, seed: opts.seed, points: opts.points, perturb: opts.perturb.as_ref().map(|e| e.to_string()), checks, passed })
}

/// `log2 |x|` of a residual, `-inf` for zero.
pub fn log2_abs<S: Scalar>(x: &S) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let f: Float = x.to_float(x.prec().max(64));
    f.abs().log2().to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_battery_is_exact() {
        let rep = identity_battery(&samples::worked_system(), &VerifyOptions::default()).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.checks.iter().filter(|c| c.name != "biorthogonality_diagonal").all(|c| c.residual == "0"));
        assert!(rep.checks.iter().any(|c| c.name == "stieltjes_inverse"));
    }

    #[test]
    fn perturbation_is_detected() {
        let opts = VerifyOptions { perturb: Some(Rational::from((1, 10_000_000_000i64))), ..Default::default() };
        let rep = identity_battery(&samples::worked_system(), &opts).unwrap();
        assert!(!rep.passed);
        assert!(rep.checks.iter().filter(|c| c.name == "fundamental" || c.name == "stieltjes_inverse").all(|c| !c.passed));
    }

    #[test]
    fn reference_battery_includes_biorthogonality() {
        let rep = identity_battery(&samples::reference_system(), &VerifyOptions { points: 4, ..Default::default() }).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.checks.iter().any(|c| c.name == "biorthogonality" && c.params == "N=4"));
    }

    #[test]
    fn float_battery_passes() {
        let sys = samples::to_float(&samples::reference_system(), 256).unwrap();
        let rep = identity_battery(&sys, &VerifyOptions { points: 5, ..Default::default() }).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
