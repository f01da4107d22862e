//! The discrete cubic string: transfer of `(phi, phi_y, phi_yy)` across point
//! masses, its Weyl functions and spectral measures, and the reduction of the
//! Weyl approximation problem to a two-measure Nikishin system.

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite_pade::{self, ml_terms, AssembledSystem, Formulation, Order};
use crate::interval::Interval;
use crate::measures::Measure;
use crate::nikishin::NikishinSystem;
use crate::poly::{Polynomial, RationalFunction};
use crate::scalar::{Cx, Scalar, DEFAULT_PREC};
use crate::sturm::{self, Sturm};

type QPoly = Polynomial<Rational>;
type QFn = RationalFunction<Rational>;

/// Point masses `g_i` at `-1 < y_1 < ... < y_N < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCubicString {
    pub atoms: Vec<(Rational, Rational)>,
    /// `+1` or `-1`; multiplies `z` in the jump condition.
    pub sign_convention: i32,
}

impl DiscreteCubicString {
    pub fn new(atoms: Vec<(Rational, Rational)>, sign_convention: i32) -> Result<Self> {
        if sign_convention != 1 && sign_convention != -1 {
            return Err(Error::InvalidArgument(format!("sign convention must be +1 or -1, got {sign_convention}")));
        }
        for (y, g) in &atoms {
            if *y <= -1 || *y >= 1 {
                return Err(Error::InvalidMeasure(format!("mass position {y} outside (-1, 1)")));
            }
            if *g <= 0 {
                return Err(Error::InvalidMeasure(format!("mass {g} at {y} is not positive")));
            }
        }
        if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidMeasure("mass positions must be strictly increasing".into()));
        }
        Ok(Self { atoms, sign_convention })
    }
    pub fn len(&self) -> usize {
        self.atoms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
    pub fn with_convention(&self, sign_convention: i32) -> Result<Self> {
        Self::new(self.atoms.clone(), sign_convention)
    }
}

/// `phi(1; z)`, `phi_y(1; z)`, `phi_yy(1; z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndState {
    pub phi: QPoly,
    pub phi_y: QPoly,
    pub phi_yy: QPoly,
}

/// Integrates from `y = -1` with `phi = phi_y = 0`, `phi_yy = 1`.
pub fn propagate(s: &DiscreteCubicString) -> EndState {
    let mut st = EndState { phi: QPoly::zero(0), phi_y: QPoly::zero(0), phi_yy: QPoly::one(0) };
    let mut at = Rational::from(-1);
    let gap = |st: &mut EndState, l: &Rational| {
        let half_sq = Rational::from(l * l) / 2;
        st.phi = st.phi.add(&st.phi_y.scale(l)).add(&st.phi_yy.scale(&half_sq));
        st.phi_y = st.phi_y.add(&st.phi_yy.scale(l));
    };
    for (y, g) in &s.atoms {
        gap(&mut st, &Rational::from(y - &at));
        let kick = Rational::from(g * s.sign_convention);
        st.phi_yy = st.phi_yy.add(&st.phi.shift(1).scale(&kick));
        at = y.clone();
    }
    gap(&mut st, &(1 - at));
    st
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenvalues {
    pub values: Vec<f64>,
    pub all_real: bool,
    pub simple: bool,
    pub all_positive: bool,
    pub all_negative: bool,
}

/// Roots of `phi(1; z)`.
pub fn eigenvalues(s: &DiscreteCubicString) -> Result<Eigenvalues> {
    let phi = propagate(s).phi;
    let n = phi.degree().unwrap_or(0);
    if n == 0 {
        return Ok(Eigenvalues { values: Vec::new(), all_real: true, simple: true, all_positive: true, all_negative: true });
    }
    let st = Sturm::new(&phi);
    let simple = st.base().degree() == Some(n);
    let all_real = st.count_real() == n;
    let values: Vec<f64> = crate::roots::real_roots(&phi, &Interval::real_line(), 64)?.iter().map(|x| x.to_f64()).collect();
    Ok(Eigenvalues {
        all_positive: values.iter().all(|&v| v > 0.0),
        all_negative: values.iter().all(|&v| v < 0.0),
        values,
        all_real,
        simple,
    })
}

/// `W = phi_y / phi`, `Z = phi_yy / phi` at `y = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylPair {
    pub w: QFn,
    pub z: QFn,
}

impl WeylPair {
    /// `Z(0)`.
    pub fn z_at_zero(&self) -> Rational {
        self.z.eval(&Rational::new()).expect("phi(1;0) = 2")
    }
    pub fn describe(&self) -> (String, String) {
        (display_fn(&self.w), display_fn(&self.z))
    }
}

fn display_fn(f: &QFn) -> String {
    let lead = f.den.leading().cloned().unwrap_or_else(|| Rational::from(1));
    let inv = Rational::from(1) / lead;
    format!("({}) / ({})", f.num.scale(&inv), f.den.scale(&inv))
}

pub fn weyl_pair(s: &DiscreteCubicString) -> WeylPair {
    let e = propagate(s);
    WeylPair { w: QFn::new(e.phi_y, e.phi.clone()), z: QFn::new(e.phi_yy, e.phi) }
}

/// `Z(z) - W(z) W(-z) + Z(-z)` as a rational function.
pub fn concomitant_residual(pair: &WeylPair) -> QFn {
    pair.z.sub(&pair.w.mul(&pair.w.reflect())).add(&pair.z.reflect())
}

/// `max |Z(z) - W(z) W(-z) + Z(-z)|` (max-norm of real and imaginary parts).
pub fn check_concomitant(pair: &WeylPair, points: &[Cx<Rational>]) -> Result<Rational> {
    let mut worst = Rational::new();
    for p in points {
        let ev = |f: &QFn, z: &Cx<Rational>| f.eval_cx(z).ok_or_else(|| Error::PoleHit(format!("({}, {})", z.re, z.im)));
        let mz = p.neg();
        let r = ev(&pair.z, p)?.sub(&ev(&pair.w, p)?.mul(&ev(&pair.w, &mz)?)).add(&ev(&pair.z, &mz)?);
        worst = Scalar::max_of(&worst, &r.norm_max());
    }
    Ok(worst)
}

/// `W(z)/z = mu_hat(z)`, `Z(z)/z = nu_hat(z)`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub mu: Measure<Rational>,
    pub nu: Measure<Rational>,
}

fn divided_by_z(f: &QFn) -> Result<Measure<Rational>> {
    let g = QFn::new(f.num.clone(), f.den.shift(1)).reduced();
    if !sturm::is_squarefree(&g.den) {
        return Err(Error::NonSimplePole);
    }
    Measure::algebraic(g)?.simplified()
}

pub fn spectral_measures(pair: &WeylPair) -> Result<SpectralData> {
    Ok(SpectralData { mu: divided_by_z(&pair.w)?, nu: divided_by_z(&pair.z)? })
}

#[derive(Clone, Debug, Serialize)]
pub struct NuAtom {
    pub x: f64,
    pub nu_weight: f64,
    pub formula: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NuConvention {
    pub name: String,
    pub atoms: Vec<NuAtom>,
    pub max_residual: f64,
}

fn float_atoms(m: &Measure<Rational>, prec: u32) -> Result<Vec<(Float, Float)>> {
    let f = m.convert::<Float>(prec).simplified()?;
    Ok(f.atoms().map(|a| a.to_vec()).unwrap_or_default())
}

fn nu_convention(name: &str, mu: &Measure<Rational>, nu: &Measure<Rational>, prec: u32) -> Result<NuConvention> {
    let ma = float_atoms(mu, prec)?;
    let na = float_atoms(nu, prec)?;
    let tol = Float::with_val(prec, 1) >> (prec / 2);
    let mut atoms = Vec::new();
    for (x, b) in &ma {
        let formula = if x.is_zero() {
            Float::with_val(prec, 0)
        } else {
            let mut acc = Float::with_val(prec, 0);
            for (z, bz) in &ma {
                let d = Float::with_val(prec, x + z);
                if !d.is_zero() {
                    acc += Float::with_val(prec, bz / &d);
                }
            }
            Float::with_val(prec, x * &acc) * b
        };
        let scale = Float::with_val(prec, 1) + Float::with_val(prec, x.abs_ref());
        let weight = na
            .iter()
            .find(|(y, _)| Float::with_val(prec, y - x).abs() <= Float::with_val(prec, &tol * &scale))
            .map(|(_, w)| w.clone())
            .unwrap_or_else(|| Float::with_val(prec, 0));
        let residual = Float::with_val(prec, &weight - &formula).abs().to_f64();
        atoms.push(NuAtom { x: x.to_f64(), nu_weight: weight.to_f64(), formula: formula.to_f64(), residual });
    }
    let max_residual = atoms.iter().map(|a| a.residual).fold(0.0, f64::max);
    Ok(NuConvention { name: name.into(), atoms, max_residual })
}

/// Compares the atoms of `nu` with `x (int d mu(y)/(x+y)) d mu(x)`, as stated
/// and for the reflected pair.
pub fn check_nu_formula(data: &SpectralData) -> Result<Vec<NuConvention>> {
    if data.mu.is_empty() {
        return Ok(Vec::new());
    }
    let prec = DEFAULT_PREC;
    Ok(vec![
        nu_convention("as-stated", &data.mu, &data.nu, prec)?,
        nu_convention("reflected", &data.mu.reflect(), &data.nu.reflect(), prec)?,
    ])
}

/// `lambda_1 = reflect(mu)` and `lambda_2 = x d mu`, packaged as
/// `N(lambda_1, lambda_2)` and `N(lambda_2, lambda_1)`.
pub fn lambda_systems(data: &SpectralData) -> Result<(NikishinSystem<Rational>, NikishinSystem<Rational>)> {
    let l1 = data.mu.reflect().simplified()?;
    let l2 = data.mu.tilt()?.simplified()?;
    let a = NikishinSystem::build(vec![l1.clone(), l2.clone()])?;
    let b = NikishinSystem::build(vec![l2, l1])?;
    Ok((a, b))
}

/// `lambda_hat_{2,1} - lambda_hat_{2,2} lambda_hat_{1,1} + lambda_hat_{1,2}`.
pub fn plucker_residual(direct: &NikishinSystem<Rational>, reverse: &NikishinSystem<Rational>) -> Result<QFn> {
    let t = |s: &NikishinSystem<Rational>, j, k| -> Result<QFn> {
        s.product_measure(j, k)?.exact_transform().ok_or_else(|| Error::Unsupported("exact transform".into()))
    };
    let l11 = t(direct, 1, 1)?;
    let l12 = t(direct, 1, 2)?;
    let l22 = t(reverse, 1, 1)?;
    let l21 = t(reverse, 1, 2)?;
    Ok(l21.sub(&l22.mul(&l11)).add(&l12).reduced())
}

pub fn check_plucker(direct: &NikishinSystem<Rational>, reverse: &NikishinSystem<Rational>, points: &[Cx<Rational>]) -> Result<Rational> {
    let mut worst = Rational::new();
    for z in points {
        let r = reverse
            .s_hat(1, 2, z)?
            .sub(&reverse.s_hat(1, 1, z)?.mul(&direct.s_hat(1, 1, z)?))
            .add(&direct.s_hat(1, 2, z)?);
        worst = Scalar::max_of(&worst, &r.norm_max());
    }
    Ok(worst)
}

fn order_of(f: &QFn) -> Order {
    if f.num.is_zero() {
        Order::Infinite
    } else {
        Order::Exact(f.den.degree_i64() - f.num.degree_i64())
    }
}

/// Outcome of the reduction for one `n`.
#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    pub n: usize,
    pub masses: usize,
    pub exact_regime: bool,
    pub sigma1_atoms: usize,
    pub sigma2_atoms: usize,
    pub a: Vec<String>,
    pub p_hat: String,
    pub p: String,
    pub q: String,
    pub p_star: String,
    pub p_tilde: String,
    pub p_hat_at_zero: String,
    pub p_at_zero: String,
    /// Orders of `P^ - P W(-z) + Q Z(-z)`, `P - Q W`, `P^ - Q Z`.
    pub weyl_orders: [Order; 3],
    /// Orders of `P* - P~ l11 + Q l12`, `P~ - Q l22`, `P* - Q l21`.
    pub nikishin_orders: [Order; 3],
    pub residuals_identically_zero: bool,
    pub passed: bool,
}

/// Builds `sigma_1 = tau_{1,1}` (from `1/lambda_hat_1 = az + b + tau_hat`) and
/// `sigma_2 = <lambda_2, lambda_1>`, solves the two-measure problem of order
/// `n` and maps the solution back to `(P^_n, P_n, Q_n)`.
pub fn weyl_problem_to_nikishin(pair: &WeylPair, data: &SpectralData, n: usize) -> Result<WeylReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("order n must be at least 1".into()));
    }
    let (direct, reverse) = lambda_systems(data)?;
    let masses = data.mu.atom_count().unwrap_or(1) - 1;
    let l1 = direct.generator(1);
    let (aff, tau) = l1.stieltjes_inverse()?;
    let l21 = reverse.product_measure(1, 2)?.as_ref().clone();
    let sys = NikishinSystem::build(vec![tau.clone(), l21.clone()])?;
    let alpha = data.mu.total_mass()?;
    let m11 = l1.total_mass()?;
    let m12 = direct.product_measure(1, 2)?.total_mass()?;
    let exact_regime = n > masses;
    let polys = if exact_regime {
        let mut asm: AssembledSystem<Rational> = hermite_pade::assemble_ml(&sys, n)?;
        asm.require_identically_zero(&sys, &ml_terms(2, 0), 0)?;
        asm.require_identically_zero(&sys, &ml_terms(2, 1), 1)?;
        asm.pin_zero(2, 0, 2);
        for k in masses + 2..=n {
            asm.pin_zero(2, k, 2);
        }
        let raw = hermite_pade::solve_nullspace(&asm, 2)?;
        let lead = raw[2].leading().cloned().ok_or_else(|| Error::DegenerateNullspace { dim: 1, reason: "Q vanishes".into() })?;
        let inv = Rational::from(1) / lead;
        raw.iter().map(|p| p.scale(&inv)).collect::<Vec<_>>()
    } else {
        hermite_pade::solve(&sys, n, Formulation::Ml)?.polys
    };
    let q = polys[2].neg();
    let p_star = polys[1].neg();
    let p_tilde = p_star
        .shift(1)
        .add(&q.scale(&m12))
        .scale(&(Rational::from(1) / &m11))
        .add(&p_star.scale(&aff.b))
        .sub(&polys[0]);
    let p = p_tilde.add(&q.scale(&alpha));
    let p_hat = p_star.shift(1).add(&q.scale(&pair.z_at_zero()));
    let poly = |p: &QPoly| QFn::from_poly(p.clone());
    let r1 = poly(&p_hat).sub(&pair.w.reflect().mul_poly(&p)).add(&pair.z.reflect().mul_poly(&q)).reduced();
    let r2 = poly(&p).sub(&pair.w.mul_poly(&q)).reduced();
    let r3 = poly(&p_hat).sub(&pair.z.mul_poly(&q)).reduced();
    let t = |j, k| -> Result<QFn> {
        let s = if j == 1 { &direct } else { &reverse };
        let kk = if j == 1 { k } else { 3 - k };
        s.product_measure(1, kk)?.exact_transform().ok_or_else(|| Error::Unsupported("exact transform".into()))
    };
    let j1 = poly(&p_star).sub(&t(1, 1)?.mul_poly(&p_tilde)).add(&t(1, 2)?.mul_poly(&q)).reduced();
    let j2 = poly(&p_tilde).sub(&t(2, 2)?.mul_poly(&q)).reduced();
    let j3 = poly(&p_star).sub(&t(2, 1)?.mul_poly(&q)).reduced();
    let weyl_orders = [order_of(&r1), order_of(&r2), order_of(&r3)];
    let nikishin_orders = [order_of(&j1), order_of(&j2), order_of(&j3)];
    let residuals_identically_zero = [&r1, &r2, &r3].iter().all(|f| f.num.is_zero());
    let ni = n as i64;
    let passed = if exact_regime {
        residuals_identically_zero
    } else {
        weyl_orders[0].at_least(ni + 1)
            && weyl_orders[1].at_least(0)
            && weyl_orders[2].at_least(0)
            && nikishin_orders[0].at_least(ni + 2)
            && nikishin_orders[1].at_least(0)
            && nikishin_orders[2].at_least(1)
    };
    let zero = Rational::new();
    Ok(WeylReport {
        n,
        masses,
        exact_regime,
        sigma1_atoms: tau.atom_count().unwrap_or(0),
        sigma2_atoms: l21.atom_count().unwrap_or(0),
        a: polys.iter().map(|p| p.to_string()).collect(),
        p_hat_at_zero: p_hat.eval(&zero).to_string(),
        p_at_zero: p.eval(&zero).to_string(),
        p_hat: p_hat.to_string(),
        p: p.to_string(),
        q: q.to_string(),
        p_star: p_star.to_string(),
        p_tilde: p_tilde.to_string(),
        weyl_orders,
        nikishin_orders,
        residuals_identically_zero,
        passed,
    })
}
