//! Measures on the real line: finite point masses, weighted intervals, and
//! measures known exactly through a rational Cauchy transform.
//!
//! All three variants expose moments, Cauchy transforms and the algebra used
//! to build Nikishin systems (products, reflection, tilt, Stieltjes
//! inversion).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::par::{self, Exec};
use crate::poly::{Polynomial, RationalFunction};
use crate::quadrature::{gauss_jacobi, MAX_NODES, START_NODES};
use crate::roots;
use crate::scalar::{pow2, Cx, Scalar, DEFAULT_PREC};
use crate::sturm::{RootEnclosure, Sturm};

/// Density family of a continuous measure, in the variable
/// `t = (2x - a - b) / (b - a)` of its interval `[a, b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Weight {
    Constant,
    /// `(1 - t)^alpha (1 + t)^beta`.
    Jacobi { alpha: Rational, beta: Rational },
}

impl Weight {
    pub fn exponents(&self) -> (Rational, Rational) {
        match self {
            Weight::Constant => (Rational::new(), Rational::new()),
            Weight::Jacobi { alpha, beta } => (alpha.clone(), beta.clone()),
        }
    }
    fn reflect(&self) -> Self {
        match self {
            Weight::Constant => Weight::Constant,
            Weight::Jacobi { alpha, beta } => Weight::Jacobi { alpha: beta.clone(), beta: alpha.clone() },
        }
    }
}

/// Finite sum of point masses `sum g_i delta_{y_i}` with sorted positions.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<S> {
    atoms: Vec<(S, S)>,
    interval: Option<Interval>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn atoms(&self) -> &[(S, S)] {
        &self.atoms
    }
    /// Declared interval, if one was given.
    pub fn declared_interval(&self) -> Option<&Interval> {
        self.interval.as_ref()
    }
}

type NodeTable = Arc<Vec<(Float, Float)>>;

/// `factor * x^power * prod_i mhat_i(x) * w(t) dx` on a bounded interval,
/// where the `mhat_i` are Cauchy transforms of the modulating measures.
#[derive(Clone)]
pub struct ContinuousMeasure<S> {
    interval: Interval,
    weight: Weight,
    factor: S,
    power: u32,
    modulators: Vec<Arc<Measure<S>>>,
    prec: u32,
    nodes: Arc<Mutex<HashMap<usize, NodeTable>>>,
}

impl<S: fmt::Debug> fmt::Debug for ContinuousMeasure<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousMeasure")
            .field("interval", &self.interval.to_string())
            .field("weight", &self.weight)
            .field("factor", &self.factor)
            .field("power", &self.power)
            .field("modulators", &self.modulators.len())
            .field("prec", &self.prec)
            .finish()
    }
}

impl<S: Scalar> ContinuousMeasure<S> {
    pub fn interval(&self) -> &Interval {
        &self.interval
    }
    pub fn weight(&self) -> &Weight {
        &self.weight
    }
    pub fn prec(&self) -> u32 {
        self.prec
    }
    /// Nesting depth of modulating transforms.
    pub fn depth(&self) -> usize {
        self.modulators.iter().map(|m| 1 + m.depth()).max().unwrap_or(0)
    }

    fn node_table(&self, n: usize) -> Result<NodeTable> {
        if let Some(t) = self.nodes.lock().expect("node cache poisoned").get(&n) {
            return Ok(t.clone());
        }
        let p = self.prec;
        let (alpha, beta) = self.weight.exponents();
        let rule = gauss_jacobi(n, &alpha, &beta, p, Exec::default())?;
        let (a, b) = self.interval.bounds().expect("continuous measures live on bounded intervals");
        let half = Float::with_val(p, Float::with_val(p, b) - a) / 2u32;
        let mid = Float::with_val(p, Float::with_val(p, a) + b) / 2u32;
        let scale = Float::with_val(p, &half * &self.factor.to_float(p));
        let idx: Vec<usize> = (0..rule.nodes.len()).collect();
        let entries: Vec<Result<(Float, Float)>> = par::map(Exec::default(), &idx, |&i| {
            let x = Float::with_val(p, &half * &rule.nodes[i]) + &mid;
            let mut d = Float::with_val(p, &scale * &rule.weights[i]);
            if self.power > 0 {
                d *= Float::with_val(p, (&x).pow(self.power));
            }
            for m in &self.modulators {
                let v = m.transform_real(&S::from_float(&x, p))?;
                d *= v.to_float(p);
            }
            Ok((x, d))
        });
        let table: NodeTable = Arc::new(entries.into_iter().collect::<Result<Vec<_>>>()?);
        self.nodes.lock().expect("node cache poisoned").insert(n, table.clone());
        Ok(table)
    }

    /// Integrates `count` complex-valued functions at once, doubling the rule
    /// size until two successive values agree to `2^(-p+16)` relative.
    fn quad(&self, count: usize, f: &(dyn Fn(&Float) -> Vec<Cx<Float>> + Sync)) -> Result<Vec<Cx<Float>>> {
        let p = self.prec;
        let tol = pow2(-(p as i32) + 16, p);
        let mut prev: Option<Vec<Cx<Float>>> = None;
        let mut n = START_NODES;
        while n <= MAX_NODES {
            let table = self.node_table(n)?;
            let terms: Vec<Vec<Cx<Float>>> =
                par::map(Exec::default(), &table, |(x, d)| f(x).into_iter().map(|v| v.scale(d)).collect());
            let mut sum = vec![Cx::zero(p); count];
            let mut mag = vec![Float::with_val(p, 0); count];
            for row in &terms {
                for (i, v) in row.iter().enumerate() {
                    sum[i] = sum[i].add(v);
                    mag[i] += v.norm_max();
                }
            }
            if let Some(pv) = &prev {
                let ok = (0..count).all(|i| {
                    let diff = sum[i].sub(&pv[i]).norm_max();
                    diff <= Float::with_val(p, &tol * &mag[i])
                });
                if ok {
                    return Ok(sum);
                }
            }
            prev = Some(sum);
            n *= 2;
        }
        Err(Error::QuadratureNotConverged { nodes: MAX_NODES })
    }
}

/// Measure with Cauchy transform `num/den`, `den` monic and square-free with
/// real roots only. Its atoms are the roots of `den`, possibly irrational.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicMeasure<S> {
    transform: RationalFunction<S>,
    hull: Interval,
}

impl<S: Scalar> AlgebraicMeasure<S> {
    pub fn transform(&self) -> &RationalFunction<S> {
        &self.transform
    }
    pub fn hull(&self) -> &Interval {
        &self.hull
    }
}

/// A finite real measure of constant sign.
#[derive(Clone, Debug)]
pub enum Measure<S> {
    Discrete(DiscreteMeasure<S>),
    Continuous(ContinuousMeasure<S>),
    Algebraic(AlgebraicMeasure<S>),
}

/// Moments `c_0 .. c_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence<S> {
    pub values: Vec<S>,
    pub exact: bool,
    pub prec: u32,
}

/// `l(z) = a z + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineTerm<S> {
    pub a: S,
    pub b: S,
}

impl<S: Scalar> AffineTerm<S> {
    pub fn poly(&self) -> Polynomial<S> {
        let p = self.a.prec().max(self.b.prec());
        Polynomial::new(vec![self.b.clone(), self.a.clone()], p)
    }
}

fn prec_of<S: Scalar>(xs: impl IntoIterator<Item = S>) -> u32 {
    if S::EXACT {
        0
    } else {
        xs.into_iter().map(|x| x.prec()).max().unwrap_or(DEFAULT_PREC)
    }
}

fn sign_of_all(ws: impl Iterator<Item = i32>) -> Result<i32> {
    let mut sign = 0;
    for s in ws {
        if s == 0 {
            return Err(Error::InvalidMeasure("zero weight".into()));
        }
        if sign != 0 && s != sign {
            return Err(Error::MixedSign);
        }
        sign = s;
    }
    Ok(sign)
}

impl<S: Scalar> Measure<S> {
    /// Point masses `(position, weight)`; weights must be nonzero and share a
    /// sign, positions distinct and inside `interval` when one is given.
    pub fn discrete(atoms: Vec<(S, S)>, interval: Option<Interval>) -> Result<Self> {
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidMeasure(format!("repeated atom at {}", w[0].0.to_repr())));
            }
        }
        sign_of_all(atoms.iter().map(|(_, g)| g.signum()))?;
        if let Some(iv) = &interval {
            for (y, _) in &atoms {
                let q = y.to_rational();
                let inside = iv.contains(&q) || (!S::EXACT && near_interval(iv, y));
                if !inside {
                    return Err(Error::InvalidMeasure(format!("atom {} outside {iv}", y.to_repr())));
                }
            }
        }
        Ok(Measure::Discrete(DiscreteMeasure { atoms, interval }))
    }

    /// Point masses from exact data, converted to the backend.
    pub fn from_rational_atoms(atoms: &[(Rational, Rational)], interval: Option<Interval>, prec: u32) -> Result<Self> {
        Self::discrete(
            atoms.iter().map(|(y, g)| (S::from_rational(y, prec), S::from_rational(g, prec))).collect(),
            interval,
        )
    }

    /// The zero measure.
    pub fn empty() -> Self {
        Measure::Discrete(DiscreteMeasure { atoms: Vec::new(), interval: None })
    }

    pub fn continuous(interval: Interval, weight: Weight, sign: i32, prec: u32) -> Result<Self> {
        if !interval.is_bounded() || interval.is_degenerate() {
            return Err(Error::InvalidMeasure(format!("continuous measure needs a bounded interval, got {interval}")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidMeasure(format!("sign must be +1 or -1, got {sign}")));
        }
        let (alpha, beta) = weight.exponents();
        if alpha <= -1 || beta <= -1 {
            return Err(Error::InvalidMeasure("Jacobi exponents must exceed -1".into()));
        }
        let prec = if prec == 0 { DEFAULT_PREC } else { prec };
        Ok(Measure::Continuous(ContinuousMeasure {
            interval,
            weight,
            factor: S::from_i64(sign as i64, prec),
            power: 0,
            modulators: Vec::new(),
            prec,
            nodes: Arc::default(),
        }))
    }

    /// Lebesgue measure on `[a, b]`.
    pub fn lebesgue(a: Rational, b: Rational, prec: u32) -> Result<Self> {
        Self::continuous(Interval::new(a, b)?, Weight::Constant, 1, prec)
    }

    /// Measure with the given Cauchy transform.
    pub fn algebraic(transform: RationalFunction<S>) -> Result<Self> {
        let f = transform.reduced();
        let dq = f.den.degree().unwrap_or(0);
        if f.num.is_zero() || dq == 0 {
            return Ok(Self::empty());
        }
        if f.num.degree() != Some(dq - 1) {
            return Err(Error::InvalidMeasure("transform must decay like c/z with c != 0".into()));
        }
        if S::EXACT {
            let den: Polynomial<Rational> = f.den.convert(0);
            if den.squarefree().degree() != Some(dq) {
                return Err(Error::NonSimplePole);
            }
            let st = Sturm::new(&den);
            if st.count_real() != dq {
                return Err(Error::InvalidMeasure("transform has non-real poles".into()));
            }
            let num: Polynomial<Rational> = f.num.convert(0);
            let dden = den.derivative();
            let encs = st.isolate_all();
            sign_of_all(encs.iter().map(|e| st.sign_at_root(e, &num) * st.sign_at_root(e, &dden)))?;
            let hull = exact_hull(&st, &encs);
            return Ok(Measure::Algebraic(AlgebraicMeasure { transform: f, hull }));
        }
        let prec = f.den.prec();
        let rs = roots::real_roots(&f.den, &Interval::real_line(), prec)?;
        if rs.len() != dq {
            return Err(Error::InvalidMeasure("transform has non-real or repeated poles".into()));
        }
        let fnum = f.num.to_float(prec);
        let fden = f.den.to_float(prec).derivative();
        sign_of_all(rs.iter().map(|r| {
            let w = Float::with_val(prec, fnum.eval(r) / fden.eval(r));
            Scalar::signum(&w)
        }))?;
        let lo = rs.first().unwrap().to_rational().unwrap_or_default();
        let hi = rs.last().unwrap().to_rational().unwrap_or_default();
        let hull = Interval::hull([&lo, &hi]).expect("nonempty");
        Ok(Measure::Algebraic(AlgebraicMeasure { transform: f, hull }))
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Measure::Discrete(_))
    }
    pub fn is_continuous(&self) -> bool {
        matches!(self, Measure::Continuous(_))
    }
    pub fn is_empty(&self) -> bool {
        matches!(self, Measure::Discrete(d) if d.atoms.is_empty())
    }
    /// Atoms of a discrete measure.
    pub fn atoms(&self) -> Option<&[(S, S)]> {
        match self {
            Measure::Discrete(d) => Some(&d.atoms),
            _ => None,
        }
    }
    /// Number of support points, when finite.
    pub fn atom_count(&self) -> Option<usize> {
        match self {
            Measure::Discrete(d) => Some(d.atoms.len()),
            Measure::Algebraic(a) => a.transform.den.degree(),
            Measure::Continuous(_) => None,
        }
    }
    /// Nesting depth of Cauchy-transform densities.
    pub fn depth(&self) -> usize {
        match self {
            Measure::Continuous(c) => c.depth(),
            _ => 0,
        }
    }
    /// Working precision (0 for exact data in the rational backend).
    pub fn prec(&self) -> u32 {
        match self {
            Measure::Discrete(d) => prec_of(d.atoms.iter().flat_map(|(y, g)| [y.clone(), g.clone()])),
            Measure::Continuous(c) => c.prec,
            Measure::Algebraic(a) => a.transform.den.prec().max(a.transform.num.prec()),
        }
    }

    /// The interval carrying the measure: the declared one when present,
    /// otherwise the convex hull of the support.
    pub fn hull(&self) -> Option<Interval> {
        match self {
            Measure::Discrete(d) => d.interval.clone().or_else(|| {
                let qs: Vec<Rational> = d.atoms.iter().map(|(y, _)| y.to_rational()).collect();
                Interval::hull(qs.iter())
            }),
            Measure::Continuous(c) => Some(c.interval.clone()),
            Measure::Algebraic(a) => Some(a.hull.clone()),
        }
    }

    /// `true` when the measure has positive mass at `x`.
    pub fn has_atom_at(&self, x: &Rational) -> bool {
        match self {
            Measure::Discrete(d) => d.atoms.iter().any(|(y, _)| y.to_rational() == *x),
            Measure::Algebraic(a) => {
                let p = a.transform.den.prec();
                a.transform.den.eval(&S::from_rational(x, p)).is_zero()
            }
            Measure::Continuous(_) => false,
        }
    }

    /// `sum_k c_k z^(-k-1)` truncated after `c_up_to`.
    pub fn moments(&self, up_to: usize) -> Result<MomentSequence<S>> {
        let count = up_to + 1;
        match self {
            Measure::Discrete(d) => {
                let p = self.prec();
                let mut out = vec![S::zero(p); count];
                for (y, g) in &d.atoms {
                    let mut pw = g.clone();
                    for c in out.iter_mut() {
                        *c = c.add(&pw);
                        pw = pw.mul(y);
                    }
                }
                Ok(MomentSequence { values: out, exact: S::EXACT, prec: p })
            }
            Measure::Algebraic(a) => {
                let l = a.transform.laurent(count);
                Ok(MomentSequence { values: l.tail, exact: S::EXACT, prec: self.prec() })
            }
            Measure::Continuous(c) => {
                let p = c.prec;
                let f = move |x: &Float| {
                    let mut pw = Float::with_val(p, 1);
                    let mut v = Vec::with_capacity(count);
                    for _ in 0..count {
                        v.push(Cx::real(pw.clone()));
                        pw *= x;
                    }
                    v
                };
                let vals = c.quad(count, &f)?;
                Ok(MomentSequence {
                    values: vals.iter().map(|v| S::from_float(&v.re, p)).collect(),
                    exact: false,
                    prec: p,
                })
            }
        }
    }

    pub fn moment(&self, k: usize) -> Result<S> {
        Ok(self.moments(k)?.values.pop().expect("k+1 moments"))
    }

    /// Total mass `c_0`.
    pub fn total_mass(&self) -> Result<S> {
        self.moment(0)
    }

    /// Exclusion radius `2^(-p/2) * diam(hull)`.
    fn exclusion_radius_sq(&self, prec: u32) -> S {
        let diam = self.hull().and_then(|h| h.diam()).unwrap_or_default();
        let r = Float::with_val(prec, &diam) * pow2(-(prec as i32) / 2, prec);
        S::from_float(&Float::with_val(prec, r.square_ref()), prec)
    }

    /// `int dm(x) / (z - x)`.
    pub fn cauchy_transform(&self, z: &Cx<S>) -> Result<Cx<S>> {
        match self {
            Measure::Discrete(d) => {
                let p = z.prec().max(self.prec());
                let rad = if S::EXACT { None } else { Some(self.exclusion_radius_sq(p)) };
                let mut acc = Cx::zero(p);
                for (y, g) in &d.atoms {
                    let diff = z.sub_real(y);
                    if let Some(r) = &rad {
                        if diff.abs_sq() < *r {
                            return Err(Error::PointOnSupport { detail: format!("z within exclusion radius of atom {}", y.to_repr()) });
                        }
                    }
                    let inv = diff
                        .recip()
                        .ok_or_else(|| Error::PointOnSupport { detail: format!("z equals atom {}", y.to_repr()) })?;
                    acc = acc.add(&inv.scale(g));
                }
                Ok(acc)
            }
            Measure::Algebraic(a) => a
                .transform
                .eval_cx(z)
                .ok_or_else(|| Error::PointOnSupport { detail: "z is a pole of the transform".into() }),
            Measure::Continuous(c) => {
                let p = c.prec;
                let zf: Cx<Float> = z.convert(p);
                let d2 = c.interval.dist_sq(&zf);
                let rad = Float::with_val(p, c.interval.diam().unwrap()) * pow2(-(p as i32) / 2, p);
                if d2 <= Float::with_val(p, rad.square_ref()) {
                    return Err(Error::PointOnSupport { detail: format!("z too close to {}", c.interval) });
                }
                let f = |x: &Float| vec![zf.sub_real(x).recip().unwrap_or_else(|| Cx::zero(p))];
                let v = c.quad(1, &f)?;
                Ok(v[0].convert(p))
            }
        }
    }

    /// Cauchy transform at a real point off the support.
    pub fn transform_real(&self, x: &S) -> Result<S> {
        Ok(self.cauchy_transform(&Cx::real(x.clone()))?.re)
    }

    /// Exact rational Cauchy transform of a finite measure.
    pub fn exact_transform(&self) -> Option<RationalFunction<S>> {
        match self {
            Measure::Discrete(d) => {
                let p = self.prec();
                if d.atoms.is_empty() {
                    return Some(RationalFunction::zero(p));
                }
                let lin: Vec<Polynomial<S>> = d.atoms.iter().map(|(y, _)| Polynomial::linear_root(y)).collect();
                let den = lin.iter().fold(Polynomial::one(p), |acc, l| acc.mul(l));
                let mut num = Polynomial::zero(p);
                for (i, (_, g)) in d.atoms.iter().enumerate() {
                    let others = lin
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != i)
                        .fold(Polynomial::constant(g.clone()), |acc, (_, l)| acc.mul(l));
                    num = num.add(&others);
                }
                Some(RationalFunction::new(num, den))
            }
            Measure::Algebraic(a) => Some(a.transform.clone()),
            Measure::Continuous(_) => None,
        }
    }

    /// `int f dm` for a real integrand.
    pub fn integrate(&self, f: &(dyn Fn(&S) -> Result<S> + Sync)) -> Result<S> {
        match self {
            Measure::Discrete(d) => {
                let p = self.prec();
                let mut acc = S::zero(p);
                for (y, g) in &d.atoms {
                    acc = acc.add(&g.mul(&f(y)?));
                }
                Ok(acc)
            }
            Measure::Continuous(c) => {
                let p = c.prec;
                let failure: Mutex<Option<Error>> = Mutex::new(None);
                let g = |x: &Float| match f(&S::from_float(x, p)) {
                    Ok(v) => vec![Cx::real(v.to_float(p))],
                    Err(e) => {
                        *failure.lock().expect("poisoned") = Some(e);
                        vec![Cx::zero(p)]
                    }
                };
                let v = c.quad(1, &g);
                if let Some(e) = failure.into_inner().expect("poisoned") {
                    return Err(e);
                }
                Ok(S::from_float(&v?[0].re, p))
            }
            Measure::Algebraic(_) => match self.to_discrete()? {
                m @ Measure::Discrete(_) => m.integrate(f),
                _ => Err(Error::Unsupported("integration against irrational atoms in the exact backend".into())),
            },
        }
    }

    /// `S_N = sum_{v=1..N} |c_v|^(-1/(2v))` for `N = 1..=k`.
    pub fn carleman_partial_sums(&self, k: usize, prec: u32) -> Result<Vec<Float>> {
        if k == 0 {
            return Err(Error::InvalidArgument("Carleman sums need K >= 1".into()));
        }
        let ms = self.moments(k)?;
        let mut out = Vec::with_capacity(k);
        let mut acc = Float::with_val(prec, 0);
        for (v, c) in ms.values.iter().enumerate().skip(1) {
            let a = c.to_float(prec).abs();
            if a.is_zero() {
                return Err(Error::ZeroMoment { index: v });
            }
            let e = Float::with_val(prec, -1) / Float::with_val(prec, 2 * v);
            acc += a.pow(&e);
            out.push(acc.clone());
        }
        Ok(out)
    }

    /// Image under `x -> -x`.
    pub fn reflect(&self) -> Self {
        match self {
            Measure::Discrete(d) => {
                let mut atoms: Vec<(S, S)> = d.atoms.iter().map(|(y, g)| (y.neg(), g.clone())).collect();
                atoms.reverse();
                Measure::Discrete(DiscreteMeasure { atoms, interval: d.interval.as_ref().map(|i| i.reflect()) })
            }
            Measure::Continuous(c) => {
                let mut factor = c.factor.clone();
                if c.power % 2 == 1 {
                    factor = factor.neg();
                }
                let modulators = c
                    .modulators
                    .iter()
                    .map(|m| {
                        factor = factor.neg();
                        Arc::new(m.reflect())
                    })
                    .collect();
                Measure::Continuous(ContinuousMeasure {
                    interval: c.interval.reflect(),
                    weight: c.weight.reflect(),
                    factor,
                    power: c.power,
                    modulators,
                    prec: c.prec,
                    nodes: Arc::default(),
                })
            }
            Measure::Algebraic(a) => {
                let f = a.transform.reflect().neg();
                Measure::Algebraic(AlgebraicMeasure { transform: f.reduced(), hull: a.hull.reflect() })
            }
        }
    }

    /// `x dm(x)`; an atom at the origin disappears.
    pub fn tilt(&self) -> Result<Self> {
        match self {
            Measure::Discrete(d) => {
                let atoms: Vec<(S, S)> =
                    d.atoms.iter().filter(|(y, _)| !y.is_zero()).map(|(y, g)| (y.clone(), y.mul(g))).collect();
                Self::discrete(atoms, None)
            }
            Measure::Continuous(c) => {
                let (a, b) = c.interval.bounds().unwrap();
                if *a < 0 && *b > 0 {
                    return Err(Error::MixedSign);
                }
                let mut out = c.clone();
                out.power += 1;
                out.nodes = Arc::default();
                Ok(Measure::Continuous(out))
            }
            Measure::Algebraic(a) => {
                let f = &a.transform;
                if S::EXACT {
                    let st = Sturm::new(&f.den.convert::<Rational>(0));
                    let zero = Rational::new();
                    let big = crate::sturm::cauchy_bound(st.base()) + 1;
                    let neg = st.count_open(&Rational::from(-&big), &zero);
                    let pos = st.count_open(&zero, &big);
                    if neg > 0 && pos > 0 {
                        return Err(Error::MixedSign);
                    }
                }
                let c0 = f.num.leading().unwrap().div(f.den.leading().unwrap());
                let num = f.num.shift(1).sub(&f.den.scale(&c0));
                let t = RationalFunction::new(num, f.den.clone()).reduced();
                Self::algebraic(t)?.simplified()
            }
        }
    }

    /// Multiplies every weight by `c`.
    pub fn scaled(&self, c: &S) -> Self {
        match self {
            Measure::Discrete(d) => Measure::Discrete(DiscreteMeasure {
                atoms: d.atoms.iter().map(|(y, g)| (y.clone(), g.mul(c))).collect(),
                interval: d.interval.clone(),
            }),
            Measure::Continuous(cm) => {
                let mut out = cm.clone();
                out.factor = out.factor.mul(c);
                out.nodes = Arc::default();
                Measure::Continuous(out)
            }
            Measure::Algebraic(a) => Measure::Algebraic(AlgebraicMeasure {
                transform: a.transform.scale(c),
                hull: a.hull.clone(),
            }),
        }
    }

    /// `<self, inner>`: the measure `inner_hat(x) d self(x)`.
    pub fn product(&self, inner: &Measure<S>) -> Result<Self> {
        match self {
            Measure::Discrete(d) => {
                let mut atoms = Vec::with_capacity(d.atoms.len());
                for (y, g) in &d.atoms {
                    atoms.push((y.clone(), g.mul(&inner.transform_real(y)?)));
                }
                Ok(Measure::Discrete(DiscreteMeasure { atoms, interval: d.interval.clone() }))
            }
            Measure::Continuous(c) => {
                let mut out = c.clone();
                out.modulators.push(Arc::new(inner.clone()));
                out.nodes = Arc::default();
                Ok(Measure::Continuous(out))
            }
            Measure::Algebraic(a) => {
                let g = inner.exact_transform().ok_or_else(|| {
                    Error::Unsupported("continuous inner measure under an algebraic outer measure".into())
                })?;
                let q = &a.transform.den;
                let inv = g.den.inv_mod(q).ok_or_else(|| Error::PointOnSupport {
                    detail: "inner transform has a pole on the outer support".into(),
                })?;
                let r = a.transform.num.mul(&g.num).mul(&inv).div_rem(q).1;
                Ok(Measure::Algebraic(AlgebraicMeasure {
                    transform: RationalFunction::new(r, q.clone()),
                    hull: a.hull.clone(),
                }))
            }
        }
    }

    /// `1/mhat = l + tau_hat`, for measures with an exact transform.
    pub fn stieltjes_inverse(&self) -> Result<(AffineTerm<S>, Measure<S>)> {
        let f = self
            .exact_transform()
            .ok_or_else(|| Error::Unsupported("Stieltjes inversion needs an exact transform".into()))?
            .reduced();
        if f.num.is_zero() {
            return Err(Error::DivisionByZero("inverse of the zero measure".into()));
        }
        let (l, r) = f.den.div_rem(&f.num);
        if l.degree() != Some(1) {
            return Err(Error::InvalidMeasure("transform does not decay like c/z".into()));
        }
        let aff = AffineTerm { a: l.coeff(1), b: l.coeff(0) };
        if r.is_zero() {
            return Ok((aff, Self::empty()));
        }
        let lead = f.num.leading().unwrap().clone();
        let inv = S::one(lead.prec()).div(&lead);
        let tau = Self::algebraic(RationalFunction::new(r.scale(&inv), f.num.scale(&inv)))?.simplified()?;
        Ok((aff, tau))
    }

    /// Rewrites an algebraic measure as point masses when that is exact
    /// (all rational atoms) or in the float backend.
    pub fn simplified(self) -> Result<Self> {
        match &self {
            Measure::Algebraic(_) => self.to_discrete(),
            _ => Ok(self),
        }
    }

    fn to_discrete(&self) -> Result<Self> {
        let Measure::Algebraic(a) = self else {
            return Ok(self.clone());
        };
        let f = &a.transform;
        let dden = f.den.derivative();
        if S::EXACT {
            let den: Polynomial<Rational> = f.den.convert(0);
            let st = Sturm::new(&den);
            let mut atoms = Vec::new();
            for e in st.isolate_all() {
                match rational_root(&st, &den, &e) {
                    Some(r) => {
                        let y = S::from_rational(&r, 0);
                        let g = f.num.eval(&y).div(&dden.eval(&y));
                        atoms.push((y, g));
                    }
                    None => return Ok(self.clone()),
                }
            }
            return Self::discrete(atoms, None);
        }
        let prec = f.den.prec();
        let rs = roots::real_roots(&f.den, &Interval::real_line(), prec)?;
        let atoms = rs
            .iter()
            .map(|r| {
                let y = S::from_float(r, prec);
                let g = f.num.eval(&y).div(&dden.eval(&y));
                (y, g)
            })
            .collect();
        Self::discrete(atoms, None)
    }

    /// Same measure in another backend.
    pub fn convert<T: Scalar>(&self, prec: u32) -> Measure<T> {
        let c = |s: &S| -> T {
            if S::EXACT {
                T::from_rational(&s.to_rational(), prec)
            } else {
                T::from_float(&s.to_float(prec), prec)
            }
        };
        match self {
            Measure::Discrete(d) => Measure::Discrete(DiscreteMeasure {
                atoms: d.atoms.iter().map(|(y, g)| (c(y), c(g))).collect(),
                interval: d.interval.clone(),
            }),
            Measure::Continuous(cm) => Measure::Continuous(ContinuousMeasure {
                interval: cm.interval.clone(),
                weight: cm.weight.clone(),
                factor: c(&cm.factor),
                power: cm.power,
                modulators: cm.modulators.iter().map(|m| Arc::new(m.convert(prec))).collect(),
                prec: if prec == 0 { cm.prec } else { prec },
                nodes: Arc::default(),
            }),
            Measure::Algebraic(a) => Measure::Algebraic(AlgebraicMeasure {
                transform: RationalFunction::new(
                    Polynomial::new(a.transform.num.coeffs().iter().map(c).collect(), prec),
                    Polynomial::new(a.transform.den.coeffs().iter().map(c).collect(), prec),
                ),
                hull: a.hull.clone(),
            }),
        }
    }
}

fn near_interval<S: Scalar>(iv: &Interval, y: &S) -> bool {
    let p = y.prec();
    let z = Cx::real(y.to_float(p));
    let d = iv.dist_sq(&z);
    let scale = Float::with_val(p, 1) + Float::with_val(p, y.to_float(p).abs_ref());
    d.sqrt() <= pow2(-(p as i32) / 2, p) * scale
}

fn exact_hull(st: &Sturm, encs: &[RootEnclosure]) -> Interval {
    let w = Rational::from((1, 1)) >> 80;
    let first = st.refine(encs.first().unwrap(), &w);
    let last = st.refine(encs.last().unwrap(), &w);
    Interval::hull([&first.lo, &last.hi]).expect("nonempty")
}

/// The root enclosed by `e` when it is rational.
fn rational_root(st: &Sturm, p: &Polynomial<Rational>, e: &RootEnclosure) -> Option<Rational> {
    if e.is_exact() {
        return Some(e.lo.clone());
    }
    let den_lcm = p.coeffs().iter().fold(Integer::from(1), |acc, c| acc.lcm(c.denom()));
    let lead = Integer::from(p.leading()?.numer() * &den_lcm) / p.leading()?.denom();
    let lead = lead.abs();
    let width = Rational::from((Integer::from(1), Integer::from(&lead * 4u32)));
    let r = st.refine(e, &width);
    if r.is_exact() {
        return Some(r.lo);
    }
    let scaled = r.midpoint() * &lead;
    let cand = Rational::from((scaled.round().into_numer_denom().0, lead));
    (cand > r.lo && cand <= r.hi && p.eval(&cand).is_zero()).then_some(cand)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }
    fn disc(atoms: &[(i64, i64, i64)]) -> Measure<Rational> {
        let a: Vec<(Rational, Rational)> = atoms.iter().map(|&(y, n, d)| (q(y, 1), q(n, d))).collect();
        Measure::from_rational_atoms(&a, None, 0).unwrap()
    }
    fn cx(re: Rational, im: Rational) -> Cx<Rational> {
        Cx::new(re, im)
    }

    #[test]
    fn discrete_moments() {
        assert_eq!(disc(&[(1, 1, 1)]).moment(5).unwrap(), 1);
        assert_eq!(disc(&[(0, 1, 2), (1, 1, 2)]).moment(2).unwrap(), q(1, 2));
    }

    #[test]
    fn lebesgue_moments_and_transform() {
        let m = Measure::<Float>::lebesgue(q(0, 1), q(1, 1), 128).unwrap();
        let ms = m.moments(6).unwrap();
        for (k, c) in ms.values.iter().enumerate() {
            let exact = Float::with_val(128, 1) / Float::with_val(128, k + 1);
            assert!(Float::with_val(128, c - &exact).abs() < pow2(-110, 128));
        }
        let z = Cx::real(Float::with_val(128, 2));
        let v = m.cauchy_transform(&z).unwrap();
        let ln2 = Float::with_val(128, 2).ln();
        assert!(Float::with_val(128, &v.re - &ln2).abs() < pow2(-100, 128));
        assert!(v.im.is_zero());
    }

    #[test]
    fn discrete_transforms() {
        let v = disc(&[(1, 1, 1)]).cauchy_transform(&cx(q(2, 1), q(0, 1))).unwrap();
        assert_eq!(v, cx(q(1, 1), q(0, 1)));
        let m = disc(&[(-1, 1, 2), (1, 1, 2)]);
        let v = m.cauchy_transform(&cx(q(0, 1), q(2, 1))).unwrap();
        assert_eq!(v, cx(q(0, 1), q(-2, 5)));
        assert!(matches!(m.cauchy_transform(&cx(q(1, 1), q(0, 1))), Err(Error::PointOnSupport { .. })));
    }

    #[test]
    fn carleman_examples() {
        let s = disc(&[(1, 1, 1)]).carleman_partial_sums(3, 64).unwrap();
        let f: Vec<f64> = s.iter().map(|v| v.to_f64()).collect();
        assert_eq!(f, vec![1.0, 2.0, 3.0]);
        let s = disc(&[(2, 2, 1)]).carleman_partial_sums(1, 64).unwrap();
        assert_eq!(s[0].to_f64(), 0.5);
        let leb = Measure::<Float>::lebesgue(q(0, 1), q(1, 1), 128).unwrap();
        let s = leb.carleman_partial_sums(2, 128).unwrap();
        let a = 2f64.sqrt();
        assert!((s[0].to_f64() - a).abs() < 1e-14);
        assert!((s[1].to_f64() - (a + 3f64.powf(0.25))).abs() < 1e-14);
        let zm = disc(&[(0, 1, 1)]);
        assert_eq!(zm.carleman_partial_sums(2, 64), Err(Error::ZeroMoment { index: 1 }));
    }

    #[test]
    fn stieltjes_inverse_examples() {
        let (l, tau) = disc(&[(0, 1, 1)]).stieltjes_inverse().unwrap();
        assert_eq!((l.a, l.b), (q(1, 1), q(0, 1)));
        assert!(tau.is_empty());
        let (l, tau) = disc(&[(-1, 1, 2), (1, 1, 2)]).stieltjes_inverse().unwrap();
        assert_eq!((l.a, l.b), (q(1, 1), q(0, 1)));
        assert_eq!(tau.atoms().unwrap(), &[(q(0, 1), q(-1, 1))]);
    }

    #[test]
    fn stieltjes_inverse_with_irrational_atoms() {
        let m = disc(&[(0, 1, 1), (1, 1, 1), (3, 1, 1)]);
        let (l, tau) = m.stieltjes_inverse().unwrap();
        assert!(matches!(tau, Measure::Algebraic(_)));
        assert_eq!(tau.atom_count(), Some(2));
        assert_eq!(l.a, q(1, 3));
        for k in 1..6 {
            let z = cx(q(7 * k, 3), q(k, 2));
            let lhs = m.cauchy_transform(&z).unwrap();
            let lz = Cx::new(Rational::from(&l.a * &z.re) + &l.b, Rational::from(&l.a * &z.im));
            let total = lz.add(&tau.cauchy_transform(&z).unwrap()).mul(&lhs);
            assert_eq!(total, Cx::one(0));
        }
        let h = tau.hull().unwrap();
        assert!(h.lo().unwrap() > &q(0, 1) && h.hi().unwrap() < &q(3, 1));
    }

    #[test]
    fn reflect_and_tilt() {
        assert_eq!(disc(&[(3, 1, 1)]).reflect().atoms().unwrap(), &[(q(-3, 1), q(1, 1))]);
        let mu = disc(&[(-8, 1, 1), (0, 1, 1)]);
        assert_eq!(mu.reflect().atoms().unwrap(), &[(q(0, 1), q(1, 1)), (q(8, 1), q(1, 1))]);
        assert_eq!(mu.tilt().unwrap().atoms().unwrap(), &[(q(-8, 1), q(-8, 1))]);
        assert_eq!(disc(&[(2, 3, 1)]).tilt().unwrap().atoms().unwrap(), &[(q(2, 1), q(6, 1))]);
        assert_eq!(disc(&[(-1, 1, 1), (1, 1, 1)]).tilt().unwrap_err(), Error::MixedSign);
    }

    #[test]
    fn continuous_reflection_flips_odd_moments() {
        let w = Weight::Jacobi { alpha: q(1, 1), beta: q(1, 2) };
        let m = Measure::<Float>::continuous(Interval::from_i64(1, 2).unwrap(), w, 1, 128).unwrap();
        let r = m.reflect();
        let a = m.moments(5).unwrap().values;
        let b = r.moments(5).unwrap().values;
        for k in 0..6 {
            let s = if k % 2 == 0 { Float::with_val(128, &a[k]) } else { Float::with_val(128, -&a[k]) };
            assert!(Float::with_val(128, &b[k] - &s).abs() < pow2(-100, 128));
        }
    }

    #[test]
    fn semicircle_mass() {
        let w = Weight::Jacobi { alpha: q(1, 2), beta: q(1, 2) };
        let m = Measure::<Float>::continuous(Interval::from_i64(-1, 1).unwrap(), w, 1, 128).unwrap();
        let c0 = m.total_mass().unwrap();
        let half_pi = Float::with_val(128, rug::float::Constant::Pi) / 2u32;
        assert!(Float::with_val(128, &c0 - &half_pi).abs() < pow2(-110, 128));
    }

    #[test]
    fn continuous_product_with_atom() {
        let leb = Measure::<Float>::lebesgue(q(0, 1), q(1, 1), 128).unwrap();
        let d = Measure::<Float>::from_rational_atoms(&[(q(3, 1), q(1, 1))], None, 128).unwrap();
        let p = leb.product(&d).unwrap();
        let c0 = p.total_mass().unwrap();
        let exact = Float::with_val(128, q(2, 3)).ln();
        assert!(Float::with_val(128, &c0 - &exact).abs() < pow2(-100, 128));
    }

    #[test]
    fn algebraic_product_matches_float() {
        let m = disc(&[(0, 1, 1), (1, 1, 1), (3, 1, 1)]);
        let (_, tau) = m.stieltjes_inverse().unwrap();
        let inner = disc(&[(-2, 1, 1), (-1, 1, 3)]);
        let prod = tau.product(&inner).unwrap();
        let ex = prod.moments(4).unwrap().values;
        let ftau = tau.convert::<Float>(192).simplified().unwrap();
        let fprod = ftau.product(&inner.convert::<Float>(192)).unwrap();
        let fl = fprod.moments(4).unwrap().values;
        for k in 0..5 {
            let d = Float::with_val(192, &fl[k] - &ex[k]);
            assert!(d.abs() < pow2(-150, 192));
        }
    }

    #[test]
    fn algebraic_tilt_and_reflect() {
        let m = disc(&[(1, 1, 1), (2, 1, 1), (5, 1, 1)]);
        let (_, tau) = m.stieltjes_inverse().unwrap();
        let t = tau.tilt().unwrap();
        let a = tau.moments(4).unwrap().values;
        let b = t.moments(3).unwrap().values;
        for k in 0..4 {
            assert_eq!(b[k], a[k + 1]);
        }
        let r = tau.reflect();
        let c = r.moments(4).unwrap().values;
        for k in 0..5 {
            let s = if k % 2 == 0 { a[k].clone() } else { Rational::from(-&a[k]) };
            assert_eq!(c[k], s);
        }
    }

    #[test]
    fn validation() {
        let a = vec![(q(0, 1), q(1, 1)), (q(1, 1), q(-1, 1))];
        assert_eq!(Measure::<Rational>::from_rational_atoms(&a, None, 0).unwrap_err(), Error::MixedSign);
        let b = vec![(q(0, 1), q(1, 1)), (q(0, 1), q(1, 1))];
        assert!(Measure::<Rational>::from_rational_atoms(&b, None, 0).is_err());
        let c = vec![(q(5, 1), q(1, 1))];
        assert!(Measure::<Rational>::from_rational_atoms(&c, Some(Interval::from_i64(0, 1).unwrap()), 0).is_err());
    }
}
