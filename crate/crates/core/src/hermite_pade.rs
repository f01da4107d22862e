//! Mixed-type Hermite-Pade polynomials: assembly of the DR and ML linear
//! systems from moments, nullspace extraction, normalisation and the
//! structural checks on the result.

use std::fmt;

use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::nikishin::NikishinSystem;
use crate::poly::{Polynomial, RationalFunction};
use crate::roots;
use crate::scalar::{Cx, Scalar, DEFAULT_PREC};
use crate::sturm::{self, Sturm};

/// Which set of interpolation conditions defines the polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Direct/reversed conditions.
    Dr,
    /// Multi-level conditions.
    Ml,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Dr => "dr",
            Formulation::Ml => "ml",
        })
    }
}

/// Achieved vanishing order `v` in `F(z) = O(1/z^v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Exact(i64),
    /// Every computed coefficient vanished.
    AtLeast(i64),
    /// The form is identically zero.
    Infinite,
}

impl Order {
    pub fn at_least(&self, v: i64) -> bool {
        match *self {
            Order::Exact(o) | Order::AtLeast(o) => o >= v,
            Order::Infinite => true,
        }
    }
    /// Shift by the degree of a polynomial divisor.
    pub fn plus(&self, d: i64) -> Self {
        match *self {
            Order::Exact(o) => Order::Exact(o + d),
            Order::AtLeast(o) => Order::AtLeast(o + d),
            Order::Infinite => Order::Infinite,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Exact(o) => write!(f, "{o}"),
            Order::AtLeast(o) => write!(f, ">={o}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Order {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Column `(polynomial index, power)` of an assembled system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Column {
    pub poly: usize,
    pub power: usize,
}

/// Row: vanishing of the coefficient of `z^power` in form `form`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub form: usize,
    pub power: i64,
}

/// Homogeneous system `matrix * coeffs = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledSystem<S> {
    pub matrix: Vec<Vec<S>>,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl<S: Scalar> AssembledSystem<S> {
    pub fn dims(&self) -> (usize, usize) {
        (self.rows.len(), self.columns.len())
    }
    /// Appends the constraint `coeff(poly, power) = 0`.
    pub fn pin_zero(&mut self, poly: usize, power: usize, form: usize) {
        let prec = self.matrix.first().and_then(|r| r.first()).map(|v| v.prec()).unwrap_or(0);
        let row = self
            .columns
            .iter()
            .map(|c| if c.poly == poly && c.power == power { S::one(prec) } else { S::zero(prec) })
            .collect();
        self.matrix.push(row);
        self.rows.push(Row { form, power: power as i64 });
    }
}

/// One summand `sign * a_poly * (s_hat_{p,q} or 1)` of a linear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub sign: i64,
    pub poly: usize,
    pub measure: Option<(usize, usize)>,
}

fn alt(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `A_j = (-1)^j a_j + sum_{k>j} (-1)^k a_k s_hat_{j+1,k}`; `A_m = a_m`.
pub fn ml_terms(m: usize, j: usize) -> Vec<Term> {
    let mut t = vec![Term { sign: alt(j), poly: j, measure: None }];
    if j < m {
        t.extend((j + 1..=m).map(|k| Term { sign: alt(k), poly: k, measure: Some((j + 1, k)) }));
    }
    t
}

/// `a_j - a_m s_hat_{m,j+1}`.
pub fn dr_terms(m: usize, j: usize) -> Vec<Term> {
    vec![Term { sign: 1, poly: j, measure: None }, Term { sign: -1, poly: m, measure: Some((m, j + 1)) }]
}

/// Coefficient of `z^e` contributed by `coeff_i z^i` of the term's polynomial.
fn term_coeff<S: Scalar>(t: &Term, i: usize, e: i64, moments: &[S], prec: u32) -> Option<S> {
    match t.measure {
        None => (e == i as i64).then(|| S::from_i64(t.sign, prec)),
        Some(_) => {
            let idx = i as i64 - e - 1;
            if idx < 0 {
                return None;
            }
            let c = moments.get(idx as usize)?;
            Some(if t.sign > 0 { c.clone() } else { c.neg() })
        }
    }
}

fn term_moments<S: Scalar>(sys: &NikishinSystem<S>, terms: &[Term], up_to: usize) -> Result<Vec<Vec<S>>> {
    terms
        .iter()
        .map(|t| match t.measure {
            Some((p, q)) => Ok(sys.moments_of_product(p, q, up_to)?.values),
            None => Ok(Vec::new()),
        })
        .collect()
}

fn sys_prec<S: Scalar>(sys: &NikishinSystem<S>) -> u32 {
    if S::EXACT {
        0
    } else {
        let p = sys.prec();
        if p == 0 {
            DEFAULT_PREC
        } else {
            p
        }
    }
}

fn columns(m: usize, n: usize) -> Vec<Column> {
    let mut cols = Vec::with_capacity(n * (m + 1) + 1);
    for k in 0..=m {
        let len = if k == m { n + 1 } else { n };
        cols.extend((0..len).map(|power| Column { poly: k, power }));
    }
    cols
}

fn assemble_rows<S: Scalar>(sys: &NikishinSystem<S>, n: usize, forms: &[(usize, Vec<Term>, i64)]) -> Result<AssembledSystem<S>> {
    let m = sys.m();
    let prec = sys_prec(sys);
    let cols = columns(m, n);
    let mut matrix = Vec::new();
    let mut rows = Vec::new();
    for (form, terms, lowest) in forms {
        let ms = term_moments(sys, terms, 2 * n + 3)?;
        for e in (*lowest..=n as i64 - 1).rev() {
            let mut row = vec![S::zero(prec); cols.len()];
            for (t, mom) in terms.iter().zip(&ms) {
                for (ci, c) in cols.iter().enumerate().filter(|(_, c)| c.poly == t.poly) {
                    if let Some(v) = term_coeff(t, c.power, e, mom, prec) {
                        row[ci] = row[ci].add(&v);
                    }
                }
            }
            matrix.push(row);
            rows.push(Row { form: *form, power: e });
        }
    }
    Ok(AssembledSystem { matrix, columns: cols, rows })
}

/// Multi-level conditions: `A_0 = O(1/z^(n+1))` and `A_j = O(1/z)`.
pub fn assemble_ml<S: Scalar>(sys: &NikishinSystem<S>, n: usize) -> Result<AssembledSystem<S>> {
    if n == 0 {
        return Err(Error::InvalidArgument("order n must be at least 1".into()));
    }
    let m = sys.m();
    let mut forms = vec![(0, ml_terms(m, 0), -(n as i64))];
    forms.extend((1..m).map(|j| (j, ml_terms(m, j), 0)));
    assemble_rows(sys, n, &forms)
}

/// Direct/reversed conditions: `A_0 = O(1/z^(n+1))` and
/// `a_j - a_m s_hat_{m,j+1} = O(1/z)` for `j = 1..m-1`.
pub fn assemble_dr<S: Scalar>(sys: &NikishinSystem<S>, n: usize) -> Result<AssembledSystem<S>> {
    if n == 0 {
        return Err(Error::InvalidArgument("order n must be at least 1".into()));
    }
    let m = sys.m();
    let mut forms = vec![(0, ml_terms(m, 0), -(n as i64))];
    forms.extend((1..m).map(|j| (j, dr_terms(m, j), 0)));
    assemble_rows(sys, n, &forms)
}

pub fn assemble<S: Scalar>(sys: &NikishinSystem<S>, n: usize, f: Formulation) -> Result<AssembledSystem<S>> {
    match f {
        Formulation::Ml => assemble_ml(sys, n),
        Formulation::Dr => assemble_dr(sys, n),
    }
}

impl<S: Scalar> AssembledSystem<S> {
    /// Appends rows forcing the numerator of `sum terms` to vanish
    /// identically, for systems whose products have exact transforms.
    pub fn require_identically_zero(&mut self, sys: &NikishinSystem<S>, terms: &[Term], form: usize) -> Result<()> {
        let prec = self.matrix.first().and_then(|r| r.first()).map(|v| v.prec()).unwrap_or(0);
        let m = sys.m();
        let mut dens: Vec<Polynomial<S>> = Vec::new();
        let mut parts = Vec::new();
        for t in terms {
            let f = match t.measure {
                Some((p, q)) => Some(
                    sys.product_measure(p, q)?
                        .exact_transform()
                        .ok_or_else(|| Error::Unsupported("identically-zero rows need exact transforms".into()))?,
                ),
                None => None,
            };
            if let Some(f) = &f {
                if !dens.contains(&f.den) {
                    dens.push(f.den.clone());
                }
            }
            parts.push(f);
        }
        let common = dens.iter().fold(Polynomial::one(prec), |acc, d| acc.mul(d));
        let numerators: Vec<Polynomial<S>> = parts
            .iter()
            .map(|f| match f {
                Some(f) => f.num.mul(&common.div_rem(&f.den).0),
                None => common.clone(),
            })
            .collect();
        let mut cols: Vec<Polynomial<S>> = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            let mut acc = Polynomial::zero(prec);
            for (t, num) in terms.iter().zip(&numerators) {
                if t.poly == c.poly && c.poly <= m {
                    acc = acc.add(&num.shift(c.power).scale(&S::from_i64(t.sign, prec)));
                }
            }
            cols.push(acc);
        }
        let top = cols.iter().filter_map(|p| p.degree()).max().unwrap_or(0);
        for e in 0..=top {
            self.matrix.push(cols.iter().map(|p| p.coeff(e)).collect());
            self.rows.push(Row { form, power: e as i64 });
        }
        Ok(())
    }
}

/// Polynomials from a one-dimensional nullspace, without normalisation.
pub fn solve_nullspace<S: Scalar>(a: &AssembledSystem<S>, m: usize) -> Result<Vec<Polynomial<S>>> {
    let basis = linalg::nullspace(&a.matrix, a.columns.len());
    if basis.len() != 1 {
        return Err(Error::DegenerateNullspace {
            dim: basis.len(),
            reason: if basis.is_empty() { "only the trivial solution".into() } else { "solution is not unique".into() },
        });
    }
    let v = &basis[0];
    let prec = v.iter().map(|x| x.prec()).max().unwrap_or(0);
    let mut coeffs: Vec<Vec<S>> = vec![Vec::new(); m + 1];
    for (c, x) in a.columns.iter().zip(v) {
        let slot = &mut coeffs[c.poly];
        if slot.len() <= c.power {
            slot.resize(c.power + 1, S::zero(prec));
        }
        slot[c.power] = x.clone();
    }
    Ok(coeffs.into_iter().map(|cs| Polynomial::new(cs, prec)).collect())
}

/// The vector `(a_{n,0}, ..., a_{n,m})` with `a_{n,m}` monic.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitePadeSolution<S> {
    pub n: usize,
    pub polys: Vec<Polynomial<S>>,
    pub formulation: Formulation,
    /// Vanishing order of each multi-level form `A_{n,j}`, `j < m`.
    pub verified_orders: Vec<Order>,
}

impl<S: Scalar> HermitePadeSolution<S> {
    pub fn m(&self) -> usize {
        self.polys.len() - 1
    }
    pub fn top(&self) -> &Polynomial<S> {
        &self.polys[self.m()]
    }
    /// Orders required by the multi-level definition.
    pub fn orders_ok(&self) -> bool {
        self.verified_orders
            .iter()
            .enumerate()
            .all(|(j, o)| o.at_least(if j == 0 { self.n as i64 + 1 } else { 1 }))
    }
    /// Largest coefficient difference to another solution.
    pub fn max_coeff_diff(&self, o: &Self) -> S {
        let prec = self.top().prec();
        self.polys.iter().zip(&o.polys).fold(S::zero(prec), |m, (a, b)| S::max_of(&m, &a.max_abs_diff(b)))
    }
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "formulation": self.formulation,
            "normalization": "monic a_{n,m}",
            "polys": self.polys.iter().map(|p| p.to_repr()).collect::<Vec<_>>(),
            "display": self.polys.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "verified_orders": self.verified_orders,
        })
    }
}

/// Solves for `(a_{n,0}, ..., a_{n,m})`, normalises `a_{n,m}` monic and
/// recomputes the interpolation orders from the solution.
pub fn solve<S: Scalar>(sys: &NikishinSystem<S>, n: usize, formulation: Formulation) -> Result<HermitePadeSolution<S>> {
    if let Some(atoms) = sys.min_atom_count() {
        if n > atoms {
            return Err(Error::DegenerateNullspace {
                dim: 0,
                reason: format!("n={n} exceeds the smallest generator support ({atoms} points); the forms degenerate"),
            });
        }
    }
    let polys = if S::EXACT { normalize(solve_nullspace(&assemble(sys, n, formulation)?, sys.m())?, n)? } else { refine(sys, n, formulation)? };
    let mut sol = HermitePadeSolution { n, polys, formulation, verified_orders: Vec::new() };
    sol.verified_orders = residual_orders(&sol, sys)?;
    Ok(sol)
}

/// Extra working bits of the first floating-point elimination.
pub const GUARD_BITS: u32 = 64;
const MAX_REFINEMENTS: usize = 4;

/// Floating-point solve with guard bits: the moment matrix is assembled and
/// reduced at `prec + g` bits for growing `g` until two successive solutions
/// agree to the target precision, then rounded back to `prec`.
fn refine<S: Scalar>(sys: &NikishinSystem<S>, n: usize, formulation: Formulation) -> Result<Vec<Polynomial<S>>> {
    let target = sys_prec(sys);
    let mut guard = GUARD_BITS;
    let mut prev: Option<Vec<Polynomial<S>>> = None;
    let mut last_err = None;
    for _ in 0..MAX_REFINEMENTS {
        let work = sys.at_precision(target + guard);
        let attempt = assemble(&work, n, formulation).and_then(|a| solve_nullspace(&a, sys.m())).and_then(|p| normalize(p, n));
        guard *= 2;
        let polys: Vec<Polynomial<S>> = match attempt {
            Ok(p) => p.iter().map(|q| q.convert::<S>(target)).collect(),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if let Some(old) = &prev {
            let scale = polys.iter().fold(S::one(target), |acc, p| S::max_of(&acc, &p.max_abs_coeff()));
            let diff = old.iter().zip(&polys).fold(S::zero(target), |acc, (a, b)| S::max_of(&acc, &a.max_abs_diff(b)));
            if diff.to_float(target) <= (scale.to_float(target) >> (target - 8)) {
                return Ok(polys);
            }
        }
        prev = Some(polys);
    }
    match (prev, last_err) {
        (Some(p), _) => Ok(p),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one refinement runs"),
    }
}

fn normalize<S: Scalar>(polys: Vec<Polynomial<S>>, n: usize) -> Result<Vec<Polynomial<S>>> {
    let m = polys.len() - 1;
    let scale = polys.iter().fold(S::zero(polys[m].prec()), |acc, p| S::max_of(&acc, &p.max_abs_coeff()));
    let lead = polys[m].coeff(n);
    if lead.is_zero() || lead.negligible(&scale) {
        return Err(Error::DegreeViolation { index: m, expected: n as i64, found: polys[m].degree_i64().min(n as i64 - 1) });
    }
    let inv = S::one(lead.prec()).div(&lead);
    let out: Vec<Polynomial<S>> = polys.iter().map(|p| p.scale(&inv)).collect();
    for (j, p) in out.iter().enumerate().take(m) {
        let lc = p.coeff(n - 1);
        if p.degree() != Some(n - 1) || lc.negligible(&S::one(lc.prec())) {
            return Err(Error::DegreeViolation { index: j, expected: n as i64 - 1, found: p.degree_i64() });
        }
    }
    Ok(out)
}

/// Laurent coefficients of `sum terms` from `z^top` down to `z^-tail`,
/// with a magnitude bound for each.
pub fn terms_laurent<S: Scalar>(
    sys: &NikishinSystem<S>,
    polys: &[Polynomial<S>],
    terms: &[Term],
    top: i64,
    tail: usize,
) -> Result<Vec<(i64, S, S)>> {
    let prec = sys_prec(sys).max(polys.iter().map(|p| p.prec()).max().unwrap_or(0));
    let maxdeg = polys.iter().map(|p| p.coeffs().len()).max().unwrap_or(0);
    let ms = term_moments(sys, terms, maxdeg + tail + 1)?;
    let mut out = Vec::new();
    for e in (-(tail as i64)..=top).rev() {
        let mut acc = S::zero(prec);
        let mut mag = S::zero(prec);
        for (t, mom) in terms.iter().zip(&ms) {
            for (i, a) in polys[t.poly].coeffs().iter().enumerate() {
                if let Some(v) = term_coeff(t, i, e, mom, prec) {
                    let prod = a.mul(&v);
                    mag = mag.add(&prod.abs());
                    acc = acc.add(&prod);
                }
            }
        }
        out.push((e, acc, mag));
    }
    Ok(out)
}

/// Exact rational function `sum terms`, when all products have exact transforms.
pub fn terms_rational<S: Scalar>(sys: &NikishinSystem<S>, polys: &[Polynomial<S>], terms: &[Term]) -> Result<Option<RationalFunction<S>>> {
    let prec = polys.iter().map(|p| p.prec()).max().unwrap_or(0);
    let mut parts: Vec<(S, &Polynomial<S>, Option<RationalFunction<S>>)> = Vec::new();
    for t in terms {
        let tr = match t.measure {
            Some((p, q)) => match sys.product_measure(p, q)?.exact_transform() {
                Some(f) => Some(f),
                None => return Ok(None),
            },
            None => None,
        };
        parts.push((S::from_i64(t.sign, prec), &polys[t.poly], tr));
    }
    let den = parts.iter().find_map(|(_, _, f)| f.as_ref().map(|f| f.den.clone()));
    let Some(den) = den else {
        let p = parts.iter().fold(Polynomial::zero(prec), |acc, (s, a, _)| acc.add(&a.scale(s)));
        return Ok(Some(RationalFunction::from_poly(p)));
    };
    if parts.iter().all(|(_, _, f)| f.as_ref().is_none_or(|f| f.den == den)) {
        let mut num = Polynomial::zero(prec);
        for (s, a, f) in &parts {
            let piece = match f {
                Some(f) => a.mul(&f.num),
                None => a.mul(&den),
            };
            num = num.add(&piece.scale(s));
        }
        return Ok(Some(RationalFunction::new(num, den)));
    }
    let mut acc = RationalFunction::zero(prec);
    for (s, a, f) in &parts {
        let piece = match f {
            Some(f) => f.mul_poly(a),
            None => RationalFunction::from_poly((*a).clone()),
        };
        acc = acc.add(&piece.scale(s));
    }
    Ok(Some(acc))
}

/// Order of `sum terms` at infinity from `tail` negative powers.
pub fn terms_order<S: Scalar>(sys: &NikishinSystem<S>, polys: &[Polynomial<S>], terms: &[Term], top: i64, tail: usize) -> Result<Order> {
    let coeffs = terms_laurent(sys, polys, terms, top, tail)?;
    for (e, c, mag) in &coeffs {
        if !c.is_zero() && !c.negligible(mag) {
            return Ok(Order::Exact(-e));
        }
    }
    if S::EXACT {
        if let Some(f) = terms_rational(sys, polys, terms)? {
            if f.num.is_zero() {
                return Ok(Order::Infinite);
            }
        }
    }
    Ok(Order::AtLeast(tail as i64 + 1))
}

/// Vanishing orders of the multi-level forms `A_{n,0..m-1}` from `2n+4`
/// Laurent coefficients.
pub fn residual_orders<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>) -> Result<Vec<Order>> {
    let m = sys.m();
    let tail = 2 * sol.n + 4;
    (0..m).map(|j| terms_order(sys, &sol.polys, &ml_terms(m, j), sol.n as i64, tail)).collect()
}

/// Evaluates a linear form of the solution at `z`.
pub fn terms_value<S: Scalar>(sys: &NikishinSystem<S>, polys: &[Polynomial<S>], terms: &[Term], z: &Cx<S>) -> Result<Cx<S>> {
    let mut acc = Cx::zero(z.prec());
    for t in terms {
        let mut v = polys[t.poly].eval_cx(z);
        if let Some((p, q)) = t.measure {
            v = v.mul(&sys.s_hat(p, q, z)?);
        }
        acc = acc.add(&v.scale(&S::from_i64(t.sign, z.prec())));
    }
    Ok(acc)
}

/// `A_{n,j}(z)`; `j = m` gives `a_{n,m}(z)`.
pub fn form_value<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>, j: usize, z: &Cx<S>) -> Result<Cx<S>> {
    terms_value(sys, &sol.polys, &ml_terms(sys.m(), j), z)
}

/// Real roots of `p` inside `window`, sorted.
pub fn real_roots<S: Scalar>(p: &Polynomial<S>, window: &Interval, prec: u32) -> Result<Vec<Float>> {
    roots::real_roots(p, window, prec)
}

/// Outcome of the zero-location checks.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroLocationReport {
    pub n: usize,
    pub top_roots: Vec<f64>,
    pub top_count_in_interior: usize,
    pub top_simple: bool,
    pub next_roots: Vec<f64>,
    pub next_count_in_interior: usize,
    pub interlacing: bool,
    /// `(j, sign changes of A_{n,j} on the interior of Delta_j)`; `None`
    /// when the form vanishes identically. The count is only required to
    /// reach `n` when `sigma_j` has more than `n` support points.
    pub form_sign_changes: Vec<(usize, Option<usize>)>,
    pub passed: bool,
}

fn open_bounds(iv: &Interval) -> (Rational, Rational) {
    let (a, b) = iv.bounds().expect("bounded interval");
    (a.clone(), b.clone())
}

/// Roots of `a_{n,m}` and `a_{n,m-1}` in the interior of `Delta_m`, their
/// interlacing, and the sign changes of the forms `A_{n,j}` on `Delta_j`.
pub fn check_zero_location<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>) -> Result<ZeroLocationReport> {
    let m = sys.m();
    let n = sol.n;
    let dm = sys.interval(m);
    let prec = if S::EXACT { DEFAULT_PREC } else { sys_prec(sys) };
    let top = sol.top();
    let next = &sol.polys[m - 1];
    let (lo, hi) = open_bounds(dm);
    let degenerate = dm.is_degenerate();
    let mut r = ZeroLocationReport {
        n,
        top_roots: Vec::new(),
        top_count_in_interior: 0,
        top_simple: false,
        next_roots: Vec::new(),
        next_count_in_interior: 0,
        interlacing: false,
        form_sign_changes: Vec::new(),
        passed: false,
    };
    if S::EXACT {
        let tq: Polynomial<Rational> = top.convert(0);
        let nq: Polynomial<Rational> = next.convert(0);
        let st = Sturm::new(&tq);
        r.top_simple = st.base().degree() == tq.degree();
        r.top_count_in_interior = if degenerate { st.count_closed(&lo, &hi) } else { st.count_open(&lo, &hi) };
        let encs: Vec<_> = sturm::roots_in(&tq, dm).into_iter().filter(|e| degenerate || !(e.is_exact() && (e.lo == lo || e.lo == hi))).collect();
        let signs: Vec<i32> = encs.iter().map(|e| st.sign_at_root(e, &nq)).collect();
        let alternating = signs.iter().all(|&s| s != 0) && signs.windows(2).all(|w| w[0] == -w[1]);
        if nq.degree().unwrap_or(0) > 0 {
            let sn = Sturm::new(&nq);
            r.next_count_in_interior = if degenerate { sn.count_closed(&lo, &hi) } else { sn.count_open(&lo, &hi) };
        }
        r.interlacing = alternating && encs.len() == n && nq.degree() == Some(n - 1);
        r.top_roots = roots::real_roots(&tq, dm, 64)?.iter().map(|x| x.to_f64()).collect();
        if nq.degree().unwrap_or(0) > 0 {
            r.next_roots = roots::real_roots(&nq, dm, 64)?.iter().map(|x| x.to_f64()).collect();
        }
    } else {
        let tr = roots::real_roots(top, dm, prec)?;
        let inside = |x: &Float| {
            let q = x.to_rational().unwrap_or_default();
            if degenerate {
                dm.contains(&q)
            } else {
                dm.interior_contains(&q)
            }
        };
        let tin: Vec<Float> = tr.into_iter().filter(inside).collect();
        r.top_count_in_interior = tin.len();
        r.top_simple = tin.len() == n;
        let nr: Vec<Float> = if next.degree().unwrap_or(0) > 0 {
            roots::real_roots(next, dm, prec)?.into_iter().filter(inside).collect()
        } else {
            Vec::new()
        };
        r.next_count_in_interior = nr.len();
        r.interlacing = nr.len() + 1 == tin.len() && nr.iter().enumerate().all(|(i, x)| tin[i] < *x && *x < tin[i + 1]);
        r.top_roots = tin.iter().map(|x| x.to_f64()).collect();
        r.next_roots = nr.iter().map(|x| x.to_f64()).collect();
    }
    for j in 1..m {
        let count = form_sign_changes(sol, sys, j, prec)?;
        r.form_sign_changes.push((j, count));
    }
    r.passed = r.top_count_in_interior == n
        && r.top_simple
        && r.next_count_in_interior == n - 1
        && r.interlacing
        && r.form_sign_changes.iter().all(|&(j, c)| c.is_none_or(|c| c >= n) || sys.generator(j).atom_count().is_some_and(|a| a <= n));
    Ok(r)
}

/// Number of sign changes of `A_{n,j}` inside `Delta_j`, `None` when
/// `A_{n,j}` is identically zero.
pub fn form_sign_changes<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>, j: usize, prec: u32) -> Result<Option<usize>> {
    let m = sys.m();
    let iv = sys.interval(j);
    let (lo, hi) = open_bounds(iv);
    let Some(f) = terms_rational(sys, &sol.polys, &ml_terms(m, j))? else {
        return sampled_sign_changes(sol, sys, j, &lo, &hi);
    };
    if f.num.is_zero() {
        return Ok(None);
    }
    if !S::EXACT && !matches!(terms_order(sys, &sol.polys, &ml_terms(m, j), sol.n as i64, 2 * sol.n + 4)?, Order::Exact(_)) {
        return Ok(None);
    }
    if S::EXACT {
        let num: Polynomial<Rational> = f.num.convert(0);
        return Ok(Some(sturm::sign_changes_open(&num, &lo, &hi)));
    }
    let rs = roots::real_roots(&f.num, iv, prec)?;
    Ok(Some(rs.iter().filter(|x| iv.interior_contains(&x.to_rational().unwrap_or_default())).count()))
}

/// Sign changes of `A_{n,j}` at `SAMPLES_PER_ORDER * (n + 1)` equispaced
/// interior points of `Delta_j`; a lower bound on the true count.
fn sampled_sign_changes<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>, j: usize, lo: &Rational, hi: &Rational) -> Result<Option<usize>> {
    let m = sys.m();
    if !matches!(terms_order(sys, &sol.polys, &ml_terms(m, j), sol.n as i64, 2 * sol.n + 4)?, Order::Exact(_)) {
        return Ok(None);
    }
    let prec = sys_prec(sys);
    let k = SAMPLES_PER_ORDER * (sol.n + 1);
    let width = Rational::from(hi - lo);
    let mut last = 0;
    let mut changes = 0;
    for i in 0..k {
        let x = lo + &width * Rational::from((2 * i as i64 + 1, 2 * k as i64));
        let v = form_value(sol, sys, j, &Cx::from_rationals(&x, &Rational::new(), prec))?.re.signum();
        if v != 0 {
            if last != 0 && v != last {
                changes += 1;
            }
            last = v;
        }
    }
    Ok(Some(changes))
}

const SAMPLES_PER_ORDER: usize = 32;

/// Max coefficient difference between the monic DR and ML solutions.
pub fn check_dr_ml_equivalence<S: Scalar>(sys: &NikishinSystem<S>, n: usize) -> Result<S> {
    let a = solve(sys, n, Formulation::Ml)?;
    let b = solve(sys, n, Formulation::Dr)?;
    Ok(a.max_coeff_diff(&b))
}

/// `a_{n,j}^{(n-1)} - a_{n,m}^{(n)} |s_{m,j+1}|` for `j = 0..m-1`, where
/// `|s|` is the total (signed) mass.
pub fn leading_relation_residuals<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>) -> Result<Vec<S>> {
    let m = sys.m();
    let n = sol.n;
    let lead = sol.top().coeff(n);
    (0..m)
        .map(|j| {
            let c0 = sys.moments_of_product(m, j + 1, 0)?.values[0].clone();
            Ok(sol.polys[j].coeff(n - 1).sub(&lead.mul(&c0)))
        })
        .collect()
}

/// Multipoint-Pade structure of `(a_{n,m-1} - a_{n,m} s_hat_{m,m}) / w`,
/// `w` vanishing at the sign changes of `A_{n,m-1}` on `Delta_{m-1}`, and the
/// orthogonality of `a_{n,m}` against `d sigma_m / w`.
#[derive(Clone, Debug, Serialize)]
pub struct MultipointReport {
    pub n: usize,
    pub sign_changes: usize,
    /// Order of `A_{n,m-1}` itself.
    pub form_order: Order,
    /// Order after dividing by `w`.
    pub mp_order: Order,
    /// Laurent-checked order of the quotient in floating point.
    pub quotient_order: Order,
    /// `max_v |int x^v a_{n,m} d sigma_m / w|`, relative to the same integral
    /// with `x^v a_{n,m}(x)` replaced by its coefficient-magnitude bound.
    pub orthogonality_residual: f64,
    pub orthogonality_log2: f64,
    pub passed: bool,
}

/// Checks the multipoint-Pade form; `w` is built from high-precision roots.
pub fn check_multipoint<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>, prec: u32) -> Result<MultipointReport> {
    let m = sys.m();
    let n = sol.n;
    let form_terms = if m == 1 { ml_terms(1, 0) } else { ml_terms(m, m - 1) };
    let form_order = terms_order(sys, &sol.polys, &form_terms, n as i64, 2 * n + 4)?;
    let w_roots: Vec<Float> = if m == 1 {
        Vec::new()
    } else {
        let iv = sys.interval(m - 1);
        let f = terms_rational(sys, &sol.polys, &form_terms)?
            .ok_or_else(|| Error::Unsupported("multipoint check needs exact transforms".into()))?;
        if f.num.is_zero() {
            Vec::new()
        } else if S::EXACT {
            let num: Polynomial<Rational> = f.num.convert(0);
            let (lo, hi) = open_bounds(iv);
            let odd = sturm::odd_part(&num);
            roots::real_roots(&odd, iv, prec)?
                .into_iter()
                .filter(|x| {
                    let q = x.to_rational().unwrap_or_default();
                    q > lo && q < hi
                })
                .collect()
        } else {
            roots::real_roots(&f.num, iv, prec)?
                .into_iter()
                .filter(|x| iv.interior_contains(&x.to_rational().unwrap_or_default()))
                .collect()
        }
    };
    let sign_changes = w_roots.len();
    let expected = if m == 1 { 0 } else { n };
    let mp_order = form_order.plus(expected as i64);
    let w: Polynomial<Float> = Polynomial::from_roots(&w_roots, prec);
    let fpolys: Vec<Polynomial<Float>> = sol.polys.iter().map(|p| p.to_float(prec)).collect();
    let quotient_order = quotient_order(sys, &fpolys, &form_terms, &w, n, prec)?;
    let (res, log2) = orthogonality_residual(sys, &fpolys[m], &w, n, prec)?;
    let tol_log2 = -(prec as f64) + 64.0;
    let passed = (sign_changes == expected || !matches!(form_order, Order::Exact(_))) && mp_order.at_least(n as i64 + 1) && quotient_order.at_least(n as i64 + 1) && log2 <= tol_log2;
    Ok(MultipointReport {
        n,
        sign_changes,
        form_order,
        mp_order,
        quotient_order,
        orthogonality_residual: res,
        orthogonality_log2: log2,
        passed,
    })
}

fn quotient_order<S: Scalar>(
    sys: &NikishinSystem<S>,
    polys: &[Polynomial<Float>],
    terms: &[Term],
    w: &Polynomial<Float>,
    n: usize,
    prec: u32,
) -> Result<Order> {
    let tail = 2 * n + 4;
    let maxdeg = polys.iter().map(|p| p.coeffs().len()).max().unwrap_or(0);
    let mut coeffs: Vec<(i64, Float, Float)> = Vec::new();
    let ms: Vec<Vec<Float>> = terms
        .iter()
        .map(|t| match t.measure {
            Some((p, q)) => Ok(sys.moments_of_product(p, q, maxdeg + tail + 1)?.values.iter().map(|c| c.to_float(prec)).collect()),
            None => Ok(Vec::new()),
        })
        .collect::<Result<_>>()?;
    for e in (-(tail as i64)..=n as i64).rev() {
        let mut acc = Float::with_val(prec, 0);
        let mut mag = Float::with_val(prec, 0);
        for (t, mom) in terms.iter().zip(&ms) {
            for (i, a) in polys[t.poly].coeffs().iter().enumerate() {
                if let Some(v) = term_coeff(t, i, e, mom, prec) {
                    let p = Float::with_val(prec, a * &v);
                    mag += Float::with_val(prec, p.abs_ref());
                    acc += p;
                }
            }
        }
        coeffs.push((e, acc, mag));
    }
    let dw = w.degree().unwrap_or(0);
    let tail_vals: Vec<(i64, Float, Float)> = coeffs;
    let winv = inverse_series(w, tail + 1, prec);
    for out_e in (-(tail as i64)..=n as i64).rev() {
        let mut acc = Float::with_val(prec, 0);
        let mut mag = Float::with_val(prec, 0);
        for (e, c, m) in &tail_vals {
            let k = e - out_e - dw as i64;
            if k < 0 || k as usize >= winv.len() {
                continue;
            }
            acc += Float::with_val(prec, c * &winv[k as usize]);
            mag += Float::with_val(prec, m * Float::with_val(prec, winv[k as usize].abs_ref()));
        }
        if out_e < -(tail as i64) + dw as i64 {
            break;
        }
        if !acc.is_zero() && !Scalar::negligible(&acc, &mag) {
            return Ok(Order::Exact(-out_e));
        }
    }
    Ok(Order::AtLeast(tail as i64 + 1 - dw as i64))
}

/// Coefficients `d_k` with `1/w(z) = z^(-deg w) sum_k d_k z^(-k)`.
fn inverse_series(w: &Polynomial<Float>, terms: usize, prec: u32) -> Vec<Float> {
    let d = w.degree().unwrap_or(0);
    let lead = w.leading().cloned().unwrap_or_else(|| Float::with_val(prec, 1));
    let mut out: Vec<Float> = Vec::with_capacity(terms);
    for k in 0..terms {
        let mut acc = if k == 0 { Float::with_val(prec, 1) } else { Float::with_val(prec, 0) };
        for i in 1..=k.min(d) {
            acc -= Float::with_val(prec, &w.coeff(d - i) * &out[k - i]);
        }
        out.push(Float::with_val(prec, acc / &lead));
    }
    out
}

fn orthogonality_residual<S: Scalar>(sys: &NikishinSystem<S>, top: &Polynomial<Float>, w: &Polynomial<Float>, n: usize, prec: u32) -> Result<(f64, f64)> {
    let m = sys.m();
    let sigma = sys.generator(m).convert::<Float>(prec);
    let sigma = if sigma.atom_count().is_some() { sigma.simplified()? } else { sigma };
    let abs_top = Polynomial::new(top.coeffs().iter().map(|c| c.clone().abs()).collect(), prec);
    let mut worst = Float::with_val(prec, 0);
    for v in 0..n {
        let f = |x: &Float| -> Result<Float> {
            let wx = w.eval(x);
            if wx.is_zero() {
                return Err(Error::DivisionByZero("w vanishes on the support".into()));
            }
            Ok(Float::with_val(prec, Float::with_val(prec, x.pow_u(v) * top.eval(x)) / wx))
        };
        let val = sigma.integrate(&f)?;
        let mag = sigma.integrate(&|x: &Float| {
            let ax = Float::with_val(prec, x.abs_ref());
            let bound = Float::with_val(prec, ax.pow_u(v) * abs_top.eval(&ax));
            Ok(Float::with_val(prec, bound / w.eval(x).abs()))
        })?;
        let mag = mag.abs();
        let rel = if mag.is_zero() { Float::with_val(prec, 0) } else { Float::with_val(prec, val.abs() / &mag) };
        if rel > worst {
            worst = rel;
        }
    }
    let log2 = if worst.is_zero() { -(prec as f64) * 2.0 } else { worst.clone().log2().to_f64() };
    Ok((worst.to_f64(), log2))
}
