//! Dense univariate polynomials and rational functions.

use std::fmt;

use crate::scalar::{Cx, Scalar};

/// Polynomial with coefficients stored low-to-high; trailing exact zeros are
/// trimmed so the zero polynomial has an empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<S> {
    coeffs: Vec<S>,
    prec: u32,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(mut coeffs: Vec<S>, prec: u32) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs, prec }
    }
    pub fn zero(prec: u32) -> Self {
        Self { coeffs: Vec::new(), prec }
    }
    pub fn constant(c: S) -> Self {
        let prec = c.prec();
        Self::new(vec![c], prec)
    }
    pub fn one(prec: u32) -> Self {
        Self::constant(S::one(prec))
    }
    /// The identity polynomial `z`.
    pub fn x(prec: u32) -> Self {
        Self::new(vec![S::zero(prec), S::one(prec)], prec)
    }
    /// `z - a`.
    pub fn linear_root(a: &S) -> Self {
        let p = a.prec();
        Self::new(vec![a.neg(), S::one(p)], p)
    }
    pub fn from_rationals(cs: &[rug::Rational], prec: u32) -> Self {
        Self::new(cs.iter().map(|c| S::from_rational(c, prec)).collect(), prec)
    }
    pub fn from_i64s(cs: &[i64], prec: u32) -> Self {
        Self::new(cs.iter().map(|&c| S::from_i64(c, prec)).collect(), prec)
    }
    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[S], prec: u32) -> Self {
        roots.iter().fold(Self::one(prec), |acc, r| acc.mul(&Self::linear_root(r)))
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }
    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }
    /// Degree with `-1` standing in for the zero polynomial.
    pub fn degree_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }
    pub fn coeff(&self, i: usize) -> S {
        self.coeffs.get(i).cloned().unwrap_or_else(|| S::zero(self.prec))
    }
    pub fn leading(&self) -> Option<&S> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &S) -> S {
        let mut acc = S::zero(self.prec);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }
    pub fn eval_cx(&self, z: &Cx<S>) -> Cx<S> {
        let mut acc = Cx::zero(self.prec);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add_real(c);
        }
        acc
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let cs = (0..n).map(|i| self.coeff(i).add(&o.coeff(i))).collect();
        Self::new(cs, self.prec.max(o.prec))
    }
    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let cs = (0..n).map(|i| self.coeff(i).sub(&o.coeff(i))).collect();
        Self::new(cs, self.prec.max(o.prec))
    }
    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.neg()).collect(), self.prec)
    }
    pub fn scale(&self, s: &S) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.mul(s)).collect(), self.prec)
    }
    pub fn mul(&self, o: &Self) -> Self {
        let prec = self.prec.max(o.prec);
        if self.is_zero() || o.is_zero() {
            return Self::zero(prec);
        }
        let mut cs = vec![S::zero(prec); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                cs[i + j] = cs[i + j].add(&a.mul(b));
            }
        }
        Self::new(cs, prec)
    }
    /// Multiplication by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut cs = vec![S::zero(self.prec); k];
        cs.extend(self.coeffs.iter().cloned());
        Self::new(cs, self.prec)
    }
    pub fn derivative(&self) -> Self {
        let cs = self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c.mul_i64(i as i64)).collect();
        Self::new(cs, self.prec)
    }
    /// `p(-z)`.
    pub fn reflect(&self) -> Self {
        let cs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 1 { c.neg() } else { c.clone() })
            .collect();
        Self::new(cs, self.prec)
    }
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => {
                let inv = S::one(self.prec).div(l);
                self.scale(&inv)
            }
            None => self.clone(),
        }
    }
    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let prec = self.prec.max(d.prec);
        let lead = d.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(prec), self.clone());
        }
        let mut q = vec![S::zero(prec); r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = r[k + dd].div(&lead);
            if !c.is_zero() {
                for (i, di) in d.coeffs.iter().enumerate() {
                    r[k + i] = r[k + i].sub(&c.mul(di));
                }
            }
            r[k + dd] = S::zero(prec);
            q[k] = c;
        }
        r.truncate(dd);
        (Self::new(q, prec), Self::new(r, prec))
    }
    /// Monic greatest common divisor (meaningful in the exact backend).
    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
    /// Extended Euclid: returns `(g, s, t)` with `s*self + t*o = g`, `g` monic.
    pub fn ext_gcd(&self, o: &Self) -> (Self, Self, Self) {
        let prec = self.prec.max(o.prec);
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (Self::one(prec), Self::zero(prec));
        let (mut t0, mut t1) = (Self::zero(prec), Self::one(prec));
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            let s2 = s0.sub(&q.mul(&s1));
            let t2 = t0.sub(&q.mul(&t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
            t0 = t1;
            t1 = t2;
        }
        match r0.leading().cloned() {
            Some(l) => {
                let inv = S::one(prec).div(&l);
                (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
            }
            None => (r0, s0, t0),
        }
    }
    /// Inverse of `self` modulo `m`, when they are coprime.
    pub fn inv_mod(&self, m: &Self) -> Option<Self> {
        let (g, s, _) = self.ext_gcd(m);
        if g.degree() != Some(0) {
            return None;
        }
        Some(s.div_rem(m).1)
    }
    /// Square-free part `p / gcd(p, p')`, monic.
    pub fn squarefree(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }
    /// Yun's square-free factorisation: `p = lc * prod f_i^(i+1)`.
    pub fn squarefree_factors(&self) -> Vec<Self> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let a = self.monic();
        let da = a.derivative();
        let mut b = a.gcd(&da);
        let mut c = a.div_rem(&b).0;
        let mut d = da.div_rem(&b).0.sub(&c.derivative());
        loop {
            let f = c.gcd(&d);
            out.push(f.clone());
            c = c.div_rem(&f).0;
            if c.degree().unwrap_or(0) == 0 {
                break;
            }
            d = d.div_rem(&f).0.sub(&c.derivative());
            b = b.div_rem(&f).0;
        }
        let _ = b;
        while out.last().is_some_and(|f| f.degree() == Some(0)) {
            out.pop();
        }
        out
    }
    /// Drops leading coefficients that are negligible against the largest one.
    pub fn trim_negligible(&self) -> Self {
        let scale = self.max_abs_coeff();
        let mut cs = self.coeffs.clone();
        while cs.last().is_some_and(|c| c.negligible(&scale)) {
            cs.pop();
        }
        Self::new(cs, self.prec)
    }
    pub fn max_abs_coeff(&self) -> S {
        self.coeffs.iter().fold(S::zero(self.prec), |m, c| S::max_of(&m, &c.abs()))
    }
    pub fn convert<T: Scalar>(&self, prec: u32) -> Polynomial<T> {
        Polynomial::new(
            self.coeffs.iter().map(|c| T::from_rational(&c.to_rational(), prec)).collect(),
            prec,
        )
    }
    pub fn to_float(&self, prec: u32) -> Polynomial<rug::Float> {
        Polynomial::new(self.coeffs.iter().map(|c| c.to_float(prec)).collect(), prec)
    }
    pub fn to_repr(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_repr()).collect()
    }
    pub fn max_abs_diff(&self, o: &Self) -> S {
        let n = self.coeffs.len().max(o.coeffs.len());
        (0..n).fold(S::zero(self.prec.max(o.prec)), |m, i| {
            S::max_of(&m, &self.coeff(i).sub(&o.coeff(i)).abs())
        })
    }
}

impl<S: Scalar> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.signum() < 0;
            let mag = c.abs();
            let unit = mag == S::one(self.prec);
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let body = mag.to_repr();
            match i {
                0 => write!(f, "{body}")?,
                1 if unit => write!(f, "z")?,
                1 => write!(f, "{body}*z")?,
                _ if unit => write!(f, "z^{i}")?,
                _ => write!(f, "{body}*z^{i}")?,
            }
        }
        Ok(())
    }
}

/// Expansion of a rational function at infinity: a polynomial part plus
/// `tail[i]` as the coefficient of `z^-(i+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent<S> {
    pub poly: Polynomial<S>,
    pub tail: Vec<S>,
}

/// Quotient of two polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<S> {
    pub num: Polynomial<S>,
    pub den: Polynomial<S>,
}

impl<S: Scalar> RationalFunction<S> {
    pub fn new(num: Polynomial<S>, den: Polynomial<S>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self { num, den }
    }
    pub fn from_poly(p: Polynomial<S>) -> Self {
        let prec = p.prec();
        Self { num: p, den: Polynomial::one(prec) }
    }
    pub fn zero(prec: u32) -> Self {
        Self::from_poly(Polynomial::zero(prec))
    }
    /// Cancels common factors and makes the denominator monic.
    pub fn reduced(&self) -> Self {
        let prec = self.num.prec().max(self.den.prec());
        if self.num.is_zero() {
            return Self::new(Polynomial::zero(prec), Polynomial::one(prec));
        }
        let (num, den) = if S::EXACT {
            let g = self.num.gcd(&self.den);
            (self.num.div_rem(&g).0, self.den.div_rem(&g).0)
        } else {
            (self.num.clone(), self.den.clone())
        };
        let l = den.leading().unwrap().clone();
        let inv = S::one(prec).div(&l);
        Self::new(num.scale(&inv), den.scale(&inv))
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    pub fn eval(&self, x: &S) -> Option<S> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(x).div(&d))
    }
    pub fn eval_cx(&self, z: &Cx<S>) -> Option<Cx<S>> {
        self.num.eval_cx(z).div(&self.den.eval_cx(z))
    }
    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self::new(self.num.add(&o.num), self.den.clone()).reduced();
        }
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).reduced()
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn neg(&self) -> Self {
        Self::new(self.num.neg(), self.den.clone())
    }
    pub fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den)).reduced()
    }
    pub fn mul_poly(&self, p: &Polynomial<S>) -> Self {
        Self::new(self.num.mul(p), self.den.clone()).reduced()
    }
    pub fn scale(&self, s: &S) -> Self {
        Self::new(self.num.scale(s), self.den.clone())
    }
    pub fn recip(&self) -> Option<Self> {
        if self.num.is_zero() {
            return None;
        }
        Some(Self::new(self.den.clone(), self.num.clone()).reduced())
    }
    /// `f(-z)`.
    pub fn reflect(&self) -> Self {
        Self::new(self.num.reflect(), self.den.reflect()).reduced()
    }
    /// Expansion at infinity keeping `terms` negative powers.
    pub fn laurent(&self, terms: usize) -> Laurent<S> {
        let (q, r) = self.num.div_rem(&self.den);
        let prec = self.num.prec().max(self.den.prec());
        let d = self.den.degree().unwrap();
        let lead = self.den.leading().unwrap().clone();
        let mut tail: Vec<S> = Vec::with_capacity(terms);
        for k in 0..terms {
            let mut acc = if k < d { r.coeff(d - 1 - k) } else { S::zero(prec) };
            for i in 1..=k.min(d) {
                acc = acc.sub(&self.den.coeff(d - i).mul(&tail[k - i]));
            }
            tail.push(acc.div(&lead));
        }
        Laurent { poly: q, tail }
    }
}
