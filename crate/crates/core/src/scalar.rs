//! Arithmetic backends.
//!
//! Every numerical routine in the crate is generic over [`Scalar`], which is
//! implemented for exact big rationals ([`Rational`]) and for MPFR binary
//! floats ([`Float`]) of a caller-chosen precision.

use std::cmp::Ordering;
use std::fmt;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Default working precision of the float backend, in bits.
pub const DEFAULT_PREC: u32 = 256;

/// Number type used by all algorithms.
pub trait Scalar: Clone + fmt::Debug + PartialEq + PartialOrd + Send + Sync + 'static {
    /// `true` when arithmetic is exact.
    const EXACT: bool;

    fn from_rational(r: &Rational, prec: u32) -> Self;
    fn from_float(f: &Float, prec: u32) -> Self;
    fn prec(&self) -> u32;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn signum(&self) -> i32;

    fn to_float(&self, prec: u32) -> Float;
    fn to_f64(&self) -> f64;
    /// Exact rational value (floats are dyadic rationals).
    fn to_rational(&self) -> Rational;

    /// `true` when `self` is zero relative to `scale`: exactly zero for the
    /// rational backend, below `2^(-3p/4) * |scale|` for floats.
    fn negligible(&self, scale: &Self) -> bool;

    /// Lossless text form: `p/q` for rationals, hexadecimal mantissa and
    /// binary exponent for floats.
    fn to_repr(&self) -> String;
    fn parse_repr(s: &str, prec: u32) -> Option<Self>;

    fn from_i64(v: i64, prec: u32) -> Self {
        Self::from_rational(&Rational::from(v), prec)
    }
    fn zero(prec: u32) -> Self {
        Self::from_i64(0, prec)
    }
    fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }
    fn mul_i64(&self, k: i64) -> Self {
        self.mul(&Self::from_i64(k, self.prec()))
    }
    fn square(&self) -> Self {
        self.mul(self)
    }
    fn pow_u(&self, k: usize) -> Self {
        let mut acc = Self::one(self.prec());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
    fn max_of(a: &Self, b: &Self) -> Self {
        if a.partial_cmp(b) == Some(Ordering::Less) {
            b.clone()
        } else {
            a.clone()
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational, _prec: u32) -> Self {
        r.clone()
    }
    fn from_float(f: &Float, _prec: u32) -> Self {
        f.to_rational().unwrap_or_default()
    }
    fn prec(&self) -> u32 {
        0
    }
    fn add(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Rational::from(self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
    fn div(&self, o: &Self) -> Self {
        Rational::from(self / o)
    }
    fn neg(&self) -> Self {
        Rational::from(-self)
    }
    fn abs(&self) -> Self {
        Rational::from(self.abs_ref())
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == Ordering::Equal
    }
    fn signum(&self) -> i32 {
        match self.cmp0() {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, self)
    }
    fn to_f64(&self) -> f64 {
        self.to_f64()
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn negligible(&self, _scale: &Self) -> bool {
        Scalar::is_zero(self)
    }
    fn to_repr(&self) -> String {
        if *self.denom() == 1 {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
    fn parse_repr(s: &str, _prec: u32) -> Option<Self> {
        parse_rational(s)
    }
}

impl Scalar for Float {
    const EXACT: bool = false;

    fn from_rational(r: &Rational, prec: u32) -> Self {
        Float::with_val(prec, r)
    }
    fn from_float(f: &Float, prec: u32) -> Self {
        Float::with_val(prec, f)
    }
    fn prec(&self) -> u32 {
        Float::prec(self)
    }
    fn add(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self * o)
    }
    fn div(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self / o)
    }
    fn neg(&self) -> Self {
        Float::with_val(self.prec(), -self)
    }
    fn abs(&self) -> Self {
        Float::with_val(self.prec(), self.abs_ref())
    }
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    fn signum(&self) -> i32 {
        match self.cmp0() {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, self)
    }
    fn to_f64(&self) -> f64 {
        Float::to_f64(self)
    }
    fn to_rational(&self) -> Rational {
        Float::to_rational(self).unwrap_or_default()
    }
    fn negligible(&self, scale: &Self) -> bool {
        let p = self.prec().max(scale.prec());
        let tol = Float::with_val(p, Float::i_exp(1, -((3 * p / 4) as i32)));
        let bound = Float::with_val(p, scale.abs_ref()) * &tol;
        Float::with_val(p, self.abs_ref()) <= bound
    }
    fn to_repr(&self) -> String {
        float_to_hex(self)
    }
    fn parse_repr(s: &str, prec: u32) -> Option<Self> {
        parse_hex_float(s, prec).or_else(|| parse_rational(s).map(|r| Float::with_val(prec, &r)))
    }
}

/// Parses `p/q`, integers and plain decimals (`-1.25`, `3e-2`) exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: Integer = p.trim().parse().ok()?;
        let q: Integer = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Rational::from((p, q)));
    }
    if let Ok(i) = s.parse::<Integer>() {
        return Some(Rational::from(i));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(digits.parse::<Integer>().ok()?);
    let shift = exp - frac_part.len() as i32;
    let ten = Rational::from(10);
    if shift >= 0 {
        value *= Rational::from((&ten).pow(shift as u32));
    } else {
        value /= Rational::from((&ten).pow((-shift) as u32));
    }
    if neg {
        value = -value;
    }
    Some(value)
}

fn float_to_hex(f: &Float) -> String {
    if Float::is_zero(f) {
        return "0x0p+0".to_string();
    }
    match f.to_integer_exp() {
        Some((mut m, mut e)) => {
            while m.is_even() && m != 0 {
                m >>= 1;
                e += 1;
            }
            let sign = if m < 0 { "-" } else { "" };
            let m = m.abs();
            format!("{sign}0x{}p{e:+}", m.to_string_radix(16))
        }
        None => f.to_string(),
    }
}

fn parse_hex_float(s: &str, prec: u32) -> Option<Float> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let body = body.strip_prefix("0x")?;
    let (m, e) = body.split_once('p')?;
    let m = Integer::from_str_radix(m, 16).ok()?;
    let e: i32 = e.parse().ok()?;
    let mut v = Float::with_val(prec.max(m.significant_bits()), &m);
    v <<= e;
    if neg {
        v = -v;
    }
    Some(Float::with_val(prec, &v))
}

/// Complex number over a [`Scalar`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cx<S> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar> Cx<S> {
    pub fn new(re: S, im: S) -> Self {
        Self { re, im }
    }
    pub fn real(re: S) -> Self {
        let im = S::zero(re.prec());
        Self { re, im }
    }
    pub fn from_rationals(re: &Rational, im: &Rational, prec: u32) -> Self {
        Self::new(S::from_rational(re, prec), S::from_rational(im, prec))
    }
    pub fn zero(prec: u32) -> Self {
        Self::new(S::zero(prec), S::zero(prec))
    }
    pub fn one(prec: u32) -> Self {
        Self::new(S::one(prec), S::zero(prec))
    }
    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }
    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.re.add(&o.re), self.im.add(&o.im))
    }
    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }
    pub fn neg(&self) -> Self {
        Self::new(self.re.neg(), self.im.neg())
    }
    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }
    pub fn scale(&self, s: &S) -> Self {
        Self::new(self.re.mul(s), self.im.mul(s))
    }
    pub fn add_real(&self, s: &S) -> Self {
        Self::new(self.re.add(s), self.im.clone())
    }
    pub fn sub_real(&self, s: &S) -> Self {
        Self::new(self.re.sub(s), self.im.clone())
    }
    pub fn abs_sq(&self) -> S {
        self.re.square().add(&self.im.square())
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    /// `1/self`; `None` at zero.
    pub fn recip(&self) -> Option<Self> {
        let d = self.abs_sq();
        if d.is_zero() {
            return None;
        }
        Some(Self::new(self.re.div(&d), self.im.neg().div(&d)))
    }
    pub fn div(&self, o: &Self) -> Option<Self> {
        let d = o.abs_sq();
        if d.is_zero() {
            return None;
        }
        let re = self.re.mul(&o.re).add(&self.im.mul(&o.im));
        let im = self.im.mul(&o.re).sub(&self.re.mul(&o.im));
        Some(Self::new(re.div(&d), im.div(&d)))
    }
    /// Max-norm `max(|re|, |im|)`, used for residuals.
    pub fn norm_max(&self) -> S {
        S::max_of(&self.re.abs(), &self.im.abs())
    }
    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
    pub fn modulus_f64(&self) -> f64 {
        let (a, b) = self.to_f64_pair();
        a.hypot(b)
    }
    pub fn convert<T: Scalar>(&self, prec: u32) -> Cx<T> {
        Cx::new(
            T::from_rational(&self.re.to_rational(), prec),
            T::from_rational(&self.im.to_rational(), prec),
        )
    }
}

/// `2^e` at the given precision.
pub fn pow2(e: i32, prec: u32) -> Float {
    Float::with_val(prec, Float::i_exp(1, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_repr_round_trip() {
        let r = Rational::from((-7, 12));
        assert_eq!(r.to_repr(), "-7/12");
        assert_eq!(Rational::parse_repr("-7/12", 0), Some(r));
        assert_eq!(Rational::parse_repr("5", 0), Some(Rational::from(5)));
    }

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_rational("0.1"), Some(Rational::from((1, 10))));
        assert_eq!(parse_rational("-2.5e-1"), Some(Rational::from((-1, 4))));
        assert_eq!(parse_rational("3E2"), Some(Rational::from(300)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn float_hex_round_trip() {
        let f = Float::with_val(256, 1) / Float::with_val(256, 3);
        let s = f.to_repr();
        assert!(s.starts_with("0x"));
        let g = Float::parse_repr(&s, 256).unwrap();
        assert_eq!(f, g);
        let neg = Float::with_val(64, -0.375);
        assert_eq!(Float::parse_repr(&neg.to_repr(), 64).unwrap(), neg);
    }

    #[test]
    fn negligible_thresholds() {
        let one = Float::with_val(256, 1);
        let tiny = pow2(-200, 256);
        let small = pow2(-150, 256);
        assert!(tiny.negligible(&one));
        assert!(!small.negligible(&one));
        assert!(!Rational::from((1, 1000)).negligible(&Rational::from(1)));
    }

    #[test]
    fn complex_division() {
        let a: Cx<Rational> = Cx::from_rationals(&Rational::from(1), &Rational::from(2), 0);
        let b: Cx<Rational> = Cx::from_rationals(&Rational::from(3), &Rational::from(-1), 0);
        let q = a.div(&b).unwrap();
        assert_eq!(q.mul(&b), a);
        assert!(Cx::<Rational>::zero(0).recip().is_none());
    }
}
