//! Real intervals with rational (or infinite) endpoints.

use std::cmp::Ordering;
use std::fmt;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// Closed interval `[lo, hi]`; `None` stands for an infinite endpoint.
///
/// A degenerate interval (`lo == hi`) is admitted only as the hull of a
/// single-atom measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Option<Rational>,
    hi: Option<Rational>,
}

/// How two intervals meet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Contact {
    Disjoint,
    Touch(Rational),
    Overlap,
}

impl Interval {
    /// Bounded interval with `lo < hi`.
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidMeasure(format!("interval [{lo}, {hi}] is empty or degenerate")));
        }
        Ok(Self { lo: Some(lo), hi: Some(hi) })
    }
    pub fn from_i64(lo: i64, hi: i64) -> Result<Self> {
        Self::new(Rational::from(lo), Rational::from(hi))
    }
    /// Possibly unbounded interval; used for diagnostics only.
    pub fn extended(lo: Option<Rational>, hi: Option<Rational>) -> Result<Self> {
        if let (Some(a), Some(b)) = (&lo, &hi) {
            if a >= b {
                return Err(Error::InvalidMeasure(format!("interval [{a}, {b}] is empty")));
            }
        }
        Ok(Self { lo, hi })
    }
    pub fn real_line() -> Self {
        Self { lo: None, hi: None }
    }
    /// Convex hull of a point set, possibly degenerate.
    pub fn hull<'a>(points: impl IntoIterator<Item = &'a Rational>) -> Option<Self> {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for p in points {
            if lo.as_ref().is_none_or(|l| p < l) {
                lo = Some(p.clone());
            }
            if hi.as_ref().is_none_or(|h| p > h) {
                hi = Some(p.clone());
            }
        }
        Some(Self { lo: Some(lo?), hi: Some(hi?) })
    }
    pub fn lo(&self) -> Option<&Rational> {
        self.lo.as_ref()
    }
    pub fn hi(&self) -> Option<&Rational> {
        self.hi.as_ref()
    }
    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }
    pub fn is_degenerate(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(a), Some(b)) if a == b)
    }
    pub fn bounds(&self) -> Option<(&Rational, &Rational)> {
        Some((self.lo.as_ref()?, self.hi.as_ref()?))
    }
    pub fn diam(&self) -> Option<Rational> {
        let (a, b) = self.bounds()?;
        Some(Rational::from(b - a))
    }
    pub fn midpoint(&self) -> Option<Rational> {
        let (a, b) = self.bounds()?;
        Some(Rational::from(a + b) / 2)
    }
    pub fn contains(&self, x: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|a| a <= x) && self.hi.as_ref().is_none_or(|b| x <= b)
    }
    pub fn interior_contains(&self, x: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|a| a < x) && self.hi.as_ref().is_none_or(|b| x < b)
    }
    pub fn contains_interval(&self, o: &Interval) -> bool {
        let lo_ok = match (&self.lo, &o.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a <= b,
        };
        let hi_ok = match (&self.hi, &o.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b <= a,
        };
        lo_ok && hi_ok
    }
    /// Position of `self` relative to `o`.
    pub fn contact(&self, o: &Interval) -> Contact {
        let cmp = |a: &Option<Rational>, b: &Option<Rational>| match (a, b) {
            (Some(x), Some(y)) => x.cmp(y),
            _ => Ordering::Greater,
        };
        // self entirely left of o
        match cmp(&self.hi, &o.lo) {
            Ordering::Less => return Contact::Disjoint,
            Ordering::Equal => {
                return if self.is_degenerate() && o.is_degenerate() {
                    Contact::Overlap
                } else {
                    Contact::Touch(self.hi.clone().unwrap())
                };
            }
            Ordering::Greater => {}
        }
        match cmp(&o.hi, &self.lo) {
            Ordering::Less => Contact::Disjoint,
            Ordering::Equal => {
                if self.is_degenerate() && o.is_degenerate() {
                    Contact::Overlap
                } else {
                    Contact::Touch(o.hi.clone().unwrap())
                }
            }
            Ordering::Greater => Contact::Overlap,
        }
    }
    /// Reflection `x -> -x`.
    pub fn reflect(&self) -> Self {
        Self { lo: self.hi.as_ref().map(|h| Rational::from(-h)), hi: self.lo.as_ref().map(|l| Rational::from(-l)) }
    }
    /// Smallest interval containing both.
    pub fn join(&self, o: &Interval) -> Self {
        let lo = match (&self.lo, &o.lo) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            _ => None,
        };
        let hi = match (&self.hi, &o.hi) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            _ => None,
        };
        Self { lo, hi }
    }
    /// Squared Euclidean distance from `z` to the segment.
    pub fn dist_sq<S: Scalar>(&self, z: &Cx<S>) -> S {
        let prec = z.prec();
        let zero = S::zero(prec);
        let dx = match (&self.lo, &self.hi) {
            (Some(a), _) if z.re < S::from_rational(a, prec) => S::from_rational(a, prec).sub(&z.re),
            (_, Some(b)) if z.re > S::from_rational(b, prec) => z.re.sub(&S::from_rational(b, prec)),
            _ => zero,
        };
        dx.square().add(&z.im.square())
    }
    /// Euclidean distance in double precision.
    pub fn dist_f64(&self, re: f64, im: f64) -> f64 {
        let dx = match (&self.lo, &self.hi) {
            (Some(a), _) if re < a.to_f64() => a.to_f64() - re,
            (_, Some(b)) if re > b.to_f64() => re - b.to_f64(),
            _ => 0.0,
        };
        dx.hypot(im)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), |v| v.to_repr());
        let hi = self.hi.as_ref().map_or("inf".to_string(), |v| v.to_repr());
        write!(f, "[{lo}, {hi}]")
    }
}

impl Serialize for Interval {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), |v| v.to_repr());
        let hi = self.hi.as_ref().map_or("inf".to_string(), |v| v.to_repr());
        [lo, hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let parse = |s: &str| -> std::result::Result<Option<Rational>, D::Error> {
            match s {
                "-inf" | "inf" => Ok(None),
                _ => crate::scalar::parse_rational(s)
                    .map(Some)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad endpoint {s}"))),
            }
        };
        Interval::extended(parse(&lo)?, parse(&hi)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: i64, b: i64) -> Interval {
        Interval::from_i64(a, b).unwrap()
    }

    #[test]
    fn contact_kinds() {
        assert_eq!(iv(0, 1).contact(&iv(2, 4)), Contact::Disjoint);
        assert_eq!(iv(0, 1).contact(&iv(1, 2)), Contact::Touch(Rational::from(1)));
        assert_eq!(iv(1, 2).contact(&iv(0, 1)), Contact::Touch(Rational::from(1)));
        assert_eq!(iv(0, 2).contact(&iv(1, 3)), Contact::Overlap);
        assert_eq!(iv(0, 5).contact(&iv(1, 2)), Contact::Overlap);
    }

    #[test]
    fn rejects_empty() {
        assert!(Interval::from_i64(2, 2).is_err());
        assert!(Interval::from_i64(3, 2).is_err());
    }

    #[test]
    fn distance_to_segment() {
        let i = iv(0, 1);
        let z: Cx<Rational> = Cx::from_rationals(&Rational::from(3), &Rational::from(4), 0);
        assert_eq!(i.dist_sq(&z), Rational::from(4 + 16));
        assert!((i.dist_f64(0.5, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip() {
        let i = Interval::extended(Some(Rational::from((1, 2))), None).unwrap();
        let s = serde_json::to_string(&i).unwrap();
        assert_eq!(s, r#"["1/2","inf"]"#);
        let back: Interval = serde_json::from_str(&s).unwrap();
        assert_eq!(back, i);
    }
}
