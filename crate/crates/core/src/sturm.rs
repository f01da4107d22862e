//! Exact real-root counting and isolation with Sturm sequences.

use std::cmp::Ordering;

use rug::{Integer, Rational};

use crate::interval::Interval;
use crate::poly::Polynomial;
use crate::scalar::Scalar;

type RPoly = Polynomial<Rational>;

/// Sturm sequence of the square-free part of a polynomial.
#[derive(Clone, Debug)]
pub struct Sturm {
    seq: Vec<RPoly>,
    ints: Vec<Vec<Integer>>,
}

/// A real root known to lie in `(lo, hi]`, or exactly at `lo` when `lo == hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootEnclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootEnclosure {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
    pub fn midpoint(&self) -> Rational {
        Rational::from(&self.lo + &self.hi) / 2
    }
    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }
}

fn sign(p: &RPoly, x: &Rational) -> i32 {
    Scalar::signum(&p.eval(x))
}

type IPoly = Vec<Integer>;

/// Primitive positive multiple of `p` with integer coefficients.
fn integer_multiple(p: &RPoly) -> IPoly {
    let mut l = Integer::from(1);
    for c in p.coeffs() {
        l.lcm_mut(c.denom());
    }
    primitive(p.coeffs().iter().map(|c| c.numer() * Integer::from(&l / c.denom())).collect())
}

fn trim(mut p: IPoly) -> IPoly {
    while p.last().is_some_and(|c| c.cmp0() == Ordering::Equal) {
        p.pop();
    }
    p
}

fn primitive(p: IPoly) -> IPoly {
    let mut p = trim(p);
    let mut g = Integer::new();
    for c in &p {
        g.gcd_mut(c);
    }
    if g > 1 {
        for c in p.iter_mut() {
            c.div_exact_mut(&g);
        }
    }
    p
}

fn to_rational(p: &IPoly) -> RPoly {
    Polynomial::new(p.iter().map(Rational::from).collect(), 0)
}

fn ideriv(p: &IPoly) -> IPoly {
    p.iter().enumerate().skip(1).map(|(i, c)| Integer::from(c * i as u64)).collect()
}

/// Positive multiple of the remainder of `a` by `b`.
fn prem(a: &IPoly, b: &IPoly) -> IPoly {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lb = &b[db];
    let flip = lb.cmp0() == Ordering::Less;
    let mut negate = false;
    while r.len() > db {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c *= lb;
        }
        for (i, c) in b.iter().enumerate() {
            r[dr - db + i] -= Integer::from(&lr * c);
        }
        negate ^= flip;
        r = trim(r);
    }
    let mut r = primitive(r);
    if negate {
        for c in r.iter_mut() {
            *c = Integer::from(-&*c);
        }
    }
    r
}

fn igcd(a: &IPoly, b: &IPoly) -> IPoly {
    let (mut x, mut y) = (primitive(a.clone()), primitive(b.clone()));
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    while !y.is_empty() {
        let r = prem(&x, &y);
        x = y;
        y = r;
    }
    x
}

/// Sign of `sum c_i x^i` at `x = a/b` via `sum c_i a^i b^(d-i)`.
fn int_sign(cs: &[Integer], x: &Rational) -> i32 {
    let Some((top, rest)) = cs.split_last() else {
        return 0;
    };
    let (a, b) = (x.numer(), x.denom());
    let mut acc = top.clone();
    let mut bpow = Integer::from(1);
    for c in rest.iter().rev() {
        bpow *= b;
        acc *= a;
        acc += Integer::from(c * &bpow);
    }
    acc.cmp0() as i32
}

/// `true` when `p` has no repeated roots.
pub fn is_squarefree(p: &RPoly) -> bool {
    let ip = integer_multiple(p);
    ip.len() <= 2 || igcd(&ip, &ideriv(&ip)).len() == 1
}

/// Product of the factors of odd multiplicity of `p`.
pub fn odd_part(p: &RPoly) -> RPoly {
    if is_squarefree(p) {
        return p.clone();
    }
    p.squarefree_factors()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % 2 == 0)
        .fold(RPoly::one(0), |acc, (_, f)| acc.mul(&f))
}

impl Sturm {
    pub fn new(p: &RPoly) -> Self {
        let ip = integer_multiple(p);
        let p0 = if ip.len() <= 2 {
            ip
        } else {
            let g = igcd(&ip, &ideriv(&ip));
            if g.len() == 1 {
                ip
            } else {
                integer_multiple(&to_rational(&ip).div_rem(&to_rational(&g)).0)
            }
        };
        let mut ints = vec![p0.clone()];
        if p0.len() > 1 {
            let mut prev = p0.clone();
            let mut cur = primitive(ideriv(&p0));
            while !cur.is_empty() {
                ints.push(cur.clone());
                let r: IPoly = prem(&prev, &cur).into_iter().map(|c| -c).collect();
                prev = cur;
                cur = r;
            }
        }
        let seq = ints.iter().map(to_rational).collect();
        Self { seq, ints }
    }

    /// The square-free polynomial whose roots are counted.
    pub fn base(&self) -> &RPoly {
        &self.seq[0]
    }

    fn variations_at(&self, x: &Rational) -> usize {
        let signs = self.ints.iter().map(|p| int_sign(p, x)).filter(|&s| s != 0);
        count_changes(signs)
    }

    fn variations_at_infinity(&self, positive: bool) -> usize {
        let signs = self.seq.iter().filter_map(|p| {
            let l = p.leading()?.signum();
            let d = p.degree()?;
            Some(if positive || d % 2 == 0 { l } else { -l })
        });
        count_changes(signs)
    }

    /// Number of distinct real roots in `(a, b]`.
    pub fn count(&self, a: &Rational, b: &Rational) -> usize {
        if a >= b {
            return 0;
        }
        self.variations_at(a).saturating_sub(self.variations_at(b))
    }

    /// Number of distinct real roots in the open interval `(a, b)`.
    pub fn count_open(&self, a: &Rational, b: &Rational) -> usize {
        let c = self.count(a, b);
        if a < b && int_sign(&self.ints[0], b) == 0 {
            c - 1
        } else {
            c
        }
    }

    /// Number of distinct real roots in the closed interval `[a, b]`.
    pub fn count_closed(&self, a: &Rational, b: &Rational) -> usize {
        let at_a = usize::from(int_sign(&self.ints[0], a) == 0);
        if a == b {
            return at_a;
        }
        self.count(a, b) + at_a
    }

    /// Number of distinct real roots on the whole line.
    pub fn count_real(&self) -> usize {
        self.variations_at_infinity(false).saturating_sub(self.variations_at_infinity(true))
    }

    /// Isolates every root in `(a, b]`.
    pub fn isolate(&self, a: &Rational, b: &Rational) -> Vec<RootEnclosure> {
        let mut out = Vec::new();
        let mut stack: Vec<(Rational, Rational)> = vec![(a.clone(), b.clone())];
        while let Some((lo, hi)) = stack.pop() {
            let c = self.count(&lo, &hi);
            if c == 0 {
                continue;
            }
            if c == 1 {
                out.push(self.tighten(RootEnclosure { lo, hi }));
                continue;
            }
            let mid: Rational = Rational::from(&lo + &hi) / 2;
            stack.push((mid.clone(), hi));
            stack.push((lo, mid));
        }
        out.sort_by(|x, y| x.lo.partial_cmp(&y.lo).unwrap_or(Ordering::Equal));
        out
    }

    /// Isolates every real root.
    pub fn isolate_all(&self) -> Vec<RootEnclosure> {
        let b = cauchy_bound(self.base());
        self.isolate(&Rational::from(-&b), &b)
    }

    fn tighten(&self, e: RootEnclosure) -> RootEnclosure {
        if int_sign(&self.ints[0], &e.hi) == 0 {
            return RootEnclosure { lo: e.hi.clone(), hi: e.hi };
        }
        e
    }

    /// Bisects an enclosure until its width is at most `width`.
    pub fn refine(&self, e: &RootEnclosure, width: &Rational) -> RootEnclosure {
        let mut cur = e.clone();
        while !cur.is_exact() && cur.width() > *width {
            cur = self.bisect(&cur);
        }
        cur
    }

    /// One bisection step.
    pub fn bisect(&self, e: &RootEnclosure) -> RootEnclosure {
        if e.is_exact() {
            return e.clone();
        }
        let mid = e.midpoint();
        if int_sign(&self.ints[0], &mid) == 0 {
            return RootEnclosure { lo: mid.clone(), hi: mid };
        }
        if self.count(&e.lo, &mid) == 1 {
            RootEnclosure { lo: e.lo.clone(), hi: mid }
        } else {
            self.tighten(RootEnclosure { lo: mid, hi: e.hi.clone() })
        }
    }

    /// Sign of `q` at the root enclosed by `e`.
    pub fn sign_at_root(&self, e: &RootEnclosure, q: &RPoly) -> i32 {
        if e.is_exact() {
            return sign(q, &e.lo);
        }
        let g = self.base().gcd(q);
        if g.degree().unwrap_or(0) > 0 && Sturm::new(&g).count(&e.lo, &e.hi) > 0 {
            return 0;
        }
        let sq = Sturm::new(q);
        let mut cur = e.clone();
        while !cur.is_exact() && sq.count_closed(&cur.lo, &cur.hi) > 0 {
            cur = self.bisect(&cur);
        }
        sign(q, &cur.hi)
    }
}

fn count_changes(signs: impl Iterator<Item = i32>) -> usize {
    let mut last = 0;
    let mut n = 0;
    for s in signs {
        if last != 0 && s != last {
            n += 1;
        }
        last = s;
    }
    n
}

/// Cauchy upper bound on the modulus of the roots.
pub fn cauchy_bound(p: &RPoly) -> Rational {
    let Some(lead) = p.leading() else {
        return Rational::from(1);
    };
    let lead = lead.clone().abs();
    let m = p.coeffs()[..p.coeffs().len() - 1]
        .iter()
        .map(|c| Rational::from(c.abs_ref()) / &lead)
        .fold(Rational::new(), |a: Rational, b: Rational| if b > a { b } else { a });
    m + 1
}

/// Distinct real roots of `p` inside `window` (closed ends included).
pub fn roots_in(p: &RPoly, window: &Interval) -> Vec<RootEnclosure> {
    let st = Sturm::new(p);
    let b = cauchy_bound(st.base());
    let lo = window.lo().cloned().unwrap_or_else(|| Rational::from(-&b) - 1);
    let hi = window.hi().cloned().unwrap_or_else(|| b.clone() + 1);
    let mut out = Vec::new();
    if sign(st.base(), &lo) == 0 {
        out.push(RootEnclosure { lo: lo.clone(), hi: lo.clone() });
    }
    out.extend(st.isolate(&lo, &hi));
    out
}

/// Number of sign changes of `p` in the open interval, i.e. the number of
/// distinct roots of odd multiplicity there.
pub fn sign_changes_open(p: &RPoly, a: &Rational, b: &Rational) -> usize {
    if p.degree().unwrap_or(0) == 0 {
        return 0;
    }
    if is_squarefree(p) {
        return Sturm::new(p).count_open(a, b);
    }
    p.squarefree_factors()
        .iter()
        .enumerate()
        .filter(|(i, f)| i % 2 == 0 && f.degree().unwrap_or(0) > 0)
        .map(|(_, f)| Sturm::new(f).count_open(a, b))
        .sum()
}
