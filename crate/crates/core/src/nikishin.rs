//! Nikishin systems: validated chains of generating measures together with
//! the product measures `s_{j,k}` built from them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Contact, Interval};
use crate::measures::{Measure, MomentSequence};
use crate::poly::Polynomial;
use crate::scalar::{Cx, Scalar};

/// Longest chain accepted when some generator is continuous.
pub const MAX_CONTINUOUS_DEPTH: usize = 6;

/// `N(sigma_1, ..., sigma_m)` with a write-once table of product measures.
pub struct NikishinSystem<S> {
    generators: Vec<Arc<Measure<S>>>,
    intervals: Vec<Interval>,
    products: Vec<OnceLock<Result<Arc<Measure<S>>>>>,
    moments: Mutex<HashMap<(usize, usize), Vec<S>>>,
    promoted: Mutex<HashMap<u32, Arc<NikishinSystem<S>>>>,
}

/// Coefficients `l_0, ..., l_m` of the linear forms `L_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFormCoeffs<S> {
    pub polys: Vec<Polynomial<S>>,
}

/// Moment table of a system, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheExport {
    pub m: usize,
    pub entries: Vec<CacheEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub j: usize,
    pub k: usize,
    pub moments: Vec<String>,
}

fn sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl<S: Scalar> Clone for NikishinSystem<S> {
    fn clone(&self) -> Self {
        Self::from_validated(self.generators.clone(), self.intervals.clone())
    }
}

impl<S: Scalar> std::fmt::Debug for NikishinSystem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let iv: Vec<String> = self.intervals.iter().map(|i| i.to_string()).collect();
        f.debug_struct("NikishinSystem").field("m", &self.m()).field("intervals", &iv).finish()
    }
}

impl<S: Scalar> NikishinSystem<S> {
    /// Validates the interval chain and returns a system with an empty cache.
    pub fn build(generators: Vec<Measure<S>>) -> Result<Self> {
        let m = generators.len();
        if m == 0 {
            return Err(Error::InvalidArgument("a Nikishin system needs at least one generator".into()));
        }
        if m > MAX_CONTINUOUS_DEPTH && generators.iter().any(|g| g.is_continuous()) {
            return Err(Error::DepthExceeded { depth: m, max: MAX_CONTINUOUS_DEPTH });
        }
        let mut intervals = Vec::with_capacity(m);
        for (i, g) in generators.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidMeasure(format!("generator {} is the zero measure", i + 1)));
            }
            intervals.push(g.hull().ok_or_else(|| Error::InvalidMeasure(format!("generator {} has no support", i + 1)))?);
        }
        for j in 0..m.saturating_sub(1) {
            match intervals[j].contact(&intervals[j + 1]) {
                Contact::Disjoint => {}
                Contact::Overlap => return Err(Error::IntervalOverlap { left: j + 1, right: j + 2 }),
                Contact::Touch(p) => {
                    if generators[j].is_continuous() || generators[j + 1].is_continuous() {
                        return Err(Error::ContinuousJunction { left: j + 1, right: j + 2 });
                    }
                    for (g, gen) in [(j, &generators[j]), (j + 1, &generators[j + 1])] {
                        if gen.has_atom_at(&p) {
                            return Err(Error::AtomAtJunction { generator: g + 1, point: p.to_string() });
                        }
                    }
                }
            }
        }
        Ok(Self::from_validated(generators.into_iter().map(Arc::new).collect(), intervals))
    }

    fn from_validated(generators: Vec<Arc<Measure<S>>>, intervals: Vec<Interval>) -> Self {
        let m = generators.len();
        Self {
            generators,
            intervals,
            products: (0..m * m).map(|_| OnceLock::new()).collect(),
            moments: Mutex::new(HashMap::new()),
            promoted: Mutex::new(HashMap::new()),
        }
    }

    /// `N(sigma_m, ..., sigma_1)`.
    pub fn reversed(&self) -> Self {
        let mut g = self.generators.clone();
        g.reverse();
        let mut iv = self.intervals.clone();
        iv.reverse();
        Self::from_validated(g, iv)
    }

    pub fn m(&self) -> usize {
        self.generators.len()
    }
    /// `sigma_j`, 1-based.
    pub fn generator(&self, j: usize) -> &Arc<Measure<S>> {
        &self.generators[j - 1]
    }
    pub fn generators(&self) -> &[Arc<Measure<S>>] {
        &self.generators
    }
    /// `Delta_j`, 1-based.
    pub fn interval(&self, j: usize) -> &Interval {
        &self.intervals[j - 1]
    }
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }
    pub fn prec(&self) -> u32 {
        self.generators.iter().map(|g| g.prec()).max().unwrap_or(0)
    }
    /// The same generators rounded to `prec` bits, cached per precision.
    /// Exact systems are returned unchanged.
    pub fn at_precision(&self, prec: u32) -> Arc<Self> {
        let mut cache = self.promoted.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(if S::EXACT { 0 } else { prec })
            .or_insert_with(|| {
                let gens = self.generators.iter().map(|g| Arc::new(g.convert::<S>(prec))).collect();
                Arc::new(Self::from_validated(gens, self.intervals.clone()))
            })
            .clone()
    }
    /// Fewest support points among the generators, if all are finite.
    pub fn min_atom_count(&self) -> Option<usize> {
        self.generators.iter().map(|g| g.atom_count()).collect::<Option<Vec<_>>>()?.into_iter().min()
    }
    /// Convex hull of all intervals.
    pub fn hull(&self) -> Interval {
        self.intervals.iter().skip(1).fold(self.intervals[0].clone(), |acc, i| acc.join(i))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.m() {
            return Err(Error::InvalidArgument(format!("index {j} outside 1..={}", self.m())));
        }
        Ok(())
    }

    /// `s_{j,k}`: `<sigma_j, s_{j+1,k}>` for `j < k`, `<sigma_j, s_{j-1,k}>`
    /// for `j > k`, and `sigma_j` itself on the diagonal.
    pub fn product_measure(&self, j: usize, k: usize) -> Result<Arc<Measure<S>>> {
        self.check_index(j)?;
        self.check_index(k)?;
        if j == k {
            return Ok(self.generators[j - 1].clone());
        }
        let cell = &self.products[(j - 1) * self.m() + (k - 1)];
        cell.get_or_init(|| {
            let next = if j < k { j + 1 } else { j - 1 };
            let inner = self.product_measure(next, k)?;
            Ok(Arc::new(self.generators[j - 1].product(&inner)?))
        })
        .clone()
    }

    /// `s_hat_{j,k}(z)`.
    pub fn s_hat(&self, j: usize, k: usize, z: &Cx<S>) -> Result<Cx<S>> {
        self.product_measure(j, k)?.cauchy_transform(z)
    }

    /// Moments `c_0 .. c_{up_to}` of `s_{j,k}`, memoised.
    pub fn moments_of_product(&self, j: usize, k: usize, up_to: usize) -> Result<MomentSequence<S>> {
        let prec = self.prec();
        if let Some(v) = self.moments.lock().expect("moment cache poisoned").get(&(j, k)) {
            if v.len() > up_to {
                return Ok(MomentSequence { values: v[..=up_to].to_vec(), exact: S::EXACT, prec });
            }
        }
        let ms = self.product_measure(j, k)?.moments(up_to)?;
        let mut cache = self.moments.lock().expect("moment cache poisoned");
        let entry = cache.entry((j, k)).or_default();
        if entry.len() < ms.values.len() {
            *entry = ms.values.clone();
        }
        Ok(ms)
    }

    /// Max-norm over `points` of
    /// `(-1)^j s_{m,j+1} + sum_{k=j+1}^{m-1} (-1)^k s_{m,k+1} s_{j+1,k} + (-1)^m s_{j+1,m}`.
    pub fn check_fundamental_identity(&self, j: usize, points: &[Cx<S>]) -> Result<S> {
        let m = self.m();
        if m < 2 || j > m - 2 {
            return Err(Error::InvalidArgument(format!("level j={j} outside 0..={}", m as i64 - 2)));
        }
        let prec = self.prec();
        let mut worst = S::zero(prec);
        for z in points {
            let mut acc = self.s_hat(m, j + 1, z)?.scale(&S::from_i64(sign(j), prec));
            for k in j + 1..m {
                let t = self.s_hat(m, k + 1, z)?.mul(&self.s_hat(j + 1, k, z)?);
                acc = acc.add(&t.scale(&S::from_i64(sign(k), prec)));
            }
            acc = acc.add(&self.s_hat(j + 1, m, z)?.scale(&S::from_i64(sign(m), prec)));
            worst = S::max_of(&worst, &acc.norm_max());
        }
        Ok(worst)
    }

    /// `L_j(z) = l_j(z) + sum_{k>j} l_k(z) s_hat_{j+1,k}(z)`, `L_m = l_m`.
    pub fn linear_form_eval(&self, coeffs: &LinearFormCoeffs<S>, j: usize, z: &Cx<S>) -> Result<Cx<S>> {
        let m = self.m();
        if coeffs.polys.len() != m + 1 || j > m {
            return Err(Error::InvalidArgument("linear form needs m+1 coefficients and j <= m".into()));
        }
        let mut acc = coeffs.polys[j].eval_cx(z);
        for k in j + 1..=m {
            if coeffs.polys[k].is_zero() {
                continue;
            }
            acc = acc.add(&coeffs.polys[k].eval_cx(z).mul(&self.s_hat(j + 1, k, z)?));
        }
        Ok(acc)
    }

    /// Max-norm residual of the reduction identity
    /// `L_j + sum_{k=j+1}^r (-1)^(k-j) s_hat_{k,j+1} L_k
    ///  = l_j + (-1)^(r-j) sum_{k=r+1}^m l_k <s_{r+1,k}, s_{r,j+1}>^`.
    pub fn check_reduction_identity(&self, coeffs: &LinearFormCoeffs<S>, j: usize, r: usize, points: &[Cx<S>]) -> Result<S> {
        let m = self.m();
        if m < 2 || j > m - 2 || r < j + 1 || r > m - 1 {
            return Err(Error::InvalidArgument(format!("need j <= m-2 and j+1 <= r <= m-1, got j={j}, r={r}")));
        }
        let prec = self.prec();
        let mut tails = Vec::new();
        for k in r + 1..=m {
            let outer = self.product_measure(r + 1, k)?;
            let inner = self.product_measure(r, j + 1)?;
            tails.push((k, outer.product(&inner)?));
        }
        let mut worst = S::zero(prec);
        for z in points {
            let mut lhs = self.linear_form_eval(coeffs, j, z)?;
            for k in j + 1..=r {
                let t = self.s_hat(k, j + 1, z)?.mul(&self.linear_form_eval(coeffs, k, z)?);
                lhs = lhs.add(&t.scale(&S::from_i64(sign(k - j), prec)));
            }
            let mut tail = Cx::zero(prec);
            for (k, meas) in &tails {
                tail = tail.add(&coeffs.polys[*k].eval_cx(z).mul(&meas.cauchy_transform(z)?));
            }
            let rhs = coeffs.polys[j].eval_cx(z).add(&tail.scale(&S::from_i64(sign(r - j), prec)));
            worst = S::max_of(&worst, &lhs.sub(&rhs).norm_max());
        }
        Ok(worst)
    }

    /// Snapshot of every memoised moment sequence.
    pub fn export_cache(&self) -> CacheExport {
        let cache = self.moments.lock().expect("moment cache poisoned");
        let mut entries: Vec<CacheEntry> = cache
            .iter()
            .map(|(&(j, k), v)| CacheEntry { j, k, moments: v.iter().map(|c| c.to_repr()).collect() })
            .collect();
        entries.sort_by_key(|e| (e.j, e.k));
        CacheExport { m: self.m(), entries }
    }

    /// Preloads moments produced by [`export_cache`](Self::export_cache).
    pub fn import_cache(&self, data: &CacheExport) -> Result<()> {
        if data.m != self.m() {
            return Err(Error::Config(format!("cache is for m={}, system has m={}", data.m, self.m())));
        }
        let prec = self.prec();
        let mut cache = self.moments.lock().expect("moment cache poisoned");
        for e in &data.entries {
            self.check_index(e.j)?;
            self.check_index(e.k)?;
            let vals = e
                .moments
                .iter()
                .map(|s| S::parse_repr(s, prec).ok_or_else(|| Error::Config(format!("bad moment {s}"))))
                .collect::<Result<Vec<S>>>()?;
            cache.insert((e.j, e.k), vals);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }
    fn iv(a: i64, b: i64) -> Interval {
        Interval::from_i64(a, b).unwrap()
    }
    fn worked() -> NikishinSystem<Rational> {
        let s1 = Measure::from_rational_atoms(&[(q(0, 1), q(1, 2)), (q(1, 1), q(1, 2))], Some(iv(0, 1)), 0).unwrap();
        let s2 = Measure::from_rational_atoms(&[(q(3, 1), q(1, 1))], Some(iv(2, 4)), 0).unwrap();
        NikishinSystem::build(vec![s1, s2]).unwrap()
    }
    fn cz(re: Rational, im: Rational) -> Cx<Rational> {
        Cx::new(re, im)
    }

    #[test]
    fn worked_products() {
        let sys = worked();
        let s12 = sys.product_measure(1, 2).unwrap();
        assert_eq!(s12.atoms().unwrap(), &[(q(0, 1), q(-1, 6)), (q(1, 1), q(-1, 4))]);
        let s21 = sys.product_measure(2, 1).unwrap();
        assert_eq!(s21.atoms().unwrap(), &[(q(3, 1), q(5, 12))]);
        assert_eq!(sys.moments_of_product(1, 2, 1).unwrap().values, vec![q(-5, 12), q(-1, 4)]);
        assert_eq!(sys.moments_of_product(2, 1, 0).unwrap().values, vec![q(5, 12)]);
        let v = sys.s_hat(1, 1, &cz(q(2, 1), q(0, 1))).unwrap();
        assert_eq!(v.re, q(3, 4));
        let z = cz(q(7, 1), q(1, 1));
        let a = sys.s_hat(2, 1, &z).unwrap();
        let b = sys.s_hat(2, 2, &z).unwrap().scale(&q(5, 12));
        assert_eq!(a, b);
    }

    #[test]
    fn chain_validation() {
        let l1 = Measure::<Rational>::lebesgue(q(0, 1), q(1, 1), 64).unwrap();
        let l2 = Measure::<Rational>::lebesgue(q(1, 2), q(2, 1), 64).unwrap();
        assert_eq!(NikishinSystem::build(vec![l1, l2]).unwrap_err(), Error::IntervalOverlap { left: 1, right: 2 });
        let a = Measure::<Rational>::from_rational_atoms(&[(q(0, 1), q(1, 1)), (q(1, 2), q(1, 1))], Some(iv(0, 1)), 0).unwrap();
        let b = Measure::from_rational_atoms(&[(q(1, 1), q(1, 1)), (q(2, 1), q(1, 1))], Some(iv(1, 2)), 0).unwrap();
        assert!(matches!(NikishinSystem::build(vec![a.clone(), b]), Err(Error::AtomAtJunction { generator: 2, .. })));
        let c = Measure::from_rational_atoms(&[(q(3, 2), q(1, 1)), (q(2, 1), q(1, 1))], Some(iv(1, 2)), 0).unwrap();
        assert!(NikishinSystem::build(vec![a, c]).is_ok());
        let l3 = Measure::<Rational>::lebesgue(q(0, 1), q(1, 1), 64).unwrap();
        let l4 = Measure::<Rational>::lebesgue(q(1, 1), q(2, 1), 64).unwrap();
        assert!(matches!(NikishinSystem::build(vec![l3, l4]), Err(Error::ContinuousJunction { .. })));
    }

    #[test]
    fn identities_on_worked_system() {
        let sys = worked();
        let pts = [cz(q(0, 1), q(1, 1)), cz(q(5, 1), q(-2, 3))];
        assert_eq!(sys.check_fundamental_identity(0, &pts).unwrap(), 0);
        let c = LinearFormCoeffs {
            polys: vec![
                Polynomial::from_i64s(&[1], 0),
                Polynomial::from_i64s(&[1], 0),
                Polynomial::from_i64s(&[1], 0),
            ],
        };
        let v = sys.linear_form_eval(&c, 0, &cz(q(5, 1), q(0, 1))).unwrap();
        let direct = q(1, 1) + sys.s_hat(1, 1, &cz(q(5, 1), q(0, 1))).unwrap().re + sys.s_hat(1, 2, &cz(q(5, 1), q(0, 1))).unwrap().re;
        assert_eq!(v.re, direct);
        assert_eq!(sys.check_reduction_identity(&c, 0, 1, &pts).unwrap(), 0);
    }

    #[test]
    fn cache_round_trip() {
        let sys = worked();
        sys.moments_of_product(1, 2, 4).unwrap();
        let ex = sys.export_cache();
        let json = serde_json::to_string(&ex).unwrap();
        let back: CacheExport = serde_json::from_str(&json).unwrap();
        let fresh = worked();
        fresh.import_cache(&back).unwrap();
        assert_eq!(fresh.export_cache(), ex);
    }

    #[test]
    fn reversal_is_an_involution() {
        let sys = worked();
        let rr = sys.reversed().reversed();
        let z = cz(q(9, 1), q(1, 1));
        assert_eq!(rr.s_hat(1, 2, &z).unwrap(), sys.s_hat(1, 2, &z).unwrap());
        assert_eq!(sys.reversed().interval(1), sys.interval(2));
    }
}
