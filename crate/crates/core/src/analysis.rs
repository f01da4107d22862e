//! Cross-solution checks: reversed systems, biorthogonality under the
//! Cauchy convolution kernel, convergence tables and zero diagnostics.

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite_pade::{self, dr_terms, ml_terms, terms_order, Formulation, HermitePadeSolution, MultipointReport};
use crate::interval::Interval;
use crate::nikishin::NikishinSystem;
use crate::par::{self, Exec};
use crate::roots;
use crate::scalar::{Cx, Scalar, DEFAULT_PREC};

/// ML solution of order `k` for the reversed system.
pub fn reversed_solution<S: Scalar>(sys: &NikishinSystem<S>, k: usize) -> Result<HermitePadeSolution<S>> {
    hermite_pade::solve(&sys.reversed(), k, Formulation::Ml)
}

/// `K(x_1, x_m)`: `1/(x_1 - x_m)` for `m = 2`, otherwise the iterated
/// integral of `1/((x_1-x_2)(x_2-x_3)...(x_{m-1}-x_m))` over
/// `sigma_2 ... sigma_{m-1}`.
pub fn cauchy_convolution_kernel<S: Scalar>(sys: &NikishinSystem<S>, x1: &S, xm: &S) -> Result<S> {
    let m = sys.m();
    if m < 2 {
        return Err(Error::InvalidArgument("the convolution kernel needs m >= 2".into()));
    }
    kernel_from(sys, 1, x1, xm)
}

fn recip_diff<S: Scalar>(a: &S, b: &S) -> Result<S> {
    let d = a.sub(b);
    if d.is_zero() {
        return Err(Error::DivisionByZero(format!("kernel denominator vanishes at {}", a.to_repr())));
    }
    Ok(S::one(d.prec()).div(&d))
}

/// Kernel from level `l` (variable `x_l`) down to `x_m`.
fn kernel_from<S: Scalar>(sys: &NikishinSystem<S>, l: usize, xl: &S, xm: &S) -> Result<S> {
    let m = sys.m();
    if l + 1 == m {
        return recip_diff(xl, xm);
    }
    let next = sys.generator(l + 1);
    next.integrate(&|t: &S| Ok(kernel_from(sys, l + 1, t, xm)?.mul(&recip_diff(xl, t)?)))
}

/// `M[n][k] = int int b_{k,m}(x_1) K(x_1,x_m) a_{n,m}(x_m) d sigma_m d sigma_1`.
#[derive(Clone, Debug)]
pub struct BiorthogonalityMatrix<S> {
    pub entries: Vec<Vec<S>>,
    /// Same matrix computed through `A_{n,1}(x_1) = (-1)^m int a_{n,m} K d sigma_m`.
    pub via_forms: Vec<Vec<S>>,
}

impl<S: Scalar> BiorthogonalityMatrix<S> {
    pub fn size(&self) -> usize {
        self.entries.len()
    }
    pub fn max_off_diagonal(&self) -> S {
        let prec = self.entries[0][0].prec();
        let mut best = S::zero(prec);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    best = S::max_of(&best, &v.abs());
                }
            }
        }
        best
    }
    pub fn min_diagonal(&self) -> S {
        let mut it = self.entries.iter().enumerate().map(|(i, r)| r[i].abs());
        let first = it.next().expect("non-empty matrix");
        it.fold(first, |a, b| if b < a { b } else { a })
    }
    /// Largest entrywise difference between the two evaluations.
    pub fn consistency(&self) -> S {
        let prec = self.entries[0][0].prec();
        self.entries
            .iter()
            .zip(&self.via_forms)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.sub(y).abs()))
            .fold(S::zero(prec), |a, b| S::max_of(&a, &b))
    }
    /// Off-diagonal entries zero and diagonal entries nonzero, relative to the
    /// diagonal scale.
    pub fn is_biorthogonal(&self) -> bool {
        let scale = self.entries.iter().enumerate().fold(S::zero(self.entries[0][0].prec()), |a, (i, r)| S::max_of(&a, &r[i].abs()));
        let off_ok = self
            .entries
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, v)| i == j || v.is_zero() || v.negligible(&scale)));
        let diag_ok = self.entries.iter().enumerate().all(|(i, r)| !r[i].is_zero() && !r[i].negligible(&scale));
        off_ok && diag_ok
    }
}

/// `N x N` biorthogonality matrix for orders `1..=N`, cells computed under `exec`.
pub fn biorthogonality_matrix<S: Scalar>(sys: &NikishinSystem<S>, big_n: usize, exec: Exec) -> Result<BiorthogonalityMatrix<S>> {
    let m = sys.m();
    if m < 2 {
        return Err(Error::InvalidArgument("biorthogonality needs m >= 2".into()));
    }
    let orders: Vec<usize> = (1..=big_n).collect();
    let a: Vec<HermitePadeSolution<S>> = par::map(exec, &orders, |&n| hermite_pade::solve(sys, n, Formulation::Ml)).into_iter().collect::<Result<_>>()?;
    let rev = sys.reversed();
    let b: Vec<HermitePadeSolution<S>> = par::map(exec, &orders, |&k| hermite_pade::solve(&rev, k, Formulation::Ml)).into_iter().collect::<Result<_>>()?;
    let s1 = sys.generator(1);
    let sm = sys.generator(m);
    let cells: Vec<(usize, usize)> = (0..big_n).flat_map(|i| (0..big_n).map(move |k| (i, k))).collect();
    let sign = if m.is_multiple_of(2) { 1 } else { -1 };
    let values = par::map(exec, &cells, |&(i, k)| -> Result<(S, S)> {
        let an = a[i].top();
        let bk = b[k].top();
        let direct = s1.integrate(&|x1: &S| {
            let inner = sm.integrate(&|xm: &S| Ok(an.eval(xm).mul(&cauchy_convolution_kernel(sys, x1, xm)?)))?;
            Ok(bk.eval(x1).mul(&inner))
        })?;
        let via = s1.integrate(&|x1: &S| {
            let form = hermite_pade::form_value(&a[i], sys, 1, &Cx::real(x1.clone()))?.re;
            Ok(bk.eval(x1).mul(&form).mul_i64(sign))
        })?;
        Ok((direct, via))
    });
    let mut entries = vec![Vec::with_capacity(big_n); big_n];
    let mut via_forms = vec![Vec::with_capacity(big_n); big_n];
    for ((i, _), v) in cells.iter().zip(values) {
        let (d, f) = v?;
        entries[*i].push(d);
        via_forms[*i].push(f);
    }
    Ok(BiorthogonalityMatrix { entries, via_forms })
}

/// Rectangular grid in the upper half plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub re: (Rational, Rational),
    pub im: (Rational, Rational),
    pub steps: usize,
    pub margin: Rational,
}

impl Grid {
    /// `steps x steps` points over `[lo - d, hi + d] x [d, d + diam]`, where
    /// `[lo, hi]` is the hull of all intervals and `d = margin * diam(Delta_m)`.
    pub fn around<S: Scalar>(sys: &NikishinSystem<S>, margin: &Rational, steps: usize) -> Result<Self> {
        let hull = sys.hull();
        let (lo, hi) = hull.bounds().ok_or_else(|| Error::Unsupported("convergence grid needs bounded intervals".into()))?;
        let dm = sys.interval(sys.m()).diam().ok_or_else(|| Error::Unsupported("unbounded Delta_m".into()))?;
        let mut d = Rational::from(margin * &dm);
        if d == 0 {
            d = margin * hull.diam().unwrap_or_default();
        }
        if d == 0 {
            d = margin.clone();
        }
        let diam = hull.diam().unwrap_or_default();
        Ok(Self {
            re: (Rational::from(lo - &d), Rational::from(hi + &d)),
            im: (d.clone(), Rational::from(&d + &diam)),
            steps: steps.max(2),
            margin: d,
        })
    }

    pub fn points(&self) -> Vec<(Rational, Rational)> {
        let n = self.steps - 1;
        let step = |(a, b): &(Rational, Rational), i: usize| a + Rational::from(b - a) * Rational::from((i as i64, n as i64));
        (0..self.steps).flat_map(|i| (0..self.steps).map(move |k| (i, k))).map(|(i, k)| (step(&self.re, i), step(&self.im, k))).collect()
    }

    pub fn describe(&self) -> String {
        format!(
            "{}x{} grid, re in [{}, {}], im in [{}, {}], margin {}",
            self.steps,
            self.steps,
            self.re.0.to_f64(),
            self.re.1.to_f64(),
            self.im.0.to_f64(),
            self.im.1.to_f64(),
            self.margin.to_f64()
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub j: usize,
    /// `max |a_{n,j}/a_{n,m} - s_hat_{m,j+1}|` over the grid.
    pub con01: f64,
    /// `max |A_{n,j}/a_{n,m}|` over the grid.
    pub con00: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub grid: String,
    pub backend: String,
    pub multipoint: Vec<MultipointReport>,
}

impl ConvergenceReport {
    pub fn series(&self, j: usize, combined: bool) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| r.j == j).map(|r| (r.n, if combined { r.con00 } else { r.con01 })).collect()
    }
    /// Non-increasing in `n` for every `j`.
    pub fn monotone(&self, combined: bool) -> bool {
        let m = self.rows.iter().map(|r| r.j).max().map_or(0, |j| j + 1);
        (0..m).all(|j| self.series(j, combined).windows(2).all(|w| w[1].1 <= w[0].1))
    }
    pub fn final_error(&self, combined: bool) -> f64 {
        let n = self.rows.iter().map(|r| r.n).max().unwrap_or(0);
        self.rows.iter().filter(|r| r.n == n).map(|r| if combined { r.con00 } else { r.con01 }).fold(0.0, f64::max)
    }
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,j,con01,con00\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:e},{:e}\n", r.n, r.j, r.con01, r.con00));
        }
        out
    }
}

fn backend_name<S: Scalar>(prec: u32) -> String {
    if S::EXACT {
        "rational".into()
    } else {
        format!("float{prec}")
    }
}

/// Grid errors of `a_{n,j}/a_{n,m} -> s_hat_{m,j+1}` and of the combined
/// residual `A_{n,j}/a_{n,m}` for each `n`, plus the multipoint-Pade check.
pub fn convergence_table<S: Scalar>(sys: &NikishinSystem<S>, ns: &[usize], grid: &Grid, exec: Exec) -> Result<ConvergenceReport> {
    let m = sys.m();
    let prec = if S::EXACT { 0 } else { sys.prec().max(64) };
    let points: Vec<Cx<S>> = grid.points().iter().map(|(re, im)| Cx::from_rationals(re, im, prec)).collect();
    let ref_vals: Vec<Vec<Cx<S>>> = par::map(exec, &points, |z| (0..m).map(|j| sys.s_hat(m, j + 1, z)).collect::<Result<Vec<_>>>())
        .into_iter()
        .collect::<Result<_>>()?;
    let sols: Vec<HermitePadeSolution<S>> =
        par::map(exec, ns, |&n| hermite_pade::solve(sys, n, Formulation::Ml)).into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut multipoint = Vec::new();
    for sol in &sols {
        let errs = par::map(exec, &(0..points.len()).collect::<Vec<_>>(), |&p| -> Result<Vec<(f64, f64)>> {
            let z = &points[p];
            let am = sol.top().eval_cx(z);
            let inv = am.recip().ok_or_else(|| Error::PoleHit("a_{n,m} vanishes on the grid".into()))?;
            (0..m)
                .map(|j| {
                    let ratio = sol.polys[j].eval_cx(z).mul(&inv);
                    let e1 = ratio.sub(&ref_vals[p][j]).modulus_f64();
                    let form = hermite_pade::form_value(sol, sys, j, z)?;
                    Ok((e1, form.mul(&inv).modulus_f64()))
                })
                .collect()
        });
        let mut worst = vec![(0f64, 0f64); m];
        for e in errs {
            for (w, v) in worst.iter_mut().zip(e?) {
                w.0 = w.0.max(v.0);
                w.1 = w.1.max(v.1);
            }
        }
        rows.extend(worst.into_iter().enumerate().map(|(j, (c1, c0))| ConvergenceRow { n: sol.n, j, con01: c1, con00: c0 }));
        if sys.min_atom_count().is_some() {
            multipoint.push(hermite_pade::check_multipoint(sol, sys, if S::EXACT { DEFAULT_PREC } else { prec })?);
        }
    }
    Ok(ConvergenceReport { rows, grid: grid.describe(), backend: backend_name::<S>(prec), multipoint })
}

/// Largest distance from a root of `a_{n,j}` to `Delta_m`, per `n`; `None`
/// when `a_{n,j}` is constant.
pub fn zero_accumulation<S: Scalar>(sys: &NikishinSystem<S>, ns: &[usize], j: usize) -> Result<Vec<(usize, Option<f64>)>> {
    let m = sys.m();
    if m < 2 || j + 2 > m {
        return Err(Error::InvalidArgument(format!("zero accumulation needs j <= m-2 (j={j}, m={m})")));
    }
    let dm = sys.interval(m);
    let prec = DEFAULT_PREC.max(sys.prec());
    ns.iter()
        .map(|&n| {
            let sol = hermite_pade::solve(sys, n, Formulation::Ml)?;
            let p = sol.polys[j].to_float(prec);
            if p.degree().unwrap_or(0) == 0 {
                return Ok((n, None));
            }
            let rs = roots::complex_roots(&p, prec)?;
            let d = rs.iter().map(|z| segment_distance(dm, z)).fold(0.0, f64::max);
            Ok((n, Some(d)))
        })
        .collect()
}

fn segment_distance(iv: &Interval, z: &Cx<Float>) -> f64 {
    let (re, im) = z.to_f64_pair();
    iv.dist_f64(re, im)
}

/// The two labelled facets of a mixed-type solution.
#[derive(Clone, Debug, Serialize)]
pub struct TypeReport {
    /// `A_{n,0} = O(1/z^(n+1))`.
    pub type_one: bool,
    /// `a_{n,j} - a_{n,m} s_hat_{m,j+1} = O(1/z)` for every `j < m`.
    pub type_two: bool,
    /// `m = 1`: the solution is the diagonal Pade approximant.
    pub classical_pade: bool,
    pub orders_one: String,
    pub orders_two: Vec<String>,
}

pub fn classify_type_i_ii<S: Scalar>(sol: &HermitePadeSolution<S>, sys: &NikishinSystem<S>) -> TypeReport {
    let m = sys.m();
    let n = sol.n;
    let tail = 2 * n + 4;
    let one = terms_order(sys, &sol.polys, &ml_terms(m, 0), n as i64, tail);
    let two: Vec<_> = (0..m).map(|j| terms_order(sys, &sol.polys, &dr_terms(m, j), n as i64, tail)).collect();
    let type_one = one.as_ref().is_ok_and(|o| o.at_least(n as i64 + 1));
    let type_two = two.iter().all(|o| o.as_ref().is_ok_and(|o| o.at_least(1)));
    let fmt = |o: &Result<hermite_pade::Order>| o.as_ref().map_or_else(|e| format!("error: {e}"), |o| o.to_string());
    TypeReport {
        type_one,
        type_two,
        classical_pade: m == 1 && type_one,
        orders_one: fmt(&one),
        orders_two: two.iter().map(fmt).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Measure;
    use crate::poly::Polynomial;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }
    fn iv(a: i64, b: i64) -> Interval {
        Interval::from_i64(a, b).unwrap()
    }
    fn disc(atoms: &[(i64, i64, i64)], i: Interval) -> Measure<Rational> {
        let a: Vec<_> = atoms.iter().map(|&(y, gn, gd)| (q(y, 1), q(gn, gd))).collect();
        Measure::from_rational_atoms(&a, Some(i), 0).unwrap()
    }
    fn worked() -> NikishinSystem<Rational> {
        NikishinSystem::build(vec![disc(&[(0, 1, 2), (1, 1, 2)], iv(0, 1)), disc(&[(3, 1, 1)], iv(2, 4))]).unwrap()
    }

    #[test]
    fn kernel_values() {
        let sys = worked();
        assert_eq!(cauchy_convolution_kernel(&sys, &q(0, 1), &q(3, 1)).unwrap(), q(-1, 3));
        assert_eq!(cauchy_convolution_kernel(&sys, &q(1, 1), &q(3, 1)).unwrap(), q(-1, 2));
        assert!(cauchy_convolution_kernel(&sys, &q(3, 1), &q(3, 1)).is_err());
        let three = NikishinSystem::build(vec![
            disc(&[(0, 1, 1)], iv(0, 1)),
            disc(&[(5, 2, 1)], iv(4, 6)),
            disc(&[(9, 1, 1)], iv(8, 10)),
        ])
        .unwrap();
        let (x1, c, xm, w) = (q(1, 2), q(5, 1), q(17, 2), q(2, 1));
        let expect = w / (Rational::from(&c - &xm) * Rational::from(&x1 - &c));
        assert_eq!(cauchy_convolution_kernel(&three, &x1, &xm).unwrap(), expect);
    }

    #[test]
    fn reversed_worked_solution() {
        let sys = worked();
        let b = reversed_solution(&sys, 1).unwrap();
        assert_eq!(b.top().degree(), Some(1));
        let root = b.top().coeff(0).neg();
        assert!(root > 0 && root < 1);
        let again = reversed_solution(&sys.reversed(), 1).unwrap();
        assert_eq!(again.polys, hermite_pade::solve(&sys, 1, Formulation::Ml).unwrap().polys);
    }

    #[test]
    fn convergence_on_degenerate_example_is_exact() {
        let sys = worked();
        let grid = Grid::around(&sys, &q(1, 4), 5).unwrap();
        let rep = convergence_table(&sys, &[1], &grid, Exec::Sequential).unwrap();
        let j1 = rep.rows.iter().find(|r| r.j == 1).unwrap();
        assert_eq!(j1.con01, 0.0);
        assert!(rep.multipoint[0].passed);
    }

    #[test]
    fn zero_accumulation_of_constant_is_empty() {
        let sys = worked();
        assert_eq!(zero_accumulation(&sys, &[1], 0).unwrap(), vec![(1, None)]);
    }

    #[test]
    fn perturbed_solution_fails_a_facet() {
        let sys = worked();
        let sol = hermite_pade::solve(&sys, 1, Formulation::Ml).unwrap();
        let good = classify_type_i_ii(&sol, &sys);
        assert!(good.type_one && good.type_two && !good.classical_pade);
        let mut bad = sol.clone();
        bad.polys[0] = bad.polys[0].add(&Polynomial::constant(q(1, 100)));
        let r = classify_type_i_ii(&bad, &sys);
        assert!(!(r.type_one && r.type_two));
    }

    #[test]
    fn biorthogonality_small() {
        let sys = NikishinSystem::build(vec![
            disc(&[(0, 1, 2), (1, 1, 3), (2, 1, 4), (3, 1, 5)], iv(0, 3)),
            disc(&[(5, 1, 1), (6, 2, 1), (7, 1, 3), (8, 1, 2)], iv(5, 8)),
        ])
        .unwrap();
        let mtx = biorthogonality_matrix(&sys, 3, Exec::Sequential).unwrap();
        assert!(mtx.is_biorthogonal());
        assert_eq!(mtx.max_off_diagonal(), 0);
        assert_eq!(mtx.consistency(), 0);
    }
}
