use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nikishin::analysis::{self, Grid};
use nikishin::cubic_string as cs;
use nikishin::hermite_pade::{self as hp, Formulation, HermitePadeSolution, MultipointReport, ZeroLocationReport};
use nikishin::measures::Measure;
use nikishin::nikishin::NikishinSystem;
use nikishin::par::Exec;
use nikishin::poly::{Polynomial, RationalFunction};
use nikishin::samples;
use nikishin::scalar::{pow2, Scalar};
use nikishin::verify::{self, VerifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Rational};

const SWEEP_SEED: u64 = 2024;
const SWEEP_SIZE: usize = 10;
const ORDERS: [usize; 5] = [1, 2, 3, 4, 5];

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn report(id: u32, title: &str, ok: bool, detail: &str) {
    println!("acceptance {id:>2} {} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

struct SweepCase {
    ml: HermitePadeSolution<Rational>,
    dr: HermitePadeSolution<Rational>,
    leading: Vec<Rational>,
    zeros: ZeroLocationReport,
    multipoint: MultipointReport,
}

struct Sweep {
    systems: Vec<NikishinSystem<Rational>>,
    cases: Vec<Vec<Result<SweepCase, String>>>,
    solve_time: Duration,
}

fn sweep() -> &'static Sweep {
    static CELL: OnceLock<Sweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let systems = samples::random_sweep(SWEEP_SEED, SWEEP_SIZE);
        let start = Instant::now();
        let cases = systems
            .iter()
            .map(|sys| {
                ORDERS
                    .iter()
                    .map(|&n| -> Result<SweepCase, String> {
                        let ml = hp::solve(sys, n, Formulation::Ml).map_err(|e| e.to_string())?;
                        let dr = hp::solve(sys, n, Formulation::Dr).map_err(|e| e.to_string())?;
                        let leading = hp::leading_relation_residuals(&ml, sys).map_err(|e| e.to_string())?;
                        let zeros = hp::check_zero_location(&ml, sys).map_err(|e| e.to_string())?;
                        let multipoint = hp::check_multipoint(&ml, sys, 256).map_err(|e| e.to_string())?;
                        Ok(SweepCase { ml, dr, leading, zeros, multipoint })
                    })
                    .collect()
            })
            .collect();
        Sweep { systems, cases, solve_time: start.elapsed() }
    })
}

#[test]
fn worked_example_is_exact() {
    let start = Instant::now();
    let sys = samples::worked_system();
    let expected = [Polynomial::from_rationals(&[q(5, 12)], 0), Polynomial::from_rationals(&[q(1, 1)], 0), Polynomial::from_rationals(&[q(-3, 1), q(1, 1)], 0)];
    let mut ok = true;
    let mut shown = Vec::new();
    for f in [Formulation::Ml, Formulation::Dr] {
        let sol = hp::solve(&sys, 1, f).unwrap();
        ok &= sol.polys == expected;
        shown.push(format!("{f}: ({})", sol.polys.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")));
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(1);
    report(1, "worked example", ok, &format!("{} in {:.3}s", shown.join("; "), secs(t)));
    assert!(ok);
}

#[test]
fn random_sweep_structure() {
    let s = sweep();
    let mut failures = Vec::new();
    let mut count = 0;
    for (i, (sys, cases)) in s.systems.iter().zip(&s.cases).enumerate() {
        let m = sys.m();
        for (&n, case) in ORDERS.iter().zip(cases) {
            count += 1;
            let c = match case {
                Ok(c) => c,
                Err(e) => {
                    failures.push(format!("system {i} n={n}: {e}"));
                    continue;
                }
            };
            let degs: Vec<Option<usize>> = c.ml.polys.iter().map(|p| p.degree()).collect();
            let want: Vec<Option<usize>> = (0..=m).map(|j| Some(if j == m { n } else { n - 1 })).collect();
            if degs != want {
                failures.push(format!("system {i} n={n}: degrees {degs:?}"));
            }
            if c.leading.iter().any(|r| *r != 0) {
                failures.push(format!("system {i} n={n}: leading relation"));
            }
            if c.ml.polys != c.dr.polys {
                failures.push(format!("system {i} n={n}: DR and ML differ"));
            }
            if !c.ml.orders_ok() || !c.dr.orders_ok() {
                failures.push(format!("system {i} n={n}: interpolation orders"));
            }
        }
    }
    let ms: Vec<usize> = s.systems.iter().map(|x| x.m()).collect();
    let ok = failures.is_empty() && s.solve_time < Duration::from_secs(60);
    report(
        2,
        "equivalence, degrees, leading coefficients",
        ok,
        &format!("{count} solves over m={ms:?}, unique nullspace, DR==ML exact, sweep {:.1}s {}", secs(s.solve_time), failures.join("; ")),
    );
    assert!(ok, "{failures:?}");
}

#[test]
fn random_sweep_zero_location() {
    let s = sweep();
    let mut failures = Vec::new();
    for (i, cases) in s.cases.iter().enumerate() {
        for (&n, case) in ORDERS.iter().zip(cases) {
            match case {
                Ok(c) if c.zeros.passed => {}
                Ok(c) => failures.push(format!("system {i} n={n}: {:?}", c.zeros)),
                Err(e) => failures.push(format!("system {i} n={n}: {e}")),
            }
        }
    }
    let ok = failures.is_empty();
    report(3, "zero location and interlacing", ok, &format!("Sturm counts on {} solutions {}", SWEEP_SIZE * ORDERS.len(), failures.join("; ")));
    assert!(ok);
}

#[test]
fn identity_battery_is_exact() {
    let mut systems = samples::random_sweep(SWEEP_SEED, SWEEP_SIZE);
    systems.push(samples::reference_system());
    systems.push(samples::worked_system());
    let opts = VerifyOptions { seed: 77, points: 20, max_order: 0, ..Default::default() };
    let mut failures = Vec::new();
    let mut checks = 0;
    for (i, sys) in systems.iter().enumerate() {
        let rep = verify::identity_battery(sys, &opts).unwrap();
        checks += rep.checks.len();
        failures.extend(rep.checks.iter().filter(|c| c.residual != "0").map(|c| format!("system {i} {} {}", c.name, c.params)));
        let kinds = ["fundamental", "reduction", "stieltjes_inverse"];
        if !kinds.iter().all(|k| rep.checks.iter().any(|c| c.name == *k)) {
            failures.push(format!("system {i}: battery incomplete"));
        }
    }
    let ok = failures.is_empty();
    report(4, "identity battery", ok, &format!("{checks} residuals, all literal 0 at 20 points {}", failures.join("; ")));
    assert!(ok);
}

fn three_measure_system() -> NikishinSystem<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    samples::random_system(&mut rng, 3, 6..=6)
}

#[test]
fn biorthogonality_is_exact() {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, sys) in [("m=2", samples::reference_system()), ("m=3", three_measure_system())] {
        let b = analysis::biorthogonality_matrix(&sys, 4, Exec::Parallel).unwrap();
        let diag_nonzero = (0..4).all(|i| b.entries[i][i] != 0);
        let off_zero = b.max_off_diagonal() == 0;
        ok &= diag_nonzero && off_zero && b.consistency() == 0;
        details.push(format!("{name}: off-diagonal {} diagonal nonzero {diag_nonzero}", b.max_off_diagonal()));
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(30);
    report(5, "biorthogonality N=4", ok, &format!("{} in {:.1}s", details.join("; "), secs(t)));
    assert!(ok);
}

#[test]
fn convergence_on_reference_system() {
    let sys = samples::reference_system();
    let grid = Grid::around(&sys, &q(1, 4), 21).unwrap();
    let rep = analysis::convergence_table(&sys, &ORDERS, &grid, Exec::Parallel).unwrap();
    let mono01 = rep.monotone(false);
    let mono00 = rep.monotone(true);
    let fin = rep.final_error(false);
    let ok = mono01 && mono00 && fin < 1e-3;
    let series: Vec<String> = (0..sys.m()).map(|j| format!("j={j}: {:?}", rep.series(j, false).iter().map(|p| format!("{:.2e}", p.1)).collect::<Vec<_>>())).collect();
    report(
        6,
        "grid convergence",
        ok,
        &format!("{}; monotone con01 {mono01}, con00 {mono00}, final con01 {fin:.2e}, final con00 {:.2e}; {}", rep.grid, rep.final_error(true), series.join(" ")),
    );
    assert!(ok);
}

#[test]
fn multipoint_structure() {
    let s = sweep();
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for (i, cases) in s.cases.iter().enumerate() {
        for (&n, case) in ORDERS.iter().zip(cases) {
            match case {
                Ok(c) => {
                    worst = worst.max(c.multipoint.orthogonality_log2);
                    if !c.multipoint.passed || !c.multipoint.mp_order.at_least(n as i64 + 1) {
                        failures.push(format!("system {i} n={n}: {:?}", c.multipoint));
                    }
                }
                Err(e) => failures.push(format!("system {i} n={n}: {e}")),
            }
        }
    }
    let ok = failures.is_empty();
    report(7, "multipoint Pade structure", ok, &format!("order >= n+1 on every solve, worst orthogonality log2 {worst:.0} {}", failures.join("; ")));
    assert!(ok);
}

fn random_string(rng: &mut ChaCha8Rng, n: usize, sign: i32) -> cs::DiscreteCubicString {
    let mut ks: Vec<i64> = Vec::new();
    while ks.len() < n {
        let k = rng.random_range(-15..=15);
        if !ks.contains(&k) {
            ks.push(k);
        }
    }
    ks.sort_unstable();
    cs::DiscreteCubicString::new(ks.iter().map(|&k| (q(k, 16), q(rng.random_range(1..=12), 4))).collect(), sign).unwrap()
}

#[test]
fn cubic_string_pipeline() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let one = cs::DiscreteCubicString::new(vec![(q(0, 1), q(1, 1))], 1).unwrap();
    let pair = cs::weyl_pair(&one);
    let w = RationalFunction::new(Polynomial::from_rationals(&[q(8, 1), q(2, 1)], 0), Polynomial::from_rationals(&[q(8, 1), q(1, 1)], 0));
    let z = RationalFunction::new(Polynomial::from_rationals(&[q(4, 1), q(2, 1)], 0), Polynomial::from_rationals(&[q(8, 1), q(1, 1)], 0));
    let same = |a: &RationalFunction<Rational>, b: &RationalFunction<Rational>| a.num.mul(&b.den) == b.num.mul(&a.den);
    if !same(&pair.w, &w) || !same(&pair.z, &z) {
        failures.push("N=1 Weyl functions".to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let points = samples::random_points(8, 20);
    let mut strings = vec![one];
    for n in 1..=5 {
        for sign in [1, -1] {
            strings.push(random_string(&mut rng, n, sign));
        }
    }
    let mut reductions = 0;
    for (i, s) in strings.iter().enumerate() {
        let pair = cs::weyl_pair(s);
        if !cs::concomitant_residual(&pair).num.is_zero() || cs::check_concomitant(&pair, &points).unwrap() != 0 {
            failures.push(format!("string {i}: concomitant"));
        }
        let data = cs::spectral_measures(&pair).unwrap();
        let (a, b) = cs::lambda_systems(&data).unwrap();
        if !cs::plucker_residual(&a, &b).unwrap().num.is_zero() || cs::check_plucker(&a, &b, &points).unwrap() != 0 {
            failures.push(format!("string {i}: Plucker"));
        }
        for n in s.len() + 1..=s.len() + 2 {
            reductions += 1;
            match cs::weyl_problem_to_nikishin(&pair, &data, n) {
                Ok(r) if r.exact_regime && r.residuals_identically_zero && r.passed => {}
                Ok(r) => failures.push(format!("string {i} n={n}: {r:?}")),
                Err(e) => failures.push(format!("string {i} n={n}: {e}")),
            }
        }
    }
    let t = start.elapsed();
    let ok = failures.is_empty() && t < Duration::from_secs(10);
    report(
        8,
        "cubic string",
        ok,
        &format!("W=(8+2z)/(8+z), Z=(4+2z)/(8+z); {} strings N<=5, {reductions} exact reductions, {:.2}s {}", strings.len(), secs(t), failures.join("; ")),
    );
    assert!(ok);
}

#[test]
fn markov_regression() {
    let prec = 256;
    let tol = pow2(-200, prec);
    let leb = Measure::<Float>::lebesgue(q(0, 1), q(1, 1), prec).unwrap();
    let sys = NikishinSystem::build(vec![leb]).unwrap();
    let sol = hp::solve(&sys, 1, Formulation::Ml).unwrap();
    let close = |a: &Float, b: f64| Float::with_val(prec, a - b).abs() < tol;
    let pade_ok = sol.polys[0].degree() == Some(0) && close(&sol.polys[0].coeff(0), 1.0) && close(&sol.polys[1].coeff(0), -0.5) && close(&sol.polys[1].coeff(1), 1.0);
    let ns: Vec<usize> = (1..=8).collect();
    let grid = Grid::around(&sys, &q(1, 4), 21).unwrap();
    let rep = analysis::convergence_table(&sys, &ns, &grid, Exec::Parallel).unwrap();
    let mono = rep.monotone(false) && rep.monotone(true);
    let ok = pade_ok && mono;
    let errs: Vec<String> = rep.series(0, false).iter().map(|p| format!("{:.2e}", p.1)).collect();
    report(9, "m=1 Pade regression", ok, &format!("n=1 gives (1, z - 1/2): {pade_ok}; errors n=1..8 {errs:?} monotone {mono}"));
    assert!(ok);
}

#[test]
fn float_backend_matches_rational() {
    let prec = 256;
    let tol = pow2(-200, prec);
    let mut worst = Float::with_val(prec, 0);
    let mut failures = Vec::new();
    let worked = samples::worked_system();
    let wf = samples::to_float(&worked, prec).unwrap();
    for f in [Formulation::Ml, Formulation::Dr] {
        let a = hp::solve(&worked, 1, f).unwrap();
        let b = hp::solve(&wf, 1, f).unwrap();
        worst = worst.max(&coeff_diff(&a, &b, prec));
    }
    let s = sweep();
    for (i, (sys, cases)) in s.systems.iter().zip(&s.cases).enumerate() {
        let fsys = samples::to_float(sys, prec).unwrap();
        for (&n, case) in ORDERS.iter().zip(cases) {
            let Ok(c) = case else { continue };
            for (f, exact) in [(Formulation::Ml, &c.ml), (Formulation::Dr, &c.dr)] {
                match hp::solve(&fsys, n, f) {
                    Ok(b) => worst = worst.max(&coeff_diff(exact, &b, prec)),
                    Err(e) => failures.push(format!("system {i} n={n} {f}: {e}")),
                }
            }
            if i < 3 {
                let b = hp::solve(&fsys, n, Formulation::Ml).unwrap();
                match hp::check_zero_location(&b, &fsys) {
                    Ok(z) if z.passed => {}
                    Ok(z) => failures.push(format!("system {i} n={n}: float zero location {z:?}")),
                    Err(e) => failures.push(format!("system {i} n={n}: {e}")),
                }
            }
        }
    }
    let ok = failures.is_empty() && worst < tol;
    let log2 = if worst.is_zero() { f64::NEG_INFINITY } else { worst.clone().log2().to_f64() };
    report(10, "256-bit fidelity", ok, &format!("max coefficient error 2^{log2:.1} (< 2^-200) {}", failures.join("; ")));
    assert!(ok);
}

fn coeff_diff(a: &HermitePadeSolution<Rational>, b: &HermitePadeSolution<Float>, prec: u32) -> Float {
    let mut worst = Float::with_val(prec, 0);
    for (p, r) in a.polys.iter().zip(&b.polys) {
        let len = p.coeffs().len().max(r.coeffs().len());
        for i in 0..len {
            let d = Float::with_val(prec, Scalar::to_rational(&r.coeff(i)) - p.coeff(i)).abs();
            worst = worst.max(&d);
        }
    }
    worst
}
