use std::path::{Path, PathBuf};

use nikishin::analysis::{self, Grid};
use nikishin::config::{Backend, RunConfig, SampleName, StringConfig, SystemConfig, Q};
use nikishin::cubic_string as cs;
use nikishin::hermite_pade::{self as hp, Formulation, HermitePadeSolution};
use nikishin::nikishin::NikishinSystem;
use nikishin::par::Exec;
use nikishin::poly::Polynomial;
use nikishin::report;
use nikishin::samples;
use nikishin::scalar::{parse_rational, Cx, Scalar, DEFAULT_PREC};
use nikishin::verify::{self, VerifyOptions};
use rug::{Float, Rational};
use serde_json::{json, Value};

use clap::ValueEnum;

use crate::FormulationArg;

pub enum Failure {
    Usage(String),
    Check(String),
}

type Outcome = std::result::Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}
fn check(e: impl std::fmt::Display) -> Failure {
    Failure::Check(e.to_string())
}

pub struct Context {
    pub cfg: RunConfig,
    pub backend: Backend,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub formulation: FormulationArg,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
    pub exec: Exec,
}

impl Context {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: Option<&Path>,
        backend: Option<&str>,
        n_min: Option<usize>,
        n_max: Option<usize>,
        formulation: Option<FormulationArg>,
        seed: Option<u64>,
        out_dir: Option<PathBuf>,
        jobs: Option<usize>,
    ) -> nikishin::Result<Self> {
        let cfg = match config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let backend = match backend {
            Some(b) => b.parse()?,
            None => cfg.backend.unwrap_or(Backend::Rational),
        };
        let formulation = match (formulation, cfg.formulation.as_deref()) {
            (Some(f), _) => f,
            (None, None) => FormulationArg::Ml,
            (None, Some(s)) => FormulationArg::from_str(s, true).map_err(|_| nikishin::Error::Config(format!("formulation must be ml, dr or both, got {s:?}")))?,
        };
        if jobs == Some(0) {
            return Err(nikishin::Error::Config("--jobs must be at least 1".into()));
        }
        Ok(Self {
            n_min: n_min.or(cfg.n_min),
            n_max: n_max.or(cfg.n_max),
            seed: seed.or(cfg.seed).unwrap_or(0),
            out_dir: out_dir.or_else(|| cfg.out_dir.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out")),
            exec: if jobs == Some(1) { Exec::Sequential } else { Exec::Parallel },
            cfg,
            backend,
            formulation,
            jobs,
        })
    }

    fn system_config(&self, default: SampleName) -> SystemConfig {
        self.cfg.system.clone().unwrap_or(SystemConfig::Sample(default))
    }

    fn build_system<S: Scalar>(&self, default: SampleName, prec: u32) -> std::result::Result<NikishinSystem<S>, Failure> {
        self.cfg.check_backend(self.backend).map_err(usage)?;
        self.system_config(default).build(prec).map_err(usage)
    }

    fn range(&self, default_max: usize) -> std::result::Result<Vec<usize>, Failure> {
        let lo = self.n_min.unwrap_or(1);
        let hi = self.n_max.unwrap_or(default_max.max(lo));
        if lo == 0 {
            return Err(usage("n must start at 1"));
        }
        if lo > hi {
            return Err(usage(format!("empty n range {lo}..={hi}")));
        }
        Ok((lo..=hi).collect())
    }

    fn formulations(&self) -> Vec<Formulation> {
        match self.formulation {
            FormulationArg::Ml => vec![Formulation::Ml],
            FormulationArg::Dr => vec![Formulation::Dr],
            FormulationArg::Both => vec![Formulation::Ml, Formulation::Dr],
        }
    }

    fn write(&self, name: &str, contents: &str) -> Outcome {
        let path = report::write_file(&self.out_dir, name, contents).map_err(usage)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn header(ctx: &Context, command: &str) -> Value {
    json!({ "command": command, "backend": ctx.backend.to_string(), "seed": ctx.seed })
}

fn describe_system<S: Scalar>(sys: &NikishinSystem<S>) -> Value {
    json!({
        "m": sys.m(),
        "intervals": sys.intervals().iter().map(|i| i.to_string()).collect::<Vec<_>>(),
        "atoms": sys.generators().iter().map(|g| g.atom_count()).collect::<Vec<_>>(),
    })
}

fn show_poly<S: Scalar>(p: &Polynomial<S>) -> String {
    if S::EXACT {
        return p.to_string();
    }
    let terms: Vec<String> = p.coeffs().iter().enumerate().rev().map(|(i, c)| format!("{:+.6e}*z^{i}", c.to_f64())).collect();
    terms.join(" ")
}

fn dispatch<F>(backend: Backend, rational: impl FnOnce(u32) -> F, float: impl FnOnce(u32) -> F) -> F {
    match backend {
        Backend::Rational => rational(0),
        Backend::Float(bits) => float(bits),
    }
}

pub fn hp_solve(ctx: &Context) -> Outcome {
    dispatch(ctx.backend, |p| hp_solve_in::<Rational>(ctx, p), |p| hp_solve_in::<Float>(ctx, p))
}

fn solution_entry<S: Scalar>(sys: &NikishinSystem<S>, sol: &HermitePadeSolution<S>, prec: u32) -> (Value, Vec<String>) {
    let mut failures = Vec::new();
    let mut entry = sol.to_json();
    if !sol.orders_ok() {
        failures.push(format!("n={} {}: interpolation orders {:?}", sol.n, sol.formulation, sol.verified_orders));
    }
    match hp::leading_relation_residuals(sol, sys) {
        Ok(r) => {
            let ok = r.iter().all(|v| v.negligible(&S::one(prec.max(1))));
            if !ok {
                failures.push(format!("n={} {}: leading-coefficient relation", sol.n, sol.formulation));
            }
            entry["leading_relation"] = json!(r.iter().map(|v| v.to_repr()).collect::<Vec<_>>());
        }
        Err(e) => failures.push(format!("n={}: leading relation: {e}", sol.n)),
    }
    match hp::check_zero_location(sol, sys) {
        Ok(z) => {
            if !z.passed {
                failures.push(format!("n={} {}: zero location", sol.n, sol.formulation));
            }
            entry["zero_location"] = json!(z);
        }
        Err(e) => failures.push(format!("n={}: zero location: {e}", sol.n)),
    }
    if sys.m() >= 2 && sys.min_atom_count().is_some() {
        match hp::check_multipoint(sol, sys, if S::EXACT { DEFAULT_PREC } else { prec }) {
            Ok(r) => {
                if !r.passed {
                    failures.push(format!("n={} {}: multipoint structure", sol.n, sol.formulation));
                }
                entry["multipoint"] = json!(r);
            }
            Err(e) => failures.push(format!("n={}: multipoint: {e}", sol.n)),
        }
    }
    (entry, failures)
}

fn hp_solve_in<S: Scalar>(ctx: &Context, prec: u32) -> Outcome {
    let sys: NikishinSystem<S> = ctx.build_system(SampleName::Worked, prec)?;
    let ns = ctx.range(sys.min_atom_count().unwrap_or(5).min(5))?;
    let forms = ctx.formulations();
    let jobs: Vec<(usize, Formulation)> = ns.iter().flat_map(|&n| forms.iter().map(move |&f| (n, f))).collect();
    let sols = nikishin::par::map(ctx.exec, &jobs, |&(n, f)| hp::solve(&sys, n, f));
    let mut results = Vec::new();
    let mut failures = Vec::new();
    println!("{:>3}  {:<3}  {:<6}  {:<6}  {:<6}  polynomials", "n", "fml", "orders", "zeros", "mp");
    for ((n, f), sol) in jobs.iter().zip(sols) {
        match sol {
            Ok(sol) => {
                let (entry, fails) = solution_entry(&sys, &sol, prec);
                let flag = |k: &str| entry.get(k).and_then(|v| v.get("passed")).and_then(Value::as_bool).map_or("-", |b| if b { "ok" } else { "FAIL" });
                println!("{n:>3}  {f:<3}  {:<6}  {:<6}  {:<6}", if sol.orders_ok() { "ok" } else { "FAIL" }, flag("zero_location"), flag("multipoint"));
                for (j, p) in sol.polys.iter().enumerate() {
                    println!("       a_{{{n},{j}}} = {}", show_poly(p));
                }
                failures.extend(fails);
                results.push(entry);
            }
            Err(e) => {
                println!("{n:>3}  {f:<3}  error: {e}");
                failures.push(format!("n={n} {f}: {e}"));
                results.push(json!({ "n": n, "formulation": f, "error": e.to_string() }));
            }
        }
    }
    let mut equivalence = Vec::new();
    if ctx.formulation == FormulationArg::Both {
        for &n in &ns {
            match hp::check_dr_ml_equivalence(&sys, n) {
                Ok(r) => {
                    println!("n={n}: DR/ML equivalence residual {}", r.to_repr());
                    if !r.negligible(&S::one(prec.max(1))) {
                        failures.push(format!("n={n}: DR and ML differ"));
                    }
                    equivalence.push(json!({ "n": n, "residual": r.to_repr() }));
                }
                Err(e) => failures.push(format!("n={n}: equivalence: {e}")),
            }
        }
    }
    let mut out = header(ctx, "hp-solve");
    out["system"] = describe_system(&sys);
    out["solutions"] = json!(results);
    out["equivalence"] = json!(equivalence);
    out["failures"] = json!(failures);
    out["passed"] = json!(failures.is_empty());
    ctx.write("solutions.json", &report::to_json(&out).map_err(usage)?)?;
    finish(failures)
}

fn finish(failures: Vec<String>) -> Outcome {
    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(check(failures.join("; ")))
    }
}

pub fn verify(ctx: &Context, perturb: Option<&str>) -> Outcome {
    let perturb = perturb.map(|p| parse_rational(p).ok_or_else(|| usage(format!("cannot read perturbation {p:?}")))).transpose()?;
    dispatch(ctx.backend, |p| verify_in::<Rational>(ctx, p, perturb.clone()), |p| verify_in::<Float>(ctx, p, perturb.clone()))
}

fn verify_in<S: Scalar>(ctx: &Context, prec: u32, perturb: Option<Rational>) -> Outcome {
    let sys: NikishinSystem<S> = ctx.build_system(SampleName::Reference, prec)?;
    let opts = VerifyOptions { seed: ctx.seed, perturb, exec: ctx.exec, ..Default::default() };
    let rep = verify::identity_battery(&sys, &opts).map_err(check)?;
    for c in &rep.checks {
        println!("{:<6} {:<26} {:<10} residual {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.params, c.residual);
    }
    let mut out = header(ctx, "verify");
    out["system"] = describe_system(&sys);
    out["report"] = json!(rep);
    ctx.write("verify.json", &report::to_json(&out).map_err(usage)?)?;
    finish(rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{} {}", c.name, c.params)).collect())
}

pub fn converge(ctx: &Context, margin: Option<&str>, steps: Option<usize>) -> Outcome {
    let grid_cfg = ctx.cfg.grid.clone().unwrap_or_default();
    let margin = match margin {
        Some(m) => Q(parse_rational(m).ok_or_else(|| usage(format!("cannot read margin {m:?}")))?),
        None => grid_cfg.margin,
    };
    if margin.0 <= 0 {
        return Err(usage("grid margin must be positive"));
    }
    let steps = steps.unwrap_or(grid_cfg.steps);
    if steps < 2 {
        return Err(usage("grid needs at least 2 steps per side"));
    }
    dispatch(ctx.backend, |p| converge_in::<Rational>(ctx, p, &margin.0, steps), |p| converge_in::<Float>(ctx, p, &margin.0, steps))
}

fn converge_in<S: Scalar>(ctx: &Context, prec: u32, margin: &Rational, steps: usize) -> Outcome {
    let sys: NikishinSystem<S> = ctx.build_system(SampleName::Reference, prec)?;
    let ns = ctx.range(5)?;
    let grid = Grid::around(&sys, margin, steps).map_err(usage)?;
    let rep = analysis::convergence_table(&sys, &ns, &grid, ctx.exec).map_err(check)?;
    println!("{:>3} {:>3} {:>14} {:>14}", "n", "j", "con01", "con00");
    for r in &rep.rows {
        println!("{:>3} {:>3} {:>14.6e} {:>14.6e}", r.n, r.j, r.con01, r.con00);
    }
    let mut failures = Vec::new();
    if !rep.monotone(false) {
        failures.push("con01 errors are not monotone in n".to_string());
    }
    if !rep.monotone(true) {
        failures.push("con00 errors are not monotone in n".to_string());
    }
    failures.extend(rep.multipoint.iter().filter(|m| !m.passed).map(|m| format!("n={}: multipoint structure", m.n)));
    let mut out = header(ctx, "converge");
    out["system"] = describe_system(&sys);
    out["report"] = json!(rep);
    out["monotone_con01"] = json!(rep.monotone(false));
    out["monotone_con00"] = json!(rep.monotone(true));
    out["passed"] = json!(failures.is_empty());
    ctx.write("convergence.csv", &rep.to_csv())?;
    ctx.write("convergence.svg", &report::convergence_svg(&rep))?;
    ctx.write("convergence.json", &report::to_json(&out).map_err(usage)?)?;
    finish(failures)
}

fn measure_atoms(m: &nikishin::measures::Measure<Rational>) -> Value {
    json!(m.atoms().unwrap_or(&[]).iter().map(|(x, w)| [x.to_string(), w.to_string()]).collect::<Vec<_>>())
}

fn string_report(s: &cs::DiscreteCubicString, ns: Option<&[usize]>, seed: u64, failures: &mut Vec<String>) -> nikishin::Result<Value> {
    let tag = format!("convention {:+}", s.sign_convention);
    let ev = cs::eigenvalues(s)?;
    if !(ev.all_real && ev.simple) {
        failures.push(format!("{tag}: spectrum not real and simple"));
    }
    let mut out = json!({
        "sign_convention": s.sign_convention,
        "masses": s.atoms.iter().map(|(y, g)| [y.to_string(), g.to_string()]).collect::<Vec<_>>(),
        "eigenvalues": ev,
    });
    if s.is_empty() {
        return Ok(out);
    }
    let pair = cs::weyl_pair(s);
    let (w, z) = pair.describe();
    let points: Vec<Cx<Rational>> = samples::random_points(seed, 20);
    let conc_exact = cs::concomitant_residual(&pair).num.is_zero();
    let conc = cs::check_concomitant(&pair, &points)?;
    if !conc_exact || conc != 0 {
        failures.push(format!("{tag}: concomitant identity"));
    }
    let data = cs::spectral_measures(&pair)?;
    let (direct, reverse) = cs::lambda_systems(&data)?;
    let pl_exact = cs::plucker_residual(&direct, &reverse)?.num.is_zero();
    let pl = cs::check_plucker(&direct, &reverse, &points)?;
    if !pl_exact || pl != 0 {
        failures.push(format!("{tag}: Plucker identity"));
    }
    let big_n = s.len();
    let default: Vec<usize> = (1..=big_n + 1).collect();
    let mut reductions = Vec::new();
    for &n in ns.unwrap_or(&default) {
        match cs::weyl_problem_to_nikishin(&pair, &data, n) {
            Ok(r) => {
                if !r.passed {
                    failures.push(format!("{tag}: reduction at n={n}"));
                }
                reductions.push(json!(r));
            }
            Err(e) => {
                failures.push(format!("{tag}: reduction at n={n}: {e}"));
                reductions.push(json!({ "n": n, "error": e.to_string() }));
            }
        }
    }
    out["W"] = json!(w);
    out["Z"] = json!(z);
    out["mu"] = measure_atoms(&data.mu);
    out["nu"] = measure_atoms(&data.nu);
    out["concomitant"] = json!({ "identically_zero": conc_exact, "max_residual": conc.to_string() });
    out["nu_formula"] = json!(cs::check_nu_formula(&data)?);
    out["lambda1"] = measure_atoms(direct.generator(1));
    out["lambda2"] = measure_atoms(direct.generator(2));
    out["plucker"] = json!({ "identically_zero": pl_exact, "max_residual": pl.to_string() });
    out["reductions"] = json!(reductions);
    Ok(out)
}

pub fn cubic_string(ctx: &Context, sign: Option<&str>) -> Outcome {
    let scfg = ctx.cfg.string.clone().unwrap_or(StringConfig { atoms: vec![(Q(Rational::new()), Q(Rational::from(1)))], sign_convention: 1 });
    let base = scfg.build().map_err(usage)?;
    let signs: Vec<i32> = match sign.map(str::trim) {
        None => vec![base.sign_convention],
        Some("both") => vec![1, -1],
        Some("1") | Some("+1") => vec![1],
        Some("-1") => vec![-1],
        Some(other) => return Err(usage(format!("sign convention must be 1, -1 or both, got {other:?}"))),
    };
    let ns = if ctx.n_min.is_some() || ctx.n_max.is_some() { Some(ctx.range(base.len() + 1)?) } else { None };
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for s in signs {
        let string = base.with_convention(s).map_err(usage)?;
        let rep = string_report(&string, ns.as_deref(), ctx.seed, &mut failures).map_err(check)?;
        println!("convention {s:+}: N={} W = {} ; Z = {}", string.len(), rep["W"].as_str().unwrap_or("-"), rep["Z"].as_str().unwrap_or("-"));
        if let Some(rs) = rep["reductions"].as_array() {
            for r in rs {
                println!(
                    "  n={} exact_regime={} passed={}",
                    r["n"],
                    r.get("exact_regime").unwrap_or(&Value::Null),
                    r.get("passed").unwrap_or(&Value::Bool(false))
                );
            }
        }
        reports.push(rep);
    }
    let mut out = header(ctx, "cubic-string");
    out["backend"] = json!("rational");
    out["reports"] = json!(reports);
    out["failures"] = json!(failures);
    out["passed"] = json!(failures.is_empty());
    ctx.write("cubic_string.json", &report::to_json(&out).map_err(usage)?)?;
    finish(failures)
}
