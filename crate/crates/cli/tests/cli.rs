use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nikishin"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nikishin-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).env_remove("NIKISHIN_BACKEND").env_remove("NIKISHIN_JOBS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hp_solve_worked_example() {
    let dir = scratch("hp");
    let o = run(&["hp-solve", "--formulation", "both"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("a_{1,2} = z - 3"), "{text}");
    assert!(text.contains("a_{1,0} = 5/12"));
    assert!(text.contains("equivalence residual 0"));
    let v = json(dir.join("solutions.json"));
    assert_eq!(v["seed"], 0);
    assert_eq!(v["equivalence"][0]["residual"], "0");
    assert_eq!(v["solutions"][0]["polys"][2], serde_json::json!(["-3", "1"]));
}

#[test]
fn overlapping_intervals_exit_2() {
    let dir = scratch("overlap");
    let cfg = dir.join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"system":[{"type":"discrete","atoms":[["1/2","1"]],"interval":[0,2]},
                      {"type":"discrete","atoms":[["3/2","1"]],"interval":[1,3]}]}"#,
    )
    .unwrap();
    let o = run(&["hp-solve", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("overlap"));
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = scratch("cfg");
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, "{\n  \"n_max\": \"three\"\n}\n").unwrap();
    let o = run(&["hp-solve", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = run(&["hp-solve", "--backend", "f7"], &dir);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["hp-solve", "--formulation", "xx"], &dir);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_is_exact_and_detects_perturbation() {
    let dir = scratch("verify");
    let o = run(&["verify", "--seed", "11"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.join("verify.json"));
    assert_eq!(v["seed"], 11);
    let checks = v["report"]["checks"].as_array().unwrap();
    assert!(checks.iter().filter(|c| c["name"] != "biorthogonality_diagonal").all(|c| c["residual"] == "0"));
    let o = run(&["verify", "--perturb", "1e-10"], &dir);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL   fundamental"));
}

#[test]
fn converge_writes_csv_and_svg() {
    let dir = scratch("converge");
    let o = run(&["converge", "--n-max", "3", "--steps", "5"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("n,j,con01,con00\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let svg = std::fs::read_to_string(dir.join("convergence.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn converge_rejects_bad_ranges() {
    let dir = scratch("ranges");
    assert_eq!(run(&["converge", "--margin", "0"], &dir).status.code(), Some(2));
    assert_eq!(run(&["converge", "--n-min", "4", "--n-max", "2"], &dir).status.code(), Some(2));
}

#[test]
fn cubic_string_both_conventions() {
    let dir = scratch("string");
    let o = run(&["cubic-string", "--sign-convention", "both"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.join("cubic_string.json"));
    let reps = v["reports"].as_array().unwrap();
    assert_eq!(reps.len(), 2);
    assert_eq!(reps[0]["W"], "(2*z + 8) / (z + 8)");
    assert_eq!(reps[0]["Z"], "(2*z + 4) / (z + 8)");
    assert_eq!(reps[0]["mu"], serde_json::json!([["-8", "1"], ["0", "1"]]));
    assert_eq!(reps[0]["nu"], serde_json::json!([["-8", "3/2"], ["0", "1/2"]]));
    let red = &reps[0]["reductions"][1];
    assert_eq!(red["n"], 2);
    assert_eq!(red["residuals_identically_zero"], true);
    assert_eq!(red["p_hat_at_zero"], "0");
}

#[test]
fn cubic_string_three_masses() {
    let dir = scratch("string3");
    let cfg = dir.join("s.json");
    std::fs::write(&cfg, r#"{"string":{"atoms":[["-1/2","1"],["1/5","3/2"],["2/3","1/3"]],"sign_convention":-1}}"#).unwrap();
    let o = run(&["cubic-string", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.join("cubic_string.json"));
    assert_eq!(v["reports"][0]["reductions"].as_array().unwrap().len(), 4);
    assert_eq!(v["passed"], true);
}

#[test]
fn outputs_are_deterministic() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    for dir in [&a, &b] {
        assert_eq!(run(&["verify", "--seed", "3", "--jobs", "2"], dir).status.code(), Some(0));
        assert_eq!(run(&["converge", "--n-max", "2", "--steps", "4"], dir).status.code(), Some(0));
    }
    for f in ["verify.json", "convergence.csv", "convergence.svg", "convergence.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn env_overrides_backend() {
    let dir = scratch("env");
    let o = bin().args(["hp-solve", "--out-dir"]).arg(&dir).env("NIKISHIN_BACKEND", "f256").env("NIKISHIN_JOBS", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(dir.join("solutions.json"))["backend"], "f256");
}

#[test]
fn continuous_system_in_float_backend() {
    let dir = scratch("continuous");
    let cfg = dir.join("c.json");
    std::fs::write(
        &cfg,
        r#"{"system":[{"type":"continuous","interval":[0,1]},
                      {"type":"continuous","interval":[2,3],"weight":{"family":"jacobi","alpha":"1/2","beta":"-1/2"}}],
            "backend":"f256","n_max":2,"formulation":"both"}"#,
    )
    .unwrap();
    let o = run(&["hp-solve", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let v = json(dir.join("solutions.json"));
    assert_eq!(v["backend"], "f256");
    assert_eq!(v["solutions"][3]["zero_location"]["form_sign_changes"][0][1], 2);
    let o = run(&["hp-solve", "--config", cfg.to_str().unwrap(), "--backend", "rational"], &dir);
    assert_eq!(o.status.code(), Some(2));
}
