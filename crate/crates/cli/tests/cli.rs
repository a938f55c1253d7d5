use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isodeform"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const IDENTITY_SPEC: &str =
    r#"{"eps1": 1, "eps2": 1, "theta0": 0.0, "profile": {"kind": "closed-form", "name": "identity", "r_max": 2.0}}"#;
const SPIRAL_SPEC: &str = r#"{"eps1": 1, "eps2": 1, "theta0": 0.4,
    "profile": {"kind": "closed-form", "name": "unit-pitch-spiral", "params": {"pitch": 1.0}, "r_max": 2.0}}"#;

#[test]
fn build_identity_and_spiral() {
    let dir = TempDir::new().unwrap();
    for (name, spec) in [("id", IDENTITY_SPEC), ("sp", SPIRAL_SPEC)] {
        let cfg = write(dir.path(), &format!("{name}.json"), spec);
        let pm = dir.path().join(format!("{name}.pm"));
        let out = run(&["build", "--config", s(&cfg), "--out", s(&pm)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["passed"], true);
        assert!(fs::read_to_string(&pm)
            .unwrap()
            .starts_with("polarmap v1 nr 64 ntheta 64\n"));
    }
}

#[test]
fn build_rejects_decreasing_h() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{"eps1": 1, "eps2": 1, "theta0": 0.0, "profile": {"kind": "table",
        "rows": [[0.0, 0.0, 1.0, 0.0], [0.5, 0.5, 1.0, 0.25], [1.0, 1.0, 1.0, 0.2], [1.5, 1.5, 1.0, 0.1]]}}"#;
    let cfg = write(dir.path(), "bad.json", spec);
    let out = run(&["build", "--config", s(&cfg), "--out", s(&dir.path().join("bad.pm"))]);
    assert_eq!(code(&out), 2);
    let report = json(&out);
    assert_eq!(report["passed"], false);
    let names: Vec<String> = report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["condition"].as_str().unwrap().to_string())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("(i)")), "{names:?}");
}

#[test]
fn build_rejects_malformed_spec() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "x.json", "{\"eps1\": 3}");
    let out = run(&["build", "--config", s(&cfg), "--out", s(&dir.path().join("x.pm"))]);
    assert_eq!(code(&out), 2);
    let missing = run(&["build", "--config", "/nonexistent/spec.json", "--out", "/tmp/never.pm"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn classify_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sp.json", SPIRAL_SPEC);
    let pm = dir.path().join("sp.pm");
    assert_eq!(code(&run(&["build", "--config", s(&cfg), "--out", s(&pm)])), 0);
    let out = run(&["classify", "--map", s(&pm)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["is_spiral"], true);
    assert_eq!(v["eps1"], 1);
    assert!((v["theta0"].as_f64().unwrap() - 0.4).abs() < 1e-6);

    let id = dir.path().join("id.pm");
    assert_eq!(code(&run(&["sample", "--map", "identity", "--out", s(&id)])), 0);
    assert_eq!(code(&run(&["classify", "--map", s(&id)])), 0);

    let sc = dir.path().join("sc.pm");
    assert_eq!(code(&run(&["sample", "--map", "scaling", "--out", s(&sc)])), 0);
    let out = run(&["classify", "--map", s(&sc)]);
    assert_eq!(code(&out), 1);
    assert!(json(&out)["diagnostics"]["radius_radiality"].as_f64().unwrap() >= 0.1);
}

#[test]
fn classify_rejects_malformed_grid() {
    let dir = TempDir::new().unwrap();
    let pm = write(dir.path(), "bad.pm", "polarmap v1 nr 2 ntheta 4\n0 0 0 0\n");
    assert_eq!(code(&run(&["classify", "--map", s(&pm)])), 2);
    let garbage = write(dir.path(), "g.pm", "hello\n");
    assert_eq!(code(&run(&["classify", "--map", s(&garbage)])), 2);
}

#[test]
fn residual_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sp.json", SPIRAL_SPEC);
    let pm = dir.path().join("sp.pm");
    assert_eq!(code(&run(&["build", "--config", s(&cfg), "--out", s(&pm)])), 0);
    let prof = write(
        dir.path(),
        "sp.profile",
        "profile v1\nr_max 2\nclosed-form unit-pitch-spiral pitch=1\n",
    );
    let out = run(&["residuals", "--map", s(&pm), "--profile", s(&prof)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert!(v["max"].as_f64().unwrap() <= 1e-6);
    assert!(v["residuals"]["scalar_product"]["argmax"].as_array().unwrap().len() == 2);

    let id = dir.path().join("id.pm");
    assert_eq!(code(&run(&["sample", "--map", "identity", "--out", s(&id)])), 0);
    let idp = write(dir.path(), "id.profile", "profile v1\nr_max 2\nclosed-form identity\n");
    assert_eq!(code(&run(&["residuals", "--map", s(&id), "--profile", s(&idp)])), 0);

    let sc = dir.path().join("sc.pm");
    assert_eq!(code(&run(&["sample", "--map", "scaling", "--out", s(&sc)])), 0);
    assert_eq!(code(&run(&["residuals", "--map", s(&sc), "--profile", s(&idp)])), 1);

    let out = run(&[
        "residuals",
        "--map",
        s(&sc),
        "--profile",
        s(&idp),
        "--scheme",
        "analytic",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn geometry_examples() {
    let dir = TempDir::new().unwrap();
    let spiral = write(
        dir.path(),
        "sp.json",
        r#"{"map": "unit-pitch-spiral",
            "shapes": [{"kind": "rect", "center": [1.0, 0.0], "halfwidths": [0.5, 0.5]}],
            "rotations": [0.4487989505128276, 1.0471975511965976, 2.5132741228718345]}"#,
    );
    let out = run(&["geometry", "--config", s(&spiral)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["reports"][0]["transform-id"], "unit-pitch-spiral");

    let id = write(
        dir.path(),
        "id.json",
        r#"{"map": "identity", "tol_rel": 1e-9,
            "shapes": [{"kind": "segment", "start": [0, 0], "end": [1, 2]}],
            "rotations": {"seed": 1, "count": 8}}"#,
    );
    assert_eq!(code(&run(&["geometry", "--config", s(&id)])), 0);

    let sc = write(
        dir.path(),
        "sc.json",
        r#"{"map": "scaling", "shapes": [{"kind": "segment", "start": [0, 0], "end": [1, 0]}],
            "rotations": [1.5707963267948966]}"#,
    );
    let out = run(&["geometry", "--config", s(&sc), "--format", "csv"]);
    assert_eq!(code(&out), 1);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("shape,rotation,value,rel_spread,pass\n0,0,2,"));
}

fn isotropy_config(map: &str, replicates: usize) -> String {
    format!(
        r#"{{"field": {{"law": "rayleigh", "params": {{"sigma": 2.0}}, "n_harmonics": 50, "seed": 11}},
            "map": {map}, "rect": {{"center": [2.0, 0.0], "halfwidths": [0.5, 0.5]}},
            "levels": [-1.0, 0.0, 1.0], "rotations": [0.0, 0.6283185307179586, 1.5707963267948966],
            "replicates": {replicates}, "resolution": 32}}"#
    )
}

#[test]
fn isotropy_is_deterministic_across_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sp.json", &isotropy_config("\"unit-pitch-spiral\"", 40));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let masks = dir.path().join("masks");
    let one = run(&[
        "isotropy",
        "--config",
        s(&cfg),
        "--workers",
        "1",
        "--out",
        s(&a),
        "--dump-masks",
        s(&masks),
    ]);
    assert!(code(&one) <= 1, "{}", String::from_utf8_lossy(&one.stderr));
    let four = run(&["isotropy", "--config", s(&cfg), "--workers", "4", "--out", s(&b)]);
    assert_eq!(code(&one), code(&four));
    let csv = fs::read(&a).unwrap();
    assert_eq!(csv, fs::read(&b).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("u,rotation,mean_chi,std_err,z,pass\n"));
    assert_eq!(text.lines().count(), 10);
    assert_eq!(fs::read_dir(&masks).unwrap().count(), 9);
    let pgm = fs::read(masks.join("mask_u0_rot0.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n255\n"));
}

#[test]
fn isotropy_identity_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "id.json", &isotropy_config("\"identity\"", 200));
    let out = run(&["isotropy", "--config", s(&cfg), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn isotropy_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", &isotropy_config("\"twirl\"", 10));
    assert_eq!(code(&run(&["isotropy", "--config", s(&cfg)])), 2);
    let no_zero = isotropy_config("\"identity\"", 10).replace("[0.0, 0.6283", "[0.1, 0.6283");
    let cfg = write(dir.path(), "nz.json", &no_zero);
    assert_eq!(code(&run(&["isotropy", "--config", s(&cfg)])), 2);
}

#[test]
fn euler_of_text_and_pgm_masks() {
    let dir = TempDir::new().unwrap();
    let ring = write(dir.path(), "ring.txt", "###\n#.#\n###\n");
    let out = run(&["euler", "--mask", s(&ring)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["euler"], 0);
    let mut pgm = b"P5\n2 2\n255\n".to_vec();
    pgm.extend_from_slice(&[255, 0, 0, 255]);
    let p = dir.path().join("diag.pgm");
    fs::write(&p, pgm).unwrap();
    assert_eq!(json(&run(&["euler", "--mask", s(&p)]))["euler"], 1);
    let bad = write(dir.path(), "bad.txt", "#?\n");
    assert_eq!(code(&run(&["euler", "--mask", s(&bad)])), 2);
}

#[test]
fn manual_page_lists_subcommands() {
    let out = run(&["manual"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["build", "classify", "residuals", "geometry", "isotropy", "euler"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
