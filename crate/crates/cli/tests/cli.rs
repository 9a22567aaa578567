use mwlab::grid::{lift_vector_field, DyadicDomain, VectorField};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn mwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwlab")).args(args).env("MWLAB_THREADS", "2").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_sign_flip(path: &Path) {
    let dom = DyadicDomain::new(1, vec![-1.0], 2.0, 3).unwrap();
    let f = VectorField::from_fn(&dom, 2, |x| if x[0] >= 0.0 { vec![1.0, 1.0] } else { vec![-1.0, 1.0] }).unwrap();
    lift_vector_field(&f).save(path).unwrap();
}

fn rotating_weight(dir: &Path) -> std::path::PathBuf {
    let w = dir.join("w.json");
    let o = mwlab(&["gen-weight", "--kind", "rotating", "--level", "4", "--omega", "3.141592653589793", "--out", s(&w)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    w
}

#[test]
fn ap_constant_is_deterministic_and_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let w = rotating_weight(dir.path());
    let a = mwlab(&["ap-constant", "--weight", s(&w), "--p", "1.5"]);
    let b = mwlab(&["ap-constant", "--weight", s(&w), "--p", "1.5"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["command"], "ap-constant");
    assert_eq!(v["result"]["variant"], "reducing");
    assert!(v["result"]["constant"].as_f64().unwrap() >= 1.0);
    assert!(v["config"]["weight"].is_string());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let w = rotating_weight(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, format!("{{\"weight\": {:?}, \"p\": 2, \"variant\": \"roudenko\"}}", s(&w))).unwrap();
    let v = json(&mwlab(&["ap-constant", "--config", s(&cfg), "--p", "3"]));
    assert_eq!(v["result"]["variant"], "roudenko");
    assert_eq!(v["config"]["p"].as_f64(), Some(3.0));

    std::fs::write(&cfg, "{\"bogus\": 1}").unwrap();
    assert_eq!(code(&mwlab(&["ap-constant", "--config", s(&cfg)])), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let w = rotating_weight(dir.path());
    assert_eq!(code(&mwlab(&["no-such-command"])), 64);
    assert_eq!(code(&mwlab(&["ap-constant", "--p", "2"])), 64);
    assert_eq!(code(&mwlab(&["ap-constant", "--weight", s(&w), "--p", "abc"])), 64);
    assert_eq!(code(&mwlab(&["ap-constant", "--weight", s(&dir.path().join("missing.json")), "--p", "2"])), 2);
    assert_eq!(code(&mwlab(&["ap-constant", "--weight", s(&w), "--p", "2", "--variant", "a1"])), 2);
    let out = dir.path().join("nope").join("r.json");
    assert_eq!(code(&mwlab(&["ap-constant", "--weight", s(&w), "--p", "2", "--out", s(&out)])), 2);
    assert_eq!(code(&mwlab(&["--help"])), 0);
}

#[test]
fn maximal_writes_square_svg() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    write_sign_flip(&f);
    let svg = dir.path().join("m.svg");
    let v = json(&mwlab(&["maximal", "--setfn", s(&f), "--svg", s(&svg)]));
    assert_eq!(v["result"]["setfn"]["cells"].as_array().unwrap().len(), 8);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polygon").count(), 8);
    assert!(text.starts_with("<svg"));
    let again = dir.path().join("m2.svg");
    json(&mwlab(&["maximal", "--setfn", s(&f), "--svg", s(&again)]));
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn john_reports_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    write_sign_flip(&f);
    let m = dir.path().join("m.json");
    let full = json(&mwlab(&["maximal", "--setfn", s(&f)]));
    std::fs::write(&m, full["result"]["setfn"].to_string()).unwrap();
    let v = json(&mwlab(&["john", "--setfn", s(&m)]));
    let cells = v["result"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 8);
    assert!(cells.iter().all(|c| c["inner_ok"] == true && c["outer_ok"] == true));
    assert_eq!(code(&mwlab(&["john", "--setfn", s(&f)])), 2);
}

#[test]
fn rdf_properties_pass() {
    let dir = tempfile::tempdir().unwrap();
    let w = rotating_weight(dir.path());
    let v = json(&mwlab(&["rdf", "--weight", s(&w), "--p", "2"]));
    assert_eq!(v["result"]["pass"], true);
}

#[test]
fn factorize_then_reverse_recovers_weight() {
    let dir = tempfile::tempdir().unwrap();
    let w = rotating_weight(dir.path());
    let out = dir.path().join("fac");
    let o = mwlab(&["factorize", "--weight", s(&w), "--p", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["w0.json", "w1.json", "rbar.json", "report.json"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(rep["result"]["product_residual"].as_f64().unwrap() <= 1e-12);

    let v = json(&mwlab(&["reverse-factorize", "--w0", s(&out.join("w0.json")), "--w1", s(&out.join("w1.json")), "--q0", "1", "--q1", "inf", "--t", "0.5"]));
    let back = mwlab::grid::MatrixWeight::from_json(&v["result"]["weight"].to_string()).unwrap();
    let orig = mwlab::grid::MatrixWeight::load(&w).unwrap();
    for i in 0..orig.len() {
        assert!((back.cell(i).mat() - orig.cell(i).mat()).max_abs() <= 1e-10);
    }
}

#[test]
fn extrapolate_reports_provable_chain() {
    let dir = tempfile::tempdir().unwrap();
    let w = rotating_weight(dir.path());
    let v = json(&mwlab(&["extrapolate", "--weight", s(&w), "--p", "3", "--p0", "2"]));
    assert_eq!(v["result"]["case"], "III");
    assert_eq!(v["result"]["provable_holds"], true);
}

#[test]
fn demo_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo.csv");
    let o = mwlab(&["demo", "--p", "2", "--p0", "2", "--level", "3", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "weight_id,W_Ap,case,W0_Ap0,hypothesis_ratio,conclusion_ratio,K_p_envelope,slack");
    assert_eq!(lines.count(), 10);
}
