use std::path::Path;
use std::process::{Command, Output};

fn infolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infolab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value_of(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no line {key:?} in\n{text}"));
    line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn measure_mask_on_study() {
    let o = infolab(&["measure", "--model", "study", "--encoder", r#"{"type":"mask","coords":[1]}"#]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value_of(&out, "MIL") - 0.650).abs() < 1.5e-3);
    assert!((value_of(&out, "I(X;Y)") - 1.182).abs() < 1e-3);
    assert!((value_of(&out, "H(Y|X)") - 0.303532).abs() < 1e-5);
}

#[test]
fn measure_writes_json_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let o = infolab(&[
        "measure",
        "--model",
        "2d-singular",
        "--encoder",
        r#"{"type":"selector","coords":[1]}"#,
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 4);
    for r in recs {
        for k in ["measure", "value_bits", "model_id", "encoder_id"] {
            assert!(r.get(k).is_some(), "{r}");
        }
    }
}

#[test]
fn nats_output() {
    let o = infolab(&["validate", "--model", "2d-singular", "--units", "nats"]);
    assert!(o.status.success());
    assert!((value_of(&stdout(&o), "I(X;Y)") - std::f64::consts::LN_2).abs() < 1e-6);
}

#[test]
fn validate_rejects_unnormalized_prior() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"dims":[[0,1]],"classes":2,"prior":[0.5,0.6],
            "cells":[{"index":[1],"class":1,"p":1},{"index":[1],"class":2,"p":1}]}"#,
    )
    .unwrap();
    let o = infolab(&["validate", "--model", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ProbabilityNotNormalized"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(infolab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(infolab(&["measure"]).status.code(), Some(2));
    assert_eq!(infolab(&["train", "--model", "study", "--n", "10", "--arch", "mlp7"]).status.code(), Some(2));
    assert_eq!(infolab(&[]).status.code(), Some(2));
}

#[test]
fn unknown_model_is_a_domain_error() {
    let o = infolab(&["validate", "--model", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_is_seed_determined() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (p, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        let o = infolab(&["sample", "--model", "3d-demo", "--n", "50", "--seed", seed, "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    assert_ne!(ta, std::fs::read_to_string(&c).unwrap());
    assert_eq!(ta.lines().next().unwrap(), "x1,x2,x3,y");
    assert_eq!(ta.lines().count(), 51);
}

#[test]
fn decompose_optimal_has_no_decoder_effect() {
    let o = infolab(&["decompose", "--model", "3d-demo", "--encoder", r#"{"type":"selector","coords":[1,2]}"#]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let total = value_of(&out, "total");
    let h = value_of(&out, "H(Y|X)");
    let enc = value_of(&out, "encoder effect");
    assert!(value_of(&out, "decoder effect").abs() < 1e-6);
    assert!((total - h - enc).abs() < 1e-5);
}

#[test]
fn layers_of_a_chain() {
    let enc = r#"{"type":"chain","layers":[
        {"type":"cells"},
        {"type":"cells","relabel":true,"groups":[
            {"index":[1,1],"group":0},{"index":[1,2],"group":1},
            {"index":[2,1],"group":1},{"index":[2,2],"group":0}]}]}"#;
    let o = infolab(&["layers", "--model", "2d-singular", "--encoder", enc]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("layer 2"));
}

#[test]
fn ib_and_dyadic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let ib = dir.path().join("ib.csv");
    let o = infolab(&["ib", "--model", "2d-singular", "--solver", "exhaustive", "--points", "4", "--out", ib.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&ib).unwrap();
    assert_eq!(text.lines().next().unwrap(), "B_bits,H_U_bits,I_UY_bits,loss_bits,solver,groups,model");
    assert_eq!(text.lines().count(), 6);

    let dy = dir.path().join("d.csv");
    let o = infolab(&["dyadic", "--model", "2d-demo", "--m-max", "3", "--out", dy.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&dy).unwrap().lines().count(), 4);
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ib.csv");
    let o = infolab(&["ib", "--model", "study", "--solver", "exhaustive", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!p.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn train_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.csv");
    let args = [
        "train", "--model", "study-bar", "--n", "300", "--epochs", "2", "--val-size", "500", "--seed", "5",
        "--pre-encoder", r#"{"type":"selector","coords":[1,2,3,4,5]}"#, "--out", p.to_str().unwrap(),
    ];
    let o = infolab(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read_to_string(&p).unwrap();
    assert_eq!(first.lines().count(), 3);
    assert!(first.starts_with("model_id,arch,n,pre_encoder,seed,epoch,train_loss_bits,val_risk_bits,val_se_bits"));
    infolab(&args);
    assert_eq!(first, std::fs::read_to_string(&p).unwrap());
}

fn assert_file(dir: &Path, name: &str) -> String {
    let p = dir.join(name);
    assert!(p.exists(), "{} missing", p.display());
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn reproduce_fig2_small() {
    let dir = tempfile::tempdir().unwrap();
    let o = infolab(&[
        "reproduce", "fig2", "--desk", "--out", dir.path().to_str().unwrap(),
        "--model", "study-bar", "--arch", "mlp32", "--n", "200", "--epochs", "2",
        "--seeds", "2", "--val-size", "400",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("self-checks"));
    assert!(!out.contains("FAILED"), "{out}");
    let fig2 = assert_file(dir.path(), "fig2.csv");
    assert_eq!(
        fig2.lines().next().unwrap(),
        "model,arch,n,pre_encoder,seed_avg,epoch,val_risk_bits,href_bits,val_se_bits"
    );
    // 2 pre-encoder variants x 2 epochs
    assert_eq!(fig2.lines().count(), 5);
    assert_file(dir.path(), "runs.csv");
    assert_file(dir.path(), "self_checks.json");
}

#[test]
fn reproduce_measures_and_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = infolab(&["reproduce", "measures", "--out", d, "--model", "study", "--model", "3d-demo"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = assert_file(dir.path(), "measures.csv");
    assert_eq!(csv.lines().next().unwrap(), "measure,value_bits,stderr,model_id,encoder_id");

    let o = infolab(&["reproduce", "sweeps", "--out", d, "--model", "2d-singular"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_file(dir.path(), "dyadic.csv");
    assert_file(dir.path(), "ib.csv");
}
