use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qccp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qccp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .parse()
        .unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn gen_toy(dir: &TempDir) -> String {
    let p = path(dir, "toy.qccp");
    stdout(&qccp(&["gen", "--family", "er", "--n", "7", "--p", "0.6", "--seed", "3", "-o", &p]));
    p
}

#[test]
fn manhattan_check_reports_size() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "mh1.qccp");
    stdout(&qccp(&["gen", "--family", "manhattan", "--dims", "5,5", "-o", &p]));
    let out = stdout(&qccp(&["check", &p]));
    assert_eq!(field(&out, "n"), 25.0);
    assert_eq!(field(&out, "m"), 50.0);
}

#[test]
fn lb_below_brute_below_ub() {
    let dir = TempDir::new().unwrap();
    let p = gen_toy(&dir);
    let opt = field(&stdout(&qccp(&["brute", &p])), "opt");
    let lb = field(&stdout(&qccp(&["lb", "--level", "s2", &p])), "lb_rounded");
    let ub = field(&stdout(&qccp(&["ub", "--method", "hybrid", "--trials", "30", &p])), "ub");
    assert!(lb <= opt && opt <= ub, "{lb} {opt} {ub}");
}

#[test]
fn checkpoint_and_trace() {
    let dir = TempDir::new().unwrap();
    let p = gen_toy(&dir);
    let ck = path(&dir, "state.bin");
    let tr = path(&dir, "trace.csv");
    let first = stdout(&qccp(&[
        "lb", "--level", "s2", "--max-total-iter", "20", "--checkpoint-out", &ck, "--trace", &tr, "--lb-every", "5", &p,
    ]));
    assert_eq!(field(&first, "iterations"), 20.0);
    let trace = std::fs::read_to_string(&tr).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "k,objective,primal_res,dual_res,lb");
    assert_eq!(lines.len(), 21);
    assert!(lines[5].split(',').nth(4).is_some_and(|v| !v.is_empty()));
    assert!(lines[4].ends_with(','));

    let second = stdout(&qccp(&["lb", "--level", "s2", "--max-total-iter", "40", "--checkpoint-in", &ck, &p]));
    assert_eq!(field(&second, "iterations"), 40.0);

    let ub = stdout(&qccp(&["ub", "--method", "eb", "--from", &ck, &p]));
    let opt = field(&stdout(&qccp(&["brute", &p])), "opt");
    assert!(field(&ub, "ub") >= opt);
}

#[test]
fn every_ub_method_runs() {
    let dir = TempDir::new().unwrap();
    let p = gen_toy(&dir);
    let ck = path(&dir, "state.bin");
    stdout(&qccp(&["lb", "--level", "s2", "--checkpoint-out", &ck, &p]));
    let opt = field(&stdout(&qccp(&["brute", &p])), "opt");
    for m in ["eb", "us", "os", "sq", "hybrid"] {
        let out = stdout(&qccp(&["ub", "--method", m, "--from", &ck, "--trials", "20", "--sq-trials", "5", &p]));
        assert!(field(&out, "ub") >= opt, "{m}");
        let arcs = out.lines().find_map(|l| l.strip_prefix("cover=")).unwrap();
        assert_eq!(arcs.split(' ').count(), 7);
    }
}

#[test]
fn bench_csv_layout() {
    let dir = TempDir::new().unwrap();
    let p = gen_toy(&dir);
    let out = stdout(&qccp(&["bench", &p, "--level", "s2", "--trials", "20", "--sq-trials", "5"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "instance,n,m,method,bound,time_s,iters,primal_res,dual_res,cuts,gap_pct"
    );
    assert_eq!(lines.len(), 7);
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(methods, ["lb-s2", "eb", "us", "os", "sq", "hybrid"]);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 11);
        assert!(l.starts_with("toy,7,"));
        assert!(!l.split(',').nth(5).unwrap().is_empty());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(qccp(&["lb"]).status.code(), Some(1));
    assert_eq!(qccp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qccp(&["check", "/nonexistent/file.qccp"]).status.code(), Some(1));
    assert_eq!(qccp(&["--help"]).status.code(), Some(0));

    // A path 1 -> 2 -> 3 -> 1 plus a dead end at node 4: no cycle cover.
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "bad.qccp");
    std::fs::write(&p, "QCCP 1\n4 4\n1 2\n2 3\n3 1\n3 4\n0\n").unwrap();
    assert!(Path::new(&p).exists());
    let o = qccp(&["check", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn basis_reports_exact_null_space() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "k.qccp");
    stdout(&qccp(&["gen", "--family", "reload", "--n", "6", "-o", &p]));
    let out = stdout(&qccp(&["basis", &p]));
    assert_eq!(field(&out, "alpha"), 11.0);
    assert_eq!(field(&out, "columns"), 31.0 - 11.0);
    assert!(out.contains("null_space_exact=yes"));
    assert!(field(&out, "orthonormality_error") < 1e-12);
}

#[test]
fn reduce_drops_unused_arcs() {
    let dir = TempDir::new().unwrap();
    // Arc 2 -> 1 lies on no cycle cover of this graph.
    let p = path(&dir, "r.qccp");
    std::fs::write(&p, "QCCP 1\n3 4\n1 2\n2 3\n3 1\n2 1\n0\n").unwrap();
    let out_p = path(&dir, "r2.qccp");
    let out = stdout(&qccp(&["reduce", &p, "-o", &out_p]));
    assert!(out.starts_with("removed 1 arcs"));
    assert_eq!(field(&stdout(&qccp(&["check", &out_p])), "m"), 3.0);
}
