use std::path::Path;
use std::process::{Command, Output};

fn balancer(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balancer"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn komlos_summary_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["komlos", "--n", "16", "--T", "10000", "--dist", "sparse:4", "--seed", "7", "--out"];
    let a = balancer(&[&args[..], &["a"]].concat(), dir.path());
    let b = balancer(&[&args[..], &["b"]].concat(), dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success());
    let strip = |s: String| {
        let mut v: serde_json::Value = serde_json::from_str(s.trim()).unwrap();
        v.as_object_mut().unwrap().remove("dir");
        v
    };
    let (sa, sb) = (strip(stdout(&a)), strip(stdout(&b)));
    assert_eq!(sa, sb);
    assert_eq!(sa["seed"], 7);
    assert_eq!(sa["T"], 10000);
    assert!(sa["slopes"]["linf"]["slope"].is_number());
    let ta = std::fs::read(dir.path().join("a/trace.jsonl")).unwrap();
    let tb = std::fs::read(dir.path().join("b/trace.jsonl")).unwrap();
    assert_eq!(ta, tb);
    for f in ["metrics.csv", "summary.json"] {
        assert!(dir.path().join("a").join(f).exists());
    }
}

#[test]
fn missing_key_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = balancer(&["komlos", "--n", "4", "--dist", "sphere"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`T`"), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.conf"), "setting = komlos\nT = 10\ndist = sphere\n").unwrap();
    let o = balancer(&["komlos", "--config", "bad.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`n`"));

    let o = balancer(&["komlos", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn overflow_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = balancer(
        &["komlos", "--n", "2", "--T", "2000", "--dist", "e1", "--lambda", "5000", "--algorithm", "potential"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"setting":"multicolor","n":4,"T":300,"dist":"sparse:2","weights":[1,2],"seed":1}"#,
    )
    .unwrap();
    let o = balancer(&["multicolor", "--config", "run.json", "--seed", "5", "--out", "mc"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(s["seed"], 5);
    let trace = std::fs::read_to_string(dir.path().join("mc/trace.jsonl")).unwrap();
    assert!(trace.lines().next().unwrap().contains("\"color\""));
}

#[test]
fn seed_batches_and_report() {
    let dir = tempfile::tempdir().unwrap();
    for alg in ["potential", "random"] {
        let o = balancer(
            &["komlos", "--n", "8", "--T", "3000", "--dist", "sparse:2", "--seeds", "1,2", "--algorithm", alg, "--out", alg],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 2);
    }
    let alg = dir.path().join("potential/komlos-potential-seed1/metrics.csv");
    let rnd = dir.path().join("random/komlos-random-seed1/metrics.csv");
    let o = balancer(
        &["report", "--compare", alg.to_str().unwrap(), rnd.to_str().unwrap(), "--column", "linf"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(table.contains("linf"));
}

#[test]
fn oracle_reports_dominance() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.txt"), "1 0\n1 0\n1 0\n").unwrap();
    let o = balancer(&["oracle", "--input", "v.txt"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(s["optimum"], 1.0);
    assert_eq!(s["dominates"], true);

    let o = balancer(&["oracle", "--n", "4", "--T", "10", "--seed", "3"], dir.path());
    assert!(o.status.success());
}

#[test]
fn tusnady_writes_box_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = balancer(&["tusnady", "--d", "1", "--T", "64", "--out", "t", "--set", "budget=32"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("t/boxes.csv")).unwrap();
    assert!(csv.starts_with("box,bounds,t,disc"));
    let o = balancer(&["tusnady", "--d", "1", "--T", "100"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
