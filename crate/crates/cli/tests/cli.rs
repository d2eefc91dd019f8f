use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mpiece(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpiece"))
        .env("MPIECE_OUT", out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn manifest(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("manifests")
        .join(name)
        .display()
        .to_string()
}

fn first_line(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn mu_o_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpiece(dir.path(), &["bounds", "mu_o", "--lambda", "1", "--K", "3"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("mu_o.txt"));
    assert_eq!(
        fs::read_to_string(dir.path().join("mu_o.kv")).unwrap(),
        golden("mu_o.txt")
    );
}

#[test]
fn busy_moments_match_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpiece(
        dir.path(),
        &["bounds", "busy", "--lambda", "0.5", "--ex", "1", "--ex2", "2"],
    );
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("busy.txt"));
}

#[test]
fn constants_echo_every_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpiece(
        dir.path(),
        &[
            "bounds",
            "constants",
            "--lambda",
            "1.4",
            "--us",
            "1",
            "--mu",
            "1",
            "--K",
            "3",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, golden("constants.txt"));
    let checks: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(checks.len(), 9);
    assert!(checks.iter().all(|l| l.ends_with(" ok")));
}

#[test]
fn verify_runs_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bounds", "compound", "--alpha", "1", "--m1", "1", "--m2", "2", "--b", "4", "--eps", "1.5", "--verify",
        "--paths", "2000",
    ];
    let out = mpiece(dir.path(), &args);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("[agree]"));
}

#[test]
fn domain_errors_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpiece(dir.path(), &["drift", "--lambda", "1.1", "--us", "1", "--K", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("not positive recurrent"));
    let out = mpiece(
        dir.path(),
        &["bounds", "kingman", "--drift", "0.5", "--sigma2", "1", "--b", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_manifest_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(manifest("coded_q2_0.4.toml"))
        .unwrap()
        .replace("q = 2", "q = 6");
    fs::write(&bad, text).unwrap();
    let out = mpiece(dir.path(), &["run", bad.to_str().unwrap(), "--horizon", "20"]);
    assert_eq!(out.status.code(), Some(2));
    let text = fs::read_to_string(manifest("fig1_stable_0.6.toml"))
        .unwrap()
        .replace("replicas = 20", "replicas = 0");
    fs::write(&bad, text).unwrap();
    let out = mpiece(dir.path(), &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("replicas"));
}

#[test]
fn fixed_seed_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |m: &str| {
        vec![
            "run".to_string(),
            manifest(m),
            "--replicas".into(),
            "1".into(),
            "--horizon".into(),
            "60".into(),
        ]
    };
    let m = "fig1_unstable_1.4.toml";
    let run = |d: &Path| mpiece(d, &args(m).iter().map(String::as_str).collect::<Vec<_>>());
    assert!(run(a.path()).status.success());
    assert!(run(b.path()).status.success());
    for file in [
        "report.csv",
        "manifest.toml",
        "replica_000/counts.csv",
        "replica_000/presence.csv",
        "replica_000/departures.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let piece = dir.path().join("piece");
    let out = mpiece(
        &piece,
        &[
            "run",
            &manifest("fig1_stable_0.6.toml"),
            "--replicas",
            "2",
            "--horizon",
            "50",
        ],
    );
    assert!(out.status.success());
    let header = std::iter::once("t,total".to_string())
        .chain((0..40).map(|i| format!("n_{i}")))
        .collect::<Vec<_>>()
        .join(",");
    assert_eq!(first_line(piece.join("replica_000/counts.csv")), header);
    assert_eq!(first_line(piece.join("replica_000/presence.csv")), "piece,avg_holders");
    assert_eq!(first_line(piece.join("replica_001/departures.csv")), "t_depart,sojourn");
    assert_eq!(
        first_line(piece.join("report.csv")),
        "replica,time_avg_total,slope,rare_piece,min_avg_holders,max_avg_holders"
    );
    let report = fs::read_to_string(piece.join("report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().collect();
    assert_eq!(rows.len(), 1 + 2 + 2);
    assert!(rows[3].starts_with("mean,") && rows[4].starts_with("se,"));

    let coded = dir.path().join("coded");
    let out = mpiece(
        &coded,
        &["nc-run", "--lambda", "0.4", "--K", "3", "--q", "2", "--horizon", "50"],
    );
    assert!(out.status.success());
    assert_eq!(
        first_line(coded.join("replica_000/counts.csv")),
        "t,total,dim_0,dim_1,dim_2"
    );
    assert!(!coded.join("replica_000/presence.csv").exists());

    let reduced = dir.path().join("reduced");
    assert!(mpiece(&reduced, &["mu-inf", "--K", "5", "--horizon", "20"])
        .status
        .success());
    assert_eq!(first_line(reduced.join("replica_000/path.csv")), "t,n,k");

    let alt = dir.path().join("alt");
    assert!(mpiece(&alt, &["alt-system", "--lambda", "1.4", "--horizon", "20"])
        .status
        .success());
    assert_eq!(first_line(alt.join("replica_000/path.csv")), "t,n,y,d,z,a");
    assert!(fs::read_to_string(alt.join("constants.kv"))
        .unwrap()
        .contains("N_o = 58321"));
}

#[test]
fn engine_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpiece(dir.path(), &["nc-run", "--manifest", &manifest("fig1_stable_0.6.toml")]);
    assert_eq!(out.status.code(), Some(2));
}
