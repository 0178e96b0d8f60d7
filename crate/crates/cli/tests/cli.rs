use std::path::Path;
use std::process::{Command, Output};

fn htmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htmax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| {
            l.strip_prefix(key)
                .map(|v| v.trim().parse::<f64>().unwrap())
        })
        .unwrap_or_else(|| panic!("no {key} in {out}"))
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&p1, &p2] {
        let o = htmax(&[
            "gen",
            "--family",
            "rand",
            "--d",
            "4",
            "--n",
            "5",
            "--r",
            "3",
            "--seed",
            "7",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn generated_containers_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cheb.json");
    assert!(htmax(&[
        "gen",
        "--family",
        "cheb",
        "--d",
        "16",
        "--n",
        "100",
        "-o",
        path.to_str().unwrap()
    ])
    .status
    .success());
    let a = htmax::io::load(&path).unwrap();
    assert!(a.max_rank() <= 5);
    let adv = dir.path().join("adv.json");
    assert!(htmax(&[
        "gen",
        "--family",
        "adversarial",
        "--d",
        "10",
        "--n",
        "8",
        "-o",
        adv.to_str().unwrap()
    ])
    .status
    .success());
    let a = htmax::io::load(&adv).unwrap();
    assert_eq!(a.entry(&htmax::MultiIndex::new(vec![1; 10])).unwrap(), 1.9);
}

#[test]
fn alternating_vector_reaches_one_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = htmax(&[
        "maxnorm",
        "--family",
        "elementary",
        "--factor",
        "1,-1",
        "--alg",
        "pi",
        "--iters",
        "3",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&trace).unwrap();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("1,1,"), "{csv}");
}

#[test]
fn maxnorm_reports_dense_truth() {
    let o = htmax(&[
        "maxnorm", "--family", "rand", "--d", "3", "--n", "4", "--r", "2", "--alg", "squaring",
        "--truth", "dense",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(field(&out, "rel_err") < 1e-10, "{out}");
}

#[test]
fn adversarial_tensor_defeats_rank_one_iteration() {
    let o = htmax(&[
        "maxnorm",
        "--family",
        "adversarial",
        "--d",
        "10",
        "--n",
        "8",
        "--alg",
        "pi",
        "--rank",
        "1",
        "--iters",
        "100",
    ]);
    assert!(o.status.success());
    assert!(field(&stdout(&o), "estimate") < 1.007);
}

#[test]
fn argmax_on_cheb_finds_unit_entry() {
    let o = htmax(&[
        "argmax", "--family", "cheb", "--d", "8", "--n", "16", "--rank", "5",
    ]);
    assert!(o.status.success());
    assert!((field(&stdout(&o), "value").abs() - 1.0).abs() < 1e-6);
}

#[test]
fn argmax_reports_rank_one_shortcut() {
    let o = htmax(&[
        "argmax",
        "--family",
        "elementary",
        "--factor",
        "1,3",
        "--factor",
        "-2,1,0",
    ]);
    let out = stdout(&o);
    assert!(
        out.contains("index (2,1)") && out.contains("rank_one_shortcut true"),
        "{out}"
    );
}

#[test]
fn verify_passes_and_checks_closed_form() {
    let o = htmax(&[
        "verify", "--family", "rand", "--d", "3", "--n", "4", "--r", "2",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = htmax(&[
        "verify",
        "--family",
        "counterexample",
        "--n",
        "10",
        "--sigma1",
        "9",
        "--sigma2",
        "2",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pass counterexample rank-1 error"));
}

#[test]
fn corrupted_container_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    assert!(htmax(&[
        "gen",
        "--family",
        "rand",
        "--d",
        "3",
        "--n",
        "4",
        "--r",
        "2",
        "-o",
        path.to_str().unwrap()
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&path).unwrap();
    let broken = text.replacen("\"mode_sizes\":[4,4,4]", "\"mode_sizes\":[4,5,4]", 1);
    assert_ne!(text, broken, "container layout changed");
    std::fs::write(&path, broken).unwrap();
    let o = htmax(&["verify", "-i", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dense_cap_is_configurable() {
    let o = Command::new(env!("CARGO_BIN_EXE_htmax"))
        .args([
            "maxnorm", "--family", "rand", "--d", "3", "--n", "4", "--truth", "dense",
        ])
        .env("HTMAX_DENSE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let o = htmax(&[
        "bench",
        "--sweep",
        "d",
        "--values",
        "4",
        "--fixed",
        "10",
        "--reps",
        "1",
        "--rank",
        "5",
        "--max-cycles",
        "2",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(Path::new(&path)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "family,d,n,alg,seconds,rel_err");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("cheb,4,10,adaptive,"));
}
