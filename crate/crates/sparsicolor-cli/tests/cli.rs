use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsicolor"))
        .args(args)
        .env_remove("SPARSICOLOR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let d = dir.to_str().unwrap();
    let mut args = vec!["run", "--delta", "24", "--seeds", "3", "--out.dir", d];
    args.extend_from_slice(extra);
    cli(&args)
}

#[test]
fn run_writes_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("hard invariants held"));
    for f in ["metrics.jsonl", "summary.csv", "verdicts.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(a.path(), &["--workers", "1"]);
    run_into(b.path(), &["--workers", "3"]);
    for f in ["metrics.jsonl", "summary.csv", "verdicts.txt"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn verify_accepts_artifacts_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["--seeds", "[1]", "--out.artifacts", "true"]);
    assert_eq!(o.status.code(), Some(0));
    let p = |ext: &str| dir.path().join(format!("s1.{ext}")).to_str().unwrap().to_string();
    let ok = cli(&["verify", "--graph", &p("graph"), "--coloring", &p("coloring"), "--lists", &p("lists")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(stdout(&ok).trim(), "valid");

    // Give node 0 the color of its first neighbor.
    let graph = std::fs::read_to_string(p("graph")).unwrap();
    let nb = graph
        .lines()
        .filter(|l| !l.starts_with('#'))
        .find_map(|l| {
            let (u, v) = l.split_once(' ')?;
            (u == "0").then(|| v.to_string())
        })
        .unwrap();
    let coloring = std::fs::read_to_string(p("coloring")).unwrap();
    let color_of = |node: &str| {
        coloring
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{node} ")).map(str::to_string))
            .unwrap()
    };
    let c = color_of(&nb);
    let bad: String = coloring
        .lines()
        .map(|l| if l.starts_with("0 ") { format!("0 {c}\n") } else { format!("{l}\n") })
        .collect();
    let bad_path = dir.path().join("bad.coloring");
    std::fs::write(&bad_path, bad).unwrap();
    let o = cli(&["verify", "--graph", &p("graph"), "--coloring", bad_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("conflict"), "{}", stdout(&o));
}

#[test]
fn gen_is_seeded() {
    let a = cli(&["gen", "--delta", "16", "--seed", "4"]);
    let b = cli(&["gen", "--delta", "16", "--seed", "4"]);
    let c = cli(&["gen", "--delta", "16", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).starts_with("# n=67"));
}

#[test]
fn levelcheck_passes() {
    let o = cli(&["levelcheck", "--instances", "200", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "200/200 pass");
}

#[test]
fn acd_lists_every_node() {
    let o = cli(&["acd", "--exact", "--delta", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = stdout(&o).lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 67);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(cli(&["run", "--no-such-key", "1"]).status.code(), Some(2));
    assert_eq!(cli(&["verify", "--graph", "/nonexistent", "--coloring", "/nonexistent"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "--alpha", "1"]).status.code(), Some(2));
}
