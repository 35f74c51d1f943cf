use std::path::Path;
use std::process::{Command, Output};

use floorcount::{enumerate_floor_diagrams, FloorDiagram, MarkedDiagram};

fn floorcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floorcount"))
        .args(args)
        .env_remove("FLOORCOUNT_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = floorcount(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

/// Splits concatenated text records at each `floordiagram` header.
fn records(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.starts_with("floordiagram") || out.is_empty() {
            out.push(String::new());
        }
        let cur = out.last_mut().unwrap();
        cur.push_str(line);
        cur.push('\n');
    }
    out
}

#[test]
fn gromov_witten_values() {
    assert_eq!(ok(&["gw", "--n", "3", "--d", "5", "--l", "10,0"]), "105\n");
    assert_eq!(
        ok(&["gw", "--n", "2", "--d", "3", "--g", "1", "--l", "9"]),
        "1\n"
    );
    assert_eq!(ok(&["gw", "--n", "3", "--d", "2", "--l", "0,8"]), "92\n");
}

#[test]
fn welschinger_values() {
    assert_eq!(ok(&["w", "--n", "3", "--d", "3"]), "-1\n");
    assert_eq!(ok(&["w", "--n", "3", "--d", "5"]), "45\n");
    assert_eq!(ok(&["w", "--n", "2", "--d", "3"]), "8\n");
}

#[test]
fn mathematical_errors_exit_with_two() {
    for args in [
        vec!["gw", "--n", "2", "--d", "3", "--l", "7"],
        vec!["gw", "--n", "3", "--d", "2", "--g", "1", "--l", "5,0"],
        vec!["w", "--n", "4", "--d", "3"],
    ] {
        let o = floorcount(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        vec!["gw", "--n", "2"],
        vec!["gw", "--n", "2", "--d", "x", "--l", "5"],
        vec!["frobnicate"],
    ] {
        assert_eq!(floorcount(&args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(floorcount(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_cache_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad");
    std::fs::write(&path, "not a cache\n").unwrap();
    let o = floorcount(&["cache", "--cache", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plane_cubic_types() {
    let out = ok(&[
        "diagrams",
        "--d",
        "3",
        "--n",
        "2",
        "--l",
        "8",
        "--marked",
        "--group-types",
    ]);
    let mut groups: Vec<(u32, u32, u32)> = out
        .lines()
        .filter(|l| l.starts_with("# type"))
        .map(|l| {
            let field = |name: &str| -> u32 {
                let v = l
                    .split_whitespace()
                    .find_map(|t| t.strip_prefix(name))
                    .unwrap();
                v.parse().unwrap()
            };
            (field("count="), field("mu_c="), field("mu_r="))
        })
        .collect();
    groups.sort();
    assert_eq!(groups, vec![(1, 4, 0), (3, 1, 1), (5, 1, 1)]);
}

#[test]
fn printed_diagrams_round_trip() {
    for (d, g) in [(3, 0), (4, 1)] {
        let out = ok(&["diagrams", "--d", &d.to_string(), "--g", &g.to_string()]);
        let parsed: Vec<FloorDiagram> = records(&out)
            .iter()
            .map(|r| FloorDiagram::from_text(r).unwrap())
            .collect();
        assert_eq!(parsed, enumerate_floor_diagrams(d, g).unwrap());
    }
    assert_eq!(records(&ok(&["diagrams", "--d", "3"])).len(), 7);

    let out = ok(&["diagrams", "--d", "2", "--n", "3", "--l", "0,8", "--marked"]);
    let rs = records(&out);
    assert!(!rs.is_empty());
    for r in rs {
        let m = MarkedDiagram::from_text(&r, 3).unwrap();
        assert_eq!(m.to_text(), r);
    }
}

#[test]
fn dot_output() {
    let out = ok(&["diagrams", "--d", "2", "--format", "dot"]);
    assert_eq!(out.matches("digraph").count(), 2);
}

#[test]
fn output_does_not_depend_on_jobs() {
    let cases: [&[&str]; 3] = [
        &["gw", "--n", "3", "--d", "5", "--l", "10,0"],
        &[
            "diagrams",
            "--d",
            "5",
            "--n",
            "3",
            "--l",
            "10,0",
            "--marked",
            "--group-types",
        ],
        &["oracle", "--suite", "proposition", "--max-d", "5"],
    ];
    for args in cases {
        let mut one = args.to_vec();
        one.extend(["--jobs", "1"]);
        let mut four = args.to_vec();
        four.extend(["--jobs", "4"]);
        assert_eq!(
            floorcount(&one).stdout,
            floorcount(&four).stdout,
            "{args:?}"
        );
    }
}

#[test]
fn oracle_suites_pass() {
    let out = ok(&["oracle", "--suite", "kontsevich", "--max-d", "5"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(out.ends_with("all checks passed\n"));
    let out = ok(&["oracle", "--suite", "formulas", "--max-d", "5"]);
    assert!(!out.contains("FAIL"));
    let out = ok(&["oracle", "--suite", "proposition", "--max-d", "5"]);
    assert!(out.contains("note d=5"));
}

fn cache_lines(path: &Path) -> String {
    ok(&["cache", "--cache", path.to_str().unwrap()])
}

#[test]
fn cache_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("values.cache");
    let p = path.to_str().unwrap();
    assert_eq!(
        ok(&["gw", "--n", "3", "--d", "4", "--l", "8,0", "--cache", p]),
        "4\n"
    );
    let listed = cache_lines(&path);
    assert!(listed.contains("gw:n=3:d=4:g=0:l=8,0 4\n"), "{listed}");
    assert!(listed.contains("w:n=3:d=4 0\n"), "{listed}");

    // a second run reads the same file and leaves it unchanged
    let before = std::fs::read(&path).unwrap();
    assert_eq!(
        ok(&["gw", "--n", "3", "--d", "4", "--l", "8,0", "--cache", p]),
        "4\n"
    );
    assert_eq!(std::fs::read(&path).unwrap(), before);

    let env_path = dir.path().join("env.cache");
    let o = Command::new(env!("CARGO_BIN_EXE_floorcount"))
        .args(["w", "--n", "3", "--d", "5"])
        .env("FLOORCOUNT_CACHE", &env_path)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o), "45\n");
    assert!(cache_lines(&env_path).contains("w:n=3:d=5 45\n"));
}
