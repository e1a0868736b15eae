//! End-to-end runs of the binary: generation, inscription, verification,
//! codings, classification, and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_cantor"));
    assert!(p.exists(), "binary missing at {}", p.display());
    p = p.canonicalize().unwrap();
    p
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn cantor")
}

fn code_of(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cantor-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn category_round_trip() {
    let dir = tmpdir("cat");
    let out = run(
        &dir,
        &[
            "gen",
            "--seed",
            "7",
            "--kind",
            "dense-open",
            "--depth",
            "3",
            "--levels",
            "4",
            "--knock",
            "1",
            "--out",
            "fam.dof",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &dir,
        &[
            "inscribe",
            "category",
            "--variant",
            "silver",
            "--stages",
            "3",
            "--input",
            "fam.dof",
            "--cert",
            "run.cert",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&dir, &["verify", "--cert", "run.cert", "--input", "fam.dof"]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    // determinism: identical flags give byte-identical certificates
    let first = fs::read_to_string(dir.join("run.cert")).unwrap();
    let out = run(
        &dir,
        &[
            "inscribe",
            "category",
            "--variant",
            "silver",
            "--stages",
            "3",
            "--input",
            "fam.dof",
            "--cert",
            "run2.cert",
        ],
    );
    assert_eq!(code_of(&out), 0);
    assert_eq!(first, fs::read_to_string(dir.join("run2.cert")).unwrap());

    // a mutated certificate is rejected with exit 1
    let broken = first.replacen("\"n\": 0", "\"n\": 9", 1);
    assert_ne!(broken, first);
    fs::write(dir.join("broken.cert"), broken).unwrap();
    let out = run(
        &dir,
        &["verify", "--cert", "broken.cert", "--input", "fam.dof"],
    );
    assert_eq!(code_of(&out), 1, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn measure_trivial_stage_zero() {
    let dir = tmpdir("meas");
    fs::write(
        dir.join("trivial.filt"),
        "filt 2 2\nF 0\nr - -\nF 1\nr - -\n",
    )
    .unwrap();
    let out = run(
        &dir,
        &[
            "inscribe",
            "measure",
            "--variant",
            "silver",
            "--stages",
            "0",
            "--input",
            "trivial.filt",
            "--cert",
            "m.cert",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cert = fs::read_to_string(dir.join("m.cert")).unwrap();
    // exactly one stage record
    assert_eq!(cert.matches("\"big_n\"").count(), 1);
    let out = run(
        &dir,
        &["verify", "--cert", "m.cert", "--input", "trivial.filt"],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn measure_uniform_round_trip() {
    let dir = tmpdir("measu");
    let out = run(
        &dir,
        &[
            "gen",
            "--seed",
            "3",
            "--kind",
            "filtration",
            "--depth",
            "4",
            "--levels",
            "6",
            "--knock",
            "3",
            "--c",
            "6",
            "--out",
            "f.filt",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &dir,
        &[
            "inscribe",
            "measure",
            "--variant",
            "uniform",
            "--stages",
            "2",
            "--input",
            "f.filt",
            "--cert",
            "u.cert",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&dir, &["verify", "--cert", "u.cert", "--input", "f.filt"]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn check_code_exit_codes() {
    let dir = tmpdir("code");
    // the zero-tail null presentation
    let mut pres = String::from("pres N\nL 0\nc -\n");
    for n in 1..=9usize {
        pres.push_str(&format!("L {}\nc {}\n", n, "0".repeat(n + 1)));
    }
    fs::write(dir.join("p.pres"), pres).unwrap();
    let out = run(
        &dir,
        &[
            "encode", "--ideal", "N", "--input", "p.pres", "--out", "c.code",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &dir,
        &[
            "check-code",
            "--code",
            "c.code",
            "--formula",
            "phi",
            "--bound",
            "8",
        ],
    );
    assert_eq!(code_of(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("unrefuted-at-bound"));

    // membership of the all-zero point, non-membership of the all-one point
    let out = run(
        &dir,
        &[
            "check-code",
            "--code",
            "c.code",
            "--formula",
            "psi",
            "--bound",
            "8",
            "--point=-*0",
        ],
    );
    assert_eq!(code_of(&out), 0);
    let out = run(
        &dir,
        &[
            "check-code",
            "--code",
            "c.code",
            "--formula",
            "psi",
            "--bound",
            "8",
            "--point=-*1",
        ],
    );
    assert_eq!(code_of(&out), 1);

    // malformed input is exit 2
    fs::write(dir.join("bad.pres"), "pres N\nL 1\nc -\n").unwrap();
    let out = run(
        &dir,
        &[
            "encode", "--ideal", "N", "--input", "bad.pres", "--out", "x.code",
        ],
    );
    assert_eq!(code_of(&out), 2);
}

#[test]
fn tree_classify_and_exhaustion() {
    let dir = tmpdir("tree");
    fs::write(dir.join("t.tree"), "tree 2\n-\n0\n1\n00\n11\n").unwrap();
    let out = run(
        &dir,
        &[
            "tree",
            "classify",
            "--file",
            "t.tree",
            "--kind",
            "uniformly-perfect",
        ],
    );
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let out = run(
        &dir,
        &["tree", "classify", "--file", "t.tree", "--kind", "silver"],
    );
    assert_eq!(code_of(&out), 1);

    // an empty dense-open level exhausts immediately: exit 3
    fs::write(dir.join("empty.dof"), "dof 1\nU 0\n").unwrap();
    let out = run(
        &dir,
        &[
            "inscribe",
            "category",
            "--variant",
            "silver",
            "--stages",
            "0",
            "--input",
            "empty.dof",
            "--cert",
            "never.cert",
        ],
    );
    assert_eq!(code_of(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn depth_cap_env_override() {
    let dir = tmpdir("caps");
    fs::write(dir.join("deep.filt"), "filt 1 5\nF 0\nr - -\n").unwrap();
    let out = Command::new(bin())
        .current_dir(&dir)
        .env("CANTOR_DEPTH_CAP", "16,4")
        .args([
            "inscribe",
            "measure",
            "--variant",
            "silver",
            "--stages",
            "0",
            "--input",
            "deep.filt",
            "--cert",
            "c.cert",
        ])
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}
