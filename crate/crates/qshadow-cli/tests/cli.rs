use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qshadow::Complex4;

fn qshadow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qshadow")).args(args).env_remove("QSHADOW_THREADS").output().expect("run qshadow")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn sorted_facets(c: &Complex4) -> Vec<Vec<usize>> {
    let mut f: Vec<Vec<usize>> = c.facets().iter().map(|x| x.to_vec()).collect();
    f.sort();
    f
}

#[test]
fn validate_builtins() {
    for name in ["semion", "trivial"] {
        let o = qshadow(&["category", "validate", name]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        assert!(stdout(&o).contains("PASS"));
    }
}

#[test]
fn broken_category_names_the_identity() {
    let text = stdout(&qshadow(&["category", "export", "semion"]));
    // change the value of one nontrivial 6j entry
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let i = lines.iter().position(|l| l.starts_with("sixj 0 0 0 1 1 1 ")).expect("a 6j line");
    let mut parts: Vec<String> = lines[i].split_whitespace().map(str::to_string).collect();
    let v = parts.pop().unwrap();
    parts.push(if v == "z^2" { "z^3" } else { "z^2" }.to_string());
    lines[i] = parts.join(" ");
    let path = tmp("broken.cat");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = qshadow(&["category", "validate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL:"), "{}", stdout(&o));
}

#[test]
fn unknown_category_is_an_input_error() {
    assert_eq!(code(&qshadow(&["category", "validate", "no-such-category"])), 2);
    assert_eq!(code(&qshadow(&["cy", "s4", "--category", "no-such-category"])), 2);
}

#[test]
fn cy_on_s4() {
    let o = qshadow(&["cy", "s4.tri", "--category", "trivial"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("1 "), "{}", stdout(&o));
    let o = qshadow(&["cy", "s4.tri", "--category", "semion", "--backend", "exact", "--format", "record"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l == "invariant_exact=1"), "{}", stdout(&o));
}

#[test]
fn record_is_identical_across_worker_counts() {
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.starts_with("seconds=")).collect::<Vec<_>>().join("\n");
    let a = qshadow(&["cy", "s4", "--category", "ising", "--format", "record", "--threads", "1"]);
    let b = qshadow(&["cy", "s4", "--category", "ising", "--format", "record", "--threads", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn guard_refuses_cp2_fibonacci() {
    let o = qshadow(&["cy", "cp2_9.tri", "--category", "fibonacci"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2^84"), "{}", err);
}

#[test]
fn compare_s4() {
    let o = qshadow(&["compare", "s4.tri", "s2_0.shadow", "--category", "semion"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&qshadow(&["cy", "s4", "--category", "trivial", "--tol", "0"])), 2);
    assert_eq!(code(&qshadow(&["cy", "s4", "--category", "trivial", "--threads", "0"])), 2);
    assert_eq!(code(&qshadow(&["cy", "s4", "--category", "fibonacci", "--backend", "exact"])), 2);
    assert_eq!(code(&qshadow(&["shadow", "missing.shadow", "--category", "trivial"])), 2);
    assert_eq!(code(&qshadow(&["frobnicate"])), 2);
}

#[test]
fn pachner_one_five_on_facet_zero() {
    let out = tmp("s4_15.tri");
    let o = qshadow(&["pachner", "s4.tri", "1-5", "--facet", "0", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let c = Complex4::load(&out).unwrap();
    assert_eq!(c.facets().len(), 10);
    assert!(c.check_manifold().passed());
}

#[test]
fn pachner_apply_then_invert() {
    let s4 = Complex4::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../qshadow/data/s4.tri"))).unwrap();
    let a = tmp("inv_a.tri");
    let b = tmp("inv_b.tri");
    assert_eq!(code(&qshadow(&["pachner", "s4", "1-5", "--facet", "2", "-o", a.to_str().unwrap()])), 0);
    // the new vertex is the last one
    let v = Complex4::load(&a).unwrap().n_vertices() - 1;
    assert_eq!(code(&qshadow(&["pachner", a.to_str().unwrap(), "5-1", "--site", &v.to_string(), "-o", b.to_str().unwrap()])), 0);
    let back = Complex4::load(&b).unwrap();
    assert_eq!(back.n_vertices(), s4.n_vertices());
    assert_eq!(sorted_facets(&back), sorted_facets(&s4));
}

#[test]
fn pachner_invalid_site() {
    let o = qshadow(&["pachner", "s4", "2-4", "--site", "0,1,2,3"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&qshadow(&["pachner", "s4", "1-5", "--facet", "99"])), 2);
    assert_eq!(code(&qshadow(&["pachner", "s4", "7-7", "--facet", "0"])), 2);
}

#[test]
fn complex_report() {
    let o = qshadow(&["complex", "cp2_9"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("euler characteristic: 3"), "{}", stdout(&o));
    let bad = tmp("two_simplices.tri");
    std::fs::write(&bad, "dim 4\nvertices 6\n0 1 2 3 4\n1 2 3 4 5\n").unwrap();
    assert_eq!(code(&qshadow(&["complex", bad.to_str().unwrap()])), 1);
}

#[test]
fn shadow_gleam_form() {
    let o = qshadow(&["shadow", "s2p1_plus_s2m1", "--category", "semion", "--format", "record"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("invariant_exact=1\n"), "{}", s);
    assert!(s.contains("b2=2\n") && s.contains("nullity=0\n"), "{}", s);
}
