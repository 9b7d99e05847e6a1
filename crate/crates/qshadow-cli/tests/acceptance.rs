// End-to-end acceptance suite. Runs the `qshadow` binary and prints one line per criterion.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use qshadow::category::{Entry, BUILTIN_NAMES};
use qshadow::shadow::{shipped_shadow, SHIPPED_SHADOWS};
use qshadow::{builtin, shadow_state_sum, Scalar, ShadowPolyhedron};

const EXACT_OR_FLOAT: f64 = 1e-7;
const IDENTITY_TOL: f64 = 1e-9;

struct Out {
    code: i32,
    stdout: String,
    secs: f64,
}

impl Out {
    fn record(&self) -> HashMap<String, String> {
        self.stdout.lines().filter_map(|l| l.split_once('=')).map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }
}

fn qshadow(args: &[&str]) -> Out {
    let t = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_qshadow")).args(args).env_remove("QSHADOW_THREADS").output().expect("run qshadow");
    Out { code: o.status.code().unwrap_or(-1), stdout: String::from_utf8_lossy(&o.stdout).into_owned(), secs: t.elapsed().as_secs_f64() }
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn float(rec: &HashMap<String, String>, prefix: &str) -> (f64, f64) {
    let get = |k: &str| rec.get(&format!("{}{}", prefix, k)).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
    (get("invariant_float_re"), get("invariant_float_im"))
}

/// Exact strings must agree when both sides have them, floats within `tol` otherwise.
fn same_value(a: &HashMap<String, String>, pa: &str, b: &HashMap<String, String>, pb: &str, tol: f64) -> bool {
    let ea = a.get(&format!("{}invariant_exact", pa)).cloned().unwrap_or_default();
    let eb = b.get(&format!("{}invariant_exact", pb)).cloned().unwrap_or_default();
    if !ea.is_empty() && !eb.is_empty() {
        return ea == eb;
    }
    let (x, y) = (float(a, pa), float(b, pb));
    ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt() <= tol
}

fn is_one(rec: &HashMap<String, String>, prefix: &str, tol: f64) -> bool {
    match rec.get(&format!("{}invariant_exact", prefix)) {
        Some(e) if !e.is_empty() => e == "1",
        _ => {
            let (re, im) = float(rec, prefix);
            ((re - 1.0).powi(2) + im * im).sqrt() <= tol
        }
    }
}

struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { ok: true, notes: vec![] }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.ok = false;
            self.notes.push(note.into());
        }
    }
}

fn category_identities() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    for name in BUILTIN_NAMES {
        let o = qshadow(&["category", "validate", name, "--tol", &IDENTITY_TOL.to_string()]);
        v.check(o.code == 0, format!("{} exit {}", name, o.code));
    }
    let secs = t.elapsed().as_secs_f64();
    v.check(secs < 10.0, format!("took {:.1} s", secs));
    v
}

fn sphere_normalization() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    for name in BUILTIN_NAMES {
        let o = qshadow(&["shadow", "s2_0", "--category", name, "--format", "record"]);
        v.check(o.code == 0 && is_one(&o.record(), "", IDENTITY_TOL), format!("{}: {}", name, o.stdout.lines().next().unwrap_or("")));
    }
    let secs = t.elapsed().as_secs_f64();
    v.check(secs < 1.0, format!("took {:.2} s", secs));
    v
}

fn main_theorem_s4() -> Verdict {
    let mut v = Verdict::new();
    for (name, budget) in [("trivial", 10.0), ("semion", 10.0), ("pointed(3,1)", 10.0), ("fibonacci", 300.0)] {
        let o = qshadow(&["compare", "s4", "s2_0", "--category", name, "--format", "record"]);
        let r = o.record();
        let ok = o.code == 0 && r.get("result").map(String::as_str) == Some("PASS") && is_one(&r, "cy_", EXACT_OR_FLOAT);
        v.check(ok, format!("{}: exit {}", name, o.code));
        v.check(o.secs < budget, format!("{}: {:.1} s", name, o.secs));
        println!("  s4 {:<13} {:>8.2} s", name, o.secs);
    }
    v
}

fn main_theorem_cp2() -> Verdict {
    let mut v = Verdict::new();
    let base = ["--category", "semion", "--strategy", "cocycle", "--threads", "1", "--format", "record"];
    let run = |tri: &str, sh: &str, flip: bool| {
        let mut a = vec!["compare", tri, sh];
        a.extend(base);
        if flip {
            a.push("--flip-orientation");
        }
        qshadow(&a)
    };
    let plus = run("cp2_9", "s2_p1", false);
    let rp = plus.record();
    v.check(plus.code == 0, format!("CP2 vs S2_1: exit {}", plus.code));
    v.check(rp.get("cy_invariant_exact").map(String::as_str) == Some("z^1"), format!("CP2 = {:?}, expected z^1", rp.get("cy_invariant_exact")));
    v.check(rp.get("colorings").map(String::as_str) == Some("536870912"), format!("colorings {:?}", rp.get("colorings")));
    println!("  cp2   semion      {:>8.2} s", plus.secs);
    let minus = run("cp2_9", "s2_m1", true);
    let rm = minus.record();
    v.check(minus.code == 0, format!("-CP2 vs S2_-1: exit {}", minus.code));
    v.check(rm.get("cy_invariant_exact").map(String::as_str) == Some("z^7"), format!("-CP2 = {:?}, expected z^7", rm.get("cy_invariant_exact")));
    println!("  -cp2  semion      {:>8.2} s", minus.secs);
    // the orientation is detected: CP2 against S2_-1 fails
    let wrong = run("cp2_9", "s2_m1", false);
    let rw = wrong.record();
    v.check(wrong.code == 1 && rw.get("result").map(String::as_str) == Some("FAIL"), format!("CP2 vs S2_-1: exit {}", wrong.code));
    v.check(!same_value(&rp, "cy_", &rw, "shadow_", 0.0), "CP2 agrees with S2_-1");
    println!("  cp2 vs S2_-1      {:>8.2} s", wrong.secs);
    for o in [&plus, &minus, &wrong] {
        v.check(o.secs <= 1800.0, format!("{:.0} s over the single-thread budget", o.secs));
    }
    v
}

fn pachner_invariance() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let p15 = tmp("s4_15.tri");
    let p24 = tmp("s4_24.tri");
    let p33 = tmp("s4_33.tri");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let o = qshadow(&["pachner", "s4", "1-5", "--facet", "0", "-o", &s(&p15)]);
    v.check(o.code == 0, "1-5 move failed");
    let first_site = |p: &Path, mv: &str| qshadow(&["pachner", &s(p), mv, "--list-sites"]).stdout.lines().next().map(str::to_string);
    match first_site(&p15, "2-4") {
        Some(site) => v.check(qshadow(&["pachner", &s(&p15), "2-4", "--site", &site, "-o", &s(&p24)]).code == 0, "2-4 move failed"),
        None => v.check(false, "no 2-4 site"),
    }
    match first_site(&p24, "3-3") {
        Some(site) => v.check(qshadow(&["pachner", &s(&p24), "3-3", "--site", &site, "-o", &s(&p33)]).code == 0, "3-3 move failed"),
        None => v.check(false, "no 3-3 site"),
    }
    for cat in ["semion", "fibonacci"] {
        let s4 = qshadow(&["cy", "s4", "--category", cat, "--format", "record"]).record();
        for (mv, p) in [("1-5", &p15), ("2-4", &p24), ("3-3", &p33)] {
            let o = qshadow(&["cy", &s(p), "--category", cat, "--format", "record"]);
            v.check(o.code == 0 && same_value(&s4, "", &o.record(), "", EXACT_OR_FLOAT), format!("{} after {}: {}", cat, mv, o.stdout.lines().next().unwrap_or("")));
            println!("  {:<9} {}      {:>8.2} s", cat, mv, o.secs);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    v.check(secs < 600.0, format!("took {:.0} s", secs));
    v
}

fn addition_and_stability() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let shadows: Vec<_> = SHIPPED_SHADOWS.iter().map(|n| shipped_shadow(n).unwrap()).collect();
    let s20 = shipped_shadow("s2_0").unwrap();
    for name in BUILTIN_NAMES {
        let cat = builtin(name).unwrap();
        let val = |p: &ShadowPolyhedron| shadow_state_sum(p, &cat).unwrap();
        let vals: Vec<Scalar> = shadows.iter().map(val).collect();
        for (i, p) in shadows.iter().enumerate() {
            let stab = val(&p.add(&s20).unwrap());
            v.check(stab.approx_eq(&vals[i], IDENTITY_TOL), format!("{}: |{} + S2_0| != |{}|", name, p.name, p.name));
            for (j, q) in shadows.iter().enumerate() {
                let sum = val(&p.add(q).unwrap());
                v.check(sum.approx_eq(&(&vals[i] * &vals[j]), IDENTITY_TOL), format!("{}: |{} + {}|", name, p.name, q.name));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    v.check(secs < 1.0, format!("took {:.2} s", secs));
    v
}

fn enumerators_agree() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    for cat in ["pointed(2,1)", "pointed(3,1)"] {
        let run = |strat: &str| qshadow(&["cy", "s4", "--category", cat, "--strategy", strat, "--format", "record"]).record();
        let (b, c) = (run("backtracking"), run("cocycle"));
        v.check(b.contains_key("colorings") && b.get("colorings") == c.get("colorings"), format!("{}: colorings {:?} vs {:?}", cat, b.get("colorings"), c.get("colorings")));
        let (eb, ec) = (b.get("invariant_exact"), c.get("invariant_exact"));
        v.check(eb.is_some_and(|e| !e.is_empty()) && eb == ec, format!("{}: {:?} vs {:?}", cat, eb, ec));
    }
    let secs = t.elapsed().as_secs_f64();
    v.check(secs < 60.0, format!("took {:.1} s", secs));
    v
}

fn mutation_sensitivity() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let base = builtin("semion").unwrap();
    let entries: Vec<Entry> = base.entries();
    let factors = [base.backend.int(-1), base.backend.zeta(8, 1), base.backend.int(2)];
    for k in 0..20 {
        let e = entries[k * entries.len() / 20];
        let mut c = base.clone();
        c.corrupt(e, &factors[k % factors.len()]);
        let path = tmp(&format!("semion_corrupt_{:02}.cat", k));
        std::fs::write(&path, c.to_text()).unwrap();
        let o = qshadow(&["category", "validate", path.to_str().unwrap()]);
        v.check(o.code == 1, format!("{:?} x {}: exit {}", e, factors[k % factors.len()], o.code));
    }
    let secs = t.elapsed().as_secs_f64();
    v.check(secs < 60.0, format!("took {:.1} s", secs));
    v
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("category identity suite", category_identities),
        ("sphere normalization", sphere_normalization),
        ("main theorem on S4", main_theorem_s4),
        ("main theorem on CP2", main_theorem_cp2),
        ("Pachner invariance", pachner_invariance),
        ("shadow addition and stability", addition_and_stability),
        ("backtracking vs cocycle", enumerators_agree),
        ("mutation sensitivity", mutation_sensitivity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = f();
        let mark = if v.ok { "PASS" } else { "FAIL" };
        println!("criterion {}: {} {} ({:.1} s)", i + 1, mark, name, t.elapsed().as_secs_f64());
        for n in &v.notes {
            println!("    {}", n);
        }
        if !v.ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
