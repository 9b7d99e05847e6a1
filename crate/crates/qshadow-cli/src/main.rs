use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qshadow::category::BUILTIN_NAMES;
use qshadow::shadow::{shipped_shadow, SHIPPED_SHADOWS};
use qshadow::simplicial::shipped;
use qshadow::{builtin, cy_state_sum, shadow_state_sum, Backend, Complex4, CoordinatedCategory, CyOptions, Move, Scalar, ShadowPolyhedron, Strategy};

#[derive(Parser)]
#[command(name = "qshadow", version, about = "Crane-Yetter and shadow state sums of 4-manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect or check category data
    Category {
        #[command(subcommand)]
        action: CategoryCmd,
    },
    /// Crane-Yetter state sum of a triangulation
    Cy {
        triangulation: String,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "auto")]
        strategy: StrategyArg,
    },
    /// Shadow state sum of a shadowed polyhedron
    Shadow {
        shadow: String,
        #[command(flatten)]
        run: RunArgs,
        /// also print b2, nullity and the gleam form
        #[arg(long)]
        gleam_form: bool,
    },
    /// Compare the two state sums (PASS iff equal)
    Compare {
        triangulation: String,
        shadow: String,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "auto")]
        strategy: StrategyArg,
    },
    /// Apply a Pachner move
    Pachner {
        triangulation: String,
        /// 1-5, 2-4, 3-3, 4-2 or 5-1
        #[arg(value_name = "MOVE")]
        mv: String,
        /// vertices of the simplex the move acts on, e.g. 0,1,2,3
        #[arg(long, value_delimiter = ',', conflicts_with = "facet")]
        site: Option<Vec<usize>>,
        /// use facet number N as the site of a 1-5 move
        #[arg(long)]
        facet: Option<usize>,
        /// list the admissible sites instead of applying the move
        #[arg(long)]
        list_sites: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Manifold checks of a triangulation
    Complex { triangulation: String },
}

#[derive(Subcommand)]
enum CategoryCmd {
    /// Run the identity suite (exit 1 on failure)
    Validate {
        category: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
    },
    /// Print labels, dimensions, twists and global data
    Info { category: String },
    /// Write the category in the text format
    Export {
        category: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// List the built-in categories
    List,
}

#[derive(Args)]
struct RunArgs {
    /// built-in name or path to a category file
    #[arg(long)]
    category: String,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// worker threads (default: $QSHADOW_THREADS, else all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// run past the coloring-count guard
    #[arg(long)]
    force: bool,
    /// use the opposite orientation class of the triangulation
    #[arg(long)]
    flip_orientation: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Record,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Auto,
    Backtracking,
    Cocycle,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Backtracking => Strategy::Backtracking,
            StrategyArg::Cocycle => Strategy::Cocycle,
        }
    }
}

/// Exit 1: a check failed. Exit 2: bad usage or input.
enum Fail {
    Check(String),
    Input(String),
}

fn input<E: std::fmt::Display>(e: E) -> Fail {
    Fail::Input(e.to_string())
}

fn load_category(spec: &str, backend: Option<BackendArg>) -> Result<CoordinatedCategory, Fail> {
    let cat = if Path::new(spec).is_file() { CoordinatedCategory::load(Path::new(spec)).map_err(input)? } else { builtin(spec).map_err(input)? };
    match backend {
        None => Ok(cat),
        Some(BackendArg::Float) => cat.with_backend(&Backend::Float).map_err(input),
        Some(BackendArg::Exact) if cat.backend.is_exact() => Ok(cat),
        Some(BackendArg::Exact) => Err(Fail::Input(format!("category `{}` has no exact data (float only)", cat.name))),
    }
}

fn stem(spec: &str) -> &str {
    let base = Path::new(spec).file_name().and_then(|s| s.to_str()).unwrap_or(spec);
    base.split('.').next().unwrap_or(base)
}

/// A file if it exists, otherwise a shipped triangulation by name.
fn load_complex(spec: &str) -> Result<Complex4, Fail> {
    if Path::new(spec).is_file() {
        return Complex4::load(Path::new(spec)).map_err(input);
    }
    shipped(stem(spec)).map_err(|_| Fail::Input(format!("{}: no such file or shipped triangulation (s4, cp2_9)", spec)))
}

fn load_shadow(spec: &str) -> Result<ShadowPolyhedron, Fail> {
    if Path::new(spec).is_file() {
        return ShadowPolyhedron::load(Path::new(spec)).map_err(input);
    }
    shipped_shadow(stem(spec)).map_err(|_| Fail::Input(format!("{}: no such file or shipped shadow ({})", spec, SHIPPED_SHADOWS.join(", "))))
}

fn threads(arg: Option<usize>) -> Result<Option<usize>, Fail> {
    let n = match arg {
        Some(n) => Some(n),
        None => match std::env::var("QSHADOW_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Fail::Input(format!("QSHADOW_THREADS: not a number: {}", v)))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Fail::Input("worker count must be at least 1".into()));
    }
    if let Some(k) = n {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(input)?;
    }
    Ok(n)
}

fn value_lines(prefix: &str, v: &Scalar) -> Vec<String> {
    let z = v.to_c64();
    let exact = if v.is_exact() { v.to_string() } else { String::new() };
    vec![
        format!("{}invariant_exact={}", prefix, exact),
        format!("{}invariant_float_re={:.12}", prefix, z.re + 0.0),
        format!("{}invariant_float_im={:.12}", prefix, z.im + 0.0),
    ]
}

fn show(v: &Scalar) -> String {
    let z = v.to_c64();
    if v.is_exact() {
        format!("{}    ~ ({:.12}, {:.12})", v, z.re + 0.0, z.im + 0.0)
    } else {
        format!("({:.12}, {:.12})", z.re + 0.0, z.im + 0.0)
    }
}

fn check_run(run: &RunArgs) -> Result<(), Fail> {
    if run.tol.is_nan() || run.tol <= 0.0 {
        return Err(Fail::Input("tolerance must be positive".into()));
    }
    Ok(())
}

fn cy_opts(run: &RunArgs, strategy: StrategyArg) -> Result<CyOptions, Fail> {
    check_run(run)?;
    Ok(CyOptions {
        strategy: strategy.into(),
        threads: threads(run.threads)?,
        force: run.force,
        flip_orientation: run.flip_orientation,
        tol: run.tol,
        ..CyOptions::default()
    })
}

fn run_cy(tri: &str, run: &RunArgs, strategy: StrategyArg) -> Result<(), Fail> {
    let opts = cy_opts(run, strategy)?;
    let c = load_complex(tri)?;
    let cat = load_category(&run.category, run.backend)?;
    let r = cy_state_sum(&c, &cat, &opts).map_err(input)?;
    match run.format {
        Format::Record => {
            for l in value_lines("", &r.value) {
                println!("{}", l);
            }
            println!("colorings={}", r.colorings);
            println!("strategy={}", r.strategy);
            println!("seconds={:.3}", r.seconds);
        }
        Format::Text => {
            println!("{}", show(&r.value));
            println!("colorings: {} ({})", r.colorings, r.strategy);
            eprintln!("time: {:.3} s", r.seconds);
        }
    }
    Ok(())
}

fn run_shadow(path: &str, run: &RunArgs, gleam: bool) -> Result<(), Fail> {
    check_run(run)?;
    threads(run.threads)?;
    let p = load_shadow(path)?;
    let cat = load_category(&run.category, run.backend)?;
    let t = Instant::now();
    let v = shadow_state_sum(&p, &cat).map_err(input)?;
    let secs = t.elapsed().as_secs_f64();
    let g = p.gleam_form();
    match run.format {
        Format::Record => {
            for l in value_lines("", &v) {
                println!("{}", l);
            }
            println!("b2={}", g.b2);
            println!("nullity={}", g.nullity);
            println!("seconds={:.3}", secs);
        }
        Format::Text => {
            println!("{}", show(&v));
            if gleam {
                print!("{}", g);
            }
            eprintln!("time: {:.3} s", secs);
        }
    }
    Ok(())
}

fn run_compare(tri: &str, sh: &str, run: &RunArgs, strategy: StrategyArg) -> Result<(), Fail> {
    let opts = cy_opts(run, strategy)?;
    let c = load_complex(tri)?;
    let p = load_shadow(sh)?;
    let cat = load_category(&run.category, run.backend)?;
    let r = cy_state_sum(&c, &cat, &opts).map_err(input)?;
    let t = Instant::now();
    let s = shadow_state_sum(&p, &cat).map_err(input)?;
    let secs = t.elapsed().as_secs_f64();
    let same = r.value.approx_eq(&s, run.tol);
    let verdict = if same { "PASS" } else { "FAIL" };
    match run.format {
        Format::Record => {
            for l in value_lines("cy_", &r.value) {
                println!("{}", l);
            }
            for l in value_lines("shadow_", &s) {
                println!("{}", l);
            }
            println!("colorings={}", r.colorings);
            println!("result={}", verdict);
            println!("seconds={:.3}", r.seconds + secs);
        }
        Format::Text => {
            println!("cy:     {}", show(&r.value));
            println!("shadow: {}", show(&s));
            println!("{}", verdict);
            eprintln!("time: {:.3} s", r.seconds + secs);
        }
    }
    if same {
        Ok(())
    } else {
        Err(Fail::Check(String::new()))
    }
}

fn run_pachner(tri: &str, mv: &str, site: Option<Vec<usize>>, facet: Option<usize>, list: bool, out: Option<PathBuf>) -> Result<(), Fail> {
    let c = load_complex(tri)?;
    let mv = Move::parse(mv).ok_or_else(|| Fail::Input(format!("unknown move `{}` (use 1-5, 2-4, 3-3, 4-2, 5-1)", mv)))?;
    if list {
        let mut o = std::io::stdout().lock();
        for s in c.pachner_sites(mv) {
            if writeln!(o, "{}", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).is_err() {
                break;
            }
        }
        return Ok(());
    }
    let sigma = match (site, facet) {
        (Some(s), _) => s,
        (None, Some(i)) => c.facets().get(i).ok_or_else(|| Fail::Input(format!("no facet {}", i)))?.to_vec(),
        (None, None) => return Err(Fail::Input("give --site or --facet".into())),
    };
    let n = c.pachner(mv, &sigma).map_err(input)?;
    match out {
        Some(path) => std::fs::write(&path, n.to_text()).map_err(|e| Fail::Input(format!("{}: {}", path.display(), e)))?,
        None => print!("{}", n.to_text()),
    }
    Ok(())
}

fn run_complex(tri: &str) -> Result<(), Fail> {
    let c = load_complex(tri)?;
    let r = c.check_manifold();
    let f = c.f_vector();
    println!("f-vector: {:?}", f);
    println!("euler characteristic: {}", c.euler_characteristic());
    if r.passed() {
        println!("closed oriented combinatorial 4-manifold: ok");
        Ok(())
    } else {
        for p in &r.problems {
            println!("{}", p);
        }
        Err(Fail::Check("not a closed manifold".into()))
    }
}

fn run_category(action: CategoryCmd) -> Result<(), Fail> {
    match action {
        CategoryCmd::Validate { category, tol, backend } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Fail::Input("tolerance must be positive".into()));
            }
            let cat = load_category(&category, backend)?;
            let rep = cat.validate(tol);
            print!("{}", rep);
            if rep.passed() {
                println!("PASS");
                Ok(())
            } else {
                println!("FAIL: {}", rep.failing().join(", "));
                Err(Fail::Check(String::new()))
            }
        }
        CategoryCmd::Info { category } => {
            let cat = load_category(&category, None)?;
            println!("name: {}", cat.name);
            match &cat.backend {
                Backend::Exact(f) => println!("field: Q(zeta_{})", f.order()),
                Backend::Float => println!("field: float"),
            }
            println!("labels: {}", cat.fusion.names().join(" "));
            for i in cat.labels() {
                println!(
                    "  {:<8} dual {:<8} dim {}  dim' {}  twist {}  twist' {}",
                    cat.fusion.name(i),
                    cat.fusion.name(cat.star(i)),
                    cat.dim[i],
                    cat.dimp[i],
                    cat.twist[i],
                    cat.twistp[i]
                );
            }
            println!("D: {}", cat.global_dim);
            println!("gauss sum: {}", show(&cat.gauss_sum()));
            println!("pointed: {}", cat.is_pointed());
            Ok(())
        }
        CategoryCmd::Export { category, out } => {
            let cat = load_category(&category, None)?;
            match out {
                Some(path) => std::fs::write(&path, cat.to_text()).map_err(|e| Fail::Input(format!("{}: {}", path.display(), e))),
                None => {
                    print!("{}", cat.to_text());
                    Ok(())
                }
            }
        }
        CategoryCmd::List => {
            for n in BUILTIN_NAMES {
                println!("{}", n);
            }
            println!("pointed(N,p)");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Category { action } => run_category(action),
        Cmd::Cy { triangulation, run, strategy } => run_cy(&triangulation, &run, strategy),
        Cmd::Shadow { shadow, run, gleam_form } => run_shadow(&shadow, &run, gleam_form),
        Cmd::Compare { triangulation, shadow, run, strategy } => run_compare(&triangulation, &shadow, &run, strategy),
        Cmd::Pachner { triangulation, mv, site, facet, list_sites, out } => run_pachner(&triangulation, &mv, site, facet, list_sites, out),
        Cmd::Complex { triangulation } => run_complex(&triangulation),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check(msg)) => {
            if !msg.is_empty() {
                eprintln!("{}", msg);
            }
            ExitCode::from(1)
        }
        Err(Fail::Input(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
