//! `perronlab`: spectral reports, scheme probes, fixed-space computations,
//! gallery cases and seeded property suites.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 bad input,
//! 3 a computation failed.

mod input;

use clap::{Args, Parser, Subcommand};
use input::{load_operator, load_scheme, parse_complex, parse_params, parse_range, parse_reals, parse_vectors};
use perronlab_core::fixed_space::{
    f_modulus, is_fixed_space_sublattice, sup_in_fixed_space, FixedSpaceHandle, DEFAULT_MAX_ITER, DEFAULT_SUP_TOL,
};
use perronlab_core::json::{complex_to_value, to_string_fixed};
use perronlab_core::operator::OperatorFile;
use perronlab_core::rational::DEFAULT_Q_MAX;
use perronlab_core::spectral::{spectral_report, EigenOptions, ReportOptions};
use perronlab_core::weights::{pole_order_at, weighted_scalar_sum, ws_bounded_probe};
use perronlab_core::{LatticeVector, C64};
use perronlab_gallery::examples::{named_operator, OPERATORS};
use perronlab_gallery::suites::{run_suite, SuiteOptions, SUITES};
use perronlab_gallery::{registry, run_case, with_pool, GalleryError};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
pub enum Failure {
    /// Checks ran and at least one failed.
    Check(String),
    Input(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Input(_) => 2,
            Failure::Compute(_) => 3,
        }
    }
}

fn compute(e: perronlab_core::Error) -> Failure {
    Failure::Compute(e.to_string())
}

fn gallery_failure(e: GalleryError) -> Failure {
    match e {
        GalleryError::UnknownCase(_) | GalleryError::UnknownSuite(_) | GalleryError::BadParam { .. } => {
            Failure::Input(e.to_string())
        }
        GalleryError::Unimplemented(_) | GalleryError::Core(_) => Failure::Compute(e.to_string()),
    }
}

#[derive(Parser)]
#[command(name = "perronlab", version, about = "Peripheral spectra of positive operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, peripheral spectrum, cyclicity and dimension estimates.
    Spectrum(SpectrumArgs),
    /// Weighting-scheme probes.
    #[command(subcommand)]
    Ws(WsCommand),
    /// Fixed space of a Markov operator.
    #[command(subcommand, name = "fixed-space")]
    FixedSpace(FixedCommand),
    /// Named example cases with checked facts.
    #[command(subcommand)]
    Gallery(GalleryCommand),
    /// Seeded property suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Operator JSON file.
    file: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    band_tol: f64,
    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    qmax: u64,
    /// Radius for matching targets such as r e^{i n theta}.
    #[arg(long, default_value_t = 1e-6)]
    match_tol: f64,
    /// Exit 1 when a dimension estimate fails.
    #[arg(long)]
    dim_check: bool,
    /// Exponent range for the dimension estimates, `lo:hi`.
    #[arg(long, allow_hyphen_values = true, default_value = "-6:6")]
    n_range: String,
    /// Print the CSV table instead of JSON.
    #[arg(long)]
    csv: bool,
    /// Write PREFIX.json and PREFIX.csv instead of printing the report.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum WsCommand {
    /// Norms of f_j(T) over a prefix of a scheme, as CSV.
    Probe {
        /// Builtin scheme (powers, cesaro, abel-net, abel-powers, exponential) or a scheme JSON file.
        #[arg(long)]
        scheme: String,
        /// Scheme parameter `key=value`, repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        op: PathBuf,
        /// Power-series truncation order.
        #[arg(long, default_value_t = 256)]
        k: usize,
        /// Number of family members evaluated.
        #[arg(long)]
        budget: Option<usize>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// sum_k a_{j,k} r_k for each member, as CSV.
    ScalarSum {
        #[arg(long)]
        scheme: String,
        #[arg(long = "param")]
        params: Vec<String>,
        /// Comma-separated nondecreasing nonnegative sequence r_0, r_1, ...
        #[arg(long)]
        seq: String,
        #[arg(long, default_value_t = 10_000)]
        k: usize,
    },
    /// Pole order of the resolvent at an eigenvalue.
    PoleOrder {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum FixedCommand {
    /// Supremum in the fixed space of fixed vectors.
    Sup {
        #[arg(long)]
        op: PathBuf,
        /// `[a,b,..];[c,d,..]`
        #[arg(long, allow_hyphen_values = true)]
        vectors: String,
        #[arg(long, default_value_t = DEFAULT_SUP_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Modulus of a fixed vector inside the fixed space.
    Modulus {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Whether the fixed space is a sublattice, with a witness if not.
    Sublattice {
        #[arg(long)]
        op: PathBuf,
    },
}

#[derive(Subcommand)]
enum GalleryCommand {
    /// Registered cases and operators.
    List,
    /// Run cases; exit 1 if any fact fails.
    Run {
        names: Vec<String>,
        #[arg(long, conflicts_with = "names")]
        all: bool,
        /// Override `key=value`, repeatable; values are read as JSON when possible.
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        csv: bool,
    },
    /// Write a registered operator as operator JSON.
    Operator {
        name: String,
        #[arg(long = "param")]
        params: Vec<String>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    suite: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest dimension drawn; 6 for lattice-powers and 8 otherwise.
    #[arg(long)]
    n: Option<usize>,
    /// Print the reports as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_pool(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(m) => eprintln!("check failed: {m}"),
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Compute(m) => eprintln!("computation failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Ws(c) => cmd_ws(c),
        Command::FixedSpace(c) => cmd_fixed_space(c),
        Command::Gallery(c) => cmd_gallery(c),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn write(path: PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(&path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<(), Failure> {
    let (t, c) = load_operator(&a.file)?;
    let opts = ReportOptions {
        eigen: EigenOptions::default(),
        band_tol: a.band_tol,
        match_tol: a.match_tol,
        q_max: a.qmax,
        n_range: Some(parse_range(&a.n_range)?),
    };
    let rep = spectral_report(&t, c.as_ref(), &opts).map_err(compute)?;
    let text = to_string_fixed(&rep.to_json());
    match a.out {
        Some(prefix) => {
            let base = prefix.to_string_lossy().into_owned();
            write(PathBuf::from(format!("{base}.json")), &text)?;
            write(PathBuf::from(format!("{base}.csv")), &rep.to_csv())?;
        }
        None if a.csv => print!("{}", rep.to_csv()),
        None => print!("{text}"),
    }
    let violations = rep.dim_violations();
    if a.dim_check && !violations.is_empty() {
        let list: Vec<String> = violations
            .iter()
            .map(|v| format!("theta={:.6} n={} ({} > {})", v.theta, v.n, v.lhs, v.rhs))
            .collect();
        return Err(Failure::Check(format!("dimension estimate violated: {}", list.join(", "))));
    }
    Ok(())
}

fn cmd_ws(c: WsCommand) -> Result<(), Failure> {
    match c {
        WsCommand::Probe { scheme, params, op, k, budget, json } => {
            let fam = load_scheme(&scheme, &parse_params(&params)?)?;
            let (t, _) = load_operator(&op)?;
            let rep = ws_bounded_probe(&t, &fam, k, budget.unwrap_or(fam.len())).map_err(compute)?;
            if json {
                let rows: Vec<Value> = rep
                    .rows
                    .iter()
                    .map(|r| json!({ "index": r.index, "norm": r.norm, "tail_flag": r.tail_flag }))
                    .collect();
                let v = json!({
                    "rows": rows,
                    "max_norm": rep.max_norm,
                    "monotone_growth": rep.monotone_growth,
                    "slope": rep.slope,
                    "verdict": rep.verdict.as_str(),
                });
                print!("{}", to_string_fixed(&v));
            } else {
                print!("{}", rep.to_csv());
                eprintln!("verdict: {} (slope {:.3})", rep.verdict.as_str(), rep.slope);
            }
        }
        WsCommand::ScalarSum { scheme, params, seq, k } => {
            let fam = load_scheme(&scheme, &parse_params(&params)?)?;
            let r = parse_reals(&seq)?;
            let sums = weighted_scalar_sum(&fam, &r, k).map_err(|e| Failure::Input(e.to_string()))?;
            println!("index,sum,tail_flag");
            for s in sums {
                println!("{:.16e},{:.16e},{}", s.index, s.sum, s.tail_flag);
            }
        }
        WsCommand::PoleOrder { op, at, tol } => {
            let (t, _) = load_operator(&op)?;
            let order = pole_order_at(&t, parse_complex(&at)?, tol).map_err(compute)?;
            println!("{order}");
        }
    }
    Ok(())
}

fn real_values(v: &LatticeVector) -> Value {
    if v.is_real(0.0) {
        json!(v.re())
    } else {
        Value::Array(v.entries().iter().map(|z| complex_to_value(*z)).collect())
    }
}

fn fixed_handle(op: &Path) -> Result<FixedSpaceHandle, Failure> {
    let (t, _) = load_operator(op)?;
    FixedSpaceHandle::new(t, DEFAULT_SUP_TOL).map_err(compute)
}

fn to_vector(h: &FixedSpaceHandle, entries: &[C64]) -> Result<LatticeVector, Failure> {
    LatticeVector::from_complex(entries, h.model().clone()).map_err(|e| Failure::Input(e.to_string()))
}

fn cmd_fixed_space(c: FixedCommand) -> Result<(), Failure> {
    let v = match c {
        FixedCommand::Sup { op, vectors, tol, max_iter } => {
            let h = fixed_handle(&op)?;
            let g = parse_vectors(&vectors)?
                .iter()
                .map(|e| to_vector(&h, e))
                .collect::<Result<Vec<_>, _>>()?;
            let s = sup_in_fixed_space(&h, &g, tol, max_iter).map_err(compute)?;
            json!({
                "value": real_values(&s.value),
                "iterations": s.iterations,
                "max_decrease": s.max_decrease,
                "residual": s.residual,
                "projection_distance": s.projection_distance,
            })
        }
        FixedCommand::Modulus { op, vector } => {
            let h = fixed_handle(&op)?;
            let mut vs = parse_vectors(&vector)?;
            if vs.len() != 1 {
                return Err(Failure::Input("expected exactly one vector".into()));
            }
            let f = to_vector(&h, &vs.remove(0))?;
            let m = f_modulus(&h, &f).map_err(compute)?;
            json!({
                "value": real_values(&m.value),
                "norm_gap": m.norm_gap,
                "iterations": m.sup.iterations,
                "residual": m.sup.residual,
            })
        }
        FixedCommand::Sublattice { op } => {
            let h = fixed_handle(&op)?;
            let s = is_fixed_space_sublattice(&h);
            json!({
                "dim": h.dim(),
                "basis": h.basis_vectors().iter().map(real_values).collect::<Vec<_>>(),
                "is_sublattice": s.is_sublattice,
                "witness": s.witness.as_ref().map(real_values),
                "witness_residual": s.witness_residual,
            })
        }
    };
    print!("{}", to_string_fixed(&v));
    Ok(())
}

fn cmd_gallery(c: GalleryCommand) -> Result<(), Failure> {
    match c {
        GalleryCommand::List => {
            println!("cases:");
            for case in registry() {
                let note = if case.run.is_some() { "" } else { " (not implemented)" };
                println!("  {:<28} {}{}", case.name, case.summary, note);
            }
            println!("operators:");
            for o in OPERATORS {
                println!("  {:<28} {}", o.name, o.summary);
            }
        }
        GalleryCommand::Run { names, all, params, csv } => {
            let names: Vec<String> = if all {
                registry().iter().filter(|c| c.run.is_some()).map(|c| c.name.to_string()).collect()
            } else {
                names
            };
            if names.is_empty() {
                return Err(Failure::Input("no case named; use --all or give case names".into()));
            }
            let overrides = parse_params(&params)?;
            let reports = names
                .iter()
                .map(|n| run_case(n, &overrides).map_err(gallery_failure))
                .collect::<Result<Vec<_>, _>>()?;
            if csv {
                for (i, r) in reports.iter().enumerate() {
                    let text = r.to_csv();
                    // Header once.
                    print!("{}", if i == 0 { &text[..] } else { text.split_once('\n').map_or("", |x| x.1) });
                }
            } else if reports.len() == 1 {
                print!("{}", to_string_fixed(&reports[0].to_json()));
            } else {
                let all: Vec<Value> = reports.iter().map(|r| r.to_json()).collect();
                print!("{}", to_string_fixed(&Value::Array(all)));
            }
            let failed: Vec<String> = reports
                .iter()
                .flat_map(|r| r.failures().into_iter().map(move |f| format!("{}/{}", r.name, f.id)))
                .collect();
            if !failed.is_empty() {
                return Err(Failure::Check(failed.join(", ")));
            }
        }
        GalleryCommand::Operator { name, params } => {
            let (t, c) = named_operator(&name, &parse_params(&params)?).map_err(gallery_failure)?;
            let file = OperatorFile::from_parts(&t, c.as_ref());
            let v = serde_json::to_value(&file).map_err(|e| Failure::Compute(e.to_string()))?;
            print!("{}", to_string_fixed(&v));
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let names: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        return Err(Failure::Input(format!("unknown suite {:?}; one of {} or all", a.suite, SUITES.join(", "))));
    };
    let mut reports = Vec::new();
    for name in names {
        let n = a.n.unwrap_or(if name == "lattice-powers" { 6 } else { 8 });
        let opts = SuiteOptions { trials: a.trials, seed: a.seed, n };
        reports.push(run_suite(name, &opts).map_err(gallery_failure)?);
    }
    if a.json {
        let v: Vec<Value> = reports.iter().map(|r| r.to_json()).collect();
        print!("{}", to_string_fixed(&if v.len() == 1 { v[0].clone() } else { Value::Array(v) }));
    } else {
        for r in &reports {
            let status = if r.all_passed() { "pass" } else { "FAIL" };
            println!("{}: {}/{} {}", r.suite, r.passed, r.trials, status);
            for f in r.failures.iter().take(5) {
                println!("  {}", serde_json::to_string(f).unwrap_or_default());
            }
        }
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.all_passed()).map(|r| r.suite.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("suites with failures: {}", failed.join(", "))))
    }
}
