//! `bellbound` command-line tool. Every subcommand prints one JSON report on
//! standard output; diagnostics go to standard error.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellbound::operator::formula_warning;
use bellbound::quantum::GramDimension;
use bellbound::search::{append_record, read_ledger, RatioSearch};
use bellbound::{
    bell_value, chsh_matrix, classical_bound, load_matrix, norm_estimate,
    normalized_violation_estimate, paper_bound_formula, quantum_bound, realize,
    reference_constants, save_matrix, square_bell_operator, tensor_power, CoefficientMatrix, Error,
    QuantumOptions, SearchRecord,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "bellbound",
    version,
    about = "Classical and quantum bounds of Bell functionals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Chsh,
    Tensor,
}

#[derive(Subcommand)]
enum Command {
    /// Write a CHSH or tensor-power coefficient matrix.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        /// Tensor degree (1 for CHSH).
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact classical bound with a witness.
    Classical {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Quantum bound with a dual certificate.
    Quantum {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// Use Gram vectors of dimension n + m instead of min(n, m).
        #[arg(long)]
        full_dim: bool,
        /// Write the dual certificate to this file.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Exit with status 4 when the solver does not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Symbolic square of the Bell operator.
    Expand {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        commuting: bool,
    },
    /// Closed-form norm estimate for the tensor-power family.
    Estimate {
        #[arg(long)]
        d: u32,
        #[arg(long, conflicts_with = "normalized")]
        commuting: bool,
        /// Divide by the classical value 2^(3d/2).
        #[arg(long)]
        normalized: bool,
    },
    /// Explicit observables and state attaining the quantum optimum.
    Realize {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random search for large quantum/classical ratios.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Leaderboard file; the best record is appended.
        #[arg(long)]
        ledger: PathBuf,
    },
    /// Summarize a leaderboard.
    Report {
        #[arg(long)]
        ledger: PathBuf,
    },
}

struct Report {
    command: &'static str,
    seed: Option<u64>,
    inputs: Value,
    results: Value,
    comparison: Vec<Value>,
}

impl Report {
    fn new(command: &'static str, seed: Option<u64>, inputs: Value) -> Self {
        Self {
            command,
            seed,
            inputs,
            results: Value::Null,
            comparison: Vec::new(),
        }
    }

    fn compare(&mut self, label: String, paper_value: f64, computed_value: f64) {
        self.comparison.push(json!({
            "label": label,
            "paper_value": paper_value,
            "computed_value": computed_value,
            "difference": (computed_value - paper_value).abs(),
        }));
    }

    fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "inputs": self.inputs,
            "results": self.results,
            "paper_comparison": self.comparison,
        })
    }
}

enum Failure {
    Lib(Error),
    Usage(String),
    /// The report is complete but the solver missed its tolerance.
    NotConverged(Report),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type Outcome = std::result::Result<Report, Failure>;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn read_matrix(path: &Path) -> Result<CoefficientMatrix, Failure> {
    let file = File::open(path).map_err(|e| {
        Failure::Lib(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })?;
    Ok(load_matrix(BufReader::new(file))?)
}

fn write_json(path: &Path, doc: &Value) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, doc).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn family_of(a: &CoefficientMatrix) -> Option<u32> {
    a.tensor_power_degree()
}

fn family_name(d: u32) -> String {
    if d == 1 {
        "CHSH".into()
    } else {
        format!("tensor power d={d}")
    }
}

fn generate(family: Family, d: Option<u32>, out: &Path) -> Outcome {
    let (a, d) = match (family, d) {
        (Family::Chsh, None | Some(1)) => (chsh_matrix(), 1),
        (Family::Chsh, Some(d)) => {
            return Err(Failure::Usage(format!(
                "the chsh family has d = 1, got {d}"
            )))
        }
        (Family::Tensor, Some(d)) => (tensor_power(d)?, d),
        (Family::Tensor, None) => {
            return Err(Failure::Usage(
                "--d is required for the tensor family".into(),
            ))
        }
    };
    let mut w = BufWriter::new(File::create(out)?);
    save_matrix(&a, &mut w)?;
    w.flush()?;
    let mut report = Report::new(
        "generate",
        None,
        json!({ "family": family_name(d), "d": d, "out": path_str(out) }),
    );
    report.results = json!({ "rows": a.rows(), "cols": a.cols() });
    Ok(report)
}

fn classical(path: &Path) -> Outcome {
    let a = read_matrix(path)?;
    let res = classical_bound(&a)?;
    let mut report = Report::new("classical", None, json!({ "matrix": path_str(path) }));
    report.results = serde_json::to_value(&res).map_err(std::io::Error::from)?;
    match family_of(&a) {
        Some(1) => report.compare("CHSH classical bound".into(), 2.0, res.bound),
        Some(2) => report.compare("four-observable classical bound".into(), 8.0, res.bound),
        _ => {}
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn quantum(
    path: &Path,
    restarts: usize,
    tol: f64,
    seed: u64,
    max_iters: usize,
    full_dim: bool,
    certificate: Option<&Path>,
    strict: bool,
) -> Outcome {
    let a = read_matrix(path)?;
    let opts = QuantumOptions {
        restarts,
        max_iters,
        tol,
        seed,
        gram_dim: if full_dim {
            GramDimension::Full
        } else {
            GramDimension::MinSide
        },
        ..QuantumOptions::default()
    };
    let res = quantum_bound(&a, &opts)?;
    if let Some(cert) = certificate {
        write_json(
            cert,
            &serde_json::to_value(&res.dual).map_err(std::io::Error::from)?,
        )?;
    }
    let mut report = Report::new(
        "quantum",
        Some(seed),
        json!({
            "matrix": path_str(path),
            "restarts": restarts,
            "tol": tol,
            "max_iters": max_iters,
            "gram_dim": opts.gram_dim.resolve(&a),
            "certificate": certificate.map(path_str),
        }),
    );
    report.results = json!({
        "objective": res.primal.objective,
        "upper_bound": res.dual.upper_bound,
        "gap": res.gap,
        "converged": res.converged,
        "best_restart": res.best_restart,
        "refinement_sweeps": res.refinement_sweeps,
        "primal": res.primal,
        "dual": res.dual,
        "restarts": res.restarts,
    });
    match family_of(&a) {
        Some(1) => report.compare(
            "Tsirelson bound 2*sqrt(2)".into(),
            2.0 * 2f64.sqrt(),
            res.primal.objective,
        ),
        Some(d) => {
            let general = paper_bound_formula(d, false)?;
            report.compare(
                format!("general-observable norm estimate vs certified quantum value, d={d}"),
                general,
                res.dual.upper_bound,
            );
            let commuting = paper_bound_formula(d, true)?;
            report.compare(
                format!("commuting-observable norm estimate vs certified quantum value, d={d}"),
                commuting,
                res.dual.upper_bound,
            );
        }
        None => {}
    }
    if strict && !res.converged {
        eprintln!("quantum: gap {:.3e} exceeds tolerance {tol:.3e}", res.gap);
        return Err(Failure::NotConverged(report));
    }
    Ok(report)
}

fn expand(path: &Path, commuting: bool) -> Outcome {
    let a = read_matrix(path)?;
    let expr = square_bell_operator(&a)?;
    let shown = if commuting {
        expr.with_commuting_sites()
    } else {
        expr.clone()
    };
    let estimate = norm_estimate(&expr, commuting);
    let mut report = Report::new(
        "expand",
        None,
        json!({ "matrix": path_str(path), "commuting": commuting }),
    );
    report.results = json!({
        "expression": shown.to_json(),
        "commutator_terms": shown.commutators.len(),
        "anticommutator_terms": shown.anticommutators.len(),
        "residual_terms": shown.residual.len(),
        "norm_estimate": estimate,
    });
    match family_of(&a) {
        Some(1) if !commuting => report.compare(
            "Tsirelson bound from the squared operator".into(),
            2.0 * 2f64.sqrt(),
            estimate,
        ),
        Some(d) if formula_warning(d, commuting).is_none() => {
            if let Ok(formula) = paper_bound_formula(d, commuting) {
                let kind = if commuting { "commuting" } else { "general" };
                report.compare(
                    format!("closed-form {kind} norm estimate, d={d}"),
                    formula,
                    estimate,
                );
            }
        }
        _ => {}
    }
    Ok(report)
}

fn estimate(d: u32, commuting: bool, normalized: bool) -> Outcome {
    let value = if normalized {
        normalized_violation_estimate(d)?
    } else {
        paper_bound_formula(d, commuting)?
    };
    let warning = if normalized {
        None
    } else {
        formula_warning(d, commuting)
    };
    if let Some(w) = warning {
        eprintln!("estimate: {w}");
    }
    let mut report = Report::new(
        "estimate",
        None,
        json!({ "d": d, "commuting": commuting, "normalized": normalized }),
    );
    report.results = json!({ "value": value, "warning": warning });
    match (d, normalized, commuting) {
        (2, true, _) => report.compare("normalized violation estimate, d=2".into(), 1.58, value),
        (2, false, true) => {
            report.compare("commuting-observable norm estimate, d=2".into(), 8.0, value)
        }
        (2, false, false) => report.compare(
            "general-observable norm estimate, d=2".into(),
            4.0 * 10f64.sqrt(),
            value,
        ),
        _ => {}
    }
    if normalized && d >= 20 {
        report.compare(format!("large-d limit sqrt(3), d={d}"), 1.73, value);
    }
    Ok(report)
}

fn realize_cmd(path: &Path, seed: u64, out: &Path) -> Outcome {
    let a = read_matrix(path)?;
    let q = quantum_bound(
        &a,
        &QuantumOptions {
            seed,
            ..QuantumOptions::default()
        },
    )?;
    let real = realize(&a, &q.primal)?;
    let value = bell_value(&real, &a)?;
    write_json(out, &real.to_json())?;
    let mut report = Report::new(
        "realize",
        Some(seed),
        json!({ "matrix": path_str(path), "out": path_str(out) }),
    );
    report.results = json!({
        "dim": real.dim,
        "gram_objective": q.primal.objective,
        "bell_value": value,
        "difference": (value - q.primal.objective).abs(),
        "max_involution_defect": real.max_involution_defect(),
        "converged": q.converged,
    });
    if family_of(&a) == Some(1) {
        report.compare(
            "Tsirelson bound attained by realization".into(),
            2.0 * 2f64.sqrt(),
            value,
        );
    }
    Ok(report)
}

fn record_json(rec: &SearchRecord) -> Result<Value, Failure> {
    Ok(serde_json::to_value(rec).map_err(std::io::Error::from)?)
}

fn search(n: usize, m: usize, iters: usize, seed: u64, ledger: &Path) -> Outcome {
    let out = RatioSearch::new(n, m, iters, seed).run()?;
    let file = OpenOptions::new().create(true).append(true).open(ledger)?;
    let mut w = BufWriter::new(file);
    append_record(&out.best, &mut w)?;
    w.flush()?;
    let mut report = Report::new(
        "search",
        Some(seed),
        json!({ "n": n, "m": m, "iters": iters, "ledger": path_str(ledger) }),
    );
    report.results = json!({
        "best": record_json(&out.best)?,
        "improvements": out.improvements.len(),
        "reference_constants": reference_constants(),
    });
    if n == 2 && m == 2 {
        report.compare(
            "two-observable maximum ratio sqrt(2)".into(),
            2f64.sqrt(),
            out.best.ratio,
        );
    }
    Ok(report)
}

fn report_cmd(ledger: &Path) -> Outcome {
    let records = read_ledger(BufReader::new(File::open(ledger)?))?;
    let mut best: Vec<&SearchRecord> = Vec::new();
    for rec in &records {
        let shape = (rec.matrix.rows(), rec.matrix.cols());
        match best
            .iter_mut()
            .find(|b| (b.matrix.rows(), b.matrix.cols()) == shape)
        {
            Some(b) if rec.ratio > b.ratio => *b = rec,
            Some(_) => {}
            None => best.push(rec),
        }
    }
    best.sort_by_key(|b| (b.matrix.rows(), b.matrix.cols()));
    let mut report = Report::new("report", None, json!({ "ledger": path_str(ledger) }));
    let constants = reference_constants();
    report.results = json!({
        "records": records.len(),
        "best_by_shape": best.iter().map(|r| record_json(r)).collect::<Result<Vec<_>, _>>()?,
        "reference_constants": constants,
        "fishburn_reeds": (2..=5).map(|q| json!({ "q": q, "size": q * (q - 1), "lower_bound": constants.fishburn_reeds(q).ok() })).collect::<Vec<_>>(),
    });
    if let Some(b) = best
        .iter()
        .find(|b| b.matrix.rows() == 2 && b.matrix.cols() == 2)
    {
        report.compare(
            "two-observable maximum ratio sqrt(2)".into(),
            2f64.sqrt(),
            b.ratio,
        );
    }
    Ok(report)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Generate { family, d, out } => generate(family, d, &out),
        Command::Classical { matrix } => classical(&matrix),
        Command::Quantum {
            matrix,
            restarts,
            tol,
            seed,
            max_iters,
            full_dim,
            certificate,
            strict,
        } => quantum(
            &matrix,
            restarts,
            tol,
            seed,
            max_iters,
            full_dim,
            certificate.as_deref(),
            strict,
        ),
        Command::Expand { matrix, commuting } => expand(&matrix, commuting),
        Command::Estimate {
            d,
            commuting,
            normalized,
        } => estimate(d, commuting, normalized),
        Command::Realize { matrix, seed, out } => realize_cmd(&matrix, seed, &out),
        Command::Search {
            n,
            m,
            iters,
            seed,
            ledger,
        } => search(n, m, iters, seed, &ledger),
        Command::Report { ledger } => report_cmd(&ledger),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BELLBOUND_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("BELLBOUND_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn print_report(report: &Report) {
    let text =
        serde_json::to_string_pretty(&report.to_json()).expect("report values are finite JSON");
    let mut out = std::io::stdout().lock();
    // a closed pipe is not an error for a report writer
    let _ = writeln!(out, "{text}").and_then(|()| out.flush());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli) {
        Ok(report) => {
            print_report(&report);
            ExitCode::SUCCESS
        }
        Err(Failure::NotConverged(report)) => {
            print_report(&report);
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::SizeLimit(_) | Error::Domain(_) => EXIT_LIMIT,
                Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            })
        }
    }
}
