//! `sklyanin`: lemma verification, point counts, series coefficients and
//! two-dimensional representations from the command line.
//!
//! Exit codes: 0 verified, 1 mathematical mismatch, 2 configuration error.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sklyanin_core::clifford::{self, C64};
use sklyanin_core::count::{self, CountTask, Strategy};
use sklyanin_core::field::make_field_of_size;
use sklyanin_core::series::{self, CoeffReport, Mu3Mode};
use sklyanin_core::strata::{self, StratumName};
use sklyanin_core::verify::{self, CountCache, Grid, Lemma, LemmaReport, VerifyError, VerifyOptions};
use sklyanin_core::Sign;

const SCHEMA_VERSION: &str = "v1";

/// Largest `q` for which `verify all` runs the `GF(q^2)` checks without `--force`.
const LEMMA8_DEFAULT_LIMIT: u64 = 7;

#[derive(Parser, Debug)]
#[command(name = "sklyanin", version, about = "Counts, coefficients and representations for the quaternionic Sklyanin algebra")]
struct Cli {
    /// Worker threads for counting (default: available parallelism).
    #[arg(long, global = true, env = "SKLYANIN_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a lemma's checks (3, 4, 5, 6, 7, 8, recursion, theorem, discrepancy, clifford, cells, all).
    Verify(VerifyArgs),
    /// Count points of one stratum at one level.
    Count(CountArgs),
    /// Print the t^2 coefficient of the DT series.
    Coeff(CoeffArgs),
    /// Build a two-dimensional representation over a point (u, v, w).
    Rep(RepArgs),
    /// Compare the conjectured and computed coefficients.
    Discrepancy(DiscrepancyArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    lemma: String,
    #[arg(long, value_delimiter = ',', default_values_t = [5u64, 7, 13])]
    q: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1i64, 2], allow_negative_numbers = true)]
    c: Vec<i64>,
    /// Allow direct MW2 counts above q = 5.
    #[arg(long)]
    force: bool,
    /// Keep {rho^3 = 1} and {a^3 = 4} apart in the coefficient.
    #[arg(long)]
    strict_mu3: bool,
    /// Random points per family in the representation checks.
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long)]
    stratum: StratumName,
    #[arg(long, default_value_t = 0)]
    lambda: i64,
    /// Characteristic power `q`; the field has `q^k` elements.
    #[arg(long)]
    q: u64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Field element, e.g. `2` or `1+3a` in an extension.
    #[arg(long, allow_hyphen_values = true)]
    c: String,
    /// Cube root of unity selecting the X branch.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    /// `direct`, `fiber` (upper block) or `fiber:v1,v2,...`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CoeffMode {
    Conjecture,
    Computed,
    Theorem,
}

#[derive(Args, Debug)]
struct CoeffArgs {
    #[arg(long, value_enum)]
    mode: CoeffMode,
    #[arg(long, default_value_t = 2)]
    order: u32,
    /// `q=5,c=1`; repeatable.
    #[arg(long)]
    specialize: Vec<String>,
    #[arg(long)]
    strict_mu3: bool,
}

#[derive(Args, Debug)]
struct RepArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    /// `u,v,w`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Vec<f64>,
    #[arg(long, default_value = "plus")]
    sign: Sign,
}

#[derive(Args, Debug)]
struct DiscrepancyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [7u64, 13])]
    q: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1i64, 2], allow_negative_numbers = true)]
    c: Vec<i64>,
    #[arg(long)]
    strict_mu3: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Mismatch,
    Config(String),
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn config(e: impl ToString) -> Failure {
    Failure::Config(e.to_string())
}

fn mode(strict: bool) -> Mu3Mode {
    if strict {
        Mu3Mode::Strict
    } else {
        Mu3Mode::Merged
    }
}

fn tagged(kind: &str, mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), json!(format!("sklyanin.{kind}/{SCHEMA_VERSION}")));
    }
    v
}

fn print_json(kind: &str, v: Value) {
    println!("{}", tagged(kind, v));
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit_report(r: &LemmaReport, format: Format) {
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(r).expect("serializable");
            v["passed"] = json!(r.passed());
            print_json("verify", v);
        }
        Format::Csv => {
            for c in &r.checks {
                println!(
                    "{},{},{},{},{},{}",
                    r.lemma.as_str(),
                    csv_escape(&c.instance),
                    csv_escape(&c.expected),
                    csv_escape(&c.observed),
                    c.pass,
                    c.informational
                );
            }
        }
        Format::Text => {
            println!("== {} ({} ms): {}", r.lemma.as_str(), r.millis, if r.passed() { "PASS" } else { "FAIL" });
            for c in &r.checks {
                let tag = match (c.pass, c.informational) {
                    (true, false) => "ok  ",
                    (false, false) => "FAIL",
                    (_, true) => "info",
                };
                println!("  {tag} {}: expected {} observed {}", c.instance, c.expected, c.observed);
            }
            for n in &r.notes {
                println!("  note: {n}");
            }
        }
    }
}

fn cmd_verify(a: VerifyArgs, format: Format) -> Result<(), Failure> {
    let lemmas: Vec<Lemma> = if a.lemma == "all" { Lemma::ALL.to_vec() } else { vec![a.lemma.parse().map_err(config)?] };
    let opts = VerifyOptions {
        grid: Grid::new(a.q, a.c),
        force: a.force,
        mode: mode(a.strict_mu3),
        clifford_points: a.points,
        seed: a.seed,
    };
    // Configuration errors surface before any long count starts.
    let uses_grid = lemmas.iter().any(|l| !matches!(l, Lemma::Cells | Lemma::Lemma3 | Lemma::Theorem | Lemma::Clifford));
    if uses_grid {
        opts.grid.pairs()?;
    }
    if format == Format::Csv {
        println!("lemma,instance,expected,observed,pass,informational");
    }
    let mut cache = CountCache::new();
    let mut verdicts = Vec::new();
    let all = lemmas.len() > 1;
    for lemma in lemmas.iter().copied() {
        // `verify all` keeps the expensive lemmas at desk scale unless forced.
        let limit = match lemma {
            Lemma::Recursion => verify::MW2_DEFAULT_LIMIT,
            Lemma::Lemma8 => LEMMA8_DEFAULT_LIMIT,
            _ => u64::MAX,
        };
        let mut local = opts.clone();
        if all && !opts.force {
            local.grid.qs.retain(|&q| q <= limit);
            if local.grid.qs.is_empty() {
                eprintln!("note: {} skipped (no q <= {limit}; pass --force)", lemma.as_str());
                continue;
            }
        }
        let r = verify::run(lemma, &local, &mut cache)?;
        emit_report(&r, format);
        verdicts.push((lemma, r.passed()));
    }
    if lemmas.len() > 1 && format == Format::Text {
        println!("== summary");
        for (l, ok) in &verdicts {
            println!("  {:<12} {}", l.as_str(), if *ok { "PASS" } else { "FAIL" });
        }
    }
    if verdicts.iter().all(|(_, ok)| *ok) {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, Failure> {
    match s {
        "direct" => Ok(Strategy::Direct),
        "fiber" => Ok(Strategy::upper_block()),
        _ => match s.strip_prefix("fiber:") {
            Some(vars) => Ok(Strategy::linear_fiber(&vars.split(',').collect::<Vec<_>>())),
            None => Err(config(format!("unknown strategy '{s}'"))),
        },
    }
}

fn cmd_count(a: CountArgs, format: Format) -> Result<(), Failure> {
    let size = a.q.checked_pow(a.k).ok_or_else(|| config("field size overflows"))?;
    if a.stratum == StratumName::MW2 && size > verify::MW2_DEFAULT_LIMIT && !a.force {
        let n = count::mw2_direct_evaluations(size);
        let est = n as f64 / count::mw2_direct_evaluations(5) as f64 * 11.0;
        return Err(config(format!(
            "mw2 over GF({size}) enumerates {n} points (roughly {est:.0} s single-threaded); pass --force to run it"
        )));
    }
    let f = make_field_of_size(size).map_err(config)?;
    let c = f.parse_element(&a.c).map_err(config)?;
    let strategy = match &a.strategy {
        Some(s) => parse_strategy(s)?,
        None => count::default_strategy(a.stratum),
    };
    let mut task = CountTask::new(strata::stratum(a.stratum, a.lambda), f.clone(), c, strategy);
    if let Some(r) = &a.rho {
        task = task.with_rho(f.parse_element(r).map_err(config)?);
    }
    let res = count::count_points(&task).map_err(config)?;
    match format {
        Format::Json => print_json("count", serde_json::to_value(&res).expect("serializable")),
        Format::Csv => {
            println!("{}", count::CountResult::CSV_HEADER);
            println!("{}", res.csv_row());
        }
        Format::Text => println!(
            "{} lambda={} over GF({}) c={}{}: {} points ({}, {} ms)",
            res.stratum,
            res.lambda,
            size,
            res.c,
            res.rho.as_ref().map(|r| format!(" rho={r}")).unwrap_or_default(),
            res.count,
            res.strategy,
            res.millis
        ),
    }
    Ok(())
}

fn parse_pair(s: &str) -> Result<(u64, i64), Failure> {
    let (mut q, mut c) = (None, None);
    for part in s.split(',') {
        match part.split_once('=') {
            Some(("q", v)) => q = Some(v.trim().parse::<u64>().map_err(config)?),
            Some(("c", v)) => c = Some(v.trim().parse::<i64>().map_err(config)?),
            _ => return Err(config(format!("expected q=<int>,c=<int>, got '{s}'"))),
        }
    }
    match (q, c) {
        (Some(q), Some(c)) => Ok((q, c)),
        _ => Err(config(format!("expected q=<int>,c=<int>, got '{s}'"))),
    }
}

fn cmd_coeff(a: CoeffArgs, format: Format) -> Result<(), Failure> {
    let m = mode(a.strict_mu3);
    let (label, coefficient) = match a.mode {
        CoeffMode::Conjecture => ("conjecture", series::conjecture_coefficient(a.order).map_err(config)?),
        CoeffMode::Computed | CoeffMode::Theorem if a.order != 2 => {
            return Err(config("computed and theorem coefficients exist only at order 2"));
        }
        CoeffMode::Computed => ("computed", series::computed_coefficient(m).map_err(config)?),
        CoeffMode::Theorem => ("theorem", series::theorem_coefficient(m)),
    };
    let pairs = a.specialize.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>, _>>()?;
    for &(q, c) in &pairs {
        Grid::new(vec![q], vec![c]).pairs()?;
    }
    let mut report = CoeffReport::new(a.order, label, coefficient);
    report.specialize_at(&pairs).map_err(config)?;
    match format {
        Format::Json => print_json("coeff", serde_json::to_value(&report).expect("serializable")),
        Format::Csv => {
            println!("mode,order,q,c,value");
            for s in &report.specializations {
                println!("{label},{},{},{},{}", a.order, s.q, s.c, csv_escape(&rat_text(&s.value_num, &s.value_den)));
            }
        }
        Format::Text => {
            println!("{}", report.coefficient);
            for s in &report.specializations {
                println!("  q={} c={}: {}", s.q, s.c, rat_text(&s.value_num, &s.value_den));
            }
        }
    }
    Ok(())
}

fn rat_text(num: &str, den: &str) -> String {
    if den == "1" {
        num.to_string()
    } else {
        format!("{num}/{den}")
    }
}

fn cmd_rep(a: RepArgs, format: Format) -> Result<(), Failure> {
    if a.point.len() != 3 {
        return Err(config(format!("--point needs three values u,v,w, got {}", a.point.len())));
    }
    let point = [C64::new(a.point[0], 0.0), C64::new(a.point[1], 0.0), C64::new(a.point[2], 0.0)];
    let rep = clifford::build_rep(C64::new(a.c, 0.0), point, a.sign).map_err(|e| match e {
        clifford::CliffordError::ZeroPoint => config(e),
        clifford::CliffordError::Residual(_) => Failure::Mismatch,
    })?;
    let res = clifford::verify_rep(&rep);
    match format {
        Format::Json => print_json("rep", rep.to_json()),
        Format::Csv => {
            println!("matrix,row,col,re,im");
            for (name, m) in ["X", "Y", "Z"].iter().zip(&rep.matrices) {
                for (i, row) in m.iter().enumerate() {
                    for (j, z) in row.iter().enumerate() {
                        println!("{name},{i},{j},{},{}", z.re, z.im);
                    }
                }
            }
        }
        Format::Text => {
            println!("case {:?}, permutation {:?}, sign {:?}", rep.case, rep.perm, rep.sign);
            for (name, m) in ["X", "Y", "Z"].iter().zip(&rep.matrices) {
                println!("psi({name}) = [[{}, {}], [{}, {}]]", m[0][0], m[0][1], m[1][0], m[1][1]);
            }
            println!("residuals: relations {:e}, centrality {:e}, trace {:e}", res.relations, res.centrality, res.trace);
        }
    }
    Ok(())
}

fn cmd_discrepancy(a: DiscrepancyArgs, format: Format) -> Result<(), Failure> {
    let pairs: Vec<(u64, i64)> = a
        .q
        .iter()
        .flat_map(|&q| a.c.iter().map(move |&c| (q, c)))
        .filter(|&(q, c)| Grid::new(vec![q], vec![c]).pairs().is_ok())
        .collect();
    if pairs.is_empty() {
        return Err(config("no admissible (q, c) pair"));
    }
    let rep = series::discrepancy_report(&pairs, mode(a.strict_mu3)).map_err(config)?;
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(&rep).expect("serializable");
            v["confirms_discrepancy"] = json!(rep.confirms_discrepancy());
            print_json("discrepancy", v);
        }
        Format::Csv => {
            println!("q,c,conjecture,theorem,difference,zero");
            for r in &rep.rows {
                println!("{},{},{},{},{},{}", r.q, r.c, csv_escape(&r.conjecture), csv_escape(&r.theorem), csv_escape(&r.difference), r.zero);
            }
        }
        Format::Text => {
            println!("mode: {:?}", rep.mode);
            println!("conjecture - theorem = {}", rep.difference);
            println!("nonzero: {}, numerator mentions E_c: {}", rep.difference_nonzero, rep.numerator_mentions_ec);
            for r in &rep.rows {
                println!("  q={} c={}: conjecture {} theorem {} gap {}", r.q, r.c, r.conjecture, r.theorem, r.difference);
            }
        }
    }
    if rep.confirms_discrepancy() {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let format = cli.format;
    let out = match cli.command {
        Command::Verify(a) => cmd_verify(a, format),
        Command::Count(a) => cmd_count(a, format),
        Command::Coeff(a) => cmd_coeff(a, format),
        Command::Rep(a) => cmd_rep(a, format),
        Command::Discrepancy(a) => cmd_discrepancy(a, format),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
