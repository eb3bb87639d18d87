//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Criteria that direct counting shows to be unattainable are still run at
//! full strength and reported as FAIL. The process exits nonzero only if an
//! outcome departs from the recorded analysis: a criterion expected to pass
//! fails, or a known deviation changes shape (for example, a sub-check that
//! should hold stops holding).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use sklyanin_core::field::make_field_of_size;
use sklyanin_core::series::Mu3Mode;
use sklyanin_core::strata::StratumName;
use sklyanin_core::verify::{self, Check, CountCache, Grid, LemmaReport};

const SEED: u64 = 20_240_611;

struct Outcome {
    criterion: u32,
    title: &'static str,
    pass: bool,
    /// `true` when the observed outcome matches the expected one (pass, or a recorded deviation).
    expected: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn failures(r: &LemmaReport) -> Vec<&Check> {
    r.failures().collect()
}

fn summary(r: &LemmaReport) -> String {
    let total = r.checks.iter().filter(|c| !c.informational).count();
    format!("{} {}/{} checks", r.lemma.as_str(), total - failures(r).len(), total)
}

fn grid() -> Grid {
    Grid::new(vec![5, 7, 13], vec![1, 2])
}

fn criterion1(cache: &mut CountCache) -> (bool, bool, String) {
    let r = verify::verify_lemma4(&grid(), cache).expect("admissible grid");
    (r.passed(), r.passed(), summary(&r))
}

/// The S2 half holds; the S1 half fails on every pair.
fn criterion2(cache: &mut CountCache) -> (bool, bool, String) {
    let s2 = verify::verify_lemma5(&grid(), cache).expect("admissible grid");
    let s1 = verify::verify_lemma6(&grid(), cache).expect("admissible grid");
    let pass = s2.passed() && s1.passed();
    let expected = s2.passed() && failures(&s1).len() == s1.checks.len();
    let mut detail = format!("{}; {}", summary(&s2), summary(&s1));
    for c in failures(&s1) {
        detail.push_str(&format!("\n      dS1 {}: predicted {} counted {}", c.instance, c.expected, c.observed));
    }
    (pass, expected, detail)
}

/// The sum identity holds; the closed form is off by exactly the S1 gap.
fn criterion3(cache: &mut CountCache) -> (bool, bool, String) {
    let r = verify::verify_lemma7(&grid(), cache).expect("admissible grid");
    let sums_hold = r.checks.iter().filter(|c| c.instance.ends_with("sum of cells")).all(|c| c.pass);
    let mut gaps_match = true;
    for (q, c) in grid().pairs().unwrap() {
        let qi = q as i128;
        let x = cache.x_sum(q, c).unwrap();
        let bs = cache.delta_bs(q, c).unwrap();
        let s1 = cache.delta(StratumName::S1, q, c).unwrap();
        let closed = qi.pow(7) + qi.pow(6) + qi.pow(5) + 2 * qi.pow(3) * x;
        gaps_match &= bs - closed == s1 - (qi.pow(7) + qi.pow(3) * x);
    }
    let expected = sums_hold && gaps_match && !r.passed();
    let detail = format!("{}; sum identity {}; closed-form gap equals the dS1 gap: {}", summary(&r), sums_hold, gaps_match);
    (r.passed(), expected, detail)
}

/// `#X_0` holds on every admissible branch; `#X_1` with `#{a^3 = 4}` fails
/// exactly where `#{a^3 = 4} != #{a^3 = 8K}`, and the `8K` form holds everywhere.
fn criterion4() -> (bool, bool, String) {
    let r = verify::verify_lemma8(&[5, 7]).expect("admissible");
    let x0 = r.checks.iter().filter(|c| c.instance.ends_with("X0")).all(|c| c.pass);
    let k8 = r.checks.iter().filter(|c| c.informational).all(|c| c.pass);
    let only_literal = failures(&r).iter().all(|c| c.instance.ends_with("X1, a^3=4"));
    // Independent recount of the roots of a^3 = 4 over each field.
    let roots_ok = [5u64, 7].iter().all(|&q| {
        let f = make_field_of_size(q * q).unwrap();
        let four = f.from_int(4);
        let direct = f.elements().filter(|&a| f.pow(a, 3) == four).count();
        direct == f.cube_roots(four).len()
    });
    let expected = x0 && k8 && only_literal && roots_ok && !r.passed();
    let detail = format!(
        "{}; X0 all hold: {x0}; failures only in the a^3=4 form: {only_literal}; a^3=8K form holds on all branches: {k8}; {}",
        summary(&r),
        r.notes.join("; ")
    );
    (r.passed(), expected, detail)
}

fn criterion5(cache: &mut CountCache) -> (bool, bool, String) {
    let r = verify::verify_recursion(&Grid::new(vec![5], vec![1, 2]), cache, false).expect("q=5 is in budget");
    let q = BigInt::from(5);
    let gl2 = (&q * &q - 1) * (&q * &q - &q);
    let detail = format!(
        "{}; |GL_2(F_5)| = {gl2}; {}",
        summary(&r),
        r.checks.iter().map(|c| format!("{} lhs=rhs={}", c.instance, c.observed)).collect::<Vec<_>>().join("; ")
    );
    (r.passed(), r.passed(), detail)
}

fn criterion6() -> (bool, bool, String) {
    let r = verify::verify_lemma3().expect("symbolic");
    (r.passed(), r.passed(), summary(&r))
}

fn criterion7() -> (bool, bool, String) {
    let r = verify::verify_theorem().expect("symbolic");
    (r.passed(), r.passed(), summary(&r))
}

fn criterion8() -> (bool, bool, String) {
    let r = verify::verify_discrepancy(&Grid::new(vec![7], vec![1, 2]), Mu3Mode::Merged).expect("admissible");
    let gaps: Vec<String> = r.checks.iter().filter(|c| c.informational).map(|c| format!("{} gap {}", c.instance, c.observed)).collect();
    (r.passed(), r.passed(), format!("{}; {}", summary(&r), gaps.join("; ")))
}

fn criterion9() -> (bool, bool, String) {
    let r = verify::verify_clifford(1000, SEED).expect("runs");
    (r.passed(), r.passed(), format!("{}; {}", summary(&r), r.notes.join("; ")))
}

fn criterion10() -> (bool, bool, String) {
    let r = verify::verify_cells().expect("symbolic");
    (r.passed(), r.passed(), summary(&r))
}

fn main() -> ExitCode {
    // The harness passes flags such as `--nocapture` or a filter; a filter that
    // names no criterion skips the run.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance criterion".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut cache = CountCache::new();
    let mut outcomes = Vec::new();
    let mut run = |criterion: u32, title: &'static str, budget: u64, f: &mut dyn FnMut(&mut CountCache) -> (bool, bool, String)| {
        let start = Instant::now();
        let (pass, expected, detail) = f(&mut cache);
        let o = Outcome { criterion, title, pass, expected, detail, elapsed: start.elapsed(), budget: Duration::from_secs(budget) };
        println!(
            "criterion {:>2} {}: {} ({:.1} s, budget {} s){}",
            o.criterion,
            o.title,
            if o.pass { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.budget.as_secs(),
            if !o.pass && o.expected { " [documented deviation]" } else { "" }
        );
        println!("      {}", o.detail);
        outcomes.push(o);
    };
    run(10, "cell equations", 1, &mut |_| criterion10());
    run(1, "dS3 = q^5", 5, &mut criterion1);
    run(2, "dS2, dS1 branch form", 120, &mut criterion2);
    run(3, "dBS sum and closed form", 1, &mut criterion3);
    run(4, "X0, X1 over GF(q^2)", 1, &mut |_| criterion4());
    run(5, "cleared recursion at q=5", 120, &mut criterion5);
    run(6, "t^2 coefficient of the conjecture", 1, &mut |_| criterion6());
    run(7, "computed coefficient", 1, &mut |_| criterion7());
    run(8, "conjecture differs", 10, &mut |_| criterion8());
    run(9, "Clifford representations", 10, &mut |_| criterion9());

    outcomes.sort_by_key(|o| o.criterion);
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria PASS", outcomes.len());
    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.expected).map(|o| o.criterion).collect();
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome in criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
