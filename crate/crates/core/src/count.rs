//! Exact point counting over finite fields.
//!
//! Polynomials are compiled against a field into lookup tables and evaluated
//! by partial specialization: fixing the outermost variable turns the
//! coefficient vector at depth `d` into the one at depth `d + 1`, so a leaf
//! costs only the terms in the innermost variable.
//!
//! Two strategies share the engine. `Direct` enumerates every variable.
//! `LinearFiber(block)` requires the level polynomial to be jointly affine in
//! the block and the side conditions to avoid it; the remaining variables are
//! enumerated and each fiber is counted in closed form.

use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::{make_field_of_size, FieldContext, FieldElement, FieldError};
use crate::motive::{ClassSymbol, CountBundle};
use crate::poly::Poly;
use crate::strata::{self, change_of_variables_x, CubicFlavor, PlaneCubic, Stratum, StratumName};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("characteristic {0} is not supported (need p > 3)")]
    BadCharacteristic(u32),
    #[error("parameter c must be nonzero")]
    ZeroC,
    #[error("missing value for parameter '{0}'")]
    MissingParameter(String),
    #[error("linear-fiber precondition fails: {0}")]
    NotLinear(String),
    #[error("projective count mismatch: direct {direct}, cone {cone}")]
    ConeMismatch { direct: u128, cone: String },
    #[error("the zero cubic has no projective zero locus to count")]
    ZeroCubic,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "block", rename_all = "snake_case")]
pub enum Strategy {
    Direct,
    LinearFiber(Vec<String>),
}

impl Strategy {
    pub fn linear_fiber(vars: &[&str]) -> Strategy {
        Strategy::LinearFiber(vars.iter().map(|s| s.to_string()).collect())
    }

    /// The upper-right entries `p, t, x`, in which every matrix stratum is affine.
    pub fn upper_block() -> Strategy {
        Strategy::linear_fiber(&["p", "t", "x"])
    }

    pub fn label(&self) -> String {
        match self {
            Strategy::Direct => "direct".into(),
            Strategy::LinearFiber(b) => format!("linear_fiber({})", b.join(",")),
        }
    }
}

/// A stratum with bound parameters over a field.
#[derive(Clone, Debug)]
pub struct CountTask {
    pub stratum: Stratum,
    pub field: FieldContext,
    pub c: FieldElement,
    pub rho: Option<FieldElement>,
    pub strategy: Strategy,
}

impl CountTask {
    pub fn new(stratum: Stratum, field: FieldContext, c: FieldElement, strategy: Strategy) -> Self {
        CountTask { stratum, field, c, rho: None, strategy }
    }

    pub fn with_rho(mut self, rho: FieldElement) -> Self {
        self.rho = Some(rho);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountResult {
    pub stratum: String,
    pub lambda: i64,
    pub q: u32,
    pub k: u32,
    pub c: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    pub count: u128,
    pub strategy: String,
    pub millis: u128,
}

impl CountResult {
    pub const CSV_HEADER: &'static str = "stratum,lambda,q,k,c,rho,count,strategy,millis";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},\"{}\",{}",
            self.stratum,
            self.lambda,
            self.q,
            self.k,
            self.c,
            self.rho.clone().unwrap_or_default(),
            self.count,
            self.strategy,
            self.millis
        )
    }
}

/// Distribution of the level value over the enumerated variables.
///
/// With a fiber block of size `b`, `count(lambda) = free * q^(b-1) + hist[lambda] * q^b`;
/// for `Direct` the block is empty and `free = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberProfile {
    pub q: u32,
    pub block: u32,
    /// Outer points where some block coefficient is nonzero.
    pub free: u128,
    /// Outer points with all block coefficients zero, by level value (field index).
    pub hist: Vec<u128>,
}

impl FiberProfile {
    fn empty(q: u32, block: u32) -> Self {
        FiberProfile { q, block, free: 0, hist: vec![0; q as usize] }
    }

    fn merge(&mut self, other: &FiberProfile) {
        self.free += other.free;
        for (a, b) in self.hist.iter_mut().zip(&other.hist) {
            *a += b;
        }
    }

    /// Points with level equal to the element of index `value`.
    pub fn count_at(&self, value: u32) -> u128 {
        let q = self.q as u128;
        let full = q.pow(self.block);
        let fiber = if self.block == 0 { 0 } else { self.free * q.pow(self.block - 1) };
        fiber + self.hist[value as usize] * full
    }

    /// Total number of points satisfying the side conditions.
    pub fn total(&self) -> u128 {
        (0..self.q).map(|v| self.count_at(v)).sum()
    }
}

/// Field arithmetic on element indices via lookup tables.
#[derive(Clone, Debug)]
pub struct FieldTables {
    pub q: usize,
    add: Vec<u16>,
    mul: Vec<u16>,
    /// `pow[a * POW_SLOTS + e] = a^e`.
    pow: Vec<u16>,
}

const POW_SLOTS: usize = 8;

impl FieldTables {
    pub fn new(f: &FieldContext) -> Self {
        let q = f.size() as usize;
        let mut add = vec![0u16; q * q];
        let mut mul = vec![0u16; q * q];
        let mut pow = vec![0u16; q * POW_SLOTS];
        let elems: Vec<FieldElement> = f.elements().collect();
        for (i, &a) in elems.iter().enumerate() {
            for (j, &b) in elems.iter().enumerate() {
                add[i * q + j] = f.index(f.add(a, b)) as u16;
                mul[i * q + j] = f.index(f.mul(a, b)) as u16;
            }
            let mut acc = f.one();
            for e in 0..POW_SLOTS {
                pow[i * POW_SLOTS + e] = f.index(acc) as u16;
                acc = f.mul(acc, a);
            }
        }
        FieldTables { q, add, mul, pow }
    }

    #[inline(always)]
    fn add(&self, a: u16, b: u16) -> u16 {
        self.add[a as usize * self.q + b as usize]
    }

    #[inline(always)]
    fn mul(&self, a: u16, b: u16) -> u16 {
        self.mul[a as usize * self.q + b as usize]
    }

    #[inline(always)]
    fn pow(&self, a: u16, e: u8) -> u16 {
        self.pow[a as usize * POW_SLOTS + e as usize]
    }
}

/// One specialization step: term `i` at depth `d` contributes
/// `coef * a^exp[i]` to term `target[i]` at depth `d + 1`.
#[derive(Clone, Debug)]
struct Layer {
    target: Vec<u32>,
    exp: Vec<u8>,
    out_len: usize,
}

#[derive(Clone, Debug)]
struct CompiledPoly {
    init: Vec<u16>,
    layers: Vec<Layer>,
}

/// Maps a rational polynomial with bound parameters into the field.
fn poly_to_field(
    p: &Poly,
    vars: &[String],
    params: &BTreeMap<String, FieldElement>,
    f: &FieldContext,
) -> Result<BTreeMap<Vec<u8>, FieldElement>, CountError> {
    let mut out: BTreeMap<Vec<u8>, FieldElement> = BTreeMap::new();
    let pmod = f.characteristic() as i64;
    for (m, c) in p.terms() {
        let to_i = |b: &num_bigint::BigInt| -> i64 { (b % pmod).to_i64().unwrap() };
        let num = f.from_int(to_i(c.numer()));
        let den = f.from_int(to_i(c.denom()));
        let mut val = f.div(num, den)?;
        let mut exps = vec![0u8; vars.len()];
        for (name, e) in m.vars() {
            if let Some(i) = vars.iter().position(|v| v == name) {
                if e as usize >= POW_SLOTS {
                    return Err(CountError::Invalid(format!("degree {e} in {name} exceeds the engine limit")));
                }
                exps[i] = e as u8;
            } else {
                let pv = params.get(name).ok_or_else(|| CountError::MissingParameter(name.to_string()))?;
                val = f.mul(val, f.pow(*pv, e as u64));
            }
        }
        let slot = out.entry(exps).or_insert(f.zero());
        *slot = f.add(*slot, val);
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn compile(terms: &BTreeMap<Vec<u8>, FieldElement>, nvars: usize, f: &FieldContext) -> CompiledPoly {
    // Suffix monomials at each depth, in a fixed order.
    let mut levels: Vec<Vec<Vec<u8>>> = Vec::with_capacity(nvars + 1);
    for d in 0..=nvars {
        let mut s: Vec<Vec<u8>> = terms.keys().map(|e| e[d..].to_vec()).collect();
        s.sort();
        s.dedup();
        if s.is_empty() {
            s.push(vec![0; nvars - d]);
        }
        levels.push(s);
    }
    let mut init = vec![0u16; levels[0].len()];
    for (e, v) in terms {
        let i = levels[0].binary_search(e).unwrap();
        init[i] = f.index(*v) as u16;
    }
    let layers = (0..nvars)
        .map(|d| {
            let mut target = Vec::new();
            let mut exp = Vec::new();
            for m in &levels[d] {
                target.push(levels[d + 1].binary_search(&m[1..].to_vec()).unwrap() as u32);
                exp.push(m[0]);
            }
            Layer { target, exp, out_len: levels[d + 1].len() }
        })
        .collect();
    CompiledPoly { init, layers }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    /// Level (or the block-free part of it).
    Level,
    /// Coefficient of one block variable.
    Slope,
    Open,
    Closed,
}

/// A compiled counting problem over the enumerated (outer) variables.
#[derive(Clone, Debug)]
pub struct Engine {
    tables: FieldTables,
    nvars: usize,
    polys: Vec<CompiledPoly>,
    roles: Vec<Role>,
    /// Depth after which each condition is fully determined.
    ready: Vec<usize>,
    block: u32,
}

impl Engine {
    /// Compiles `task`; the enumeration order follows the stratum's variable order.
    pub fn compile(task: &CountTask) -> Result<Engine, CountError> {
        let f = &task.field;
        if f.characteristic() <= 3 {
            return Err(CountError::BadCharacteristic(f.characteristic()));
        }
        if task.c.is_zero() {
            return Err(CountError::ZeroC);
        }
        let s = &task.stratum;
        let mut params = BTreeMap::from([("c".to_string(), task.c)]);
        if let Some(r) = task.rho {
            params.insert("rho".to_string(), r);
        }
        let all: Vec<String> = s.variables.iter().map(|(n, _)| n.clone()).collect();
        let block: Vec<String> = match &task.strategy {
            Strategy::Direct => vec![],
            Strategy::LinearFiber(b) => b.clone(),
        };
        for b in &block {
            if !all.contains(b) {
                return Err(CountError::NotLinear(format!("'{b}' is not a variable of {}", s.name)));
            }
        }
        let block_refs: Vec<&str> = block.iter().map(String::as_str).collect();
        if s.level.degree_in_block(&block_refs) > 1 {
            return Err(CountError::NotLinear(format!("level is not affine in {{{}}}", block.join(","))));
        }
        if s.open.iter().chain(&s.closed).any(|c| block.iter().any(|b| c.mentions(b))) {
            return Err(CountError::NotLinear("a side condition involves the block".into()));
        }
        let outer: Vec<String> = all.iter().filter(|v| !block.contains(v)).cloned().collect();

        let mut pieces: Vec<(Poly, Role)> = Vec::new();
        let mut constant = s.level.clone();
        for b in &block {
            let slope = s.level.coeff_of(b, 1);
            constant = constant.coeff_of(b, 0);
            pieces.push((slope, Role::Slope));
        }
        pieces.insert(0, (constant, Role::Level));
        pieces.extend(s.open.iter().map(|p| (p.clone(), Role::Open)));
        pieces.extend(s.closed.iter().map(|p| (p.clone(), Role::Closed)));

        let mut polys = Vec::new();
        let mut roles = Vec::new();
        let mut ready = Vec::new();
        for (p, role) in pieces {
            let terms = poly_to_field(&p, &outer, &params, f)?;
            let depth = terms
                .keys()
                .map(|e| e.iter().rposition(|&x| x > 0).map_or(0, |i| i + 1))
                .max()
                .unwrap_or(0);
            polys.push(compile(&terms, outer.len(), f));
            roles.push(role);
            ready.push(depth);
        }
        Ok(Engine { tables: FieldTables::new(f), nvars: outer.len(), polys, roles, ready, block: block.len() as u32 })
    }

    fn conditions_hold(&self, d: usize, bufs: &[Vec<u16>]) -> bool {
        self.roles.iter().enumerate().all(|(i, role)| match role {
            Role::Open if self.ready[i] == d => bufs[i][0] != 0,
            Role::Closed if self.ready[i] == d => bufs[i][0] == 0,
            _ => true,
        })
    }

    fn step(&self, d: usize, a: u16, src: &[Vec<u16>], dst: &mut [Vec<u16>]) {
        let t = &self.tables;
        for (pi, poly) in self.polys.iter().enumerate() {
            let layer = &poly.layers[d];
            let out = &mut dst[pi];
            out.clear();
            out.resize(layer.out_len, 0);
            for (i, &coef) in src[pi].iter().enumerate() {
                if coef != 0 {
                    let tgt = layer.target[i] as usize;
                    out[tgt] = t.add(out[tgt], t.mul(coef, t.pow(a, layer.exp[i])));
                }
            }
        }
    }

    fn leaf(&self, bufs: &[Vec<u16>], prof: &mut FiberProfile) {
        let mut level = 0u16;
        let mut free = false;
        for (i, role) in self.roles.iter().enumerate() {
            match role {
                Role::Level => level = bufs[i][0],
                Role::Slope => free |= bufs[i][0] != 0,
                _ => {}
            }
        }
        if free {
            prof.free += 1;
        } else {
            prof.hist[level as usize] += 1;
        }
    }

    fn descend(&self, d: usize, stack: &mut [Vec<Vec<u16>>], prof: &mut FiberProfile) {
        if d == self.nvars {
            self.leaf(&stack[d], prof);
            return;
        }
        for a in 0..self.tables.q as u16 {
            let (head, tail) = stack.split_at_mut(d + 1);
            self.step(d, a, &head[d], &mut tail[0]);
            if self.conditions_hold(d + 1, &stack[d + 1]) {
                self.descend(d + 1, stack, prof);
            }
        }
    }

    /// Enumerates the outer variables, in parallel over the first one.
    pub fn profile(&self) -> FiberProfile {
        let q = self.tables.q as u32;
        let init: Vec<Vec<u16>> = self.polys.iter().map(|p| p.init.clone()).collect();
        let fresh_stack = || -> Vec<Vec<Vec<u16>>> {
            let mut st = vec![vec![Vec::new(); self.polys.len()]; self.nvars + 1];
            st[0] = init.clone();
            st
        };
        if self.nvars == 0 {
            let mut prof = FiberProfile::empty(q, self.block);
            if self.conditions_hold(0, &init) {
                self.leaf(&init, &mut prof);
            }
            return prof;
        }
        let parts: Vec<FiberProfile> = (0..q as u16)
            .into_par_iter()
            .map(|a| {
                let mut prof = FiberProfile::empty(q, self.block);
                let mut st = fresh_stack();
                if self.conditions_hold(0, &st[0]) {
                    let (head, tail) = st.split_at_mut(1);
                    self.step(0, a, &head[0], &mut tail[0]);
                    if self.conditions_hold(1, &tail[0]) {
                        self.descend(1, &mut st, &mut prof);
                    }
                }
                prof
            })
            .collect();
        let mut total = FiberProfile::empty(q, self.block);
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

/// Profile of a task: one pass yields counts at every level value.
pub fn count_profile(task: &CountTask) -> Result<FiberProfile, CountError> {
    Ok(Engine::compile(task)?.profile())
}

fn lambda_index(f: &FieldContext, lambda: i64) -> u32 {
    f.index(f.from_int(lambda))
}

pub fn count_points(task: &CountTask) -> Result<CountResult, CountError> {
    let start = Instant::now();
    let prof = count_profile(task)?;
    let count = prof.count_at(lambda_index(&task.field, task.stratum.lambda));
    Ok(result_for(task, task.stratum.lambda, count, start))
}

fn result_for(task: &CountTask, lambda: i64, count: u128, start: Instant) -> CountResult {
    let f = &task.field;
    CountResult {
        stratum: task.stratum.name.to_string(),
        lambda,
        q: f.size(),
        k: f.degree(),
        c: f.format_element(task.c),
        rho: task.rho.map(|r| f.format_element(r)),
        count,
        strategy: task.strategy.label(),
        millis: start.elapsed().as_millis(),
    }
}

/// Counts at `lambda = 0` and `lambda = 1` from a single enumeration.
pub fn count_both_levels(task: &CountTask) -> Result<(CountResult, CountResult), CountError> {
    let start = Instant::now();
    let prof = count_profile(task)?;
    let f = &task.field;
    let r0 = result_for(task, 0, prof.count_at(lambda_index(f, 0)), start);
    let r1 = result_for(task, 1, prof.count_at(lambda_index(f, 1)), start);
    Ok((r0, r1))
}

/// `#(level = 0) - #(level = 1)`.
pub fn delta_count(task: &CountTask) -> Result<i128, CountError> {
    let prof = count_profile(task)?;
    let f = &task.field;
    Ok(prof.count_at(lambda_index(f, 0)) as i128 - prof.count_at(lambda_index(f, 1)) as i128)
}

/// Convenience wrapper: `delta_count` of a catalog stratum.
pub fn delta_stratum(
    name: StratumName,
    f: &FieldContext,
    c: FieldElement,
    rho: Option<FieldElement>,
    strategy: Strategy,
) -> Result<i128, CountError> {
    let mut task = CountTask::new(strata::stratum(name, 0), f.clone(), c, strategy);
    task.rho = rho;
    delta_count(&task)
}

/// The strategy used by default for each stratum.
pub fn default_strategy(name: StratumName) -> Strategy {
    match name {
        StratumName::S1 | StratumName::S2 | StratumName::S3 => Strategy::upper_block(),
        _ => Strategy::Direct,
    }
}

fn eval_cubic(f: &FieldContext, terms: &BTreeMap<Vec<u8>, FieldElement>, pt: [FieldElement; 3]) -> FieldElement {
    terms.iter().fold(f.zero(), |acc, (e, v)| {
        let t = (0..3).fold(*v, |t, i| f.mul(t, f.pow(pt[i], e[i] as u64)));
        f.add(acc, t)
    })
}

/// Projective zeros of a plane cubic, by direct enumeration of `P^2` and by
/// the affine cone; the two must agree.
pub fn count_projective_cubic(curve: &PlaneCubic, f: &FieldContext, c: FieldElement) -> Result<u128, CountError> {
    if f.characteristic() <= 3 {
        return Err(CountError::BadCharacteristic(f.characteristic()));
    }
    let vars: Vec<String> = curve.vars.iter().map(|s| s.to_string()).collect();
    let params = BTreeMap::from([("c".to_string(), c)]);
    let terms = poly_to_field(&curve.poly, &vars, &params, f)?;
    if terms.is_empty() {
        return Err(CountError::ZeroCubic);
    }
    let (zero, one) = (f.zero(), f.one());
    let mut direct = 0u128;
    for a in f.elements() {
        for b in f.elements() {
            direct += eval_cubic(f, &terms, [one, a, b]).is_zero() as u128;
        }
        direct += eval_cubic(f, &terms, [zero, one, a]).is_zero() as u128;
    }
    direct += eval_cubic(f, &terms, [zero, zero, one]).is_zero() as u128;

    let cone = Stratum {
        name: StratumName::MW1,
        variables: vars.iter().map(|v| (v.clone(), 1)).collect(),
        parameters: vec!["c".into()],
        level: curve.poly.clone(),
        closed: vec![],
        open: vec![],
        lambda: 0,
    };
    let affine = count_points(&CountTask::new(cone, f.clone(), c, Strategy::Direct))?.count;
    let q = f.size() as u128;
    if (affine - 1) % (q - 1) != 0 || (affine - 1) / (q - 1) != direct {
        return Err(CountError::ConeMismatch { direct, cone: format!("({affine} - 1)/({q} - 1)") });
    }
    Ok(direct)
}

/// Per-branch counts of the `X` strata: `(rho, #X_0, #X_1)`.
pub fn x_branch_counts(f: &FieldContext, c: FieldElement) -> Result<Vec<(FieldElement, u128, u128)>, CountError> {
    f.cube_roots(f.one())
        .into_iter()
        .map(|rho| {
            let task = CountTask::new(strata::stratum(StratumName::X, 0), f.clone(), c, Strategy::Direct).with_rho(rho);
            let (a, b) = count_both_levels(&task)?;
            Ok((rho, a.count, b.count))
        })
        .collect()
}

/// `sum over rho of (#X_0 - #X_1)`.
pub fn x_delta_sum(f: &FieldContext, c: FieldElement) -> Result<i128, CountError> {
    Ok(x_branch_counts(f, c)?.iter().map(|(_, a, b)| *a as i128 - *b as i128).sum())
}

fn field_and_c(q: u64, c: i64) -> Result<(FieldContext, FieldElement), CountError> {
    let f = make_field_of_size(q)?;
    if f.characteristic() <= 3 {
        return Err(CountError::BadCharacteristic(f.characteristic()));
    }
    let cv = f.from_int(c);
    if cv.is_zero() {
        return Err(CountError::ZeroC);
    }
    Ok((f, cv))
}

/// Point counts over `GF(q)` and `GF(q^2)` for every named class.
pub fn curve_counts_bundle(q: u64, c: i64) -> Result<CountBundle, CountError> {
    let mut bundle = CountBundle::new(q);
    let (f1, c1) = field_and_c(q, c)?;
    let (f2, c2) = field_and_c(q * q, c)?;
    let both = |g: &dyn Fn(&FieldContext, FieldElement) -> Result<u128, CountError>| -> Result<(u64, u64), CountError> {
        Ok((g(&f1, c1)? as u64, g(&f2, c2)? as u64))
    };
    let edt = PlaneCubic::new(CubicFlavor::EDt);
    let ec = PlaneCubic::new(CubicFlavor::Ec);
    let (a, b) = both(&|f, c| count_projective_cubic(&edt, f, c))?;
    bundle.set(&ClassSymbol::EDt, a, b);
    let (a, b) = both(&|f, c| count_projective_cubic(&ec, f, c))?;
    bundle.set(&ClassSymbol::Ec, a, b);
    let (a, b) = both(&|f, c| {
        Ok(count_points(&CountTask::new(strata::stratum(StratumName::MW1, 1), f.clone(), c, Strategy::Direct))?.count)
    })?;
    bundle.set(&ClassSymbol::SDt, a, b);
    let (a, b) = both(&|f, _| Ok(f.cube_roots(f.one()).len() as u128))?;
    bundle.set(&ClassSymbol::Mu3, a, b);
    let (a, b) = both(&|f, _| Ok(f.cube_roots(f.from_int(4)).len() as u128))?;
    bundle.set(&ClassSymbol::Mu3_4, a, b);
    let x_at = |lambda: i64| {
        move |f: &FieldContext, c: FieldElement| -> Result<u128, CountError> {
            let task = CountTask::new(strata::stratum(StratumName::X, lambda), f.clone(), c, Strategy::Direct)
                .with_rho(f.one());
            Ok(count_points(&task)?.count)
        }
    };
    let (a, b) = both(&x_at(0))?;
    bundle.set(&ClassSymbol::X0, a, b);
    let (a, b) = both(&x_at(1))?;
    bundle.set(&ClassSymbol::X1, a, b);
    Ok(bundle)
}

/// One `(c, rho)` instance of the `X` strata over a field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XInstance {
    pub c: String,
    pub rho: String,
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub x0: u128,
    pub x1: u128,
    /// `#{a : a^3 = 4}`.
    pub cube_roots_of_4: u128,
    /// `#{a : a^3 = 8K}` with `K` the change-of-variables constant (admissible only).
    pub cube_roots_of_8k: Option<u128>,
}

/// All `(c, rho)` pairs over `f`, with counts and admissibility.
pub fn x_instances(f: &FieldContext) -> Result<Vec<XInstance>, CountError> {
    let roots4 = f.cube_roots(f.from_int(4)).len() as u128;
    let mut out = Vec::new();
    for c in f.elements().filter(|c| !c.is_zero()) {
        for (rho, x0, x1) in x_branch_counts(f, c)? {
            let ch = change_of_variables_x(f, c, rho);
            let r8k = ch.as_ref().ok().map(|ch| f.cube_roots(f.mul(f.from_int(8), ch.k)).len() as u128);
            out.push(XInstance {
                c: f.format_element(c),
                rho: f.format_element(rho),
                admissible: ch.is_ok(),
                reason: ch.err().map(|e| e.to_string()),
                x0,
                x1,
                cube_roots_of_4: roots4,
                cube_roots_of_8k: r8k,
            });
        }
    }
    Ok(out)
}

/// Rough evaluation count for a direct `MW2` enumeration at field size `q`.
pub fn mw2_direct_evaluations(q: u64) -> u128 {
    (q as u128).pow(12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    fn brute(task: &CountTask) -> u128 {
        // Independent oracle: evaluate the rational polynomial at every point.
        let f = &task.field;
        let vars: Vec<String> = task.stratum.variables.iter().map(|(n, _)| n.clone()).collect();
        let mut params = BTreeMap::from([("c".to_string(), task.c)]);
        if let Some(r) = task.rho {
            params.insert("rho".into(), r);
        }
        let conv = |p: &Poly| poly_to_field(p, &vars, &params, f).unwrap();
        let level = conv(&task.stratum.level);
        let opens: Vec<_> = task.stratum.open.iter().map(conv).collect();
        let closed: Vec<_> = task.stratum.closed.iter().map(conv).collect();
        let eval = |t: &BTreeMap<Vec<u8>, FieldElement>, pt: &[FieldElement]| {
            t.iter().fold(f.zero(), |acc, (e, v)| {
                let term = e.iter().zip(pt).fold(*v, |x, (&k, &a)| f.mul(x, f.pow(a, k as u64)));
                f.add(acc, term)
            })
        };
        let target = f.from_int(task.stratum.lambda);
        let n = vars.len() as u32;
        let q = f.size();
        let mut count = 0;
        for code in 0..q.pow(n) {
            let mut pt = Vec::with_capacity(n as usize);
            let mut x = code;
            for _ in 0..n {
                pt.push(f.element(x % q));
                x /= q;
            }
            if opens.iter().all(|o| !eval(o, &pt).is_zero())
                && closed.iter().all(|c| eval(c, &pt).is_zero())
                && eval(&level, &pt) == target
            {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn engine_matches_brute_force() {
        let f = make_field(5, 1).unwrap();
        for lambda in [0, 1] {
            for name in [StratumName::MW1, StratumName::X] {
                let mut task = CountTask::new(strata::stratum(name, lambda), f.clone(), f.from_int(2), Strategy::Direct);
                if name == StratumName::X {
                    task.rho = Some(f.one());
                }
                assert_eq!(count_points(&task).unwrap().count, brute(&task), "{name} {lambda}");
            }
        }
    }

    #[test]
    fn strategies_agree_on_s3() {
        let f = make_field(5, 1).unwrap();
        let s = strata::stratum(StratumName::S3, 0);
        let c = f.one();
        let d = count_profile(&CountTask::new(s.clone(), f.clone(), c, Strategy::Direct)).unwrap();
        for strat in [Strategy::linear_fiber(&["p"]), Strategy::linear_fiber(&["t", "x"]), Strategy::upper_block()] {
            let l = count_profile(&CountTask::new(s.clone(), f.clone(), c, strat.clone())).unwrap();
            for v in 0..5 {
                assert_eq!(d.count_at(v), l.count_at(v), "{}", strat.label());
            }
        }
        assert_eq!(d.total(), 5u128.pow(8));
    }

    #[test]
    fn linear_fiber_preconditions() {
        let f = make_field(7, 1).unwrap();
        let s = strata::stratum(StratumName::S3, 0);
        let bad = CountTask::new(s.clone(), f.clone(), f.one(), Strategy::linear_fiber(&["z"]));
        assert!(matches!(count_points(&bad), Err(CountError::NotLinear(_))));
        let unknown = CountTask::new(s.clone(), f.clone(), f.one(), Strategy::linear_fiber(&["q"]));
        assert!(matches!(count_points(&unknown), Err(CountError::NotLinear(_))));
        let x = strata::stratum(StratumName::X, 0);
        let open_block = CountTask::new(x, f.clone(), f.one(), Strategy::linear_fiber(&["x"])).with_rho(f.one());
        assert!(matches!(count_points(&open_block), Err(CountError::NotLinear(_))));
    }

    #[test]
    fn s3_delta_is_q5_at_small_q() {
        let f = make_field(5, 1).unwrap();
        let d = delta_stratum(StratumName::S3, &f, f.one(), None, Strategy::upper_block()).unwrap();
        assert_eq!(d, 3125);
    }

    #[test]
    fn empty_and_scissor() {
        let f = make_field(5, 1).unwrap();
        let mut s = strata::stratum(StratumName::MW1, 0);
        s.closed.push(Poly::int(1));
        assert_eq!(count_points(&CountTask::new(s, f.clone(), f.one(), Strategy::Direct)).unwrap().count, 0);
        // open + closed = unconstrained
        let base = strata::stratum(StratumName::MW1, 1);
        let mut open = base.clone();
        open.open.push(Poly::var("x"));
        let mut closed = base.clone();
        closed.closed.push(Poly::var("x"));
        let n = |s: Stratum| count_points(&CountTask::new(s, f.clone(), f.one(), Strategy::Direct)).unwrap().count;
        assert_eq!(n(open) + n(closed), n(base));
    }

    #[test]
    fn rejects_bad_fields() {
        let f = make_field(3, 1).unwrap();
        let t = CountTask::new(strata::stratum(StratumName::MW1, 0), f.clone(), f.one(), Strategy::Direct);
        assert_eq!(count_points(&t).unwrap_err(), CountError::BadCharacteristic(3));
        let g = make_field(7, 1).unwrap();
        let t = CountTask::new(strata::stratum(StratumName::MW1, 0), g.clone(), g.zero(), Strategy::Direct);
        assert_eq!(count_points(&t).unwrap_err(), CountError::ZeroC);
        let t = CountTask::new(strata::stratum(StratumName::X, 0), g.clone(), g.one(), Strategy::Direct);
        assert_eq!(count_points(&t).unwrap_err(), CountError::MissingParameter("rho".into()));
    }

    #[test]
    fn projective_counts() {
        let f = make_field(7, 1).unwrap();
        let n = count_projective_cubic(&PlaneCubic::new(CubicFlavor::EDt), &f, f.one()).unwrap();
        // Hasse bound when smooth; the count is exact either way.
        assert!((n as i64 - 8).abs() <= 2 * 7f64.sqrt().floor() as i64 + 1);
        let g = make_field(13, 1).unwrap();
        count_projective_cubic(&PlaneCubic::new(CubicFlavor::Ec), &g, g.from_int(2)).unwrap();
        let zero = PlaneCubic { flavor: CubicFlavor::EDt, vars: ["x", "y", "z"], poly: Poly::zero() };
        assert_eq!(count_projective_cubic(&zero, &f, f.one()), Err(CountError::ZeroCubic));
    }

    #[test]
    fn bundle_has_every_class() {
        let b = curve_counts_bundle(7, 1).unwrap();
        assert_eq!(b.get(&ClassSymbol::Mu3), Some((3, 3)));
        let b5 = curve_counts_bundle(5, 1).unwrap();
        assert_eq!(b5.get(&ClassSymbol::Mu3), Some((1, 3)));
        for s in ClassSymbol::KNOWN {
            let (a, b) = b5.get(&s).unwrap();
            assert!(b >= a, "{s}");
        }
    }

    #[test]
    fn parallel_profile_is_deterministic() {
        let f = make_field(7, 1).unwrap();
        let task = CountTask::new(strata::stratum(StratumName::S2, 0), f.clone(), f.from_int(2), Strategy::upper_block());
        let a = count_profile(&task).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| count_profile(&task).unwrap());
        assert_eq!(a, b);
    }
}
