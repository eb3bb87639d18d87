//! Naive motives localized at the half-Lefschetz symbol.
//!
//! A [`MotiveExpr`] is a fraction `num / den`. The numerator is a Laurent
//! polynomial in `s` (with `s^2 = L`) whose coefficients are integer
//! polynomials in class atoms; the denominator is a polynomial in `s` with
//! integer coefficients only. Values are kept in a canonical reduced form so
//! structural equality is mathematical equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MotiveError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by an expression that carries class symbols")]
    SymbolicDivisor,
    #[error("sigma_{0} is not supported (only n = 1, 2)")]
    UnsupportedSigmaOrder(u32),
    #[error("sigma_2 needs a linear combination of 1 and class symbols: {0}")]
    UnsupportedSigmaShape(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("odd power of L^(1/2) survives; value needs sqrt(q)")]
    OddHalfPower,
    #[error("no count for symbol {0}")]
    MissingSymbol(String),
    #[error("denominator vanishes at L = {0}")]
    ZeroDenominator(u64),
    #[error("negative exponent on an expression with class symbols")]
    NegativeExponent,
}

/// Named variety classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassSymbol {
    /// Plane cubic `X_DT = 0`.
    EDt,
    /// Plane cubic `det Q = 0`.
    Ec,
    /// Affine surface `X_DT = 1`, carrying a mu_3 action (not tracked).
    SDt,
    /// `{rho : rho^3 = 1}`.
    Mu3,
    /// `{a : a^3 = 4}`.
    Mu3_4,
    X0,
    X1,
    User(String),
}

impl ClassSymbol {
    pub const KNOWN: [ClassSymbol; 7] = [
        ClassSymbol::EDt,
        ClassSymbol::Ec,
        ClassSymbol::SDt,
        ClassSymbol::Mu3,
        ClassSymbol::Mu3_4,
        ClassSymbol::X0,
        ClassSymbol::X1,
    ];

    pub fn name(&self) -> &str {
        match self {
            ClassSymbol::EDt => "E_DT",
            ClassSymbol::Ec => "E_c",
            ClassSymbol::SDt => "S_DT",
            ClassSymbol::Mu3 => "MU3",
            ClassSymbol::Mu3_4 => "MU3_4",
            ClassSymbol::X0 => "X0",
            ClassSymbol::X1 => "X1",
            ClassSymbol::User(s) => s,
        }
    }

    pub fn from_name(name: &str) -> ClassSymbol {
        ClassSymbol::KNOWN
            .iter()
            .find(|s| s.name() == name)
            .cloned()
            .unwrap_or_else(|| ClassSymbol::User(name.to_string()))
    }

    /// The class carries a group action that naive counting ignores.
    pub fn is_equivariant(&self) -> bool {
        matches!(self, ClassSymbol::SDt)
    }
}

impl fmt::Display for ClassSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Class(ClassSymbol),
    Sigma2(ClassSymbol),
}

impl Atom {
    pub fn symbol(&self) -> &ClassSymbol {
        match self {
            Atom::Class(s) | Atom::Sigma2(s) => s,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Class(s) => write!(f, "{s}"),
            Atom::Sigma2(s) => write!(f, "sigma2({s})"),
        }
    }
}

/// Commutative monomial in atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomMono(BTreeMap<Atom, u32>);

impl AtomMono {
    pub fn one() -> Self {
        AtomMono::default()
    }

    pub fn atom(a: Atom) -> Self {
        AtomMono(BTreeMap::from([(a, 1)]))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Atom, u32)> {
        self.0.iter().map(|(a, &e)| (a, e))
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    fn mul(&self, other: &AtomMono) -> AtomMono {
        let mut m = self.0.clone();
        for (a, e) in &other.0 {
            *m.entry(a.clone()).or_insert(0) += e;
        }
        AtomMono(m)
    }
}

// Dense polynomials over Q in s, used only for the gcd step of reduction.
type QPoly = Vec<BigRational>;

fn qtrim(p: &mut QPoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn qdivrem(a: &QPoly, b: &QPoly) -> (QPoly, QPoly) {
    let mut r = a.clone();
    qtrim(&mut r);
    let db = b.len() - 1;
    let lb = b[db].clone();
    if r.len() <= db {
        return (vec![], r);
    }
    let mut quo = vec![BigRational::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let top = r.len() - 1;
        let f = &r[top] / &lb;
        for (i, bc) in b.iter().enumerate() {
            let idx = top - db + i;
            r[idx] = &r[idx] - &f * bc;
        }
        quo[top - db] = f;
        r.pop();
        qtrim(&mut r);
    }
    (quo, r)
}

fn qgcd(a: &QPoly, b: &QPoly) -> QPoly {
    let (mut x, mut y) = (a.clone(), b.clone());
    qtrim(&mut x);
    qtrim(&mut y);
    while !y.is_empty() {
        let (_, r) = qdivrem(&x, &y);
        x = y;
        y = r;
    }
    if let Some(lc) = x.last().cloned() {
        for c in &mut x {
            *c = &*c / &lc;
        }
    }
    x
}

fn imul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Numerator terms keyed by (atom monomial, power of s).
type Num = BTreeMap<(AtomMono, i64), BigInt>;

fn num_add_term(n: &mut Num, key: (AtomMono, i64), c: BigInt) {
    if c.is_zero() {
        return;
    }
    let e = n.entry(key.clone()).or_insert_with(BigInt::zero);
    *e += c;
    if e.is_zero() {
        n.remove(&key);
    }
}

fn num_mul(a: &Num, b: &Num) -> Num {
    let mut out = Num::new();
    for ((m1, e1), c1) in a {
        for ((m2, e2), c2) in b {
            num_add_term(&mut out, (m1.mul(m2), e1 + e2), c1 * c2);
        }
    }
    out
}

fn num_mul_spoly(a: &Num, p: &[BigInt]) -> Num {
    let mut out = Num::new();
    for ((m, e), c) in a {
        for (i, pc) in p.iter().enumerate() {
            num_add_term(&mut out, (m.clone(), e + i as i64), c * pc);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MotiveExpr {
    num: Num,
    /// Coefficients of the denominator in increasing powers of `s`; `den[0] != 0`.
    den: Vec<BigInt>,
}

impl Default for MotiveExpr {
    fn default() -> Self {
        MotiveExpr::zero()
    }
}

impl MotiveExpr {
    fn raw(num: Num, den: Vec<BigInt>) -> Self {
        let mut x = MotiveExpr { num, den };
        x.normalize();
        x
    }

    pub fn zero() -> Self {
        MotiveExpr { num: Num::new(), den: vec![BigInt::one()] }
    }

    pub fn int(n: i64) -> Self {
        MotiveExpr::term(BigInt::from(n), 0, AtomMono::one())
    }

    fn term(c: BigInt, s_exp: i64, m: AtomMono) -> Self {
        let mut num = Num::new();
        num_add_term(&mut num, (m, s_exp), c);
        MotiveExpr { num, den: vec![BigInt::one()] }
    }

    /// `s^e = L^(e/2)`.
    pub fn s_pow(e: i64) -> Self {
        MotiveExpr::term(BigInt::one(), e, AtomMono::one())
    }

    /// The Lefschetz motive `L`.
    pub fn l() -> Self {
        MotiveExpr::s_pow(2)
    }

    /// `L^n` for integer `n`.
    pub fn l_pow(n: i64) -> Self {
        MotiveExpr::s_pow(2 * n)
    }

    pub fn class(sym: ClassSymbol) -> Self {
        MotiveExpr::term(BigInt::one(), 0, AtomMono::atom(Atom::Class(sym)))
    }

    pub fn atom(a: Atom) -> Self {
        MotiveExpr::term(BigInt::one(), 0, AtomMono::atom(a))
    }

    /// `[P^2] = L^2 + L + 1`.
    pub fn p2() -> Self {
        MotiveExpr::l_pow(2) + MotiveExpr::l() + MotiveExpr::int(1)
    }

    /// `[GL_n] = prod_{k<n} (L^n - L^k)`.
    pub fn gl(n: u32) -> Self {
        (0..n as i64).fold(MotiveExpr::int(1), |acc, k| acc * (MotiveExpr::l_pow(n as i64) - MotiveExpr::l_pow(k)))
    }

    /// `N_1 = (L - 1)[E_DT] + 1 - [S_DT]`.
    pub fn n1() -> Self {
        (MotiveExpr::l() - MotiveExpr::int(1)) * MotiveExpr::class(ClassSymbol::EDt) + MotiveExpr::int(1)
            - MotiveExpr::class(ClassSymbol::SDt)
    }

    /// `N_2 = [E_c] - [P^2]`.
    pub fn n2() -> Self {
        MotiveExpr::class(ClassSymbol::Ec) - MotiveExpr::p2()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    /// True when no class atoms appear.
    pub fn is_symbol_free(&self) -> bool {
        self.num.keys().all(|(m, _)| m.is_one())
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.num.keys().flat_map(|(m, _)| m.0.keys().cloned()).collect()
    }

    pub fn symbols(&self) -> BTreeSet<ClassSymbol> {
        self.atoms().iter().map(|a| a.symbol().clone()).collect()
    }

    pub fn mentions(&self, sym: &ClassSymbol) -> bool {
        self.symbols().contains(sym)
    }

    /// Denominator coefficients in increasing powers of `s`.
    pub fn denominator(&self) -> &[BigInt] {
        &self.den
    }

    pub fn numerator_terms(&self) -> impl Iterator<Item = (&AtomMono, i64, &BigInt)> {
        self.num.iter().map(|((m, e), c)| (m, *e, c))
    }

    /// The numerator as an expression (denominator dropped).
    pub fn numerator(&self) -> MotiveExpr {
        MotiveExpr::raw(self.num.clone(), vec![BigInt::one()])
    }

    /// `s -> s^2` on a symbol-free expression (the second Adams operation on
    /// sums of powers of `L^(1/2)`).
    pub fn psi2(&self) -> Result<MotiveExpr, MotiveError> {
        if !self.is_symbol_free() {
            return Err(MotiveError::UnsupportedSigmaShape(self.to_string()));
        }
        let num = self.num.iter().map(|((m, e), c)| ((m.clone(), 2 * e), c.clone())).collect();
        let mut den = vec![BigInt::zero(); 2 * self.den.len() - 1];
        for (i, c) in self.den.iter().enumerate() {
            den[2 * i] = c.clone();
        }
        Ok(MotiveExpr::raw(num, den))
    }

    /// True if every surviving power of `s` is even.
    pub fn has_integer_l_powers(&self) -> bool {
        self.num.keys().all(|(_, e)| e % 2 == 0) && self.den.iter().enumerate().all(|(i, c)| i % 2 == 0 || c.is_zero())
    }

    fn normalize(&mut self) {
        if self.den.iter().all(|c| c.is_zero()) {
            panic!("zero denominator in motive expression");
        }
        while self.den.last().is_some_and(|c| c.is_zero()) {
            self.den.pop();
        }
        // Move powers of s out of the denominator.
        let lead_zeros = self.den.iter().take_while(|c| c.is_zero()).count();
        if lead_zeros > 0 {
            self.den.drain(..lead_zeros);
            let shifted: Num = std::mem::take(&mut self.num)
                .into_iter()
                .map(|((m, e), c)| ((m, e - lead_zeros as i64), c))
                .collect();
            self.num = shifted;
        }
        if self.num.is_empty() {
            self.den = vec![BigInt::one()];
            return;
        }
        if self.den.len() > 1 {
            self.cancel_common_factor();
        }
        self.clear_content();
    }

    fn numerator_blocks(&self) -> BTreeMap<AtomMono, (i64, Vec<BigInt>)> {
        let mut blocks: BTreeMap<AtomMono, BTreeMap<i64, BigInt>> = BTreeMap::new();
        for ((m, e), c) in &self.num {
            blocks.entry(m.clone()).or_default().insert(*e, c.clone());
        }
        blocks
            .into_iter()
            .map(|(m, terms)| {
                let lo = *terms.keys().next().unwrap();
                let hi = *terms.keys().last().unwrap();
                let mut dense = vec![BigInt::zero(); (hi - lo + 1) as usize];
                for (e, c) in terms {
                    dense[(e - lo) as usize] = c;
                }
                (m, (lo, dense))
            })
            .collect()
    }

    fn cancel_common_factor(&mut self) {
        let to_q = |v: &[BigInt]| -> QPoly { v.iter().map(|c| BigRational::from_integer(c.clone())).collect() };
        let blocks = self.numerator_blocks();
        let mut g = to_q(&self.den);
        for (_, dense) in blocks.values() {
            g = qgcd(&g, &to_q(dense));
            if g.len() <= 1 {
                return;
            }
        }
        if g.len() <= 1 {
            return;
        }
        let (dq, _) = qdivrem(&to_q(&self.den), &g);
        let mut qnum: Vec<(AtomMono, i64, QPoly)> = Vec::new();
        for (m, (lo, dense)) in blocks {
            let (nq, _) = qdivrem(&to_q(&dense), &g);
            qnum.push((m, lo, nq));
        }
        // Clear rational denominators.
        let mut l = BigInt::one();
        for c in dq.iter().chain(qnum.iter().flat_map(|(_, _, p)| p.iter())) {
            l = l.lcm(c.denom());
        }
        let scale = |c: &BigRational| -> BigInt { (c * BigRational::from_integer(l.clone())).to_integer() };
        self.den = dq.iter().map(scale).collect();
        let mut num = Num::new();
        for (m, lo, p) in qnum {
            for (i, c) in p.iter().enumerate() {
                num_add_term(&mut num, (m.clone(), lo + i as i64), scale(c));
            }
        }
        self.num = num;
    }

    fn clear_content(&mut self) {
        let mut g = BigInt::zero();
        for c in self.den.iter().chain(self.num.values()) {
            g = g.gcd(c);
        }
        if self.den.last().unwrap().is_negative() {
            g = -g;
        }
        if !g.is_one() {
            for c in self.den.iter_mut().chain(self.num.values_mut()) {
                *c = &*c / &g;
            }
        }
    }

    fn add_ref(&self, other: &MotiveExpr) -> MotiveExpr {
        if self.den == other.den {
            let mut num = self.num.clone();
            for (k, c) in &other.num {
                num_add_term(&mut num, k.clone(), c.clone());
            }
            return MotiveExpr::raw(num, self.den.clone());
        }
        let mut num = num_mul_spoly(&self.num, &other.den);
        for (k, c) in num_mul_spoly(&other.num, &self.den) {
            num_add_term(&mut num, k, c);
        }
        MotiveExpr::raw(num, imul(&self.den, &other.den))
    }

    fn mul_ref(&self, other: &MotiveExpr) -> MotiveExpr {
        MotiveExpr::raw(num_mul(&self.num, &other.num), imul(&self.den, &other.den))
    }

    pub fn neg(&self) -> MotiveExpr {
        MotiveExpr { num: self.num.iter().map(|(k, c)| (k.clone(), -c)).collect(), den: self.den.clone() }
    }

    /// Division by a symbol-free nonzero expression.
    pub fn checked_div(&self, other: &MotiveExpr) -> Result<MotiveExpr, MotiveError> {
        if other.is_zero() {
            return Err(MotiveError::DivisionByZero);
        }
        if !other.is_symbol_free() {
            return Err(MotiveError::SymbolicDivisor);
        }
        let lo = other.num.keys().map(|(_, e)| *e).min().unwrap();
        let hi = other.num.keys().map(|(_, e)| *e).max().unwrap();
        let mut dense = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for ((_, e), c) in &other.num {
            dense[(e - lo) as usize] = c.clone();
        }
        let num: Num = num_mul_spoly(&self.num, &other.den).into_iter().map(|((m, e), c)| ((m, e - lo), c)).collect();
        Ok(MotiveExpr::raw(num, imul(&self.den, &dense)))
    }

    pub fn pow(&self, e: i64) -> Result<MotiveExpr, MotiveError> {
        if e < 0 {
            if !self.is_symbol_free() {
                return Err(MotiveError::NegativeExponent);
            }
            return MotiveExpr::int(1).checked_div(&self.pow(-e)?);
        }
        let mut acc = MotiveExpr::int(1);
        for _ in 0..e {
            acc = acc.mul_ref(self);
        }
        Ok(acc)
    }

    /// The sigma operations `sigma_1 = id` and `sigma_2`.
    pub fn sigma(&self, n: u32) -> Result<MotiveExpr, MotiveError> {
        match n {
            1 => Ok(self.clone()),
            2 => self.sigma2(),
            _ => Err(MotiveError::UnsupportedSigmaOrder(n)),
        }
    }

    fn sigma2(&self) -> Result<MotiveExpr, MotiveError> {
        if self.den != [BigInt::one()] {
            return Err(MotiveError::UnsupportedSigmaShape("denominator present".into()));
        }
        // Write self = sum n_i y_i with y_i = s^e * (1 or a class atom).
        let mut pieces: Vec<(BigInt, MotiveExpr, MotiveExpr)> = Vec::new();
        for ((m, e), c) in &self.num {
            let sigma_m = match m.0.len() {
                0 => MotiveExpr::int(1),
                1 => {
                    let (a, &exp) = m.0.iter().next().unwrap();
                    match (a, exp) {
                        (Atom::Class(s), 1) => MotiveExpr::atom(Atom::Sigma2(s.clone())),
                        _ => return Err(MotiveError::UnsupportedSigmaShape(self.to_string())),
                    }
                }
                _ => return Err(MotiveError::UnsupportedSigmaShape(self.to_string())),
            };
            let y = MotiveExpr::term(BigInt::one(), *e, m.clone());
            let sigma_y = MotiveExpr::s_pow(2 * e) * sigma_m;
            pieces.push((c.clone(), y, sigma_y));
        }
        let mut out = MotiveExpr::zero();
        for (i, (n, y, sy)) in pieces.iter().enumerate() {
            // sigma_2(n y) = n sigma_2(y) + n(n-1)/2 y^2
            let pairs = n * (n - BigInt::one()) / BigInt::from(2);
            out = out + MotiveExpr::scalar(n) * sy.clone() + MotiveExpr::scalar(&pairs) * y.mul_ref(y);
            for (m, z, _) in &pieces[i + 1..] {
                out = out + MotiveExpr::scalar(&(n * m)) * y.mul_ref(z);
            }
        }
        Ok(out)
    }

    fn scalar(n: &BigInt) -> MotiveExpr {
        MotiveExpr::term(n.clone(), 0, AtomMono::one())
    }

    /// Replaces every occurrence of `sym` by `value`; `sigma2(sym)` becomes `sigma2(value)`.
    pub fn substitute(&self, sym: &ClassSymbol, value: &MotiveExpr) -> Result<MotiveExpr, MotiveError> {
        let sigma_value = if self.atoms().contains(&Atom::Sigma2(sym.clone())) { Some(value.sigma2()?) } else { None };
        let mut num = MotiveExpr::zero();
        for ((m, e), c) in &self.num {
            let mut t = MotiveExpr::term(c.clone(), *e, AtomMono::one());
            for (a, exp) in m.atoms() {
                let factor = match a {
                    Atom::Class(s) if s == sym => value.clone(),
                    Atom::Sigma2(s) if s == sym => sigma_value.clone().unwrap(),
                    _ => MotiveExpr::atom(a.clone()),
                };
                t = t * factor.pow(exp as i64)?;
            }
            num = num + t;
        }
        let den = MotiveExpr::raw(
            self.den.iter().enumerate().map(|(i, c)| ((AtomMono::one(), i as i64), c.clone())).collect(),
            vec![BigInt::one()],
        );
        num.checked_div(&den)
    }

    /// Evaluates at `L = q` with the bundle's counts.
    pub fn specialize(&self, bundle: &CountBundle) -> Result<BigRational, MotiveError> {
        if !self.has_integer_l_powers() {
            return Err(MotiveError::OddHalfPower);
        }
        let q = BigRational::from_integer(BigInt::from(bundle.q));
        let lpow = |e: i64| -> BigRational {
            let half = e / 2;
            if half >= 0 {
                num_traits::pow(q.clone(), half as usize)
            } else {
                BigRational::one() / num_traits::pow(q.clone(), (-half) as usize)
            }
        };
        let mut den = BigRational::zero();
        for (i, c) in self.den.iter().enumerate() {
            if !c.is_zero() {
                den += BigRational::from_integer(c.clone()) * lpow(i as i64);
            }
        }
        if den.is_zero() {
            return Err(MotiveError::ZeroDenominator(bundle.q));
        }
        let mut num = BigRational::zero();
        for ((m, e), c) in &self.num {
            let mut t = BigRational::from_integer(c.clone()) * lpow(*e);
            for (a, exp) in m.atoms() {
                let v = bundle.atom_value(a)?;
                t *= num_traits::pow(v, exp as usize);
            }
            num += t;
        }
        Ok(num / den)
    }
}

impl std::ops::Add for MotiveExpr {
    type Output = MotiveExpr;
    fn add(self, rhs: MotiveExpr) -> MotiveExpr {
        self.add_ref(&rhs)
    }
}

impl std::ops::Sub for MotiveExpr {
    type Output = MotiveExpr;
    fn sub(self, rhs: MotiveExpr) -> MotiveExpr {
        self.add_ref(&rhs.neg())
    }
}

impl std::ops::Mul for MotiveExpr {
    type Output = MotiveExpr;
    fn mul(self, rhs: MotiveExpr) -> MotiveExpr {
        self.mul_ref(&rhs)
    }
}

impl std::ops::Neg for MotiveExpr {
    type Output = MotiveExpr;
    fn neg(self) -> MotiveExpr {
        MotiveExpr::neg(&self)
    }
}

impl<'a> std::ops::Add<&'a MotiveExpr> for &'a MotiveExpr {
    type Output = MotiveExpr;
    fn add(self, rhs: &MotiveExpr) -> MotiveExpr {
        self.add_ref(rhs)
    }
}

impl<'a> std::ops::Sub<&'a MotiveExpr> for &'a MotiveExpr {
    type Output = MotiveExpr;
    fn sub(self, rhs: &MotiveExpr) -> MotiveExpr {
        self.add_ref(&rhs.neg())
    }
}

impl<'a> std::ops::Mul<&'a MotiveExpr> for &'a MotiveExpr {
    type Output = MotiveExpr;
    fn mul(self, rhs: &MotiveExpr) -> MotiveExpr {
        self.mul_ref(rhs)
    }
}

macro_rules! mixed_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl std::ops::$tr<&MotiveExpr> for MotiveExpr {
            type Output = MotiveExpr;
            fn $f(self, rhs: &MotiveExpr) -> MotiveExpr {
                std::ops::$tr::$f(&self, rhs)
            }
        }
        impl std::ops::$tr<MotiveExpr> for &MotiveExpr {
            type Output = MotiveExpr;
            fn $f(self, rhs: MotiveExpr) -> MotiveExpr {
                std::ops::$tr::$f(self, &rhs)
            }
        }
    )*};
}

mixed_ops!(Add add, Sub sub, Mul mul);

impl From<i64> for MotiveExpr {
    fn from(n: i64) -> Self {
        MotiveExpr::int(n)
    }
}

fn fmt_l_power(e: i64) -> Option<String> {
    match e {
        0 => None,
        2 => Some("L".into()),
        e if e % 2 == 0 && e > 0 => Some(format!("L^{}", e / 2)),
        e if e % 2 == 0 => Some(format!("L^({})", e / 2)),
        e => Some(format!("L^({e}/2)")),
    }
}

fn fmt_sum(terms: &[(BigInt, Vec<String>)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (c, factors)) in terms.iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        let body = if factors.is_empty() {
            a.to_string()
        } else if a.is_one() {
            factors.join("*")
        } else {
            format!("{}*{}", a, factors.join("*"))
        };
        match (i == 0, neg) {
            (true, true) => out.push_str(&format!("-{body}")),
            (true, false) => out.push_str(&body),
            (false, true) => out.push_str(&format!(" - {body}")),
            (false, false) => out.push_str(&format!(" + {body}")),
        }
    }
    out
}

impl fmt::Display for MotiveExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Pure L terms first, then by atom monomial; descending L power inside.
        let mut keys: Vec<&(AtomMono, i64)> = self.num.keys().collect();
        keys.sort_by(|a, b| (a.0.degree(), &a.0, -a.1).cmp(&(b.0.degree(), &b.0, -b.1)));
        let terms: Vec<(BigInt, Vec<String>)> = keys
            .into_iter()
            .map(|k| {
                let mut factors = Vec::new();
                if let Some(l) = fmt_l_power(k.1) {
                    factors.push(l);
                }
                for (a, e) in k.0.atoms() {
                    factors.push(if e == 1 { a.to_string() } else { format!("{a}^{e}") });
                }
                (self.num[k].clone(), factors)
            })
            .collect();
        let num = fmt_sum(&terms);
        if self.den == [BigInt::one()] {
            return write!(f, "{num}");
        }
        let dterms: Vec<(BigInt, Vec<String>)> = self
            .den
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (c.clone(), fmt_l_power(i as i64).into_iter().collect()))
            .collect();
        let wrap = |s: String, n: usize| if n > 1 { format!("({s})") } else { s };
        write!(f, "{}/{}", wrap(num, self.num.len()), wrap(fmt_sum(&dterms), dterms.len()))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, MotiveError> {
        Err(MotiveError::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), MotiveError> {
        if self.eat(b) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", b as char))
        }
    }

    fn integer(&mut self) -> Result<BigInt, MotiveError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(text.parse().unwrap())
    }

    fn small_int(&mut self) -> Result<i64, MotiveError> {
        let neg = self.eat(b'-');
        let pos = self.pos;
        let n = self.integer()?.to_i64().ok_or(MotiveError::Parse { pos, msg: "exponent too large".into() })?;
        Ok(if neg { -n } else { n })
    }

    fn expr(&mut self) -> Result<MotiveExpr, MotiveError> {
        let mut acc = if self.eat(b'-') { self.term()?.neg() } else { self.term()? };
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<MotiveExpr, MotiveError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                let pos = self.pos;
                let d = self.unary()?;
                acc = acc.checked_div(&d).map_err(|e| MotiveError::Parse { pos, msg: e.to_string() })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<MotiveExpr, MotiveError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<MotiveExpr, MotiveError> {
        let (base, is_l) = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let pos = self.pos;
        let (num, den) = if self.eat(b'(') {
            let n = self.small_int()?;
            let d = if self.eat(b'/') { self.small_int()? } else { 1 };
            self.expect(b')')?;
            (n, d)
        } else {
            (self.small_int()?, 1)
        };
        match den {
            1 => base.pow(num).map_err(|e| MotiveError::Parse { pos, msg: e.to_string() }),
            2 if is_l => Ok(MotiveExpr::s_pow(num)),
            _ => Err(MotiveError::Parse { pos, msg: "fractional exponent is only allowed on L with denominator 2".into() }),
        }
    }

    fn primary(&mut self) -> Result<(MotiveExpr, bool), MotiveError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok((e, false))
            }
            Some(b'[') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos] != b']' {
                    self.pos += 1;
                }
                if self.pos >= self.src.len() {
                    self.pos = start;
                    return self.err("unterminated class name");
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().trim().to_string();
                self.pos += 1;
                if name.is_empty() {
                    self.pos = start;
                    return self.err("empty class name");
                }
                Ok((MotiveExpr::class(ClassSymbol::from_name(&name)), false))
            }
            Some(b) if b.is_ascii_digit() => Ok((MotiveExpr::scalar(&self.integer()?), false)),
            Some(b) if b.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match word {
                    "L" => Ok((MotiveExpr::l(), true)),
                    "sigma2" => {
                        self.expect(b'(')?;
                        let pos = self.pos;
                        let inner = self.expr()?;
                        self.expect(b')')?;
                        let v = inner.sigma2().map_err(|e| MotiveError::Parse { pos, msg: e.to_string() })?;
                        Ok((v, false))
                    }
                    _ => {
                        self.pos = start;
                        self.err(format!("unknown identifier '{word}'"))
                    }
                }
            }
            Some(b) => self.err(format!("unexpected character '{}'", b as char)),
            None => self.err("unexpected end of input"),
        }
    }
}

pub fn parse_motive(text: &str) -> Result<MotiveExpr, MotiveError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

pub fn print_motive(x: &MotiveExpr) -> String {
    x.to_string()
}

impl FromStr for MotiveExpr {
    type Err = MotiveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_motive(s)
    }
}

impl Serialize for MotiveExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MotiveExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_motive(&text).map_err(serde::de::Error::custom)
    }
}

/// Point counts over `GF(q)` and `GF(q^2)` for class symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBundle {
    pub q: u64,
    /// Symbol name to `(count over GF(q), count over GF(q^2))`.
    pub counts: BTreeMap<String, (u64, u64)>,
}

impl CountBundle {
    pub fn new(q: u64) -> Self {
        CountBundle { q, counts: BTreeMap::new() }
    }

    pub fn set(&mut self, sym: &ClassSymbol, over_q: u64, over_q2: u64) {
        self.counts.insert(sym.name().to_string(), (over_q, over_q2));
    }

    pub fn get(&self, sym: &ClassSymbol) -> Option<(u64, u64)> {
        self.counts.get(sym.name()).copied()
    }

    fn atom_value(&self, a: &Atom) -> Result<BigRational, MotiveError> {
        let (n1, n2) = self.get(a.symbol()).ok_or_else(|| MotiveError::MissingSymbol(a.symbol().name().into()))?;
        let n1 = BigRational::from_integer(n1.into());
        Ok(match a {
            Atom::Class(_) => n1,
            Atom::Sigma2(_) => (&n1 * &n1 + BigRational::from_integer(n2.into())) / BigRational::from_integer(2.into()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str) -> MotiveExpr {
        parse_motive(s).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn basic_identities() {
        assert_eq!(m("(L-1)+1"), m("L"));
        assert_eq!(MotiveExpr::p2() * m("L-1"), m("L^3-1"));
        assert_eq!(MotiveExpr::gl(2), m("(L^2-1)*(L^2-L)"));
        assert_eq!(m("(L^2-1)/(L-1)"), m("L+1"));
        assert_eq!(m("L^(1/2)*L^(1/2)"), m("L"));
        assert_eq!(m("1/L"), m("L^(-1)"));
        assert!(m("L - L").is_zero());
    }

    #[test]
    fn canonical_fraction_is_reduced() {
        let a = m("[E_c]*(L+1)/(L^2-1)");
        assert_eq!(a, m("[E_c]/(L-1)"));
        assert_eq!(a.denominator(), &[BigInt::from(-1), BigInt::zero(), BigInt::one()]);
        // Content is divided out and the leading denominator coefficient is positive.
        assert_eq!(m("(2*[X0])/(2-2*L)"), m("-[X0]/(L-1)"));
    }

    #[test]
    fn division_rules() {
        assert_eq!(m("L").checked_div(&MotiveExpr::zero()), Err(MotiveError::DivisionByZero));
        assert_eq!(m("L").checked_div(&m("[E_DT]")), Err(MotiveError::SymbolicDivisor));
        assert!(parse_motive("1/[E_DT]").is_err());
    }

    #[test]
    fn sigma2_rules() {
        assert_eq!(m("1").sigma(2).unwrap(), m("1"));
        assert_eq!(m("3").sigma(2).unwrap(), m("6"));
        assert_eq!(m("-1").sigma(2).unwrap(), m("0"));
        assert_eq!(m("L^(-3)*[E_DT]").sigma(2).unwrap(), m("L^(-6)*sigma2([E_DT])"));
        assert_eq!(m("-[E]").sigma(2).unwrap(), m("[E]^2 - sigma2([E])"));
        assert_eq!(m("L").sigma(2).unwrap(), m("L^2"));
        assert!(m("[A]*[B]").sigma(2).is_err());
        assert!(m("[A]").sigma(3).is_err());
        let n1 = MotiveExpr::n1();
        let a = m("(L-1)*[E_DT]").sigma(2).unwrap() + m("(L-1)*[E_DT]") * m("1-[S_DT]") + m("1-[S_DT]").sigma(2).unwrap();
        assert_eq!(n1.sigma(2).unwrap(), a);
    }

    #[test]
    fn specialization() {
        let b = CountBundle::new(7);
        assert_eq!(m("(L-1)^2").specialize(&b).unwrap(), r(36, 1));
        assert_eq!(MotiveExpr::gl(2).specialize(&b).unwrap(), r(2016, 1));
        assert_eq!(m("sigma2(L)").specialize(&b).unwrap(), r(49, 1));
        assert_eq!(m("L^(1/2)").specialize(&b), Err(MotiveError::OddHalfPower));
        assert_eq!(m("[E_DT]").specialize(&b), Err(MotiveError::MissingSymbol("E_DT".into())));
        assert_eq!(m("1/(L-7)").specialize(&b), Err(MotiveError::ZeroDenominator(7)));
        let mut b = CountBundle::new(5);
        b.set(&ClassSymbol::EDt, 6, 36);
        // sigma2 counts unordered pairs: (6^2 + 36)/2
        assert_eq!(m("sigma2([E_DT])").specialize(&b).unwrap(), r(36, 1));
        assert_eq!(m("[E_DT]/(L-1)").specialize(&b).unwrap(), r(3, 2));
    }

    #[test]
    fn printing_round_trips() {
        assert_eq!(print_motive(&m("L")), "L");
        for s in ["(L-1)*[E_DT]+1-[S_DT]", "[E_c]-(L^2+L+1)", "L^(-3/2)*([MU3]^2 - 2)/(L^2-1)", "sigma2([X0]) - 7*L^(-2)"] {
            let x = m(s);
            assert_eq!(m(&print_motive(&x)), x, "{s} printed as {x}");
        }
        assert_eq!(MotiveExpr::n1(), m("(L-1)*[E_DT]+1-[S_DT]"));
        assert_eq!(MotiveExpr::n2(), m("[E_c]-(L^2+L+1)"));
        let json = serde_json::to_string(&MotiveExpr::n2()).unwrap();
        assert_eq!(serde_json::from_str::<MotiveExpr>(&json).unwrap(), MotiveExpr::n2());
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_motive("L + * 2") {
            Err(MotiveError::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_motive("[E_DT"), Err(MotiveError::Parse { .. })));
        assert!(matches!(parse_motive("L^(1/3)"), Err(MotiveError::Parse { .. })));
        assert!(matches!(parse_motive("[A]^(1/2)"), Err(MotiveError::Parse { .. })));
    }

    #[test]
    fn substitution() {
        let x = m("[X0] - [X1]");
        let y = x.substitute(&ClassSymbol::X0, &m("(L-1)^2")).unwrap();
        assert_eq!(y, m("(L-1)^2 - [X1]"));
        let z = m("sigma2([A])").substitute(&ClassSymbol::User("A".into()), &m("L+1")).unwrap();
        assert_eq!(z, m("L^2 + L + 1"));
    }

    fn arb_expr() -> impl Strategy<Value = MotiveExpr> {
        let atom = prop_oneof![
            (-3i64..4).prop_map(MotiveExpr::int),
            (-3i64..4).prop_map(MotiveExpr::s_pow),
            Just(MotiveExpr::class(ClassSymbol::EDt)),
            Just(MotiveExpr::class(ClassSymbol::Mu3)),
            Just(MotiveExpr::atom(Atom::Sigma2(ClassSymbol::Ec))),
            Just(m("1/(L-1)")),
            Just(m("1/(L+1)")),
        ];
        atom.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner).prop_map(|(a, b)| a - b),
            ]
        })
    }

    fn bundle() -> CountBundle {
        let mut b = CountBundle::new(4);
        b.set(&ClassSymbol::EDt, 5, 20);
        b.set(&ClassSymbol::Mu3, 1, 3);
        b.set(&ClassSymbol::Ec, 3, 21);
        b
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(a in arb_expr(), b in arb_expr(), c in arb_expr()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn specialization_is_a_homomorphism(a in arb_expr(), b in arb_expr()) {
            let bd = bundle();
            let (va, vb) = (a.specialize(&bd), b.specialize(&bd));
            if let (Ok(va), Ok(vb)) = (va, vb) {
                prop_assert_eq!((&a * &b).specialize(&bd).unwrap(), &va * &vb);
                prop_assert_eq!((&a + &b).specialize(&bd).unwrap(), &va + &vb);
            }
        }

        #[test]
        fn print_parse_identity(a in arb_expr()) {
            prop_assert_eq!(parse_motive(&print_motive(&a)).unwrap(), a);
        }

        #[test]
        fn sigma2_of_sum_is_symmetric(a in -3i64..4, e in -2i64..3, b in -3i64..4) {
            let u = MotiveExpr::int(a) * MotiveExpr::s_pow(e);
            let v = MotiveExpr::int(b) * MotiveExpr::class(ClassSymbol::EDt);
            let lhs = (&u + &v).sigma(2).unwrap();
            prop_assert_eq!(&lhs, &(&v + &u).sigma(2).unwrap());
            prop_assert_eq!(lhs, u.sigma(2).unwrap() + &u * &v + v.sigma(2).unwrap());
        }
    }
}
