//! Sparse multivariate polynomials with rational coefficients.
//!
//! Used for every symbolic identity in the crate: traces of the potential on
//! cell representatives, `det Q`, the congruence diagonalization, and the
//! change of variables for the `X` strata. Variables are named; parameters
//! such as `c` and `rho` are ordinary variables here.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A monomial: variable name to positive exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(BTreeMap::from([(name.to_string(), 1)]))
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, u32)>) -> Self {
        let mut m = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *m.entry(v.to_string()).or_insert(0) += e;
            }
        }
        Monomial(m)
    }

    pub fn exponent(&self, var: &str) -> u32 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut m = self.0.clone();
        for (v, &e) in &other.0 {
            let cur = m.get_mut(v)?;
            if *cur < e {
                return None;
            }
            *cur -= e;
            if *cur == 0 {
                m.remove(v);
            }
        }
        Some(Monomial(m))
    }

    fn without(&self, var: &str) -> Monomial {
        let mut m = self.0.clone();
        m.remove(var);
        Monomial(m)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.0.iter().map(|(v, &e)| if e == 1 { v.clone() } else { format!("{v}^{e}") }).collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(Rational::from_integer(n.into()))
    }

    pub fn var(name: &str) -> Self {
        Poly::monomial(Monomial::var(name), Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The value if this polynomial is a constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms.keys().flat_map(|m| m.0.keys().cloned()).collect()
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.exponent(var) > 0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.terms.keys().map(|m| m.exponent(var)).max().unwrap_or(0)
    }

    /// Largest total degree in the given block of variables over all terms.
    pub fn degree_in_block(&self, block: &[&str]) -> u32 {
        self.terms.keys().map(|m| block.iter().map(|v| m.exponent(v)).sum::<u32>()).max().unwrap_or(0)
    }

    /// Coefficient of `var^deg`, as a polynomial in the other variables.
    pub fn coeff_of(&self, var: &str, deg: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.exponent(var) == deg {
                out.add_term(m.without(var), c.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        let mut out = Poly::zero();
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.terms.insert(m.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::int(1);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Replaces `var` by `value` everywhere.
    pub fn subs(&self, var: &str, value: &Poly) -> Poly {
        let mut cache: BTreeMap<u32, Poly> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            let rest = Poly::monomial(m.without(var), c.clone());
            if e == 0 {
                out = out + rest;
            } else {
                let pw = cache.entry(e).or_insert_with(|| value.pow(e)).clone();
                out = out + &rest * &pw;
            }
        }
        out
    }

    pub fn subs_many(&self, values: &[(&str, Poly)]) -> Poly {
        values.iter().fold(self.clone(), |acc, (v, p)| acc.subs(v, p))
    }

    /// Rewrites with `var^power -> replacement` until no term contains `var`
    /// to a power `>= power`.
    pub fn reduce_power(&self, var: &str, power: u32, replacement: &Poly) -> Poly {
        let mut cur = self.clone();
        loop {
            let mut changed = false;
            let mut out = Poly::zero();
            for (m, c) in &cur.terms {
                let e = m.exponent(var);
                if e >= power {
                    changed = true;
                    let mut rest = m.without(var);
                    if e > power {
                        rest = rest.mul(&Monomial::from_pairs([(var, e - power)]));
                    }
                    out = out + &Poly::monomial(rest, c.clone()) * replacement;
                } else {
                    out.add_term(m.clone(), c.clone());
                }
            }
            cur = out;
            if !changed {
                return cur;
            }
        }
    }

    /// Cancels `a*b` pairs where `b` is declared the inverse of `a`.
    pub fn reduce_inverse_pair(&self, a: &str, b: &str) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let k = m.exponent(a).min(m.exponent(b));
            let m2 = if k > 0 { m.div(&Monomial::from_pairs([(a, k), (b, k)])).unwrap() } else { m.clone() };
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Exact division by `c * m`; `None` if some term is not divisible.
    pub fn div_monomial(&self, m: &Monomial, c: &Rational) -> Option<Poly> {
        let mut out = Poly::zero();
        for (t, v) in &self.terms {
            out.add_term(t.div(m)?, v / c);
        }
        Some(out)
    }

    /// Evaluates with every variable bound to a rational.
    pub fn eval_rational(&self, values: &BTreeMap<String, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.vars() {
                let x = values.get(v)?;
                for _ in 0..e {
                    t *= x;
                }
            }
            acc += t;
        }
        Some(acc)
    }

    /// Weighted degree of each term under the given variable weights.
    pub fn weighted_degrees(&self, weights: &BTreeMap<String, i32>) -> BTreeSet<i32> {
        self.terms
            .keys()
            .map(|m| m.vars().map(|(v, e)| weights.get(v).copied().unwrap_or(0) * e as i32).sum())
            .collect()
    }
}

impl From<i64> for Poly {
    fn from(n: i64) -> Self {
        Poly::int(n)
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.clone() + rhs.clone()
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for v in self.terms.values_mut() {
            *v = -v.clone();
        }
        self
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -self.clone()
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.clone() - rhs.clone()
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                *acc.entry(m1.mul(m2)).or_insert_with(Rational::zero) += c1 * c2;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Poly { terms: acc }
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

macro_rules! mixed_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $f(self, rhs: &Poly) -> Poly {
                $tr::$f(&self, rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                $tr::$f(self, &rhs)
            }
        }
    )*};
}

mixed_ops!(Add add, Sub sub, Mul mul);

fn fmt_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            let body = if m.is_one() {
                fmt_rational(&a)
            } else if a.is_one() {
                m.to_string()
            } else {
                format!("{}*{}", fmt_rational(&a), m)
            };
            match (first, neg) {
                (true, true) => write!(f, "-{body}")?,
                (true, false) => write!(f, "{body}")?,
                (false, true) => write!(f, " - {body}")?,
                (false, false) => write!(f, " + {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}

/// Rational coefficient rendered for JSON export (`"n"` or `"n/d"`).
pub fn rational_string(c: &Rational) -> String {
    fmt_rational(c)
}

/// Integer value of a rational, if it is an integer that fits in `i64`.
pub fn rational_to_i64(c: &Rational) -> Option<i64> {
    c.is_integer().then(|| c.numer().to_i64()).flatten()
}

/// Shorthand used by the symbolic catalogs: `p("x")`.
pub fn v(name: &str) -> Poly {
    Poly::var(name)
}

/// Shorthand for integer constants.
pub fn k(n: i64) -> Poly {
    Poly::int(n)
}

/// Shorthand for rational constants.
pub fn q(n: i64, d: i64) -> Poly {
    Poly::constant(rat(n, d))
}
