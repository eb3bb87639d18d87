//! Exact arithmetic in GF(p^k) for small primes and `k <= 4`.
//!
//! Elements are plain coefficient arrays; the [`FieldContext`] is passed to
//! every operation. An element with coefficients `c_0..c_{k-1}` stands for the
//! residue `c_0 + c_1 a + ... + c_{k-1} a^{k-1}` modulo the context's monic
//! modulus. The integer encoding `sum c_i p^i` gives the enumeration order.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_DEGREE: usize = 4;

/// Largest field size accepted by [`make_field`].
pub const MAX_FIELD_SIZE: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("extension degree {0} is outside 1..=4")]
    DegreeOutOfRange(u32),
    #[error("GF({0}^{1}) exceeds the supported field size")]
    TooLarge(u64, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("element {element} is not a canonical element of {field}")]
    ForeignElement { element: String, field: String },
}

/// Binary and unary operations accepted by [`FieldContext::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
    /// `a^e` where `e` is read from the prime-field value of `b`'s index.
    Pow,
    /// Inverse of `a`; `b` is ignored.
    Inv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    coeffs: [u32; MAX_DEGREE],
}

impl FieldElement {
    pub fn coeffs(&self) -> &[u32; MAX_DEGREE] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldContext {
    p: u32,
    k: u32,
    /// Lower coefficients `m_0..m_{k-1}` of the monic modulus `x^k + ... + m_0`.
    modulus: [u32; MAX_DEGREE],
    size: u32,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits a prime power `q = p^m` into `(p, m)`.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

/// Builds GF(p^k) with the smallest monic irreducible modulus of degree `k`,
/// where candidates are ordered by the integer encoding of their lower
/// coefficients.
pub fn make_field(p: u64, k: u32) -> Result<FieldContext, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if k == 0 || k as usize > MAX_DEGREE {
        return Err(FieldError::DegreeOutOfRange(k));
    }
    let size = p.checked_pow(k).filter(|&s| s <= MAX_FIELD_SIZE).ok_or(FieldError::TooLarge(p, k))?;
    let p32 = p as u32;
    let mut modulus = [0u32; MAX_DEGREE];
    if k > 1 {
        let candidates = p.pow(k);
        let found = (0..candidates).find_map(|code| {
            let mut lower = [0u32; MAX_DEGREE];
            let mut c = code;
            for slot in lower.iter_mut().take(k as usize) {
                *slot = (c % p) as u32;
                c /= p;
            }
            let mut poly: Vec<u32> = lower[..k as usize].to_vec();
            poly.push(1);
            is_irreducible(&poly, p32).then_some(lower)
        });
        modulus = found.expect("an irreducible polynomial exists in every degree");
    }
    Ok(FieldContext { p: p32, k, modulus, size: size as u32 })
}

/// Builds GF(q) for a prime power `q` with `k` up to 4.
pub fn make_field_of_size(q: u64) -> Result<FieldContext, FieldError> {
    let (p, m) = prime_power(q).ok_or(FieldError::NotPrime(q))?;
    make_field(p, m)
}

/// Remainder of `a` modulo monic `b` over GF(p); coefficients low to high.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let p = p as u64;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let db = b.len() - 1;
    for top in (db..r.len()).rev() {
        let lead = r[top];
        if lead == 0 {
            continue;
        }
        let shift = top - db;
        for (j, &bj) in b.iter().enumerate() {
            r[shift + j] = (r[shift + j] + p - lead * bj as u64 % p) % p;
        }
    }
    r.truncate(db);
    r.into_iter().map(|c| c as u32).collect()
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let deg = poly.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for code in 0..count {
            let mut div = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                div.push((c % p as u64) as u32);
                c /= p as u64;
            }
            div.push(1);
            let r = poly_rem(poly, &div, p);
            if r.iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

impl FieldContext {
    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    /// Monic modulus, coefficients from low to high degree.
    pub fn modulus(&self) -> Vec<u32> {
        let mut m = self.modulus[..self.k as usize].to_vec();
        m.push(1);
        m
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::default()
    }

    pub fn one(&self) -> FieldElement {
        self.from_int(1)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        let mut e = FieldElement::default();
        e.coeffs[0] = n.rem_euclid(self.p as i64) as u32;
        e
    }

    /// Element with the given coefficients (reduced mod p, padded with zeros).
    pub fn from_coeffs(&self, coeffs: &[i64]) -> Result<FieldElement, FieldError> {
        if coeffs.len() > self.k as usize {
            return Err(FieldError::ForeignElement { element: format!("{coeffs:?}"), field: self.to_string() });
        }
        let mut e = FieldElement::default();
        for (slot, &c) in e.coeffs.iter_mut().zip(coeffs) {
            *slot = c.rem_euclid(self.p as i64) as u32;
        }
        Ok(e)
    }

    /// The generator `a` of the extension (equal to 0 in a prime field).
    pub fn generator(&self) -> FieldElement {
        if self.k == 1 {
            return self.zero();
        }
        let mut e = FieldElement::default();
        e.coeffs[1] = 1;
        e
    }

    pub fn element(&self, index: u32) -> FieldElement {
        debug_assert!(index < self.size);
        let mut e = FieldElement::default();
        let mut i = index;
        for slot in e.coeffs.iter_mut().take(self.k as usize) {
            *slot = i % self.p;
            i /= self.p;
        }
        e
    }

    pub fn index(&self, e: FieldElement) -> u32 {
        e.coeffs[..self.k as usize].iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn contains(&self, e: FieldElement) -> bool {
        e.coeffs.iter().enumerate().all(|(i, &c)| if i < self.k as usize { c < self.p } else { c == 0 })
    }

    fn check(&self, e: FieldElement) -> Result<(), FieldError> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(FieldError::ForeignElement { element: format!("{:?}", e.coeffs), field: self.to_string() })
        }
    }

    /// All `p^k` elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.size).map(move |i| self.element(i))
    }

    /// Splits the index range into at most `parts` contiguous chunks.
    pub fn chunks(&self, parts: usize) -> Vec<Range<u32>> {
        let parts = parts.max(1) as u32;
        let step = self.size.div_ceil(parts).max(1);
        (0..self.size).step_by(step as usize).map(|s| s..(s + step).min(self.size)).collect()
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let mut r = FieldElement::default();
        for i in 0..self.k as usize {
            r.coeffs[i] = (a.coeffs[i] + b.coeffs[i]) % self.p;
        }
        r
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        let mut r = FieldElement::default();
        for i in 0..self.k as usize {
            r.coeffs[i] = (self.p - a.coeffs[i]) % self.p;
        }
        r
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let k = self.k as usize;
        let p = self.p as u64;
        let mut prod = [0u64; 2 * MAX_DEGREE - 1];
        for i in 0..k {
            for j in 0..k {
                prod[i + j] = (prod[i + j] + a.coeffs[i] as u64 * b.coeffs[j] as u64) % p;
            }
        }
        for top in (k..2 * k - 1).rev() {
            let t = prod[top];
            if t == 0 {
                continue;
            }
            prod[top] = 0;
            for j in 0..k {
                let idx = top - k + j;
                prod[idx] = (prod[idx] + p - t * self.modulus[j] as u64 % p) % p;
            }
        }
        let mut r = FieldElement::default();
        for i in 0..k {
            r.coeffs[i] = prod[i] as u32;
        }
        r
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(a, self.size as u64 - 2))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Checked arithmetic: both operands must be canonical elements of this field.
    pub fn apply(&self, op: FieldOp, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match op {
            FieldOp::Add => self.add(a, b),
            FieldOp::Sub => self.sub(a, b),
            FieldOp::Mul => self.mul(a, b),
            FieldOp::Div => self.div(a, b)?,
            FieldOp::Pow => self.pow(a, self.index(b) as u64),
            FieldOp::Inv => self.inv(a)?,
        })
    }

    /// All `x` with `x^3 = a`, in index order.
    pub fn cube_roots(&self, a: FieldElement) -> Vec<FieldElement> {
        self.elements().filter(|&x| self.mul(self.mul(x, x), x) == a).collect()
    }

    /// All `x` with `x^2 = a`, in index order.
    pub fn square_roots(&self, a: FieldElement) -> Vec<FieldElement> {
        self.elements().filter(|&x| self.mul(x, x) == a).collect()
    }

    /// The square root with the smallest index, if any.
    pub fn sqrt(&self, a: FieldElement) -> Option<FieldElement> {
        self.elements().find(|&x| self.mul(x, x) == a)
    }

    /// Number of cube roots of unity, `gcd(3, q - 1)`.
    pub fn mu3_count(&self) -> usize {
        self.cube_roots(self.one()).len()
    }

    pub fn format_element(&self, e: FieldElement) -> String {
        let mut parts = Vec::new();
        for i in (0..self.k as usize).rev() {
            let c = e.coeffs[i];
            if c == 0 {
                continue;
            }
            parts.push(match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "a".to_string(),
                (1, c) => format!("{c}a"),
                (i, 1) => format!("a^{i}"),
                (i, c) => format!("{c}a^{i}"),
            });
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("+")
        }
    }

    /// Parses the output of [`format_element`](Self::format_element); plain
    /// integers are read into the prime subfield.
    pub fn parse_element(&self, text: &str) -> Result<FieldElement, FieldError> {
        let bad = || FieldError::ForeignElement { element: text.to_string(), field: self.to_string() };
        let mut coeffs = [0i64; MAX_DEGREE];
        for part in text.trim().split('+') {
            let part = part.trim();
            let (coef, exp) = match part.find('a') {
                None => (part.parse::<i64>().map_err(|_| bad())?, 0usize),
                Some(pos) => {
                    let c = if pos == 0 { 1 } else { part[..pos].parse::<i64>().map_err(|_| bad())? };
                    let rest = &part[pos + 1..];
                    let e = if rest.is_empty() {
                        1
                    } else {
                        rest.strip_prefix('^').and_then(|r| r.parse::<usize>().ok()).ok_or_else(bad)?
                    };
                    (c, e)
                }
            };
            if exp >= self.k as usize {
                return Err(bad());
            }
            coeffs[exp] += coef;
        }
        self.from_coeffs(&coeffs[..self.k as usize])
    }
}

impl fmt::Display for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{})", self.p, self.k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn prime_field_and_gf4() {
        let f7 = make_field(7, 1).unwrap();
        assert_eq!(f7.modulus(), vec![0, 1]);
        let gf4 = make_field(2, 2).unwrap();
        assert_eq!(gf4.modulus(), vec![1, 1, 1]);
        let a = gf4.generator();
        // a^2 = a + 1 under x^2 + x + 1
        assert_eq!(gf4.mul(a, a), gf4.add(a, gf4.one()));
    }

    #[test]
    fn gf25_modulus_is_smallest_irreducible() {
        let f = make_field(5, 2).unwrap();
        // exhaustive: the first monic quadratic without roots in encoding order
        let expected = (0..25u32)
            .map(|code| [code % 5, code / 5])
            .find(|m| (0..5u32).all(|x| (x * x + m[1] * x + m[0]) % 5 != 0))
            .unwrap();
        assert_eq!(f.modulus(), vec![expected[0], expected[1], 1]);
        assert_eq!(f.modulus(), vec![2, 0, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(make_field(9, 1), Err(FieldError::NotPrime(9)));
        assert_eq!(make_field(5, 0), Err(FieldError::DegreeOutOfRange(0)));
        assert_eq!(make_field(5, 5), Err(FieldError::DegreeOutOfRange(5)));
    }

    #[test]
    fn small_arithmetic() {
        let f = make_field(7, 1).unwrap();
        let (three, five) = (f.from_int(3), f.from_int(5));
        assert_eq!(f.mul(three, five), f.one());
        assert_eq!(f.inv(three).unwrap(), five);
        assert_eq!(f.div(f.one(), f.zero()), Err(FieldError::DivisionByZero));
        assert_eq!(f.apply(FieldOp::Inv, f.zero(), f.zero()), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn foreign_elements_are_rejected() {
        let f7 = make_field(7, 1).unwrap();
        let f49 = make_field(7, 2).unwrap();
        let a = f49.generator();
        assert!(matches!(f7.apply(FieldOp::Add, a, f7.one()), Err(FieldError::ForeignElement { .. })));
    }

    #[test]
    fn enumeration() {
        let f5 = make_field(5, 1).unwrap();
        let idx: Vec<u32> = f5.elements().map(|e| e.coeffs()[0]).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert_eq!(make_field(2, 2).unwrap().elements().count(), 4);
        let f49 = make_field(7, 2).unwrap();
        let set: HashSet<_> = f49.elements().collect();
        assert_eq!(set.len(), 49);
        let chunks = f49.chunks(4);
        assert_eq!(chunks.iter().map(|r| r.len()).sum::<usize>(), 49);
        assert_eq!(chunks[0].start, 0);
    }

    #[test]
    fn cube_roots_examples() {
        let f7 = make_field(7, 1).unwrap();
        let roots: Vec<u32> = f7.cube_roots(f7.one()).iter().map(|e| e.coeffs()[0]).collect();
        assert_eq!(roots, vec![1, 2, 4]);
        let f5 = make_field(5, 1).unwrap();
        assert_eq!(f5.cube_roots(f5.one()), vec![f5.one()]);
        let f13 = make_field(13, 1).unwrap();
        let brute = (0..13u32).filter(|x| x * x * x % 13 == 4).count();
        assert_eq!(f13.cube_roots(f13.from_int(4)).len(), brute);
        assert!(matches!(brute, 0 | 3));
    }

    #[test]
    fn element_text_round_trip() {
        let f = make_field(5, 3).unwrap();
        for e in f.elements() {
            assert_eq!(f.parse_element(&f.format_element(e)).unwrap(), e);
        }
    }

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(13), Some((13, 1)));
        assert_eq!(prime_power(12), None);
    }
}
