//! Coefficients of the DT series up to order two.
//!
//! The conjectured series is a product of plethystic exponentials
//! `Exp(N * R(L) * t^n / (1 - t^n))` where `N` is a linear class combination
//! and `R` is a rational function of `L` whose expansion in `L^-1` has
//! nonnegative coefficients. Up to `t^2` only three kinds of contribution
//! occur: pairs of distinct first-order brackets, one bracket at `k = 2`, and
//! one `sigma_2` bracket. With `psi_2(R) = R(L^2)` they resum to
//! `sigma_2(N R) = psi_2(R) sigma_2(N) + (R^2 - psi_2(R))/2 * N^2`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::count::{curve_counts_bundle, CountError};
use crate::motive::{ClassSymbol, CountBundle, MotiveError, MotiveExpr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("order {0} is not supported (only 1 and 2)")]
    UnsupportedOrder(u32),
    #[error(transparent)]
    Motive(#[from] MotiveError),
    #[error(transparent)]
    Count(#[from] CountError),
}

/// One plethystic factor `Exp(base * weight * t^n)` or, if `geometric`,
/// `Exp(base * weight * t^n / (1 - t^n))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    pub base: MotiveExpr,
    pub weight: MotiveExpr,
    pub n: u32,
    pub geometric: bool,
}

impl SeriesTerm {
    pub fn new(base: MotiveExpr, weight: MotiveExpr, n: u32, geometric: bool) -> Self {
        assert!(n >= 1, "series terms start at t^1");
        SeriesTerm { base, weight, n, geometric }
    }

    /// `sigma_2(base * weight)`.
    fn sigma2(&self) -> Result<MotiveExpr, MotiveError> {
        let r = &self.weight;
        let psi = r.psi2()?;
        let pairs = (r * r - psi.clone()).checked_div(&MotiveExpr::int(2))?;
        Ok(psi * self.base.sigma(2)? + pairs * (&self.base * &self.base))
    }

    /// Coefficients of `t^1` and `t^2` in this factor.
    fn low_coefficients(&self) -> Result<[MotiveExpr; 2], MotiveError> {
        let b = &self.base * &self.weight;
        let mut c = [MotiveExpr::zero(), MotiveExpr::zero()];
        match self.n {
            1 => {
                c[0] = b.clone();
                c[1] = self.sigma2()?;
                if self.geometric {
                    c[1] = c[1].clone() + b;
                }
            }
            2 => c[1] = b,
            _ => {}
        }
        Ok(c)
    }
}

/// `M_1 = L^(-3/2)([X_DT = 1] - [X_DT = 0])` with the cone `[X_DT = 0] = (L-1)[E_DT] + 1`.
pub fn m1() -> MotiveExpr {
    let cone = (MotiveExpr::l() - MotiveExpr::int(1)) * MotiveExpr::class(ClassSymbol::EDt) + MotiveExpr::int(1);
    MotiveExpr::s_pow(-3) * (MotiveExpr::class(ClassSymbol::SDt) - cone)
}

/// `M_n = L^(1/2)([P^2] - [E_c])` for `n >= 2`.
pub fn m_n() -> MotiveExpr {
    MotiveExpr::s_pow(1) * (MotiveExpr::p2() - MotiveExpr::class(ClassSymbol::Ec))
}

fn half_lefschetz_gap() -> MotiveExpr {
    MotiveExpr::s_pow(1) - MotiveExpr::s_pow(-1)
}

/// The conjectured series as plethystic factors:
/// `-M_1/(L^(1/2) - L^(-1/2)) t/(1-t)` and `-M_2/(L^(1/2) - L^(-1/2)) t^2/(1-t^2)`,
/// each split as a linear class combination times an effective weight.
pub fn conjecture_terms() -> Vec<SeriesTerm> {
    // -M_1 = L^(-3/2) N_1 and -M_2 = L^(1/2) N_2.
    let gap = half_lefschetz_gap();
    let w1 = MotiveExpr::s_pow(-3).checked_div(&gap).expect("nonzero");
    let w2 = MotiveExpr::s_pow(1).checked_div(&gap).expect("nonzero");
    vec![SeriesTerm::new(MotiveExpr::n1(), w1, 1, true), SeriesTerm::new(MotiveExpr::n2(), w2, 2, true)]
}

/// Coefficient of `t^order` in the product of the given factors.
pub fn product_coefficient(terms: &[SeriesTerm], order: u32) -> Result<MotiveExpr, SeriesError> {
    if !(1..=2).contains(&order) {
        return Err(SeriesError::UnsupportedOrder(order));
    }
    let lows: Vec<[MotiveExpr; 2]> = terms.iter().map(SeriesTerm::low_coefficients).collect::<Result<_, _>>()?;
    if order == 1 {
        return Ok(lows.iter().fold(MotiveExpr::zero(), |acc, c| acc + c[0].clone()));
    }
    let mut out = MotiveExpr::zero();
    for (i, c) in lows.iter().enumerate() {
        out = out + c[1].clone();
        for d in &lows[i + 1..] {
            out = out + &c[0] * &d[0];
        }
    }
    Ok(out)
}

pub fn conjecture_coefficient(order: u32) -> Result<MotiveExpr, SeriesError> {
    product_coefficient(&conjecture_terms(), order)
}

fn l(n: i64) -> MotiveExpr {
    MotiveExpr::l_pow(n)
}

fn int(n: i64) -> MotiveExpr {
    MotiveExpr::int(n)
}

fn lm1() -> MotiveExpr {
    l(1) - int(1)
}

fn l2m1() -> MotiveExpr {
    l(2) - int(1)
}

/// The closed form
/// `(L(L^2-1)N_2 + L^-2 N_1^2 + L^-1 (L^2-1) N_1 + L^-2 (L-1) sigma_2(N_1)) / ((L^2-1)(L-1))`.
pub fn lemma3_closed_form() -> MotiveExpr {
    let (n1, n2) = (MotiveExpr::n1(), MotiveExpr::n2());
    let num = l(1) * l2m1() * n2
        + l(-2) * &n1 * &n1
        + l(-1) * l2m1() * n1.clone()
        + l(-2) * lm1() * n1.sigma(2).expect("N_1 is linear");
    num.checked_div(&(l2m1() * lm1())).expect("symbol-free denominator")
}

/// How the two mu_3 flavors in the computed coefficient are merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mu3Mode {
    /// `[mu_3] ([X_0] - [X_1]) = -[mu_3]^2 L`.
    Merged,
    /// Keeps `{rho^3 = 1}` and `{a^3 = 4}` apart: `-[MU3][MU3_4] L`.
    Strict,
}

impl Mu3Mode {
    fn second_flavor(self) -> ClassSymbol {
        match self {
            Mu3Mode::Merged => ClassSymbol::Mu3,
            Mu3Mode::Strict => ClassSymbol::Mu3_4,
        }
    }
}

/// `[X_0] - [X_1]` in terms of the `X` classes.
pub fn x_delta_symbolic() -> MotiveExpr {
    MotiveExpr::class(ClassSymbol::X0) - MotiveExpr::class(ClassSymbol::X1)
}

/// `[BS(0)] - [BS(1)] = L^7 + L^6 + L^5 + 2 L^3 [mu_3] ([X_0] - [X_1])`.
pub fn lemma7_delta_bs() -> MotiveExpr {
    l(7) + l(6) + l(5) + int(2) * l(3) * MotiveExpr::class(ClassSymbol::Mu3) * x_delta_symbolic()
}

/// Replaces `[X_0]`, `[X_1]` by `(L-1)^2` and `(L-1)^2 + [mu_3] L`.
pub fn apply_lemma8(x: &MotiveExpr, mode: Mu3Mode) -> Result<MotiveExpr, MotiveError> {
    let sq = lm1() * lm1();
    let x1 = sq.clone() + MotiveExpr::class(mode.second_flavor()) * l(1);
    x.substitute(&ClassSymbol::X0, &sq)?.substitute(&ClassSymbol::X1, &x1)
}

/// Solves `(L^2-1) dM_2 / [GL_2] = dBS + L^2/(L-1) dM_1^2` for the coefficient
/// `L^-4 dM_2 / [GL_2]`.
pub fn recursion_coefficient(delta_bs: &MotiveExpr, delta_m1: &MotiveExpr) -> Result<MotiveExpr, MotiveError> {
    let inner = delta_bs.clone() + (l(2) * delta_m1 * delta_m1).checked_div(&lm1())?;
    (l(-4) * inner).checked_div(&l2m1())
}

/// The same recursion on integers at `L = q`.
pub fn recursion_value(q: u64, delta_bs: i128, delta_m1: i128) -> BigRational {
    let q = BigRational::from_integer(BigInt::from(q));
    let one = BigRational::one();
    let bs = BigRational::from_integer(delta_bs.into());
    let m1 = BigRational::from_integer(delta_m1.into());
    let q2 = &q * &q;
    let inner = bs + &q2 / (&q - &one) * &m1 * &m1;
    inner / (&q2 * &q2 * (&q2 - one))
}

/// Cleared form of the recursion at `L = q`:
/// `(q^2-1)(q-1) dM_2 = (q-1)|GL_2| dBS + q^2 |GL_2| dM_1^2`. Returns both sides.
pub fn recursion_cleared(q: u64, delta_m2: i128, delta_bs: i128, delta_m1: i128) -> (BigInt, BigInt) {
    let q = BigInt::from(q);
    let one = BigInt::one();
    let gl2 = (&q * &q - &one) * (&q * &q - &q);
    let lhs = (&q * &q - &one) * (&q - &one) * BigInt::from(delta_m2);
    let rhs = (&q - &one) * &gl2 * BigInt::from(delta_bs) + &q * &q * &gl2 * BigInt::from(delta_m1) * BigInt::from(delta_m1);
    (lhs, rhs)
}

/// `(L(L^3-1) - 2[mu_3]^2 (L-1) + L^-2 N_1^2) / ((L^2-1)(L-1))`, with
/// `[mu_3]^2` read as `[MU3][MU3_4]` in strict mode.
pub fn theorem_coefficient(mode: Mu3Mode) -> MotiveExpr {
    let n1 = MotiveExpr::n1();
    let mu = MotiveExpr::class(ClassSymbol::Mu3) * MotiveExpr::class(mode.second_flavor());
    let num = l(1) * (l(3) - int(1)) - int(2) * mu * lm1() + l(-2) * &n1 * &n1;
    num.checked_div(&(l2m1() * lm1())).expect("symbol-free denominator")
}

/// The coefficient obtained from the recursion with the lemma-level inputs.
pub fn computed_coefficient(mode: Mu3Mode) -> Result<MotiveExpr, MotiveError> {
    let bs = apply_lemma8(&lemma7_delta_bs(), mode)?;
    recursion_coefficient(&bs, &MotiveExpr::n1())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Specialization {
    pub q: u64,
    pub k: u32,
    pub c: i64,
    pub value_num: String,
    pub value_den: String,
}

impl Specialization {
    pub fn new(q: u64, c: i64, v: &BigRational) -> Self {
        Specialization { q, k: 1, c, value_num: v.numer().to_string(), value_den: v.denom().to_string() }
    }

    pub fn value(&self) -> BigRational {
        BigRational::new(self.value_num.parse().unwrap(), self.value_den.parse().unwrap())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoeffReport {
    pub order: u32,
    pub mode: String,
    pub coefficient: MotiveExpr,
    pub specializations: Vec<Specialization>,
}

impl CoeffReport {
    pub fn new(order: u32, mode: &str, coefficient: MotiveExpr) -> Self {
        CoeffReport { order, mode: mode.to_string(), coefficient, specializations: vec![] }
    }

    /// Adds the value at each `(q, c)` using counted bundles.
    pub fn specialize_at(&mut self, pairs: &[(u64, i64)]) -> Result<(), SeriesError> {
        for &(q, c) in pairs {
            let bundle = curve_counts_bundle(q, c)?;
            let v = self.coefficient.specialize(&bundle)?;
            self.specializations.push(Specialization::new(q, c, &v));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub q: u64,
    pub c: i64,
    pub conjecture: String,
    pub theorem: String,
    pub difference: String,
    pub zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub mode: Mu3Mode,
    pub conjecture: MotiveExpr,
    pub theorem: MotiveExpr,
    pub difference: MotiveExpr,
    pub difference_nonzero: bool,
    pub numerator_mentions_ec: bool,
    pub rows: Vec<DiscrepancyRow>,
}

impl DiscrepancyReport {
    /// Symbolic difference is nonzero, involves `[E_c]`, and some tested pair has a nonzero gap.
    pub fn confirms_discrepancy(&self) -> bool {
        self.difference_nonzero && self.numerator_mentions_ec && self.rows.iter().any(|r| !r.zero)
    }
}

fn rat_string(v: &BigRational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Compares the conjectured and computed `t^2` coefficients.
pub fn discrepancy_report(pairs: &[(u64, i64)], mode: Mu3Mode) -> Result<DiscrepancyReport, SeriesError> {
    let conj = conjecture_coefficient(2)?;
    let thm = theorem_coefficient(mode);
    let diff = conj.clone() - thm.clone();
    let mut rows = Vec::new();
    for &(q, c) in pairs {
        let bundle = curve_counts_bundle(q, c)?;
        let a = conj.specialize(&bundle)?;
        let b = thm.specialize(&bundle)?;
        let d = &a - &b;
        rows.push(DiscrepancyRow {
            q,
            c,
            conjecture: rat_string(&a),
            theorem: rat_string(&b),
            difference: rat_string(&d),
            zero: d.is_zero(),
        });
    }
    Ok(DiscrepancyReport {
        mode,
        difference_nonzero: !diff.is_zero(),
        numerator_mentions_ec: diff.numerator().mentions(&ClassSymbol::Ec),
        conjecture: conj,
        theorem: thm,
        difference: diff,
        rows,
    })
}

/// Specializes `x` at a bundle, reporting the rational value as a string.
pub fn specialize_string(x: &MotiveExpr, bundle: &CountBundle) -> Result<String, MotiveError> {
    Ok(rat_string(&x.specialize(bundle)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motive::parse_motive;

    #[test]
    fn order_one() {
        let want = (l(-1) * MotiveExpr::n1()).checked_div(&lm1()).unwrap();
        assert_eq!(conjecture_coefficient(1).unwrap(), want);
        assert!(matches!(conjecture_coefficient(3), Err(SeriesError::UnsupportedOrder(3))));
    }

    #[test]
    fn order_two_matches_closed_form() {
        assert_eq!(conjecture_coefficient(2).unwrap(), lemma3_closed_form());
    }

    #[test]
    fn zero_inputs_give_zero() {
        let t = vec![
            SeriesTerm::new(MotiveExpr::zero(), l(-1).checked_div(&lm1()).unwrap(), 1, true),
            SeriesTerm::new(MotiveExpr::zero(), l(1).checked_div(&lm1()).unwrap(), 2, true),
        ];
        assert!(product_coefficient(&t, 2).unwrap().is_zero());
        assert!(recursion_coefficient(&MotiveExpr::zero(), &MotiveExpr::zero()).unwrap().is_zero());
    }

    #[test]
    fn weights_are_the_expected_geometric_sums() {
        let t = conjecture_terms();
        assert_eq!(t[0].weight, parse_motive("L^(-1)/(L-1)").unwrap());
        assert_eq!(t[1].weight, parse_motive("L/(L-1)").unwrap());
        assert_eq!(-m1(), MotiveExpr::s_pow(-3) * MotiveExpr::n1());
        assert_eq!(-m_n(), MotiveExpr::s_pow(1) * MotiveExpr::n2());
    }

    #[test]
    fn recursion_reproduces_theorem() {
        for mode in [Mu3Mode::Merged, Mu3Mode::Strict] {
            let c = computed_coefficient(mode).unwrap();
            assert_eq!(c, theorem_coefficient(mode), "{mode:?}");
            assert!(c.has_integer_l_powers());
        }
        assert_ne!(theorem_coefficient(Mu3Mode::Merged), theorem_coefficient(Mu3Mode::Strict));
    }

    #[test]
    fn theorem_polynomial_part_at_q2() {
        let mut b = CountBundle::new(2);
        for s in ClassSymbol::KNOWN {
            b.set(&s, 0, 0);
        }
        // N_1 = 1 when every class is 0: (2*7 + 1/4) / (3 * 1)
        let v = theorem_coefficient(Mu3Mode::Merged).specialize(&b).unwrap();
        assert_eq!(v, BigRational::new(57.into(), 12.into()));
    }

    #[test]
    fn numeric_recursion_matches_symbolic() {
        let sym = recursion_coefficient(&int(87500), &int(0)).unwrap();
        assert_eq!(sym.specialize(&CountBundle::new(5)).unwrap(), recursion_value(5, 87500, 0));
        let (lhs, rhs) = recursion_cleared(5, 1_750_000, 87_500, 0);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn difference_mentions_ec() {
        let d = conjecture_coefficient(2).unwrap() - theorem_coefficient(Mu3Mode::Merged);
        assert!(!d.is_zero());
        assert!(d.numerator().mentions(&ClassSymbol::Ec));
        // Forcing N_2 = 0 removes [E_c] entirely.
        let forced = d.substitute(&ClassSymbol::Ec, &MotiveExpr::p2()).unwrap();
        assert!(!forced.mentions(&ClassSymbol::Ec));
    }
}
