//! Polynomial descriptions of the strata, cells and plane cubics.
//!
//! Matrix entries follow one naming scheme throughout:
//! `X = [[n, p], [q, r]]`, `Y = [[s, t], [u, v]]`, `Z = [[w, x], [y, z]]`.
//! The potential is `W = XYZ + XZY + (c/3)(X^3 + Y^3 + Z^3)` and `c` is an
//! ordinary polynomial variable (bound to a field element when counting).
//!
//! Cell convention (settled by [`derive_cell_equation`]):
//! * cell 1 pins `n = 0`, `q = 1`;
//! * cell 2 pins `q = 0`, `s = 0`, `u = 1`;
//! * cell 3 pins `q = u = 0`, `w = 0`, `y = 1`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldContext, FieldElement};
use crate::poly::{k, q as rq, rational_string, v, Monomial, Poly, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrataError {
    #[error("unknown stratum '{0}'")]
    UnknownStratum(String),
    #[error("parameter c must be nonzero")]
    ZeroC,
    #[error("characteristic {0} is not supported (need p > 3)")]
    BadCharacteristic(u32),
    #[error("rho must satisfy rho^3 = 1")]
    NotCubeRootOfUnity,
    #[error("degenerate change of variables: {0}")]
    Degenerate(&'static str),
    #[error("no square root of {0} in {1}")]
    MissingRoot(&'static str, String),
}

pub const MATRIX_VARS: [&str; 12] = ["n", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z"];

/// G_m weights on the matrix entries.
pub fn matrix_weight(var: &str) -> i32 {
    match var {
        "n" | "s" | "w" | "r" | "v" | "z" => 1,
        "q" | "u" | "y" => 2,
        _ => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StratumName {
    S1,
    S2,
    S3,
    X,
    MW2,
    MW1,
}

impl StratumName {
    pub const ALL: [StratumName; 6] =
        [StratumName::S1, StratumName::S2, StratumName::S3, StratumName::X, StratumName::MW2, StratumName::MW1];

    pub fn as_str(self) -> &'static str {
        match self {
            StratumName::S1 => "s1",
            StratumName::S2 => "s2",
            StratumName::S3 => "s3",
            StratumName::X => "x",
            StratumName::MW2 => "mw2",
            StratumName::MW1 => "mw1",
        }
    }
}

impl std::str::FromStr for StratumName {
    type Err = StrataError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StratumName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| StrataError::UnknownStratum(s.to_string()))
    }
}

impl fmt::Display for StratumName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An affine variety `level = lambda`, `closed = 0`, `open != 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub name: StratumName,
    /// Counted variables with their G_m weights (documentation only).
    pub variables: Vec<(String, i32)>,
    /// Parameters bound per count (`c`, and `rho` for `X`).
    pub parameters: Vec<String>,
    pub level: Poly,
    pub closed: Vec<Poly>,
    pub open: Vec<Poly>,
    pub lambda: i64,
}

impl Stratum {
    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn with_lambda(&self, lambda: i64) -> Stratum {
        Stratum { lambda, ..self.clone() }
    }

    pub fn weights(&self) -> BTreeMap<String, i32> {
        self.variables.iter().cloned().collect()
    }

    /// Every polynomial only mentions declared variables and parameters.
    pub fn is_well_formed(&self) -> bool {
        let known: Vec<&str> =
            self.variables.iter().map(|(n, _)| n.as_str()).chain(self.parameters.iter().map(String::as_str)).collect();
        std::iter::once(&self.level)
            .chain(&self.closed)
            .chain(&self.open)
            .all(|p| p.vars().iter().all(|v| known.contains(&v.as_str())))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names: Vec<String> =
            self.variables.iter().map(|(n, _)| n.clone()).chain(self.parameters.iter().cloned()).collect();
        let export = |p: &Poly| -> serde_json::Value {
            let terms: Vec<serde_json::Value> = p
                .terms()
                .map(|(m, c)| {
                    let exps: Vec<u32> = names.iter().map(|n| m.exponent(n)).collect();
                    serde_json::json!({ "exponents": exps, "coeff": rational_string(c) })
                })
                .collect();
            serde_json::json!({ "terms": terms })
        };
        serde_json::json!({
            "name": self.name,
            "lambda": self.lambda,
            "variables": self.variables.iter().map(|(n, w)| serde_json::json!({"name": n, "weight": w})).collect::<Vec<_>>(),
            "parameters": self.parameters,
            "exponent_order": names,
            "level": export(&self.level),
            "closed": self.closed.iter().map(export).collect::<Vec<_>>(),
            "open": self.open.iter().map(export).collect::<Vec<_>>(),
        })
    }
}

fn c() -> Poly {
    v("c")
}

/// `C = c/3 (n^3+r^3+s^3+v^3+w^3+z^3) + 2(rvz + nsw)`.
pub fn big_c() -> Poly {
    let cubes = ["n", "r", "s", "v", "w", "z"].iter().fold(Poly::zero(), |acc, x| acc + v(x).pow(3));
    rq(1, 3) * c() * cubes + k(2) * (v("r") * v("v") * v("z") + v("n") * v("s") * v("w"))
}

/// `Q_q = tz + sx + vx + tw + cp(r + n)`.
pub fn q_q() -> Poly {
    v("t") * v("z") + v("s") * v("x") + v("v") * v("x") + v("t") * v("w") + c() * v("p") * (v("r") + v("n"))
}

/// `Q_u = rx + pw + pz + nx + ct(v + s)`.
pub fn q_u() -> Poly {
    v("r") * v("x") + v("p") * v("w") + v("p") * v("z") + v("n") * v("x") + c() * v("t") * (v("v") + v("s"))
}

/// `Q_y = pv + nt + rt + ps + cx(z + w)`.
pub fn q_y() -> Poly {
    v("p") * v("v") + v("n") * v("t") + v("r") * v("t") + v("p") * v("s") + c() * v("x") * (v("z") + v("w"))
}

/// `C + Q_q q + Q_u u + Q_y y`, the trace of the potential on all of `M_2^3`.
pub fn general_form() -> Poly {
    big_c() + q_q() * v("q") + q_u() * v("u") + q_y() * v("y")
}

type Mat2 = [[Poly; 2]; 2];

fn mat(a: &str, b: &str, cc: &str, d: &str) -> Mat2 {
    [[v(a), v(b)], [v(cc), v(d)]]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn trace(a: &Mat2) -> Poly {
    &a[0][0] + &a[1][1]
}

/// `Tr(XYZ + XZY + (c/3)(X^3+Y^3+Z^3))` on symbolic 2x2 matrices.
pub fn trace_potential(x: &Mat2, y: &Mat2, z: &Mat2) -> Poly {
    let xyz = mat_mul(&mat_mul(x, y), z);
    let xzy = mat_mul(&mat_mul(x, z), y);
    let cube = |m: &Mat2| trace(&mat_mul(&mat_mul(m, m), m));
    trace(&xyz) + trace(&xzy) + rq(1, 3) * c() * (cube(x) + cube(y) + cube(z))
}

/// A cell representative: the three matrices with the pinned entries fixed.
#[derive(Clone, Debug)]
pub struct CellRep {
    pub cell: u8,
    pub matrices: [Mat2; 3],
    /// Pinned entries of the generic matrices.
    pub pinned: Vec<(&'static str, i64)>,
}

impl CellRep {
    pub fn new(cell: u8) -> Option<CellRep> {
        let pinned: Vec<(&'static str, i64)> = match cell {
            1 => vec![("n", 0), ("q", 1)],
            2 => vec![("q", 0), ("s", 0), ("u", 1)],
            3 => vec![("q", 0), ("u", 0), ("w", 0), ("y", 1)],
            _ => return None,
        };
        let pin = |m: Mat2| -> Mat2 {
            m.map(|row| row.map(|e| pinned.iter().fold(e, |acc, (name, val)| acc.subs(name, &k(*val)))))
        };
        let matrices = [pin(mat("n", "p", "q", "r")), pin(mat("s", "t", "u", "v")), pin(mat("w", "x", "y", "z"))];
        Some(CellRep { cell, matrices, pinned })
    }

    /// Free variables of the cell, in the fixed matrix order.
    pub fn free_variables(&self) -> Vec<&'static str> {
        MATRIX_VARS.into_iter().filter(|n| !self.pinned.iter().any(|(p, _)| p == n)).collect()
    }

    /// Three zero matrices (the trace is 0).
    pub fn zero() -> CellRep {
        let z = || [[Poly::zero(), Poly::zero()], [Poly::zero(), Poly::zero()]];
        CellRep { cell: 0, matrices: [z(), z(), z()], pinned: vec![] }
    }
}

/// Trace of the potential on the cell's matrices.
pub fn derive_cell_equation(cell: &CellRep) -> Poly {
    let [x, y, z] = &cell.matrices;
    trace_potential(x, y, z)
}

fn matrix_vars_except(drop: &[&str]) -> Vec<(String, i32)> {
    MATRIX_VARS.iter().filter(|n| !drop.contains(n)).map(|n| (n.to_string(), matrix_weight(n))).collect()
}

fn unit_weights(names: &[&str]) -> Vec<(String, i32)> {
    names.iter().map(|n| (n.to_string(), 1)).collect()
}

/// `S_1 = (C + Q_u u + Q_y y + Q_q)|_{n=0}` as transcribed.
pub fn s1_level() -> Poly {
    (big_c() + q_u() * v("u") + q_y() * v("y") + q_q()).subs("n", &k(0))
}

/// `S_2 = (C + Q_y y + Q_u)|_{s=0}`.
pub fn s2_level() -> Poly {
    (big_c() + q_y() * v("y") + q_u()).subs("s", &k(0))
}

/// `c/3(n^3+r^3+s^3+v^3+z^3) + 2rvz + (v+s)p + (n+r)t + czx`.
pub fn s3_level() -> Poly {
    let cubes = ["n", "r", "s", "v", "z"].iter().fold(Poly::zero(), |acc, x| acc + v(x).pow(3));
    rq(1, 3) * c() * cubes
        + k(2) * v("r") * v("v") * v("z")
        + (v("v") + v("s")) * v("p")
        + (v("n") + v("r")) * v("t")
        + c() * v("z") * v("x")
}

/// `X_DT = 2xyz + (c/3)(x^3 + y^3 + z^3)`.
pub fn x_dt() -> Poly {
    k(2) * v("x") * v("y") * v("z") + rq(1, 3) * c() * (v("x").pow(3) + v("y").pow(3) + v("z").pow(3))
}

/// Level polynomial of the `X` stratum, normalized to `= lambda`:
/// `x (3 rho c z^2 - 3 rho^2 c x z + 6 y z + (c^4 + 2c) x^2 - 3 rho c^3 x y + 3 rho^2 c^2 y^2) / 3`.
pub fn x_level() -> Poly {
    let rho = v("rho");
    let (x, y, z) = (v("x"), v("y"), v("z"));
    let inner = k(3) * &rho * c() * z.pow(2) - k(3) * rho.pow(2) * c() * &x * &z
        + k(6) * &y * &z
        + (c().pow(4) + k(2) * c()) * x.pow(2)
        - k(3) * &rho * c().pow(3) * &x * &y
        + k(3) * rho.pow(2) * c().pow(2) * y.pow(2);
    rq(1, 3) * x * inner
}

/// The catalog entry for `name` at level `lambda`.
pub fn stratum(name: StratumName, lambda: i64) -> Stratum {
    let params_c = vec!["c".to_string()];
    let (variables, parameters, level, open) = match name {
        StratumName::S1 => (matrix_vars_except(&["n", "q"]), params_c, s1_level(), vec![]),
        StratumName::S2 => (matrix_vars_except(&["q", "s", "u"]), params_c, s2_level(), vec![]),
        StratumName::S3 => (matrix_vars_except(&["q", "u", "w", "y"]), params_c, s3_level(), vec![]),
        StratumName::MW2 => (matrix_vars_except(&[]), params_c, general_form(), vec![]),
        StratumName::MW1 => (unit_weights(&["x", "y", "z"]), params_c, x_dt(), vec![]),
        StratumName::X => {
            (unit_weights(&["x", "y", "z"]), vec!["c".to_string(), "rho".to_string()], x_level(), vec![v("x")])
        }
    };
    Stratum { name, variables, parameters, level, closed: vec![], open, lambda }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CubicFlavor {
    EDt,
    EPt,
    Ec,
}

/// A ternary cubic form; variables are `x,y,z` (or `u,v,w` for `E_c`).
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneCubic {
    pub flavor: CubicFlavor,
    pub vars: [&'static str; 3],
    pub poly: Poly,
}

impl PlaneCubic {
    pub fn new(flavor: CubicFlavor) -> PlaneCubic {
        match flavor {
            CubicFlavor::EDt => PlaneCubic { flavor, vars: ["x", "y", "z"], poly: x_dt() },
            CubicFlavor::EPt => {
                let (x, y, z) = (v("x"), v("y"), v("z"));
                let poly = (k(2) + c().pow(3)) * &x * &y * &z - c() * (x.pow(3) + y.pow(3) + z.pow(3));
                PlaneCubic { flavor, vars: ["x", "y", "z"], poly }
            }
            CubicFlavor::Ec => PlaneCubic { flavor, vars: ["u", "v", "w"], poly: det_q() },
        }
    }

    pub fn is_homogeneous_cubic(&self) -> bool {
        self.poly.terms().all(|(m, _)| self.vars.iter().map(|x| m.exponent(x)).sum::<u32>() == 3)
    }
}

/// The symmetric form `Q(u,v,w)` with entries in `Z[c,u,v,w]`.
pub fn q_matrix() -> [[Poly; 3]; 3] {
    let (u, vv, w) = (v("u"), v("v"), v("w"));
    [
        [k(2) * &u, c() * &w, c() * &vv],
        [c() * &w, k(2) * &vv, c() * &u],
        [c() * &vv, c() * &u, k(2) * &w],
    ]
}

pub fn det3(m: &[[Poly; 3]; 3]) -> Poly {
    let minor = |a: usize, b: usize, cc: usize, d: usize| &m[1][a] * &m[2][b] - &m[1][cc] * &m[2][d];
    &m[0][0] * &minor(1, 2, 2, 1) - &m[0][1] * &minor(0, 2, 2, 0) + &m[0][2] * &minor(0, 1, 1, 0)
}

/// `det Q` as a cubic in `u, v, w`.
pub fn det_q() -> Poly {
    det3(&q_matrix())
}

/// Symbolic form of the `X` change of variables. Variables `K`, `M`, `i`,
/// `ci` stand for `sqrt((c^4+8c)/12)`, `sqrt((c^3-1) rho)`, `sqrt(-1)` and `1/c`.
pub fn x_change_map() -> [Poly; 3] {
    let (x, y, z) = (v("x"), v("y"), v("z"));
    let (kk, m, i, ci, rho) = (v("K"), v("M"), v("i"), v("ci"), v("rho"));
    let big_x = &kk * &x + &i * &m * &ci * &z;
    let big_y = rq(-1, 2) * c().pow(2) * &x + &rho * c() * &y + rho.pow(2) * &ci * &z;
    let big_z = &kk * &x - &i * &m * &ci * &z;
    [big_x, big_y, big_z]
}

/// Applies the defining relations of `K, M, i, ci, rho`.
pub fn reduce_x_constants(p: &Poly) -> Poly {
    let k2 = rq(1, 12) * (c().pow(4) + k(8) * c());
    let m2 = (c().pow(3) - k(1)) * v("rho");
    let mut out = p.reduce_power("K", 2, &k2).reduce_power("M", 2, &m2).reduce_power("i", 2, &k(-1));
    loop {
        let next = out.reduce_inverse_pair("c", "ci").reduce_power("rho", 3, &k(1));
        if next == out {
            return out;
        }
        out = next;
    }
}

/// `(X+Z)(Y^2+XZ)` pulled back along [`x_change_map`], reduced.
pub fn x_transformed_equation() -> Poly {
    let [bx, by, bz] = x_change_map();
    reduce_x_constants(&((&bx + &bz) * (&by * &by + &bx * &bz)))
}

/// The transformed equation divided by the `X` level polynomial, when that
/// quotient is a monomial times a constant.
pub fn x_change_unit() -> Option<(Monomial, Rational)> {
    let t = x_transformed_equation();
    let l = x_level();
    let (tm, tc) = t.terms().next()?;
    let (lm, lc) = l.terms().find(|(m, _)| tm.div(m).is_some())?;
    let unit_m = tm.div(lm)?;
    let unit_c = tc / lc;
    let scaled = &Poly::monomial(unit_m.clone(), unit_c.clone()) * &l;
    (reduce_x_constants(&scaled) == t).then_some((unit_m, unit_c))
}

/// Numeric constants of the change of variables over a finite field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XChange {
    pub c: FieldElement,
    pub rho: FieldElement,
    /// `sqrt((c^4 + 8c)/12)`.
    pub k: FieldElement,
    /// `sqrt((c^3 - 1) rho)`.
    pub m: FieldElement,
    /// `sqrt(-1)`.
    pub i: FieldElement,
    /// Rows give `X, Y, Z` in terms of `x, y, z`.
    pub matrix: [[FieldElement; 3]; 3],
}

impl XChange {
    pub fn determinant(&self, f: &FieldContext) -> FieldElement {
        let m = &self.matrix;
        let minor = |a: usize, b: usize, cc: usize, d: usize| f.sub(f.mul(m[1][a], m[2][b]), f.mul(m[1][cc], m[2][d]));
        let t0 = f.mul(m[0][0], minor(1, 2, 2, 1));
        let t1 = f.mul(m[0][1], minor(0, 2, 2, 0));
        let t2 = f.mul(m[0][2], minor(0, 1, 1, 0));
        f.add(f.sub(t0, t1), t2)
    }

    /// The unit `2K` relating the two forms of the level equation.
    pub fn unit(&self, f: &FieldContext) -> FieldElement {
        f.add(self.k, self.k)
    }
}

/// Builds the change of variables for `X` over `f`, failing when a constant
/// degenerates or a needed square root is missing.
pub fn change_of_variables_x(f: &FieldContext, c: FieldElement, rho: FieldElement) -> Result<XChange, StrataError> {
    if f.characteristic() <= 3 {
        return Err(StrataError::BadCharacteristic(f.characteristic()));
    }
    if c.is_zero() {
        return Err(StrataError::ZeroC);
    }
    if f.pow(rho, 3) != f.one() {
        return Err(StrataError::NotCubeRootOfUnity);
    }
    let c3 = f.pow(c, 3);
    if c3 == f.one() {
        return Err(StrataError::Degenerate("c^3 = 1"));
    }
    let k2_num = f.add(f.mul(c3, c), f.mul(f.from_int(8), c));
    if k2_num.is_zero() {
        return Err(StrataError::Degenerate("c^4 + 8c = 0"));
    }
    let k2 = f.div(k2_num, f.from_int(12)).expect("12 is a unit for p > 3");
    let m2 = f.mul(f.sub(c3, f.one()), rho);
    let missing = |what: &'static str| StrataError::MissingRoot(what, f.to_string());
    let kk = f.sqrt(k2).ok_or_else(|| missing("(c^4+8c)/12"))?;
    let m = f.sqrt(m2).ok_or_else(|| missing("(c^3-1)rho"))?;
    let i = f.sqrt(f.neg(f.one())).ok_or_else(|| missing("-1"))?;
    let ci = f.inv(c).expect("c is nonzero");
    let im_c = f.mul(f.mul(i, m), ci);
    let half = f.inv(f.from_int(2)).expect("2 is a unit for p > 3");
    let matrix = [
        [kk, f.zero(), im_c],
        [f.neg(f.mul(half, f.mul(c, c))), f.mul(rho, c), f.mul(f.mul(rho, rho), ci)],
        [kk, f.zero(), f.neg(im_c)],
    ];
    Ok(XChange { c, rho, k: kk, m, i, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    #[test]
    fn trace_is_affine_in_lower_left_block() {
        let gen = [[mat("n", "p", "q", "r"), mat("s", "t", "u", "v"), mat("w", "x", "y", "z")]];
        let [[x, y, z]] = gen;
        assert_eq!(trace_potential(&x, &y, &z), general_form());
    }

    #[test]
    fn cells_reproduce_the_catalog() {
        let want = [s1_level(), s2_level(), s3_level()];
        for (i, w) in want.iter().enumerate() {
            let cell = CellRep::new(i as u8 + 1).unwrap();
            assert_eq!(&derive_cell_equation(&cell), w, "cell {}", i + 1);
        }
        assert!(derive_cell_equation(&CellRep::zero()).is_zero());
        assert_eq!(CellRep::new(1).unwrap().free_variables().len(), 10);
        assert_eq!(CellRep::new(3).unwrap().free_variables().len(), 8);
        assert!(CellRep::new(4).is_none());
    }

    #[test]
    fn weights_make_the_unpinned_trace_homogeneous() {
        let s = stratum(StratumName::MW2, 0);
        assert_eq!(s.level.weighted_degrees(&s.weights()), [3].into_iter().collect());
    }

    #[test]
    fn catalog_is_well_formed() {
        for name in StratumName::ALL {
            let s = stratum(name, 1);
            assert!(s.is_well_formed(), "{name}");
            assert_eq!(s.lambda, 1);
        }
        assert_eq!(stratum(StratumName::S1, 0).variables.len(), 10);
        assert_eq!(stratum(StratumName::S3, 0).variables.len(), 8);
        assert_eq!(stratum(StratumName::X, 0).open, vec![v("x")]);
        assert_eq!(stratum(StratumName::MW1, 0).level, x_dt());
        assert_eq!("S3".parse::<StratumName>().unwrap(), StratumName::S3);
        assert!("s4".parse::<StratumName>().is_err());
    }

    #[test]
    fn cubics_are_homogeneous() {
        for f in [CubicFlavor::EDt, CubicFlavor::EPt, CubicFlavor::Ec] {
            assert!(PlaneCubic::new(f).is_homogeneous_cubic());
        }
    }

    #[test]
    fn det_q_expansion() {
        let d = det_q();
        // Cofactor expansion by hand: 8uvw + 2c^3 uvw - 2c^2 (u^3 + v^3 + w^3).
        let (u, vv, w) = (v("u"), v("v"), v("w"));
        let want = k(8) * &u * &vv * &w + k(2) * c().pow(3) * &u * &vv * &w
            - k(2) * c().pow(2) * (u.pow(3) + vv.pow(3) + w.pow(3));
        assert_eq!(d, want);
        assert_eq!(d.coeff_of("u", 1).coeff_of("v", 1).coeff_of("w", 1), k(8) + k(2) * c().pow(3));
        let at = d.subs_many(&[("u", k(1)), ("v", k(0)), ("w", k(0))]);
        assert_eq!(at, k(-2) * c().pow(2));
        assert_eq!(d.subs("c", &k(0)), k(8) * u * vv * w);
    }

    #[test]
    fn x_change_of_variables_unit_is_2k() {
        let (m, coeff) = x_change_unit().expect("transformed equation is a unit multiple");
        assert_eq!(m, Monomial::var("K"));
        assert_eq!(coeff, crate::poly::rat(2, 1));
        // X + Z = 2K x, so the open conditions agree.
        let [bx, _, bz] = x_change_map();
        assert_eq!(&bx + &bz, k(2) * v("K") * v("x"));
    }

    #[test]
    fn x_change_over_fields() {
        let f = make_field(7, 2).unwrap();
        let one = f.one();
        assert_eq!(change_of_variables_x(&f, one, one), Err(StrataError::Degenerate("c^3 = 1")));
        assert_eq!(change_of_variables_x(&f, f.zero(), one), Err(StrataError::ZeroC));
        assert_eq!(change_of_variables_x(&f, f.from_int(3), f.from_int(3)), Err(StrataError::NotCubeRootOfUnity));
        let mut ok = 0;
        for cv in f.elements() {
            for rho in f.cube_roots(f.one()) {
                if let Ok(ch) = change_of_variables_x(&f, cv, rho) {
                    ok += 1;
                    assert!(!ch.determinant(&f).is_zero());
                    let expect = f.neg(f.mul(f.from_int(2), f.mul(f.mul(ch.i, rho), f.mul(ch.k, ch.m))));
                    assert_eq!(ch.determinant(&f), expect);
                }
            }
        }
        assert!(ok > 0);
        let g = make_field(3, 2).unwrap();
        assert_eq!(change_of_variables_x(&g, g.one(), g.one()), Err(StrataError::BadCharacteristic(3)));
        // Over GF(7), c^3 = -1 gives c^4 + 8c = 0.
        let h = make_field(7, 1).unwrap();
        assert_eq!(change_of_variables_x(&h, h.from_int(3), h.one()), Err(StrataError::Degenerate("c^4 + 8c = 0")));
        // Over GF(11), -1 has no square root, so no c is admissible.
        let h = make_field(11, 1).unwrap();
        for cv in h.elements() {
            match change_of_variables_x(&h, cv, h.one()) {
                Err(StrataError::MissingRoot(..) | StrataError::Degenerate(_) | StrataError::ZeroC) => {}
                other => panic!("c = {cv:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn json_export_lists_exponent_vectors() {
        let j = stratum(StratumName::S3, 0).to_json();
        assert_eq!(j["name"], "s3");
        assert_eq!(j["exponent_order"].as_array().unwrap().len(), 9);
        assert!(j["level"]["terms"].as_array().unwrap().iter().any(|t| t["coeff"] == "1/3"));
    }
}
