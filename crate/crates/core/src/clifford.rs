//! Two-dimensional representations of the quaternionic Sklyanin algebra.
//!
//! With `u = X^2`, `v = Y^2`, `w = Z^2` central, the algebra is the Clifford
//! algebra of the symmetric form `Q(u,v,w)` (see [`crate::strata::q_matrix`]):
//! `(sum a_i x_i)^2 = a^T Q a / 2`. A congruence `P^T Q(p) P = diag(D)`
//! yields anticommuting `y_j = sum_i P_ij x_i` with `y_j^2 = D_j / 2`, so
//! `psi(x_i) = sum_j (P^-1)_ji sqrt(D_j / 2) sigma_j`, with a sign on the
//! `sigma_3` term selecting one of the two representations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::poly::{k, v, Poly};
use crate::strata::{det3, det_q, q_matrix};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];
pub type Mat3 = [[C64; 3]; 3];

/// Residual bound for double-precision checks.
pub const TOLERANCE: f64 = 1e-9;

/// `Tr(psi(X) psi(Y) psi(Z))^2 = TRACE_CONSTANT * det Q(p)` for every point.
pub const TRACE_CONSTANT: f64 = -0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("the point (0,0,0) has no simple two-dimensional representation")]
    ZeroPoint,
    #[error("relation residual {0:e} exceeds tolerance")]
    Residual(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            _ => Err(format!("sign must be plus or minus, got '{s}'")),
        }
    }
}

fn cz() -> C64 {
    C64::new(0.0, 0.0)
}

fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Pauli matrices `sigma_1, sigma_2 = [[0, i], [-i, 0]], sigma_3`.
pub fn pauli() -> [Mat2; 3] {
    let i = C64::new(0.0, 1.0);
    [[[cz(), cr(1.0)], [cr(1.0), cz()]], [[cz(), i], [-i, cz()]], [[cr(1.0), cz()], [cz(), cr(-1.0)]]]
}

pub fn m2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut o = [[cz(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

fn m2_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn m2_scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn m2_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    m2_add(a, &m2_scale(b, cr(-1.0)))
}

fn m2_norm(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn m2_trace(a: &Mat2) -> C64 {
    a[0][0] + a[1][1]
}

fn m2_identity(s: C64) -> Mat2 {
    [[s, cz()], [cz(), s]]
}

fn m3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut o = [[cz(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            o[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    o
}

fn m3_transpose(a: &Mat3) -> Mat3 {
    let mut o = [[cz(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            o[i][j] = a[j][i];
        }
    }
    o
}

fn m3_det(a: &Mat3) -> C64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn m3_inverse(a: &Mat3) -> Mat3 {
    let d = m3_det(a);
    let mut o = [[cz(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            o[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / d;
        }
    }
    o
}

/// A symmetric 3x3 complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricForm3(pub Mat3);

impl SymmetricForm3 {
    pub fn det(&self) -> C64 {
        m3_det(&self.0)
    }

    /// Numerical rank with a relative tolerance.
    pub fn rank(&self) -> usize {
        let mut m = self.0;
        let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut rank = 0;
        let mut row = 0;
        for col in 0..3 {
            let piv = (row..3).max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()));
            let Some(piv) = piv else { break };
            if m[piv][col].norm() <= 1e-10 * scale {
                continue;
            }
            m.swap(row, piv);
            for r in row + 1..3 {
                let f = m[r][col] / m[row][col];
                for c in col..3 {
                    let t = m[row][c];
                    m[r][c] -= f * t;
                }
            }
            row += 1;
            rank += 1;
        }
        rank
    }
}

/// `Q` evaluated at `(u, v, w)`.
pub fn clifford_form(c: C64, point: [C64; 3]) -> Result<SymmetricForm3, CliffordError> {
    if point.iter().all(|z| *z == cz()) {
        return Err(CliffordError::ZeroPoint);
    }
    let [u, vv, w] = point;
    let two = cr(2.0);
    Ok(SymmetricForm3([[two * u, c * w, c * vv], [c * w, two * vv, c * u], [c * vv, c * u, two * w]]))
}

/// `det Q(p) = 2c^3 uvw - 2c^2(u^3+v^3+w^3) + 8uvw`.
pub fn det_q_at(c: C64, [u, vv, w]: [C64; 3]) -> C64 {
    cr(2.0) * c.powi(3) * u * vv * w - cr(2.0) * c * c * (u.powi(3) + vv.powi(3) + w.powi(3)) + cr(8.0) * u * vv * w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagCase {
    /// Second pivot `A = 4uv - c^2 w^2`.
    Case1,
    /// `A = 0 = 4uw - c^2 v^2`: pivot on the sum of the last two basis vectors.
    Case2,
    /// The block left after the first pivot vanishes (`Q(p)` has rank one).
    Rank1,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagResult {
    pub case: DiagCase,
    /// `perm[k]` is the original index placed at position `k`.
    pub perm: [usize; 3],
    #[serde(skip)]
    pub delta: [C64; 3],
    /// Base change in the original variable order: `P^T Q(p) P = diag(delta)`.
    #[serde(skip)]
    pub p: Mat3,
}

impl DiagResult {
    /// `max |P^T Q P - diag(delta)|`.
    pub fn residual(&self, q: &SymmetricForm3) -> f64 {
        let r = m3_mul(&m3_mul(&m3_transpose(&self.p), &q.0), &self.p);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { self.delta[i] } else { cz() };
                worst = worst.max((r[i][j] - want).norm());
            }
        }
        worst
    }
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// `P^T` rows of the first case at `(u, v, w)`:
/// `(1,0,0)`, `(-cw, 2u, 0)`, `(2cuB, 2cuC, 2uA)`; `Delta = (2u, 2uA, 4u^2 A D)`.
fn case1(c: C64, [u, vv, w]: [C64; 3]) -> (Mat3, [C64; 3]) {
    let two = cr(2.0);
    let a = cr(4.0) * u * vv - c * c * w * w;
    let b = c * u * w - two * vv * vv;
    let cc = c * vv * w - two * u * u;
    let d = det_q_at(c, [u, vv, w]);
    let pt = [[cr(1.0), cz(), cz()], [-c * w, two * u, cz()], [two * c * u * b, two * c * u * cc, two * u * a]];
    (m3_transpose(&pt), [two * u, two * u * a, cr(4.0) * u * u * a * d])
}

/// `P^T` rows of the second case: `(1,0,0)`, `(-c(v+w), 2u, 2u)`,
/// `(4cu^2 Q0, 4u^2 Q1, -4u^2 Q2)`; `Delta = (2u, -2u PIVOT2, -16u^4 PIVOT2 D)`.
fn case2(c: C64, [u, vv, w]: [C64; 3]) -> (Mat3, [C64; 3]) {
    let two = cr(2.0);
    let four = cr(4.0);
    let (q0, q1, q2) = case2_q_values(c, [u, vv, w]);
    let pivot2 = q1 + q2;
    let d = det_q_at(c, [u, vv, w]);
    let pt = [
        [cr(1.0), cz(), cz()],
        [-c * (vv + w), two * u, two * u],
        [four * c * u * u * q0, four * u * u * q1, -four * u * u * q2],
    ];
    (m3_transpose(&pt), [two * u, -two * u * pivot2, cr(-16.0) * u.powi(4) * pivot2 * d])
}

fn case2_q_values(c: C64, [u, vv, w]: [C64; 3]) -> (C64, C64, C64) {
    let two = cr(2.0);
    let q0 = (w - vv) * (two * w + two * vv + c * u);
    let q1 = c * c * vv * w - cr(4.0) * u * w + c * c * vv * vv - two * c * u * u;
    let q2 = c * c * w * w + c * c * vv * w - cr(4.0) * u * vv - two * c * u * u;
    (q0, q1, q2)
}

/// First pivot only; valid when the remaining block vanishes.
fn rank1(c: C64, [u, vv, w]: [C64; 3]) -> (Mat3, [C64; 3]) {
    let two = cr(2.0);
    let pt = [[cr(1.0), cz(), cz()], [-c * w, two * u, cz()], [-c * vv, cz(), two * u]];
    (m3_transpose(&pt), [two * u, cz(), cz()])
}

/// Congruence diagonalization with the best-conditioned variable permutation.
pub fn diagonalize(c: C64, point: [C64; 3]) -> Result<DiagResult, CliffordError> {
    let q = clifford_form(c, point)?;
    let scale = point.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cs = c.norm().max(1.0);
    let rel = |x: C64, deg: i32| x.norm() / (cs * cs * scale.powi(deg));
    let permuted = |perm: [usize; 3]| [point[perm[0]], point[perm[1]], point[perm[2]]];

    let mut best: Option<(f64, DiagCase, [usize; 3])> = None;
    for perm in PERMS {
        let [u, vv, w] = permuted(perm);
        let ru = u.norm() / scale;
        if ru < 1e-8 {
            continue;
        }
        let a = rel(cr(4.0) * u * vv - c * c * w * w, 2);
        let (_, q1, q2) = case2_q_values(c, [u, vv, w]);
        let l = rel(q1 + q2, 2) / cs;
        let cand = if a > 1e-8 {
            (1.0 + ru * a, DiagCase::Case1)
        } else if l > 1e-8 {
            (ru * l, DiagCase::Case2)
        } else {
            (ru * 1e-12, DiagCase::Rank1)
        };
        if best.is_none_or(|(s, _, _)| cand.0 > s) {
            best = Some((cand.0, cand.1, perm));
        }
    }
    let (_, case, perm) = best.expect("some coordinate is nonzero");
    let result = diagonalize_with(c, point, perm, case)?;
    debug_assert!(result.residual(&q) <= 1e-6 * (1.0 + scale).powi(8) * cs.powi(8));
    Ok(result)
}

/// The base change of a given case after placing `point[perm[k]]` at position `k`.
/// The caller is responsible for the case being valid at the permuted point.
pub fn diagonalize_with(c: C64, point: [C64; 3], perm: [usize; 3], case: DiagCase) -> Result<DiagResult, CliffordError> {
    clifford_form(c, point)?;
    let pp = [point[perm[0]], point[perm[1]], point[perm[2]]];
    let (p_local, delta) = match case {
        DiagCase::Case1 => case1(c, pp),
        DiagCase::Case2 => case2(c, pp),
        DiagCase::Rank1 => rank1(c, pp),
    };
    // Row perm[k] of P is row k of the local base change.
    let mut p = [[cz(); 3]; 3];
    for k in 0..3 {
        p[perm[k]] = p_local[k];
    }
    Ok(DiagResult { case, perm, delta, p })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// Max Frobenius residual of `XY+YX-cZ^2`, `YZ+ZY-cX^2`, `ZX+XZ-cY^2`.
    pub relations: f64,
    /// Max Frobenius residual of `X^2-u`, `Y^2-v`, `Z^2-w`.
    pub centrality: f64,
    /// `|Tr(XYZ)^2 - TRACE_CONSTANT * det Q(p)|`.
    pub trace: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.relations.max(self.centrality).max(self.trace)
    }
}

/// Images of `X, Y, Z` under one of the two representations over a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Rep2 {
    pub c: C64,
    pub point: [C64; 3],
    pub sign: Sign,
    pub matrices: [Mat2; 3],
    pub case: DiagCase,
    pub perm: [usize; 3],
}

impl Rep2 {
    pub fn to_json(&self) -> serde_json::Value {
        let z = |x: &C64| serde_json::json!([x.re, x.im]);
        let res = verify_rep(self);
        serde_json::json!({
            "c": z(&self.c),
            "point": self.point.iter().map(z).collect::<Vec<_>>(),
            "sign": self.sign,
            "case": self.case,
            "permutation": self.perm,
            "matrices": self.matrices.iter().map(|m| m.iter().flatten().map(z).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "residuals": res,
        })
    }
}

/// Assembles `psi_sign` from a diagonalization.
fn assemble(c: C64, point: [C64; 3], sign: Sign, d: &DiagResult, scale: f64) -> Rep2 {
    let pinv = m3_inverse(&d.p);
    let sig = pauli();
    let amp: Vec<C64> = d.delta.iter().map(|dj| (dj * cr(scale)).sqrt()).collect();
    let mut matrices = [[[cz(); 2]; 2]; 3];
    for (i, m) in matrices.iter_mut().enumerate() {
        for j in 0..3 {
            let mut coef = pinv[j][i] * amp[j];
            if j == 2 {
                coef *= sign.factor();
            }
            *m = m2_add(m, &m2_scale(&sig[j], coef));
        }
    }
    Rep2 { c, point, sign, matrices, case: d.case, perm: d.perm }
}

/// The representation `psi_sign` over `point`, checked against all relations.
pub fn build_rep(c: C64, point: [C64; 3], sign: Sign) -> Result<Rep2, CliffordError> {
    build_rep_from(c, point, sign, &diagonalize(c, point)?)
}

/// `psi_sign` from a given diagonalization, checked against all relations.
pub fn build_rep_from(c: C64, point: [C64; 3], sign: Sign, d: &DiagResult) -> Result<Rep2, CliffordError> {
    let rep = assemble(c, point, sign, d, 0.5);
    let scale = point.iter().map(|z| z.norm()).fold(1.0, f64::max) * c.norm().max(1.0);
    let r = verify_rep(&rep);
    if r.relations.max(r.centrality) > TOLERANCE * scale * scale {
        return Err(CliffordError::Residual(r.max()));
    }
    Ok(rep)
}

/// Scalar `k` making `(k psi(X))^2 = u` when `psi` uses `sqrt(D_j)` without
/// the factor `1/2`; the answer is `1/sqrt(2)`.
pub fn normalization_oracle(c: C64, point: [C64; 3]) -> Result<C64, CliffordError> {
    let d = diagonalize(c, point)?;
    let raw = assemble(c, point, Sign::Plus, &d, 1.0);
    let x2 = m2_mul(&raw.matrices[0], &raw.matrices[0]);
    Ok((point[0] / x2[0][0]).sqrt())
}

pub fn verify_rep(rep: &Rep2) -> Residuals {
    let [x, y, z] = &rep.matrices;
    let c = rep.c;
    let anti = |a: &Mat2, b: &Mat2| m2_add(&m2_mul(a, b), &m2_mul(b, a));
    let sq = |a: &Mat2| m2_mul(a, a);
    let relations = [
        m2_sub(&anti(x, y), &m2_scale(&sq(z), c)),
        m2_sub(&anti(y, z), &m2_scale(&sq(x), c)),
        m2_sub(&anti(z, x), &m2_scale(&sq(y), c)),
    ]
    .iter()
    .map(m2_norm)
    .fold(0.0, f64::max);
    let centrality = [x, y, z]
        .iter()
        .zip(rep.point)
        .map(|(m, p)| m2_norm(&m2_sub(&sq(m), &m2_identity(p))))
        .fold(0.0, f64::max);
    let t = m2_trace(&m2_mul(&m2_mul(x, y), z));
    let trace = (t * t - cr(TRACE_CONSTANT) * det_q_at(c, rep.point)).norm();
    Residuals { relations, centrality, trace }
}

/// Character on words of length at most three.
pub fn character(rep: &Rep2) -> Vec<C64> {
    let [x, y, z] = &rep.matrices;
    let mut out = vec![m2_trace(x), m2_trace(y), m2_trace(z)];
    for (a, b) in [(x, y), (y, z), (z, x), (x, x), (y, y), (z, z)] {
        out.push(m2_trace(&m2_mul(a, b)));
    }
    out.push(m2_trace(&m2_mul(&m2_mul(x, y), z)));
    out
}

pub fn are_equivalent(a: &Rep2, b: &Rep2, tol: f64) -> bool {
    character(a).iter().zip(character(b)).all(|(p, q)| (p - q).norm() <= tol * (1.0 + p.norm()))
}

/// `g psi g^-1` for an invertible 2x2 `g`.
pub fn conjugate(rep: &Rep2, g: &Mat2) -> Rep2 {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let ginv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let mut out = rep.clone();
    for m in out.matrices.iter_mut() {
        *m = m2_mul(&m2_mul(g, m), &ginv);
    }
    out
}

/// Roots of `det Q(u, v, w) = 0` as a cubic in `w`.
pub fn det_q_roots_in_w(c: C64, u: C64, vv: C64) -> [C64; 3] {
    // -2c^2 w^3 + (2c^3 + 8) uv w - 2c^2 (u^3 + v^3)
    let a3 = cr(-2.0) * c * c;
    let a1 = (cr(2.0) * c.powi(3) + cr(8.0)) * u * vv;
    let a0 = cr(-2.0) * c * c * (u.powi(3) + vv.powi(3));
    let f = |w: C64| (a3 * w * w + a1) * w + a0;
    let df = |w: C64| cr(3.0) * a3 * w * w + a1;
    // Durand-Kerner on the monic cubic, then Newton polish.
    let mut r = [C64::new(0.4, 0.9), C64::new(0.4, 0.9).powi(2), C64::new(0.4, 0.9).powi(3)];
    let scale = (u.norm() + vv.norm() + 1.0) * 2.0;
    for z in r.iter_mut() {
        *z *= scale;
    }
    for _ in 0..500 {
        let prev = r;
        for i in 0..3 {
            let mut den = a3;
            for j in 0..3 {
                if i != j {
                    den *= r[i] - r[j];
                }
            }
            r[i] -= f(r[i]) / den;
        }
        if r.iter().zip(prev).all(|(a, b)| (a - b).norm() < 1e-15 * scale) {
            break;
        }
    }
    for z in r.iter_mut() {
        for _ in 0..4 {
            let d = df(*z);
            if d.norm() > 0.0 {
                *z -= f(*z) / d;
            }
        }
    }
    r
}

/// Which family of points a batch samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFamily {
    /// Generic points (first case applies).
    Generic,
    /// `4uv - c^2 w^2 = 0 = 4uw - c^2 v^2`, in a random coordinate order.
    Case2Locus,
    /// `det Q(p) = 0`.
    Discriminant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchReport {
    pub family: PointFamily,
    pub points: usize,
    pub max_residual: f64,
    /// Points whose diagonalization landed in each case.
    pub case1: usize,
    pub case2: usize,
    pub rank1: usize,
    /// Pairs with `|det Q| > 1e-6` where `psi_+` and `psi_-` are inequivalent.
    pub distinct_when_det_nonzero: usize,
    pub det_nonzero: usize,
    /// Max `|psi_+ - psi_-|` over points with `det Q = 0`.
    pub max_coincidence_gap: f64,
    pub failures: Vec<String>,
}

fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// The sample for one index; the stream depends only on `(seed, index)`.
pub fn sample_point(family: PointFamily, seed: u64, index: u64) -> (C64, [C64; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let c = cr(rng.gen_range(0.5..3.0));
    match family {
        PointFamily::Generic => (c, [random_c64(&mut rng), random_c64(&mut rng), random_c64(&mut rng)]),
        PointFamily::Case2Locus => {
            let u = random_c64(&mut rng);
            let pt = if rng.gen_bool(0.25) {
                [u, cz(), cz()]
            } else {
                let zeta = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.gen_range(0..3) as f64 / 3.0);
                let c2 = c * c;
                [u, cr(4.0) * u * zeta * zeta / c2, cr(4.0) * u * zeta / c2]
            };
            let perm = PERMS[rng.gen_range(0..6)];
            (c, [pt[perm[0]], pt[perm[1]], pt[perm[2]]])
        }
        PointFamily::Discriminant => {
            let u = random_c64(&mut rng);
            let vv = random_c64(&mut rng);
            let roots = det_q_roots_in_w(c, u, vv);
            (c, [u, vv, roots[rng.gen_range(0..3)]])
        }
    }
}

/// Undoes the shuffle applied by [`sample_point`] on the second-case locus:
/// the ordering with `u != 0` in which `4uv - c^2 w^2` and `4uw - c^2 v^2` are smallest.
fn case2_order(point: [C64; 3], c: C64) -> [usize; 3] {
    let mut best = PERMS[0];
    let mut score = f64::INFINITY;
    for perm in PERMS {
        let [u, vv, w] = [point[perm[0]], point[perm[1]], point[perm[2]]];
        if u.norm() == 0.0 {
            continue;
        }
        let a = (cr(4.0) * u * vv - c * c * w * w).norm();
        let f = (cr(4.0) * u * w - c * c * vv * vv).norm();
        if a + f < score {
            score = a + f;
            best = perm;
        }
    }
    best
}

/// Builds and checks both representations at `n` seeded points of a family.
pub fn batch_verify(family: PointFamily, n: usize, seed: u64) -> BatchReport {
    let rows: Vec<_> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (c, p) = sample_point(family, seed, i);
            let (plus, minus) = if family == PointFamily::Case2Locus {
                match diagonalize_with(c, p, case2_order(p, c), DiagCase::Case2) {
                    Ok(d) => (build_rep_from(c, p, Sign::Plus, &d), build_rep_from(c, p, Sign::Minus, &d)),
                    Err(e) => (Err(e.clone()), Err(e)),
                }
            } else {
                (build_rep(c, p, Sign::Plus), build_rep(c, p, Sign::Minus))
            };
            (i, c, p, plus, minus)
        })
        .collect();
    let mut rep = BatchReport {
        family,
        points: n,
        max_residual: 0.0,
        case1: 0,
        case2: 0,
        rank1: 0,
        distinct_when_det_nonzero: 0,
        det_nonzero: 0,
        max_coincidence_gap: 0.0,
        failures: vec![],
    };
    for (i, c, p, plus, minus) in rows {
        let (plus, minus) = match (plus, minus) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                rep.failures.push(format!("point {i}: {e}"));
                continue;
            }
        };
        match plus.case {
            DiagCase::Case1 => rep.case1 += 1,
            DiagCase::Case2 => rep.case2 += 1,
            DiagCase::Rank1 => rep.rank1 += 1,
        }
        let r = verify_rep(&plus).max().max(verify_rep(&minus).max());
        rep.max_residual = rep.max_residual.max(r);
        if r > TOLERANCE {
            rep.failures.push(format!("point {i}: residual {r:e}"));
        }
        let det = det_q_at(c, p);
        if det.norm() > 1e-6 {
            rep.det_nonzero += 1;
            if !are_equivalent(&plus, &minus, 1e-7) {
                rep.distinct_when_det_nonzero += 1;
            }
        }
        if family == PointFamily::Discriminant {
            let gap = (0..3).map(|k| m2_norm(&m2_sub(&plus.matrices[k], &minus.matrices[k]))).fold(0.0, f64::max);
            rep.max_coincidence_gap = rep.max_coincidence_gap.max(gap);
        }
    }
    rep
}

type PMat3 = [[Poly; 3]; 3];

fn pm_transpose(a: &PMat3) -> PMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].clone()))
}

fn pm_mul(a: &PMat3, b: &PMat3) -> PMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).fold(Poly::zero(), |acc, k| acc + &a[i][k] * &b[k][j])))
}

/// `P^T Q P` for symbolic `P`.
pub fn congruence(p: &PMat3) -> PMat3 {
    pm_mul(&pm_mul(&pm_transpose(p), &q_matrix()), p)
}

fn c() -> Poly {
    v("c")
}

/// Symbolic `A, B, C` of the first case.
pub fn case1_quantities() -> (Poly, Poly, Poly) {
    let (u, vv, w) = (v("u"), v("v"), v("w"));
    let a = k(4) * &u * &vv - c().pow(2) * w.pow(2);
    let b = c() * &u * &w - k(2) * vv.pow(2);
    let cc = c() * &vv * &w - k(2) * u.pow(2);
    (a, b, cc)
}

/// First case: `P` (columns are the new basis) and `Delta`.
pub fn case1_symbolic() -> (PMat3, [Poly; 3]) {
    let (u, w) = (v("u"), v("w"));
    let (a, b, cc) = case1_quantities();
    let pt: PMat3 = [
        [k(1), k(0), k(0)],
        [-(c() * &w), k(2) * &u, k(0)],
        [k(2) * c() * &u * &b, k(2) * c() * &u * &cc, k(2) * &u * &a],
    ];
    let delta = [k(2) * &u, k(2) * &u * &a, k(4) * u.pow(2) * a * det_q()];
    (pm_transpose(&pt), delta)
}

/// `Q_0, Q_1, Q_2` and `PIVOT2 = Q_1 + Q_2` of the second case.
pub fn case2_quantities() -> (Poly, Poly, Poly, Poly) {
    let (u, vv, w) = (v("u"), v("v"), v("w"));
    let q0 = (&w - &vv) * (k(2) * &w + k(2) * &vv + c() * &u);
    let q1 = c().pow(2) * &vv * &w - k(4) * &u * &w + c().pow(2) * vv.pow(2) - k(2) * c() * u.pow(2);
    let q2 = c().pow(2) * w.pow(2) + c().pow(2) * &vv * &w - k(4) * &u * &vv - k(2) * c() * u.pow(2);
    let pivot2 = &q1 + &q2;
    (q0, q1, q2, pivot2)
}

/// Second case from the closed forms.
pub fn case2_symbolic() -> (PMat3, [Poly; 3]) {
    let (u, vv, w) = (v("u"), v("v"), v("w"));
    let (q0, q1, q2, pivot2) = case2_quantities();
    let u2 = u.pow(2);
    let pt: PMat3 = [
        [k(1), k(0), k(0)],
        [-(c() * (&vv + &w)), k(2) * &u, k(2) * &u],
        [k(4) * c() * &u2 * q0, k(4) * &u2 * q1, k(-4) * &u2 * q2],
    ];
    let delta = [k(2) * &u, k(-2) * &u * &pivot2, k(-16) * u.pow(4) * pivot2 * det_q()];
    (pm_transpose(&pt), delta)
}

/// Re-derives the second case by fraction-free elimination: pivot `2u`, then
/// add the third basis vector to the second and pivot on the result.
pub fn case2_elimination() -> (PMat3, [Poly; 3]) {
    let q = q_matrix();
    let u = v("u");
    let e = |i: usize| -> [Poly; 3] { std::array::from_fn(|j| if i == j { k(1) } else { k(0) }) };
    let form = |a: &[Poly; 3], b: &[Poly; 3]| -> Poly {
        let mut acc = Poly::zero();
        for i in 0..3 {
            for j in 0..3 {
                acc = acc + &a[i] * &q[i][j] * &b[j];
            }
        }
        acc
    };
    let comb = |s: &Poly, a: &[Poly; 3], t: &Poly, b: &[Poly; 3]| -> [Poly; 3] {
        std::array::from_fn(|i| s * &a[i] + t * &b[i])
    };
    let e0 = e(0);
    let piv = k(2) * &u;
    let f1 = comb(&piv, &e(1), &-form(&e0, &e(1)), &e0);
    let f2 = comb(&piv, &e(2), &-form(&e0, &e(2)), &e0);
    let g1: [Poly; 3] = std::array::from_fn(|i| &f1[i] + &f2[i]);
    let pivot = form(&g1, &g1);
    let g2 = comb(&pivot, &f2, &-form(&g1, &f2), &g1);
    let cols = [e0.clone(), g1.clone(), g2.clone()];
    let p: PMat3 = std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i].clone()));
    let delta = [piv, pivot, form(&g2, &g2)];
    (p, delta)
}

/// True if `P^T Q P` equals `diag(delta)` as polynomials.
pub fn is_exact_diagonalization(p: &PMat3, delta: &[Poly; 3]) -> bool {
    let r = congruence(p);
    (0..3).all(|i| (0..3).all(|j| if i == j { r[i][j] == delta[i] } else { r[i][j].is_zero() }))
}

pub fn symbolic_det(p: &PMat3) -> Poly {
    det3(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(u: f64, vv: f64, w: f64) -> [C64; 3] {
        [cr(u), cr(vv), cr(w)]
    }

    #[test]
    fn form_examples() {
        let q = clifford_form(cr(2.0), pt(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(q.0[0][0], cr(2.0));
        assert_eq!(q.0[1][2], cr(2.0));
        assert_eq!(q.0[1][1], cz());
        assert!((q.det() - cr(-8.0)).norm() < 1e-12);
        assert_eq!(clifford_form(cr(1.0), pt(0.0, 0.0, 0.0)), Err(CliffordError::ZeroPoint));
        let q = clifford_form(cr(1.3), pt(0.2, -0.7, 0.5)).unwrap();
        assert_eq!(q.rank(), 3);
        assert!((q.det() - det_q_at(cr(1.3), pt(0.2, -0.7, 0.5))).norm() < 1e-12);
    }

    #[test]
    fn case1_is_exact() {
        let (p, delta) = case1_symbolic();
        assert!(is_exact_diagonalization(&p, &delta));
    }

    #[test]
    fn case2_closed_form_matches_elimination() {
        let (p, delta) = case2_symbolic();
        assert!(is_exact_diagonalization(&p, &delta));
        let (pe, de) = case2_elimination();
        assert!(is_exact_diagonalization(&pe, &de));
        assert_eq!(pe, p);
        assert_eq!(de, delta);
        let (_, _, _, pivot2) = case2_quantities();
        assert_eq!(symbolic_det(&p), k(-8) * v("u").pow(3) * pivot2);
    }

    #[test]
    fn psi_x_is_a_multiple_of_sigma1() {
        let p = pt(0.7, 0.3, -0.4);
        let rep = build_rep(cr(1.5), p, Sign::Plus).unwrap();
        assert_eq!(rep.case, DiagCase::Case1);
        let x = rep.matrices[0];
        assert!(x[0][0].norm() < 1e-12 && x[1][1].norm() < 1e-12);
        assert!((x[0][1] - cr(0.7f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn normalization_is_inverse_sqrt2() {
        let k = normalization_oracle(cr(1.7), [C64::new(0.3, 0.2), cr(-0.5), C64::new(0.1, 0.9)]).unwrap();
        assert!((k - cr(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-12);
    }

    #[test]
    fn relations_hold_at_named_points() {
        for (c, p, s) in [(2.0, pt(1.0, 1.0, 1.0), Sign::Plus), (1.0, pt(1.0, 1.0, 1.0), Sign::Minus), (2.0, pt(1.0, 0.0, 0.0), Sign::Plus)] {
            let rep = build_rep(cr(c), p, s).unwrap();
            assert!(verify_rep(&rep).max() < TOLERANCE, "{c} {p:?}");
        }
        // c^3 = 8 at (1,1,1) gives a rank-one form.
        assert_eq!(build_rep(cr(2.0), pt(1.0, 1.0, 1.0), Sign::Plus).unwrap().case, DiagCase::Rank1);
        assert_eq!(clifford_form(cr(2.0), pt(1.0, 1.0, 1.0)).unwrap().rank(), 1);
    }

    #[test]
    fn corrupted_rep_fails() {
        let mut rep = build_rep(cr(1.2), pt(0.4, 0.9, -0.3), Sign::Plus).unwrap();
        let s1 = pauli()[0];
        rep.matrices[1] = m2_sub(&rep.matrices[1], &m2_scale(&s1, cr(0.5)));
        assert!(verify_rep(&rep).relations > 1e-3);
    }

    #[test]
    fn plus_and_minus() {
        let p = pt(0.4, 0.9, -0.3);
        let a = build_rep(cr(1.2), p, Sign::Plus).unwrap();
        let b = build_rep(cr(1.2), p, Sign::Minus).unwrap();
        assert!(!are_equivalent(&a, &b, 1e-7));
        let g = [[C64::new(1.0, 0.5), cr(2.0)], [cr(-0.3), C64::new(0.2, 1.0)]];
        assert!(are_equivalent(&a, &conjugate(&a, &g), 1e-7));
        let roots = det_q_roots_in_w(cr(1.2), cr(0.4), cr(0.9));
        for w in roots {
            assert!(det_q_at(cr(1.2), [cr(0.4), cr(0.9), w]).norm() < 1e-12);
            let a = build_rep(cr(1.2), [cr(0.4), cr(0.9), w], Sign::Plus).unwrap();
            let b = build_rep(cr(1.2), [cr(0.4), cr(0.9), w], Sign::Minus).unwrap();
            assert!(are_equivalent(&a, &b, 1e-6));
        }
    }

    #[test]
    fn small_batches() {
        for fam in [PointFamily::Generic, PointFamily::Case2Locus, PointFamily::Discriminant] {
            let r = batch_verify(fam, 50, 7);
            assert!(r.failures.is_empty(), "{fam:?}: {:?}", r.failures);
            assert_eq!(r, batch_verify(fam, 50, 7));
        }
        assert_eq!(batch_verify(PointFamily::Case2Locus, 50, 7).case2, 50);
        // Left to choose, another coordinate order may reach the first case; (u,0,0) cannot.
        assert_eq!(diagonalize(cr(1.5), pt(0.8, 0.0, 0.0)).unwrap().case, DiagCase::Case2);
    }
}
