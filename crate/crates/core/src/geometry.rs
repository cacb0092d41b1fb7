//! Reflections of constraints under degeneracy transpositions, the regions
//! they cut out of the Pauli hypercube, and convex-hull certificates.

use std::fmt;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinat::{binary_vertices, hypercube_vertices, Vertex};
use crate::constraints::{int, qubit_polygon, rational_to_string, to_f64, Constraint, Setting};
use crate::error::{domain, PinError, Result};

/// Face points are rejected after this many draws.
pub const MAX_REJECTIONS: usize = 100_000;
/// Minimum gap between adjacent entries that are not meant to coincide.
pub const GENERIC_GAP: f64 = 1e-3;
/// Tolerance on the preconditions of the assumption check.
pub const FACE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "index")]
pub enum Reflection {
    /// Swap of `n_j` and `n_{j+1}` (1-based `j`).
    Swap(usize),
    /// `n_i -> 1 - n_i` on a two-level subsystem (1-based `i`).
    Site(usize),
}

impl Reflection {
    pub fn apply(&self, n: &[BigRational]) -> Vec<BigRational> {
        let mut out = n.to_vec();
        match *self {
            Reflection::Swap(j) => out.swap(j - 1, j),
            Reflection::Site(i) => out[i - 1] = BigRational::one() - &out[i - 1],
        }
        out
    }

    pub fn apply_vertex(&self, v: &Vertex) -> Vertex {
        let mut out = v.clone();
        match *self {
            Reflection::Swap(j) => out.0.swap(j - 1, j),
            Reflection::Site(i) => out.0[i - 1] = 1 - out.0[i - 1],
        }
        out
    }
}

impl fmt::Display for Reflection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reflection::Swap(j) => write!(f, "swap({j},{})", j + 1),
            Reflection::Site(i) => write!(f, "flip({i})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReflectedConstraint {
    pub base: Constraint,
    pub reflection: Reflection,
    /// `D` composed with the reflection, as a constraint in its own right.
    pub constraint: Constraint,
}

/// `D o pi_{j,j+1}`: coefficients `j` and `j+1` swapped.
pub fn reflect(d_: &Constraint, j: usize) -> Result<ReflectedConstraint> {
    if j == 0 || j >= d_.dim() {
        return domain(format!("transposition index {j} outside 1..={}", d_.dim().saturating_sub(1)));
    }
    let mut kappa = d_.kappa.clone();
    kappa.swap(j - 1, j);
    let constraint = Constraint {
        label: format!("{}~{}", d_.label, Reflection::Swap(j)),
        setting: d_.setting,
        kappa0: d_.kappa0.clone(),
        kappa,
    };
    Ok(ReflectedConstraint { base: d_.clone(), reflection: Reflection::Swap(j), constraint })
}

/// Reflection through `n_i = 1/2`.
pub fn reflect_site(d_: &Constraint, i: usize) -> Result<ReflectedConstraint> {
    if i == 0 || i > d_.dim() {
        return domain(format!("site {i} outside 1..={}", d_.dim()));
    }
    let mut kappa = d_.kappa.clone();
    let ki = kappa[i - 1].clone();
    kappa[i - 1] = -ki.clone();
    let constraint = Constraint {
        label: format!("{}~{}", d_.label, Reflection::Site(i)),
        setting: d_.setting,
        kappa0: &d_.kappa0 + ki,
        kappa,
    };
    Ok(ReflectedConstraint { base: d_.clone(), reflection: Reflection::Site(i), constraint })
}

/// Vertices strictly on opposite sides of `D` and its reflection.
pub fn region_vertices(r: &ReflectedConstraint, vertices: &[Vertex]) -> Result<Vec<Vertex>> {
    let mut out = Vec::new();
    for v in vertices {
        let a = r.base.evaluate_vertex(v)?;
        let b = r.constraint.evaluate_vertex(v)?;
        if (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive()) {
            out.push(v.clone());
        }
    }
    Ok(out)
}

/// Outcome of a hull-membership query.
#[derive(Clone, Debug, PartialEq)]
pub enum HullCertificate<T> {
    /// Convex weights, one per vertex.
    Inside { weights: Vec<T> },
    /// `f(x) = c . x + c0` with `f >= 0` on every vertex and `f(n) < 0`.
    Outside { c: Vec<T>, c0: T },
}

impl<T> HullCertificate<T> {
    pub fn is_inside(&self) -> bool {
        matches!(self, HullCertificate::Inside { .. })
    }
}

/// Rational certificate with entries rendered as strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateJson {
    Weights { weights: Vec<String> },
    Separator { c: Vec<String>, c0: String },
}

impl From<&HullCertificate<BigRational>> for CertificateJson {
    fn from(h: &HullCertificate<BigRational>) -> Self {
        match h {
            HullCertificate::Inside { weights } => {
                CertificateJson::Weights { weights: weights.iter().map(rational_to_string).collect() }
            }
            HullCertificate::Outside { c, c0 } => {
                CertificateJson::Separator { c: c.iter().map(rational_to_string).collect(), c0: rational_to_string(c0) }
            }
        }
    }
}

trait Field: Clone + PartialOrd + Num + Neg<Output = Self> {}
impl Field for f64 {}
impl Field for BigRational {}

/// Phase-one simplex for `sum_v w_v v = n, sum_v w_v = 1, w >= 0` with
/// Bland's rule; `tol` is zero in exact arithmetic.
fn hull_simplex<T: Field>(vertices: &[Vec<T>], n: &[T], tol: T) -> HullCertificate<T> {
    let m = vertices.len();
    let dim = n.len();
    if m == 0 {
        return HullCertificate::Outside { c: vec![T::zero(); dim], c0: -T::one() };
    }
    let p = dim + 1;
    let width = m + p + 1;
    let mut sign = vec![T::one(); p];
    let mut t: Vec<Vec<T>> = Vec::with_capacity(p);
    for r in 0..p {
        let mut row = vec![T::zero(); width];
        for (j, v) in vertices.iter().enumerate() {
            row[j] = if r < dim { v[r].clone() } else { T::one() };
        }
        let mut b = if r < dim { n[r].clone() } else { T::one() };
        if b < T::zero() {
            sign[r] = -T::one();
            for x in row.iter_mut().take(m) {
                *x = -x.clone();
            }
            b = -b;
        }
        row[m + r] = T::one();
        row[width - 1] = b;
        t.push(row);
    }
    let mut basis: Vec<usize> = (m..m + p).collect();
    let cost = |j: usize| if j >= m && j < m + p { T::one() } else { T::zero() };

    loop {
        // reduced costs c_j - c_B^T T_j
        let entering = (0..m + p).find(|&j| {
            let mut z = cost(j);
            for (k, row) in t.iter().enumerate() {
                z = z - cost(basis[k]) * row[j].clone();
            }
            z < -tol.clone()
        });
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, T)> = None;
        for (k, row) in t.iter().enumerate() {
            if row[e] > tol {
                let ratio = row[width - 1].clone() / row[e].clone();
                let better = match &leave {
                    None => true,
                    Some((l, best)) => ratio < *best || (ratio == *best && basis[k] < basis[*l]),
                };
                if better {
                    leave = Some((k, ratio));
                }
            }
        }
        // phase one is bounded below, so a leaving row always exists
        let Some((l, _)) = leave else { break };
        let piv = t[l][e].clone();
        for x in t[l].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        let pivot_row = t[l].clone();
        for (k, row) in t.iter_mut().enumerate() {
            if k != l && !row[e].is_zero() {
                let f = row[e].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        basis[l] = e;
    }

    let mut objective = T::zero();
    for (k, row) in t.iter().enumerate() {
        objective = objective + cost(basis[k]) * row[width - 1].clone();
    }
    if objective <= tol {
        let mut weights = vec![T::zero(); m];
        for (k, row) in t.iter().enumerate() {
            if basis[k] < m {
                weights[basis[k]] = row[width - 1].clone();
            }
        }
        return HullCertificate::Inside { weights };
    }
    // dual y = c_B^T B^-1, read off the artificial columns
    let y: Vec<T> = (0..p)
        .map(|r| {
            let mut s = T::zero();
            for (k, row) in t.iter().enumerate() {
                s = s + cost(basis[k]) * row[m + r].clone();
            }
            s * sign[r].clone()
        })
        .collect();
    HullCertificate::Outside { c: y[..dim].iter().map(|x| -x.clone()).collect(), c0: -y[dim].clone() }
}

pub fn vertex_rationals(v: &Vertex) -> Vec<BigRational> {
    v.0.iter().map(|&x| int(i64::from(x))).collect()
}

/// Exact membership of `n` in the convex hull of 0/1 vertices.
pub fn hull_contains(vertices: &[Vertex], n: &[BigRational]) -> Result<HullCertificate<BigRational>> {
    if let Some(v) = vertices.iter().find(|v| v.0.len() != n.len()) {
        return domain(format!("vertex of length {} against a point of length {}", v.0.len(), n.len()));
    }
    let vs: Vec<Vec<BigRational>> = vertices.iter().map(vertex_rationals).collect();
    Ok(hull_simplex(&vs, n, BigRational::zero()))
}

/// Floating-point variant for arbitrary vertices.
pub fn hull_contains_f64(vertices: &[Vec<f64>], n: &[f64], tol: f64) -> Result<HullCertificate<f64>> {
    if vertices.iter().any(|v| v.len() != n.len()) {
        return domain("vertex and point lengths differ");
    }
    Ok(hull_simplex(vertices, n, tol))
}

/// Rows of `[A | b]` in reduced row-echelon form; pivot columns returned.
fn rref(mut rows: Vec<Vec<BigRational>>, ncols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(k) = (r..rows.len()).find(|&k| !rows[k][c].is_zero()) else { continue };
        rows.swap(r, k);
        let piv = rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = &*x / &piv;
        }
        let pivot_row = rows[r].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(rows.len().max(r));
    (rows, pivots)
}

fn solve_exact(a: Vec<Vec<BigRational>>, b: Vec<BigRational>) -> Vec<BigRational> {
    let n = b.len();
    let rows: Vec<Vec<BigRational>> = a.into_iter().zip(b).map(|(mut r, x)| {
        r.push(x);
        r
    }).collect();
    let (rows, _) = rref(rows, n);
    rows.iter().take(n).map(|r| r[n].clone()).collect()
}

/// A sampled point of a face with prescribed degeneracies.
#[derive(Clone, Debug, PartialEq)]
pub struct FacePoint {
    pub point: Vec<BigRational>,
    /// Adjacent `j` with `n_j = n_{j+1}` forced by the equations.
    pub degeneracies: Vec<usize>,
    pub attempts: usize,
}

impl FacePoint {
    pub fn approx(&self) -> Vec<f64> {
        self.point.iter().map(to_f64).collect()
    }
}

/// Affine data `{D = 0 for each constraint, n_j = n_{j+1} for j in pattern,
/// sum n = particles}`.
struct Face {
    rows: Vec<Vec<BigRational>>,
    pivots: Vec<usize>,
    d: usize,
}

impl Face {
    fn new(saturated: &[&Constraint], pattern: &[usize], particles: usize) -> Result<Face> {
        let d = saturated.first().map(|c| c.dim()).ok_or_else(|| PinError::Domain("no constraint to saturate".into()))?;
        let mut rows = Vec::new();
        for c in saturated {
            if c.dim() != d {
                return domain(format!("constraint {:?} has {} coefficients, expected {d}", c.label, c.dim()));
            }
            let mut row = c.kappa.clone();
            row.push(-c.kappa0.clone());
            rows.push(row);
        }
        for &j in pattern {
            if j == 0 || j >= d {
                return domain(format!("degeneracy index {j} outside 1..={}", d - 1));
            }
            let mut row = vec![BigRational::zero(); d + 1];
            row[j - 1] = BigRational::one();
            row[j] = -BigRational::one();
            rows.push(row);
        }
        let mut row = vec![BigRational::one(); d + 1];
        row[d] = int(particles as i64);
        rows.push(row);
        let (rows, pivots) = rref(rows, d);
        let rank = pivots.len();
        if rows.iter().skip(rank).any(|r| !r[d].is_zero()) {
            return Err(PinError::Infeasible("the saturation and degeneracy equations are inconsistent".into()));
        }
        Ok(Face { rows: rows.into_iter().take(rank).collect(), pivots, d })
    }

    fn in_row_space(&self, v: &[BigRational]) -> bool {
        let mut res = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let f = res[p].clone();
            if !f.is_zero() {
                for (x, y) in res.iter_mut().zip(row) {
                    *x = &*x - &f * y;
                }
            }
        }
        res.iter().all(Zero::is_zero)
    }

    fn forced_degeneracies(&self) -> Vec<usize> {
        (1..self.d)
            .filter(|&j| {
                let mut v = vec![BigRational::zero(); self.d];
                v[j - 1] = BigRational::one();
                v[j] = -BigRational::one();
                self.in_row_space(&v)
            })
            .collect()
    }

    /// Orthogonal projection of `x` onto the face's affine hull.
    fn project(&self, x: &[BigRational]) -> Vec<BigRational> {
        let d = self.d;
        let k = self.rows.len();
        let gram: Vec<Vec<BigRational>> = (0..k)
            .map(|a| (0..k).map(|b| (0..d).fold(BigRational::zero(), |s, j| s + &self.rows[a][j] * &self.rows[b][j])).collect())
            .collect();
        let rhs: Vec<BigRational> = (0..k)
            .map(|a| (0..d).fold(-self.rows[a][d].clone(), |s, j| s + &self.rows[a][j] * &x[j]))
            .collect();
        let lambda = solve_exact(gram, rhs);
        (0..d)
            .map(|j| (0..k).fold(x[j].clone(), |s, a| s - &lambda[a] * &self.rows[a][j]))
            .collect()
    }
}

/// Rejection-samples a descending point of `{D = 0} ∩ {pattern} ∩ {sum n = N}`
/// inside `[0,1]^d`, generic away from the forced degeneracies.
///
/// `extra` are further constraints that must also be saturated (paired
/// equalities of a catalog, for instance).
pub fn sample_face_point(
    d_: &Constraint,
    pattern: &[usize],
    particles: usize,
    seed: u64,
    extra: &[Constraint],
) -> Result<FacePoint> {
    let mut all = vec![d_];
    all.extend(extra.iter());
    let face = Face::new(&all, pattern, particles)?;
    let forced = face.forced_degeneracies();
    let d = d_.dim();
    let scale = BigInt::from(1_000_000u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_REJECTIONS {
        let mut u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        u.sort_by(|a, b| b.total_cmp(a));
        let x: Vec<BigRational> = u
            .iter()
            .map(|&v| BigRational::new(BigInt::from((v * 1e6).round() as i64), scale.clone()))
            .collect();
        let n = face.project(&x);
        let zero = BigRational::zero();
        let one = BigRational::one();
        if n.iter().any(|v| *v < zero || *v > one) {
            continue;
        }
        if (1..d).any(|j| n[j - 1] < n[j]) {
            continue;
        }
        let generic = (1..d).all(|j| forced.contains(&j) || to_f64(&(&n[j - 1] - &n[j])) >= GENERIC_GAP);
        if generic {
            return Ok(FacePoint { point: n, degeneracies: forced, attempts: attempt });
        }
    }
    Err(PinError::Infeasible(format!("no admissible face point after {MAX_REJECTIONS} draws")))
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionReport {
    pub transposition: usize,
    pub vertices: Vec<Vertex>,
    pub inside: bool,
    pub certificate: CertificateJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub constraint: String,
    pub point: Vec<String>,
    pub pattern: Vec<usize>,
    /// Every adjacent degeneracy of the point; one region per entry.
    pub transpositions: Vec<usize>,
    pub regions: Vec<RegionReport>,
    pub holds: bool,
}

/// For every adjacent degeneracy `j` of `n`, checks that `n` lies outside
/// the convex hull of the hypercube vertices in the region of `D` and its
/// reflection by `pi_{j,j+1}`.
pub fn check_assumption(d_: &Constraint, pattern: &[usize], n: &[BigRational]) -> Result<AssumptionReport> {
    if d_.setting != Setting::Fermion {
        return domain("the assumption check works on fermionic constraints");
    }
    let d = d_.dim();
    if n.len() != d {
        return domain(format!("point has {} entries, constraint has {d}", n.len()));
    }
    let total = n.iter().fold(BigRational::zero(), |s, x| s + x);
    if !total.is_integer() || total.is_negative() || total > int(d as i64) {
        return domain(format!("entries sum to {}, not a particle number", rational_to_string(&total)));
    }
    let particles = total.to_integer().try_into().unwrap_or(0usize);
    let value = to_f64(&d_.evaluate_exact(n)?);
    if value.abs() > FACE_TOL {
        return domain(format!("point does not saturate {:?} (D = {value:.3e})", d_.label));
    }
    let approx: Vec<f64> = n.iter().map(to_f64).collect();
    if (1..d).any(|j| approx[j - 1] < approx[j] - FACE_TOL) {
        return domain("point is not in descending order");
    }
    for &j in pattern {
        if j == 0 || j >= d || (approx[j - 1] - approx[j]).abs() > FACE_TOL {
            return domain(format!("point lacks the requested degeneracy n{j} = n{}", j + 1));
        }
    }
    let transpositions: Vec<usize> = (1..d).filter(|&j| (approx[j - 1] - approx[j]).abs() <= FACE_TOL).collect();
    let vertices = hypercube_vertices(d, particles)?;
    let mut regions = Vec::with_capacity(transpositions.len());
    for &j in &transpositions {
        let r = reflect(d_, j)?;
        let vs = region_vertices(&r, &vertices)?;
        let cert = hull_contains(&vs, n)?;
        regions.push(RegionReport { transposition: j, inside: cert.is_inside(), certificate: (&cert).into(), vertices: vs });
    }
    let holds = regions.iter().all(|r| !r.inside);
    Ok(AssumptionReport {
        constraint: d_.label.clone(),
        point: n.iter().map(rational_to_string).collect(),
        pattern: pattern.to_vec(),
        transpositions,
        regions,
        holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaFailure {
    pub vertex: Vertex,
    pub constraint: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub holds: bool,
    pub failures: Vec<LemmaFailure>,
}

/// Whether every vertex satisfies `D >= 0` and each reflection `>= 0`.
pub fn lemma_nontrivial1_check(d_: &Constraint, reflections: &[ReflectedConstraint], vertices: &[Vertex]) -> Result<LemmaReport> {
    let mut failures = Vec::new();
    for v in vertices {
        for c in std::iter::once(d_).chain(reflections.iter().map(|r| &r.constraint)) {
            let val = c.evaluate_vertex(v)?;
            if val.is_negative() {
                failures.push(LemmaFailure { vertex: v.clone(), constraint: c.label.clone(), value: rational_to_string(&val) });
            }
        }
    }
    Ok(LemmaReport { holds: failures.is_empty(), failures })
}

/// Binary vertices with `sum_{j>=2} v_j - v_1 < 0` and with
/// `sum_{j>=2} v_j + v_1 < 1`.
pub fn qubit_vertex_enumeration(r: usize) -> Result<(Vec<Vertex>, Vec<Vertex>)> {
    if !(2..=20).contains(&r) {
        return domain(format!("qubit count {r} outside 2..=20"));
    }
    let mut w1 = Vec::new();
    let mut w2 = Vec::new();
    for v in binary_vertices(r) {
        let rest: i64 = v.0[1..].iter().map(|&x| i64::from(x)).sum();
        let first = i64::from(v.0[0]);
        if rest - first < 0 {
            w1.push(v.clone());
        }
        if rest + first < 1 {
            w2.push(v);
        }
    }
    Ok((w1, w2))
}

#[derive(Clone, Debug, Serialize)]
pub struct QubitTheoremReport {
    pub r: usize,
    pub w1: Vec<Vertex>,
    pub w2: Vec<Vertex>,
    /// Strict region of `D1` and its flip through `n_1 = 1/2`.
    pub region: Vec<Vertex>,
    /// `w1` is the flip of `w2`.
    pub exceptions_paired: bool,
    /// The lemma's sign condition on all vertices outside `w1` and `w2`.
    pub lemma_holds_elsewhere: bool,
    pub holds: bool,
}

pub fn qubit_theorem_check(r: usize) -> Result<QubitTheoremReport> {
    let (w1, w2) = qubit_vertex_enumeration(r)?;
    let d1 = qubit_polygon(r)?.remove(0);
    let flip = reflect_site(&d1, 1)?;
    let vertices = binary_vertices(r);
    let region = region_vertices(&flip, &vertices)?;
    let rest: Vec<Vertex> = vertices.into_iter().filter(|v| !w1.contains(v) && !w2.contains(v)).collect();
    let lemma = lemma_nontrivial1_check(&d1, std::slice::from_ref(&flip), &rest)?;
    let exceptions_paired = w2.iter().map(|v| flip.reflection.apply_vertex(v)).collect::<Vec<_>>() == w1;
    let holds = region.is_empty() && lemma.holds && exceptions_paired && w1.len() == 1 && w2.len() == 1;
    Ok(QubitTheoremReport { r, w1, w2, region, exceptions_paired, lemma_holds_elsewhere: lemma.holds, holds })
}
