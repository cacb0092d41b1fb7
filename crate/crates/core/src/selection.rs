//! Selection rules: which configurations a state may contain once its
//! spectrum saturates a constraint.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinat::{enumerate_configurations, occupation_vector, Configuration, DEFAULT_EPS_DEG};
use crate::constraints::{label_vertex, pinning_operator_residual, Constraint, Setting, DEFAULT_EPS_SAT};
use crate::error::{domain, PinError, Result};
use crate::fockstate::{OneBodyOperator, PureState, Statistics};
use crate::linalg::{exp_i_hermitian, hermitian_basis, max_offdiag, random_unitary, row_space_and_null, CMatrix, C64, I};
use crate::rdm::{
    natural_decomposition, one_body_rdm_with, rdm_matrix, support, to_natural_basis, DEFAULT_SUPPORT_THRESHOLD,
    RANK_FLOOR, RANK_TOL,
};
use crate::symmetry::{adapted_basis, symmetry_algebra, symmetry_residual};

/// Tolerances shared by the selection checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectionOptions {
    pub eps_sat: f64,
    pub eps_deg: f64,
    pub threshold: f64,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions { eps_sat: DEFAULT_EPS_SAT, eps_deg: DEFAULT_EPS_DEG, threshold: DEFAULT_SUPPORT_THRESHOLD }
    }
}

/// Configurations whose occupation vector saturates a constraint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnsatzSpace {
    pub constraint: String,
    pub configs: Vec<Configuration>,
}

impl AnsatzSpace {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        self.configs.binary_search(c).is_ok()
    }

    pub fn contains_label(&self, label: &[usize]) -> bool {
        self.configs.binary_search_by(|c| c.indices().cmp(label)).is_ok()
    }
}

fn require_fermion_constraint(d_: &Constraint, d: usize) -> Result<()> {
    if d_.setting != Setting::Fermion {
        return domain(format!("constraint {:?} is not a fermionic constraint", d_.label));
    }
    if d_.dim() != d {
        return domain(format!("constraint {:?} has {} coefficients, expected {d}", d_.label, d_.dim()));
    }
    Ok(())
}

pub fn ansatz_space(constraint: &Constraint, d: usize, n: usize) -> Result<AnsatzSpace> {
    require_fermion_constraint(constraint, d)?;
    let mut configs = Vec::new();
    for c in enumerate_configurations(d, n)? {
        if constraint.evaluate_vertex(&occupation_vector(&c, d))?.is_zero() {
            configs.push(c);
        }
    }
    Ok(AnsatzSpace { constraint: constraint.label.clone(), configs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Saturated and the natural support lies in the ansatz space.
    Pass,
    /// The constraint is not saturated; nothing is selected.
    NotPinned,
    /// Saturated, yet some supported configuration lies outside the ansatz.
    Violation,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::NotPinned => "not-pinned",
            Verdict::Violation => "violation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub label: Vec<usize>,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub constraint: String,
    #[serde(rename = "D_value")]
    pub d_value: f64,
    pub saturated: bool,
    pub nons: Vec<f64>,
    /// False when some natural occupation numbers coincide; the forward
    /// rule is then not guaranteed and a violation is no alarm.
    pub nondegenerate: bool,
    pub support: Vec<Vec<usize>>,
    pub ansatz_size: usize,
    pub violations: Vec<Violation>,
    pub residual: f64,
    pub verdict: Verdict,
}

impl SelectionReport {
    /// A violation under the full hypotheses of the forward rule.
    pub fn is_alarm(&self) -> bool {
        self.verdict == Verdict::Violation && self.nondegenerate
    }
}

fn require_fermion(psi: &PureState) -> Result<()> {
    if psi.statistics() != Statistics::Fermion {
        return domain(format!("selection rules need fermion statistics, not {}", psi.statistics().name()));
    }
    Ok(())
}

/// Natural expansion, saturation, support against the ansatz and the
/// residual of the induced diagonal operator.
pub fn verify_selection_rule(psi: &PureState, constraint: &Constraint, opts: &SelectionOptions) -> Result<SelectionReport> {
    require_fermion(psi)?;
    let ansatz = ansatz_space(constraint, psi.d(), psi.n())?;
    let (psi_no, rho) = to_natural_basis(psi, opts.eps_deg)?;
    selection_report_from_natural(&psi_no, rho.nons(), !rho.is_degenerate(), constraint, &ansatz, opts)
}

pub(crate) fn selection_report_from_natural(
    psi_no: &PureState,
    nons: &[f64],
    nondegenerate: bool,
    constraint: &Constraint,
    ansatz: &AnsatzSpace,
    opts: &SelectionOptions,
) -> Result<SelectionReport> {
    let d_value = constraint.evaluate(nons)?;
    let saturated = d_value.abs() <= opts.eps_sat;
    let supp = support(psi_no, opts.threshold);
    let norm = psi_no.norm();
    let violations: Vec<Violation> = supp
        .indices
        .iter()
        .filter(|&&k| !ansatz.contains_label(&psi_no.label(k)))
        .map(|&k| Violation { label: psi_no.label(k), amplitude: psi_no.amplitudes()[k].norm() / norm })
        .collect();
    let residual = pinning_operator_residual(constraint, psi_no)?;
    let verdict = if !saturated {
        Verdict::NotPinned
    } else if violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Violation
    };
    Ok(SelectionReport {
        constraint: constraint.label.clone(),
        d_value,
        saturated,
        nons: nons.to_vec(),
        nondegenerate,
        support: supp.labels,
        ansatz_size: ansatz.len(),
        violations,
        residual,
        verdict,
    })
}

#[derive(Clone, Debug)]
pub struct ConverseResult {
    /// Block-diagonal unitary; columns are the new orbitals.
    pub unitary: CMatrix,
    pub state: PureState,
    /// Occupations indexed by orbital, descending inside each class of equal
    /// coefficients and unordered across classes.
    pub spectrum: Vec<f64>,
    pub d_value: f64,
    /// Orbital classes (0-based) of equal coefficient, in orbital order.
    pub classes: Vec<Vec<usize>>,
}

/// Orbitals grouped by equal coefficient, each group in increasing order,
/// groups ordered by their first orbital.
pub fn kappa_classes(constraint: &Constraint) -> Vec<Vec<usize>> {
    let mut by_value: BTreeMap<&BigRational, Vec<usize>> = BTreeMap::new();
    for (j, k) in constraint.kappa.iter().enumerate() {
        by_value.entry(k).or_default().push(j);
    }
    let mut classes: Vec<Vec<usize>> = by_value.into_values().collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Rotates a state supported in an ansatz space to natural orbitals
/// without mixing orbitals of different coefficient.
pub fn converse_selection(psi: &PureState, constraint: &Constraint, opts: &SelectionOptions) -> Result<ConverseResult> {
    require_fermion(psi)?;
    let d = psi.d();
    let ansatz = ansatz_space(constraint, d, psi.n())?;
    let psi = psi.normalize()?;
    let supp = support(&psi, opts.threshold);
    if let Some(bad) = supp.labels.iter().find(|l| !ansatz.contains_label(l)) {
        return Err(PinError::Precondition(format!(
            "configuration {bad:?} is supported but outside the ansatz of {:?}",
            constraint.label
        )));
    }
    let rho = rdm_matrix(&psi)?;
    let classes = kappa_classes(constraint);
    let mut class_of = vec![0; d];
    for (c, members) in classes.iter().enumerate() {
        for &j in members {
            class_of[j] = c;
        }
    }
    for i in 0..d {
        for j in 0..d {
            if class_of[i] != class_of[j] && rho[(i, j)].norm() > 1e-9 {
                return Err(PinError::TheoremViolation(format!(
                    "density couples orbitals {} and {} of different coefficient ({:.3e})",
                    i + 1,
                    j + 1,
                    rho[(i, j)].norm()
                )));
            }
        }
    }
    let mut u = CMatrix::zeros(d, d);
    let mut spectrum = vec![0.0; d];
    for members in &classes {
        let k = members.len();
        let block = CMatrix::from_fn(k, k, |a, b| rho[(members[a], members[b])]);
        let (vals, vecs) = natural_decomposition(&block, opts.eps_deg);
        for (a, &row) in members.iter().enumerate() {
            for (b, &col) in members.iter().enumerate() {
                u[(row, col)] = vecs[(a, b)];
            }
            spectrum[row] = vals[a];
        }
    }
    let state = psi.change_basis(&u.adjoint())?;
    let rotated = support(&state, opts.threshold);
    if let Some(bad) = rotated.labels.iter().find(|l| !ansatz.contains_label(l)) {
        return Err(PinError::TheoremViolation(format!("rotation moved weight onto {bad:?}")));
    }
    let d_value = constraint.evaluate(&spectrum)?;
    if d_value.abs() > 1e-9 {
        return Err(PinError::TheoremViolation(format!(
            "constraint {:?} evaluates to {d_value:.3e} on the block spectrum",
            constraint.label
        )));
    }
    Ok(ConverseResult { unitary: u, state, spectrum, d_value, classes })
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaAnsatz {
    pub configs: Vec<Configuration>,
    pub l_space_dim: usize,
}

impl SigmaAnsatz {
    pub fn contains_label(&self, label: &[usize]) -> bool {
        self.configs.binary_search_by(|c| c.indices().cmp(label)).is_ok()
    }
}

/// Configurations `i` with `l . (n_i - n) = 0` for every diagonal symmetry
/// generator `l` of a state given in adapted natural orbitals.
pub fn sigma_ansatz(psi_adapted: &PureState, opts: &SelectionOptions) -> Result<SigmaAnsatz> {
    require_fermion(psi_adapted)?;
    let d = psi_adapted.d();
    let psi = psi_adapted.normalize()?;
    let rho = rdm_matrix(&psi)?;
    let off = max_offdiag(&rho);
    if off > 1e-8 {
        return Err(PinError::Precondition(format!("state is not in a natural basis (off-diagonal {off:.3e})")));
    }
    let sym = symmetry_algebra(&psi)?;
    let mut diag_parts = Vec::with_capacity(sym.dim());
    for (k, g) in sym.generators.iter().enumerate() {
        let dg = CMatrix::from_diagonal(&g.diagonal());
        let (res, _) = symmetry_residual(&dg, &psi)?;
        if res > 1e-8 {
            return Err(PinError::Precondition(format!(
                "basis is not adapted: diagonal part of generator {k} is not a symmetry (residual {res:.3e})"
            )));
        }
        diag_parts.push(DVector::from_iterator(d, g.diagonal().iter().map(|z| z.re)));
    }
    let l_vectors = if diag_parts.is_empty() {
        Vec::new()
    } else {
        row_space_and_null(&DMatrix::from_columns(&diag_parts).transpose(), RANK_TOL, RANK_FLOOR).0
    };
    let n: Vec<f64> = (0..d).map(|j| rho[(j, j)].re).collect();
    let mut configs = Vec::new();
    for c in enumerate_configurations(d, psi.n())? {
        let v = occupation_vector(&c, d).as_f64();
        let ok = l_vectors.iter().all(|l| {
            let s: f64 = (0..d).map(|j| l[j] * (v[j] - n[j])).sum();
            s.abs() <= 1e-8
        });
        if ok {
            configs.push(c);
        }
    }
    let out = SigmaAnsatz { configs, l_space_dim: l_vectors.len() };
    let supp = support(&psi, opts.threshold);
    if let Some(bad) = supp.labels.iter().find(|l| !out.contains_label(l)) {
        return Err(PinError::TheoremViolation(format!("supported configuration {bad:?} lies outside the sigma-ansatz")));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessMethod {
    Identity,
    Permutation,
    Sampled,
    Refined,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberReport {
    pub index: usize,
    pub symmetry_dim: usize,
    pub found: bool,
    pub method: Option<WitnessMethod>,
    /// Squared norm left outside the maximal ansatz by the best `u`.
    pub off_ansatz_mass: f64,
    /// Best unitary as rows of `[re, im]` pairs.
    pub witness: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniversalReport {
    pub nons: Vec<f64>,
    pub generic_index: usize,
    pub max_ansatz: Vec<Configuration>,
    /// Whether the maximal ansatz lies in each saturated constraint's ansatz.
    pub within_constraints: Vec<(String, bool)>,
    pub members: Vec<MemberReport>,
    pub samples_per_cluster: usize,
}

impl UniversalReport {
    pub fn all_found(&self) -> bool {
        self.members.iter().all(|m| m.found)
    }
}

fn matrix_rows(u: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..u.nrows()).map(|r| (0..u.ncols()).map(|c| [u[(r, c)].re, u[(r, c)].im]).collect()).collect()
}

/// Searches, for every member of a family with a common spectrum, for a
/// spectrum-preserving unitary that moves its support into the σ-ansatz of
/// the member with the smallest symmetry algebra.
///
/// Candidates are the identity, all permutations inside degenerate clusters,
/// `samples_per_cluster` Haar-random block unitaries per nontrivial cluster,
/// and a damped Gauss-Newton refinement of the best few.
pub fn universal_ansatz_check(
    family: &[PureState],
    saturated: &[Constraint],
    opts: &SelectionOptions,
    samples_per_cluster: usize,
    seed: u64,
) -> Result<UniversalReport> {
    if family.is_empty() {
        return domain("universal ansatz check needs at least one state");
    }
    for psi in family {
        require_fermion(psi)?;
    }
    let (d, n) = (family[0].d(), family[0].n());
    if family.iter().any(|p| p.d() != d || p.n() != n) {
        return domain("family members live in different spaces");
    }
    let mut natural = Vec::with_capacity(family.len());
    let mut dims = Vec::with_capacity(family.len());
    let mut reference: Option<Vec<f64>> = None;
    let mut clusters = Vec::new();
    for (idx, psi) in family.iter().enumerate() {
        let (psi_no, rho) = to_natural_basis(psi, opts.eps_deg)?;
        match &reference {
            None => {
                reference = Some(rho.nons().to_vec());
                clusters = rho.clusters();
            }
            Some(r) => {
                let gap = r.iter().zip(rho.nons()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if gap > 1e-8 {
                    return domain(format!("member {idx} has a different spectrum (max gap {gap:.3e})"));
                }
            }
        }
        dims.push(symmetry_algebra(&psi_no)?.dim());
        natural.push(psi_no);
    }
    let nons = reference.unwrap_or_default();
    let generic_index = (0..family.len()).min_by_key(|&k| (dims[k], k)).unwrap_or(0);

    let adapted = adapted_basis(&family[generic_index], opts.eps_deg)?;
    let max_ansatz = sigma_ansatz(&adapted.state, opts)?;
    let mut within_constraints = Vec::new();
    for c in saturated {
        let a = ansatz_space(c, d, n)?;
        within_constraints.push((c.label.clone(), max_ansatz.configs.iter().all(|x| a.contains(x))));
    }
    let off: Vec<usize> = (0..natural[0].dim())
        .filter(|&k| !max_ansatz.contains_label(&natural[0].label(k)))
        .collect();

    let mut members = Vec::with_capacity(family.len());
    for (idx, psi_no) in natural.iter().enumerate() {
        let search = WitnessSearch { psi: psi_no, off: &off, clusters: &clusters, threshold: opts.threshold };
        let (found, method, mass, u) = if idx == generic_index {
            (true, Some(WitnessMethod::Identity), 0.0, adapted.unitary.adjoint() * to_natural_frame(&family[idx], opts)?)
        } else {
            search.run(samples_per_cluster, seed ^ (idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))?
        };
        members.push(MemberReport {
            index: idx,
            symmetry_dim: dims[idx],
            found,
            method,
            off_ansatz_mass: mass,
            witness: matrix_rows(&u),
        });
    }
    Ok(UniversalReport { nons, generic_index, max_ansatz: max_ansatz.configs, within_constraints, members, samples_per_cluster })
}

/// The natural orbitals of `psi`, as a unitary (columns).
fn to_natural_frame(psi: &PureState, opts: &SelectionOptions) -> Result<CMatrix> {
    Ok(one_body_rdm_with(psi, opts.eps_deg)?.nos().clone())
}

struct WitnessSearch<'a> {
    psi: &'a PureState,
    off: &'a [usize],
    clusters: &'a [Vec<usize>],
    threshold: f64,
}

impl WitnessSearch<'_> {
    fn mass(&self, phi: &PureState) -> f64 {
        self.off.iter().map(|&k| phi.amplitudes()[k].norm_sqr()).sum()
    }

    fn contained(&self, phi: &PureState) -> bool {
        let cut = self.threshold * phi.norm();
        self.off.iter().all(|&k| phi.amplitudes()[k].norm() <= cut)
    }

    fn evaluate(&self, u: &CMatrix) -> Result<(f64, PureState)> {
        let phi = self.psi.change_basis(u)?;
        Ok((self.mass(&phi), phi))
    }

    fn run(&self, samples: usize, seed: u64) -> Result<(bool, Option<WitnessMethod>, f64, CMatrix)> {
        let d = self.psi.d();
        let identity = CMatrix::identity(d, d);
        let (m0, phi0) = self.evaluate(&identity)?;
        if self.contained(&phi0) {
            return Ok((true, Some(WitnessMethod::Identity), m0, identity));
        }
        let nontrivial: Vec<&Vec<usize>> = self.clusters.iter().filter(|c| c.len() > 1).collect();
        let mut candidates: Vec<(f64, CMatrix)> = vec![(m0, identity.clone())];

        // exact permutations inside clusters, capped
        let total: usize = nontrivial.iter().map(|c| (1..=c.len()).product::<usize>()).product();
        if !nontrivial.is_empty() && total <= 40_320 {
            for perm in cluster_permutations(d, &nontrivial) {
                let (m, phi) = self.evaluate(&perm)?;
                if self.contained(&phi) {
                    return Ok((true, Some(WitnessMethod::Permutation), m, perm));
                }
                candidates.push((m, perm));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples * nontrivial.len() {
            let mut u = CMatrix::identity(d, d);
            for c in &nontrivial {
                let block = random_unitary(c.len(), &mut rng);
                for (a, &r) in c.iter().enumerate() {
                    for (b, &s) in c.iter().enumerate() {
                        u[(r, s)] = block[(a, b)];
                    }
                }
            }
            let (m, phi) = self.evaluate(&u)?;
            if self.contained(&phi) {
                return Ok((true, Some(WitnessMethod::Sampled), m, u));
            }
            candidates.push((m, u));
        }

        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        candidates.truncate(4);
        let generators = block_generators(d, &nontrivial);
        let mut best = candidates[0].clone();
        for (m, u) in candidates {
            let (m, u) = if generators.is_empty() { (m, u) } else { self.refine(u, &generators)? };
            let (_, phi) = self.evaluate(&u)?;
            if self.contained(&phi) {
                return Ok((true, Some(WitnessMethod::Refined), m, u));
            }
            if m < best.0 {
                best = (m, u);
            }
        }
        Ok((false, None, best.0, best.1))
    }

    /// Levenberg-Marquardt on the off-ansatz amplitudes with the exact
    /// derivative `i G^ phi` along each block generator `G`.
    fn refine(&self, mut u: CMatrix, generators: &[CMatrix]) -> Result<(f64, CMatrix)> {
        let ops: Vec<OneBodyOperator> =
            generators.iter().map(|g| OneBodyOperator::new(g.clone())).collect::<Result<_>>()?;
        let (mut f, mut phi) = self.evaluate(&u)?;
        let mut mu = 1e-3;
        let p = generators.len();
        let m = self.off.len();
        for _ in 0..400 {
            if f < 1e-26 || mu > 1e12 {
                break;
            }
            let mut j = DMatrix::<f64>::zeros(2 * m, p);
            for (k, op) in ops.iter().enumerate() {
                let dphi = phi.apply_one_body(op)?;
                for (r, &idx) in self.off.iter().enumerate() {
                    let z = dphi.amplitudes()[idx] * I;
                    j[(2 * r, k)] = z.re;
                    j[(2 * r + 1, k)] = z.im;
                }
            }
            let mut res = DVector::<f64>::zeros(2 * m);
            for (r, &idx) in self.off.iter().enumerate() {
                res[2 * r] = phi.amplitudes()[idx].re;
                res[2 * r + 1] = phi.amplitudes()[idx].im;
            }
            let jt = j.transpose();
            let jtj = &jt * &j;
            let g = &jt * &res;
            let mut improved = false;
            while mu <= 1e12 {
                let mut a = jtj.clone();
                for k in 0..p {
                    a[(k, k)] += mu * (1.0 + jtj[(k, k)]);
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                    mu *= 4.0;
                    continue;
                };
                let h = step
                    .iter()
                    .zip(generators)
                    .fold(CMatrix::zeros(u.nrows(), u.ncols()), |acc, (s, gen)| acc + gen * C64::new(*s, 0.0));
                let trial = exp_i_hermitian(&h) * &u;
                let (ft, phit) = self.evaluate(&trial)?;
                if ft < f {
                    u = trial;
                    f = ft;
                    phi = phit;
                    mu = (mu / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
        }
        Ok((f, u))
    }
}

/// Hermitian generators supported on a single degenerate cluster block.
fn block_generators(d: usize, clusters: &[&Vec<usize>]) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for c in clusters {
        for b in hermitian_basis(c.len()) {
            let mut g = CMatrix::zeros(d, d);
            for (a, &r) in c.iter().enumerate() {
                for (bb, &s) in c.iter().enumerate() {
                    g[(r, s)] = b[(a, bb)];
                }
            }
            out.push(g);
        }
    }
    out
}

/// All products of permutation matrices acting inside each cluster.
fn cluster_permutations(d: usize, clusters: &[&Vec<usize>]) -> Vec<CMatrix> {
    let per_cluster: Vec<Vec<Vec<usize>>> = clusters.iter().map(|c| permutations(c.len())).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; clusters.len()];
    loop {
        let mut u = CMatrix::zeros(d, d);
        for j in 0..d {
            u[(j, j)] = C64::new(1.0, 0.0);
        }
        for (ci, c) in clusters.iter().enumerate() {
            let perm = &per_cluster[ci][choice[ci]];
            for &r in c.iter() {
                u[(r, r)] = C64::new(0.0, 0.0);
            }
            for (a, &target) in perm.iter().enumerate() {
                u[(c[target], c[a])] = C64::new(1.0, 0.0);
            }
        }
        out.push(u);
        // odometer over the per-cluster choices
        let mut k = 0;
        loop {
            if k == clusters.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < per_cluster[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..k).collect();
    let mut out = vec![current.clone()];
    // lexicographic successor
    loop {
        let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) else { return out };
        let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// `D(n_i)` for each supported label, used in reports.
pub fn support_eigenvalues(constraint: &Constraint, psi: &PureState, threshold: f64) -> Result<Vec<(Vec<usize>, BigRational)>> {
    let supp = support(psi, threshold);
    supp.indices
        .iter()
        .map(|&k| Ok((psi.label(k), constraint.evaluate_vertex(&label_vertex(psi, k)?)?)))
        .collect()
}
