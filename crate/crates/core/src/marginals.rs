//! Non-fermionic settings: qubit marginals and the polygon inequalities,
//! product boson states, and hard-core bosons.

use nalgebra::DVector;
use num_rational::BigRational;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinat::{binary_vertices, DEFAULT_EPS_DEG};
use crate::constraints::{int, pinning_operator_residual, qubit_polygon, to_f64, Constraint};
use crate::error::{domain, PinError, Result};
use crate::fockstate::{random_state_with, OneBodyOperator, PureState, Statistics};
use crate::linalg::{eigh_descending, CMatrix, C64};
use crate::rdm::{one_body_rdm, subsystem_rdm, support};

/// `(n1, n2)` per subsystem with `n1 >= n2` and `n1 + n2 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitSpectra {
    pub pairs: Vec<(f64, f64)>,
}

impl QubitSpectra {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<QubitSpectra> {
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if (a + b - 1.0).abs() > 1e-9 || b < -1e-9 || b > 0.5 + 1e-9 || a < b - 1e-9 {
                return domain(format!("subsystem {}: ({a}, {b}) is not an ordered qubit spectrum", k + 1));
            }
        }
        Ok(QubitSpectra { pairs })
    }

    /// Spectra given by their smaller eigenvalues.
    pub fn from_smaller(n2: &[f64]) -> Result<QubitSpectra> {
        QubitSpectra::new(n2.iter().map(|&b| (1.0 - b, b)).collect())
    }

    pub fn smaller(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

#[derive(Clone, Debug)]
pub struct QubitMarginals {
    pub spectra: QubitSpectra,
    /// Local eigenbases; column 0 belongs to the larger eigenvalue.
    pub bases: Vec<CMatrix>,
}

fn require_qubits(psi: &PureState) -> Result<()> {
    if psi.statistics() != Statistics::Qubit || psi.d() != 2 {
        return domain("expected an r-qubit state");
    }
    Ok(())
}

pub fn qubit_marginals(psi: &PureState) -> Result<QubitMarginals> {
    require_qubits(psi)?;
    let mut pairs = Vec::with_capacity(psi.n());
    let mut bases = Vec::with_capacity(psi.n());
    for site in 1..=psi.n() {
        let rho = subsystem_rdm(psi, site, DEFAULT_EPS_DEG)?;
        pairs.push((rho.nons()[0], rho.nons()[1]));
        bases.push(rho.nos().clone());
    }
    Ok(QubitMarginals { spectra: QubitSpectra::new(pairs)?, bases })
}

/// `D_i = -n2_i + sum_{j != i} n2_j` for every subsystem.
pub fn higuchi_check(spectra: &QubitSpectra) -> Vec<f64> {
    let n2 = spectra.smaller();
    let total: f64 = n2.iter().sum();
    n2.iter().map(|&x| total - 2.0 * x).collect()
}

/// `psi` rewritten in its local eigenbases.
pub fn to_local_eigenbases(psi: &PureState, marginals: &QubitMarginals) -> Result<PureState> {
    let mut out = psi.clone();
    for (k, b) in marginals.bases.iter().enumerate() {
        out = out.change_local_basis(&b.adjoint(), k + 1)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct QubitSelectionReport {
    pub constraint: String,
    pub smaller_eigenvalues: Vec<f64>,
    pub values: Vec<f64>,
    pub support: Vec<Vec<usize>>,
    pub allowed: Vec<Vec<usize>>,
    pub violations: Vec<Vec<usize>>,
    pub residual: f64,
    pub pass: bool,
}

fn vertex_label(bits: &[u8]) -> Vec<usize> {
    bits.iter().map(|&b| usize::from(b) + 1).collect()
}

/// Selection rule of a saturated polygon inequality `D_i` (1-based `i`).
pub fn qubit_selection_check(psi: &PureState, i: usize, eps: f64, threshold: f64) -> Result<QubitSelectionReport> {
    require_qubits(psi)?;
    let r = psi.n();
    if r < 2 {
        return domain("the polygon inequalities need at least two qubits");
    }
    if i == 0 || i > r {
        return domain(format!("constraint index {i} outside 1..={r}"));
    }
    let marg = qubit_marginals(psi)?;
    let values = higuchi_check(&marg.spectra);
    if values[i - 1].abs() > eps {
        return Err(PinError::Precondition(format!("D{i} = {:.6e} is not saturated", values[i - 1])));
    }
    let d_i: Constraint = qubit_polygon(r)?.swap_remove(i - 1);
    let allowed: Vec<Vec<usize>> = binary_vertices(r)
        .into_iter()
        .filter(|v| d_i.evaluate_vertex(v).is_ok_and(|x| x.is_zero()))
        .map(|v| vertex_label(&v.0))
        .collect();
    let local = to_local_eigenbases(psi, &marg)?.normalize()?;
    let supp = support(&local, threshold);
    let violations: Vec<Vec<usize>> = supp.labels.iter().filter(|l| !allowed.contains(l)).cloned().collect();
    let residual = pinning_operator_residual(&d_i, &local)?;
    let pass = violations.is_empty() && residual <= eps;
    Ok(QubitSelectionReport {
        constraint: d_i.label,
        smaller_eigenvalues: marg.spectra.smaller(),
        values,
        support: supp.labels,
        allowed,
        violations,
        residual,
        pass,
    })
}

/// `sqrt(a)|1..1> + sum_k b_k |1..2..1>` with the 2 of term `k` at site
/// 1 and site `k + 2`; saturates `D_1` whenever `a > 1/2`.
pub fn pinned_qubit_state(a: f64, b: &[f64]) -> Result<PureState> {
    let r = b.len() + 1;
    let mut terms = vec![(vec![1; r], C64::new(a, 0.0))];
    for (k, &bk) in b.iter().enumerate() {
        let mut label = vec![1; r];
        label[0] = 2;
        label[k + 1] = 2;
        terms.push((label, C64::new(bk, 0.0)));
    }
    PureState::from_terms(2, r, Statistics::Qubit, &terms)?.normalize()
}

/// `1/sqrt(N) sum_j sqrt(n_j) |j...j>` stored as the one-particle factor
/// with amplitudes `sqrt(n_j / N)`. For `N = 1` the density is that factor's
/// projector rather than `diag(n)`.
pub fn boson_product_state(n: &[f64]) -> Result<PureState> {
    if n.is_empty() {
        return domain("empty occupation vector");
    }
    if let Some(x) = n.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return domain(format!("occupation {x} is negative"));
    }
    let total: f64 = n.iter().sum();
    let particles = total.round();
    if particles < 1.0 || (total - particles).abs() > 1e-9 {
        return domain(format!("occupations sum to {total}, not a positive integer"));
    }
    let amps = DVector::from_iterator(n.len(), n.iter().map(|&x| C64::new((x / particles).sqrt(), 0.0)));
    PureState::new(n.len(), particles as usize, Statistics::BosonProduct, amps)
}

/// `N (d - N + 1) / d`.
pub fn hcb_bound(n: usize, d: usize) -> Result<BigRational> {
    if n == 0 || n > d {
        return domain(format!("need 1 <= N <= d, got N={n}, d={d}"));
    }
    Ok(int(n as i64) * int((d - n + 1) as i64) / int(d as i64))
}

/// Equal-weight superposition of all single-occupancy configurations.
pub fn hcb_delocalized_state(d: usize, n: usize) -> Result<PureState> {
    let bound = to_f64(&hcb_bound(n, d)?);
    let zero = PureState::zero(d, n, Statistics::Hcb)?;
    let dim = zero.dim();
    let amps = DVector::from_element(dim, C64::new(1.0 / (dim as f64).sqrt(), 0.0));
    let psi = PureState::new(d, n, Statistics::Hcb, amps)?;
    let rho = one_body_rdm(&psi)?;
    if (rho.nons()[0] - bound).abs() > 1e-9 {
        return Err(PinError::InternalConsistency(format!(
            "top occupation {} misses the bound {bound}",
            rho.nons()[0]
        )));
    }
    if n < d {
        let unbiased = (0..d).all(|j| (rho.nos()[(j, 0)].norm() - 1.0 / (d as f64).sqrt()).abs() <= 1e-9);
        if !unbiased {
            return Err(PinError::InternalConsistency("top orbital is not unbiased".into()));
        }
    }
    Ok(psi)
}

/// Restart statistics of the brute-force search.
#[derive(Clone, Debug, Serialize)]
pub struct HcbSearch {
    pub best: f64,
    pub best_restart: usize,
    pub values: Vec<f64>,
}

/// Multi-start alternating ascent of the largest occupation over normalized
/// hard-core boson states: the top natural orbital and the top eigenvector of
/// its number operator are updated in turn.
pub fn hcb_max_occupation_bruteforce(d: usize, n: usize, restarts: usize, seed: u64) -> Result<HcbSearch> {
    let dim = PureState::zero(d, n, Statistics::Hcb)?.dim();
    if dim > 200 {
        return domain(format!("C({d},{n}) = {dim} exceeds the brute-force limit of 200"));
    }
    if restarts == 0 {
        return domain("at least one restart is needed");
    }
    let mut values = Vec::with_capacity(restarts);
    for k in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let start = random_state_with(d, n, Statistics::Hcb, &mut rng)?;
        values.push(ascend(start)?);
    }
    let (best_restart, best) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    Ok(HcbSearch { best, best_restart, values })
}

/// Top occupation and the projector onto its orbital as a one-body operator.
fn top_occupation(psi: &PureState) -> Result<(f64, OneBodyOperator)> {
    let rho = one_body_rdm(psi)?;
    let phi = rho.nos().column(0).into_owned();
    Ok((rho.nons()[0], OneBodyOperator::new(&phi * phi.adjoint())?))
}

/// Fock-space matrix of a one-body operator.
fn fock_matrix(template: &PureState, op: &OneBodyOperator) -> Result<CMatrix> {
    let dim = template.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut e = PureState::zero(template.d(), template.n(), template.statistics())?;
        e.amplitudes_mut()[k] = C64::new(1.0, 0.0);
        m.set_column(k, e.apply_one_body(op)?.amplitudes());
    }
    Ok(m)
}

fn ascend(mut psi: PureState) -> Result<f64> {
    let (mut value, mut op) = top_occupation(&psi)?;
    for _ in 0..1000 {
        let (_, vecs) = eigh_descending(&fock_matrix(&psi, &op)?);
        let next = PureState::new(psi.d(), psi.n(), psi.statistics(), vecs.column(0).into_owned())?;
        let (v, o) = top_occupation(&next)?;
        if v <= value + 1e-14 {
            value = value.max(v);
            break;
        }
        psi = next;
        value = v;
        op = o;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::rdm_matrix;

    fn qubit(terms: &[(&[usize], f64)]) -> PureState {
        let r = terms[0].0.len();
        let t: Vec<(Vec<usize>, C64)> = terms.iter().map(|(l, a)| (l.to_vec(), C64::new(*a, 0.0))).collect();
        PureState::from_terms(2, r, Statistics::Qubit, &t).unwrap().normalize().unwrap()
    }

    fn ghz() -> PureState {
        qubit(&[(&[1, 1, 1], 1.0), (&[2, 2, 2], 1.0)])
    }

    fn w() -> PureState {
        qubit(&[(&[2, 1, 1], 1.0), (&[1, 2, 1], 1.0), (&[1, 1, 2], 1.0)])
    }

    #[test]
    fn marginal_spectra() {
        for (psi, want) in [(ghz(), 0.5), (w(), 1.0 / 3.0)] {
            let m = qubit_marginals(&psi).unwrap();
            for &(a, b) in &m.spectra.pairs {
                assert!((b - want).abs() < 1e-12 && (a - (1.0 - want)).abs() < 1e-12);
            }
        }
        let prod = qubit(&[(&[1, 1, 1], 1.0)]);
        assert!(qubit_marginals(&prod).unwrap().spectra.pairs.iter().all(|&(a, b)| a == 1.0 && b == 0.0));
    }

    #[test]
    fn polygon_values() {
        let g = higuchi_check(&qubit_marginals(&ghz()).unwrap().spectra);
        assert!(g.iter().all(|x| (x - 0.5).abs() < 1e-12));
        let wv = higuchi_check(&qubit_marginals(&w()).unwrap().spectra);
        assert!(wv.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
        let v = higuchi_check(&QubitSpectra::from_smaller(&[0.4, 0.2, 0.2]).unwrap());
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 0.4).abs() < 1e-15 && (v[2] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn pinned_three_qubit_state() {
        let psi = pinned_qubit_state(0.6f64.sqrt(), &[0.2f64.sqrt(), 0.2f64.sqrt()]).unwrap();
        let r = qubit_selection_check(&psi, 1, 1e-9, 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.support.len(), 3);
        assert_eq!(r.allowed, vec![vec![1, 1, 1], vec![2, 1, 2], vec![2, 2, 1]]);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn ghz_is_not_pinned() {
        assert!(matches!(qubit_selection_check(&ghz(), 1, 1e-9, 1e-10), Err(PinError::Precondition(_))));
    }

    #[test]
    fn invalid_spectra_rejected() {
        assert!(QubitSpectra::new(vec![(0.7, 0.2)]).is_err());
        assert!(QubitSpectra::from_smaller(&[0.6]).is_err());
    }

    #[test]
    fn boson_states() {
        let c = boson_product_state(&[3.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.n(), 3);
        assert_eq!(c.amplitudes()[0], C64::new(1.0, 0.0));
        let rho = rdm_matrix(&boson_product_state(&[1.0, 1.0]).unwrap()).unwrap();
        assert!((rho - CMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(boson_product_state(&[2.0, -0.5, 0.5]).is_err());
        assert!(boson_product_state(&[0.5, 0.2]).is_err());
    }

    #[test]
    fn hcb_bound_values() {
        assert_eq!(hcb_bound(2, 4).unwrap(), int(3) / int(2));
        assert_eq!(hcb_bound(1, 7).unwrap(), int(1));
        assert_eq!(hcb_bound(5, 5).unwrap(), int(1));
        assert!(hcb_bound(0, 3).is_err());
    }

    #[test]
    fn delocalized_states() {
        let psi = hcb_delocalized_state(4, 2).unwrap();
        assert!((one_body_rdm(&psi).unwrap().nons()[0] - 1.5).abs() < 1e-12);
        let single = hcb_delocalized_state(3, 1).unwrap();
        assert!(single.amplitudes().iter().all(|a| (a.re - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        let full = hcb_delocalized_state(3, 3).unwrap();
        assert!(one_body_rdm(&full).unwrap().nons().iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bruteforce_matches_bound() {
        let s = hcb_max_occupation_bruteforce(4, 2, 4, 1).unwrap();
        assert!((s.best - 1.5).abs() < 1e-6, "{}", s.best);
        assert_eq!(hcb_max_occupation_bruteforce(3, 3, 2, 1).unwrap().best, 1.0);
    }
}
