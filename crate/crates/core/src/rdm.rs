//! One-body reduced density operators, natural orbitals, supports and the
//! image of the derivative of the state-to-density map.

use nalgebra::{DMatrix, DVector};

use crate::combinat::{degenerate_clusters, Configuration, DEFAULT_EPS_DEG};
use crate::error::{domain, PinError, Result};
use crate::fockstate::{for_each_hop, MaskTable, PureState, Statistics};
use crate::linalg::{
    eigh_descending, fix_phase, from_hermitian_coords, hermitian_coords, max_offdiag, row_space_and_null, CMatrix,
    C64, I, ZERO,
};

/// Default relative amplitude threshold for natural supports.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-10;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Absolute floor under [`RANK_TOL`], for maps that vanish up to round-off.
pub const RANK_FLOOR: f64 = 1e-10;

/// Hermitian one-body density with its descending spectrum and eigenvectors.
#[derive(Clone, Debug)]
pub struct OneBodyDensity {
    matrix: CMatrix,
    nons: Vec<f64>,
    nos: CMatrix,
    eps_deg: f64,
}

impl OneBodyDensity {
    pub fn from_matrix(matrix: CMatrix, eps_deg: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return domain("density matrix must be square");
        }
        let (nons, nos) = natural_decomposition(&matrix, eps_deg);
        Ok(OneBodyDensity { matrix, nons, nos, eps_deg })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Natural occupation numbers, descending.
    pub fn nons(&self) -> &[f64] {
        &self.nons
    }

    /// Natural orbitals as columns.
    pub fn nos(&self) -> &CMatrix {
        &self.nos
    }

    pub fn eps_deg(&self) -> f64 {
        self.eps_deg
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_degenerate(&self) -> bool {
        degenerate_clusters(&self.nons, self.eps_deg).iter().any(|c| c.len() > 1)
    }

    pub fn clusters(&self) -> Vec<Vec<usize>> {
        degenerate_clusters(&self.nons, self.eps_deg)
    }

    /// `|| rho * nos - nos * diag(nons) ||_max`.
    pub fn eigen_residual(&self) -> f64 {
        let diag = CMatrix::from_diagonal(&DVector::from_iterator(
            self.nons.len(),
            self.nons.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let r = &self.matrix * &self.nos - &self.nos * diag;
        r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Raw density matrix `rho_jl = <psi| f†_l f_j |psi>` for a normalized copy
/// of `psi`. Qubit states need [`subsystem_rdm`].
pub fn rdm_matrix(psi: &PureState) -> Result<CMatrix> {
    let psi = psi.normalize()?;
    let d = psi.d();
    match psi.statistics() {
        Statistics::Fermion | Statistics::Hcb => {
            let table = MaskTable::new(d, psi.n())?;
            let fermionic = psi.statistics() == Statistics::Fermion;
            let amps = psi.amplitudes();
            let mut rho = CMatrix::zeros(d, d);
            for (k, &mask) in table.masks.iter().enumerate() {
                let a = amps[k];
                if a == ZERO {
                    continue;
                }
                for_each_hop(mask, d, fermionic, |j, l, target, sign| {
                    // <psi| f†_j f_l |psi> is the (l, j) entry
                    rho[(l, j)] += amps[table.index(target)].conj() * a * sign;
                });
            }
            Ok(rho)
        }
        Statistics::BosonProduct => {
            let a = psi.amplitudes();
            let n = psi.n() as f64;
            if psi.n() == 1 {
                // a single particle: the state is its own one-body density
                Ok(a * a.adjoint())
            } else {
                // the terms |j..j> are mutually orthogonal after tracing out
                // any N-1 factors, so only the diagonal survives
                Ok(CMatrix::from_diagonal(&DVector::from_iterator(
                    d,
                    a.iter().map(|z| C64::new(n * z.norm_sqr(), 0.0)),
                )))
            }
        }
        Statistics::Qubit => Err(PinError::Unsupported(
            "qubit states have one marginal per subsystem; use subsystem_rdm".into(),
        )),
    }
}

pub fn one_body_rdm(psi: &PureState) -> Result<OneBodyDensity> {
    one_body_rdm_with(psi, DEFAULT_EPS_DEG)
}

pub fn one_body_rdm_with(psi: &PureState, eps_deg: f64) -> Result<OneBodyDensity> {
    OneBodyDensity::from_matrix(rdm_matrix(psi)?, eps_deg)
}

/// Reduced density of subsystem `site` (1-based) of a multipartite state.
pub fn subsystem_rdm(psi: &PureState, site: usize, eps_deg: f64) -> Result<OneBodyDensity> {
    if psi.statistics() != Statistics::Qubit {
        return Err(PinError::Unsupported("subsystem marginals need qubit statistics".into()));
    }
    if site == 0 || site > psi.n() {
        return domain(format!("subsystem {site} outside 1..={}", psi.n()));
    }
    let psi = psi.normalize()?;
    let d = psi.d();
    let stride = d.pow((psi.n() - site) as u32);
    let amps = psi.amplitudes();
    let mut rho = CMatrix::zeros(d, d);
    for k in 0..psi.dim() {
        let a = amps[k];
        if a == ZERO {
            continue;
        }
        let b = (k / stride) % d;
        let base = k - b * stride;
        for row in 0..d {
            // rho_{row,b} = sum over the rest of psi[..row..] conj(psi[..b..])
            rho[(row, b)] += amps[base + row * stride] * a.conj();
        }
    }
    OneBodyDensity::from_matrix(rho, eps_deg)
}

/// Descending eigen-decomposition with a reproducible basis inside
/// degenerate clusters: the probe `diag(1, ..., d)` is compressed to the
/// cluster and diagonalized, its eigenvectors taken in ascending order.
/// Every eigenvector is phase-fixed.
pub fn natural_decomposition(rho: &CMatrix, eps_deg: f64) -> (Vec<f64>, CMatrix) {
    let d = rho.nrows();
    let (values, mut vectors) = eigh_descending(rho);
    let probe = CMatrix::from_diagonal(&DVector::from_iterator(d, (1..=d).map(|k| C64::new(k as f64, 0.0))));
    for cluster in degenerate_clusters(&values, eps_deg) {
        if cluster.len() < 2 {
            continue;
        }
        let first = cluster[0];
        let k = cluster.len();
        let block = vectors.columns(first, k).into_owned();
        let projected = block.adjoint() * &probe * &block;
        let (_, w) = eigh_descending(&projected);
        let rotated = &block * w;
        for c in 0..k {
            // ascending probe order
            vectors.set_column(first + c, &rotated.column(k - 1 - c));
        }
    }
    for c in 0..d {
        let mut v = vectors.column(c).into_owned();
        fix_phase(&mut v);
        vectors.set_column(c, &v);
    }
    (values, vectors)
}

/// Re-expresses `psi` in its natural orbitals. The returned density must be
/// diagonal to within `1e-8`.
pub fn to_natural_basis(psi: &PureState, eps_deg: f64) -> Result<(PureState, OneBodyDensity)> {
    if !matches!(psi.statistics(), Statistics::Fermion | Statistics::Hcb) {
        return Err(PinError::Unsupported(format!(
            "natural-orbital expansion needs fermion or hcb statistics, not {}",
            psi.statistics().name()
        )));
    }
    let rho = one_body_rdm_with(psi, eps_deg)?;
    let rotated = psi.normalize()?.change_basis(&rho.nos().adjoint())?;
    let new_rho = one_body_rdm_with(&rotated, eps_deg)?;
    let off = max_offdiag(new_rho.matrix());
    if off > 1e-8 {
        return Err(PinError::InternalConsistency(format!(
            "density in the natural basis has off-diagonal entry {off:.3e}"
        )));
    }
    Ok((rotated, new_rho))
}

/// Basis labels carrying non-negligible weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    pub labels: Vec<Vec<usize>>,
    pub indices: Vec<usize>,
    pub threshold: f64,
}

impl SupportSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &[usize]) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    /// The labels as configurations; only meaningful for fermion/hcb states.
    pub fn configurations(&self) -> Vec<Configuration> {
        self.labels.iter().map(|l| Configuration::new_unchecked(l.clone())).collect()
    }
}

/// Labels whose amplitude exceeds `threshold * ||psi||` in magnitude.
pub fn support(psi: &PureState, threshold: f64) -> SupportSet {
    let cut = threshold * psi.norm();
    let indices: Vec<usize> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > cut)
        .map(|(k, _)| k)
        .collect();
    SupportSet { labels: indices.iter().map(|&k| psi.label(k)).collect(), indices, threshold }
}

/// Orthonormal basis (trace inner product) of a space of Hermitian matrices.
#[derive(Clone, Debug)]
pub struct TangentImage {
    pub basis: Vec<CMatrix>,
}

impl TangentImage {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// `G_c` with entries `<psi| f†_l f_j |c>` for every basis state `c`, indexed
/// like the amplitudes.
pub(crate) fn transition_matrices(psi: &PureState) -> Result<Vec<CMatrix>> {
    let d = psi.d();
    let table = MaskTable::new(d, psi.n())?;
    let fermionic = psi.statistics() == Statistics::Fermion;
    let amps = psi.amplitudes();
    Ok(table
        .masks
        .iter()
        .map(|&mask| {
            let mut g = CMatrix::zeros(d, d);
            for_each_hop(mask, d, fermionic, |j, l, target, sign| {
                g[(l, j)] += amps[table.index(target)].conj() * sign;
            });
            g
        })
        .collect())
}

/// Image of the derivative of `psi -> rho` restricted to the unit sphere.
///
/// Tangent directions are `Phi - <psi|Phi> psi` and `i` times that, for `Phi`
/// running over the configuration basis; each maps to
/// `G + G†` with `G_jl = <psi| f†_l f_j |Phi>`.
pub fn dmu_image(psi: &PureState) -> Result<TangentImage> {
    if !matches!(psi.statistics(), Statistics::Fermion | Statistics::Hcb) {
        return Err(PinError::Unsupported("dmu_image needs fermion or hcb statistics".into()));
    }
    let psi = psi.normalize()?;
    let d = psi.d();
    let rho = rdm_matrix(&psi)?;
    let gs = transition_matrices(&psi)?;
    let mut rows = DMatrix::<f64>::zeros(2 * gs.len(), d * d);
    for (k, g) in gs.iter().enumerate() {
        let g = g - &rho * psi.amplitudes()[k].conj();
        let re = &g + g.adjoint();
        let im = (&g - g.adjoint()) * I;
        rows.set_row(2 * k, &hermitian_coords(&re).transpose());
        rows.set_row(2 * k + 1, &hermitian_coords(&im).transpose());
    }
    let (range, _) = row_space_and_null(&rows, RANK_TOL, RANK_FLOOR);
    Ok(TangentImage { basis: range.iter().map(|v| from_hermitian_coords(d, v.as_slice())).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::random_state;
    use crate::linalg::{random_unitary, trace_inner, unitarity_defect, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bd_state(a: f64, b: f64, c: f64) -> PureState {
        PureState::from_terms(
            6,
            3,
            Statistics::Fermion,
            &[
                (vec![1, 2, 3], C64::new(a, 0.0)),
                (vec![1, 4, 5], C64::new(b, 0.0)),
                (vec![2, 4, 6], C64::new(c, 0.0)),
            ],
        )
        .unwrap()
    }

    /// Independent oracle: `<psi| f†_l f_j |psi>` from explicit operator
    /// strings acting on sorted index lists.
    fn oracle_element(psi: &PureState, j: usize, l: usize) -> C64 {
        let mut acc = ZERO;
        for k in 0..psi.dim() {
            let label = psi.label(k);
            // annihilate j (1-based) then create l
            let Some(pos) = label.iter().position(|&x| x == j) else { continue };
            let mut sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            let mut rest = label.clone();
            rest.remove(pos);
            if rest.contains(&l) {
                continue;
            }
            let ins = rest.iter().filter(|&&x| x < l).count();
            if ins % 2 == 1 {
                sign = -sign;
            }
            rest.insert(ins, l);
            acc += psi.amplitude(&rest).unwrap().conj() * psi.amplitudes()[k] * sign;
        }
        acc
    }

    #[test]
    fn single_determinant_density() {
        let psi = PureState::basis_state(6, 3, Statistics::Fermion, &[1, 2, 3]).unwrap();
        let rho = one_body_rdm(&psi).unwrap();
        assert_eq!(rho.nons(), &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(max_offdiag(rho.matrix()) == 0.0);
    }

    #[test]
    fn bd_three_term_density_is_diagonal() {
        let (a, b, c) = (0.8f64, 0.5f64, (1.0f64 - 0.64 - 0.25).sqrt());
        let psi = bd_state(a, b, c);
        let rho = rdm_matrix(&psi).unwrap();
        let expected = [a * a + b * b, a * a + c * c, a * a, b * b + c * c, b * b, c * c];
        for j in 0..6 {
            for l in 0..6 {
                let want = if j == l { expected[j] } else { 0.0 };
                assert!((rho[(j, l)] - C64::new(want, 0.0)).norm() < 1e-14);
                let oracle = oracle_element(&psi, j + 1, l + 1);
                assert!((rho[(j, l)] - oracle).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn density_matches_operator_string_oracle() {
        let psi = random_state(5, 2, Statistics::Fermion, 17).unwrap();
        let rho = rdm_matrix(&psi).unwrap();
        for j in 1..=5 {
            for l in 1..=5 {
                // rho_jl = <psi| f†_l f_j |psi>
                assert!((rho[(j - 1, l - 1)] - oracle_element(&psi, j, l)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn ghz_subsystem_marginal() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ghz = PureState::from_terms(
            2,
            3,
            Statistics::Qubit,
            &[(vec![1, 1, 1], C64::new(s, 0.0)), (vec![2, 2, 2], C64::new(s, 0.0))],
        )
        .unwrap();
        for site in 1..=3 {
            let rho = subsystem_rdm(&ghz, site, DEFAULT_EPS_DEG).unwrap();
            assert!((rho.matrix() - CMatrix::identity(2, 2) * C64::new(0.5, 0.0)).norm() < 1e-14);
        }
        assert!(one_body_rdm(&ghz).is_err());
    }

    #[test]
    fn subsystem_marginal_of_product_state() {
        // (|1> + |2>)/sqrt2 on site 2, |1> elsewhere: coherence in site 2 only
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::from_terms(
            2,
            3,
            Statistics::Qubit,
            &[(vec![1, 1, 1], C64::new(s, 0.0)), (vec![1, 2, 1], C64::new(0.0, s))],
        )
        .unwrap();
        let rho = subsystem_rdm(&psi, 2, DEFAULT_EPS_DEG).unwrap();
        // rho = |phi><phi| with phi = (1, i)/sqrt2
        assert!((rho.matrix()[(1, 0)] - C64::new(0.0, 0.5)).norm() < 1e-14);
        assert!((rho.nons()[0] - 1.0).abs() < 1e-12);
        let rho1 = subsystem_rdm(&psi, 1, DEFAULT_EPS_DEG).unwrap();
        assert!((rho1.matrix()[(0, 0)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn zero_state_is_rejected() {
        let z = PureState::zero(4, 2, Statistics::Fermion).unwrap();
        assert!(matches!(one_body_rdm(&z), Err(PinError::Domain(_))));
    }

    #[test]
    fn decomposition_examples() {
        let rho = CMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(0.2, 0.0),
            C64::new(0.9, 0.0),
            C64::new(0.5, 0.0),
        ]));
        let (n, u) = natural_decomposition(&rho, DEFAULT_EPS_DEG);
        assert!((n[0] - 0.9).abs() < 1e-15 && (n[1] - 0.5).abs() < 1e-15 && (n[2] - 0.2).abs() < 1e-15);
        assert!((u[(1, 0)] - ONE).norm() < 1e-14);
        assert!((u[(2, 1)] - ONE).norm() < 1e-14);
        assert!((u[(0, 2)] - ONE).norm() < 1e-14);

        // N/d times the identity: the probe fixes the identity basis
        let flat = CMatrix::identity(4, 4) * C64::new(0.5, 0.0);
        let (n, u) = natural_decomposition(&flat, DEFAULT_EPS_DEG);
        assert!(n.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        assert!((u - CMatrix::identity(4, 4)).norm() < 1e-12);

        // 2x2 closed form
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(0.6, 0.0), C64::new(0.1, 0.0), C64::new(0.1, 0.0), C64::new(0.4, 0.0)]);
        let (n, _) = natural_decomposition(&m, DEFAULT_EPS_DEG);
        let (tr, det) = (1.0f64, 0.6 * 0.4 - 0.01);
        let disc = (tr * tr / 4.0 - det).sqrt();
        assert!((n[0] - (0.5 + disc)).abs() < 1e-14);
        assert!((n[1] - (0.5 - disc)).abs() < 1e-14);
        assert!((disc - 0.02f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn natural_basis_of_single_determinant_and_bd_state() {
        let psi = PureState::basis_state(5, 2, Statistics::Fermion, &[2, 4]).unwrap();
        let (rot, rho) = to_natural_basis(&psi, DEFAULT_EPS_DEG).unwrap();
        assert!((rot.amplitude(&[1, 2]).unwrap().norm() - 1.0).abs() < 1e-12);
        assert_eq!(rho.nons(), &[1.0, 1.0, 0.0, 0.0, 0.0]);

        let psi = bd_state(0.8, 0.5, (0.11f64).sqrt());
        let (rot, _) = to_natural_basis(&psi, DEFAULT_EPS_DEG).unwrap();
        // already diagonal and descending: nothing moves
        assert!((rot.amplitudes() - psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn natural_basis_of_random_state() {
        let psi = random_state(4, 2, Statistics::Fermion, 3).unwrap();
        let (rot, rho) = to_natural_basis(&psi, DEFAULT_EPS_DEG).unwrap();
        let again = one_body_rdm(&rot).unwrap();
        assert!(max_offdiag(again.matrix()) < 1e-8);
        for (a, b) in again.nons().iter().zip(rho.nons()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(unitarity_defect(rho.nos()) < 1e-10);
    }

    #[test]
    fn covariance_under_basis_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_state(6, 3, Statistics::Fermion, 9).unwrap();
        let u = random_unitary(6, &mut rng);
        let lhs = rdm_matrix(&psi.change_basis(&u).unwrap()).unwrap();
        let rhs = &u * rdm_matrix(&psi).unwrap() * u.adjoint();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn support_examples() {
        let psi = bd_state(0.8, 0.5, (0.11f64).sqrt());
        let s = support(&psi, DEFAULT_SUPPORT_THRESHOLD);
        assert_eq!(s.labels, vec![vec![1, 2, 3], vec![1, 4, 5], vec![2, 4, 6]]);

        let psi = random_state(7, 3, Statistics::Fermion, 1).unwrap();
        let (rot, _) = to_natural_basis(&psi, DEFAULT_EPS_DEG).unwrap();
        assert_eq!(support(&rot, DEFAULT_SUPPORT_THRESHOLD).len(), 35);

        let tiny = PureState::from_terms(
            4,
            2,
            Statistics::Fermion,
            &[(vec![1, 2], ONE), (vec![3, 4], C64::new(1e-14, 0.0))],
        )
        .unwrap();
        assert_eq!(support(&tiny, DEFAULT_SUPPORT_THRESHOLD).labels, vec![vec![1, 2]]);
    }

    #[test]
    fn tangent_image_dimensions() {
        // single determinant: 2 N (d - N)
        let psi = PureState::basis_state(5, 2, Statistics::Fermion, &[1, 2]).unwrap();
        assert_eq!(dmu_image(&psi).unwrap().dim(), 12);
        // full-support generic state: only the number operator is missing
        let psi = random_state(7, 3, Statistics::Fermion, 5).unwrap();
        assert_eq!(dmu_image(&psi).unwrap().dim(), 48);
        // two fermions in four orbitals always pair up: 9, not 15
        let psi = random_state(4, 2, Statistics::Fermion, 5).unwrap();
        assert_eq!(dmu_image(&psi).unwrap().dim(), 9);
    }

    #[test]
    fn tangent_image_is_orthonormal() {
        let psi = random_state(5, 2, Statistics::Fermion, 8).unwrap();
        let img = dmu_image(&psi).unwrap();
        for (a, x) in img.basis.iter().enumerate() {
            for (b, y) in img.basis.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((trace_inner(x, y) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn boson_product_density() {
        let psi = PureState::new(
            2,
            2,
            Statistics::BosonProduct,
            DVector::from_vec(vec![C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)]),
        )
        .unwrap();
        let rho = rdm_matrix(&psi).unwrap();
        assert!((rho - CMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
