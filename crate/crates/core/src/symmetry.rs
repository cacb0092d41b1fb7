//! Local symmetry algebras of fermionic states.
//!
//! `s_psi` is the real space of Hermitian `h` with `h^ psi = lambda psi` for
//! real `lambda`. Its diagonal part in a natural basis is described by
//! vectors `l` with `l . (n_i - n) = 0` on the support.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::combinat::DEFAULT_EPS_DEG;
use crate::constraints::label_vertex;
use crate::error::{PinError, Result};
use crate::fockstate::{OneBodyOperator, PureState, Statistics};
use crate::linalg::{
    from_hermitian_coords, hermitian_basis, hermitian_coords, max_offdiag, row_space_and_null, trace_inner, CMatrix,
    C64, I,
};
use crate::rdm::{dmu_image, natural_decomposition, rdm_matrix, support, to_natural_basis, RANK_FLOOR, RANK_TOL};

/// Seed for the generic elements drawn inside [`adapted_basis`].
const GENERIC_SEED: u64 = 0x5eed_ad47;

#[derive(Clone, Debug)]
pub struct SymmetrySpace {
    /// Trace-orthonormal Hermitian generators.
    pub generators: Vec<CMatrix>,
    /// `lambda` with `h^ psi = lambda psi`, per generator.
    pub eigenvalues: Vec<f64>,
}

impl SymmetrySpace {
    pub fn dim(&self) -> usize {
        self.generators.len()
    }
}

fn require_second_quantized(psi: &PureState) -> Result<()> {
    if matches!(psi.statistics(), Statistics::Fermion | Statistics::Hcb) {
        Ok(())
    } else {
        Err(PinError::Unsupported(format!(
            "symmetry algebras need fermion or hcb statistics, not {}",
            psi.statistics().name()
        )))
    }
}

/// `h^ psi` for a Hermitian `h` that is trusted to be Hermitian.
fn act(h: &CMatrix, psi: &PureState) -> Result<PureState> {
    psi.apply_one_body(&OneBodyOperator::new(h.clone())?)
}

/// `|| h^ psi - <psi|h^ psi> psi || / ||psi||` and the eigenvalue.
pub fn symmetry_residual(h: &CMatrix, psi: &PureState) -> Result<(f64, f64)> {
    let psi = psi.normalize()?;
    let hpsi = act(h, &psi)?;
    let lambda = psi.inner(&hpsi)?;
    let r = hpsi.add_scaled(&psi, -lambda)?;
    Ok((r.norm(), lambda.re))
}

pub fn symmetry_algebra(psi: &PureState) -> Result<SymmetrySpace> {
    require_second_quantized(psi)?;
    let psi = psi.normalize()?;
    let d = psi.d();
    let basis = hermitian_basis(d);
    let dim = psi.dim();
    let mut m = DMatrix::<f64>::zeros(2 * dim, d * d);
    for (col, b) in basis.iter().enumerate() {
        let hpsi = act(b, &psi)?;
        let lambda = psi.inner(&hpsi)?;
        let proj = hpsi.add_scaled(&psi, -lambda)?;
        for (k, z) in proj.amplitudes().iter().enumerate() {
            m[(2 * k, col)] = z.re;
            m[(2 * k + 1, col)] = z.im;
        }
    }
    let (_, null) = row_space_and_null(&m, RANK_TOL, RANK_FLOOR);
    let generators: Vec<CMatrix> = null.iter().map(|v| from_hermitian_coords(d, v.as_slice())).collect();
    let eigenvalues = generators
        .iter()
        .map(|g| Ok(psi.inner(&act(g, &psi)?)?.re))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SymmetrySpace { generators, eigenvalues })
}

/// Dimension bookkeeping for the image of `dmu` against `s_psi`.
#[derive(Clone, Debug, Serialize)]
pub struct TangentSplit {
    pub d: usize,
    pub n: usize,
    pub image_dim: usize,
    pub symmetry_dim: usize,
    pub max_cross_inner: f64,
}

impl TangentSplit {
    pub fn holds(&self, tol: f64) -> bool {
        self.image_dim + self.symmetry_dim == self.d * self.d && self.max_cross_inner <= tol
    }
}

/// Checks that the image of `dmu` and `s_psi` are complementary and
/// mutually trace-orthogonal.
pub fn tangent_split(psi: &PureState) -> Result<TangentSplit> {
    let image = dmu_image(psi)?;
    let sym = symmetry_algebra(psi)?;
    let mut worst: f64 = 0.0;
    for a in &image.basis {
        for g in &sym.generators {
            worst = worst.max(trace_inner(a, g).abs());
        }
    }
    Ok(TangentSplit {
        d: psi.d(),
        n: psi.n(),
        image_dim: image.dim(),
        symmetry_dim: sym.dim(),
        max_cross_inner: worst,
    })
}

#[derive(Clone, Debug)]
pub struct DiagonalSymmetrySpace {
    /// Orthonormal basis of admissible `l` vectors.
    pub l_vectors: Vec<DVector<f64>>,
    /// The occupation vector `n` (diagonal of the density) used.
    pub occupations: Vec<f64>,
}

impl DiagonalSymmetrySpace {
    pub fn dim(&self) -> usize {
        self.l_vectors.len()
    }

    /// Whether `v` is in the span, to within `tol` in Euclidean norm.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        let v = DVector::from_column_slice(v);
        let proj = self.l_vectors.iter().fold(DVector::zeros(v.len()), |acc, l| acc + l * l.dot(&v));
        (v - proj).norm() <= tol
    }

    /// `max_l |l . (n_i - n)|` for a 0/1 occupation vector.
    pub fn defect(&self, vertex: &[f64]) -> f64 {
        self.l_vectors
            .iter()
            .map(|l| l.iter().zip(vertex.iter().zip(&self.occupations)).map(|(a, (x, m))| a * (x - m)).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

fn diagonal_occupations(psi: &PureState) -> Result<Vec<f64>> {
    let rho = rdm_matrix(psi)?;
    Ok((0..psi.d()).map(|j| rho[(j, j)].re).collect())
}

/// Nullspace of the rows `n_i - n` over the support of `psi_no`.
pub fn diagonal_symmetry_generators(psi_no: &PureState, threshold: f64) -> Result<DiagonalSymmetrySpace> {
    require_second_quantized(psi_no)?;
    let d = psi_no.d();
    let occupations = diagonal_occupations(psi_no)?;
    let supp = support(psi_no, threshold);
    let mut rows = DMatrix::<f64>::zeros(supp.len(), d);
    for (r, &k) in supp.indices.iter().enumerate() {
        let v = label_vertex(psi_no, k)?.as_f64();
        for j in 0..d {
            rows[(r, j)] = v[j] - occupations[j];
        }
    }
    let (_, null) = row_space_and_null(&rows, RANK_TOL, RANK_FLOOR);
    Ok(DiagonalSymmetrySpace { l_vectors: null, occupations })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabiliserReport {
    pub holds: bool,
    pub l_space_dim: usize,
    /// Largest `|l . (n_i - n)|` over the support.
    pub support_defect: f64,
    /// Supported labels that the l-space does not allow.
    pub violations: Vec<Vec<usize>>,
    /// Labels the l-space allows that carry no weight.
    pub allowed_but_absent: Vec<Vec<usize>>,
}

/// Compares a support with an l-space: every supported configuration must
/// be l-orthogonal; unsupported l-orthogonal ones are listed, not failed.
pub fn check_stabiliser_inclusion(
    space: &DiagonalSymmetrySpace,
    psi: &PureState,
    supported: &[usize],
    tol: f64,
) -> Result<StabiliserReport> {
    let mut violations = Vec::new();
    let mut allowed_but_absent = Vec::new();
    let mut support_defect: f64 = 0.0;
    for k in 0..psi.dim() {
        let defect = space.defect(&label_vertex(psi, k)?.as_f64());
        let inside = supported.contains(&k);
        if inside {
            support_defect = support_defect.max(defect);
            if defect > tol {
                violations.push(psi.label(k));
            }
        } else if defect <= tol {
            allowed_but_absent.push(psi.label(k));
        }
    }
    Ok(StabiliserReport {
        holds: violations.is_empty() && support_defect <= tol,
        l_space_dim: space.dim(),
        support_defect,
        violations,
        allowed_but_absent,
    })
}

pub fn verify_stabiliser_selection(psi_no: &PureState, threshold: f64) -> Result<StabiliserReport> {
    let space = diagonal_symmetry_generators(psi_no, threshold)?;
    let supp = support(psi_no, threshold);
    check_stabiliser_inclusion(&space, psi_no, &supp.indices, 1e-9)
}

/// Basis of `{ g in span(gens) : [g, x] = 0 for all x in others }`.
fn centralizer(gens: &[CMatrix], others: &[CMatrix]) -> Vec<CMatrix> {
    if gens.is_empty() {
        return Vec::new();
    }
    let d = gens[0].nrows();
    let mut m = DMatrix::<f64>::zeros(others.len() * d * d, gens.len());
    for (o, x) in others.iter().enumerate() {
        for (k, g) in gens.iter().enumerate() {
            // i[g, x] is Hermitian
            let c = (g * x - x * g) * I;
            let coords = hermitian_coords(&c);
            for (r, v) in coords.iter().enumerate() {
                m[(o * d * d + r, k)] = *v;
            }
        }
    }
    let (_, null) = row_space_and_null(&m, RANK_TOL, RANK_FLOOR);
    null.iter()
        .map(|c| {
            c.iter()
                .zip(gens)
                .fold(CMatrix::zeros(d, d), |acc, (w, g)| acc + g * C64::new(*w, 0.0))
        })
        .collect()
}

fn generic_combination(gens: &[CMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    let d = gens[0].nrows();
    gens.iter().fold(CMatrix::zeros(d, d), |acc, g| {
        let w: f64 = StandardNormal.sample(rng);
        acc + g * C64::new(w, 0.0)
    })
}

fn is_diagonal(m: &CMatrix, tol: f64) -> bool {
    max_offdiag(m) <= tol
}

#[derive(Clone, Debug)]
pub struct AdaptedBasis {
    /// Columns are the adapted natural orbitals in the input basis.
    pub unitary: CMatrix,
    /// The state expanded in the adapted orbitals.
    pub state: PureState,
    /// Descending natural occupation numbers.
    pub nons: Vec<f64>,
    /// A maximal commuting family of symmetry generators, expressed in the
    /// adapted basis; all diagonal.
    pub torus: Vec<CMatrix>,
}

/// Natural orbitals in which a maximal commuting family of symmetry
/// generators is simultaneously diagonal.
///
/// Starts from the diagonal symmetries of the natural basis. If their
/// centralizer in `s_psi` is larger than they are, a generic element of the
/// centralizer fixes a maximal abelian subalgebra containing them, and a
/// generic element of that subalgebra is diagonalized inside each degenerate
/// cluster.
pub fn adapted_basis(psi: &PureState, eps_deg: f64) -> Result<AdaptedBasis> {
    require_second_quantized(psi)?;
    let (psi_no, rho) = to_natural_basis(psi, eps_deg)?;
    let d = psi.d();
    let sym = symmetry_algebra(&psi_no)?;

    // diagonal members of s_psi
    let diag_basis: Vec<CMatrix> = (0..d)
        .map(|j| {
            let mut m = CMatrix::zeros(d, d);
            m[(j, j)] = C64::new(1.0, 0.0);
            m
        })
        .collect();
    let diag_sym = intersect(&sym.generators, &diag_basis);
    let z = centralizer(&sym.generators, &diag_sym);

    let mut rng = ChaCha8Rng::seed_from_u64(GENERIC_SEED);
    let torus_no: Vec<CMatrix> = if z.len() <= diag_sym.len() || z.is_empty() {
        diag_sym.clone()
    } else {
        let x = generic_combination(&z, &mut rng);
        centralizer(&z, &[x])
    };

    let mut w = CMatrix::identity(d, d);
    if !torus_no.is_empty() && !torus_no.iter().all(|t| is_diagonal(t, 1e-10)) {
        let t = generic_combination(&torus_no, &mut rng);
        for cluster in rho.clusters() {
            if cluster.len() < 2 {
                continue;
            }
            let (first, k) = (cluster[0], cluster.len());
            let block = t.view((first, first), (k, k)).into_owned();
            let (_, vecs) = natural_decomposition(&block, 1e-10);
            w.view_mut((first, first), (k, k)).copy_from(&vecs);
        }
    }

    let state = psi_no.change_basis(&w.adjoint())?;
    let torus: Vec<CMatrix> = torus_no.iter().map(|t| w.adjoint() * t * &w).collect();
    for (k, t) in torus.iter().enumerate() {
        let off = max_offdiag(t);
        if off > 1e-8 {
            return Err(PinError::Numerical(format!(
                "commuting generator {k} keeps off-diagonal weight {off:.3e} after diagonalization \
                 (torus dimension {}, symmetry dimension {})",
                torus.len(),
                sym.dim()
            )));
        }
    }
    Ok(AdaptedBasis { unitary: rho.nos() * w, state, nons: rho.nons().to_vec(), torus })
}

/// Orthonormal basis of `span(a) ∩ span(b)` for trace-orthonormal inputs.
fn intersect(a: &[CMatrix], b: &[CMatrix]) -> Vec<CMatrix> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let d = a[0].nrows();
    // x = sum s_k a_k = sum t_m b_m  <=>  [A | -B] (s, t) = 0
    let mut m = DMatrix::<f64>::zeros(d * d, a.len() + b.len());
    for (k, g) in a.iter().chain(b).enumerate() {
        let coords = hermitian_coords(g);
        let sign = if k < a.len() { 1.0 } else { -1.0 };
        for (r, v) in coords.iter().enumerate() {
            m[(r, k)] = sign * v;
        }
    }
    let (_, null) = row_space_and_null(&m, RANK_TOL, RANK_FLOOR);
    let vecs: Vec<DVector<f64>> = null
        .iter()
        .map(|c| {
            let x = c.rows(0, a.len()).iter().zip(a).fold(CMatrix::zeros(d, d), |acc, (w, g)| acc + g * C64::new(*w, 0.0));
            hermitian_coords(&x)
        })
        .collect();
    if vecs.is_empty() {
        return Vec::new();
    }
    let mat = DMatrix::from_columns(&vecs).transpose();
    let (range, _) = row_space_and_null(&mat, RANK_TOL, RANK_FLOOR);
    range.iter().map(|v| from_hermitian_coords(d, v.as_slice())).collect()
}

/// Convenience: symmetry algebra of the natural expansion with defaults.
pub fn natural_symmetry(psi: &PureState) -> Result<(PureState, SymmetrySpace)> {
    let (psi_no, _) = to_natural_basis(psi, DEFAULT_EPS_DEG)?;
    let sym = symmetry_algebra(&psi_no)?;
    Ok((psi_no, sym))
}
