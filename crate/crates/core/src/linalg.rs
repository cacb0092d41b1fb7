//! Small dense linear-algebra helpers shared by the analysis modules.
//!
//! Hermitian `d x d` matrices are identified with `R^{d^2}` through an
//! orthonormal basis for the trace inner product `<a, b> = Re tr(a b)`, so
//! nullspaces and ranges of real-linear maps can be computed with a real SVD.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; columns of the returned matrix are the eigenvectors.
pub fn eigh_descending(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // symmetrize so round-off in the input cannot leak an anti-Hermitian part
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Multiplies a vector by a phase so that its largest-magnitude component is
/// real and positive. Ties between components go to the lowest index.
pub fn fix_phase(v: &mut DVector<C64>) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (k, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_norm + 1e-12 {
            best = k;
            best_norm = a;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / best_norm;
        *v *= phase;
    }
}

/// Orthonormal basis of the Hermitian `d x d` matrices under `Re tr(a b)`.
/// Diagonal units come first, then for each `j < l` the symmetric and the
/// antisymmetric off-diagonal elements.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(j, j)] = ONE;
        basis.push(m);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for l in (j + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, l)] = C64::new(s, 0.0);
            sym[(l, j)] = C64::new(s, 0.0);
            basis.push(sym);
            let mut anti = CMatrix::zeros(d, d);
            anti[(j, l)] = C64::new(0.0, -s);
            anti[(l, j)] = C64::new(0.0, s);
            basis.push(anti);
        }
    }
    basis
}

/// Coordinates of a Hermitian matrix in [`hermitian_basis`].
pub fn hermitian_coords(h: &CMatrix) -> DVector<f64> {
    let d = h.nrows();
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        out.push(h[(j, j)].re);
    }
    let r2 = std::f64::consts::SQRT_2;
    for j in 0..d {
        for l in (j + 1)..d {
            // h_jl = (x - i y)/sqrt2 for coordinates x (sym) and y (anti)
            let z = (h[(j, l)] + h[(l, j)].conj()) * 0.5;
            out.push(r2 * z.re);
            out.push(-r2 * z.im);
        }
    }
    DVector::from_vec(out)
}

pub fn from_hermitian_coords(d: usize, coords: &[f64]) -> CMatrix {
    let basis = hermitian_basis(d);
    let mut m = CMatrix::zeros(d, d);
    for (b, &x) in basis.iter().zip(coords) {
        if x != 0.0 {
            m += b * C64::new(x, 0.0);
        }
    }
    m
}

/// `Re tr(a b)`.
pub fn trace_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.nrows() {
        for l in 0..a.ncols() {
            acc += (a[(j, l)] * b[(l, j)]).re;
        }
    }
    acc
}

/// Row-space and nullspace of a real matrix. Singular values at or below
/// `max(rel_tol * s_max, abs_tol)` count as zero, so a matrix of pure
/// round-off has full nullity. Both are returned as orthonormal vectors of
/// length `m.ncols()`.
pub fn row_space_and_null(m: &DMatrix<f64>, rel_tol: f64, abs_tol: f64) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let cols = m.ncols();
    if cols == 0 {
        return (Vec::new(), Vec::new());
    }
    // pad with zero rows so the thin SVD yields a full right-singular basis
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::<f64>::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = (rel_tol * smax).max(abs_tol);
    let mut range = Vec::new();
    let mut null = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let v = v_t.row(k).transpose();
        if s > cutoff {
            range.push(v);
        } else {
            null.push(v);
        }
    }
    (range, null)
}

/// `exp(i h)` for Hermitian `h`.
pub fn exp_i_hermitian(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh_descending(h);
    let phases = DVector::from_iterator(vals.len(), vals.iter().map(|&x| C64::from_polar(1.0, x)));
    &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint()
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    (h - h.adjoint()).norm()
}

pub fn max_offdiag(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.nrows() {
        for l in 0..m.ncols() {
            if j != l {
                worst = worst.max(m[(j, l)].norm());
            }
        }
    }
    worst
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(k, k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..k {
        let rc = r[(c, c)];
        let norm = rc.norm();
        if norm > 0.0 {
            let phase = rc / norm;
            for row in 0..k {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(k, k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Permanent by Ryser's formula; fine for the small minors used here.
pub fn permanent(m: &CMatrix) -> C64 {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    let mut total = ZERO;
    for mask in 1u64..(1u64 << n) {
        let mut prod = ONE;
        for row in 0..n {
            let mut s = ZERO;
            for col in 0..n {
                if mask & (1 << col) != 0 {
                    s += m[(row, col)];
                }
            }
            prod *= s;
        }
        let bits = mask.count_ones() as usize;
        if (n - bits) % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    total
}
