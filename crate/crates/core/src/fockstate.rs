//! Pure states of fermions, hard-core bosons, qubits and product-form bosons.
//!
//! Amplitudes are stored densely in the canonical basis order: lexicographic
//! configurations for fermions and hard-core bosons, lexicographic `r`-tuples
//! for qubits, and one amplitude per orbital for product-form bosons. Nothing
//! is ever pruned; the JSON form simply omits exact zeros.
//!
//! Fermionic configuration states are `f†_{i1} ... f†_{iN} |0>` with
//! `i1 < ... < iN`. Under this ordering `f†_j f_l |c>` picks up the sign
//! `(-1)^k` where `k` counts the occupied orbitals of `c` strictly between `j`
//! and `l`. Hard-core bosons use the same combinatorics with every sign `+1`.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinat::{binomial, enumerate_configurations, Configuration};
use crate::error::{domain, PinError, Result};
use crate::linalg::{permanent, unitarity_defect, CMatrix, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistics {
    #[serde(rename = "fermion")]
    Fermion,
    #[serde(rename = "qubit")]
    Qubit,
    #[serde(rename = "boson-product")]
    BosonProduct,
    #[serde(rename = "hcb")]
    Hcb,
}

impl Statistics {
    pub fn name(self) -> &'static str {
        match self {
            Statistics::Fermion => "fermion",
            Statistics::Qubit => "qubit",
            Statistics::BosonProduct => "boson-product",
            Statistics::Hcb => "hcb",
        }
    }

    fn uses_configurations(self) -> bool {
        matches!(self, Statistics::Fermion | Statistics::Hcb)
    }
}

/// Hermitian one-particle operator `h`, acting in second quantization as
/// `sum_{jl} h_jl f†_j f_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneBodyOperator {
    h: CMatrix,
}

impl OneBodyOperator {
    pub fn new(h: CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return domain("one-body operator must be square");
        }
        let defect = crate::linalg::hermiticity_defect(&h);
        if defect > 1e-12 {
            return domain(format!("one-body operator is not Hermitian (defect {defect:.3e})"));
        }
        Ok(OneBodyOperator { h })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// A pure state over a fixed canonical basis. Need not be normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    d: usize,
    n: usize,
    statistics: Statistics,
    amplitudes: DVector<C64>,
}

pub(crate) fn basis_dim(d: usize, n: usize, statistics: Statistics) -> Result<usize> {
    if d == 0 {
        return domain("one-particle dimension must be positive");
    }
    match statistics {
        Statistics::Fermion | Statistics::Hcb => {
            if n > d {
                return domain(format!("particle number {n} exceeds dimension {d}"));
            }
            if d > 63 {
                return domain("at most 63 orbitals are supported");
            }
            Ok(binomial(d, n))
        }
        Statistics::Qubit => {
            if n == 0 {
                return domain("a multipartite state needs at least one subsystem");
            }
            let dim = (d as u128).checked_pow(n as u32).filter(|&x| x <= 1 << 24);
            match dim {
                Some(x) => Ok(x as usize),
                None => domain("multipartite basis too large"),
            }
        }
        Statistics::BosonProduct => {
            if n == 0 {
                return domain("product boson state needs at least one particle");
            }
            Ok(d)
        }
    }
}

impl PureState {
    pub fn new(d: usize, n: usize, statistics: Statistics, amplitudes: DVector<C64>) -> Result<Self> {
        let dim = basis_dim(d, n, statistics)?;
        if amplitudes.len() != dim {
            return domain(format!(
                "expected {dim} amplitudes for d={d}, N={n}, {}; got {}",
                statistics.name(),
                amplitudes.len()
            ));
        }
        Ok(PureState { d, n, statistics, amplitudes })
    }

    pub fn zero(d: usize, n: usize, statistics: Statistics) -> Result<Self> {
        let dim = basis_dim(d, n, statistics)?;
        Ok(PureState { d, n, statistics, amplitudes: DVector::zeros(dim) })
    }

    /// Builds a state from (label, amplitude) pairs; unspecified labels are 0.
    pub fn from_terms(d: usize, n: usize, statistics: Statistics, terms: &[(Vec<usize>, C64)]) -> Result<Self> {
        let mut psi = Self::zero(d, n, statistics)?;
        for (label, amp) in terms {
            let k = psi.index_of(label)?;
            psi.amplitudes[k] += *amp;
        }
        Ok(psi)
    }

    pub fn basis_state(d: usize, n: usize, statistics: Statistics, label: &[usize]) -> Result<Self> {
        Self::from_terms(d, n, statistics, &[(label.to_vec(), C64::new(1.0, 0.0))])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Particle number, or the number of subsystems for qubit statistics.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    /// Configurations of the canonical basis (fermion and hcb only).
    pub fn configurations(&self) -> Result<Vec<Configuration>> {
        if !self.statistics.uses_configurations() {
            return Err(PinError::Unsupported(format!(
                "{} states are not labelled by configurations",
                self.statistics.name()
            )));
        }
        enumerate_configurations(self.d, self.n)
    }

    /// 1-based label of basis index `k`.
    pub fn label(&self, k: usize) -> Vec<usize> {
        match self.statistics {
            Statistics::Fermion | Statistics::Hcb => {
                // walk the lexicographic order without materialising the list
                let mut remaining = k;
                let mut out = Vec::with_capacity(self.n);
                let mut next = 1;
                for slot in 0..self.n {
                    loop {
                        let count = binomial(self.d - next, self.n - slot - 1);
                        if remaining < count {
                            out.push(next);
                            next += 1;
                            break;
                        }
                        remaining -= count;
                        next += 1;
                    }
                }
                out
            }
            Statistics::Qubit => {
                let mut out = vec![0; self.n];
                let mut rest = k;
                for slot in (0..self.n).rev() {
                    out[slot] = rest % self.d + 1;
                    rest /= self.d;
                }
                out
            }
            Statistics::BosonProduct => vec![k + 1],
        }
    }

    pub fn labels(&self) -> Vec<Vec<usize>> {
        (0..self.dim()).map(|k| self.label(k)).collect()
    }

    pub fn index_of(&self, label: &[usize]) -> Result<usize> {
        match self.statistics {
            Statistics::Fermion | Statistics::Hcb => {
                if label.len() != self.n {
                    return domain(format!("label {label:?} does not have {} entries", self.n));
                }
                let c = Configuration::new(label.to_vec(), self.d)?;
                Ok(crate::combinat::configuration_rank(&c, self.d))
            }
            Statistics::Qubit => {
                if label.len() != self.n {
                    return domain(format!("label {label:?} does not have {} entries", self.n));
                }
                let mut k = 0;
                for &t in label {
                    if t == 0 || t > self.d {
                        return domain(format!("label {label:?} has an entry outside 1..={}", self.d));
                    }
                    k = k * self.d + (t - 1);
                }
                Ok(k)
            }
            Statistics::BosonProduct => match label {
                [j] if *j >= 1 && *j <= self.d => Ok(j - 1),
                _ => domain(format!("product boson label {label:?} must be a single orbital in 1..={}", self.d)),
            },
        }
    }

    pub fn amplitude(&self, label: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.index_of(label)?])
    }

    fn check_compatible(&self, other: &PureState) -> Result<()> {
        if self.d != other.d || self.n != other.n || self.statistics != other.statistics {
            return domain(format!(
                "mismatched states: (d={}, N={}, {}) vs (d={}, N={}, {})",
                self.d,
                self.n,
                self.statistics.name(),
                other.d,
                other.n,
                other.statistics.name()
            ));
        }
        Ok(())
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&self) -> Result<PureState> {
        let norm = self.norm();
        if norm == 0.0 {
            return domain("cannot normalize the zero state");
        }
        Ok(self.scaled(C64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> PureState {
        PureState { amplitudes: &self.amplitudes * c, ..self.clone() }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &PureState, c: C64) -> Result<PureState> {
        self.check_compatible(other)?;
        Ok(PureState { amplitudes: &self.amplitudes + &other.amplitudes * c, ..self.clone() })
    }

    fn require_second_quantized(&self, what: &str) -> Result<()> {
        match self.statistics {
            Statistics::Fermion | Statistics::Hcb => Ok(()),
            Statistics::Qubit => Err(PinError::Unsupported(format!(
                "{what} on a qubit state needs a designated subsystem; use the local variant"
            ))),
            Statistics::BosonProduct => Err(PinError::Unsupported(format!(
                "{what} is not available for product-form boson states"
            ))),
        }
    }

    /// `(sum_{jl} h_jl f†_j f_l) |self>`.
    pub fn apply_one_body(&self, h: &OneBodyOperator) -> Result<PureState> {
        self.require_second_quantized("apply_one_body")?;
        if h.dim() != self.d {
            return domain(format!("operator dimension {} does not match d={}", h.dim(), self.d));
        }
        let table = MaskTable::new(self.d, self.n)?;
        let fermionic = self.statistics == Statistics::Fermion;
        let hm = h.matrix();
        let mut out = DVector::<C64>::zeros(self.dim());
        for (k, &mask) in table.masks.iter().enumerate() {
            let a = self.amplitudes[k];
            if a == ZERO {
                continue;
            }
            for_each_hop(mask, self.d, fermionic, |j, l, target, sign| {
                let t = table.index(target);
                out[t] += hm[(j, l)] * a * sign;
            });
        }
        Ok(PureState { amplitudes: out, ..self.clone() })
    }

    /// Amplitudes of `u^{⊗N} |self>` in the canonical basis. Fermions use
    /// `det(u[c', c])`, hard-core bosons the permanent of the same minor,
    /// which is the product expansion projected to single occupancy.
    pub fn change_basis(&self, u: &CMatrix) -> Result<PureState> {
        self.require_second_quantized("change_basis")?;
        self.check_unitary(u)?;
        let configs = self.configurations()?;
        let n = self.n;
        let mut out = DVector::<C64>::zeros(self.dim());
        let fermionic = self.statistics == Statistics::Fermion;
        let mut minor = CMatrix::zeros(n, n);
        for (kp, cp) in configs.iter().enumerate() {
            let mut acc = ZERO;
            for (k, c) in configs.iter().enumerate() {
                let a = self.amplitudes[k];
                if a == ZERO {
                    continue;
                }
                for (r, &row) in cp.indices().iter().enumerate() {
                    for (s, &col) in c.indices().iter().enumerate() {
                        minor[(r, s)] = u[(row - 1, col - 1)];
                    }
                }
                let factor = if n == 0 {
                    C64::new(1.0, 0.0)
                } else if fermionic {
                    minor.clone().determinant()
                } else {
                    permanent(&minor)
                };
                acc += a * factor;
            }
            out[kp] = acc;
        }
        Ok(PureState { amplitudes: out, ..self.clone() })
    }

    fn check_unitary(&self, u: &CMatrix) -> Result<()> {
        if u.nrows() != self.d || u.ncols() != self.d {
            return domain(format!("basis change must be {}x{}", self.d, self.d));
        }
        let defect = unitarity_defect(u);
        if defect > 1e-10 {
            return domain(format!("basis change is not unitary (defect {defect:.3e})"));
        }
        Ok(())
    }

    fn require_multipartite(&self, site: usize) -> Result<()> {
        if self.statistics != Statistics::Qubit {
            return Err(PinError::Unsupported(format!(
                "local operators act on qubit statistics, not {}",
                self.statistics.name()
            )));
        }
        if site == 0 || site > self.n {
            return domain(format!("subsystem {site} outside 1..={}", self.n));
        }
        Ok(())
    }

    /// Applies a `d x d` matrix to subsystem `site` (1-based) of a
    /// multipartite state.
    pub fn apply_local(&self, m: &CMatrix, site: usize) -> Result<PureState> {
        self.require_multipartite(site)?;
        if m.nrows() != self.d || m.ncols() != self.d {
            return domain(format!("local operator must be {}x{}", self.d, self.d));
        }
        let stride = self.d.pow((self.n - site) as u32);
        let mut out = DVector::<C64>::zeros(self.dim());
        for k in 0..self.dim() {
            let a = self.amplitudes[k];
            if a == ZERO {
                continue;
            }
            let b = (k / stride) % self.d;
            let base = k - b * stride;
            for row in 0..self.d {
                out[base + row * stride] += m[(row, b)] * a;
            }
        }
        Ok(PureState { amplitudes: out, ..self.clone() })
    }

    /// `u` acting on subsystem `site` only.
    pub fn change_local_basis(&self, u: &CMatrix, site: usize) -> Result<PureState> {
        self.require_multipartite(site)?;
        self.check_unitary(u)?;
        self.apply_local(u, site)
    }

    pub fn to_json(&self) -> StateFile {
        StateFile {
            d: self.d,
            n: self.n,
            statistics: self.statistics,
            amplitudes: self
                .amplitudes
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != ZERO)
                .map(|(k, a)| AmplitudeEntry { label: self.label(k), re: a.re, im: a.im })
                .collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<PureState> {
        let file: StateFile = serde_json::from_str(s)?;
        file.into_state()
    }

    pub fn load(path: &Path) -> Result<PureState> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Random state with i.i.d. complex standard normal amplitudes, normalized.
pub fn random_state(d: usize, n: usize, statistics: Statistics, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(d, n, statistics, &mut rng)
}

pub fn random_state_with<R: Rng + ?Sized>(d: usize, n: usize, statistics: Statistics, rng: &mut R) -> Result<PureState> {
    let dim = basis_dim(d, n, statistics)?;
    let amps = DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    PureState::new(d, n, statistics, amps)?.normalize()
}

/// Bitmask -> basis index lookup for configuration bases.
pub(crate) struct MaskTable {
    pub masks: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl MaskTable {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let masks: Vec<u64> = enumerate_configurations(d, n)?.iter().map(|c| c.mask()).collect();
        let lookup = masks.iter().enumerate().map(|(k, &m)| (m, k)).collect();
        Ok(MaskTable { masks, lookup })
    }

    pub fn index(&self, mask: u64) -> usize {
        self.lookup[&mask]
    }
}

/// Calls `f(j, l, target_mask, sign)` for every nonzero `f†_j f_l |mask>`
/// (0-based orbitals), including the diagonal terms `j == l`.
pub(crate) fn for_each_hop(mask: u64, d: usize, fermionic: bool, mut f: impl FnMut(usize, usize, u64, f64)) {
    for l in 0..d {
        if mask & (1 << l) == 0 {
            continue;
        }
        for j in 0..d {
            if j == l {
                f(j, l, mask, 1.0);
                continue;
            }
            if mask & (1 << j) != 0 {
                continue;
            }
            let target = (mask & !(1 << l)) | (1 << j);
            let sign = if fermionic {
                let (lo, hi) = if j < l { (j, l) } else { (l, j) };
                let between = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
                if (mask & between).count_ones() % 2 == 1 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                1.0
            };
            f(j, l, target, sign);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub label: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// On-disk JSON form of a [`PureState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub statistics: Statistics,
    pub amplitudes: Vec<AmplitudeEntry>,
}

impl StateFile {
    pub fn into_state(self) -> Result<PureState> {
        let mut psi = PureState::zero(self.d, self.n, self.statistics)?;
        let mut seen = vec![false; psi.dim()];
        for (pos, entry) in self.amplitudes.iter().enumerate() {
            let k = psi.index_of(&entry.label).map_err(|e| {
                PinError::Domain(format!("amplitude #{pos} (label {:?}): {e}", entry.label))
            })?;
            if seen[k] {
                return domain(format!("amplitude #{pos}: duplicate label {:?}", entry.label));
            }
            if !entry.re.is_finite() || !entry.im.is_finite() {
                return domain(format!("amplitude #{pos}: non-finite value"));
            }
            seen[k] = true;
            psi.amplitudes[k] = C64::new(entry.re, entry.im);
        }
        if psi.norm() == 0.0 {
            return domain("state has zero norm");
        }
        Ok(psi)
    }
}
