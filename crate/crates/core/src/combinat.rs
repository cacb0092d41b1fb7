//! Configurations, Pauli-hypercube vertices and degeneracy transpositions.
//!
//! Orbital indices are 1-based throughout, matching the labels used in the
//! JSON formats. The canonical basis order of every amplitude vector is the
//! lexicographic order of configurations produced by
//! [`enumerate_configurations`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default absolute tolerance for treating adjacent occupation numbers as
/// degenerate.
pub const DEFAULT_EPS_DEG: f64 = 1e-8;

/// Strictly increasing tuple of 1-based orbital indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(indices: Vec<usize>, d: usize) -> Result<Self> {
        if indices.iter().any(|&i| i == 0 || i > d) {
            return domain(format!("configuration {indices:?} has an index outside 1..={d}"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return domain(format!("configuration {indices:?} is not strictly increasing"));
        }
        Ok(Configuration(indices))
    }

    pub(crate) fn new_unchecked(indices: Vec<usize>) -> Self {
        Configuration(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, orbital: usize) -> bool {
        self.0.binary_search(&orbital).is_ok()
    }

    /// Bitmask with bit `j - 1` set for each occupied orbital `j`.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &j| m | (1u64 << (j - 1)))
    }

    pub fn from_mask(mask: u64) -> Self {
        let mut v = Vec::with_capacity(mask.count_ones() as usize);
        let mut m = mask;
        while m != 0 {
            let tz = m.trailing_zeros() as usize;
            v.push(tz + 1);
            m &= m - 1;
        }
        Configuration(v)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// 0/1 occupation vector of a configuration (a vertex of the Pauli hypercube).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub Vec<u8>);

impl Vertex {
    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&x| f64::from(x)).collect()
    }

    pub fn sum(&self) -> usize {
        self.0.iter().map(|&x| usize::from(x)).sum()
    }
}

/// Adjacent transposition `pi_{j,j+1}` (1-based `j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transposition {
    pub j: usize,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn check_dims(d: usize, n: usize) -> Result<()> {
    if d == 0 {
        return domain("one-particle dimension must be positive");
    }
    if n > d {
        return domain(format!("particle number {n} exceeds dimension {d}"));
    }
    if d > 63 {
        return domain("dimensions above 63 orbitals are not supported");
    }
    Ok(())
}

/// All `C(d, n)` configurations in lexicographic order.
pub fn enumerate_configurations(d: usize, n: usize) -> Result<Vec<Configuration>> {
    check_dims(d, n)?;
    let mut out = Vec::with_capacity(binomial(d, n));
    let mut current: Vec<usize> = (1..=n).collect();
    loop {
        out.push(Configuration(current.clone()));
        // advance to the next combination in lexicographic order
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if current[k] < d - (n - 1 - k) {
                break;
            }
        }
        current[k] += 1;
        for m in (k + 1)..n {
            current[m] = current[m - 1] + 1;
        }
    }
}

/// Position of `c` in the lexicographic list of `C(d, n)` configurations.
pub fn configuration_rank(c: &Configuration, d: usize) -> usize {
    let n = c.len();
    let mut rank = 0;
    let mut prev = 0;
    for (k, &i) in c.indices().iter().enumerate() {
        for skipped in (prev + 1)..i {
            rank += binomial(d - skipped, n - k - 1);
        }
        prev = i;
    }
    rank
}

pub fn occupation_vector(c: &Configuration, d: usize) -> Vertex {
    let mut v = vec![0u8; d];
    for &i in c.indices() {
        v[i - 1] = 1;
    }
    Vertex(v)
}

/// Binary vectors of length `d` with coordinate sum `n`, in the canonical
/// configuration order.
pub fn hypercube_vertices(d: usize, n: usize) -> Result<Vec<Vertex>> {
    Ok(enumerate_configurations(d, n)?
        .iter()
        .map(|c| occupation_vector(c, d))
        .collect())
}

/// All `2^r` binary vectors of length `r`, lexicographic.
pub fn binary_vertices(r: usize) -> Vec<Vertex> {
    (0..(1u64 << r))
        .map(|m| Vertex((0..r).map(|k| ((m >> (r - 1 - k)) & 1) as u8).collect()))
        .collect()
}

/// One transposition per adjacent pair of (descending) occupation numbers that
/// agree within `eps_deg`.
pub fn degeneracy_generators(n: &[f64], eps_deg: f64) -> Result<Vec<Transposition>> {
    let mut out = Vec::new();
    for (k, w) in n.windows(2).enumerate() {
        if w[1] > w[0] + eps_deg {
            return domain(format!(
                "occupation numbers are not descending at positions {} and {}",
                k + 1,
                k + 2
            ));
        }
        if (w[0] - w[1]).abs() <= eps_deg {
            out.push(Transposition { j: k + 1 });
        }
    }
    Ok(out)
}

/// Groups of consecutive indices (0-based) whose values agree within
/// `eps_deg` along a descending sequence.
pub fn degenerate_clusters(n: &[f64], eps_deg: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &x) in n.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if (n[*last.last().unwrap()] - x).abs() <= eps_deg => last.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    clusters
}
