//! Affine spectral constraints `D(n) = kappa0 + kappa . n >= 0`, their
//! saturation, the diagonal operator they induce on a natural-orbital
//! expansion, and the built-in catalogs.
//!
//! Coefficients are exact rationals. In the fermion setting `n` is the
//! descending occupation vector; in the qubit setting it is the vector of
//! smaller local eigenvalues, one per subsystem.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::combinat::Vertex;
use crate::error::{domain, PinError, Result};
use crate::fockstate::{PureState, Statistics};
use crate::rdm::SupportSet;

/// Default absolute saturation tolerance.
pub const DEFAULT_EPS_SAT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Fermion,
    Qubit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConstraintFile", into = "ConstraintFile")]
pub struct Constraint {
    pub label: String,
    pub setting: Setting,
    pub kappa0: BigRational,
    pub kappa: Vec<BigRational>,
}

/// Parses `"p/q"`, integers and finite decimals such as `"-0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || PinError::Domain(format!("not a rational number: {s:?}"));
    if let Some((int, frac)) = t.split_once('.') {
        if t.contains('/') || frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num = BigInt::from_str(&digits).map_err(|_| bad())?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let r = BigRational::new(num, den);
        return Ok(if negative { -r } else { r });
    }
    let r = BigRational::from_str(t).map_err(|_| bad())?;
    Ok(r)
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

impl Constraint {
    pub fn new(label: impl Into<String>, setting: Setting, kappa0: BigRational, kappa: Vec<BigRational>) -> Result<Self> {
        let label = label.into();
        if kappa.is_empty() || kappa.iter().all(Zero::is_zero) {
            return domain(format!("constraint {label:?}: kappa must not vanish identically"));
        }
        Ok(Constraint { label, setting, kappa0, kappa })
    }

    /// Convenience constructor from integers.
    pub fn from_ints(label: impl Into<String>, setting: Setting, kappa0: i64, kappa: &[i64]) -> Result<Self> {
        Self::new(label, setting, int(kappa0), kappa.iter().map(|&k| int(k)).collect())
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.kappa.len() {
            return domain(format!(
                "constraint {:?} has {} coefficients but the spectrum has {len} entries",
                self.label,
                self.kappa.len()
            ));
        }
        Ok(())
    }

    pub fn evaluate(&self, n: &[f64]) -> Result<f64> {
        self.check_len(n.len())?;
        Ok(to_f64(&self.kappa0) + self.kappa.iter().zip(n).map(|(k, x)| to_f64(k) * x).sum::<f64>())
    }

    pub fn evaluate_exact(&self, n: &[BigRational]) -> Result<BigRational> {
        self.check_len(n.len())?;
        Ok(self.kappa.iter().zip(n).fold(self.kappa0.clone(), |acc, (k, x)| acc + k * x))
    }

    /// `D` at a 0/1 vertex; exact.
    pub fn evaluate_vertex(&self, v: &Vertex) -> Result<BigRational> {
        self.check_len(v.0.len())?;
        Ok(self
            .kappa
            .iter()
            .zip(&v.0)
            .filter(|(_, &x)| x == 1)
            .fold(self.kappa0.clone(), |acc, (k, _)| acc + k))
    }

    pub fn is_saturated(&self, n: &[f64], eps_sat: f64) -> Result<bool> {
        Ok(self.evaluate(n)?.abs() <= eps_sat)
    }

    /// Whether `kappa` has integer entries.
    pub fn is_integral(&self) -> bool {
        self.kappa0.is_integer() && self.kappa.iter().all(|k| k.is_integer())
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, rational_to_string(&self.kappa0))?;
        for (j, k) in self.kappa.iter().enumerate() {
            if k.is_zero() {
                continue;
            }
            let sign = if k.is_negative() { "-" } else { "+" };
            let mag = k.abs();
            if mag.is_one() {
                write!(f, " {sign} n{}", j + 1)?;
            } else {
                write!(f, " {sign} {} n{}", rational_to_string(&mag), j + 1)?;
            }
        }
        write!(f, " >= 0")
    }
}

/// Rational written as `"p/q"`, a decimal string or a bare integer.
#[derive(Clone, Debug)]
struct Rat(BigRational);

impl Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational number such as \"-3/2\"")
            }

            fn visit_str<E: serde::de::Error>(self, s: &str) -> std::result::Result<Rat, E> {
                parse_rational(s).map(Rat).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, x: i64) -> std::result::Result<Rat, E> {
                Ok(Rat(int(x)))
            }

            fn visit_u64<E: serde::de::Error>(self, x: u64) -> std::result::Result<Rat, E> {
                Ok(Rat(BigRational::from_integer(BigInt::from(x))))
            }
        }
        d.deserialize_any(V)
    }
}

/// JSON form with rationals written as strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    label: String,
    setting: Setting,
    kappa0: Rat,
    kappa: Vec<Rat>,
}

impl TryFrom<ConstraintFile> for Constraint {
    type Error = PinError;

    fn try_from(f: ConstraintFile) -> Result<Self> {
        Constraint::new(f.label, f.setting, f.kappa0.0, f.kappa.into_iter().map(|k| k.0).collect())
    }
}

impl From<Constraint> for ConstraintFile {
    fn from(c: Constraint) -> Self {
        ConstraintFile {
            label: c.label,
            setting: c.setting,
            kappa0: Rat(c.kappa0),
            kappa: c.kappa.into_iter().map(Rat).collect(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Constraint),
    Many(Vec<Constraint>),
}

/// Parses a single constraint object or an array of them.
pub fn parse_catalog(text: &str) -> Result<Vec<Constraint>> {
    // untagged enums swallow positions, so try each shape directly
    let trimmed = text.trim_start();
    let out = if trimmed.starts_with('[') {
        serde_json::from_str::<Vec<Constraint>>(text)?
    } else if trimmed.starts_with('{') {
        vec![serde_json::from_str::<Constraint>(text)?]
    } else {
        match serde_json::from_str::<OneOrMany>(text)? {
            OneOrMany::One(c) => vec![c],
            OneOrMany::Many(v) => v,
        }
    };
    if out.is_empty() {
        return domain("catalog is empty");
    }
    Ok(out)
}

pub fn load_catalog(path: &Path) -> Result<Vec<Constraint>> {
    parse_catalog(&std::fs::read_to_string(path)?)
}

/// `n_j <= 1` and `n_j >= 0` for every orbital.
pub fn pauli(d: usize, n: usize) -> Result<Vec<Constraint>> {
    if d == 0 || n > d {
        return domain(format!("no Pauli constraints for d={d}, N={n}"));
    }
    let mut out = Vec::with_capacity(2 * d);
    for j in 0..d {
        let mut kappa = vec![0; d];
        kappa[j] = -1;
        out.push(Constraint::from_ints(format!("pauli:n{}<=1", j + 1), Setting::Fermion, 1, &kappa)?);
    }
    for j in 0..d {
        let mut kappa = vec![0; d];
        kappa[j] = 1;
        out.push(Constraint::from_ints(format!("pauli:n{}>=0", j + 1), Setting::Fermion, 0, &kappa)?);
    }
    Ok(out)
}

/// The three-fermion, six-orbital family: `2 - n1 - n2 - n4 >= 0` and the
/// equalities `n_k + n_{7-k} = 1`, each as a pair of opposite inequalities.
pub fn borland_dennis() -> Vec<Constraint> {
    let mut out = vec![Constraint::from_ints("BD", Setting::Fermion, 2, &[-1, -1, 0, -1, 0, 0]).unwrap()];
    for k in 1..=3 {
        let mut kappa = [0i64; 6];
        kappa[k - 1] = 1;
        kappa[6 - k] = 1;
        let neg: Vec<i64> = kappa.iter().map(|x| -x).collect();
        out.push(Constraint::from_ints(format!("BD:n{}+n{}<=1", k, 7 - k), Setting::Fermion, 1, &neg).unwrap());
        out.push(Constraint::from_ints(format!("BD:n{}+n{}>=1", k, 7 - k), Setting::Fermion, -1, &kappa).unwrap());
    }
    out
}

/// `D_i = -n_i + sum_{j != i} n_j` on the smaller local eigenvalues.
pub fn qubit_polygon(r: usize) -> Result<Vec<Constraint>> {
    if r < 2 {
        return domain("the polygon inequalities need at least two qubits");
    }
    (0..r)
        .map(|i| {
            let kappa: Vec<i64> = (0..r).map(|j| if j == i { -1 } else { 1 }).collect();
            Constraint::from_ints(format!("D{}", i + 1), Setting::Qubit, 0, &kappa)
        })
        .collect()
}

/// A catalog source as given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CatalogSpec {
    BorlandDennis,
    QubitPolygon(usize),
    /// Pauli facets for the dimensions of whatever state is analyzed.
    Pauli,
    File(PathBuf),
}

impl CatalogSpec {
    pub fn parse(s: &str) -> Result<CatalogSpec> {
        match s.strip_prefix("builtin:") {
            None => Ok(CatalogSpec::File(PathBuf::from(s))),
            Some("bd") => Ok(CatalogSpec::BorlandDennis),
            Some("pauli") => Ok(CatalogSpec::Pauli),
            Some(rest) => match rest.strip_prefix("qubit:").map(str::parse::<usize>) {
                Some(Ok(r)) => Ok(CatalogSpec::QubitPolygon(r)),
                _ => domain(format!("unknown built-in catalog {s:?}")),
            },
        }
    }

    /// Materializes the catalog; `d` and `n` size the Pauli facets.
    pub fn resolve(&self, d: usize, n: usize) -> Result<Vec<Constraint>> {
        match self {
            CatalogSpec::BorlandDennis => Ok(borland_dennis()),
            CatalogSpec::QubitPolygon(r) => qubit_polygon(*r),
            CatalogSpec::Pauli => pauli(d, n),
            CatalogSpec::File(p) => load_catalog(p),
        }
    }
}

impl fmt::Display for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogSpec::BorlandDennis => write!(f, "builtin:bd"),
            CatalogSpec::QubitPolygon(r) => write!(f, "builtin:qubit:{r}"),
            CatalogSpec::Pauli => write!(f, "builtin:pauli"),
            CatalogSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Occupation vector of basis label `k`: 0/1 orbital occupations for
/// fermions and hard-core bosons, and for qubits a 1 wherever the local
/// label is the second (smaller-eigenvalue) vector.
pub fn label_vertex(psi: &PureState, k: usize) -> Result<Vertex> {
    let label = psi.label(k);
    match psi.statistics() {
        Statistics::Fermion | Statistics::Hcb => {
            let mut v = vec![0u8; psi.d()];
            for &j in &label {
                v[j - 1] = 1;
            }
            Ok(Vertex(v))
        }
        Statistics::Qubit => {
            if psi.d() != 2 {
                return Err(PinError::Unsupported("occupation vertices need two-level subsystems".into()));
            }
            Ok(Vertex(label.iter().map(|&t| u8::from(t == 2)).collect()))
        }
        Statistics::BosonProduct => Err(PinError::Unsupported(
            "product boson states have no configuration vertices".into(),
        )),
    }
}

fn check_setting(d: &Constraint, psi: &PureState) -> Result<()> {
    let ok = match d.setting {
        Setting::Fermion => matches!(psi.statistics(), Statistics::Fermion | Statistics::Hcb),
        Setting::Qubit => psi.statistics() == Statistics::Qubit,
    };
    if !ok {
        return domain(format!(
            "constraint {:?} is for the {:?} setting but the state has {} statistics",
            d.label,
            d.setting,
            psi.statistics().name()
        ));
    }
    Ok(())
}

/// `|| sum_i c_i D(n_i) |i> || / ||psi||` for `psi` expanded in its natural
/// basis.
pub fn pinning_operator_residual(d: &Constraint, psi_no: &PureState) -> Result<f64> {
    check_setting(d, psi_no)?;
    let norm = psi_no.norm();
    if norm == 0.0 {
        return domain("zero state");
    }
    let mut acc = 0.0;
    for (k, a) in psi_no.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let eig = to_f64(&d.evaluate_vertex(&label_vertex(psi_no, k)?)?);
        acc += eig * eig * a.norm_sqr();
    }
    Ok(acc.sqrt() / norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportViolation {
    pub label: Vec<usize>,
    pub amplitude: f64,
    /// Exact `D(n_i)` of the offending configuration.
    pub eigenvalue: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PinningReport {
    pub constraint: String,
    pub value: f64,
    pub saturated: bool,
    pub tolerance: f64,
    pub residual: f64,
    pub violations: Vec<SupportViolation>,
}

/// Evaluates `d` on `spectrum` and inspects the support of the natural
/// expansion `psi_no`.
pub fn pinning_report(
    d: &Constraint,
    spectrum: &[f64],
    psi_no: &PureState,
    support: &SupportSet,
    eps_sat: f64,
) -> Result<PinningReport> {
    let value = d.evaluate(spectrum)?;
    let norm = psi_no.norm();
    let mut violations = Vec::new();
    for &k in &support.indices {
        let eig = d.evaluate_vertex(&label_vertex(psi_no, k)?)?;
        if !eig.is_zero() {
            violations.push(SupportViolation {
                label: psi_no.label(k),
                amplitude: psi_no.amplitudes()[k].norm() / norm,
                eigenvalue: rational_to_string(&eig),
            });
        }
    }
    Ok(PinningReport {
        constraint: d.label.clone(),
        value,
        saturated: value.abs() <= eps_sat,
        tolerance: eps_sat,
        residual: pinning_operator_residual(d, psi_no)?,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::{hypercube_vertices, occupation_vector};
    use crate::linalg::C64;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn bd() -> Constraint {
        borland_dennis().remove(0)
    }

    fn bd_state(a: f64, b: f64, c: f64, delta: f64) -> PureState {
        PureState::from_terms(
            6,
            3,
            Statistics::Fermion,
            &[
                (vec![1, 2, 3], C64::new(a, 0.0)),
                (vec![1, 4, 5], C64::new(b, 0.0)),
                (vec![2, 4, 6], C64::new(c, 0.0)),
                (vec![3, 5, 6], C64::new(delta, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("2").unwrap(), int(2));
        assert_eq!(parse_rational("-3/6").unwrap(), r(-1, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), r(-1, 4));
        assert_eq!(parse_rational("1.5").unwrap(), r(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn bd_evaluation() {
        let d = bd();
        // the barycentre of the hypercube sits strictly inside: 2 - 5/3
        let n = [2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        assert!((d.evaluate(&n).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let exact: Vec<BigRational> = vec![r(2, 3), r(2, 3), r(2, 3), r(1, 3), r(1, 3), r(1, 3)];
        assert_eq!(d.evaluate_exact(&exact).unwrap(), r(1, 3));
        assert!(!d.is_saturated(&n, DEFAULT_EPS_SAT).unwrap());
        let pinned = [0.9, 0.8, 0.7, 0.3, 0.2, 0.1];
        assert!(d.is_saturated(&pinned, DEFAULT_EPS_SAT).unwrap());
        assert!(d.evaluate(&[1.0; 5]).is_err());
    }

    #[test]
    fn qubit_polygon_at_ghz() {
        let cat = qubit_polygon(3).unwrap();
        assert_eq!(cat.len(), 3);
        assert_eq!(cat[0].kappa, vec![int(-1), int(1), int(1)]);
        assert_eq!(cat[2].kappa, vec![int(1), int(1), int(-1)]);
        let v = cat[0].evaluate(&[0.5, 0.5, 0.5]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(!cat[0].is_saturated(&[0.5, 0.5, 0.5], DEFAULT_EPS_SAT).unwrap());
    }

    #[test]
    fn integral_values_at_vertices() {
        let d = bd();
        for v in hypercube_vertices(6, 3).unwrap() {
            let x = d.evaluate_vertex(&v).unwrap();
            assert!(x.is_integer());
            assert_eq!(to_f64(&x), d.evaluate(&v.as_f64()).unwrap());
        }
    }

    #[test]
    fn pauli_facet_saturation() {
        let cat = pauli(4, 2).unwrap();
        assert_eq!(cat.len(), 8);
        assert!(cat[0].is_saturated(&[1.0, 0.6, 0.4, 0.0], DEFAULT_EPS_SAT).unwrap());
    }

    #[test]
    fn residuals() {
        let d = bd();
        let pinned = bd_state(0.8, 0.5, 0.11f64.sqrt(), 0.0);
        assert!(pinning_operator_residual(&d, &pinned).unwrap() < 1e-12);
        let det = PureState::basis_state(6, 3, Statistics::Fermion, &[1, 2, 3]).unwrap();
        assert_eq!(pinning_operator_residual(&d, &det).unwrap(), 0.0);
        // |356> has kappa . n = 0 and hence eigenvalue 2
        let delta = 0.1f64;
        let scale = (1.0 - delta * delta).sqrt();
        let mixed = bd_state(0.8 * scale, 0.5 * scale, 0.11f64.sqrt() * scale, delta);
        let res = pinning_operator_residual(&d, &mixed).unwrap();
        assert!((res - 2.0 * delta).abs() < 1e-12);
    }

    #[test]
    fn residual_setting_mismatch() {
        let q = qubit_polygon(3).unwrap().remove(0);
        let det = PureState::basis_state(6, 3, Statistics::Fermion, &[1, 2, 3]).unwrap();
        assert!(pinning_operator_residual(&q, &det).is_err());
    }

    #[test]
    fn bd_catalog_contents() {
        let cat = borland_dennis();
        assert_eq!(cat.len(), 7);
        assert_eq!(cat[0].kappa0, int(2));
        // the equalities hold on every vertex of the three-in-six hypercube
        // only in pairs; at the natural spectrum they pin exactly
        let n = [0.9, 0.8, 0.75, 0.25, 0.2, 0.1];
        for c in &cat[1..] {
            assert!(c.evaluate(&n).unwrap().abs() < 1e-12);
        }
        assert!(cat[0].evaluate(&n).unwrap() > 0.0);
        let v = occupation_vector(&crate::combinat::Configuration::new(vec![1, 2, 3], 6).unwrap(), 6);
        assert!(cat[0].evaluate_vertex(&v).unwrap().is_zero());
    }

    #[test]
    fn json_roundtrip_and_diagnostics() {
        let text = r#"{"label":"BD","setting":"fermion","kappa0":"2","kappa":["-1","-1","0","-1","0","0"]}"#;
        let cat = parse_catalog(text).unwrap();
        assert_eq!(cat, vec![bd()]);
        let out = serde_json::to_string(&cat[0]).unwrap();
        assert_eq!(out, text);
        let arr = format!("[{text},{text}]");
        assert_eq!(parse_catalog(&arr).unwrap().len(), 2);

        let bad = "{\n\"label\":\"x\",\n\"setting\":\"fermion\",\n\"kappa0\":\"1/\",\n\"kappa\":[\"1\"]\n}";
        match parse_catalog(bad) {
            Err(PinError::Parse { line, .. }) => assert!(line >= 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        let zero = r#"{"label":"z","setting":"fermion","kappa0":"1","kappa":["0","0"]}"#;
        assert!(parse_catalog(zero).is_err());
        assert!(parse_catalog("[]").is_err());
        assert!(matches!(parse_catalog("{\"label\":"), Err(PinError::Parse { .. })));
    }

    #[test]
    fn catalog_selectors() {
        assert_eq!(CatalogSpec::parse("builtin:bd").unwrap(), CatalogSpec::BorlandDennis);
        assert_eq!(CatalogSpec::parse("builtin:qubit:4").unwrap(), CatalogSpec::QubitPolygon(4));
        assert_eq!(CatalogSpec::parse("builtin:pauli").unwrap().resolve(4, 2).unwrap().len(), 8);
        assert!(CatalogSpec::parse("builtin:nope").is_err());
        assert!(matches!(CatalogSpec::parse("x.json").unwrap(), CatalogSpec::File(_)));
    }

    #[test]
    fn display_form() {
        assert_eq!(bd().to_string(), "BD: 2 - n1 - n2 - n4 >= 0");
    }
}
