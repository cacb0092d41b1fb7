mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pinlab::constraints::{borland_dennis, load_catalog, pinning_report, qubit_polygon, rational_to_string, to_f64, CatalogSpec, Constraint};
use pinlab::fockstate::{random_state, PureState, Statistics};
use pinlab::geometry::{check_assumption, qubit_theorem_check, sample_face_point, AssumptionReport};
use pinlab::linalg::C64;
use pinlab::marginals::{
    hcb_bound, hcb_delocalized_state, hcb_max_occupation_bruteforce, higuchi_check, pinned_qubit_state, qubit_marginals,
    qubit_selection_check, QubitSelectionReport,
};
use pinlab::rdm::{one_body_rdm_with, support, to_natural_basis};
use pinlab::selection::{ansatz_space, converse_selection, verify_selection_rule, SelectionOptions, SelectionReport, Verdict};
use pinlab::symmetry::tangent_split;
use pinlab::PinError;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "pinlab", version, about = "Pinning analysis of one-body reduced density operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Absolute saturation tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_sat: f64,
    /// Eigenvalue degeneracy tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_deg: f64,
    /// Amplitude modulus below which a configuration is outside the support.
    #[arg(long, global = true, default_value_t = 1e-10)]
    support_threshold: f64,
    #[arg(long, global = true, env = "PINLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of a text table.
    #[arg(long, global = true)]
    json: bool,
    /// Constraint catalog: a file, builtin:bd, builtin:pauli or builtin:qubit:<r>.
    #[arg(long, global = true)]
    catalog: Option<String>,
    /// Sample or restart budget for randomized steps.
    #[arg(long, global = true, default_value_t = 32)]
    budget: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Natural occupations, constraint values and selection verdicts of a state.
    Analyze { state: PathBuf },
    /// Samples a point on a degenerate face and checks the hull condition there.
    CheckAssumption {
        /// First entry is the face constraint, further entries are extra saturated equalities.
        constraint: PathBuf,
        /// Degeneracies such as "1=2" or "1=2,4=5=6".
        #[arg(long)]
        pattern: String,
        /// Particle number; defaults to half the number of orbitals.
        #[arg(long)]
        particles: Option<usize>,
    },
    /// Vertex analysis for r qubits, or marginal analysis of a qubit state.
    Qubit {
        #[arg(long, conflicts_with = "state")]
        r: Option<usize>,
        #[arg(required_unless_present = "r")]
        state: Option<PathBuf>,
    },
    /// Fixed-seed verification tables.
    Demo { name: String },
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Serialize)]
struct RunConfig {
    command: String,
    inputs: Vec<String>,
    catalog: Option<String>,
    pattern: Option<String>,
    particles: Option<usize>,
    r: Option<usize>,
    tol_sat: f64,
    tol_deg: f64,
    support_threshold: f64,
    seed: u64,
    format: Format,
    budget: usize,
}

impl RunConfig {
    fn new(cli: &Cli) -> RunConfig {
        let (command, inputs, pattern, particles, r) = match &cli.command {
            Command::Analyze { state } => ("analyze", vec![state.display().to_string()], None, None, None),
            Command::CheckAssumption { constraint, pattern, particles } => {
                ("check-assumption", vec![constraint.display().to_string()], Some(pattern.clone()), *particles, None)
            }
            Command::Qubit { r, state } => ("qubit", state.iter().map(|p| p.display().to_string()).collect(), None, None, *r),
            Command::Demo { name } => ("demo", vec![name.clone()], None, None, None),
        };
        RunConfig {
            command: command.into(),
            inputs,
            catalog: cli.catalog.clone(),
            pattern,
            particles,
            r,
            tol_sat: cli.tol_sat,
            tol_deg: cli.tol_deg,
            support_threshold: cli.support_threshold,
            seed: cli.seed,
            format: if cli.json { Format::Json } else { Format::Text },
            budget: cli.budget,
        }
    }

    fn validate(&self) -> Result<(), PinError> {
        for (name, v) in [("tol-sat", self.tol_sat), ("tol-deg", self.tol_deg), ("support-threshold", self.support_threshold)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PinError::Domain(format!("--{name} must be a positive number, got {v}")));
            }
        }
        if self.budget == 0 {
            return Err(PinError::Domain("--budget must be positive".into()));
        }
        Ok(())
    }

    fn selection(&self) -> SelectionOptions {
        SelectionOptions { eps_sat: self.tol_sat, eps_deg: self.tol_deg, threshold: self.support_threshold }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Success,
    Alarm,
    AssumptionFails,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Alarm => 2,
            Status::AssumptionFails => 3,
        }
    }
}

type Outcome = Result<(Value, Status), PinError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let config = RunConfig::new(&cli);
    let outcome = config.validate().and_then(|()| run(&cli.command, &config));
    match outcome {
        Ok((report, status)) => {
            let doc = json!({ "version": pinlab::VERSION, "config": config, "report": report });
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&doc).expect("reports serialize"));
            } else {
                print!("{}", table::render(&doc));
            }
            ExitCode::from(status.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, PinError::TheoremViolation(_)) { 2 } else { 1 })
        }
    }
}

fn run(command: &Command, config: &RunConfig) -> Outcome {
    match command {
        Command::Analyze { state } => analyze(&PureState::load(state)?, config),
        Command::CheckAssumption { constraint, pattern, particles } => assumption(constraint, pattern, *particles, config),
        Command::Qubit { r: Some(r), .. } => {
            let rep = qubit_theorem_check(*r)?;
            let status = if rep.holds { Status::Success } else { Status::Alarm };
            Ok((to_value(&rep), status))
        }
        Command::Qubit { state: Some(path), .. } => {
            let psi = PureState::load(path)?;
            if psi.statistics() != Statistics::Qubit || psi.d() != 2 {
                return Err(PinError::Domain("the qubit command needs a state of two-level subsystems".into()));
            }
            analyze_qubit(&psi, &qubit_polygon(psi.n())?, config)
        }
        Command::Qubit { .. } => Err(PinError::Domain("give either --r or a state file".into())),
        Command::Demo { name } => match name.as_str() {
            "bd" => demo_bd(config),
            "qubit" => demo_qubit(config),
            "hcb" => demo_hcb(config),
            "lemma1" => demo_lemma1(config),
            other => Err(PinError::Domain(format!("unknown demo {other:?}; expected bd, qubit, hcb or lemma1"))),
        },
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn default_catalog(psi: &PureState) -> Option<CatalogSpec> {
    match (psi.statistics(), psi.d(), psi.n()) {
        (Statistics::Fermion, 6, 3) => Some(CatalogSpec::BorlandDennis),
        (Statistics::Qubit, 2, r) => Some(CatalogSpec::QubitPolygon(r)),
        (Statistics::Fermion | Statistics::Hcb, _, _) => Some(CatalogSpec::Pauli),
        _ => None,
    }
}

fn analyze(psi: &PureState, config: &RunConfig) -> Outcome {
    let spec = match &config.catalog {
        Some(s) => Some(CatalogSpec::parse(s)?),
        None => default_catalog(psi),
    };
    let catalog = match &spec {
        Some(s) => s.resolve(psi.d(), psi.n())?,
        None => Vec::new(),
    };
    match psi.statistics() {
        Statistics::Fermion => analyze_fermion(psi, &catalog, config),
        Statistics::Qubit => analyze_qubit(psi, &catalog, config),
        _ => analyze_plain(psi, &catalog, config),
    }
}

#[derive(Serialize)]
struct StateSummary {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    statistics: &'static str,
}

fn summary(psi: &PureState) -> StateSummary {
    StateSummary { d: psi.d(), n: psi.n(), statistics: psi.statistics().name() }
}

#[derive(Serialize)]
struct ConstraintRow {
    constraint: String,
    #[serde(rename = "D_value")]
    d_value: f64,
    saturated: bool,
    verdict: Verdict,
    alarm: bool,
    support: usize,
    ansatz_size: usize,
    violations: usize,
    residual: f64,
}

fn analyze_fermion(psi: &PureState, catalog: &[Constraint], config: &RunConfig) -> Outcome {
    let opts = config.selection();
    let reports: Vec<SelectionReport> = catalog.iter().map(|c| verify_selection_rule(psi, c, &opts)).collect::<Result<_, _>>()?;
    let (_, rho) = to_natural_basis(psi, config.tol_deg)?;
    let alarm = reports.iter().any(SelectionReport::is_alarm);
    let rows: Vec<ConstraintRow> = reports
        .iter()
        .map(|r| ConstraintRow {
            constraint: r.constraint.clone(),
            d_value: r.d_value,
            saturated: r.saturated,
            verdict: r.verdict,
            alarm: r.is_alarm(),
            support: r.support.len(),
            ansatz_size: r.ansatz_size,
            violations: r.violations.len(),
            residual: r.residual,
        })
        .collect();
    let report = json!({
        "state": summary(psi),
        "nons": rho.nons(),
        "nondegenerate": !rho.is_degenerate(),
        "alarm": alarm,
        "constraints": rows,
        "details": reports,
    });
    Ok((report, if alarm { Status::Alarm } else { Status::Success }))
}

#[derive(Serialize)]
struct QubitRow {
    constraint: String,
    #[serde(rename = "D_value")]
    d_value: f64,
    saturated: bool,
    verdict: &'static str,
    alarm: bool,
}

fn analyze_qubit(psi: &PureState, catalog: &[Constraint], config: &RunConfig) -> Outcome {
    let marg = qubit_marginals(psi)?;
    let smaller = marg.spectra.smaller();
    let nondegenerate = marg.spectra.pairs.iter().all(|(a, b)| a - b > config.tol_deg);
    let polygon = qubit_polygon(psi.n())?;
    let mut rows = Vec::new();
    let mut details: Vec<QubitSelectionReport> = Vec::new();
    for c in catalog {
        let d_value = c.evaluate(&smaller)?;
        let saturated = d_value.abs() <= config.tol_sat;
        let index = polygon.iter().position(|p| p.kappa0 == c.kappa0 && p.kappa == c.kappa);
        let (verdict, alarm) = match (saturated, index) {
            (false, _) => ("not-pinned", false),
            (true, None) => ("unchecked", false),
            (true, Some(i)) => {
                let rep = qubit_selection_check(psi, i + 1, config.tol_sat, config.support_threshold)?;
                let pass = rep.pass;
                details.push(rep);
                if pass {
                    ("pass", false)
                } else {
                    ("violation", nondegenerate)
                }
            }
        };
        rows.push(QubitRow { constraint: c.label.clone(), d_value, saturated, verdict, alarm });
    }
    let alarm = rows.iter().any(|r| r.alarm);
    let report = json!({
        "state": summary(psi),
        "smaller_eigenvalues": smaller,
        "polygon_values": higuchi_check(&marg.spectra),
        "nondegenerate": nondegenerate,
        "pinned": rows.iter().any(|r| r.saturated),
        "alarm": alarm,
        "constraints": rows,
        "details": details,
    });
    Ok((report, if alarm { Status::Alarm } else { Status::Success }))
}

fn analyze_plain(psi: &PureState, catalog: &[Constraint], config: &RunConfig) -> Outcome {
    let rho = one_body_rdm_with(psi, config.tol_deg)?;
    let mut rows = Vec::new();
    if !catalog.is_empty() {
        let (psi_no, rho) = to_natural_basis(psi, config.tol_deg)?;
        let supp = support(&psi_no, config.support_threshold);
        for c in catalog {
            rows.push(pinning_report(c, rho.nons(), &psi_no, &supp, config.tol_sat)?);
        }
    }
    let report = json!({
        "state": summary(psi),
        "nons": rho.nons(),
        "nondegenerate": !rho.is_degenerate(),
        "constraints": rows,
    });
    Ok((report, Status::Success))
}

/// `"1=2,4=5=6"` to the lower indices of the adjacent equalities.
fn parse_pattern(pattern: &str, d: usize) -> Result<Vec<usize>, PinError> {
    let bad = |msg: String| PinError::Domain(format!("pattern {pattern:?}: {msg}"));
    let mut out = Vec::new();
    for chain in pattern.split(',') {
        let idx: Vec<usize> = chain
            .split('=')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad(format!("{s:?} is not an orbital index"))))
            .collect::<Result<_, _>>()?;
        if idx.len() < 2 {
            return Err(bad("each group needs at least two indices".into()));
        }
        for w in idx.windows(2) {
            if w[0] == 0 || w[1] > d {
                return Err(bad(format!("indices must lie in 1..={d}")));
            }
            if w[1] != w[0] + 1 {
                return Err(bad("only adjacent indices can be tied".into()));
            }
            out.push(w[0]);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn assumption(path: &std::path::Path, pattern: &str, particles: Option<usize>, config: &RunConfig) -> Outcome {
    let mut constraints = load_catalog(path)?;
    let face = constraints.remove(0);
    let d = face.dim();
    let js = parse_pattern(pattern, d)?;
    let n = particles.unwrap_or(d / 2);
    let point = sample_face_point(&face, &js, n, config.seed, &constraints)?;
    let rep: AssumptionReport = check_assumption(&face, &js, &point.point)?;
    let status = if rep.holds { Status::Success } else { Status::AssumptionFails };
    let report = json!({
        "constraint": face.label,
        "extra": constraints.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
        "particles": n,
        "point": point.point.iter().map(rational_to_string).collect::<Vec<_>>(),
        "point_approx": point.approx(),
        "forced_degeneracies": point.degeneracies,
        "attempts": point.attempts,
        "holds": rep.holds,
        "regions": rep.regions,
    });
    Ok((report, status))
}

/// `alpha|123> + beta|145> + gamma|246>` with moduli and phases drawn from a
/// seeded random vector.
fn bd_state(seed: u64) -> Result<PureState, PinError> {
    let u = random_state(3, 1, Statistics::Fermion, seed)?;
    let a = u.amplitudes();
    let a2 = 0.55 + 0.4 * a[0].norm_sqr();
    let split = 0.1 + 0.3 * a[1].norm_sqr();
    let moduli = [a2, (1.0 - a2) * (1.0 - split), (1.0 - a2) * split];
    let labels = [vec![1, 2, 3], vec![1, 4, 5], vec![2, 4, 6]];
    let terms: Vec<(Vec<usize>, C64)> =
        labels.into_iter().zip(moduli).zip(a.iter()).map(|((l, m), z)| (l, C64::from_polar(m.sqrt(), z.arg()))).collect();
    PureState::from_terms(6, 3, Statistics::Fermion, &terms)
}

fn demo_bd(config: &RunConfig) -> Outcome {
    let opts = config.selection();
    let bd = borland_dennis().remove(0);
    let mut forward = Vec::new();
    let mut alarm = false;
    for k in 0..config.budget.min(16) as u64 {
        let r = verify_selection_rule(&bd_state(config.seed.wrapping_add(k))?, &bd, &opts)?;
        alarm |= r.verdict != Verdict::Pass;
        forward.push(json!({"seed": config.seed.wrapping_add(k), "D_value": r.d_value, "nondegenerate": r.nondegenerate,
            "support": r.support.len(), "residual": r.residual, "verdict": r.verdict}));
    }
    let off = PureState::basis_state(6, 3, Statistics::Fermion, &[3, 5, 6])?;
    let mut admixture = Vec::new();
    for delta in [0.3f64, 0.1, 0.03] {
        let base = bd_state(config.seed)?;
        let psi = base.scaled(C64::new((1.0 - delta * delta).sqrt(), 0.0)).add_scaled(&off, C64::new(delta, 0.0))?;
        let r = verify_selection_rule(&psi, &bd, &opts)?;
        alarm |= r.d_value <= 1e-6;
        admixture.push(json!({"delta": delta, "D_value": r.d_value, "verdict": r.verdict}));
    }
    let ansatz = ansatz_space(&bd, 6, 3)?;
    let mut converse = Vec::new();
    for k in 0..config.budget.min(16) as u64 {
        let seed = config.seed.wrapping_add(1000 + k);
        let coeffs = random_state(ansatz.len(), 1, Statistics::Fermion, seed)?;
        let terms: Vec<(Vec<usize>, C64)> =
            ansatz.configs.iter().zip(coeffs.amplitudes().iter()).map(|(c, a)| (c.indices().to_vec(), *a)).collect();
        let out = converse_selection(&PureState::from_terms(6, 3, Statistics::Fermion, &terms)?, &bd, &opts)?;
        let block = out.spectrum[0] + out.spectrum[1] + out.spectrum[3];
        alarm |= (block - 2.0).abs() > 1e-9;
        converse.push(json!({"seed": seed, "n1+n2+n4": block, "D_value": out.d_value}));
    }
    let report = json!({"forward": forward, "admixture": admixture, "converse": converse, "alarm": alarm});
    Ok((report, if alarm { Status::Alarm } else { Status::Success }))
}

fn demo_qubit(config: &RunConfig) -> Outcome {
    let mut rows = Vec::new();
    let mut alarm = false;
    for r in 2..=10 {
        let rep = qubit_theorem_check(r)?;
        alarm |= !rep.holds;
        rows.push(json!({"r": r, "w1": rep.w1.len(), "w2": rep.w2.len(), "region": rep.region.len(),
            "paired": rep.exceptions_paired, "holds": rep.holds}));
    }
    let mut family = Vec::new();
    for k in 0..config.budget.min(8) as u64 {
        let seed = config.seed.wrapping_add(k);
        let w = random_state(3, 1, Statistics::Fermion, seed)?;
        let a2 = 0.55 + 0.4 * w.amplitudes()[0].norm_sqr();
        let b: Vec<f64> = w.amplitudes().iter().skip(1).map(|z| (z.norm_sqr() / (1.0 - w.amplitudes()[0].norm_sqr()) * (1.0 - a2)).sqrt()).collect();
        let psi = pinned_qubit_state(a2.sqrt(), &b)?;
        let rep = qubit_selection_check(&psi, 1, config.tol_sat, config.support_threshold)?;
        alarm |= !rep.pass;
        family.push(json!({"seed": seed, "D1": rep.values[0], "support": rep.support.len(), "residual": rep.residual, "pass": rep.pass}));
    }
    let report = json!({"vertices": rows, "pinned_family": family, "alarm": alarm});
    Ok((report, if alarm { Status::Alarm } else { Status::Success }))
}

fn demo_hcb(config: &RunConfig) -> Outcome {
    let mut rows = Vec::new();
    let mut alarm = false;
    for d in 1..=6 {
        for n in 1..=d {
            let bound = hcb_bound(n, d)?;
            let search = hcb_max_occupation_bruteforce(d, n, config.budget, config.seed)?;
            let delocalized = one_body_rdm_with(&hcb_delocalized_state(d, n)?, config.tol_deg)?.nons()[0];
            let gap = (search.best - to_f64(&bound)).abs();
            alarm |= gap > 1e-6;
            rows.push(json!({"d": d, "N": n, "bound": rational_to_string(&bound), "brute_force": search.best,
                "delocalized": delocalized, "gap": gap}));
        }
    }
    let report = json!({"restarts": config.budget, "rows": rows, "alarm": alarm});
    Ok((report, if alarm { Status::Alarm } else { Status::Success }))
}

fn demo_lemma1(config: &RunConfig) -> Outcome {
    let mut rows = Vec::new();
    let mut alarm = false;
    for (d, n) in [(4, 2), (5, 2), (6, 3)] {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        let mut dims = (0, 0);
        for k in 0..config.budget as u64 {
            let s = tangent_split(&random_state(d, n, Statistics::Fermion, config.seed.wrapping_add(k))?)?;
            ok &= s.image_dim + s.symmetry_dim == d * d;
            worst = worst.max(s.max_cross_inner);
            dims = (s.image_dim, s.symmetry_dim);
        }
        ok &= worst <= 1e-8;
        alarm |= !ok;
        rows.push(json!({"d": d, "N": n, "samples": config.budget, "image_dim": dims.0, "symmetry_dim": dims.1,
            "d^2": d * d, "max_cross_inner": worst, "holds": ok}));
    }
    let report = json!({"rows": rows, "alarm": alarm});
    Ok((report, if alarm { Status::Alarm } else { Status::Success }))
}
