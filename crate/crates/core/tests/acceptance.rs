//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use pinlab::combinat::Vertex;
use pinlab::constraints::{borland_dennis, Constraint, Setting};
use pinlab::fockstate::{random_state, random_state_with, PureState, Statistics};
use pinlab::geometry::{check_assumption, qubit_vertex_enumeration, sample_face_point, CertificateJson};
use pinlab::linalg::{hermiticity_defect, max_offdiag, random_unitary, C64};
use pinlab::marginals::{
    hcb_bound, hcb_delocalized_state, hcb_max_occupation_bruteforce, higuchi_check, pinned_qubit_state, qubit_marginals,
    qubit_selection_check,
};
use pinlab::rdm::{one_body_rdm, rdm_matrix, to_natural_basis};
use pinlab::selection::{ansatz_space, converse_selection, verify_selection_rule, SelectionOptions, Verdict};
use pinlab::symmetry::tangent_split;
use pinlab::PinError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn err(e: PinError) -> String {
    e.to_string()
}

fn bd() -> Constraint {
    borland_dennis().remove(0)
}

/// `alpha|123> + beta|145> + gamma|246>` with `|alpha|^2 > 1/2` and
/// `|beta| > |gamma| > 0`, random phases.
fn bd_state(rng: &mut ChaCha8Rng) -> PureState {
    let a2 = rng.random_range(0.55..0.95);
    let split = rng.random_range(0.1..0.4);
    let b2 = (1.0 - a2) * (1.0 - split);
    let c2 = (1.0 - a2) * split;
    let mut amp = |m: f64| C64::from_polar(m.sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
    let terms = vec![(vec![1, 2, 3], amp(a2)), (vec![1, 4, 5], amp(b2)), (vec![2, 4, 6], amp(c2))];
    PureState::from_terms(6, 3, Statistics::Fermion, &terms).unwrap()
}

fn forward_rule() -> Outcome {
    let opts = SelectionOptions::default();
    let ansatz = ansatz_space(&bd(), 6, 3).map_err(err)?;
    ensure(ansatz.len() == 9, || format!("ansatz has {} configurations", ansatz.len()))?;
    let mut worst_d: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for seed in 0..200u64 {
        let psi = bd_state(&mut ChaCha8Rng::seed_from_u64(seed));
        let r = verify_selection_rule(&psi, &bd(), &opts).map_err(err)?;
        ensure(r.nondegenerate, || format!("seed {seed}: degenerate spectrum {:?}", r.nons))?;
        ensure(r.verdict == Verdict::Pass, || format!("seed {seed}: verdict {:?}", r.verdict))?;
        ensure(r.support.iter().all(|l| ansatz.contains_label(l)), || format!("seed {seed}: support {:?}", r.support))?;
        worst_d = worst_d.max(r.d_value.abs());
        worst_res = worst_res.max(r.residual);
    }
    ensure(worst_d <= 1e-10, || format!("max |D| = {worst_d:.3e}"))?;
    ensure(worst_res <= 1e-10, || format!("max residual = {worst_res:.3e}"))?;
    Ok(format!("200 states, max |D| {worst_d:.1e}, max residual {worst_res:.1e}"))
}

fn contrapositive() -> Outcome {
    let (a2, b2, c2) = (0.7, 0.2, 0.1);
    let terms = [(vec![1, 2, 3], a2), (vec![1, 4, 5], b2), (vec![2, 4, 6], c2), (vec![3, 5, 6], 0.0)];
    let mut values = Vec::new();
    for delta in [0.3f64, 0.1, 0.03] {
        let w = [(1.0 - delta * delta) * a2, (1.0 - delta * delta) * b2, (1.0 - delta * delta) * c2, delta * delta];
        let t: Vec<(Vec<usize>, C64)> = terms.iter().zip(&w).map(|((l, _), &x)| (l.clone(), C64::new(x.sqrt(), 0.0))).collect();
        let psi = PureState::from_terms(6, 3, Statistics::Fermion, &t).map_err(err)?;
        let r = verify_selection_rule(&psi, &bd(), &SelectionOptions::default()).map_err(err)?;
        // no two terms differ in a single orbital, so the density is diagonal
        // with occupations summed over the terms holding each orbital
        let mut occ: Vec<f64> = (1..=6).map(|j| terms.iter().zip(&w).filter(|((l, _), _)| l.contains(&j)).map(|(_, x)| x).sum()).collect();
        occ.sort_by(|x, y| y.total_cmp(x));
        let oracle = 2.0 - occ[0] - occ[1] - occ[3];
        ensure(r.d_value > 1e-6, || format!("delta {delta}: D = {:.3e}", r.d_value))?;
        ensure((r.d_value - oracle).abs() < 1e-12, || format!("delta {delta}: D = {} vs {oracle}", r.d_value))?;
        values.push(r.d_value);
    }
    ensure(values.windows(2).all(|w| w[0] > w[1]), || format!("not decreasing: {values:?}"))?;
    Ok(format!("D = {:.4}, {:.4}, {:.5}", values[0], values[1], values[2]))
}

fn converse_rule() -> Outcome {
    let opts = SelectionOptions::default();
    let ansatz = ansatz_space(&bd(), 6, 3).map_err(err)?;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(Vec<usize>, C64)> = ansatz
            .configs
            .iter()
            .map(|c| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                (c.indices().to_vec(), C64::new(re, im))
            })
            .collect();
        let psi = PureState::from_terms(6, 3, Statistics::Fermion, &terms).map_err(err)?;
        let out = converse_selection(&psi, &bd(), &opts).map_err(err)?;
        let block = out.spectrum[0] + out.spectrum[1] + out.spectrum[3];
        worst = worst.max((block - 2.0).abs());
        let supp = pinlab::rdm::support(&out.state, opts.threshold);
        ensure(supp.labels.iter().all(|l| ansatz.contains_label(l)), || format!("seed {seed}: support left the ansatz"))?;
    }
    ensure(worst <= 1e-9, || format!("max block deviation {worst:.3e}"))?;
    Ok(format!("100 states, max |n1+n2+n4-2| {worst:.1e}"))
}

fn tangent_lemma() -> Outcome {
    let mut worst: f64 = 0.0;
    for (d, n) in [(4, 2), (5, 2), (6, 3)] {
        for seed in 0..100u64 {
            let psi = random_state(d, n, Statistics::Fermion, 1000 + seed).map_err(err)?;
            let s = tangent_split(&psi).map_err(err)?;
            ensure(s.image_dim + s.symmetry_dim == d * d, || {
                format!("({d},{n}) seed {seed}: {} + {} != {}", s.image_dim, s.symmetry_dim, d * d)
            })?;
            worst = worst.max(s.max_cross_inner);
        }
    }
    ensure(worst <= 1e-8, || format!("max cross inner product {worst:.3e}"))?;
    Ok(format!("300 states, max cross inner product {worst:.1e}"))
}

fn qubit_lemmas() -> Outcome {
    for r in 2..=10 {
        let (w1, w2) = qubit_vertex_enumeration(r).map_err(err)?;
        let mut first = vec![0u8; r];
        first[0] = 1;
        ensure(w1 == vec![Vertex(first)], || format!("r={r}: w1 = {w1:?}"))?;
        ensure(w2 == vec![Vertex(vec![0; r])], || format!("r={r}: w2 = {w2:?}"))?;
    }
    let psi = pinned_qubit_state(0.6f64.sqrt(), &[0.2f64.sqrt(), 0.2f64.sqrt()]).map_err(err)?;
    let rep = qubit_selection_check(&psi, 1, 1e-9, 1e-10).map_err(err)?;
    ensure(rep.residual <= 1e-12, || format!("residual {:.3e}", rep.residual))?;
    ensure(rep.values[0].abs() <= 1e-12, || format!("D1 = {:.3e}", rep.values[0]))?;
    ensure(rep.support.len() == 3 && rep.pass, || format!("support {:?}", rep.support))?;
    Ok("r = 2..10 singletons; pinned family: 3 of 8 configurations".into())
}

fn necessity() -> Outcome {
    let mut worst = f64::INFINITY;
    for r in 3..=5 {
        let mut rng = ChaCha8Rng::seed_from_u64(r as u64);
        for _ in 0..10_000 {
            let psi = random_state_with(2, r, Statistics::Qubit, &mut rng).map_err(err)?;
            let v = higuchi_check(&qubit_marginals(&psi).map_err(err)?.spectra);
            worst = v.iter().copied().fold(worst, f64::min);
        }
    }
    ensure(worst >= -1e-9, || format!("qubit minimum {worst:.3e}"))?;
    let catalog = borland_dennis();
    let mut worst_f = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let psi = random_state_with(6, 3, Statistics::Fermion, &mut rng).map_err(err)?;
        let nons = one_body_rdm(&psi).map_err(err)?.nons().to_vec();
        for c in &catalog {
            worst_f = worst_f.min(c.evaluate(&nons).map_err(err)?);
        }
    }
    ensure(worst_f >= -1e-9, || format!("fermion minimum {worst_f:.3e}"))?;
    Ok(format!("min qubit D {worst:.3e}, min fermion D {worst_f:.3e}"))
}

fn assumption() -> Outcome {
    let mut summary = Vec::new();
    for j in 1..6 {
        match sample_face_point(&bd(), &[j], 3, 7, &[]) {
            Ok(p) => {
                let rep = check_assumption(&bd(), &[j], &p.point).map_err(err)?;
                ensure(rep.holds, || format!("j={j}: fails"))?;
                for region in &rep.regions {
                    ensure(matches!(region.certificate, CertificateJson::Separator { .. }), || format!("j={j}: no separator"))?;
                }
                summary.push(format!("{j}:holds"));
            }
            Err(PinError::Infeasible(_)) => summary.push(format!("{j}:infeasible")),
            Err(e) => return Err(err(e)),
        }
    }
    ensure(summary.iter().any(|s| s.ends_with("holds")), || "no feasible degeneracy".into())?;
    let toy = Constraint::from_ints("toy", Setting::Fermion, 0, &[1, -1]).map_err(err)?;
    let half = num_rational::BigRational::new(1.into(), 2.into());
    let rep = check_assumption(&toy, &[1], &[half.clone(), half]).map_err(err)?;
    ensure(!rep.holds && rep.regions[0].inside, || "negative fixture did not fail".into())?;
    ensure(matches!(rep.regions[0].certificate, CertificateJson::Weights { .. }), || "no inside certificate".into())?;
    Ok(format!("BD {}; negative fixture fails", summary.join(" ")))
}

fn hard_core_bosons() -> Outcome {
    ensure(hcb_bound(2, 4).map_err(err)? == num_rational::BigRational::new(3.into(), 2.into()), || "bound(2,4) != 3/2".into())?;
    let mut worst: f64 = 0.0;
    for d in 1..=6 {
        for n in 1..=d {
            let bound = pinlab::constraints::to_f64(&hcb_bound(n, d).map_err(err)?);
            let search = hcb_max_occupation_bruteforce(d, n, 32, 0).map_err(err)?;
            ensure(search.best <= bound + 1e-6, || format!("({d},{n}): {} above bound {bound}", search.best))?;
            worst = worst.max((search.best - bound).abs());
            let psi = hcb_delocalized_state(d, n).map_err(err)?;
            let rho = one_body_rdm(&psi).map_err(err)?;
            ensure((rho.nons()[0] - bound).abs() <= 1e-9, || format!("({d},{n}): delocalized {}", rho.nons()[0]))?;
            if n < d {
                let unbiased = (0..d).all(|j| (rho.nos()[(j, 0)].norm() - 1.0 / (d as f64).sqrt()).abs() <= 1e-9);
                ensure(unbiased, || format!("({d},{n}): top orbital biased"))?;
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max brute-force gap {worst:.3e}"))?;
    Ok(format!("21 (d,N) pairs, max brute-force gap {worst:.1e}"))
}

fn density_properties() -> Outcome {
    let mut worst = [0.0f64; 5];
    for seed in 0..100u64 {
        let psi = random_state(6, 3, Statistics::Fermion, 5000 + seed).map_err(err)?;
        let u = random_unitary(6, &mut ChaCha8Rng::seed_from_u64(9000 + seed));
        let rho = one_body_rdm(&psi).map_err(err)?;
        ensure(hermiticity_defect(rho.matrix()) <= 1e-10, || format!("seed {seed}: not Hermitian"))?;
        ensure(rho.nons().iter().all(|&x| (-1e-10..=1.0 + 1e-10).contains(&x)), || format!("seed {seed}: NON out of range"))?;
        worst[0] = worst[0].max((rho.trace() - 3.0).abs());
        worst[1] = worst[1].max(rho.eigen_residual());
        let moved = psi.change_basis(&u).map_err(err)?;
        let cov = rdm_matrix(&moved).map_err(err)? - &u * rho.matrix() * u.adjoint();
        worst[2] = worst[2].max(cov.norm());
        let back = moved.change_basis(&u.adjoint()).map_err(err)?;
        worst[3] = worst[3].max((back.amplitudes() - psi.amplitudes()).norm());
        let (_, rho_no) = to_natural_basis(&psi, 1e-8).map_err(err)?;
        worst[4] = worst[4].max(max_offdiag(rho_no.matrix()));
    }
    let limits = [1e-8, 1e-8, 1e-9, 1e-10, 1e-8];
    let names = ["trace", "eigen residual", "covariance", "round trip", "self-consistency"];
    for k in 0..5 {
        ensure(worst[k] <= limits[k], || format!("{} {:.3e} > {:.0e}", names[k], worst[k], limits[k]))?;
    }
    Ok(format!("100 pairs, covariance {:.1e}, self-consistency {:.1e}", worst[2], worst[4]))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        ("forward selection rule, BD", forward_rule, Duration::from_secs(1)),
        ("off-ansatz admixture unpins", contrapositive, Duration::from_secs(1)),
        ("converse selection rule", converse_rule, Duration::from_secs(2)),
        ("tangent image and symmetry algebra", tangent_lemma, Duration::from_secs(30)),
        ("qubit vertex lemmas", qubit_lemmas, Duration::from_secs(1)),
        ("constraint necessity on random states", necessity, Duration::from_secs(60)),
        ("hull condition for BD degeneracies", assumption, Duration::from_secs(10)),
        ("hard-core boson bound", hard_core_bosons, Duration::from_secs(60)),
        ("density covariance and self-consistency", density_properties, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs())),
            Err(e) => (false, e),
        };
        println!("{} {}. {name} [{:.3} s]: {detail}", if ok { "PASS" } else { "FAIL" }, k + 1, elapsed.as_secs_f64());
        if !ok {
            failed.push(k + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
