//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Runs as a plain binary (`harness = false`) and exits nonzero if any
//! criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use msindex::error::Result;
use msindex::fem::{morse_count_at, omega_morse_index};
use msindex::index::{bott_check, prop55_check, roots_of_unity, theorem_a_check, IndexConfig, IndexContext};
use msindex::integrator::{integrate_endpoint, IntegratorConfig};
use msindex::linalg::{to_complex, unit, ONE};
use msindex::model::{closed_form_phi, scenario, CurvaturePath, MorseSturmSystem, SignatureMatrix, CATALOG};
use msindex::random::{random_rank_matrix, random_system, rng};
use msindex::runner::{run, Analysis, RunConfig, ScenarioSource};
use msindex::selftest::{clm_axiom_sweep, lemma54_sweep, splitting_sweep};
use msindex::stability::{
    classify_stability, geodesic_splitting_check, instability_criterion, poincare_map, theorem_f_check,
    StabilityTolerances, Verdict,
};

/// Criterion 1: Frobenius error of `Ψ(T)` against the closed form.
const CLOSED_FORM_TOL: f64 = 1e-8;
/// Criterion 1: agreement of the closed form with `exp(T J D)` built in this file.
const EXPM_TOL: f64 = 1e-9;
/// Criterion 3: meshes compared under doubling.
const FEM_MESHES: [usize; 2] = [256, 512];
/// Criterion 7: rank threshold relative to `max(1, ‖B‖)` and eigenvalue zero band.
const LEMMA54_RANK_TOL: f64 = 1e-10;
/// Seeds of the randomized criteria.
const SEED_RANDOM_SYSTEMS: u64 = 2024;
const SEED_BOTT: u64 = 77;
const SEED_LEMMA54: u64 = 54;
const SEED_CLM: u64 = 9;
const SEED_SPLITTING: u64 = 10;
const SEED_DETERMINISM: u64 = 12;

type Outcome = Result<(bool, String)>;

fn omegas() -> [Complex64; 4] {
    [ONE, -ONE, Complex64::new(0.0, 1.0), unit(2.0 * std::f64::consts::PI / 3.0)]
}

fn catalog() -> Vec<MorseSturmSystem> {
    CATALOG.iter().map(|n| scenario(n).expect("catalog entry")).collect()
}

fn random_systems(count: usize, seed: u64) -> Vec<MorseSturmSystem> {
    let mut r = rng(seed);
    (0..count).map(|_| random_system(&mut r, 3)).collect()
}

fn ctx(sys: &MorseSturmSystem) -> Result<IndexContext> {
    IndexContext::new(sys, IndexConfig::default())
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `exp(T J D)` for the constant coefficient `D = diag(G, −cκI − sG)`.
fn expm_oracle(diag_g: &[f64], curvature: f64, s: f64, period: f64) -> DMatrix<f64> {
    let n = diag_g.len();
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    for (i, &g) in diag_g.iter().enumerate() {
        // J D with J = [[0, −I], [I, 0]]: upper right −(−cκ − s g), lower left g.
        k[(i, n + i)] = curvature + s * g;
        k[(n + i, i)] = g;
    }
    (k * period).exp()
}

fn criterion_1() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for _ in 0..20 {
        let n = r.gen_range(1..=3);
        let p = r.gen_range(0..=n);
        let g = SignatureMatrix::new(p, n - p)?;
        let kappa = r.gen_range(-1.5..1.5);
        let c = r.gen_range(0.0..=1.0);
        let s = r.gen_range(-1.0..3.0);
        let period = r.gen_range(0.5..2.0);
        let mut sys = scenario("flat-torus(1)")?;
        sys.n = n;
        sys.g = g;
        sys.period = period;
        sys.a = DMatrix::identity(n, n);
        sys.rhat = CurvaturePath::Constant(DMatrix::identity(n, n) * kappa);
        let (psi, _) = integrate_endpoint(&sys, c, s, &IntegratorConfig::default())?;
        let closed = closed_form_phi(&sys.g, c * kappa, s, period);
        worst = worst.max(frobenius(&(&psi - &closed)));
        let oracle = expm_oracle(&g.diag(), c * kappa, s, period);
        worst_oracle = worst_oracle.max(frobenius(&(&closed - oracle)));
    }
    Ok((
        worst < CLOSED_FORM_TOL && worst_oracle < EXPM_TOL,
        format!("20 (c,s) pairs: max |Psi - Phi|_F = {worst:.2e} (< {CLOSED_FORM_TOL:.0e}), closed form vs expm {worst_oracle:.2e}"),
    ))
}

fn criterion_2() -> Outcome {
    let mut systems = catalog();
    systems.extend(random_systems(50, SEED_RANDOM_SYSTEMS));
    let mut checked = 0;
    let mut failures = Vec::new();
    for sys in &systems {
        let c = ctx(sys)?;
        for w in omegas() {
            let rep = theorem_a_check(&c, w)?;
            checked += 1;
            if rep.i_spec_spath != Some(rep.i_geo - rep.nullity as i64) {
                failures.push(format!("{} at {w}: {:?} vs {} - {}", sys.label, rep.i_spec_spath, rep.i_geo, rep.nullity));
            }
        }
    }
    Ok((failures.is_empty(), format!("{checked} (system, omega) cases, failures {failures:?}")))
}

fn stable_count(sys: &MorseSturmSystem, omega: Complex64) -> Result<Option<(usize, usize)>> {
    let a = morse_count_at(sys, omega, FEM_MESHES[0])?;
    let b = morse_count_at(sys, omega, FEM_MESHES[1])?;
    Ok(((a.index, a.nullity_est) == (b.index, b.nullity_est)).then_some((b.index, b.nullity_est)))
}

fn criterion_3() -> Outcome {
    let mut bad = Vec::new();
    for n in 1..=3 {
        let sys = scenario(&format!("flat-torus({n})"))?;
        if stable_count(&sys, ONE)? != Some((0, n)) {
            bad.push(format!("flat-torus({n})"));
        }
    }
    let gc = scenario("great-circle")?;
    if stable_count(&gc, ONE)?.map(|x| x.0) != Some(1) {
        bad.push("great-circle omega=1".to_string());
    }
    if stable_count(&gc, -ONE)?.map(|x| x.0) != Some(2) {
        bad.push("great-circle omega=-1".to_string());
    }
    for m in 1..=4 {
        if stable_count(&gc.iterate(m)?, ONE)?.map(|x| x.0) != Some(2 * m - 1) {
            bad.push(format!("great-circle^{m}"));
        }
    }
    Ok((bad.is_empty(), format!("anchors stable under N = {FEM_MESHES:?}; mismatches {bad:?}")))
}

fn criterion_4() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for sys in catalog().into_iter().filter(|s| s.g.is_positive()) {
        let spec = ctx(&sys)?.spectral_flow(ONE)?.value;
        let mor = omega_morse_index(&sys, ONE)?.index as i64;
        ok &= spec == mor;
        lines.push(format!("{}: {spec}/{mor}", sys.label));
    }
    Ok((ok, format!("i_spec vs i_Mor at omega = 1: {}", lines.join(", "))))
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    for sys in catalog() {
        let c = ctx(&sys)?;
        for m in 1..=6 {
            let r = bott_check(&c, m)?;
            cases += 1;
            if !(r.equal && r.nullity_equal) {
                failures.push(format!("{} m={m}: {} vs {}", sys.label, r.lhs, r.rhs));
            }
        }
    }
    for (i, sys) in random_systems(20, SEED_BOTT).iter().enumerate() {
        let m = 2 + i % 3;
        let r = bott_check(&ctx(sys)?, m)?;
        cases += 1;
        if !(r.equal && r.nullity_equal) {
            failures.push(format!("{} m={m}: {} vs {}", sys.label, r.lhs, r.rhs));
        }
    }
    Ok((failures.is_empty(), format!("{cases} iteration identities with nullity identity, failures {failures:?}")))
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let ws = [ONE, -ONE, Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
    for sys in catalog() {
        let c = ctx(&sys)?;
        for w in ws {
            let r = prop55_check(&c, w)?;
            if !r.holds {
                failures.push(format!("{} at {w}: {} vs {}", sys.label, r.lhs, r.nullity));
            }
        }
    }
    Ok((failures.is_empty(), format!("{} cases, failures {failures:?}", CATALOG.len() * ws.len())))
}

/// Inertia of `[[0, B], [B*, 0]]` from a Hermitian eigen-decomposition.
fn block_inertia(b: &DMatrix<Complex64>, tol: f64) -> (usize, usize, usize) {
    let k = b.nrows();
    let mut m = DMatrix::<Complex64>::zeros(2 * k, 2 * k);
    m.view_mut((0, k), (k, k)).copy_from(b);
    m.view_mut((k, 0), (k, k)).copy_from(&b.adjoint());
    let ev = SymmetricEigen::new(m).eigenvalues;
    let plus = ev.iter().filter(|&&x| x > tol).count();
    let minus = ev.iter().filter(|&&x| x < -tol).count();
    (plus, ev.len() - plus - minus, minus)
}

fn criterion_7() -> Outcome {
    let sweep = lemma54_sweep(SEED_LEMMA54, 200);
    let mut r = rng(SEED_LEMMA54 + 1);
    let mut oracle_fail = 0;
    for i in 0..200 {
        let k = 1 + i % 4;
        let rk = r.gen_range(0..=k);
        let b = random_rank_matrix(&mut r, k, rk);
        let scale = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
        let (plus, zero, minus) = block_inertia(&b, LEMMA54_RANK_TOL * scale);
        if !(zero == 2 * (k - rk) && plus == minus) {
            oracle_fail += 1;
        }
    }
    Ok((
        sweep.ok() && oracle_fail == 0,
        format!(
            "library sweep {}/{} identities, eigen-decomposition oracle {} failures of 200",
            sweep.passed, sweep.total, oracle_fail
        ),
    ))
}

fn criterion_8() -> Outcome {
    let mut systems = catalog();
    systems.extend(random_systems(50, SEED_RANDOM_SYSTEMS));
    let tol = StabilityTolerances::default();
    let mut contradictions = Vec::new();
    let mut fired = 0;
    for sys in &systems {
        let i_spec = ctx(sys)?.spectral_flow(ONE)?.value;
        let verdict = instability_criterion(sys, i_spec);
        let stable = classify_stability(&to_complex(&poincare_map(sys)?), &tol).linearly_stable;
        if verdict == Verdict::UnstableByParity {
            fired += 1;
            if stable {
                contradictions.push(sys.label.clone());
            }
        }
    }
    let ft = scenario("flat-torus(1)")?;
    let anchor_spec = ctx(&ft)?.spectral_flow(ONE)?.value;
    let anchor = ft.n == 1 && anchor_spec == 0 && ft.orientation() == 1
        && instability_criterion(&ft, anchor_spec) == Verdict::UnstableByParity;
    Ok((
        contradictions.is_empty() && anchor,
        format!(
            "{} systems, parity verdict fired {fired} times, stable contradictions {contradictions:?}; flat-torus(1) anchor {anchor}",
            systems.len()
        ),
    ))
}

fn criterion_9() -> Outcome {
    let ax = clm_axiom_sweep(SEED_CLM, 100)?;
    let parts: Vec<String> = ax.all().iter().map(|s| format!("{} {}/{}", s.name, s.passed, s.total)).collect();
    Ok((ax.ok(), format!("100 paths: {}", parts.join(", "))))
}

fn criterion_10() -> Outcome {
    let sweep = splitting_sweep(SEED_SPLITTING, 20)?;
    let gc = geodesic_splitting_check(&scenario("great-circle")?, ONE)?;
    let mb = geodesic_splitting_check(&scenario("mobius-flat")?, -ONE)?;
    Ok((
        sweep.ok() && gc.equal && mb.equal,
        format!(
            "matrix identities {}/{} {:?}; great-circle FEM {:?} vs matrix {:?}; mobius-flat FEM {:?} vs matrix {:?}",
            sweep.passed, sweep.total, sweep.failures, gc.fem, gc.matrix, mb.fem, mb.matrix
        ),
    ))
}

fn criterion_11() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["flat-torus(1)", "hyperbolic"] {
        let f = theorem_f_check(&scenario(name)?, 6)?;
        ok &= f.iterate_morse.iter().all(|&x| x == 0) && f.not_strongly_stable;
        parts.push(format!("{name}: iterate indices {:?}, not strongly stable {}", f.iterate_morse, f.not_strongly_stable));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_12() -> Outcome {
    let mut cfg = RunConfig::new(
        ScenarioSource::Builtin("twisted-rot(pi/2)".into()),
        vec![Analysis::Indices, Analysis::Stability, Analysis::Bott, Analysis::Selftest],
    );
    cfg.omegas = roots_of_unity(4);
    cfg.max_m = 3;
    cfg.seed = SEED_DETERMINISM;
    let a = run(&cfg)?.json();
    let b = run(&cfg)?.json();
    let args = ["analyze", "--scenario", "great-circle", "--analyses", "indices,stability,selftest", "--omegas", "roots:3", "--seed", "5"];
    let bin = |_: ()| Command::new(env!("CARGO_BIN_EXE_msindex")).args(args).output();
    let (x, y) = (bin(())?, bin(())?);
    let cli_ok = x.status.success() && x.stdout == y.stdout && !x.stdout.is_empty();
    Ok((a == b && cli_ok, format!("library report {} bytes identical {}, CLI report identical {cli_ok}", a.len(), a == b)))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("closed-form agreement", criterion_1),
        ("spectral flow formula, both routes", criterion_2),
        ("FEM Riemannian anchors", criterion_3),
        ("spectral index equals FEM Morse index", criterion_4),
        ("iteration formula", criterion_5),
        ("index at s0 equals twist nullity", criterion_6),
        ("block matrix inertia sweep", criterion_7),
        ("parity criterion never contradicts stability", criterion_8),
        ("CLM index axioms", criterion_9),
        ("splitting numbers", criterion_10),
        ("vanishing iterate indices exclude strong stability", criterion_11),
        ("determinism", criterion_12),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name} [{:.1}s]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
