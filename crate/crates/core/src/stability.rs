//! Floquet analysis of the linearized Poincaré map `P(T) = A_dΨ(T)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::omega_morse_index;
use crate::index::{IndexConfig, IndexContext};
use crate::integrator::{integrate_endpoint, IntegratorConfig};
use crate::linalg::{
    eigen_clusters, expm, krein_type, spectral_norm, standard_j_c, svd_sorted, to_complex, unit, CMatrix,
    EigenCluster, RMatrix, ONE,
};
use crate::maslov::{iota_omega, ClmOptions, SymplecticPath};
use crate::model::MorseSturmSystem;

/// `A_d Ψ_{1,0}(T)`.
pub fn poincare_map(sys: &MorseSturmSystem) -> Result<RMatrix> {
    sys.ensure_valid()?;
    let (psi, _) = integrate_endpoint(sys, 1.0, 0.0, &IntegratorConfig::default())?;
    Ok(sys.twist_lift() * psi)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StabilityTolerances {
    /// `||λ| − 1|` bound for unit eigenvalues.
    pub circle: f64,
    /// Radius for grouping eigenvalues, relative to `max(1, ‖P‖)`.
    pub cluster: f64,
    /// Rank threshold for geometric multiplicities, relative to `‖P‖`.
    pub rank: f64,
}

impl Default for StabilityTolerances {
    fn default() -> Self {
        Self { circle: 1e-6, cluster: 1e-5, rank: 1e-8 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenEntry {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
    pub geometric: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub eigenvalues: Vec<EigenEntry>,
    pub on_circle: bool,
    pub semisimple: bool,
    pub linearly_stable: bool,
    /// Some singular value lies within a decade of the rank threshold.
    pub marginal: bool,
}

fn clusters(p: &CMatrix, tol: &StabilityTolerances) -> Vec<EigenCluster> {
    eigen_clusters(p, tol.cluster * spectral_norm(p).max(1.0))
}

pub fn classify_stability(p: &CMatrix, tol: &StabilityTolerances) -> Classification {
    let dim = p.nrows();
    let thresh = tol.rank * spectral_norm(p).max(1.0);
    let mut entries = Vec::new();
    let mut on_circle = true;
    let mut semisimple = true;
    let mut marginal = false;
    for c in clusters(p, tol) {
        let (sv, _) = svd_sorted(&(p - CMatrix::identity(dim, dim) * c.value));
        let geometric = sv.iter().filter(|&&s| s <= thresh).count();
        marginal |= sv.iter().any(|&s| s > thresh / 10.0 && s < thresh * 10.0);
        on_circle &= (c.value.norm() - 1.0).abs() <= tol.circle;
        semisimple &= geometric == c.multiplicity;
        entries.push(EigenEntry {
            re: c.value.re,
            im: c.value.im,
            modulus: c.value.norm(),
            multiplicity: c.multiplicity,
            geometric,
        });
    }
    Classification { eigenvalues: entries, on_circle, semisimple, linearly_stable: on_circle && semisimple, marginal }
}

/// Unit eigenvalue clusters of `p`.
fn unit_clusters(p: &CMatrix, tol: &StabilityTolerances) -> Vec<EigenCluster> {
    clusters(p, tol).into_iter().filter(|c| (c.value.norm() - 1.0).abs() <= tol.circle).collect()
}

/// Half the angular distance from `omega` to the nearest other unit eigenvalue.
fn half_gap(p: &CMatrix, omega: Complex64, tol: &StabilityTolerances) -> f64 {
    let mut gap = PI;
    for c in unit_clusters(p, tol) {
        let d = (c.value / c.value.norm() / omega).arg().abs();
        if d > tol.cluster.max(1e-9) * 10.0 {
            gap = gap.min(d);
        }
    }
    gap / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Splitting {
    pub plus: i64,
    pub minus: i64,
}

/// `S^±_M(ω)` along a path `γ` from `I` to `M`.
pub fn splitting_numbers_along(path: &SymplecticPath, omega: Complex64, theta0: f64) -> Result<Splitting> {
    // A Jordan block at `ω` turns roundoff δ into eigen-angles of size √δ at
    // `ω` itself, and rotating `ω` by θ opens angles of size only θ². The
    // exact intersection at `ω` is therefore recognised loosely and the
    // rotated endpoints strictly.
    let opts = ClmOptions { locate: false, zero_tol: 1e-9, ..ClmOptions::default() };
    let base = iota_omega(path, omega, &ClmOptions { zero_tol: 1e-5, ..opts })?;
    let at = |th: f64| iota_omega(path, omega * unit(th), &opts);
    let s = Splitting { plus: at(theta0)? - base, minus: at(-theta0)? - base };
    let half = Splitting { plus: at(theta0 / 2.0)? - base, minus: at(-theta0 / 2.0)? - base };
    if s != half {
        return Err(Error::ClusteredSpectrum(format!(
            "splitting numbers unstable in theta: {s:?} at {theta0:.3e}, {half:?} at half"
        )));
    }
    Ok(s)
}

/// `S^±_M(ω)` using the polar connector from `I` to `M`.
pub fn splitting_numbers(m: &CMatrix, omega: Complex64) -> Result<Splitting> {
    let tol = StabilityTolerances::default();
    let theta0 = (1e-3f64).min(half_gap(m, omega, &tol));
    if theta0 < 1e-8 {
        return Err(Error::ClusteredSpectrum(format!("unit eigenvalues too close to {omega}")));
    }
    splitting_numbers_along(&SymplecticPath::polar_connector(m), omega, theta0)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeodesicSplitting {
    pub fem: Splitting,
    pub matrix: Splitting,
    pub equal: bool,
}

/// Jumps of the FEM ω-Morse index compared with `S^±_{P(T)}(ω)`.
pub fn geodesic_splitting_check(sys: &MorseSturmSystem, omega: Complex64) -> Result<GeodesicSplitting> {
    if !sys.g.is_positive() {
        return Err(Error::NotApplicable("geodesic splitting numbers need positive definite G".into()));
    }
    let p = to_complex(&poincare_map(sys)?);
    let matrix = splitting_numbers(&p, omega)?;
    let theta = (0.5f64).min(half_gap(&p, omega, &StabilityTolerances::default()) / 2.0);
    let mor = |w: Complex64| -> Result<i64> { Ok(omega_morse_index(sys, w)?.index as i64) };
    let base = mor(omega)?;
    let fem = Splitting { plus: mor(omega * unit(theta))? - base, minus: mor(omega * unit(-theta))? - base };
    Ok(GeodesicSplitting { fem, matrix, equal: fem == matrix })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    UnstableByParity,
    Silent,
}

/// Parity criterion from `ι_spec` at `ω = 1`; never claims stability.
pub fn instability_criterion(sys: &MorseSturmSystem, i_spec: i64) -> Verdict {
    let odd = (i_spec + sys.n as i64).rem_euclid(2) == 1;
    match (sys.orientation(), odd) {
        (1, true) | (-1, false) => Verdict::UnstableByParity,
        _ => Verdict::Silent,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    True,
    False,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitSplitting {
    pub re: f64,
    pub im: f64,
    /// Smallest `q ≤ max_m` with `θ/2π` within `1e-8` of `p/q`.
    pub denominator: Option<u64>,
    pub splitting: Splitting,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexHyperbolic {
    pub is_index_hyperbolic: TriState,
    pub spectral_route: TriState,
    /// `Some(true)` when every iterate Morse index up to `max_m` vanishes.
    pub variational_route: Option<bool>,
    pub iterate_morse: Vec<usize>,
    pub unit_eigenvalues: Vec<UnitSplitting>,
    pub max_m: usize,
}

/// Smallest denominator `q ≤ max_q` with `|x − p/q| ≤ tol`, via continued fractions.
pub fn rational_denominator(x: f64, max_q: u64, tol: f64) -> Option<u64> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as i64 * k1 + k0);
        if k2 as u64 > max_q {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some(k2 as u64);
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = y - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

pub fn index_hyperbolic_check(sys: &MorseSturmSystem, max_m: usize) -> Result<IndexHyperbolic> {
    let p = to_complex(&poincare_map(sys)?);
    let tol = StabilityTolerances::default();
    let mut unit_eigenvalues = Vec::new();
    let mut spectral = TriState::True;
    for c in unit_clusters(&p, &tol) {
        let w = c.value / c.value.norm();
        let s = splitting_numbers(&p, w)?;
        let frac = (w.arg() / (2.0 * PI)).rem_euclid(1.0);
        let denominator = rational_denominator(frac, max_m as u64, 1e-8);
        let ok = match denominator {
            Some(_) => s.plus == 0 && s.minus == 0,
            None => s.plus == s.minus,
        };
        if !ok {
            spectral = TriState::False;
        }
        unit_eigenvalues.push(UnitSplitting { re: w.re, im: w.im, denominator, splitting: s });
    }
    let mut iterate_morse = Vec::new();
    let variational = if sys.g.is_positive() {
        for m in 1..=max_m {
            iterate_morse.push(omega_morse_index(&sys.iterate(m)?, ONE)?.index);
        }
        Some(iterate_morse.iter().all(|&x| x == 0))
    } else {
        None
    };
    let overall = if variational == Some(true) { TriState::True } else { spectral };
    Ok(IndexHyperbolic {
        is_index_hyperbolic: overall,
        spectral_route: spectral,
        variational_route: variational,
        iterate_morse,
        unit_eigenvalues,
        max_m,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KreinEntry {
    pub re: f64,
    pub im: f64,
    pub p: Option<usize>,
    pub q: Option<usize>,
}

fn krein_entries(p: &CMatrix, tol: &StabilityTolerances) -> Vec<KreinEntry> {
    unit_clusters(p, tol)
        .into_iter()
        .map(|c| {
            let k = krein_type(p, c.value, tol.cluster * spectral_norm(p).max(1.0)).ok();
            KreinEntry { re: c.value.re, im: c.value.im, p: k.map(|k| k.p), q: k.map(|k| k.q) }
        })
        .collect()
}

/// Linearly stable, every unit eigenvalue Krein-definite, and `±1 ∉ σ(P)`.
pub fn strong_stability_check(p: &CMatrix) -> bool {
    let tol = StabilityTolerances::default();
    if !classify_stability(p, &tol).linearly_stable {
        return false;
    }
    let radius = tol.cluster * spectral_norm(p).max(1.0);
    for c in unit_clusters(p, &tol) {
        if (c.value - ONE).norm() <= radius.max(1e-6) || (c.value + ONE).norm() <= radius.max(1e-6) {
            return false;
        }
        match krein_type(p, c.value, radius) {
            Ok(k) if k.is_definite() => {}
            _ => return false,
        }
    }
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremF {
    pub applies: bool,
    pub iterate_morse: Vec<usize>,
    pub not_strongly_stable: bool,
    pub consistent: bool,
}

pub fn theorem_f_check(sys: &MorseSturmSystem, max_m: usize) -> Result<TheoremF> {
    if !sys.g.is_positive() {
        return Err(Error::NotApplicable("needs positive definite G".into()));
    }
    let mut iterate_morse = Vec::new();
    for m in 1..=max_m {
        iterate_morse.push(omega_morse_index(&sys.iterate(m)?, ONE)?.index);
    }
    let applies = iterate_morse.iter().all(|&x| x == 0);
    let not_strongly_stable = !strong_stability_check(&to_complex(&poincare_map(sys)?));
    Ok(TheoremF { applies, iterate_morse, not_strongly_stable, consistent: !applies || not_strongly_stable })
}

/// For linearly stable `T`, `det(e^{±δJ} T − I) > 0` for the two smallest `δ`.
pub fn perturbation_lemma_check(t: &CMatrix, delta_grid: &[f64]) -> Result<bool> {
    if !classify_stability(t, &StabilityTolerances::default()).linearly_stable {
        return Err(Error::Domain("perturbation lemma needs a linearly stable matrix".into()));
    }
    let mut deltas: Vec<f64> = delta_grid.iter().cloned().filter(|d| *d > 0.0).collect();
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = t.nrows() / 2;
    let dim = t.nrows();
    for &d in deltas.iter().take(2) {
        for sign in [1.0, -1.0] {
            let m = expm(&(standard_j_c(k) * Complex64::new(sign * d, 0.0))) * t;
            let det = (m - CMatrix::identity(dim, dim)).determinant();
            if !(det.re > 0.0) || det.im.abs() > 1e-8 * det.re.abs().max(1e-300) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingEntry {
    pub re: f64,
    pub im: f64,
    pub splitting: Splitting,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub p: Vec<Vec<f64>>,
    pub classification: Classification,
    pub krein: Vec<KreinEntry>,
    pub splitting: Vec<SplittingEntry>,
    pub index_hyperbolic: Option<IndexHyperbolic>,
    pub strongly_stable_candidate: bool,
    pub i_spec: i64,
    pub criterion_verdict: Verdict,
    pub orientation: i32,
}

/// Full analysis; the index-hyperbolicity routes run when `max_m > 0`.
pub fn stability_report(sys: &MorseSturmSystem, max_m: usize) -> Result<StabilityReport> {
    stability_report_with(sys, max_m, &StabilityTolerances::default(), IndexConfig::default())
}

pub fn stability_report_with(
    sys: &MorseSturmSystem,
    max_m: usize,
    tol: &StabilityTolerances,
    index_cfg: IndexConfig,
) -> Result<StabilityReport> {
    let pr = poincare_map(sys)?;
    let p = to_complex(&pr);
    let tol = *tol;
    let classification = classify_stability(&p, &tol);
    let mut splitting = Vec::new();
    for c in unit_clusters(&p, &tol) {
        let w = c.value / c.value.norm();
        splitting.push(SplittingEntry { re: w.re, im: w.im, splitting: splitting_numbers(&p, w)? });
    }
    let ctx = IndexContext::new(sys, index_cfg)?;
    let i_spec = ctx.spectral_flow(ONE)?.value;
    let index_hyperbolic = if max_m > 0 { Some(index_hyperbolic_check(sys, max_m)?) } else { None };
    Ok(StabilityReport {
        p: (0..pr.nrows()).map(|i| pr.row(i).iter().cloned().collect()).collect(),
        krein: krein_entries(&p, &tol),
        splitting,
        index_hyperbolic,
        strongly_stable_candidate: strong_stability_check(&p),
        criterion_verdict: instability_criterion(sys, i_spec),
        i_spec,
        orientation: sys.orientation(),
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diamond, rotation};
    use crate::model::scenario;

    fn c(m: &[f64]) -> CMatrix {
        let n = (m.len() as f64).sqrt() as usize;
        to_complex(&RMatrix::from_row_slice(n, n, m))
    }

    #[test]
    fn poincare_examples() {
        let close = |a: RMatrix, b: &[f64]| (a - RMatrix::from_row_slice(2, 2, b)).abs().max() < 1e-8;
        assert!(close(poincare_map(&scenario("flat-torus(1)").unwrap()).unwrap(), &[1.0, 0.0, 1.0, 1.0]));
        assert!(close(poincare_map(&scenario("great-circle").unwrap()).unwrap(), &[1.0, 0.0, 0.0, 1.0]));
        assert!(close(poincare_map(&scenario("mobius-flat").unwrap()).unwrap(), &[-1.0, 0.0, -1.0, -1.0]));
    }

    #[test]
    fn classification_examples() {
        let tol = StabilityTolerances::default();
        assert!(classify_stability(&c(&[1.0, 0.0, 0.0, 1.0]), &tol).linearly_stable);
        let shear = classify_stability(&c(&[1.0, 0.0, 1.0, 1.0]), &tol);
        assert!(shear.on_circle && !shear.semisimple);
        assert!(!classify_stability(&c(&[2.0, 0.0, 0.0, 0.5]), &tol).on_circle);
    }

    #[test]
    fn splitting_of_identity() {
        let s = splitting_numbers(&CMatrix::identity(2, 2), ONE).unwrap();
        assert_eq!(s, Splitting { plus: 1, minus: 1 });
        assert_eq!(splitting_numbers(&CMatrix::identity(2, 2), unit(1.0)).unwrap(), Splitting { plus: 0, minus: 0 });
    }

    #[test]
    fn splitting_matches_conjugate_krein_type() {
        for theta in [PI / 3.0, 2.0, -1.2] {
            let m = to_complex(&rotation(theta));
            for w in [unit(theta), unit(-theta)] {
                let s = splitting_numbers(&m, w).unwrap();
                let k = krein_type(&m, w, 1e-8).unwrap();
                assert_eq!((s.plus, s.minus), (k.q as i64, k.p as i64), "theta {theta} omega {w}");
            }
        }
    }

    #[test]
    fn splitting_additivity() {
        let a = to_complex(&rotation(0.7));
        let b = to_complex(&rotation(0.7));
        let d = diamond(&a, &b).unwrap();
        let w = unit(0.7);
        let sa = splitting_numbers(&a, w).unwrap();
        let sd = splitting_numbers(&d, w).unwrap();
        assert_eq!(sd.plus, 2 * sa.plus);
        assert_eq!(sd.minus, 2 * sa.minus);
    }

    #[test]
    fn parity_verdicts() {
        let ft = scenario("flat-torus(1)").unwrap();
        assert_eq!(instability_criterion(&ft, 0), Verdict::UnstableByParity);
        let gc = scenario("great-circle").unwrap();
        assert_eq!(instability_criterion(&gc, 1), Verdict::Silent);
        let mb = scenario("mobius-flat").unwrap();
        assert_eq!(instability_criterion(&mb, 0), Verdict::Silent);
    }

    #[test]
    fn strong_stability_examples() {
        assert!(strong_stability_check(&to_complex(&rotation(PI / 3.0))));
        assert!(!strong_stability_check(&CMatrix::identity(2, 2)));
        assert!(!strong_stability_check(&c(&[1.0, 0.0, 1.0, 1.0])));
    }

    #[test]
    fn perturbation_lemma_examples() {
        assert!(perturbation_lemma_check(&to_complex(&rotation(PI / 2.0)), &[1e-3, 2e-3]).unwrap());
        assert!(perturbation_lemma_check(&CMatrix::identity(2, 2), &[1e-3]).unwrap());
        assert!(perturbation_lemma_check(&c(&[2.0, 0.0, 0.0, 0.5]), &[1e-3]).is_err());
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(rational_denominator(0.25, 6, 1e-8), Some(4));
        assert_eq!(rational_denominator(0.0, 6, 1e-8), Some(1));
        assert_eq!(rational_denominator(1.0 / 3.0, 6, 1e-8), Some(3));
        assert_eq!(rational_denominator(0.5_f64.sqrt(), 6, 1e-8), None);
    }

    #[test]
    fn geodesic_splitting() {
        let r = geodesic_splitting_check(&scenario("great-circle").unwrap(), ONE).unwrap();
        assert!(r.equal, "{r:?}");
        assert_eq!(r.matrix, Splitting { plus: 1, minus: 1 });
        let r = geodesic_splitting_check(&scenario("flat-torus(1)").unwrap(), Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!((r.fem, r.matrix), (Splitting { plus: 0, minus: 0 }, Splitting { plus: 0, minus: 0 }));
        let r = geodesic_splitting_check(&scenario("mobius-flat").unwrap(), -ONE).unwrap();
        assert!(r.equal, "{r:?}");
    }

    #[test]
    fn theorem_f_examples() {
        let r = theorem_f_check(&scenario("flat-torus(1)").unwrap(), 6).unwrap();
        assert!(r.applies && r.not_strongly_stable);
        let r = theorem_f_check(&scenario("hyperbolic").unwrap(), 6).unwrap();
        assert!(r.applies && r.not_strongly_stable);
        assert!(!theorem_f_check(&scenario("great-circle").unwrap(), 2).unwrap().applies);
    }
}
