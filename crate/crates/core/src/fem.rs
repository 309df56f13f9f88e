//! P1 finite elements for the ω-index form `∫⟨u̇, v̇⟩ + ⟨R̂u, v⟩` on
//! `E_ω = {u : u(0) = ωA u(T)}`.
//!
//! Node `0` is eliminated through the twist, leaving a block-cyclic
//! tridiagonal Hermitian matrix on nodes `1..=N`. Inertia of `H − σM` is read
//! off a block `LDL*` factorization (Sylvester's law), so no dense eigensolve
//! is needed.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, to_complex, CMatrix, RMatrix};
use crate::maslov::{clm_diagonal, ClmOptions};
use crate::index::{nullity, IndexConfig, IndexContext};
use crate::model::MorseSturmSystem;

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Block-cyclic tridiagonal Hermitian matrix on `N` blocks of size `n`.
#[derive(Clone, Debug)]
pub struct BlockCyclic {
    pub diag: Vec<CMatrix>,
    /// `upper[k]` couples block `k` to block `k + 1`, for `k < N − 1`.
    pub upper: Vec<CMatrix>,
    /// Coupling of block `0` to block `N − 1`.
    pub corner: CMatrix,
}

impl BlockCyclic {
    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    /// Dense form, for tests and small meshes.
    pub fn to_dense(&self) -> CMatrix {
        let nb = self.blocks();
        let n = self.diag[0].nrows();
        let mut h = CMatrix::zeros(nb * n, nb * n);
        for k in 0..nb {
            let mut v = h.view_mut((k * n, k * n), (n, n));
            v += &self.diag[k];
        }
        for k in 0..nb - 1 {
            let mut v = h.view_mut((k * n, (k + 1) * n), (n, n));
            v += &self.upper[k];
            let mut v = h.view_mut(((k + 1) * n, k * n), (n, n));
            v += self.upper[k].adjoint();
        }
        let last = (nb - 1) * n;
        let mut v = h.view_mut((0, last), (n, n));
        v += &self.corner;
        let mut v = h.view_mut((last, 0), (n, n));
        v += self.corner.adjoint();
        h
    }

    fn combine(&self, other: &Self, sigma: f64) -> Self {
        let c = Complex64::new(-sigma, 0.0);
        Self {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + b * c).collect(),
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a + b * c).collect(),
            corner: &self.corner + &other.corner * c,
        }
    }

    /// Number of negative eigenvalues, by block elimination.
    pub fn negative_count(&self) -> Result<usize> {
        let nb = self.blocks();
        if nb < 3 {
            return Err(Error::Dimension("block-cyclic inertia needs at least 3 blocks".into()));
        }
        let mut neg = 0;
        let mut count = |d: &CMatrix| -> Result<CMatrix> {
            let ev = hermitian_eigenvalues(d);
            let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
            if ev.iter().any(|x| x.abs() <= 1e-14 * scale) {
                return Err(Error::Spectral("singular pivot in block LDL".into()));
            }
            neg += ev.iter().filter(|&&x| x < 0.0).count();
            d.clone().try_inverse().ok_or_else(|| Error::Spectral("singular pivot in block LDL".into()))
        };
        let mut a_next = self.diag[0].clone();
        let mut a_last = self.diag[nb - 1].clone();
        let mut c = self.corner.clone();
        for k in 0..nb - 2 {
            let dinv = count(&a_next)?;
            let b = &self.upper[k];
            let bd = b.adjoint() * &dinv;
            a_next = &self.diag[k + 1] - &bd * b;
            a_last -= c.adjoint() * &dinv * &c;
            let fill = &bd * &c;
            c = if k + 1 == nb - 2 { &self.upper[nb - 2] - fill } else { -fill };
        }
        let dinv = count(&a_next)?;
        a_last -= c.adjoint() * &dinv * &c;
        count(&a_last)?;
        Ok(neg)
    }
}

/// Discretized ω-index form together with the P1 mass matrix.
#[derive(Clone, Debug)]
pub struct DiscretizedForm {
    pub n_intervals: usize,
    pub omega: Complex64,
    pub h: BlockCyclic,
    pub mass: BlockCyclic,
    pub step: f64,
}

fn ensure_riemannian(sys: &MorseSturmSystem) -> Result<()> {
    if !sys.g.is_positive() {
        return Err(Error::NotApplicable(format!(
            "FEM oracle needs positive definite G, got signature ({}, {})",
            sys.g.p, sys.g.q
        )));
    }
    Ok(())
}

/// Assembles the form on a uniform mesh of `n_intervals` elements.
pub fn assemble(sys: &MorseSturmSystem, omega: Complex64, n_intervals: usize) -> Result<DiscretizedForm> {
    ensure_riemannian(sys)?;
    if n_intervals < 8 {
        return Err(Error::Domain(format!("mesh needs N >= 8, got {n_intervals}")));
    }
    let n = sys.n;
    let nn = n_intervals;
    let h = sys.period / nn as f64;
    let twist = to_complex(&sys.a) * omega;
    let zero = || CMatrix::zeros(n, n);
    let mut hd = vec![zero(); nn];
    let mut hu = vec![zero(); nn - 1];
    let mut hc = zero();
    let mut md = vec![zero(); nn];
    let mut mu = vec![zero(); nn - 1];
    let mut mc = zero();
    let id = RMatrix::identity(n, n);
    for e in 0..nn {
        let t0 = e as f64 * h;
        // Local blocks [[k00, k01], [k10, k11]] for nodes (e, e + 1).
        let mut k00 = &id / h;
        let mut k01 = -&id / h;
        let mut k11 = &id / h;
        for (x, w) in GAUSS3 {
            let xi = 0.5 * (x + 1.0);
            let r = sys.rhat_at(t0 + xi * h);
            let (p0, p1) = (1.0 - xi, xi);
            let wq = 0.5 * w * h;
            k00 += &r * (wq * p0 * p0);
            k01 += &r * (wq * p0 * p1);
            k11 += &r * (wq * p1 * p1);
        }
        let k01c = to_complex(&((&k01 + k01.transpose()) * 0.5));
        let (k00c, k11c) = (to_complex(&k00), to_complex(&k11));
        let m_diag = to_complex(&(&id * (h / 3.0)));
        let m_off = to_complex(&(&id * (h / 6.0)));
        // Global block `g` holds node `g + 1`; node 0 is `twist · node N`.
        if e == 0 {
            hd[nn - 1] += twist.adjoint() * &k00c * &twist;
            hc += k01c.adjoint() * &twist;
            hd[0] += &k11c;
            md[nn - 1] += twist.adjoint() * &m_diag * &twist;
            mc += m_off.adjoint() * &twist;
            md[0] += &m_diag;
        } else {
            let (i, j) = (e - 1, e);
            hd[i] += &k00c;
            hu[i] += &k01c;
            hd[j] += &k11c;
            md[i] += &m_diag;
            mu[i] += &m_off;
            md[j] += &m_diag;
        }
    }
    let sym = |m: &mut CMatrix| *m = (&*m + m.adjoint()) * Complex64::new(0.5, 0.0);
    hd.iter_mut().for_each(sym);
    md.iter_mut().for_each(sym);
    Ok(DiscretizedForm {
        n_intervals: nn,
        omega,
        h: BlockCyclic { diag: hd, upper: hu, corner: hc },
        mass: BlockCyclic { diag: md, upper: mu, corner: mc },
        step: h,
    })
}

impl DiscretizedForm {
    /// Number of generalized eigenvalues of `(H, M)` below `sigma`.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        self.h.combine(&self.mass, sigma).negative_count()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MorseCount {
    pub index: usize,
    pub nullity_est: usize,
    pub n_used: usize,
    pub zero_band: f64,
}

/// Zero band `C h²` with `C = 10 (1 + sup‖R̂‖)`.
pub fn zero_band(sys: &MorseSturmSystem, n_intervals: usize) -> f64 {
    let h = sys.period / n_intervals as f64;
    10.0 * (1.0 + sys.sup_rhat_norm()) * h * h
}

/// Morse index and near-kernel count on one mesh.
pub fn morse_count_at(sys: &MorseSturmSystem, omega: Complex64, n_intervals: usize) -> Result<MorseCount> {
    let form = assemble(sys, omega, n_intervals)?;
    let z = zero_band(sys, n_intervals);
    let below = form.count_below(-z)?;
    let upto = form.count_below(z)?;
    Ok(MorseCount { index: below, nullity_est: upto - below, n_used: n_intervals, zero_band: z })
}

/// ω-Morse index with mesh doubling from `N = 32` until three consecutive
/// meshes agree, up to `N = 4096`.
pub fn omega_morse_index(sys: &MorseSturmSystem, omega: Complex64) -> Result<MorseCount> {
    let mut history: Vec<MorseCount> = Vec::new();
    let mut nn = 32;
    while nn <= 4096 {
        let c = morse_count_at(sys, omega, nn)?;
        history.push(c);
        if history.len() >= 3 {
            let k = history.len();
            let same = |a: &MorseCount, b: &MorseCount| a.index == b.index && a.nullity_est == b.nullity_est;
            if same(&history[k - 1], &history[k - 2]) && same(&history[k - 2], &history[k - 3]) {
                return Ok(c);
            }
        }
        nn *= 2;
    }
    Err(Error::FemNotConverged(format!(
        "index history {:?}",
        history.iter().map(|c| (c.n_used, c.index, c.nullity_est)).collect::<Vec<_>>()
    )))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MorseTheoremReport {
    pub morse_index: usize,
    pub nullity: usize,
    pub clm: i64,
    pub holds: bool,
}

/// `ι_Mor(ω̄) + dim ker(A − ωI) = μ^CLM(Δ, Gr(ωA_dΨ(t)))`.
pub fn morse_index_theorem_check(sys: &MorseSturmSystem, omega: Complex64) -> Result<MorseTheoremReport> {
    ensure_riemannian(sys)?;
    let mor = omega_morse_index(sys, omega.conj())?;
    let ctx = IndexContext::new(sys, IndexConfig::default())?;
    let path = ctx.poincare_path(omega, 1.0, 0.0)?;
    let opts = ClmOptions { locate: false, ..ctx.config().clm };
    let clm = clm_diagonal(&path, &opts)?.index;
    let nul = nullity(&sys.a, omega);
    Ok(MorseTheoremReport { morse_index: mor.index, nullity: nul, clm, holds: (mor.index + nul) as i64 == clm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::model::{scenario, SignatureMatrix};

    #[test]
    fn periodic_stiffness_is_semidefinite() {
        let sys = scenario("flat-torus(1)").unwrap();
        let f = assemble(&sys, ONE, 16).unwrap();
        let ev = hermitian_eigenvalues(&f.h.to_dense());
        assert!(ev[0].abs() < 1e-10);
        assert!(ev[1] > 1e-3);
        // Oracle: periodic stiffness spectrum (4/h) sin²(πk/N).
        let h = 1.0 / 16.0;
        let mut expect: Vec<f64> =
            (0..16).map(|k| 4.0 / h * (std::f64::consts::PI * k as f64 / 16.0).sin().powi(2)).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn ldl_matches_dense_inertia() {
        let sys = scenario("great-circle").unwrap();
        for omega in [ONE, -ONE, Complex64::new(0.0, 1.0)] {
            let f = assemble(&sys, omega, 24).unwrap();
            for sigma in [-0.3, 0.05, 1.7] {
                let dense = f.h.combine(&f.mass, sigma).to_dense();
                let neg = hermitian_eigenvalues(&dense).iter().filter(|&&x| x < 0.0).count();
                assert_eq!(f.count_below(sigma).unwrap(), neg);
            }
        }
    }

    #[test]
    fn great_circle_counts() {
        let sys = scenario("great-circle").unwrap();
        let c = omega_morse_index(&sys, ONE).unwrap();
        assert_eq!((c.index, c.nullity_est), (1, 2));
        let c = omega_morse_index(&sys, -ONE).unwrap();
        assert_eq!((c.index, c.nullity_est), (2, 0));
        let c = omega_morse_index(&sys.iterate(2).unwrap(), ONE).unwrap();
        assert_eq!(c.index, 3);
    }

    #[test]
    fn flat_torus_counts() {
        let sys = scenario("flat-torus(2)").unwrap();
        let c = omega_morse_index(&sys, ONE).unwrap();
        assert_eq!((c.index, c.nullity_est), (0, 2));
    }

    #[test]
    fn indefinite_rejected() {
        let mut sys = scenario("lorentz-flat(1,1)").unwrap();
        assert!(matches!(assemble(&sys, ONE, 16), Err(Error::NotApplicable(_))));
        sys.g = SignatureMatrix::new(2, 0).unwrap();
        assert!(assemble(&sys, ONE, 16).is_ok());
    }

    #[test]
    fn morse_theorem_examples() {
        let r = morse_index_theorem_check(&scenario("flat-torus(1)").unwrap(), ONE).unwrap();
        assert_eq!((r.morse_index, r.nullity, r.clm), (0, 1, 1));
        let r = morse_index_theorem_check(&scenario("great-circle").unwrap(), ONE).unwrap();
        assert_eq!((r.morse_index, r.nullity, r.clm), (1, 1, 2));
    }
}
