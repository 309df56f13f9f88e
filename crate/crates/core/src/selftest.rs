//! Seeded property sweeps: the block-matrix fact, the μ^CLM axioms, splitting
//! number identities and the parity certificate. Each sweep reports how many
//! integer identities held and describes every failure.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::index::block_fact_check;
use crate::linalg::{
    diamond, eigenvalues, expm, rank, standard_j, to_complex, unit, CMatrix, LagrangianFrame, RMatrix,
};
use crate::maslov::{
    clm_index, iota_omega, parity_certificate, ClmOptions, LagrangianPath, Parity, SymplecticPath,
};
use crate::random::{
    random_hamiltonian, random_lagrangian, random_lagrangian_path, random_rank_matrix, random_symplectic, rng,
    Rng64,
};
use crate::stability::{splitting_numbers, splitting_numbers_along, Splitting};

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepOutcome {
    pub name: String,
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

impl SweepOutcome {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Self::default() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failures.push(what());
        }
    }

    fn record_result<T>(&mut self, r: Result<T>, check: impl FnOnce(T) -> (bool, String)) {
        match r {
            Ok(v) => {
                let (ok, msg) = check(v);
                self.record(ok, || msg);
            }
            Err(e) => self.record(false, || format!("error: {e}")),
        }
    }

    pub fn ok(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

/// `[[0, B], [B*, 0]]` has nullity `2 dim ker B` and `n₊ = n₋` for random
/// `B` of size `k ≤ 4` and every rank `0..=k`.
pub fn lemma54_sweep(seed: u64, count: usize) -> SweepOutcome {
    let mut out = SweepOutcome::new("lemma54");
    let mut r = rng(seed);
    for i in 0..count {
        let k = 1 + i % 4;
        let rk = r.gen_range(0..=k);
        let b = random_rank_matrix(&mut r, k, rk);
        let thresholded = rank(&b, 1e-10 * crate::linalg::spectral_norm(&b).max(1.0));
        out.record(thresholded == rk, || format!("k={k}: rank {thresholded} != {rk}"));
        out.record_result(block_fact_check(&b), |ok| (ok, format!("k={k} rank={rk}: block fact failed")));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClmAxioms {
    pub reparametrization: SweepOutcome,
    pub homotopy: SweepOutcome,
    pub additivity: SweepOutcome,
    pub symplectic: SweepOutcome,
    pub direct_sum: SweepOutcome,
}

impl ClmAxioms {
    pub fn all(&self) -> [&SweepOutcome; 5] {
        [&self.reparametrization, &self.homotopy, &self.additivity, &self.symplectic, &self.direct_sum]
    }

    pub fn ok(&self) -> bool {
        self.all().iter().all(|s| s.ok())
    }
}

fn clm(l0: &LagrangianFrame, path: &LagrangianPath) -> Result<i64> {
    Ok(clm_index(l0, path)?.index)
}

/// Properties I–V of μ^CLM on random Lagrangian paths `exp(tH₁ + t²H₂)L`
/// in `C^{2k}`, `k ∈ {1, 2}`, against random Lagrangians `L₀`.
pub fn clm_axiom_sweep(seed: u64, count: usize) -> Result<ClmAxioms> {
    let mut r = rng(seed);
    let mut out = ClmAxioms {
        reparametrization: SweepOutcome::new("clm_reparametrization"),
        homotopy: SweepOutcome::new("clm_homotopy"),
        additivity: SweepOutcome::new("clm_additivity"),
        symplectic: SweepOutcome::new("clm_symplectic_invariance"),
        direct_sum: SweepOutcome::new("clm_direct_sum"),
    };
    for i in 0..count {
        let k = 1 + i % 2;
        let path = random_lagrangian_path(&mut r, k)?;
        let l0 = random_lagrangian(&mut r, k)?;
        let base = match clm(&l0, &path) {
            Ok(v) => v,
            Err(e) => {
                for s in [&mut out.reparametrization, &mut out.homotopy, &mut out.additivity, &mut out.symplectic] {
                    s.record(false, || format!("path {i}: base index failed: {e}"));
                }
                continue;
            }
        };

        let warped = path.reparametrize(0.0, 1.0, |t| t * t * (3.0 - 2.0 * t));
        out.reparametrization
            .record_result(clm(&l0, &warped), |v| (v == base, format!("path {i}: {v} != {base}")));

        let bump = random_hamiltonian(&mut r, k, 1.0);
        let inner = path.clone();
        let deformed = LagrangianPath::from_fn(path.form().clone(), 0.0, 1.0, 32, move |t| {
            let w = 0.3 * (std::f64::consts::PI * t).sin();
            expm(&(&bump * Complex64::new(w, 0.0))) * inner.frame_at(t)
        })?;
        out.homotopy.record_result(clm(&l0, &deformed), |v| (v == base, format!("path {i}: {v} != {base}")));

        let c = r.gen_range(0.2..0.8);
        let split = clm(&l0, &path.restrict(0.0, c)?).and_then(|a| Ok(a + clm(&l0, &path.restrict(c, 1.0)?)?));
        out.additivity.record_result(split, |v| (v == base, format!("path {i} split at {c}: {v} != {base}")));

        let phi = random_symplectic(&mut r, k, 1.0);
        let moved = path.transformed(&phi);
        out.symplectic
            .record_result(clm(&l0.transformed(&phi), &moved), |v| (v == base, format!("path {i}: {v} != {base}")));

        let other = random_lagrangian_path(&mut r, 1)?;
        let l1 = random_lagrangian(&mut r, 1)?;
        let sum = clm(&l1, &other).and_then(|b| Ok((b, clm(&l0.direct_sum(&l1), &path.direct_sum(&other))?)));
        out.direct_sum.record_result(sum, |(b, v)| (v == base + b, format!("path {i}: {v} != {base} + {b}")));
    }
    Ok(out)
}

/// Elliptic symplectic matrix `exp(J S)` with `S` positive definite, so that
/// the whole spectrum lies on the unit circle.
fn random_elliptic(r: &mut Rng64, k: usize) -> CMatrix {
    let m = RMatrix::from_fn(2 * k, 2 * k, |_, _| r.gen_range(-1.0..1.0));
    let s = &m * m.transpose() + RMatrix::identity(2 * k, 2 * k) * 0.3;
    expm(&to_complex(&(standard_j(k) * s)))
}

/// Splitting numbers: vanishing off the spectrum, additivity under `⋄`, and
/// independence of the connecting path.
pub fn splitting_sweep(seed: u64, count: usize) -> Result<SweepOutcome> {
    let mut out = SweepOutcome::new("splitting");
    let mut r = rng(seed);
    for i in 0..count {
        let m1 = random_elliptic(&mut r, 1);
        let m2 = random_elliptic(&mut r, 1);
        let spec = eigenvalues(&m1);
        let w = spec.iter().cloned().find(|z| z.im > 0.0).unwrap_or(spec[0]);
        let w = w / w.norm();

        let off = unit(w.arg() + r.gen_range(0.3..1.0));
        let far = eigenvalues(&m1).iter().all(|z| (z - off).norm() > 1e-3);
        if far {
            out.record_result(splitting_numbers(&m1, off), |s| {
                (s == Splitting { plus: 0, minus: 0 }, format!("pair {i}: off-spectrum splitting {s:?}"))
            });
        }

        let d = diamond(&m1, &m2)?;
        let sums = splitting_numbers(&m1, w)
            .and_then(|a| Ok((a, splitting_numbers(&m2, w)?, splitting_numbers(&d, w)?)));
        out.record_result(sums, |(a, b, s)| {
            (
                s.plus == a.plus + b.plus && s.minus == a.minus + b.minus,
                format!("pair {i}: {s:?} != {a:?} + {b:?}"),
            )
        });

        let h = crate::random::random_hamiltonian(&mut r, 1, 1.5);
        let m = expm(&h);
        let ev = eigenvalues(&m);
        let target = ev.iter().cloned().find(|z| (z.norm() - 1.0).abs() < 1e-9 && z.im.abs() > 1e-6);
        let w2 = match target {
            Some(z) => z / z.norm(),
            None => unit(0.5),
        };
        let hh = h.clone();
        let straight = SymplecticPath::from_fn(0.0, 1.0, 32, move |t| expm(&(&hh * Complex64::new(t, 0.0))))?;
        let pair = splitting_numbers(&m, w2).and_then(|a| Ok((a, splitting_numbers_along(&straight, w2, 1e-3)?)));
        out.record_result(pair, |(a, b)| (a == b, format!("matrix {i}: polar {a:?} vs exponential {b:?}")));
    }
    Ok(out)
}

/// The parity certificate agrees with the parity of the CLM-computed index
/// `μ^CLM(Δ, Gr(ω̄S))` on random paths `exp(tH₁ + t²H₂)` for `ω = ±1`. At
/// `ω = 1` this is `ι₁ + n`, so the `n` offset removed by `iota_omega` is
/// added back before comparing.
pub fn parity_sweep(seed: u64, count: usize) -> Result<SweepOutcome> {
    let mut out = SweepOutcome::new("parity");
    let mut r = rng(seed);
    let opts = ClmOptions { locate: false, ..ClmOptions::default() };
    for i in 0..count {
        let k = 1 + i % 2;
        let path = crate::random::random_symplectic_path(&mut r, k)?;
        for omega in [1.0, -1.0] {
            let cert = parity_certificate(&path.start(), &path.end(), omega)?;
            if cert == Parity::Boundary {
                continue;
            }
            let offset = if omega > 0.0 { k as i64 } else { 0 };
            out.record_result(iota_omega(&path, Complex64::new(omega, 0.0), &opts), |v| {
                let v = v + offset;
                let parity = if v.rem_euclid(2) == 0 { Parity::Even } else { Parity::Odd };
                (parity == cert, format!("path {i}, omega {omega}: index {v} vs certificate {cert:?}"))
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweeps_pass() {
        let l = lemma54_sweep(1, 40);
        assert!(l.ok(), "{l:?}");
        let c = clm_axiom_sweep(2, 6).unwrap();
        for s in c.all() {
            assert!(s.ok(), "{s:?}");
        }
        let s = splitting_sweep(3, 5).unwrap();
        assert!(s.ok(), "{s:?}");
        let p = parity_sweep(4, 10).unwrap();
        assert!(p.ok(), "{p:?}");
    }
}
