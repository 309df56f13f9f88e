//! Seeded generators for random valid systems, symplectic paths and
//! Lagrangian paths, used by the property suites and the CLI self-test.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{expm, standard_j, to_complex, CMatrix, LagrangianFrame, RMatrix};
use crate::maslov::{LagrangianPath, SymplecticPath};
use crate::model::{Causal, CurvaturePath, FourierTerm, MorseSturmSystem, SignatureMatrix};

pub use rand::SeedableRng;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn symmetric(rng: &mut Rng64, n: usize, scale: f64) -> RMatrix {
    let m = RMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&m + m.transpose()) * 0.5
}

/// A signed permutation, or a rotation by `2πk/r` when `k ≥ 2`.
fn orthogonal_block(rng: &mut Rng64, k: usize) -> RMatrix {
    if k >= 2 && rng.gen_bool(0.4) {
        let r = *[3usize, 4, 6].choose(rng).expect("non-empty");
        let j = rng.gen_range(1..r);
        let mut m = RMatrix::identity(k, k);
        let start = rng.gen_range(0..=k - 2);
        m.view_mut((start, start), (2, 2)).copy_from(&crate::linalg::rotation(2.0 * PI * j as f64 / r as f64));
        return m;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let mut m = RMatrix::zeros(k, k);
    for (i, &j) in perm.iter().enumerate() {
        m[(i, j)] = if rng.gen_bool(0.3) { -1.0 } else { 1.0 };
    }
    m
}

/// `(1/r) Σ_j (Aᵀ)^j S A^j` over the cyclic group generated by `A`.
fn group_average(s: &RMatrix, a: &RMatrix) -> RMatrix {
    let n = a.nrows();
    let mut acc = s.clone();
    let mut power = a.clone();
    let mut order = 1usize;
    while (&power - RMatrix::identity(n, n)).abs().max() > 1e-12 && order < 64 {
        acc += power.transpose() * s * &power;
        power = &power * a;
        order += 1;
    }
    acc / order as f64
}

/// Random valid system with `n ≤ max_n`, mixed signature, finite-order twist
/// and a two-mode Fourier curvature whose cosine parts are twist invariant.
pub fn random_system(rng: &mut Rng64, max_n: usize) -> MorseSturmSystem {
    let n = rng.gen_range(1..=max_n.max(1));
    let p = rng.gen_range(0..=n);
    let g = SignatureMatrix::new(p, n - p).expect("n > 0");
    let mut a = RMatrix::zeros(n, n);
    if p > 0 {
        a.view_mut((0, 0), (p, p)).copy_from(&orthogonal_block(rng, p));
    }
    if n > p {
        a.view_mut((p, p), (n - p, n - p)).copy_from(&orthogonal_block(rng, n - p));
    }
    let period = rng.gen_range(0.5..2.0);
    let mut terms = Vec::new();
    for k in 0..=1u32 {
        let cos = group_average(&symmetric(rng, n, 1.5), &a);
        let sin = if k == 0 { RMatrix::zeros(n, n) } else { symmetric(rng, n, 1.0) };
        terms.push(FourierTerm { k, cos, sin });
    }
    MorseSturmSystem {
        n,
        g,
        period,
        a,
        rhat: CurvaturePath::Fourier(terms),
        causal: if p == n && rng.gen_bool(0.5) { Causal::Timelike } else { Causal::Spacelike },
        label: format!("random(n={n},p={p})"),
    }
}

/// Random real Hamiltonian matrix `J S` of size `2k`.
pub fn random_hamiltonian(rng: &mut Rng64, k: usize, scale: f64) -> CMatrix {
    to_complex(&(standard_j(k) * symmetric(rng, 2 * k, scale)))
}

/// `t ↦ exp(t H₁ + t² H₂)` on `[0, 1]`.
pub fn random_symplectic_path(rng: &mut Rng64, k: usize) -> Result<SymplecticPath> {
    let h1 = random_hamiltonian(rng, k, 2.0);
    let h2 = random_hamiltonian(rng, k, 1.0);
    SymplecticPath::from_fn(0.0, 1.0, 32, move |t| {
        expm(&(&h1 * Complex64::new(t, 0.0) + &h2 * Complex64::new(t * t, 0.0)))
    })
}

/// `t ↦ exp(t H₁ + t² H₂) L` on `[0, 1]` for a random Lagrangian `L` in
/// `(C^{2k}, J)`.
pub fn random_lagrangian_path(rng: &mut Rng64, k: usize) -> Result<LagrangianPath> {
    let start = random_lagrangian(rng, k)?;
    let h1 = random_hamiltonian(rng, k, 2.5);
    let h2 = random_hamiltonian(rng, k, 1.0);
    let z = start.z().clone();
    LagrangianPath::from_fn(start.form().clone(), 0.0, 1.0, 32, move |t| {
        expm(&(&h1 * Complex64::new(t, 0.0) + &h2 * Complex64::new(t * t, 0.0))) * &z
    })
}

/// `exp(H) L_h` with `L_h` the horizontal Lagrangian.
pub fn random_lagrangian(rng: &mut Rng64, k: usize) -> Result<LagrangianFrame> {
    let h = random_hamiltonian(rng, k, 1.0);
    let z = expm(&h) * LagrangianFrame::horizontal(k).z();
    LagrangianFrame::new(z, crate::linalg::standard_j_c(k), 1e-8)
}

/// Random real symplectic matrix `exp(H)`.
pub fn random_symplectic(rng: &mut Rng64, k: usize, scale: f64) -> CMatrix {
    expm(&random_hamiltonian(rng, k, scale))
}

/// Random complex `k × k` matrix of rank `r`.
pub fn random_rank_matrix(rng: &mut Rng64, k: usize, r: usize) -> CMatrix {
    let mut gauss = |rows: usize, cols: usize| {
        CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    };
    if r == 0 {
        return CMatrix::zeros(k, k);
    }
    gauss(k, r) * gauss(r, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_symplectic;

    #[test]
    fn random_systems_are_valid() {
        let mut r = rng(11);
        for _ in 0..200 {
            let sys = random_system(&mut r, 3);
            assert!(sys.validate().is_empty(), "{:?}", sys.validate());
        }
    }

    #[test]
    fn random_systems_are_seed_deterministic() {
        let a = random_system(&mut rng(5), 3);
        let b = random_system(&mut rng(5), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn random_paths_are_symplectic_and_lagrangian() {
        let mut r = rng(3);
        let s = random_symplectic_path(&mut r, 2).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!(is_symplectic(&s.at(t), 1e-9).unwrap());
        }
        let l = random_lagrangian_path(&mut r, 2).unwrap();
        for t in [0.0, 0.7, 1.0] {
            assert!(l.frame_checked(t).is_ok());
        }
    }

    #[test]
    fn rank_matrices_have_requested_rank() {
        let mut r = rng(9);
        for k in 1..=4 {
            for rank in 0..=k {
                let m = random_rank_matrix(&mut r, k, rank);
                assert_eq!(crate::linalg::rank(&m, 1e-9), rank);
            }
        }
    }
}
