use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use msindex::index::{block_fact_check, IndexConfig, IndexContext};
use msindex::integrator::{integrate_fundamental, IntegratorConfig};
use msindex::linalg::{unit, ONE};
use msindex::maslov::{clm_index, iota_omega, parity_certificate, ClmOptions, Parity};
use msindex::random::{random_lagrangian, random_lagrangian_path, random_rank_matrix, random_symplectic_path, random_system, rng};
use msindex::runner::to_canonical_json;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn block_matrix_inertia(seed in any::<u64>(), k in 1usize..=4) {
        let mut r = rng(seed);
        let rank = r.gen_range(0..=k);
        let b = random_rank_matrix(&mut r, k, rank);
        prop_assert!(block_fact_check(&b).unwrap());
    }

    #[test]
    fn clm_additivity_and_reparametrization(seed in any::<u64>(), k in 1usize..=2, cut in 0.15f64..0.85) {
        let mut r = rng(seed);
        let path = random_lagrangian_path(&mut r, k).unwrap();
        let l0 = random_lagrangian(&mut r, k).unwrap();
        let whole = clm_index(&l0, &path).unwrap().index;
        let left = clm_index(&l0, &path.restrict(0.0, cut).unwrap()).unwrap().index;
        let right = clm_index(&l0, &path.restrict(cut, 1.0).unwrap()).unwrap().index;
        prop_assert_eq!(whole, left + right);
        let warped = path.reparametrize(0.0, 1.0, |t| t.powi(3));
        prop_assert_eq!(clm_index(&l0, &warped).unwrap().index, whole);
    }

    #[test]
    fn parity_certificate_matches_index(seed in any::<u64>(), k in 1usize..=2, negative in any::<bool>()) {
        let mut r = rng(seed);
        let path = random_symplectic_path(&mut r, k).unwrap();
        let omega = if negative { -1.0 } else { 1.0 };
        let cert = parity_certificate(&path.start(), &path.end(), omega).unwrap();
        prop_assume!(cert != Parity::Boundary);
        let opts = ClmOptions { locate: false, ..ClmOptions::default() };
        let v = iota_omega(&path, Complex64::new(omega, 0.0), &opts).unwrap();
        let v = if negative { v } else { v + k as i64 };
        let parity = if v.rem_euclid(2) == 0 { Parity::Even } else { Parity::Odd };
        prop_assert_eq!(parity, cert);
    }

    #[test]
    fn fundamental_solution_is_symplectic(seed in any::<u64>()) {
        let sys = random_system(&mut rng(seed), 3);
        let sol = integrate_fundamental(&sys, 1.0, 0.0, &IntegratorConfig::default()).unwrap();
        for psi in sol.samples().iter().step_by(16) {
            prop_assert!((psi.determinant() - 1.0).abs() < 1e-7 * psi.norm().powi(2).max(1.0));
        }
    }

    #[test]
    fn canonical_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = to_canonical_json(&serde_json::json!(x));
        prop_assert_eq!(s.trim().parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn conjugate_omega_gives_same_indices(seed in any::<u64>(), theta in 0.2f64..3.0) {
        let sys = random_system(&mut rng(seed), 2);
        let ctx = IndexContext::new(&sys, IndexConfig::default()).unwrap();
        let w = unit(theta);
        prop_assert_eq!(ctx.geometric_index(w).unwrap(), ctx.geometric_index(w.conj()).unwrap());
        prop_assert_eq!(ctx.spectral_flow(w).unwrap().value, ctx.spectral_flow(w.conj()).unwrap().value);
        prop_assert_eq!(ctx.nullity(w), ctx.nullity(w.conj()));
        prop_assert!(ctx.nullity(ONE) <= sys.n);
    }
}
