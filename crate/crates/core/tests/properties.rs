//! Property tests over randomly drawn parameters, states and POVMs.

use alfent_core::alf::{alf_closed_form, chain_entropy_bound, entropy_sequence, rate_estimate, RateMethod};
use alfent_core::collision::{
    cgdm_bruteforce, cgdm_closed_form, random_povm, reduced_dynamics, reference_povm, tn_channel, CollisionModel,
};
use alfent_core::divisibility::{propagator, trace_distance_trajectory, Propagator};
use alfent_core::env_chain::{build_env, MarkovEnv};
use alfent_core::qmat::{
    hermitian_eigenvalues, random_density_matrix, random_unitary, trace_norm, von_neumann_entropy,
};
use alfent_core::{ComplexMatrix, LogBase};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// (p, r, Δ) with p ∈ [0, ½], r ∈ [0, 1 − 2p], Δ ∈ [0, p].
fn params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..=0.5f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(p, rf, df)| (p, (1.0 - 2.0 * p) * rf, p * df))
}

fn env_of((p, r, d): (f64, f64, f64)) -> MarkovEnv {
    build_env(p, r, d).unwrap()
}

fn half() -> ComplexMatrix {
    ComplexMatrix::identity(2).scale_real(0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_and_trace_norm_are_unitarily_invariant(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(d, &mut rng);
        let sigma = random_density_matrix(d, &mut rng);
        let u = random_unitary(d, &mut rng);
        let rotated = &(&u * &rho) * &u.adjoint();
        let s = von_neumann_entropy(&rho, LogBase::E).unwrap();
        prop_assert!((s - von_neumann_entropy(&rotated, LogBase::E).unwrap()).abs() < 1e-10);
        let x = &rho - &sigma;
        let ux = &(&u * &x) * &u.adjoint();
        prop_assert!((trace_norm(&x) - trace_norm(&ux)).abs() < 1e-10);
        prop_assert!(trace_norm(&(&rho + &x)) <= trace_norm(&rho) + trace_norm(&x) + 1e-10);
    }

    #[test]
    fn stationary_law_is_fixed_by_the_transition(ps in params()) {
        let env = env_of(ps);
        let t = env.transition();
        let pi = env.stationary();
        for (i, row) in t.iter().enumerate() {
            let next: f64 = row.iter().zip(&pi).map(|(a, b)| a * b).sum();
            prop_assert!((next - pi[i]).abs() < 1e-14);
        }
        let total: f64 = env.block_distribution(4).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_is_marginal_entropy_minus_mutual_information(ps in params()) {
        let env = env_of(ps);
        prop_assert!((env.entropy_rate() - (env.one_site_entropy() - env.mutual_information())).abs() < 1e-10);
        prop_assert!((alf_closed_form(ps.0, ps.1, ps.2).unwrap() - env.entropy_rate()).abs() < 1e-12);
    }

    #[test]
    fn block_entropy_per_site_approaches_the_rate(ps in params(), n in 1usize..30) {
        let env = env_of(ps);
        let gap = (env.block_entropy(n) / n as f64 - env.entropy_rate()).abs();
        prop_assert!(gap <= env.one_site_entropy() / n as f64 + 1e-12);
    }

    #[test]
    fn correlations_grow_and_entropy_falls_with_delta(p in 0.01..=0.5f64, rf in 0.0..=1.0f64, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let r = (1.0 - 2.0 * p) * rf;
        let (lo, hi) = if a <= b { (a * p, b * p) } else { (b * p, a * p) };
        let (e_lo, e_hi) = (build_env(p, r, lo).unwrap(), build_env(p, r, hi).unwrap());
        prop_assert!(e_hi.mutual_information() >= e_lo.mutual_information() - 1e-14);
        prop_assert!(alf_closed_form(p, r, hi).unwrap() <= alf_closed_form(p, r, lo).unwrap() + 1e-14);
    }

    #[test]
    fn cgdm_is_a_density_matrix_for_any_povm(ps in params(), seed in any::<u64>(), m in 2usize..5, n in 0usize..3) {
        let model = CollisionModel::new(env_of(ps));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let povm = random_povm(m, &mut rng);
        let rho = cgdm_bruteforce(&model, &povm, n).unwrap().matrix();
        prop_assert!(rho.hermiticity_defect() < 1e-10);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-9);
        let min = hermitian_eigenvalues(&rho).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9);
    }

    #[test]
    fn closed_form_spectrum_matches_bruteforce(ps in params(), n in 0usize..3) {
        let model = CollisionModel::new(env_of(ps));
        let f = reference_povm(&half()).unwrap();
        let brute = cgdm_bruteforce(&model, &f, n).unwrap().spectrum().unwrap();
        let closed = cgdm_closed_form(&model, n).unwrap().spectrum();
        prop_assert_eq!(brute.len(), closed.len());
        for (a, b) in brute.iter().zip(&closed) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uncorrelated_environment_gives_product_weights(p in 0.0..=0.5f64, rf in 0.0..=1.0f64, n in 1usize..6) {
        let env = build_env(p, (1.0 - 2.0 * p) * rf, 0.0).unwrap();
        let one: [f64; 4] = tn_channel(&env, 1).unwrap().weights().try_into().unwrap();
        prop_assert!(tn_channel(&env, n).unwrap().factorization_defect(one) < 1e-15);
    }

    #[test]
    fn entropies_respect_the_chain_bound(ps in params(), seed in any::<u64>()) {
        let model = CollisionModel::new(env_of(ps));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = entropy_sequence(&model, &random_povm(4, &mut rng), 4, "random").unwrap();
        for (i, s) in seq.values.iter().enumerate() {
            prop_assert!(*s <= chain_entropy_bound(model.env(), i + 1) + 1e-9);
        }
    }

    #[test]
    fn slope_and_difference_agree_on_the_reference_sequence(ps in params()) {
        let model = CollisionModel::new(env_of(ps));
        let seq = entropy_sequence(&model, &reference_povm(&half()).unwrap(), 5, "reference").unwrap();
        let slope = rate_estimate(&seq, RateMethod::Slope).unwrap();
        let diff = rate_estimate(&seq, RateMethod::Difference).unwrap();
        prop_assert!((slope - diff).abs() < 1e-9);
    }

    #[test]
    fn propagators_satisfy_the_cocycle_identity(ps in params(), m in 0usize..10, k in 1usize..10, l in 1usize..10) {
        let env = env_of(ps);
        let (n, q) = (m + k, m + k + l);
        let maps = [propagator(&env, m, n).unwrap(), propagator(&env, n, q).unwrap(), propagator(&env, m, q).unwrap()];
        if let [Propagator::Regular { map: a }, Propagator::Regular { map: b }, Propagator::Regular { map: c }] = maps {
            let composed = b.compose(&a).bloch();
            for (x, y) in composed.iter().zip(c.bloch()) {
                prop_assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
            }
            let evolved = a.compose(&reduced_dynamics(&env, m)).bloch();
            for (x, y) in evolved.iter().zip(reduced_dynamics(&env, n).bloch()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn p_divisible_dynamics_has_no_revivals(ps in params(), seed in any::<u64>()) {
        let env = env_of(ps);
        let p_divisible = (0..40).all(|n| match propagator(&env, n, n + 1).unwrap() {
            Propagator::Regular { map } | Propagator::KernelPreserving { map, .. } => map.is_positive(1e-12),
            Propagator::NonInvertible { .. } => false,
        });
        if p_divisible {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_density_matrix(2, &mut rng), random_density_matrix(2, &mut rng));
            let traj = trace_distance_trajectory(&env, &a, &b, 40, 1e-12).unwrap();
            prop_assert!(traj.revivals.is_empty(), "{:?}", traj.revivals);
        }
    }
}
