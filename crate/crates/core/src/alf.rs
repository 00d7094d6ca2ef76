//! Entropy sequences of coarse-grained density matrices and the rate
//! estimates built from them.
//!
//! Sequences are indexed by the number of measurement slots `k = 1, 2, …`;
//! slot count `k` corresponds to `k − 1` collisions. All values are in nats.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collision::{cgdm_bruteforce, random_povm, reduced_dynamics, reference_povm, CollisionModel, Povm};
use crate::env_chain::{build_env, EnvParams, MarkovEnv};
use crate::qmat::{eta, von_neumann_entropy, ComplexMatrix, LogBase};
use crate::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropySequence {
    /// `values[k − 1] = S(ρ[𝒳^(k)])`.
    pub values: Vec<f64>,
    pub povm: String,
    pub params: EnvParams,
}

impl EntropySequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `S_{k+1} − S_k` for `k = 1 … len − 1`.
    pub fn differences(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn in_base(&self, base: LogBase) -> Vec<f64> {
        self.values.iter().map(|&v| base.from_nats(v)).collect()
    }
}

/// Entropy sequence for an arbitrary POVM by brute force, `k = 1..=n_max`.
pub fn entropy_sequence(model: &CollisionModel, povm: &Povm, n_max: usize, tag: &str) -> Result<EntropySequence> {
    let values =
        (1..=n_max).map(|k| cgdm_bruteforce(model, povm, k - 1)?.entropy(LogBase::E)).collect::<Result<Vec<_>>>()?;
    Ok(EntropySequence { values, povm: tag.to_string(), params: model.env().params() })
}

/// Entropy sequence for the reference POVM from the closed-form spectrum,
/// `S_k = 2 log 2 + H(π_[1,k−1])`. Not limited by the brute-force cap.
pub fn reference_entropy_sequence(model: &CollisionModel, n_max: usize) -> Result<EntropySequence> {
    let half = ComplexMatrix::identity(2).scale_real(0.5);
    if model.rho_s().max_abs_diff(&half) > 1e-12 {
        return Err(Error::InvalidParameter(
            "the closed-form path is only available for the maximally mixed system state".into(),
        ));
    }
    let env = model.env();
    let values = (1..=n_max)
        .map(|k| match model.interaction() {
            crate::collision::Interaction::ControlledPauli => 2.0 * LN2 + env.block_entropy(k - 1),
            crate::collision::Interaction::Identity => 2.0 * LN2,
        })
        .collect();
    Ok(EntropySequence { values, povm: "reference".into(), params: env.params() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    /// Least-squares slope of `S_k` against `k` over `k ≥ 2`.
    Slope,
    /// Last difference `S_{n} − S_{n−1}`.
    Difference,
}

pub fn rate_estimate(seq: &EntropySequence, method: RateMethod) -> Result<f64> {
    let n = seq.values.len();
    if n < 3 {
        return Err(Error::SequenceTooShort { needed: 3, got: n });
    }
    Ok(match method {
        RateMethod::Difference => seq.values[n - 1] - seq.values[n - 2],
        RateMethod::Slope => {
            // S₁ involves no collision and is left out of the fit
            let tail = &seq.values[1..];
            let m = tail.len();
            let mean_k = (m + 1) as f64 / 2.0;
            let mean_s = tail.iter().sum::<f64>() / m as f64;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (i, &s) in tail.iter().enumerate() {
                let dk = (i + 1) as f64 - mean_k;
                sxy += dk * (s - mean_s);
                sxx += dk * dk;
            }
            sxy / sxx
        }
    })
}

/// `H(π₁) + 2p[η(p+Δ) + η(p−Δ) − 2η(p)]`.
pub fn alf_closed_form(p: f64, r: f64, delta: f64) -> Result<f64> {
    let env = build_env(p, r, delta)?;
    Ok(env.one_site_entropy() + 2.0 * p * (eta(p + delta) + eta(p - delta) - 2.0 * eta(p)))
}

/// Entropy of `(Λ₁ ⊗ id)` applied to the purification of `𝟙/2`.
pub fn qr_lower_bound(env: &MarkovEnv) -> Result<f64> {
    von_neumann_entropy(&reduced_dynamics(env, 1).choi(), LogBase::E)
}

/// `2 log 2 + H(π_[1,k−1])`, the largest entropy any POVM can reach with `k`
/// measurement slots.
pub fn chain_entropy_bound(env: &MarkovEnv, slots: usize) -> f64 {
    2.0 * LN2 + env.block_entropy(slots.saturating_sub(1))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub rate: f64,
    /// `max_k (S_k − chain_entropy_bound(k))`; nonpositive when the bound holds.
    pub bound_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PovmSearch {
    pub trials: Vec<TrialResult>,
    pub best_trial: usize,
    pub best_rate: f64,
    #[serde(skip)]
    pub best_povm: Povm,
    pub entropy_rate: f64,
    /// Trials whose entropy exceeded the chain bound at some slot count.
    pub entropy_bound_violations: usize,
    /// Trials whose rate estimate exceeded the entropy rate by more than `1e-9`.
    pub rate_bound_violations: usize,
}

/// Slack allowed when comparing against the entropy bounds.
pub const BOUND_TOL: f64 = 1e-9;

/// Random search over POVMs with `elements` outcomes. Trial 0 is always the
/// reference POVM; trial `t > 0` draws from an RNG seeded with `seed` on
/// stream `t`, so results do not depend on evaluation order. The rate of a
/// trial is the difference estimator on `k = 1..=n + 1` slots.
pub fn povm_search(model: &CollisionModel, n: usize, trials: usize, seed: u64, elements: usize) -> Result<PovmSearch> {
    if n < 2 {
        return Err(Error::SequenceTooShort { needed: 3, got: n + 1 });
    }
    let env = model.env();
    let bounds: Vec<f64> = (1..=n + 1).map(|k| chain_entropy_bound(env, k)).collect();
    let entropy_rate = env.entropy_rate();
    let mut results = Vec::with_capacity(trials);
    let mut best: Option<(usize, f64, Povm)> = None;
    for t in 0..trials {
        let povm = if t == 0 {
            reference_povm(model.rho_s())?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            random_povm(elements, &mut rng)
        };
        let seq = entropy_sequence(model, &povm, n + 1, if t == 0 { "reference" } else { "random" })?;
        let rate = rate_estimate(&seq, RateMethod::Difference)?;
        let bound_excess = seq.values.iter().zip(&bounds).map(|(s, b)| s - b).fold(f64::NEG_INFINITY, f64::max);
        results.push(TrialResult { trial: t, rate, bound_excess });
        if best.as_ref().is_none_or(|(_, r, _)| rate > *r) {
            best = Some((t, rate, povm));
        }
    }
    let (best_trial, best_rate, best_povm) =
        best.ok_or_else(|| Error::InvalidParameter("povm_search needs at least one trial".into()))?;
    Ok(PovmSearch {
        entropy_bound_violations: results.iter().filter(|t| t.bound_excess > BOUND_TOL).count(),
        rate_bound_violations: results.iter().filter(|t| t.rate > entropy_rate + BOUND_TOL).count(),
        trials: results,
        best_trial,
        best_rate,
        best_povm,
        entropy_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::Interaction;

    fn model(p: f64, r: f64, delta: f64) -> CollisionModel {
        CollisionModel::new(build_env(p, r, delta).unwrap())
    }

    fn seq(values: Vec<f64>) -> EntropySequence {
        EntropySequence { values, povm: "test".into(), params: build_env(0.25, 0.1, 0.0).unwrap().params() }
    }

    #[test]
    fn rate_estimate_trivial_sequences() {
        let constant = seq(vec![0.7; 5]);
        assert_eq!(rate_estimate(&constant, RateMethod::Difference).unwrap(), 0.0);
        assert!(rate_estimate(&constant, RateMethod::Slope).unwrap().abs() < 1e-15);
        let affine = seq((1..=6).map(|k| 0.3 + 1.1 * k as f64).collect());
        assert!((rate_estimate(&affine, RateMethod::Difference).unwrap() - 1.1).abs() < 1e-12);
        assert!((rate_estimate(&affine, RateMethod::Slope).unwrap() - 1.1).abs() < 1e-12);
        assert_eq!(
            rate_estimate(&seq(vec![1.0, 2.0]), RateMethod::Slope),
            Err(Error::SequenceTooShort { needed: 3, got: 2 })
        );
    }

    #[test]
    fn reference_sequence_matches_bruteforce() {
        let md = model(0.25, 0.1, 0.0);
        let closed = reference_entropy_sequence(&md, 4).unwrap();
        let brute = entropy_sequence(&md, &reference_povm(md.rho_s()).unwrap(), 4, "reference").unwrap();
        for (a, b) in closed.values.iter().zip(&brute.values) {
            assert!((a - b).abs() < 1e-9);
        }
        for (k, v) in closed.values.iter().enumerate() {
            assert!((v - (2.0 * LN2 + md.env().block_entropy(k))).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_rate_equals_closed_form() {
        let md = model(0.25, 0.1, 0.1);
        let s = reference_entropy_sequence(&md, 8).unwrap();
        let target = alf_closed_form(0.25, 0.1, 0.1).unwrap();
        assert!((rate_estimate(&s, RateMethod::Difference).unwrap() - target).abs() < 1e-9);
        // the first difference carries H(π₁), the rest the rate
        for d in s.differences().iter().skip(1) {
            assert!((d - target).abs() < 1e-10);
        }
    }

    #[test]
    fn estimators_agree_on_reference_sequences() {
        for delta in [0.0, 0.05, 0.2, 0.25] {
            let md = model(0.25, 0.1, delta);
            for n_max in 4..=9 {
                let s = reference_entropy_sequence(&md, n_max).unwrap();
                let d = rate_estimate(&s, RateMethod::Difference).unwrap();
                let sl = rate_estimate(&s, RateMethod::Slope).unwrap();
                assert!((d - sl).abs() < 1e-9, "delta={delta} n_max={n_max}");
            }
        }
    }

    #[test]
    fn trivial_interaction_sequence_is_bounded() {
        let md = model(0.25, 0.1, 0.1).with_interaction(Interaction::Identity);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = entropy_sequence(&md, &random_povm(4, &mut rng), 5, "random").unwrap();
        assert!(s.values.iter().all(|&v| v <= 2.0 * LN2 + 1e-9));
        assert!(reference_entropy_sequence(&md, 10).unwrap().values.iter().all(|&v| (v - 2.0 * LN2).abs() < 1e-15));
    }

    #[test]
    fn extreme_point_sequence_is_constant() {
        let md = model(0.5, 0.0, 0.5);
        let s = reference_entropy_sequence(&md, 12).unwrap();
        assert!((s.values[0] - 2.0 * LN2).abs() < 1e-15);
        assert!(s.values[1..].iter().all(|&v| (v - 3.0 * LN2).abs() < 1e-12));
    }

    #[test]
    fn alf_closed_form_examples() {
        let h1 = build_env(0.25, 0.1, 0.0).unwrap().one_site_entropy();
        assert!((alf_closed_form(0.25, 0.1, 0.0).unwrap() - h1).abs() < 1e-15);
        assert!(alf_closed_form(0.5, 0.0, 0.5).unwrap().abs() < 1e-15);
        let gap = h1 - alf_closed_form(0.25, 0.1, 0.25).unwrap();
        assert!((gap - 0.25 * LN2).abs() < 1e-14);
        assert!(alf_closed_form(0.25, 0.1, 0.3).is_err());
    }

    #[test]
    fn alf_closed_form_equals_chain_rate_on_a_grid() {
        for i in 0..10 {
            let p = 0.05 * i as f64;
            let r = (1.0 - 2.0 * p) * 0.37;
            for j in 0..10 {
                let delta = p * j as f64 / 9.0;
                let env = build_env(p, r, delta).unwrap();
                let closed = alf_closed_form(p, r, delta).unwrap();
                assert!((closed - env.entropy_rate()).abs() < 1e-12);
                assert!((closed - (env.one_site_entropy() - env.mutual_information())).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn alf_closed_form_decreases_with_delta() {
        for &(p, r) in &[(0.25, 0.1), (0.5, 0.0), (0.1, 0.6)] {
            let vals: Vec<f64> = (0..=50).map(|k| alf_closed_form(p, r, p * k as f64 / 50.0).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
    }

    #[test]
    fn qr_lower_bound_examples() {
        let identity_env = build_env(0.0, 0.0, 0.0).unwrap();
        assert!(qr_lower_bound(&identity_env).unwrap().abs() < 1e-12);

        let env = build_env(0.25, 0.1, 0.0).unwrap();
        assert!((qr_lower_bound(&env).unwrap() - env.one_site_entropy()).abs() < 1e-12);
        assert!((qr_lower_bound(&env).unwrap() - env.entropy_rate()).abs() < 1e-12);

        let corr = build_env(0.25, 0.1, 0.25).unwrap();
        let bound = qr_lower_bound(&corr).unwrap();
        assert!(bound > alf_closed_form(0.25, 0.1, 0.25).unwrap() + 0.1);
        assert!((bound - corr.one_site_entropy()).abs() < 1e-12);
    }

    #[test]
    fn povm_search_respects_bounds_and_finds_the_reference() {
        let md = model(0.25, 0.1, 0.1);
        let out = povm_search(&md, 3, 12, 2024, 4).unwrap();
        assert_eq!(out.trials.len(), 12);
        assert_eq!(out.entropy_bound_violations, 0);
        assert_eq!(out.rate_bound_violations, 0);
        assert!((out.trials[0].rate - md.env().entropy_rate()).abs() < 1e-9);
        assert_eq!(out.best_trial, 0);
    }

    #[test]
    fn povm_search_is_reproducible() {
        let md = model(0.25, 0.1, 0.1);
        let a = povm_search(&md, 2, 5, 7, 3).unwrap();
        let b = povm_search(&md, 2, 5, 7, 3).unwrap();
        let rates = |s: &PovmSearch| s.trials.iter().map(|t| t.rate.to_bits()).collect::<Vec<_>>();
        assert_eq!(rates(&a), rates(&b));
        assert_ne!(rates(&a), rates(&povm_search(&md, 2, 5, 8, 3).unwrap()));
    }

    #[test]
    fn chain_bound_per_slot_is_not_a_rate_bound() {
        // with zero entropy rate the per-slot entropy stays above 2 log 2 / k
        let md = model(0.5, 0.0, 0.5);
        let s = reference_entropy_sequence(&md, 6).unwrap();
        for (i, v) in s.values.iter().enumerate().skip(1) {
            let k = (i + 1) as f64;
            assert!(v / k > 2.0 * LN2 / k + 0.1 / k);
            assert!(*v <= chain_entropy_bound(md.env(), i + 1) + 1e-12);
        }
    }
}
