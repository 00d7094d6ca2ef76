//! The classical four-symbol stationary Markov environment.
//!
//! Convention: the transition matrix is **column-stochastic**. `T[i][j]` is
//! the probability of symbol `i` given that the previous symbol was `j`, so
//! every column sums to one and the stationary vector satisfies `T p = p`.
//!
//! ```text
//!         ⎛ p₀  p₀    p₀    p₀ ⎞
//!     T = ⎜ p   p+Δ   p−Δ   p  ⎟      p = (p₀, p, p, r),  p₀ + 2p + r = 1
//!         ⎜ p   p−Δ   p+Δ   p  ⎟      0 ≤ Δ ≤ p ≤ ½
//!         ⎝ r   r     r     r  ⎠
//! ```
//!
//! Words of symbols are encoded as base-4 integers, first symbol most
//! significant.

use serde::Serialize;

use crate::qmat::eta;
use crate::{Error, Result};

/// Largest word length whose block distribution is enumerated explicitly.
pub const MAX_ENUMERATED_LENGTH: usize = 10;

/// Words up to this length are summed explicitly by [`MarkovEnv::block_entropy`];
/// longer ones use the chain rule.
const EXPLICIT_BLOCK_ENTROPY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvParams {
    pub p0: f64,
    pub p: f64,
    pub r: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovEnv {
    params: EnvParams,
    transition: [[f64; 4]; 4],
    stationary: [f64; 4],
}

/// Builds the environment for `(p, r, Δ)`, with `p₀ = 1 − 2p − r`.
pub fn build_env(p: f64, r: f64, delta: f64) -> Result<MarkovEnv> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    if ![p, r, delta].iter().all(|x| x.is_finite()) {
        return bad(format!("non-finite parameter in (p={p}, r={r}, delta={delta})"));
    }
    if delta < 0.0 {
        return bad(format!("0 <= delta violated (delta={delta})"));
    }
    if delta > p {
        return bad(format!("delta <= p violated (delta={delta}, p={p})"));
    }
    if p > 0.5 {
        return bad(format!("p <= 1/2 violated (p={p})"));
    }
    if r < 0.0 {
        return bad(format!("r >= 0 violated (r={r})"));
    }
    let mut p0 = 1.0 - 2.0 * p - r;
    if p0 < 0.0 {
        // 1 - 2p - r can land a rounding step below an exact zero
        if p0 > -1e-14 {
            p0 = 0.0;
        } else {
            return bad(format!("p0 = 1 - 2p - r >= 0 violated (p0={p0})"));
        }
    }
    let transition = [[p0, p0, p0, p0], [p, p + delta, p - delta, p], [p, p - delta, p + delta, p], [r, r, r, r]];
    Ok(MarkovEnv { params: EnvParams { p0, p, r, delta }, transition, stationary: [p0, p, p, r] })
}

/// Symbol sequence of `len` base-4 digits, most significant first.
pub fn decode_word(mut index: usize, len: usize) -> Vec<usize> {
    let mut word = vec![0; len];
    for slot in word.iter_mut().rev() {
        *slot = index % 4;
        index /= 4;
    }
    word
}

pub fn encode_word(word: &[usize]) -> usize {
    word.iter().fold(0, |acc, &s| acc * 4 + s)
}

/// Shannon entropy `Σ η(pᵢ)` in nats.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs.iter().map(|&x| eta(x)).sum()
}

/// Binary entropy `h(x) = η(x) + η(1 − x)`.
pub fn binary_entropy(x: f64) -> f64 {
    eta(x) + eta(1.0 - x)
}

impl MarkovEnv {
    pub fn params(&self) -> EnvParams {
        self.params
    }

    /// `T[i][j]`: probability of `i` after `j`.
    pub fn transition(&self) -> &[[f64; 4]; 4] {
        &self.transition
    }

    pub fn stationary(&self) -> [f64; 4] {
        self.stationary
    }

    /// `A_{p,r} = 1 − 2(p + r)`.
    pub fn a_coefficient(&self) -> f64 {
        1.0 - 2.0 * (self.params.p + self.params.r)
    }

    /// `p_{i₁…iₙ} = Π_{k≥2} T_{iₖ i_{k−1}} p_{i₁}`; the empty word has probability 1.
    pub fn block_probability(&self, word: &[usize]) -> f64 {
        let Some(&first) = word.first() else {
            return 1.0;
        };
        word.windows(2).fold(self.stationary[first], |acc, w| acc * self.transition[w[1]][w[0]])
    }

    /// All `4ⁿ` block probabilities indexed by [`encode_word`].
    pub fn block_distribution(&self, n: usize) -> Result<Vec<f64>> {
        if n > MAX_ENUMERATED_LENGTH {
            return Err(Error::CapExceeded {
                dim: 4usize.pow(n as u32),
                cap: 4usize.pow(MAX_ENUMERATED_LENGTH as u32),
            });
        }
        if n == 0 {
            return Ok(vec![1.0]);
        }
        let mut dist = self.stationary.to_vec();
        for _ in 1..n {
            let mut next = Vec::with_capacity(dist.len() * 4);
            for (w, &pw) in dist.iter().enumerate() {
                let last = w % 4;
                next.extend((0..4).map(|s| pw * self.transition[s][last]));
            }
            dist = next;
        }
        Ok(dist)
    }

    /// `H(π₁)`
    pub fn one_site_entropy(&self) -> f64 {
        shannon_entropy(&self.stationary)
    }

    /// `H(π_[1,n])` by explicit summation over all `4ⁿ` words.
    pub fn block_entropy_enumerated(&self, n: usize) -> Result<f64> {
        Ok(shannon_entropy(&self.block_distribution(n)?))
    }

    /// `H(π_[1,n])`: explicit for short words, `H(π₁) + (n − 1)·𝔖` beyond.
    pub fn block_entropy(&self, n: usize) -> f64 {
        match n {
            0 => 0.0,
            n if n <= EXPLICIT_BLOCK_ENTROPY => shannon_entropy(
                &self.block_distribution(n).expect("explicit block entropy length is below the enumeration cap"),
            ),
            n => self.one_site_entropy() + (n - 1) as f64 * self.entropy_rate(),
        }
    }

    /// Two-site conditional entropy `−Σ pⱼ T_{ij} log T_{ij}`.
    pub fn entropy_rate(&self) -> f64 {
        (0..4).map(|j| self.stationary[j] * (0..4).map(|i| eta(self.transition[i][j])).sum::<f64>()).sum()
    }

    /// `I(π₁;π₂) = 4p²(log 2 − h(½ + Δ/2p))`, and 0 when `p = 0`.
    pub fn mutual_information(&self) -> f64 {
        let EnvParams { p, delta, .. } = self.params;
        if p == 0.0 {
            return 0.0;
        }
        4.0 * p * p * (std::f64::consts::LN_2 - binary_entropy(0.5 + delta / (2.0 * p)))
    }

    /// `H(π₁) + H(π₂) − H(π_[1,2])` from the block distribution.
    pub fn mutual_information_from_blocks(&self) -> f64 {
        let h1 = self.one_site_entropy();
        2.0 * h1 - self.block_entropy(2)
    }
}
