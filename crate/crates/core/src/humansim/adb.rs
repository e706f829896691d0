//! Ground-truth advice-acceptance behavior.
//!
//! A simulated expert shrinks both confidences toward one half, fuses them as
//! independent evidence, perceives the fused probability through an inverse-S
//! weighting, turns that into utilities for accepting and rejecting, and
//! chooses stochastically with a logit rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::seeding;

/// How the two adjusted confidences are fused into the probability that the advice is right.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionForm {
    /// `a(1-b) / (a(1-b) + (1-a)b)`.
    #[default]
    NaiveBayes,
    /// `1 / (1 + (1-a)(a-b)/(ab))`, clamped to [0, 1].
    Literal,
}

/// Direction of a contradicting recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// The human said 0, the advisor says 1.
    TowardPositive,
    /// The human said 1, the advisor says 0.
    TowardNegative,
}

impl Direction {
    pub fn of(advice: u8) -> Direction {
        if advice == 1 {
            Direction::TowardPositive
        } else {
            Direction::TowardNegative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdbParams {
    /// Utility sensitivity of the logit choice.
    pub delta: f64,
    /// Probability-weighting exponent.
    pub k: f64,
    /// Confidence-adjustment exponent; 1 leaves confidences untouched.
    pub gamma: f64,
    /// Stakes offset between accepting and rejecting.
    pub beta: f64,
    /// Multiplier when the advice pushes toward 1.
    pub accept_boost: f64,
    /// Multiplier when the advice pushes toward 0.
    pub accept_damp: f64,
    /// Half-width of a fixed uniform perturbation added to the acceptance probability.
    pub noise_level: f64,
    pub noise_seed: u64,
    pub fusion: FusionForm,
}

impl Default for AdbParams {
    fn default() -> Self {
        Self {
            delta: 5.0,
            k: 0.63,
            gamma: 0.95,
            beta: 0.5,
            accept_boost: 1.0,
            accept_damp: 1.0,
            noise_level: 0.0,
            noise_seed: 0,
            fusion: FusionForm::NaiveBayes,
        }
    }
}

/// Shrink a probability toward one half: `p^g / (p^g + (1-p)^g)`.
pub fn adjust_confidence(p: f64, gamma: f64) -> f64 {
    let a = p.powf(gamma);
    let b = (1.0 - p).powf(gamma);
    if a + b == 0.0 {
        0.5
    } else {
        a / (a + b)
    }
}

/// Inverse-S probability weighting `p^k / (p^k + (1-p)^k)`.
pub fn weight(p: f64, k: f64) -> f64 {
    adjust_confidence(p, k)
}

/// Fused belief that the advisor is right, from adjusted advisor and human confidences.
pub fn fuse(a: f64, b: f64, form: FusionForm) -> f64 {
    match form {
        FusionForm::NaiveBayes => {
            let num = a * (1.0 - b);
            let den = num + (1.0 - a) * b;
            if den == 0.0 {
                0.5
            } else {
                num / den
            }
        }
        FusionForm::Literal => {
            if a == 0.0 || b == 0.0 {
                return if a > b { 1.0 } else { 0.0 };
            }
            let r = (1.0 - a) * (a - b) / (a * b);
            let p = 1.0 / (1.0 + r);
            if p.is_finite() {
                p.clamp(0.0, 1.0)
            } else {
                1.0
            }
        }
    }
}

fn check(c: f64) -> Result<(), SimError> {
    if c.is_finite() && (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(SimError::ConfidenceOutOfRange(c))
    }
}

impl AdbParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.delta >= 0.0
            && self.k > 0.0
            && self.k <= 1.0
            && (0.0..=1.0).contains(&self.gamma)
            && self.beta >= 0.0
            && self.accept_boost >= 0.0
            && self.accept_damp >= 0.0
            && (0.0..=1.0).contains(&self.noise_level);
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidProfile(format!("acceptance parameters out of range: {self:?}")))
        }
    }

    /// Acceptance probability before direction multipliers and noise.
    pub fn base_probability(&self, c_m: f64, c_h: f64) -> Result<f64, SimError> {
        check(c_m)?;
        check(c_h)?;
        let a = adjust_confidence(c_m, self.gamma);
        let b = adjust_confidence(c_h, self.gamma);
        let w = weight(fuse(a, b, self.fusion), self.k);
        let u_accept = (1.0 + self.beta) * w - self.beta;
        let u_reject = 1.0 - (1.0 + self.beta) * w;
        // logistic form of exp(d*ua) / (exp(d*ua) + exp(d*ur))
        Ok(1.0 / (1.0 + (self.delta * (u_reject - u_accept)).exp()))
    }

    /// Probability that the human accepts contradicting advice with confidence
    /// `c_m`, given their own confidence `c_h`.
    pub fn acceptance_probability(&self, c_m: f64, c_h: f64, direction: Direction) -> Result<f64, SimError> {
        let mut p = self.base_probability(c_m, c_h)?;
        p *= match direction {
            Direction::TowardPositive => self.accept_boost,
            Direction::TowardNegative => self.accept_damp,
        };
        p = p.clamp(0.0, 1.0);
        if self.noise_level > 0.0 {
            let u = seeding::unit_hash(
                self.noise_seed,
                c_m.to_bits() ^ (direction as u64).rotate_left(7),
                c_h.to_bits(),
            );
            p = (p + self.noise_level * (2.0 * u - 1.0)).clamp(0.0, 1.0);
        }
        Ok(p)
    }

    pub fn sample_acceptance<R: Rng + ?Sized>(
        &self,
        c_m: f64,
        c_h: f64,
        direction: Direction,
        rng: &mut R,
    ) -> Result<bool, SimError> {
        let p = self.acceptance_probability(c_m, c_h, direction)?;
        Ok(rng.random::<f64>() < p)
    }
}
