//! Closed-form parameter choices and order-level bounds.
//!
//! The bounds are stated up to unspecified constants. `lead_constant`
//! stands in for the constant of `m_required`; every other bound uses 1.
//! Treat the outputs as orders of magnitude, not guarantees.

use crate::math::{ceil, ln, sqrt};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange { name: &'static str, value: f64, expected: &'static str },
}

fn check(name: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<(), TheoryError> {
    if ok {
        Ok(())
    } else {
        Err(TheoryError::OutOfRange { name, value, expected })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub num_states: u64,
    pub num_actions: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub lead_constant: f64,
}

impl TheoryInputs {
    pub fn validate(&self) -> Result<(), TheoryError> {
        check("S", self.num_states as f64, self.num_states > 0, "at least 1")?;
        check("A", self.num_actions as f64, self.num_actions > 0, "at least 1")?;
        check("epsilon", self.epsilon, self.epsilon > 0.0 && self.epsilon < 1.0, "(0, 1)")?;
        check("delta", self.delta, self.delta > 0.0 && self.delta < 1.0, "(0, 1)")?;
        check("gamma", self.gamma, (0.0..1.0).contains(&self.gamma), "[0, 1)")?;
        check("lead_constant", self.lead_constant, self.lead_constant > 0.0, "positive")
    }
}

/// Reading of the square root in the β threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaForm {
    /// `(1/(1-γ)) · √(ln(SAm/δ)) / 2`
    #[default]
    AsPrinted,
    /// `(1/(1-γ)) · √(ln(SAm/δ) / 2)`, the Hoeffding-style reading.
    Hoeffding,
}

/// Update gate `ε₁ = ε(1-γ)/2`.
pub fn epsilon_one(epsilon: f64, gamma: f64) -> f64 {
    epsilon * (1.0 - gamma) / 2.0
}

/// `⌈(1/(1-γ)) ln(1/(ε(1-γ)))⌉`, the horizon after which the discounted tail
/// is at most ε.
pub fn horizon(epsilon: f64, gamma: f64) -> Result<u64, TheoryError> {
    let x = epsilon * (1.0 - gamma);
    check("epsilon * (1 - gamma)", x, x > 0.0 && x < 1.0, "(0, 1)")?;
    Ok(ceil(ln(1.0 / x) / (1.0 - gamma)) as u64)
}

/// `⌈c · S · ln(SA/δ) / (ε² (1-γ)⁴)⌉` samples per pair.
pub fn m_required(inputs: &TheoryInputs) -> Result<u64, TheoryError> {
    inputs.validate()?;
    let s = inputs.num_states as f64;
    let sa = s * inputs.num_actions as f64;
    let g = 1.0 - inputs.gamma;
    Ok(ceil(inputs.lead_constant * s * ln(sa / inputs.delta) / (inputs.epsilon * inputs.epsilon * g * g * g * g)) as u64)
}

/// Smallest bonus scale β for which RTDP-IE stays optimistic.
pub fn beta_required(num_states: u64, num_actions: u64, m: u64, delta: f64, gamma: f64, form: BetaForm) -> Result<f64, TheoryError> {
    let ratio = (num_states * num_actions * m) as f64 / delta;
    check("S*A*m/delta", ratio, ratio > 1.0, "greater than 1")?;
    check("gamma", gamma, (0.0..1.0).contains(&gamma), "[0, 1)")?;
    let log = ln(ratio);
    let root = match form {
        BetaForm::AsPrinted => sqrt(log) / 2.0,
        BetaForm::Hoeffding => sqrt(log / 2.0),
    };
    Ok(root / (1.0 - gamma))
}

/// Number of updates plus escapes RTDP-RMAX can make:
/// `SAm + SA/(ε₁(1-γ))`.
pub fn learning_complexity(num_states: u64, num_actions: u64, m: u64, epsilon_one: f64, gamma: f64) -> f64 {
    let sa = (num_states * num_actions) as f64;
    sa * m as f64 + sa / (epsilon_one * (1.0 - gamma))
}

/// Applied updates one pair can receive in modified mode:
/// `⌈1/(ε₁(1-γ))⌉`.
pub fn max_updates_per_pair(epsilon_one: f64, gamma: f64) -> u64 {
    // shave rounding noise so exact quotients are not bumped up by one
    ceil((1.0 - 1e-12) / (epsilon_one * (1.0 - gamma))) as u64
}

/// `(SAm + SA/(ε(1-γ)²)) · 1/(ε(1-γ)²)`, log factors dropped.
pub fn sample_complexity_bound(num_states: u64, num_actions: u64, m: u64, epsilon: f64, gamma: f64) -> f64 {
    let sa = (num_states * num_actions) as f64;
    let g2 = (1.0 - gamma) * (1.0 - gamma);
    (sa * m as f64 + sa / (epsilon * g2)) / (epsilon * g2)
}

/// `S²A / (ε³(1-γ)⁶)`: the bound above with `m = m_required`, log factors
/// dropped.
pub fn sample_complexity_order(num_states: u64, num_actions: u64, epsilon: f64, gamma: f64) -> f64 {
    let s = num_states as f64;
    let g = 1.0 - gamma;
    s * s * num_actions as f64 / (epsilon * epsilon * epsilon * g * g * g * g * g * g)
}

/// The logarithmic factors left out of `sample_complexity_order`:
/// `ln(SA/δ) · ln(1/δ) · ln(1/(ε(1-γ)))`.
pub fn log_factors(inputs: &TheoryInputs) -> Result<f64, TheoryError> {
    inputs.validate()?;
    let sa = (inputs.num_states * inputs.num_actions) as f64;
    Ok(ln(sa / inputs.delta) * ln(1.0 / inputs.delta) * ln(1.0 / (inputs.epsilon * (1.0 - inputs.gamma))))
}
