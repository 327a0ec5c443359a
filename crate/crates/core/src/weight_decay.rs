//! Adaptive per-member weight decay.
//!
//! Each member owns a coefficient `lambda`. After a move its position is
//! shrunk by `(1 - lambda)`, its cost becomes `E + lambda / 2 * |X|^2`, and
//! `lambda` moves up by `inc` when the current error beats the member's running
//! mean error and down by `inc` (never below zero) otherwise.

use serde::{Deserialize, Serialize};

use crate::gso::Member;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WdParams {
    pub lambda0: f64,
    pub inc: f64,
    pub enabled: bool,
}

impl Default for WdParams {
    fn default() -> Self {
        Self {
            lambda0: 5e-6,
            inc: 1e-3,
            enabled: true,
        }
    }
}

impl WdParams {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.lambda0.is_nan() || self.lambda0 < 0.0 || self.inc.is_nan() || self.inc <= 0.0 {
            return Err(crate::Error::InvalidParameter(format!(
                "weight decay needs lambda0 >= 0 and inc > 0, got {} and {}",
                self.lambda0, self.inc
            )));
        }
        Ok(())
    }
}

pub fn apply_decay(position: &[f64], lambda: f64) -> Vec<f64> {
    position.iter().map(|x| x - lambda * x).collect()
}

pub fn regularized_cost(error: f64, lambda: f64, position: &[f64]) -> f64 {
    let sq: f64 = position.iter().map(|x| x * x).sum();
    error + lambda / 2.0 * sq
}

pub fn update_lambda(lambda: f64, current_error: f64, mean_error: f64, inc: f64) -> f64 {
    if current_error < mean_error {
        lambda + inc
    } else {
        (lambda - inc).max(0.0)
    }
}

/// Adds `current_error` to the member's history and returns the new mean.
pub fn update_error_history(member: &mut Member, current_error: f64) -> f64 {
    member.error_sum += current_error;
    member.error_count += 1;
    member.error_sum / member.error_count as f64
}

/// History update followed by the coefficient update.
pub fn observe(member: &mut Member, current_error: f64, params: &WdParams) {
    let mean = update_error_history(member, current_error);
    member.lambda = update_lambda(member.lambda, current_error, mean, params.inc);
}
