//! Improvement metric over a fitness history and the mutation-rate
//! controller driven by it.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum AdaptationError {
    #[error("improvement needs at least two generations of history")]
    TooShort,
    #[error("fitness history contains a non-finite value at generation {0}")]
    NonFinite(usize),
    #[error("invalid controller parameter: {0}")]
    InvalidParameter(String),
}

/// Improvement `I_t` of the latest value `f_t` over the history `f_0..f_{t-1}`:
/// `Σ_{τ<t} (α · max(f_t − f_τ, 0))^(τ/t)`, where a zero base contributes 0.
pub fn improvement<T: Scalar>(history: &[T], alpha: T) -> Result<T, AdaptationError> {
    if history.len() < 2 {
        return Err(AdaptationError::TooShort);
    }
    if let Some(i) = history.iter().position(|f| !f.is_finite()) {
        return Err(AdaptationError::NonFinite(i));
    }
    let t = history.len() - 1;
    let latest = history[t];
    let t_real = T::cast(t as f64);
    let total = history[..t].iter().enumerate().fold(T::zero(), |acc, (tau, &f)| {
        let base = alpha * (latest - f).max(T::zero());
        if base > T::zero() {
            acc + base.powf(T::cast(tau as f64) / t_real)
        } else {
            acc
        }
    });
    Ok(total)
}

/// Per-generation population best and average fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessHistory<T = f64> {
    best: Vec<T>,
    average: Vec<T>,
    /// Scaling `α_I` applied to fitness differences.
    pub alpha_i: T,
}

impl<T: Scalar> FitnessHistory<T> {
    pub fn new(alpha_i: T) -> Self {
        Self { best: Vec::new(), average: Vec::new(), alpha_i }
    }

    pub fn push(&mut self, best: T, average: T) {
        self.best.push(best);
        self.average.push(average);
    }

    pub fn best(&self) -> &[T] {
        &self.best
    }

    pub fn average(&self) -> &[T] {
        &self.average
    }

    /// `(I_best, I_ave)` at the latest generation, once there are two.
    pub fn improvements(&self) -> Option<(T, T)> {
        let best = improvement(&self.best, self.alpha_i).ok()?;
        let ave = improvement(&self.average, self.alpha_i).ok()?;
        Some((best, ave))
    }
}

/// Mutation-rate controller state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationRateState<T = f64> {
    pub mu: T,
    /// Gain `K_I`.
    pub k_i: T,
    pub mu_min: T,
    pub mu_max: T,
    /// `I_best` at or below this leaves `mu` untouched.
    pub epsilon: T,
}

impl<T: Scalar> MutationRateState<T> {
    pub fn new(mu: T, k_i: T) -> Result<Self, AdaptationError> {
        Self::with_bounds(mu, k_i, T::cast(0.01), T::cast(0.9))
    }

    pub fn with_bounds(mu: T, k_i: T, mu_min: T, mu_max: T) -> Result<Self, AdaptationError> {
        if !(mu_min >= T::zero() && mu_min <= mu_max && mu_max <= T::one()) {
            return Err(AdaptationError::InvalidParameter(format!("mutation bounds [{mu_min}, {mu_max}]")));
        }
        if !(k_i > T::zero() && k_i.is_finite()) {
            return Err(AdaptationError::InvalidParameter(format!("k_i = {k_i}")));
        }
        if !(mu >= mu_min && mu <= mu_max) {
            return Err(AdaptationError::InvalidParameter(format!("mu = {mu} outside [{mu_min}, {mu_max}]")));
        }
        Ok(Self { mu, k_i, mu_min, mu_max, epsilon: T::cast(1e-9) })
    }

    /// `μ_t = clamp(μ_{t-1} · exp(−K_I (I_best − I_ave) / I_best))`.
    ///
    /// A lagging average (`I_ave < I_best`) lowers the rate; a lagging best
    /// raises it.
    pub fn update(&mut self, i_best: T, i_ave: T) -> T {
        if i_best <= self.epsilon {
            return self.mu;
        }
        let next = self.mu * (-self.k_i * (i_best - i_ave) / i_best).exp();
        self.mu = next.max(self.mu_min).min(self.mu_max);
        self.mu
    }
}
