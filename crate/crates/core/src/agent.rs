//! Tabular SARSA agent.
//!
//! State: number of bins over threshold, clamped to `max_targets`.
//! Action: number of candidate bins `t` to steer toward; the bins themselves
//! are the `t` largest test statistics of the latest pulse.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{theoretical_pd, DetectionResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: f64,
    /// Maximum number of simultaneously tracked targets `T`.
    pub max_targets: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self { learning_rate: 0.1, discount: 0.8, epsilon: 0.5, max_targets: 10 }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!("agent.learning_rate must lie in [0, 1], got {}", self.learning_rate)));
        }
        if !(self.discount >= 0.0 && self.discount < 1.0) {
            return Err(Error::Config(format!("agent.discount must lie in [0, 1), got {}", self.discount)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("agent.epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if self.max_targets == 0 {
            return Err(Error::Config("agent.max_targets must be positive".into()));
        }
        Ok(())
    }
}

/// State-action values over states and actions `0..=max_targets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    params: AgentParams,
    q: Vec<f64>,
}

impl QTable {
    pub fn new(params: AgentParams) -> Result<Self> {
        params.validate()?;
        let side = params.max_targets + 1;
        Ok(Self { params, q: vec![0.0; side * side] })
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    /// Number of states (equal to the number of actions).
    pub fn side(&self) -> usize {
        self.params.max_targets + 1
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.side() + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        let side = self.side();
        self.q[s * side + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let side = self.side();
        &self.q[s * side..(s + 1) * side]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Greedy action; ties go to the smallest action.
    pub fn greedy(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    fn check(&self, what: &'static str, index: usize) -> Result<()> {
        if index >= self.side() {
            return Err(Error::IndexOutOfRange { what, index, limit: self.side() });
        }
        Ok(())
    }
}

/// Count of detections, clamped to `max_targets`.
pub fn compute_state(result: &DetectionResult, max_targets: usize) -> usize {
    result.count().min(max_targets)
}

/// Epsilon-greedy choice of `t`.
///
/// Always consumes one uniform draw; exploration consumes a second.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, s: usize, rng: &mut R) -> Result<usize> {
    q.check("state", s)?;
    let u: f64 = rng.random();
    if u < q.params.epsilon {
        Ok(rng.random_range(0..q.side()))
    } else {
        Ok(q.greedy(s))
    }
}

/// Indices of the `t` largest statistics; ties go to the smaller index.
pub fn top_bins(lambda: &[f64], t: usize) -> Result<Vec<usize>> {
    if t > lambda.len() {
        return Err(Error::IndexOutOfRange { what: "candidate count", index: t, limit: lambda.len() });
    }
    if t == 0 {
        return Ok(Vec::new());
    }
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    let order = |a: &usize, b: &usize| lambda[*b].total_cmp(&lambda[*a]).then(a.cmp(b));
    if t < idx.len() {
        idx.select_nth_unstable_by(t - 1, order);
        idx.truncate(t);
    }
    idx.sort_unstable_by(order);
    Ok(idx)
}

/// Reward for steering toward `theta`: `+P_D` for bins in `theta` declared
/// detected, `-P_D` for the rest, with `P_D` evaluated at the moment
/// estimate `rho = max(Lambda - 1, 0)`.
pub fn compute_reward(result: &DetectionResult, theta: &[usize]) -> Result<f64> {
    let mut reward = 0.0;
    for &m in theta {
        let lambda =
            *result.lambda.get(m).ok_or(Error::IndexOutOfRange { what: "bin", index: m, limit: result.bins() })?;
        let pd = theoretical_pd((lambda - 1.0).max(0.0), result.eta)?;
        if lambda > result.eta {
            reward += pd;
        } else {
            reward -= pd;
        }
    }
    Ok(reward)
}

/// `Q(s, a) += lr * (r + discount * Q(s', a') - Q(s, a))`.
pub fn sarsa_update(q: &mut QTable, s: usize, a: usize, reward: f64, s_next: usize, a_next: usize) -> Result<()> {
    q.check("state", s)?;
    q.check("action", a)?;
    q.check("state", s_next)?;
    q.check("action", a_next)?;
    let current = q.get(s, a);
    let target = reward + q.params.discount * q.get(s_next, a_next);
    q.set(s, a, current + q.params.learning_rate * (target - current));
    Ok(())
}
