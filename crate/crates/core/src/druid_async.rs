//! Randomized asynchronous activation.
//!
//! At every iteration a random subset of agents runs the synchronous
//! iteration body against whatever their buffers hold. Broadcasts of the
//! active agents land in every neighbor's buffer before any active agent
//! updates `φ_i`, so activating everyone reproduces the synchronous run.
//!
//! An edge with one active endpoint still has its dual advanced. Under
//! [`InactiveDual::EdgeConsistent`] the inactive endpoint applies its half
//! of that increment when the broadcast arrives, which keeps `Σ φ_i = 0`.
//! [`InactiveDual::Frozen`] leaves inactive agents untouched; the sum then
//! drifts and the iterates settle at a biased point.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::druid_sync::{Druid, NetworkState};
use crate::error::{DruidError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationMode {
    /// Agent `i` is active with probability `p[i]`, independently.
    Bernoulli(Vec<f64>),
    /// A uniformly random subset of `k` agents.
    FixedCount(usize),
}

/// What an inactive agent does with a broadcast it receives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InactiveDual {
    /// `φ_j += (μ_z/2)(x_j − x_i)` for every received `x_i`.
    #[default]
    EdgeConsistent,
    /// Only store the value.
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSampler {
    mode: ActivationMode,
    m: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationRecord {
    pub t: usize,
    /// Sorted active agents.
    pub active: Vec<usize>,
}

impl ActivationSampler {
    pub fn new(mode: ActivationMode, m: usize, seed: u64) -> Result<Self> {
        match &mode {
            ActivationMode::Bernoulli(p) => {
                if p.len() != m {
                    return Err(DruidError::InvalidParameter(format!(
                        "{} activation probabilities for {m} agents",
                        p.len()
                    )));
                }
                if let Some(bad) = p.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
                    return Err(DruidError::InvalidParameter(format!(
                        "activation probability {bad} outside (0, 1]"
                    )));
                }
            }
            ActivationMode::FixedCount(k) => {
                if *k == 0 || *k > m {
                    return Err(DruidError::InvalidParameter(format!("cannot activate {k} of {m} agents")));
                }
            }
        }
        Ok(ActivationSampler { mode, m, seed })
    }

    pub fn uniform(p: f64, m: usize, seed: u64) -> Result<Self> {
        Self::new(ActivationMode::Bernoulli(vec![p; m]), m, seed)
    }

    pub fn mode(&self) -> &ActivationMode {
        &self.mode
    }

    /// Deterministic in `(seed, t)`: iteration `t` draws from its own stream.
    pub fn sample(&self, t: usize) -> ActivationRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        let active = match &self.mode {
            ActivationMode::Bernoulli(p) => (0..self.m).filter(|&i| rng.gen_bool(p[i])).collect(),
            ActivationMode::FixedCount(k) => {
                let mut v = index::sample(&mut rng, self.m, *k).into_vec();
                v.sort_unstable();
                v
            }
        };
        ActivationRecord { t, active }
    }
}

impl Druid {
    pub fn async_step(&self, ns: &mut NetworkState, rec: &ActivationRecord) -> Result<()> {
        if let Some(&bad) = rec.active.iter().find(|&&i| i >= self.num_agents()) {
            return Err(DruidError::InvalidParameter(format!("agent {bad} out of range")));
        }
        if rec.active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DruidError::InvalidParameter("active set must be sorted and distinct".into()));
        }
        self.step_agents(ns, &rec.active)
    }

    pub fn run_async(&self, ns: &mut NetworkState, sampler: &ActivationSampler, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            let rec = sampler.sample(ns.t);
            self.async_step(ns, &rec)?;
        }
        Ok(())
    }
}
