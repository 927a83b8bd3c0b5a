//! Actor-critic machinery for cooperative multi-agent power control.
//!
//! Networks are small dense MLPs with hand-written backpropagation. The
//! [`Learner`] implements the MADDPG family: per-agent centralised critics
//! ([`Variant::Maddpg`]), a shared global critic plus local critics
//! ([`Variant::DeMaddpg`]), and either of those with prioritized experience
//! selection ([`Variant::PesMaddpg`], [`Variant::MimoMaddpg`]).

mod bandit;
mod learner;
mod mlp;
mod replay;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bandit::PowerBandit;
pub use learner::{
    bellman_loss, bellman_targets, deterministic_policy_gradient, EnvSpec, Learner, LearnerConfig, MarlEnv,
    RewardScale, Sampling, Transition, UpdateStats, Variant,
};
pub use mlp::{clip_global_norm, logistic, soft_update, Cache, Grads, Mlp, OutputMap, SoftUpdate, LEAKY_SLOPE};
pub use replay::{
    fill_extraction_pool, priority_ranked, priority_simple, uniform_subset, Experience, ReplayBuffer, TrackMeta,
};

use crate::{Error, Result};

/// Per-step record of one training episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub rewards: Vec<Vec<f64>>,
    pub actions: Vec<Vec<Vec<f64>>>,
    pub updates: Vec<Option<UpdateStats>>,
}

impl EpisodeMetrics {
    /// Team reward of every step.
    pub fn reward_sums(&self) -> Vec<f64> {
        self.rewards.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn mean_reward_sum(&self) -> f64 {
        let s = self.reward_sums();
        if s.is_empty() {
            0.0
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        }
    }
}

/// Act, step, store, update for `steps` steps from a fresh episode.
pub fn train_episode<E: MarlEnv + ?Sized>(env: &mut E, learner: &mut Learner, steps: usize) -> Result<EpisodeMetrics> {
    let mut obs = env.reset_episode()?;
    let mut m = EpisodeMetrics::default();
    for _ in 0..steps {
        let actions = learner.act(&obs, true)?;
        let tr = env.step(&actions)?;
        learner.observe(&obs, &actions, &tr.rewards, &tr.next_obs)?;
        m.updates.push(learner.update()?);
        m.rewards.push(tr.rewards);
        m.actions.push(actions);
        obs = tr.next_obs;
    }
    Ok(m)
}

/// Greedy rollout without exploration or learning.
pub fn evaluate_episode<E: MarlEnv + ?Sized>(
    env: &mut E,
    learner: &mut Learner,
    steps: usize,
) -> Result<EpisodeMetrics> {
    let mut obs = env.reset_episode()?;
    let mut m = EpisodeMetrics::default();
    for _ in 0..steps {
        let actions = learner.act(&obs, false)?;
        let tr = env.step(&actions)?;
        m.rewards.push(tr.rewards);
        m.actions.push(actions);
        m.updates.push(None);
        obs = tr.next_obs;
    }
    Ok(m)
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk learner snapshot. Fields are serialized in declaration order:
/// format version, then learners (networks, targets, replay buffer and
/// generator states).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub learners: Vec<Learner>,
}

pub fn save_checkpoint(path: &Path, learners: &[Learner]) -> Result<()> {
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        learners: learners.to_vec(),
    };
    std::fs::write(path, serde_json::to_vec(&ck)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<Learner>> {
    let bytes = std::fs::read(path)?;
    let ck: Checkpoint = serde_json::from_slice(&bytes)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
            ck.version
        )));
    }
    Ok(ck.learners)
}
