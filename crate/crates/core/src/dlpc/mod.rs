//! Double-layer power control.
//!
//! Layer 1 has one agent per UE choosing a power budget (and movement in the
//! mobile scenarios). Layer 2 has one static agent per UE antenna that splits
//! its UE's budget across the surface from the per-antenna large-scale fading.
//! Both layers are ordinary [`Learner`]s over different views of the same
//! environment.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{
    action_dim, decode_action, log_feature, project_power, reference_amplitude, AgentAction, CellFreeEnv,
};
use crate::marl::{EnvSpec, Learner, LearnerConfig, UpdateStats};
use crate::rng::{child_seed, Stream};
use crate::se::PowerAllocation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Layer 1 only; every UE spreads its power evenly over its antennas.
    Single,
    #[default]
    Double,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Single => "single",
            Architecture::Double => "double",
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Architecture::Single),
            "double" => Ok(Architecture::Double),
            _ => Err(Error::InvalidArgument(format!("unknown architecture `{s}`"))),
        }
    }
}

/// Repeat every UE budget once per UE antenna.
pub fn broadcast_budget(powers: &[f64], n_s: usize) -> Vec<f64> {
    powers.iter().flat_map(|&p| std::iter::repeat_n(p, n_s)).collect()
}

/// Share every UE reward equally among its antennas. The last share absorbs
/// the rounding so that the shares of a UE sum (left to right) to exactly its
/// reward.
pub fn split_reward(rewards: &[f64], n_s: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rewards.len() * n_s);
    for &r in rewards {
        if n_s == 0 {
            continue;
        }
        let share = r / n_s as f64;
        let mut acc = 0.0;
        for _ in 1..n_s {
            out.push(share);
            acc += share;
        }
        out.push(if n_s == 1 { r } else { r - acc });
    }
    out
}

/// Turn normalised per-antenna actions (UE-major, in `[0, 1]`) into one
/// allocation per UE whose power equals the UE budget. An all-zero UE action
/// falls back to the even split.
pub fn layer2_allocate(actions: &[f64], budgets: &[f64], n_s: usize) -> Result<Vec<PowerAllocation>> {
    if n_s == 0 || actions.len() != budgets.len() * n_s {
        return Err(Error::Dimension(format!(
            "{} antenna actions for {} budgets of {n_s} antennas",
            actions.len(),
            budgets.len()
        )));
    }
    budgets
        .iter()
        .zip(actions.chunks(n_s))
        .map(|(&b, a)| {
            if !(b >= 0.0) || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "bad budget {b} or antenna action {a:?}"
                )));
            }
            let raw: Vec<f64> = a.iter().map(|v| b.sqrt() * v.clamp(0.0, 1.0)).collect();
            let norm: f64 = raw.iter().map(|v| v * v).sum();
            let amps: Vec<f64> = if norm > 0.0 {
                raw.iter().map(|v| (b * (v * v / norm)).sqrt()).collect()
            } else {
                vec![(b / n_s as f64).sqrt(); n_s]
            };
            project_power(&amps, b)
        })
        .collect()
}

/// What the UE-level agents saw, did and earned in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerOneView {
    /// Aggregate large-scale fading `Σ_m β_mk` of every UE.
    pub state: Vec<f64>,
    pub actions: Vec<AgentAction>,
    pub rewards: Vec<f64>,
}

/// What the antenna-level agents saw, did and earned in one step (UE-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTwoView {
    /// Aggregate exact LSF of every UE antenna over all BS antennas.
    pub lsf: Vec<f64>,
    /// Layer-1 budget of the owning UE, repeated per antenna.
    pub budgets: Vec<f64>,
    /// Per-antenna amplitudes actually used.
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
}

/// Observation of antenna agent `i`: log-normalised LSF and budget fraction.
pub fn layer2_observations(lsf: &[f64], budgets: &[f64], reference: f64, p_max: f64) -> Vec<Vec<f64>> {
    lsf.iter()
        .zip(budgets)
        .map(|(&l, &b)| vec![log_feature(l, reference), b / p_max])
        .collect()
}

/// Antenna-to-UE group labels for per-UE weight sharing.
pub fn weight_sharing_groups(n_ue: usize, n_s: usize) -> Vec<usize> {
    (0..n_ue).flat_map(|k| std::iter::repeat_n(k, n_s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerConfig {
    pub architecture: Architecture,
    pub layer1: LearnerConfig,
    pub layer2: LearnerConfig,
    /// Antennas of the same UE share one layer-2 actor and local critic.
    pub weight_sharing: bool,
    pub steps: usize,
}

/// Everything logged for one environment step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub layer1: LayerOneView,
    pub layer2: Option<LayerTwoView>,
    pub allocations: Vec<PowerAllocation>,
    pub sum_se: f64,
    pub moved: Vec<f64>,
    pub update1: Option<UpdateStats>,
    pub update2: Option<UpdateStats>,
}

struct Pending {
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    rewards: Vec<f64>,
}

/// Trains and evaluates the single- or double-layer controller on one environment.
pub struct DoubleLayerRunner {
    cfg: RunnerConfig,
    env: CellFreeEnv,
    layer1: Learner,
    layer2: Option<Learner>,
}

impl DoubleLayerRunner {
    /// Layer `l` learns from the seed derived as `child_seed(seed, Layer(l))`,
    /// so a single-layer run and the first layer of a double-layer run with the
    /// same seed start from identical networks and noise.
    pub fn new(cfg: RunnerConfig, env: CellFreeEnv, seed: u64) -> Result<Self> {
        let ecfg = env.config();
        let (k, n_s) = (ecfg.n_ue, ecfg.n_s());
        let spec1 = EnvSpec {
            n_agents: k,
            obs_dim: 1,
            act_dim: action_dim(ecfg.scenario),
        };
        let layer1 = Learner::new(cfg.layer1.clone(), spec1, child_seed(seed, Stream::Layer(1)))?;
        let layer2 = match cfg.architecture {
            Architecture::Single => None,
            Architecture::Double => {
                let mut c2 = cfg.layer2.clone();
                c2.groups = cfg.weight_sharing.then(|| weight_sharing_groups(k, n_s));
                let spec2 = EnvSpec {
                    n_agents: k * n_s,
                    obs_dim: 2,
                    act_dim: 1,
                };
                Some(Learner::new(c2, spec2, child_seed(seed, Stream::Layer(2)))?)
            }
        };
        Ok(DoubleLayerRunner {
            cfg,
            env,
            layer1,
            layer2,
        })
    }

    pub fn config(&self) -> &RunnerConfig {
        &self.cfg
    }

    pub fn env(&self) -> &CellFreeEnv {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut CellFreeEnv {
        &mut self.env
    }

    pub fn layer1(&self) -> &Learner {
        &self.layer1
    }

    pub fn layer2(&self) -> Option<&Learner> {
        self.layer2.as_ref()
    }

    /// Learners in layer order, for checkpoints.
    pub fn learners(&self) -> Vec<Learner> {
        std::iter::once(self.layer1.clone())
            .chain(self.layer2.clone())
            .collect()
    }

    /// Replace the learners with restored ones (layer order).
    pub fn restore(&mut self, learners: Vec<Learner>) -> Result<()> {
        let expected = 1 + usize::from(self.layer2.is_some());
        if learners.len() != expected {
            return Err(Error::Checkpoint(format!(
                "{} learners for {expected} layers",
                learners.len()
            )));
        }
        let mut it = learners.into_iter();
        let l1 = it.next().unwrap_or_else(|| self.layer1.clone());
        if l1.spec() != self.layer1.spec() {
            return Err(Error::Checkpoint(
                "layer-1 learner does not match the environment".into(),
            ));
        }
        self.layer1 = l1;
        if let (Some(slot), Some(l2)) = (self.layer2.as_mut(), it.next()) {
            if l2.spec() != slot.spec() {
                return Err(Error::Checkpoint(
                    "layer-2 learner does not match the environment".into(),
                ));
            }
            *slot = l2;
        }
        Ok(())
    }

    /// One exploring, learning episode from the UE starting points.
    pub fn train_episode(&mut self) -> Result<Vec<StepLog>> {
        self.env.reset_episode();
        self.rollout(true)
    }

    /// Greedy episode from the UE starting points.
    pub fn evaluate_episode(&mut self) -> Result<Vec<StepLog>> {
        self.env.reset_episode();
        self.rollout(false)
    }

    /// Greedy episode from the given UE positions.
    pub fn evaluate_from(&mut self, positions: Vec<crate::channel::Point3>) -> Result<Vec<StepLog>> {
        self.env.set_ue_positions(positions)?;
        self.rollout(false)
    }

    fn layer1_obs(&mut self) -> Vec<Vec<f64>> {
        let reference = reference_amplitude(self.env.config().channel.wavelength);
        self.env
            .observe_layer1()
            .into_iter()
            .map(|b| vec![log_feature(b, reference)])
            .collect()
    }

    fn layer2_obs(&mut self, budgets: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
        let cfg = self.env.config();
        let (n_s, p_max) = (cfg.n_s(), cfg.p_max);
        let reference = cfg.n_r() as f64 * reference_amplitude(cfg.channel.wavelength);
        let lsf = self.env.observe_antennas()?;
        let b = broadcast_budget(budgets, n_s);
        let obs = layer2_observations(&lsf, &b, reference, p_max);
        Ok((lsf, b, obs))
    }

    fn rollout(&mut self, learn: bool) -> Result<Vec<StepLog>> {
        let steps = self.cfg.steps;
        let mut logs = Vec::with_capacity(steps);
        let mut pending: Option<Pending> = None;
        let mut obs1 = self.layer1_obs();
        for t in 0..steps {
            let a1 = self.layer1.act(&obs1, learn)?;
            let ecfg = self.env.config();
            let (scenario, p_max, d_max, n_s) = (ecfg.scenario, ecfg.p_max, ecfg.d_max, ecfg.n_s());
            let actions: Vec<AgentAction> = a1.iter().map(|a| decode_action(a, scenario, p_max, d_max)).collect();
            let budgets: Vec<f64> = actions.iter().map(|a| a.power).collect();
            let state1 = self.env.observe_layer1();

            let mut update2 = None;
            let mut layer2 = None;
            let allocations = if self.layer2.is_some() {
                let (lsf, b, obs2) = self.layer2_obs(&budgets)?;
                let l2 = self
                    .layer2
                    .as_mut()
                    .ok_or_else(|| Error::Numerical("missing layer 2".into()))?;
                if let Some(p) = pending.take() {
                    l2.observe(&p.obs, &p.actions, &p.rewards, &obs2)?;
                    update2 = l2.update()?;
                }
                let a2 = l2.act(&obs2, learn)?;
                let flat: Vec<f64> = a2.iter().map(|a| a[0]).collect();
                let alloc = layer2_allocate(&flat, &budgets, n_s)?;
                layer2 = Some((
                    lsf,
                    b,
                    obs2,
                    a2,
                    alloc.iter().flat_map(|p| p.amplitudes.clone()).collect(),
                ));
                alloc
            } else {
                self.env.uniform_allocations(&actions)?
            };

            let out = self.env.step_with_allocations(&actions, allocations)?;
            let next1 = self.layer1_obs();
            let update1 = if learn {
                self.layer1.observe(&obs1, &a1, &out.rewards, &next1)?;
                self.layer1.update()?
            } else {
                None
            };

            let layer2_view = match layer2 {
                Some((lsf, b, obs2, a2, amps)) => {
                    let r2 = split_reward(&out.rewards, n_s);
                    if learn {
                        pending = Some(Pending {
                            obs: obs2,
                            actions: a2,
                            rewards: r2.clone(),
                        });
                        if t + 1 == steps {
                            let (_, _, last_obs) = self.layer2_obs(&budgets)?;
                            if let (Some(l2), Some(p)) = (self.layer2.as_mut(), pending.take()) {
                                l2.observe(&p.obs, &p.actions, &p.rewards, &last_obs)?;
                                update2 = l2.update()?.or(update2);
                            }
                        }
                    }
                    Some(LayerTwoView {
                        lsf,
                        budgets: b,
                        actions: amps,
                        rewards: r2,
                    })
                }
                None => None,
            };

            logs.push(StepLog {
                step: t,
                layer1: LayerOneView {
                    state: state1,
                    actions,
                    rewards: out.rewards,
                },
                layer2: layer2_view,
                allocations: out.allocations,
                sum_se: out.reward_sum,
                moved: out.moved,
                update1,
                update2,
            });
            obs1 = next1;
        }
        Ok(logs)
    }
}
