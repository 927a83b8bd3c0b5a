use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{clip_global_norm, soft_update, Grads, Mlp, OutputMap, SoftUpdate};
use super::replay::{fill_extraction_pool, uniform_subset, Experience, ReplayBuffer, TrackMeta};
use crate::linalg::RMat;
use crate::rng::{stream, SimRng, Stream};
use crate::{Error, Result};

/// Shape of a multi-agent task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub n_agents: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub rewards: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
}

/// A cooperative task seen by the learner. Actions are normalised to `[0, 1]`
/// per component; the task maps them to physical ranges.
pub trait MarlEnv {
    fn spec(&self) -> EnvSpec;
    fn reset_episode(&mut self) -> Result<Vec<Vec<f64>>>;
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<Transition>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// One centralised critic per agent over the joint state and action.
    Maddpg,
    /// A shared global critic plus per-agent local critics.
    DeMaddpg,
    /// MADDPG with prioritized experience selection.
    PesMaddpg,
    /// Global and local critics with prioritized experience selection.
    #[default]
    MimoMaddpg,
}

impl Variant {
    pub fn has_global_critic(self) -> bool {
        matches!(self, Variant::DeMaddpg | Variant::MimoMaddpg)
    }

    pub fn default_sampling(self) -> Sampling {
        match self {
            Variant::PesMaddpg | Variant::MimoMaddpg => Sampling::Prioritized,
            _ => Sampling::Uniform,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Maddpg => "maddpg",
            Variant::DeMaddpg => "de-maddpg",
            Variant::PesMaddpg => "pes-maddpg",
            Variant::MimoMaddpg => "mimo-maddpg",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maddpg" => Ok(Variant::Maddpg),
            "de-maddpg" => Ok(Variant::DeMaddpg),
            "pes-maddpg" => Ok(Variant::PesMaddpg),
            "mimo-maddpg" => Ok(Variant::MimoMaddpg),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScale {
    pub shift: f64,
    pub scale: f64,
}

impl RewardScale {
    pub const IDENTITY: RewardScale = RewardScale { shift: 0.0, scale: 1.0 };

    pub fn apply(&self, r: f64) -> f64 {
        (r - self.shift) * self.scale
    }

    /// Mean and inverse standard deviation of `rewards`.
    pub fn standardise(rewards: &[f64]) -> RewardScale {
        if rewards.is_empty() {
            return RewardScale::IDENTITY;
        }
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        RewardScale { shift: mean, scale }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Uniform,
    Prioritized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub variant: Variant,
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub tau: f64,
    pub soft_update: SoftUpdate,
    pub grad_clip: f64,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub pool_size: usize,
    pub batch_global: usize,
    pub batch_local: usize,
    pub mu: f64,
    pub nu: f64,
    pub noise_start: f64,
    pub noise_end: f64,
    pub noise_decay_steps: u64,
    /// Include the local-critic term in the actor gradient. Defaults to the
    /// variant's behaviour.
    pub local_term: Option<bool>,
    /// Overrides the variant's replay sampling.
    pub sampling: Option<Sampling>,
    /// Affine map `(r - shift) * scale` applied to rewards before training.
    /// `None` standardises with the buffer mean and standard deviation at
    /// the first update.
    pub reward_scale: Option<RewardScale>,
    /// Agent-to-parameter-set map; agents in one group share actor and local critic.
    pub groups: Option<Vec<usize>>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            variant: Variant::MimoMaddpg,
            gamma: 0.99,
            lr_actor: 0.01,
            lr_critic: 0.01,
            tau: 0.01,
            soft_update: SoftUpdate::Standard,
            grad_clip: 0.5,
            hidden: vec![128, 64],
            buffer_capacity: 1024,
            pool_size: 512,
            batch_global: 64,
            batch_local: 64,
            mu: 1.0,
            nu: 1e-4,
            noise_start: 0.2,
            noise_end: 0.01,
            noise_decay_steps: 10_000,
            local_term: None,
            sampling: None,
            reward_scale: None,
            groups: None,
        }
    }
}

impl LearnerConfig {
    pub fn uses_local_term(&self) -> bool {
        self.local_term.unwrap_or(self.variant.has_global_critic()) && self.variant.has_global_critic()
    }

    pub fn effective_sampling(&self) -> Sampling {
        self.sampling.unwrap_or(self.variant.default_sampling())
    }
}

/// Squared Bellman error `mean (Q(x) - y)^2` and its parameter gradient.
pub fn bellman_loss(critic: &Mlp, inputs: &RMat, targets: &[f64]) -> Result<(f64, Grads, Vec<f64>)> {
    let cache = critic.forward_cached(inputs)?;
    let b = targets.len();
    if cache.output.ncols() != b || cache.output.nrows() != 1 {
        return Err(Error::Dimension(format!(
            "{} targets for critic output {:?}",
            b,
            cache.output.shape()
        )));
    }
    let err: Vec<f64> = cache.output.iter().zip(targets).map(|(q, y)| q - y).collect();
    let loss = err.iter().map(|e| e * e).sum::<f64>() / b as f64;
    let upstream = RMat::from_fn(1, b, |_, j| 2.0 * err[j] / b as f64);
    let (grads, _) = critic.backward(&cache, &upstream)?;
    Ok((loss, grads, err.iter().map(|e| e * e).collect()))
}

/// `r + γ Q'` elementwise.
pub fn bellman_targets(rewards: &[f64], next_q: &[f64], gamma: f64) -> Vec<f64> {
    rewards.iter().zip(next_q).map(|(r, q)| r + gamma * q).collect()
}

/// Ascent direction of `mean_b Q(x_b)` with respect to the actor parameters,
/// where rows `action_rows` of the critic input are the actor's output on
/// `actor_inputs`.
pub fn deterministic_policy_gradient(
    actor: &Mlp,
    critic: &Mlp,
    actor_inputs: &RMat,
    critic_inputs: &RMat,
    action_offset: usize,
) -> Result<Grads> {
    let actor_cache = actor.forward_cached(actor_inputs)?;
    let act_dim = actor.output_dim();
    let b = actor_inputs.ncols();
    let mut x = critic_inputs.clone();
    x.view_mut((action_offset, 0), (act_dim, b))
        .copy_from(&actor_cache.output);
    let critic_cache = critic.forward_cached(&x)?;
    let upstream = RMat::from_element(1, b, 1.0 / b as f64);
    let (_, dx) = critic.backward(&critic_cache, &upstream)?;
    let da = dx.rows(action_offset, act_dim).into_owned();
    let (grads, _) = actor.backward(&actor_cache, &da)?;
    Ok(grads)
}

/// Per-update diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub central_loss: f64,
    pub local_loss: f64,
    pub mean_priority: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Learner {
    cfg: LearnerConfig,
    spec: EnvSpec,
    groups: Vec<usize>,
    actors: Vec<Mlp>,
    actor_targets: Vec<Mlp>,
    central: Vec<Mlp>,
    central_targets: Vec<Mlp>,
    local: Vec<Mlp>,
    local_targets: Vec<Mlp>,
    buffer: ReplayBuffer,
    exploration: Vec<SimRng>,
    central_sampling: Vec<SimRng>,
    local_sampling: Vec<SimRng>,
    steps: u64,
    updates: u64,
    reward_scale: Option<RewardScale>,
}

struct Batch {
    indices: Vec<usize>,
}

impl Learner {
    pub fn new(cfg: LearnerConfig, spec: EnvSpec, seed: u64) -> Result<Self> {
        if spec.n_agents == 0 || spec.obs_dim == 0 || spec.act_dim == 0 {
            return Err(Error::InvalidArgument(format!("degenerate task {spec:?}")));
        }
        if cfg.batch_global == 0 || cfg.batch_local == 0 || cfg.pool_size == 0 {
            return Err(Error::InvalidArgument("batch and pool sizes must be positive".into()));
        }
        let groups = cfg.groups.clone().unwrap_or_else(|| (0..spec.n_agents).collect());
        if groups.len() != spec.n_agents {
            return Err(Error::Dimension(format!(
                "{} group labels for {} agents",
                groups.len(),
                spec.n_agents
            )));
        }
        let n_groups = groups.iter().max().map_or(0, |g| g + 1);
        if (0..n_groups).any(|g| !groups.contains(&g)) {
            return Err(Error::InvalidArgument("group labels must be contiguous from 0".into()));
        }
        let k = spec.n_agents;
        let layers = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend_from_slice(&cfg.hidden);
            s.push(output);
            s
        };
        let mut actors = Vec::with_capacity(n_groups);
        let mut local = Vec::new();
        for g in 0..n_groups {
            let mut rng = stream(seed, Stream::ActorInit(g as u64));
            actors.push(Mlp::new(
                &layers(spec.obs_dim, spec.act_dim),
                OutputMap::Logistic,
                &mut rng,
            )?);
            if cfg.variant.has_global_critic() {
                let mut rng = stream(seed, Stream::LocalCriticInit(g as u64));
                local.push(Mlp::new(
                    &layers(spec.obs_dim + spec.act_dim, 1),
                    OutputMap::Linear,
                    &mut rng,
                )?);
            }
        }
        let n_central = if cfg.variant.has_global_critic() { 1 } else { k };
        let joint = k * (spec.obs_dim + spec.act_dim);
        let central = (0..n_central)
            .map(|c| {
                let mut rng = stream(seed, Stream::CentralCriticInit(c as u64));
                Mlp::new(&layers(joint, 1), OutputMap::Linear, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let local_sampling = if cfg.variant.has_global_critic() {
            (0..k).map(|i| stream(seed, Stream::LocalSampling(i as u64))).collect()
        } else {
            Vec::new()
        };
        Ok(Learner {
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            exploration: (0..k).map(|i| stream(seed, Stream::Exploration(i as u64))).collect(),
            central_sampling: (0..n_central)
                .map(|c| stream(seed, Stream::CentralSampling(c as u64)))
                .collect(),
            local_sampling,
            actor_targets: actors.clone(),
            central_targets: central.clone(),
            local_targets: local.clone(),
            actors,
            central,
            local,
            groups,
            reward_scale: cfg.reward_scale,
            cfg,
            spec,
            steps: 0,
            updates: 0,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn spec(&self) -> EnvSpec {
        self.spec
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn reward_scale(&self) -> Option<RewardScale> {
        self.reward_scale
    }

    pub fn actors(&self) -> &[Mlp] {
        &self.actors
    }

    pub fn actors_mut(&mut self) -> &mut [Mlp] {
        &mut self.actors
    }

    pub fn central_critics(&self) -> &[Mlp] {
        &self.central
    }

    pub fn central_critics_mut(&mut self) -> &mut [Mlp] {
        &mut self.central
    }

    pub fn local_critics(&self) -> &[Mlp] {
        &self.local
    }

    pub fn local_critics_mut(&mut self) -> &mut [Mlp] {
        &mut self.local
    }

    /// All online and target networks, for structural comparisons.
    pub fn all_networks(&self) -> Vec<&Mlp> {
        self.actors
            .iter()
            .chain(&self.actor_targets)
            .chain(&self.central)
            .chain(&self.central_targets)
            .chain(&self.local)
            .chain(&self.local_targets)
            .collect()
    }

    fn n_central(&self) -> usize {
        self.central.len()
    }

    fn n_tracks(&self) -> usize {
        self.n_central() + if self.local.is_empty() { 0 } else { self.spec.n_agents }
    }

    /// Current exploration standard deviation.
    pub fn noise_std(&self) -> f64 {
        let frac = if self.cfg.noise_decay_steps == 0 {
            1.0
        } else {
            (self.steps as f64 / self.cfg.noise_decay_steps as f64).min(1.0)
        };
        self.cfg.noise_start + (self.cfg.noise_end - self.cfg.noise_start) * frac
    }

    /// Normalised actions for every agent, with exploration noise if `explore`.
    pub fn act(&mut self, obs: &[Vec<f64>], explore: bool) -> Result<Vec<Vec<f64>>> {
        if obs.len() != self.spec.n_agents {
            return Err(Error::Dimension(format!(
                "{} observations for {} agents",
                obs.len(),
                self.spec.n_agents
            )));
        }
        let std = self.noise_std();
        let mut out = Vec::with_capacity(obs.len());
        for (i, o) in obs.iter().enumerate() {
            let mut a = self.actors[self.groups[i]].forward_one(o)?;
            if explore {
                for v in a.iter_mut() {
                    let n: f64 = self.exploration[i].sample(StandardNormal);
                    *v = (*v + std * n).clamp(0.0, 1.0);
                }
            }
            out.push(a);
        }
        Ok(out)
    }

    fn shaped(&self, r: f64) -> f64 {
        self.reward_scale.unwrap_or(RewardScale::IDENTITY).apply(r)
    }

    fn central_reward(&self, e: &Experience, c: usize) -> f64 {
        if self.cfg.variant.has_global_critic() {
            e.rewards.iter().map(|r| self.shaped(*r)).sum()
        } else {
            self.shaped(e.rewards[c])
        }
    }

    fn joint_column(&self, obs: &[Vec<f64>], actions: &[Vec<f64>]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.spec.n_agents * (self.spec.obs_dim + self.spec.act_dim));
        for o in obs {
            v.extend_from_slice(o);
        }
        for a in actions {
            v.extend_from_slice(a);
        }
        v
    }

    fn target_actions(&self, obs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        obs.iter()
            .enumerate()
            .map(|(i, o)| self.actor_targets[self.groups[i]].forward_one(o))
            .collect()
    }

    /// Critic inputs and Bellman targets of central critic `c` on `indices`.
    fn central_batch(&self, c: usize, indices: &[usize]) -> Result<(RMat, Vec<f64>)> {
        let dim = self.central[c].input_dim();
        let mut x = RMat::zeros(dim, indices.len());
        let mut xn = RMat::zeros(dim, indices.len());
        let mut r = Vec::with_capacity(indices.len());
        for (j, &idx) in indices.iter().enumerate() {
            let e = self.buffer.get(idx);
            x.column_mut(j).copy_from_slice(&self.joint_column(&e.obs, &e.actions));
            let a_next = self.target_actions(&e.next_obs)?;
            xn.column_mut(j)
                .copy_from_slice(&self.joint_column(&e.next_obs, &a_next));
            r.push(self.central_reward(e, c));
        }
        let q_next = self.central_targets[c].forward(&xn)?;
        Ok((x, bellman_targets(&r, q_next.as_slice(), self.cfg.gamma)))
    }

    fn local_batch(&self, agent: usize, indices: &[usize]) -> Result<(RMat, Vec<f64>)> {
        let g = self.groups[agent];
        let dim = self.spec.obs_dim + self.spec.act_dim;
        let mut x = RMat::zeros(dim, indices.len());
        let mut xn = RMat::zeros(dim, indices.len());
        let mut r = Vec::with_capacity(indices.len());
        for (j, &idx) in indices.iter().enumerate() {
            let e = self.buffer.get(idx);
            let mut col = e.obs[agent].clone();
            col.extend_from_slice(&e.actions[agent]);
            x.column_mut(j).copy_from_slice(&col);
            let mut next = e.next_obs[agent].clone();
            next.extend(self.actor_targets[g].forward_one(&e.next_obs[agent])?);
            xn.column_mut(j).copy_from_slice(&next);
            r.push(self.shaped(e.rewards[agent]));
        }
        let q_next = self.local_targets[g].forward(&xn)?;
        Ok((x, bellman_targets(&r, q_next.as_slice(), self.cfg.gamma)))
    }

    fn record_losses(&mut self, track: usize, c_or_agent: usize, central: bool) -> Result<()> {
        let all: Vec<usize> = (0..self.buffer.len()).collect();
        for chunk in all.chunks(256) {
            let (x, y) = if central {
                self.central_batch(c_or_agent, chunk)?
            } else {
                self.local_batch(c_or_agent, chunk)?
            };
            let net = if central {
                &self.central[c_or_agent]
            } else {
                &self.local[self.groups[c_or_agent]]
            };
            let q = net.forward(&x)?;
            for (j, &idx) in chunk.iter().enumerate() {
                let e = q[(0, j)] - y[j];
                self.buffer.get_mut(idx).tracks[track].loss = e * e;
            }
        }
        Ok(())
    }

    fn recompute_all_losses(&mut self) -> Result<()> {
        for c in 0..self.n_central() {
            self.record_losses(c, c, true)?;
        }
        if !self.local.is_empty() {
            for i in 0..self.spec.n_agents {
                self.record_losses(self.n_central() + i, i, false)?;
            }
        }
        Ok(())
    }

    /// Store one joint transition with its initial Bellman losses.
    pub fn observe(
        &mut self,
        obs: &[Vec<f64>],
        actions: &[Vec<f64>],
        rewards: &[f64],
        next_obs: &[Vec<f64>],
    ) -> Result<()> {
        let k = self.spec.n_agents;
        if obs.len() != k || actions.len() != k || rewards.len() != k || next_obs.len() != k {
            return Err(Error::Dimension(
                "transition does not match the number of agents".into(),
            ));
        }
        self.buffer.push(Experience {
            obs: obs.to_vec(),
            actions: actions.to_vec(),
            rewards: rewards.to_vec(),
            next_obs: next_obs.to_vec(),
            tracks: vec![
                TrackMeta {
                    loss: 0.0,
                    n: 0,
                    pr: 0.0
                };
                self.n_tracks()
            ],
        });
        let last = self.buffer.len() - 1;
        for c in 0..self.n_central() {
            let (x, y) = self.central_batch(c, &[last])?;
            let e = self.central[c].forward(&x)?[(0, 0)] - y[0];
            self.buffer.get_mut(last).tracks[c].loss = e * e;
        }
        if !self.local.is_empty() {
            for i in 0..k {
                let (x, y) = self.local_batch(i, &[last])?;
                let e = self.local[self.groups[i]].forward(&x)?[(0, 0)] - y[0];
                let track = self.n_central() + i;
                self.buffer.get_mut(last).tracks[track].loss = e * e;
            }
        }
        self.steps += 1;
        Ok(())
    }

    fn sample(&mut self, track: usize, rng_slot: (bool, usize), batch: usize) -> Result<Batch> {
        let sampling = self.cfg.effective_sampling();
        let mut rng = if rng_slot.0 {
            self.central_sampling[rng_slot.1].clone()
        } else {
            self.local_sampling[rng_slot.1].clone()
        };
        let indices = match sampling {
            Sampling::Prioritized => {
                self.buffer.refresh_priorities(track, self.cfg.mu, self.cfg.nu)?;
                let pool = fill_extraction_pool(&mut self.buffer, track, self.cfg.pool_size, &mut rng)?;
                uniform_subset(&pool, batch, &mut rng)
            }
            Sampling::Uniform => {
                let all: Vec<usize> = (0..self.buffer.len()).collect();
                uniform_subset(&all, batch, &mut rng)
            }
        };
        if rng_slot.0 {
            self.central_sampling[rng_slot.1] = rng;
        } else {
            self.local_sampling[rng_slot.1] = rng;
        }
        Ok(Batch { indices })
    }

    fn train_critic(&mut self, central: bool, idx: usize, track: usize, batch: &Batch) -> Result<f64> {
        let (x, y) = if central {
            self.central_batch(idx, &batch.indices)?
        } else {
            self.local_batch(idx, &batch.indices)?
        };
        let net_idx = if central { idx } else { self.groups[idx] };
        let net = if central {
            &self.central[net_idx]
        } else {
            &self.local[net_idx]
        };
        let (loss, mut grads, sq) = bellman_loss(net, &x, &y)?;
        clip_global_norm(&mut [&mut grads], self.cfg.grad_clip);
        let lr = self.cfg.lr_critic;
        let (net, target) = if central {
            (&mut self.central[net_idx], &mut self.central_targets[net_idx])
        } else {
            (&mut self.local[net_idx], &mut self.local_targets[net_idx])
        };
        net.apply(&grads, -lr);
        soft_update(target, net, self.cfg.tau, self.cfg.soft_update)?;
        for (&i, l) in batch.indices.iter().zip(sq) {
            self.buffer.get_mut(i).tracks[track].loss = l;
        }
        Ok(loss)
    }

    /// The two actor-gradient contributions of `agent`: through its central
    /// critic on `central_indices`, and through its local critic on
    /// `local_indices` (when the variant has local critics).
    pub fn actor_gradient_terms(
        &self,
        agent: usize,
        central_indices: &[usize],
        local_indices: &[usize],
    ) -> Result<(Grads, Option<Grads>)> {
        let g = self.groups[agent];
        let actor = &self.actors[g];
        let (od, ad, k) = (self.spec.obs_dim, self.spec.act_dim, self.spec.n_agents);
        let c = if self.cfg.variant.has_global_critic() { 0 } else { agent };
        let critic = &self.central[c];
        let mut s_i = RMat::zeros(od, central_indices.len());
        let mut x = RMat::zeros(critic.input_dim(), central_indices.len());
        for (j, &idx) in central_indices.iter().enumerate() {
            let e = self.buffer.get(idx);
            s_i.column_mut(j).copy_from_slice(&e.obs[agent]);
            x.column_mut(j).copy_from_slice(&self.joint_column(&e.obs, &e.actions));
        }
        let central_term = deterministic_policy_gradient(actor, critic, &s_i, &x, k * od + agent * ad)?;
        let local_term = if self.local.is_empty() {
            None
        } else {
            let mut s_i = RMat::zeros(od, local_indices.len());
            let mut x = RMat::zeros(od + ad, local_indices.len());
            for (j, &idx) in local_indices.iter().enumerate() {
                let e = self.buffer.get(idx);
                s_i.column_mut(j).copy_from_slice(&e.obs[agent]);
                x.view_mut((0, j), (od, 1)).copy_from_slice(&e.obs[agent]);
            }
            Some(deterministic_policy_gradient(actor, &self.local[g], &s_i, &x, od)?)
        };
        Ok((central_term, local_term))
    }

    /// Actor gradient used by the update rule of the configured variant.
    pub fn actor_gradient(&self, agent: usize, central_indices: &[usize], local_indices: &[usize]) -> Result<Grads> {
        let (mut g, local) = self.actor_gradient_terms(agent, central_indices, local_indices)?;
        if self.cfg.uses_local_term() {
            if let Some(l) = local {
                g.add(&l);
            }
        }
        Ok(g)
    }

    /// One training round; does nothing until the buffer holds `pool_size` records.
    pub fn update(&mut self) -> Result<Option<UpdateStats>> {
        if self.buffer.len() < self.cfg.pool_size {
            return Ok(None);
        }
        if self.reward_scale.is_none() {
            let all: Vec<f64> = self.buffer.iter().flat_map(|e| e.rewards.iter().copied()).collect();
            self.reward_scale = Some(RewardScale::standardise(&all));
            self.recompute_all_losses()?;
        }
        let mut stats = UpdateStats::default();
        let mut central_batches = Vec::with_capacity(self.n_central());
        for c in 0..self.n_central() {
            let batch = self.sample(c, (true, c), self.cfg.batch_global)?;
            stats.central_loss += self.train_critic(true, c, c, &batch)? / self.n_central() as f64;
            central_batches.push(batch);
        }
        let k = self.spec.n_agents;
        for i in 0..k {
            let local_batch = if self.local.is_empty() {
                None
            } else {
                let track = self.n_central() + i;
                let batch = self.sample(track, (false, i), self.cfg.batch_local)?;
                stats.local_loss += self.train_critic(false, i, track, &batch)? / k as f64;
                Some(batch)
            };
            let c = if self.cfg.variant.has_global_critic() { 0 } else { i };
            let local_idx = local_batch.as_ref().map(|b| b.indices.clone()).unwrap_or_default();
            let mut grads = self.actor_gradient(i, &central_batches[c].indices, &local_idx)?;
            clip_global_norm(&mut [&mut grads], self.cfg.grad_clip);
            let g = self.groups[i];
            self.actors[g].apply(&grads, self.cfg.lr_actor);
            soft_update(
                &mut self.actor_targets[g],
                &self.actors[g],
                self.cfg.tau,
                self.cfg.soft_update,
            )?;
        }
        if self.cfg.effective_sampling() == Sampling::Prioritized {
            let n = self.buffer.len() as f64;
            stats.mean_priority = self.buffer.iter().map(|e| e.tracks[0].pr).sum::<f64>() / n;
        }
        self.updates += 1;
        Ok(Some(stats))
    }
}
