use std::f64::consts::TAU;

use super::{AgentAction, CellFreeEnv, Scenario, StepOutcome};
use crate::marl::{EnvSpec, MarlEnv, Transition};
use crate::Result;

/// Free-space boresight amplitude at 100 m, used to normalise LSF features.
pub fn reference_amplitude(wavelength: f64) -> f64 {
    2f64.sqrt() * wavelength / (4.0 * std::f64::consts::PI * 100.0)
}

/// `log10(value / reference)`, floored so a zero value stays finite.
pub fn log_feature(value: f64, reference: f64) -> f64 {
    (value.max(1e-300) / reference).log10()
}

/// Number of action components per UE in `scenario`.
pub fn action_dim(scenario: Scenario) -> usize {
    if scenario.is_mobile() {
        3
    } else {
        1
    }
}

/// Map a normalised action in `[0, 1]^d` to physical units.
pub fn decode_action(normalized: &[f64], scenario: Scenario, p_max: f64, d_max: f64) -> AgentAction {
    let c = |i: usize| normalized.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
    if scenario.is_mobile() {
        AgentAction {
            power: c(0) * p_max,
            step: c(1) * d_max,
            angle: (c(2) * TAU).rem_euclid(TAU),
        }
    } else {
        AgentAction::power_only(c(0) * p_max)
    }
}

/// Per-UE observation vectors for the UE-level agents.
pub fn ue_observations(env: &mut CellFreeEnv) -> Vec<Vec<f64>> {
    let reference = reference_amplitude(env.config().channel.wavelength);
    env.observe_layer1()
        .into_iter()
        .map(|b| vec![log_feature(b, reference)])
        .collect()
}

/// The environment as a cooperative task with one agent per UE and uniform
/// per-antenna power.
pub struct PowerControlTask {
    pub env: CellFreeEnv,
    pub last: Option<(Vec<AgentAction>, StepOutcome)>,
}

impl PowerControlTask {
    pub fn new(env: CellFreeEnv) -> Self {
        PowerControlTask { env, last: None }
    }
}

impl MarlEnv for PowerControlTask {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_agents: self.env.config().n_ue,
            obs_dim: 1,
            act_dim: action_dim(self.env.config().scenario),
        }
    }

    fn reset_episode(&mut self) -> Result<Vec<Vec<f64>>> {
        self.env.reset_episode();
        Ok(ue_observations(&mut self.env))
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<Transition> {
        let cfg = self.env.config();
        let (scenario, p_max, d_max) = (cfg.scenario, cfg.p_max, cfg.d_max);
        let decoded: Vec<AgentAction> = actions
            .iter()
            .map(|a| decode_action(a, scenario, p_max, d_max))
            .collect();
        let out = self.env.step(&decoded)?;
        let tr = Transition {
            rewards: out.rewards.clone(),
            next_obs: ue_observations(&mut self.env),
        };
        self.last = Some((decoded, out));
        Ok(tr)
    }
}
