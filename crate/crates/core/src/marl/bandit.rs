use super::learner::{EnvSpec, MarlEnv, Transition};
use crate::Result;

/// Single-agent power bandit: reward `log2(1 + gain * p) - cost * p` for
/// power `p = action * p_max`, with a constant observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBandit {
    pub gain: f64,
    pub cost: f64,
    pub p_max: f64,
}

impl PowerBandit {
    pub fn reward(&self, p: f64) -> f64 {
        (1.0 + self.gain * p).log2() - self.cost * p
    }

    /// Best power on a uniform grid of `points` over `[0, p_max]`.
    pub fn grid_optimum(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| self.p_max * i as f64 / (points - 1) as f64)
            .fold((0.0, f64::NEG_INFINITY), |best, p| {
                let r = self.reward(p);
                if r > best.1 {
                    (p, r)
                } else {
                    best
                }
            })
            .0
    }
}

impl MarlEnv for PowerBandit {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_agents: 1,
            obs_dim: 1,
            act_dim: 1,
        }
    }

    fn reset_episode(&mut self) -> Result<Vec<Vec<f64>>> {
        Ok(vec![vec![1.0]])
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<Transition> {
        let p = actions[0][0].clamp(0.0, 1.0) * self.p_max;
        Ok(Transition {
            rewards: vec![self.reward(p)],
            next_obs: vec![vec![1.0]],
        })
    }
}
