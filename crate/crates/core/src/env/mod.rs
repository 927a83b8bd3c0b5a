//! Mobile multi-UE uplink environment.
//!
//! Base stations and the UE starting points are drawn once per environment;
//! every episode restarts the UEs from their starting points. Each step takes one action per UE (power budget, and in the
//! mobile scenarios a step length and heading), rewards every UE with its
//! closed-form SE at the current positions, and then moves the UEs.

mod task;
mod torus;

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{build_surface, ArrayGeometry, ChannelParams, ChannelStats, Point3, SpatialModel};
use crate::rng::{stream, Stream};
use crate::se::{se_closed_form_mr, PowerAllocation, SeReport, TRACE_SLACK};
use crate::{Error, Result};

pub use task::{action_dim, decode_action, log_feature, reference_amplitude, ue_observations, PowerControlTask};
pub use torus::Torus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// UEs never move; actions are power only.
    Static,
    /// UEs move by the chosen step and heading.
    Dynamic,
    /// As dynamic, with the step scaled by the predictive limit.
    #[default]
    PmDynamic,
}

impl Scenario {
    pub fn is_mobile(self) -> bool {
        !matches!(self, Scenario::Static)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Static => "static",
            Scenario::Dynamic => "dynamic",
            Scenario::PmDynamic => "pm-dynamic",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Scenario::Static),
            "dynamic" => Ok(Scenario::Dynamic),
            "pm-dynamic" => Ok(Scenario::PmDynamic),
            other => Err(Error::InvalidArgument(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Discount and predictive movement thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpTuple {
    pub gamma: f64,
    /// Sum reward at or above which steps are shortened by `alpha`.
    pub r_g: f64,
    /// Sum reward at or below which steps are lengthened by `beta_acc`.
    pub r_b: f64,
    pub alpha: f64,
    pub beta_acc: f64,
}

impl MdpTuple {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        if !(self.beta_acc > 1.0) {
            return Err(Error::config("beta_acc", "must exceed 1"));
        }
        if !(self.r_b < self.r_g) {
            return Err(Error::config("r_b", "must be below r_g"));
        }
        Ok(())
    }
}

/// Step length after predictive management of the team reward `reward_sum`.
pub fn predictive_limit(reward_sum: f64, step: f64, mdp: &MdpTuple) -> f64 {
    if reward_sum >= mdp.r_g {
        mdp.alpha * step
    } else if reward_sum <= mdp.r_b {
        mdp.beta_acc * step
    } else {
        step
    }
}

/// Scale `raw` amplitudes down uniformly if their power exceeds `budget`.
pub fn project_power(raw: &[f64], budget: f64) -> Result<PowerAllocation> {
    if raw.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or NaN amplitude in {raw:?}")));
    }
    let power: f64 = raw.iter().map(|a| a * a).sum();
    let amplitudes = if power <= budget {
        raw.to_vec()
    } else {
        let s = (budget / power).sqrt();
        let mut a: Vec<f64> = raw.iter().map(|x| x * s).collect();
        // guard the last ulp so the trace never exceeds the budget
        while a.iter().map(|x| x * x).sum::<f64>() > budget {
            a.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
        }
        a
    };
    PowerAllocation::new(amplitudes, budget)
}

/// One UE's decision: transmit power budget, and movement for mobile scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    pub power: f64,
    pub step: f64,
    pub angle: f64,
}

impl AgentAction {
    pub fn power_only(power: f64) -> Self {
        AgentAction {
            power,
            step: 0.0,
            angle: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub area: f64,
    pub n_bs: usize,
    pub n_ue: usize,
    pub min_bs_spacing: f64,
    pub bs_height: f64,
    pub ue_height: f64,
    pub bs_shape: (usize, usize),
    pub ue_shape: (usize, usize),
    pub bs_spacing: f64,
    pub ue_spacing: f64,
    pub channel: ChannelParams,
    pub noise_power: f64,
    pub p_max: f64,
    pub d_max: f64,
    pub mdp: MdpTuple,
    pub scenario: Scenario,
    pub max_placement_tries: usize,
}

impl EnvConfig {
    pub fn n_s(&self) -> usize {
        self.ue_shape.0 * self.ue_shape.1
    }

    pub fn n_r(&self) -> usize {
        self.bs_shape.0 * self.bs_shape.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bs_positions: Vec<Point3>,
    pub ue_positions: Vec<Point3>,
    pub time: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub rewards: Vec<f64>,
    pub reward_sum: f64,
    pub allocations: Vec<PowerAllocation>,
    /// Step length actually applied to every UE.
    pub moved: Vec<f64>,
}

/// One line of the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub positions: Vec<Point3>,
    pub actions: Vec<AgentAction>,
    pub rewards: Vec<f64>,
}

pub struct CellFreeEnv {
    cfg: EnvConfig,
    torus: Torus,
    spatial: SpatialModel,
    world: WorldState,
    origins: Vec<Point3>,
    grid: Option<Vec<Vec<ChannelStats>>>,
}

impl CellFreeEnv {
    /// Places the base stations from the placement stream of `seed` and the
    /// UE starting points from its episode stream.
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        if cfg.n_bs == 0 || cfg.n_ue == 0 {
            return Err(Error::InvalidArgument("need at least one BS and one UE".into()));
        }
        cfg.mdp.validate()?;
        let torus = Torus { side: cfg.area };
        let mut placement = stream(seed, Stream::Placement);
        let bs_positions = torus.place_spaced(
            &mut placement,
            cfg.n_bs,
            cfg.min_bs_spacing,
            cfg.bs_height,
            cfg.max_placement_tries,
        )?;
        let bs0 = build_surface(
            cfg.bs_shape.0,
            cfg.bs_shape.1,
            cfg.bs_spacing,
            [0.0, 0.0, cfg.bs_height],
        )?;
        let ue0 = build_surface(
            cfg.ue_shape.0,
            cfg.ue_shape.1,
            cfg.ue_spacing,
            [0.0, 0.0, cfg.ue_height],
        )?;
        let spatial = SpatialModel::new(&bs0, &ue0, &cfg.channel)?;
        let mut rng = stream(seed, Stream::Episode);
        let origins: Vec<Point3> = (0..cfg.n_ue)
            .map(|_| torus.uniform_point(&mut rng, cfg.ue_height))
            .collect();
        Ok(CellFreeEnv {
            cfg,
            torus,
            spatial,
            world: WorldState {
                bs_positions,
                ue_positions: origins.clone(),
                time: 0,
            },
            origins,
            grid: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    /// Move every UE back to its starting point.
    pub fn reset_episode(&mut self) -> Vec<f64> {
        self.world.ue_positions = self.origins.clone();
        self.world.time = 0;
        self.grid = None;
        self.observe_layer1()
    }

    pub fn origins(&self) -> &[Point3] {
        &self.origins
    }

    /// Redraw all UE positions from `rng` (starting points are unchanged).
    pub fn place_ues<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let z = self.cfg.ue_height;
        self.world.ue_positions = (0..self.cfg.n_ue).map(|_| self.torus.uniform_point(rng, z)).collect();
        self.world.time = 0;
        self.grid = None;
    }

    /// Place UEs explicitly (wrapped into the area).
    pub fn set_ue_positions(&mut self, positions: Vec<Point3>) -> Result<()> {
        if positions.len() != self.cfg.n_ue {
            return Err(Error::Dimension(format!(
                "{} positions for {} UEs",
                positions.len(),
                self.cfg.n_ue
            )));
        }
        self.world.ue_positions = positions.into_iter().map(|p| self.torus.wrap(p)).collect();
        self.world.time = 0;
        self.grid = None;
        Ok(())
    }

    /// Replace the UE starting points used by [`CellFreeEnv::reset_episode`].
    pub fn set_origins(&mut self, origins: Vec<Point3>) -> Result<()> {
        self.set_ue_positions(origins)?;
        self.origins = self.world.ue_positions.clone();
        Ok(())
    }

    fn geometries(&self, bs: &Point3, ue: &Point3) -> Result<(ArrayGeometry, ArrayGeometry)> {
        let d = self.torus.displacement(bs, ue);
        let r = build_surface(self.cfg.bs_shape.0, self.cfg.bs_shape.1, self.cfg.bs_spacing, *bs)?;
        let s = build_surface(
            self.cfg.ue_shape.0,
            self.cfg.ue_shape.1,
            self.cfg.ue_spacing,
            [bs[0] + d[0], bs[1] + d[1], ue[2]],
        )?;
        Ok((r, s))
    }

    /// Channel statistics at the current positions, indexed `[bs][ue]`.
    pub fn stats_grid(&mut self) -> Result<&[Vec<ChannelStats>]> {
        if self.grid.is_none() {
            let mut grid = Vec::with_capacity(self.cfg.n_bs);
            for bs in &self.world.bs_positions {
                let mut row = Vec::with_capacity(self.cfg.n_ue);
                for ue in &self.world.ue_positions {
                    let (r, s) = self.geometries(bs, ue)?;
                    row.push(self.spatial.stats(&r, &s)?);
                }
                grid.push(row);
            }
            self.grid = Some(grid);
        }
        Ok(self.grid.as_deref().unwrap_or_default())
    }

    /// Per-UE aggregate large-scale fading `Σ_m β_mk`.
    pub fn observe_layer1(&mut self) -> Vec<f64> {
        match self.stats_grid() {
            Ok(grid) => (0..grid[0].len())
                .map(|k| grid.iter().map(|row| row[k].beta).sum())
                .collect(),
            Err(_) => vec![0.0; self.cfg.n_ue],
        }
    }

    /// Per-UE-antenna aggregate exact LSF `Σ_m Σ_r B_mk[r, n_s]`, UE-major.
    pub fn observe_antennas(&mut self) -> Result<Vec<f64>> {
        let ns = self.cfg.n_s();
        let k_count = self.cfg.n_ue;
        let grid = self.stats_grid()?;
        let mut out = vec![0.0; k_count * ns];
        for row in grid {
            for (k, st) in row.iter().enumerate() {
                for a in 0..ns {
                    out[k * ns + a] += st.lsf.column(a).sum();
                }
            }
        }
        Ok(out)
    }

    /// Single-layer allocation: each UE spreads its power evenly over its antennas.
    pub fn uniform_allocations(&self, actions: &[AgentAction]) -> Result<Vec<PowerAllocation>> {
        let ns = self.cfg.n_s();
        actions
            .iter()
            .map(|a| {
                let p = a.power.clamp(0.0, self.cfg.p_max);
                project_power(&vec![(p / ns as f64).sqrt(); ns], p)
            })
            .collect()
    }

    /// Closed-form SE for the given allocations at the current positions.
    pub fn evaluate(&mut self, allocations: &[PowerAllocation]) -> Result<SeReport> {
        let noise = self.cfg.noise_power;
        let grid = self.stats_grid()?;
        se_closed_form_mr(grid, allocations, noise)
    }

    pub fn step(&mut self, actions: &[AgentAction]) -> Result<StepOutcome> {
        self.check_actions(actions)?;
        let allocations = self.uniform_allocations(actions)?;
        self.step_with_allocations(actions, allocations)
    }

    /// Reward every UE under `allocations`, then apply the movement part of `actions`.
    pub fn step_with_allocations(
        &mut self,
        actions: &[AgentAction],
        allocations: Vec<PowerAllocation>,
    ) -> Result<StepOutcome> {
        self.check_actions(actions)?;
        if allocations.len() != self.cfg.n_ue {
            return Err(Error::Dimension(format!(
                "{} allocations for {} UEs",
                allocations.len(),
                self.cfg.n_ue
            )));
        }
        for p in &allocations {
            if p.trace() > p.budget.min(self.cfg.p_max) + TRACE_SLACK {
                return Err(Error::InvalidArgument(format!(
                    "allocation power {} exceeds its budget",
                    p.trace()
                )));
            }
        }
        let report = self.evaluate(&allocations)?;
        let mut moved = vec![0.0; actions.len()];
        if self.cfg.scenario.is_mobile() {
            for (k, a) in actions.iter().enumerate() {
                let step = a.step.clamp(0.0, self.cfg.d_max);
                let step = match self.cfg.scenario {
                    Scenario::PmDynamic => predictive_limit(report.sum, step, &self.cfg.mdp),
                    _ => step,
                };
                let p = self.world.ue_positions[k];
                self.world.ue_positions[k] =
                    self.torus
                        .wrap([p[0] + step * a.angle.cos(), p[1] + step * a.angle.sin(), p[2]]);
                moved[k] = step;
            }
            if moved.iter().any(|s| *s != 0.0) {
                self.grid = None;
            }
        }
        self.world.time += 1;
        Ok(StepOutcome {
            rewards: report.per_ue,
            reward_sum: report.sum,
            allocations,
            moved,
        })
    }

    fn check_actions(&self, actions: &[AgentAction]) -> Result<()> {
        if actions.len() != self.cfg.n_ue {
            return Err(Error::Dimension(format!(
                "{} actions for {} UEs",
                actions.len(),
                self.cfg.n_ue
            )));
        }
        for a in actions {
            if a.power.is_nan() || a.step.is_nan() || a.angle.is_nan() {
                return Err(Error::InvalidArgument(format!("NaN in action {a:?}")));
            }
        }
        Ok(())
    }

    pub fn trajectory_record(&self, actions: &[AgentAction], rewards: &[f64]) -> TrajectoryRecord {
        TrajectoryRecord {
            t: self.world.time,
            positions: self.world.ue_positions.clone(),
            actions: actions.to_vec(),
            rewards: rewards.to_vec(),
        }
    }

    /// Map a heading in radians into `[0, 2π)`.
    pub fn normalize_angle(angle: f64) -> f64 {
        angle.rem_euclid(TAU)
    }
}
