use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{detect_convergence, fractional_baseline};
use super::config::ExperimentConfig;
use crate::channel::Point3;
use crate::dlpc::{DoubleLayerRunner, StepLog};
use crate::env::{AgentAction, CellFreeEnv};
use crate::marl::Learner;
use crate::rng::{stream, Stream};
use crate::se::{se_monte_carlo_parallel, Combiner};
use crate::{Error, Result};

/// One CSV row per (episode, step, layer). Vector-valued columns are
/// `;`-separated so the column set does not depend on the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub episode: usize,
    pub step: usize,
    pub layer: u8,
    pub per_ue_se: String,
    pub sum_se: f64,
    pub budgets: String,
    pub central_loss: Option<f64>,
    pub local_loss: Option<f64>,
    pub mean_priority: Option<f64>,
    pub converged: bool,
}

/// Greedy evaluation after a training episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub episode: usize,
    /// Mean sum SE of the greedy episode from the UE starting points.
    pub origin_sum_se: f64,
    /// Mean and standard deviation over fresh UE placements.
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub variant: String,
    pub architecture: String,
    pub scenario: String,
    pub episodes: usize,
    pub steps: usize,
    pub convergence_episode: Option<usize>,
    /// Mean training sum SE of every episode.
    pub episode_sum_se: Vec<f64>,
    pub evaluations: Vec<EvalPoint>,
    pub final_sum_se: f64,
    pub final_eval_mean: f64,
    pub final_eval_std: f64,
    pub fractional_sum_se: f64,
    pub throughput_mbps: f64,
}

/// Wall-clock measurements, kept apart from the reproducible outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub episode_seconds: Vec<f64>,
}

pub struct RunArtifacts {
    pub rows: Vec<MetricRow>,
    pub summary: RunSummary,
    pub timing: Timing,
    pub learners: Vec<Learner>,
    /// Step logs of every training episode.
    pub logs: Vec<Vec<StepLog>>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn episode_mean(logs: &[StepLog]) -> f64 {
    mean_std(&logs.iter().map(|l| l.sum_se).collect::<Vec<_>>()).0
}

/// UE placements used by every evaluation of a run.
pub fn evaluation_placements(cfg: &ExperimentConfig, env: &CellFreeEnv) -> Vec<Vec<Point3>> {
    let mut rng = stream(cfg.seed, Stream::Evaluation);
    let torus = env.torus();
    (0..cfg.eval_draws)
        .map(|_| {
            (0..cfg.n_ue)
                .map(|_| torus.uniform_point(&mut rng, cfg.ue_height_m))
                .collect()
        })
        .collect()
}

/// Greedy evaluation from the starting points and from `placements`.
pub fn evaluate_policy(
    runner: &mut DoubleLayerRunner,
    episode: usize,
    placements: &[Vec<Point3>],
) -> Result<EvalPoint> {
    let origin_sum_se = episode_mean(&runner.evaluate_episode()?);
    let draws = placements
        .iter()
        .map(|p| runner.evaluate_from(p.clone()).map(|l| episode_mean(&l)))
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&draws);
    Ok(EvalPoint {
        episode,
        origin_sum_se,
        mean,
        std,
    })
}

/// Static sum SE of fractional power control at the current UE positions.
pub fn fractional_sum_se(env: &mut CellFreeEnv, exponent: f64) -> Result<f64> {
    let p_max = env.config().p_max;
    let betas = env.observe_layer1();
    let powers = fractional_baseline(&betas, exponent, p_max)?;
    let actions: Vec<AgentAction> = powers.into_iter().map(AgentAction::power_only).collect();
    let alloc = env.uniform_allocations(&actions)?;
    Ok(env.evaluate(&alloc)?.sum)
}

fn rows_for(episode: usize, logs: &[StepLog]) -> Vec<MetricRow> {
    let mut rows = Vec::with_capacity(2 * logs.len());
    for l in logs {
        let budgets: Vec<f64> = l.layer1.actions.iter().map(|a| a.power).collect();
        let u1 = l.update1.as_ref();
        rows.push(MetricRow {
            episode,
            step: l.step,
            layer: 1,
            per_ue_se: join(&l.layer1.rewards),
            sum_se: l.sum_se,
            budgets: join(&budgets),
            central_loss: u1.map(|u| u.central_loss),
            local_loss: u1.map(|u| u.local_loss),
            mean_priority: u1.map(|u| u.mean_priority),
            converged: false,
        });
        if let Some(v) = &l.layer2 {
            let u2 = l.update2.as_ref();
            rows.push(MetricRow {
                episode,
                step: l.step,
                layer: 2,
                per_ue_se: join(&l.layer1.rewards),
                sum_se: l.sum_se,
                budgets: join(&v.actions.iter().map(|a| a * a).collect::<Vec<_>>()),
                central_loss: u2.map(|u| u.central_loss),
                local_loss: u2.map(|u| u.local_loss),
                mean_priority: u2.map(|u| u.mean_priority),
                converged: false,
            });
        }
    }
    rows
}

/// Train the configured controller and evaluate it every `eval_every`
/// episodes and after the last one.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    run_with_progress(cfg, |_, _| {})
}

/// [`run_experiment`] calling `progress(episode, mean_sum_se)` after every episode.
pub fn run_with_progress(cfg: &ExperimentConfig, mut progress: impl FnMut(usize, f64)) -> Result<RunArtifacts> {
    cfg.validate()?;
    let start = Instant::now();
    let mut env = CellFreeEnv::new(cfg.env_config(), cfg.seed)?;
    let placements = evaluation_placements(cfg, &env);
    env.reset_episode();
    let fractional = fractional_sum_se(&mut env, cfg.fractional_exponent)?;
    let mut runner = DoubleLayerRunner::new(cfg.runner_config(), env, cfg.seed)?;

    let mut rows = Vec::new();
    let mut series = Vec::with_capacity(cfg.episodes);
    let mut evaluations = Vec::new();
    let mut episode_seconds = Vec::with_capacity(cfg.episodes);
    let mut all_logs = Vec::with_capacity(cfg.episodes);
    for ep in 0..cfg.episodes {
        let t0 = Instant::now();
        let logs = runner.train_episode()?;
        let m = episode_mean(&logs);
        series.push(m);
        rows.extend(rows_for(ep, &logs));
        all_logs.push(logs);
        if (ep + 1) % cfg.eval_every == 0 || ep + 1 == cfg.episodes {
            evaluations.push(evaluate_policy(&mut runner, ep, &placements)?);
        }
        episode_seconds.push(t0.elapsed().as_secs_f64());
        progress(ep, m);
    }

    let convergence_episode = detect_convergence(&series, cfg.n_conv, cfg.delta_conv);
    if let Some(c) = convergence_episode {
        for r in rows.iter_mut().filter(|r| r.episode >= c) {
            r.converged = true;
        }
    }
    let last = evaluations
        .last()
        .cloned()
        .ok_or_else(|| Error::Numerical("run produced no evaluation".into()))?;
    let summary = RunSummary {
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        variant: cfg.variant.as_str().into(),
        architecture: cfg.architecture.as_str().into(),
        scenario: cfg.scenario.as_str().into(),
        episodes: cfg.episodes,
        steps: cfg.steps,
        convergence_episode,
        episode_sum_se: series,
        final_sum_se: last.origin_sum_se,
        final_eval_mean: last.mean,
        final_eval_std: last.std,
        throughput_mbps: last.origin_sum_se * cfg.bandwidth_mhz,
        evaluations,
        fractional_sum_se: fractional,
    };
    Ok(RunArtifacts {
        rows,
        summary,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            episode_seconds,
        },
        learners: runner.learners(),
        logs: all_logs,
    })
}

/// Evaluate restored learners without training.
pub fn evaluate_checkpoint(cfg: &ExperimentConfig, learners: Vec<Learner>) -> Result<EvalPoint> {
    cfg.validate()?;
    let env = CellFreeEnv::new(cfg.env_config(), cfg.seed)?;
    let placements = evaluation_placements(cfg, &env);
    let mut runner = DoubleLayerRunner::new(cfg.runner_config(), env, cfg.seed)?;
    runner.restore(learners)?;
    evaluate_policy(&mut runner, cfg.episodes.saturating_sub(1), &placements)
}

pub fn metrics_csv(rows: &[MetricRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Write `metrics.csv`, `summary.json` and `timing.json` into `dir`.
pub fn write_artifacts(art: &RunArtifacts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.csv"), metrics_csv(&art.rows)?)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&art.summary)?)?;
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&art.timing)?)?;
    Ok(())
}

/// Channel and SE snapshot at the UE starting points with full power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config_hash: String,
    pub seed: u64,
    pub wavelength: f64,
    pub bs_positions: Vec<Point3>,
    pub ue_positions: Vec<Point3>,
    pub lattice_points_bs: usize,
    pub lattice_points_ue: usize,
    pub betas: Vec<f64>,
    pub closed_form_se: Vec<f64>,
    pub closed_form_sum: f64,
    pub monte_carlo_se: Vec<f64>,
    pub monte_carlo_sum: f64,
    pub monte_carlo_draws: usize,
    pub throughput_mbps: f64,
}

pub fn simulate(cfg: &ExperimentConfig, draws: usize) -> Result<SimulationReport> {
    cfg.validate()?;
    if draws == 0 {
        return Err(Error::config("draws", "must be at least 1"));
    }
    let mut env = CellFreeEnv::new(cfg.env_config(), cfg.seed)?;
    env.reset_episode();
    let actions = vec![AgentAction::power_only(cfg.p_max()); cfg.n_ue];
    let alloc = env.uniform_allocations(&actions)?;
    let closed = env.evaluate(&alloc)?;
    let noise = cfg.noise_power();
    let betas = env.observe_layer1();
    let grid = env.stats_grid()?;
    let (lb, lu) = (grid[0][0].u_r.ncols(), grid[0][0].u_s.ncols());
    let mc = se_monte_carlo_parallel(grid, &alloc, noise, Combiner::Mr, draws, cfg.seed, 256)?;
    Ok(SimulationReport {
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        wavelength: cfg.wavelength(),
        bs_positions: env.world().bs_positions.clone(),
        ue_positions: env.world().ue_positions.clone(),
        lattice_points_bs: lb,
        lattice_points_ue: lu,
        betas,
        throughput_mbps: closed.sum * cfg.bandwidth_mhz,
        closed_form_sum: closed.sum,
        closed_form_se: closed.per_ue,
        monte_carlo_sum: mc.sum,
        monte_carlo_se: mc.per_ue,
        monte_carlo_draws: draws,
    })
}

/// Configuration axis varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// UE antennas per row (square UE surfaces).
    NsPerRow,
    /// BS antennas per row (square BS surfaces).
    NrPerRow,
    UeSpacing,
    BsSpacing,
    NUe,
    NBs,
    Seed,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::NsPerRow => "ns-per-row",
            SweepAxis::NrPerRow => "nr-per-row",
            SweepAxis::UeSpacing => "ue-spacing",
            SweepAxis::BsSpacing => "bs-spacing",
            SweepAxis::NUe => "n-ue",
            SweepAxis::NBs => "n-bs",
            SweepAxis::Seed => "seed",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(
                    self.as_str(),
                    format!("expected a positive integer, got {value}"),
                ))
            }
        };
        let mut c = base.clone();
        match self {
            SweepAxis::NsPerRow => {
                c.ue_rows = count(value)?;
                c.ue_cols = c.ue_rows;
            }
            SweepAxis::NrPerRow => {
                c.bs_rows = count(value)?;
                c.bs_cols = c.bs_rows;
            }
            SweepAxis::UeSpacing => c.ue_spacing = value,
            SweepAxis::BsSpacing => c.bs_spacing = value,
            SweepAxis::NUe => c.n_ue = count(value)?,
            SweepAxis::NBs => c.n_bs = count(value)?,
            SweepAxis::Seed => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::config(
                        "seed",
                        format!("expected a non-negative integer, got {value}"),
                    ));
                }
                c.seed = value as u64;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::NsPerRow,
            SweepAxis::NrPerRow,
            SweepAxis::UeSpacing,
            SweepAxis::BsSpacing,
            SweepAxis::NUe,
            SweepAxis::NBs,
            SweepAxis::Seed,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| Error::config("axis", format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    pub config_hash: String,
    pub final_sum_se: f64,
    pub final_eval_mean: f64,
    pub final_eval_std: f64,
    pub fractional_sum_se: f64,
    pub convergence_episode: Option<usize>,
}

/// One experiment per axis value, run in parallel and returned in input order.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    let configs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(c, &v)| {
            let s = run_experiment(c)?.summary;
            Ok(SweepRow {
                axis: axis.as_str().into(),
                value: v,
                seed: c.seed,
                config_hash: s.config_hash,
                final_sum_se: s.final_sum_se,
                final_eval_mean: s.final_eval_mean,
                final_eval_std: s.final_eval_std,
                fractional_sum_se: s.fractional_sum_se,
                convergence_episode: s.convergence_episode,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
