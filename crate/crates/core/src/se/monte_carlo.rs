use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_dims, mr_combiner, PowerAllocation, SeReport};
use crate::channel::{sample_channel, ChannelStats};
use crate::linalg::{hermitian_part, log2_det_sinr, CMat};
use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    #[default]
    Mr,
}

impl Combiner {
    fn combine(self, g: &CMat) -> CMat {
        match self {
            Combiner::Mr => mr_combiner(g),
        }
    }
}

impl FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mr" => Ok(Combiner::Mr),
            other => Err(Error::InvalidArgument(format!("unknown combiner `{other}`"))),
        }
    }
}

/// One channel realisation for every BS-UE pair, indexed `[bs][ue]`.
pub fn sample_grid<R: Rng + ?Sized>(grid: &[Vec<ChannelStats>], rng: &mut R) -> Vec<Vec<CMat>> {
    grid.iter()
        .map(|row| row.iter().map(|st| sample_channel(st, rng)).collect())
        .collect()
}

/// Running sums of the three sample means needed per UE.
#[derive(Clone)]
struct Sums {
    signal: Vec<CMat>,
    interference: Vec<CMat>,
    gram: Vec<CMat>,
    draws: usize,
}

impl Sums {
    fn new(k: usize, ns: usize) -> Self {
        Sums {
            signal: vec![CMat::zeros(ns, ns); k],
            interference: vec![CMat::zeros(ns, ns); k],
            gram: vec![CMat::zeros(ns, ns); k],
            draws: 0,
        }
    }

    fn add_draw(&mut self, g: &[Vec<CMat>], pbar: &[CMat], combiner: Combiner) {
        let k_count = pbar.len();
        let ns = pbar[0].nrows();
        let v: Vec<Vec<CMat>> = g
            .iter()
            .map(|row| row.iter().map(|x| combiner.combine(x)).collect())
            .collect();
        for k in 0..k_count {
            for l in 0..k_count {
                let mut a = CMat::zeros(ns, ns);
                for m in 0..g.len() {
                    a += v[m][k].adjoint() * &g[m][l];
                }
                if l == k {
                    self.signal[k] += &a;
                }
                self.interference[k] += &a * &pbar[l] * a.adjoint();
            }
            for m in 0..g.len() {
                self.gram[k] += v[m][k].adjoint() * &v[m][k];
            }
        }
        self.draws += 1;
    }

    fn merge(mut self, other: &Sums) -> Sums {
        for k in 0..self.signal.len() {
            self.signal[k] += &other.signal[k];
            self.interference[k] += &other.interference[k];
            self.gram[k] += &other.gram[k];
        }
        self.draws += other.draws;
        self
    }

    fn finish(&self, powers: &[PowerAllocation], noise_power: f64) -> Result<SeReport> {
        if self.draws == 0 {
            return Err(Error::InvalidArgument("Monte-Carlo SE needs at least one draw".into()));
        }
        let n = self.draws as f64;
        let per_ue = (0..self.signal.len())
            .map(|k| {
                let e = self.signal[k].unscale(n) * powers[k].matrix();
                let psi = self.interference[k].unscale(n) - &e * e.adjoint() + self.gram[k].scale(noise_power / n);
                log2_det_sinr(&e, &hermitian_part(&psi)).map(|se| se.max(0.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SeReport::from_per_ue(per_ue))
    }
}

fn check(grid: &[Vec<ChannelStats>], powers: &[PowerAllocation], n_draws: usize) -> Result<(usize, usize)> {
    let (_, k, _, ns) = grid_dims(grid, powers)?;
    if n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
    }
    Ok((k, ns))
}

/// SE estimated from precomputed channel draws, each indexed `[bs][ue]`.
pub fn se_from_draws(draws: &[Vec<Vec<CMat>>], powers: &[PowerAllocation], noise_power: f64) -> Result<SeReport> {
    let first = draws
        .first()
        .ok_or_else(|| Error::InvalidArgument("no channel draws".into()))?;
    let ns = first
        .first()
        .and_then(|row| row.first())
        .map(|g| g.ncols())
        .ok_or_else(|| Error::Dimension("empty channel draw".into()))?;
    if powers.len() != first[0].len() {
        return Err(Error::Dimension(format!(
            "{} power allocations for {} UEs",
            powers.len(),
            first[0].len()
        )));
    }
    let pbar: Vec<CMat> = powers.iter().map(|p| p.gram()).collect();
    let mut sums = Sums::new(powers.len(), ns);
    for g in draws {
        sums.add_draw(g, &pbar, Combiner::Mr);
    }
    sums.finish(powers, noise_power)
}

/// Monte-Carlo SE, drawing `n_draws` channel realisations from `rng`.
pub fn se_monte_carlo<R: Rng + ?Sized>(
    grid: &[Vec<ChannelStats>],
    powers: &[PowerAllocation],
    noise_power: f64,
    combiner: Combiner,
    n_draws: usize,
    rng: &mut R,
) -> Result<SeReport> {
    let (k, ns) = check(grid, powers, n_draws)?;
    let pbar: Vec<CMat> = powers.iter().map(|p| p.gram()).collect();
    let mut sums = Sums::new(k, ns);
    for _ in 0..n_draws {
        let g = sample_grid(grid, rng);
        sums.add_draw(&g, &pbar, combiner);
    }
    sums.finish(powers, noise_power)
}

fn chunk_sums(
    grid: &[Vec<ChannelStats>],
    pbar: &[CMat],
    ns: usize,
    combiner: Combiner,
    master_seed: u64,
    chunk: usize,
    len: usize,
) -> Sums {
    let mut rng = stream(master_seed, Stream::MonteCarlo(chunk as u64));
    let mut sums = Sums::new(pbar.len(), ns);
    for _ in 0..len {
        let g = sample_grid(grid, &mut rng);
        sums.add_draw(&g, pbar, combiner);
    }
    sums
}

fn chunk_plan(n_draws: usize, chunk_size: usize) -> Vec<(usize, usize)> {
    let chunk_size = chunk_size.max(1);
    (0..n_draws.div_ceil(chunk_size))
        .map(|c| (c, chunk_size.min(n_draws - c * chunk_size)))
        .collect()
}

/// Monte-Carlo SE split into chunks of `chunk_size` draws, chunk `c` seeded
/// from its own stream of `master_seed`. Evaluated serially.
pub fn se_monte_carlo_chunked(
    grid: &[Vec<ChannelStats>],
    powers: &[PowerAllocation],
    noise_power: f64,
    combiner: Combiner,
    n_draws: usize,
    master_seed: u64,
    chunk_size: usize,
) -> Result<SeReport> {
    let (k, ns) = check(grid, powers, n_draws)?;
    let pbar: Vec<CMat> = powers.iter().map(|p| p.gram()).collect();
    let total = chunk_plan(n_draws, chunk_size)
        .into_iter()
        .map(|(c, len)| chunk_sums(grid, &pbar, ns, combiner, master_seed, c, len))
        .fold(Sums::new(k, ns), |acc, s| acc.merge(&s));
    total.finish(powers, noise_power)
}

/// Same schedule as [`se_monte_carlo_chunked`], with chunks evaluated on the
/// rayon pool. Partial sums are merged in chunk order, so the result is
/// bit-identical to the serial version.
pub fn se_monte_carlo_parallel(
    grid: &[Vec<ChannelStats>],
    powers: &[PowerAllocation],
    noise_power: f64,
    combiner: Combiner,
    n_draws: usize,
    master_seed: u64,
    chunk_size: usize,
) -> Result<SeReport> {
    let (k, ns) = check(grid, powers, n_draws)?;
    let pbar: Vec<CMat> = powers.iter().map(|p| p.gram()).collect();
    let partial: Vec<Sums> = chunk_plan(n_draws, chunk_size)
        .into_par_iter()
        .map(|(c, len)| chunk_sums(grid, &pbar, ns, combiner, master_seed, c, len))
        .collect();
    let total = partial.iter().fold(Sums::new(k, ns), |acc, s| acc.merge(s));
    total.finish(powers, noise_power)
}
