use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Loss-proportional priorities. All-zero losses give uniform priorities.
pub fn priority_simple(losses: &[f64]) -> Vec<f64> {
    let total: f64 = losses.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / losses.len() as f64; losses.len()];
    }
    losses.iter().map(|l| l / total).collect()
}

/// 1-based positions in ascending order of `keys`, ties by index.
fn ascending_rank(keys: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    let mut rank = vec![0.0; keys.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = (pos + 1) as f64;
    }
    rank
}

/// Rank-based priorities. A record scores its loss rank (higher loss, higher
/// score) plus its reversed extraction-count rank (fewer extractions, higher
/// score); scores are raised to `mu`, normalised and offset by `nu`.
pub fn priority_ranked(losses: &[f64], counts: &[u64], mu: f64, nu: f64) -> Result<Vec<f64>> {
    if losses.len() != counts.len() {
        return Err(Error::Dimension(format!(
            "{} losses but {} counts",
            losses.len(),
            counts.len()
        )));
    }
    let k = losses.len() as f64;
    let loss_rank = ascending_rank(losses);
    let count_keys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let count_rank = ascending_rank(&count_keys);
    let scores: Vec<f64> = loss_rank
        .iter()
        .zip(&count_rank)
        .map(|(l, c)| (l + (k + 1.0 - c)).powf(mu))
        .collect();
    let total: f64 = scores.iter().sum();
    Ok(scores.iter().map(|s| s / total + nu).collect())
}

/// Sampling bookkeeping of one record for one learner track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackMeta {
    pub loss: f64,
    pub n: u64,
    pub pr: f64,
}

/// Joint transition of all agents plus per-track sampling metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub tracks: Vec<TrackMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    records: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Append, evicting the oldest record when full.
    pub fn push(&mut self, e: Experience) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(e);
    }

    pub fn get(&self, i: usize) -> &Experience {
        &self.records[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Experience {
        &mut self.records[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.records.iter()
    }

    /// Recompute the rank-based priority of every record on `track`.
    pub fn refresh_priorities(&mut self, track: usize, mu: f64, nu: f64) -> Result<()> {
        let losses: Vec<f64> = self.records.iter().map(|r| r.tracks[track].loss).collect();
        let counts: Vec<u64> = self.records.iter().map(|r| r.tracks[track].n).collect();
        let pr = priority_ranked(&losses, &counts, mu, nu)?;
        for (r, p) in self.records.iter_mut().zip(pr) {
            r.tracks[track].pr = p;
        }
        Ok(())
    }
}

/// Draw up to `size` distinct records with probability proportional to their
/// `track` priority, and count the extraction on each. Returns the indices in
/// draw order; when the buffer fits, every index is returned in order.
pub fn fill_extraction_pool<R: Rng + ?Sized>(
    buffer: &mut ReplayBuffer,
    track: usize,
    size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if buffer.is_empty() {
        return Err(Error::InvalidArgument("cannot fill a pool from an empty buffer".into()));
    }
    let pool: Vec<usize> = if buffer.len() <= size {
        (0..buffer.len()).collect()
    } else {
        let weights: Vec<f64> = buffer.iter().map(|r| r.tracks[track].pr).collect();
        index::sample_weighted(rng, buffer.len(), |i| weights[i], size)
            .map_err(|e| Error::Numerical(format!("priority sampling failed: {e}")))?
            .into_vec()
    };
    for &i in &pool {
        buffer.get_mut(i).tracks[track].n += 1;
    }
    Ok(pool)
}

/// `count` distinct entries of `from`, uniformly.
pub fn uniform_subset<R: Rng + ?Sized>(from: &[usize], count: usize, rng: &mut R) -> Vec<usize> {
    if from.len() <= count {
        return from.to_vec();
    }
    index::sample(rng, from.len(), count)
        .into_iter()
        .map(|i| from[i])
        .collect()
}
