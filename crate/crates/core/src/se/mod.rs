//! Uplink signal model and spectral efficiency with MR combining.
//!
//! Channel statistics are passed as a grid indexed `[bs][ue]`. Two
//! evaluators are provided: a Monte-Carlo estimate of the expectation-based
//! SE and a closed form built from second and fourth Gaussian moments of the
//! channel. [`moments`] holds brute-force oracles for the latter.

mod closed_form;
pub mod moments;
mod monte_carlo;
mod power;
mod uplink;

pub use closed_form::{closed_form_terms, se_closed_form_mr};
pub use monte_carlo::{
    sample_grid, se_from_draws, se_monte_carlo, se_monte_carlo_chunked, se_monte_carlo_parallel, Combiner,
};
pub use power::{PowerAllocation, SeReport, TRACE_SLACK};
pub use uplink::{cpu_estimate, local_estimate, mr_combiner, uplink_receive};

use crate::channel::ChannelStats;
use crate::{Error, Result};

/// Checks the `[bs][ue]` grid and the power list and returns `(M, K, N_r, N_s)`.
pub(crate) fn grid_dims(
    grid: &[Vec<ChannelStats>],
    powers: &[PowerAllocation],
) -> Result<(usize, usize, usize, usize)> {
    let m = grid.len();
    if m == 0 {
        return Err(Error::Dimension("no base stations".into()));
    }
    let k = grid[0].len();
    if k == 0 {
        return Err(Error::Dimension("no UEs".into()));
    }
    if powers.len() != k {
        return Err(Error::Dimension(format!(
            "{} power allocations for {k} UEs",
            powers.len()
        )));
    }
    let nr = grid[0][0].n_r();
    let ns = grid[0][0].n_s();
    for row in grid {
        if row.len() != k {
            return Err(Error::Dimension("ragged channel grid".into()));
        }
        for st in row {
            if st.n_r() != nr || st.n_s() != ns {
                return Err(Error::Dimension("channel grid mixes surface sizes".into()));
            }
        }
    }
    for p in powers {
        if p.len() != ns {
            return Err(Error::Dimension(format!(
                "power allocation over {} antennas, UEs have {ns}",
                p.len()
            )));
        }
    }
    Ok((m, k, nr, ns))
}
