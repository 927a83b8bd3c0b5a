use num_complex::Complex64;

use super::{grid_dims, PowerAllocation, SeReport};
use crate::channel::ChannelStats;
use crate::linalg::{hermitian_part, log2_det_sinr, CMat};
use crate::Result;

/// `E{G^H A G}` for `vec(G) ~ CN(0, C)` with `G` of size `nr x ns`.
pub(crate) fn expect_inner(c: &CMat, a: &CMat, nr: usize, ns: usize) -> CMat {
    let mut out = CMat::zeros(ns, ns);
    for j in 0..ns {
        for i in 0..ns {
            let mut acc = Complex64::new(0.0, 0.0);
            for d in 0..nr {
                for r in 0..nr {
                    acc += a[(r, d)] * c[(j * nr + d, i * nr + r)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `E{G B G^H}` for `vec(G) ~ CN(0, C)` with `G` of size `nr x ns`.
pub(crate) fn expect_outer(c: &CMat, b: &CMat, nr: usize, ns: usize) -> CMat {
    let mut out = CMat::zeros(nr, nr);
    for d in 0..nr {
        for a in 0..nr {
            let mut acc = Complex64::new(0.0, 0.0);
            for cc in 0..ns {
                for bb in 0..ns {
                    acc += b[(bb, cc)] * c[(bb * nr + a, cc * nr + d)];
                }
            }
            out[(a, d)] = acc;
        }
    }
    out
}

struct Moments {
    nr: usize,
    ns: usize,
    cov: Vec<Vec<CMat>>,
    gram: Vec<Vec<CMat>>,
}

impl Moments {
    fn new(grid: &[Vec<ChannelStats>], nr: usize, ns: usize) -> Self {
        let eye = CMat::identity(nr, nr);
        let cov: Vec<Vec<CMat>> = grid
            .iter()
            .map(|row| row.iter().map(|st| st.effective_covariance()).collect())
            .collect();
        let gram = cov
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| hermitian_part(&expect_inner(c, &eye, nr, ns)))
                    .collect()
            })
            .collect();
        Moments { nr, ns, cov, gram }
    }

    fn terms(&self, powers: &[PowerAllocation], noise_power: f64, k: usize) -> (CMat, CMat) {
        let (nr, ns) = (self.nr, self.ns);
        let m_count = self.cov.len();
        let z_sum: CMat = (0..m_count).fold(CMat::zeros(ns, ns), |acc, m| acc + &self.gram[m][k]);
        let e = &z_sum * powers[k].matrix();

        let mut psi = CMat::zeros(ns, ns);
        for (l, p) in powers.iter().enumerate() {
            let pbar = p.gram();
            for m in 0..m_count {
                let cross = expect_outer(&self.cov[m][l], &pbar, nr, ns);
                psi += expect_inner(&self.cov[m][k], &cross, nr, ns);
            }
            if l == k {
                // same-UE pairing term: Z P̄ Z for every (m, m'), including m = m'
                psi += &z_sum * &pbar * &z_sum;
            }
        }
        psi -= &e * e.adjoint();
        psi += z_sum.scale(noise_power);
        (e, hermitian_part(&psi))
    }
}

/// Desired-signal matrix `E_k` and interference-plus-noise matrix `Ψ_k` of
/// UE `k` under MR combining, from the channel statistics alone.
pub fn closed_form_terms(
    grid: &[Vec<ChannelStats>],
    powers: &[PowerAllocation],
    noise_power: f64,
    k: usize,
) -> Result<(CMat, CMat)> {
    let (_, kk, nr, ns) = grid_dims(grid, powers)?;
    if k >= kk {
        return Err(crate::Error::InvalidArgument(format!("UE index {k} out of range")));
    }
    Ok(Moments::new(grid, nr, ns).terms(powers, noise_power, k))
}

/// Closed-form MR spectral efficiency of every UE.
pub fn se_closed_form_mr(grid: &[Vec<ChannelStats>], powers: &[PowerAllocation], noise_power: f64) -> Result<SeReport> {
    let (_, k_count, nr, ns) = grid_dims(grid, powers)?;
    let moments = Moments::new(grid, nr, ns);
    let per_ue = (0..k_count)
        .map(|k| {
            let (e, psi) = moments.terms(powers, noise_power, k);
            log2_det_sinr(&e, &psi).map(|se| se.max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeReport::from_per_ue(per_ue))
}
