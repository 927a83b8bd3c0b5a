use rand::Rng;

use super::PowerAllocation;
use crate::linalg::{complex_normal, CMat, CVec};
use crate::{Error, Result};

/// Received signal at one BS: `Σ_k G_k P_k x_k + n`, `n ~ CN(0, σ² I)`.
pub fn uplink_receive<R: Rng + ?Sized>(
    channels: &[CMat],
    powers: &[PowerAllocation],
    symbols: &[CVec],
    noise_power: f64,
    rng: &mut R,
) -> Result<CVec> {
    if channels.is_empty() || channels.len() != powers.len() || channels.len() != symbols.len() {
        return Err(Error::Dimension(format!(
            "{} channels, {} power allocations, {} symbol vectors",
            channels.len(),
            powers.len(),
            symbols.len()
        )));
    }
    let nr = channels[0].nrows();
    let mut y = CVec::zeros(nr);
    for ((g, p), x) in channels.iter().zip(powers).zip(symbols) {
        if g.nrows() != nr || g.ncols() != p.len() || x.len() != p.len() {
            return Err(Error::Dimension(format!(
                "channel {}x{}, {} amplitudes, {} symbols",
                g.nrows(),
                g.ncols(),
                p.len(),
                x.len()
            )));
        }
        let px = CVec::from_iterator(x.len(), x.iter().zip(&p.amplitudes).map(|(s, a)| s * *a));
        y += g * px;
    }
    if noise_power > 0.0 {
        let s = noise_power.sqrt();
        for v in y.iter_mut() {
            *v += complex_normal(rng) * s;
        }
    }
    Ok(y)
}

/// Maximum-ratio combining uses the channel itself.
pub fn mr_combiner(channel: &CMat) -> CMat {
    channel.clone()
}

/// `V^H y` at one BS.
pub fn local_estimate(combiner: &CMat, y: &CVec) -> Result<CVec> {
    if combiner.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "combiner has {} rows, signal has {}",
            combiner.nrows(),
            y.len()
        )));
    }
    Ok(combiner.adjoint() * y)
}

/// CPU-side average of the per-BS local estimates.
pub fn cpu_estimate(local: &[CVec]) -> Result<CVec> {
    let first = local
        .first()
        .ok_or_else(|| Error::InvalidArgument("no local estimates".into()))?;
    let mut acc = CVec::zeros(first.len());
    for x in local {
        if x.len() != acc.len() {
            return Err(Error::Dimension("local estimates differ in length".into()));
        }
        acc += x;
    }
    Ok(acc.unscale(local.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_normal_matrix;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pass_through_and_silence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = complex_normal_matrix(&mut rng, 3, 2);
        let x = CVec::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)]);
        let eye = PowerAllocation::new(vec![1.0, 1.0], 2.0).unwrap();
        let y = uplink_receive(&[g.clone()], &[eye], &[x.clone()], 0.0, &mut rng).unwrap();
        assert!((y - &g * &x).norm() < 1e-14);
        let y0 = uplink_receive(&[g], &[PowerAllocation::zero(2)], &[x], 0.0, &mut rng).unwrap();
        assert!(y0.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn combiner_and_cpu() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = complex_normal_matrix(&mut rng, 4, 2);
        assert_eq!(mr_combiner(&g), g);
        let a = CVec::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)]);
        assert_eq!(cpu_estimate(&[a.clone()]).unwrap(), a);
        assert!((cpu_estimate(&[a.clone(), a.clone(), a.clone()]).unwrap() - &a).norm() < 1e-15);
        let scaled = cpu_estimate(&[a.scale(3.0), a.scale(-1.0)]).unwrap();
        assert!((scaled - cpu_estimate(&[a.clone(), a.scale(-1.0 / 3.0)]).unwrap().scale(3.0)).norm() < 1e-14);
        assert!(cpu_estimate(&[]).is_err());
    }
}
