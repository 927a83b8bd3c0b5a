use crate::{Error, Result};

/// Fractional power control: `p_k = p_max · β_k^{-υ} / max_j β_j^{-υ}`.
/// The weakest UE transmits at full power.
pub fn fractional_baseline(betas: &[f64], exponent: f64, p_max: f64) -> Result<Vec<f64>> {
    if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "large-scale fading must be positive, got {betas:?}"
        )));
    }
    let w: Vec<f64> = betas.iter().map(|b| b.powf(-exponent)).collect();
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(w.iter().map(|x| p_max * (x / top)).collect())
}

/// Earliest index `t` such that every value in `series[t..t + n_conv]` lies
/// within `±delta` (relative) of the last value of the series.
pub fn detect_convergence(series: &[f64], n_conv: usize, delta: f64) -> Option<usize> {
    if n_conv == 0 || series.len() < n_conv {
        return None;
    }
    let last = *series.last()?;
    let tol = delta * last.abs();
    let ok: Vec<bool> = series.iter().map(|v| (v - last).abs() <= tol).collect();
    let mut run = 0;
    for (i, &inside) in ok.iter().enumerate() {
        run = if inside { run + 1 } else { 0 };
        if run == n_conv {
            return Some(i + 1 - n_conv);
        }
    }
    None
}
