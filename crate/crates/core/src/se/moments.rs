//! Brute-force oracles for `E{G_k^H G_l P̄ G_l^H G_k}` with Gaussian channels.
//!
//! Two independent routes are provided: an explicit pairing sum over index
//! quadruples, and plain simulation from a square root of the covariance.
//! Both are restricted to small dimensions.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{complex_normal, hermitian_part, CMat, CVec};
use crate::{Error, Result};

/// Largest `N_r * N_s` accepted by the oracles.
pub const MAX_ORACLE_DIM: usize = 8;

#[derive(Debug, Clone)]
pub struct MomentOracle {
    pub isserlis: CMat,
    pub simulated: CMat,
}

fn check_dims(c_k: &CMat, c_l: Option<&CMat>, pbar: &CMat, nr: usize, ns: usize) -> Result<()> {
    let n = nr * ns;
    if n == 0 || n > MAX_ORACLE_DIM {
        return Err(Error::Dimension(format!(
            "moment oracle limited to N_r*N_s <= {MAX_ORACLE_DIM}, got {n}"
        )));
    }
    let square = |c: &CMat| c.nrows() == n && c.ncols() == n;
    if !square(c_k) || !c_l.map_or(true, square) || pbar.nrows() != ns || pbar.ncols() != ns {
        return Err(Error::Dimension("covariance or power matrix has the wrong size".into()));
    }
    Ok(())
}

/// Pairing (Isserlis) expansion. `c_l = None` means `G_l` is the same
/// channel as `G_k`; otherwise the two are independent with the given
/// covariances. Covariances are of the column-major `vec(G)`.
pub fn isserlis_fourth_moment(c_k: &CMat, c_l: Option<&CMat>, pbar: &CMat, nr: usize, ns: usize) -> Result<CMat> {
    check_dims(c_k, c_l, pbar, nr, ns)?;
    let ix = |row: usize, col: usize| col * nr + row;
    let mut out = CMat::zeros(ns, ns);
    for i in 0..ns {
        for j in 0..ns {
            let mut acc = Complex64::new(0.0, 0.0);
            // summand: conj(Gk[a,i]) Gl[a,b] P̄[b,c] conj(Gl[d,c]) Gk[d,j]
            for a in 0..nr {
                for b in 0..ns {
                    for c in 0..ns {
                        if pbar[(b, c)] == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for d in 0..nr {
                            let pairing = match c_l {
                                None => {
                                    c_k[(ix(a, b), ix(a, i))] * c_k[(ix(d, j), ix(d, c))]
                                        + c_k[(ix(a, b), ix(d, c))] * c_k[(ix(d, j), ix(a, i))]
                                }
                                Some(c_l) => c_l[(ix(a, b), ix(d, c))] * c_k[(ix(d, j), ix(a, i))],
                            };
                            acc += pbar[(b, c)] * pairing;
                        }
                    }
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `S` with `S S^H = C` from the eigendecomposition of the Hermitian part of
/// `C`; negative eigenvalues from rounding are clipped to zero.
pub fn covariance_sqrt(c: &CMat) -> CMat {
    let eig = nalgebra::linalg::SymmetricEigen::new(hermitian_part(c));
    let mut s = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let r = lambda.max(0.0).sqrt();
        s.column_mut(j).scale_mut(r);
    }
    s
}

fn draw<R: Rng + ?Sized>(sqrt: &CMat, nr: usize, ns: usize, rng: &mut R) -> CMat {
    let z = CVec::from_fn(sqrt.ncols(), |_, _| complex_normal(rng));
    let x = sqrt * z;
    CMat::from_column_slice(nr, ns, x.as_slice())
}

/// Sample mean of `G_k^H G_l P̄ G_l^H G_k` over `n_draws` Gaussian draws.
pub fn simulated_fourth_moment<R: Rng + ?Sized>(
    c_k: &CMat,
    c_l: Option<&CMat>,
    pbar: &CMat,
    nr: usize,
    ns: usize,
    n_draws: usize,
    rng: &mut R,
) -> Result<CMat> {
    check_dims(c_k, c_l, pbar, nr, ns)?;
    if n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
    }
    let s_k = covariance_sqrt(c_k);
    let s_l = c_l.map(covariance_sqrt);
    let mut acc = CMat::zeros(ns, ns);
    for _ in 0..n_draws {
        let gk = draw(&s_k, nr, ns, rng);
        let gl = match &s_l {
            None => gk.clone(),
            Some(s) => draw(s, nr, ns, rng),
        };
        let a = gk.adjoint() * &gl;
        acc += &a * pbar * a.adjoint();
    }
    Ok(acc.unscale(n_draws as f64))
}

/// Both oracles side by side.
pub fn gaussian_moment_oracle<R: Rng + ?Sized>(
    c_k: &CMat,
    c_l: Option<&CMat>,
    pbar: &CMat,
    nr: usize,
    ns: usize,
    n_draws: usize,
    rng: &mut R,
) -> Result<MomentOracle> {
    Ok(MomentOracle {
        isserlis: isserlis_fourth_moment(c_k, c_l, pbar, nr, ns)?,
        simulated: simulated_fourth_moment(c_k, c_l, pbar, nr, ns, n_draws, rng)?,
    })
}
