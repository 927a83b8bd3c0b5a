#![allow(dead_code)]

use cfxl::linalg::RMat;
use cfxl::marl::Mlp;
use rand::Rng;

/// `Σ upstream ⊙ net(x)`.
pub fn objective(net: &Mlp, x: &RMat, upstream: &RMat) -> f64 {
    net.forward(x).unwrap().component_mul(upstream).sum()
}

fn kink_between(a: &Mlp, b: &Mlp, x: &RMat) -> bool {
    let pa = a.forward_cached(x).unwrap();
    let pb = b.forward_cached(x).unwrap();
    let hidden = pa.pre_activations().len() - 1;
    pa.pre_activations()[..hidden]
        .iter()
        .zip(&pb.pre_activations()[..hidden])
        .any(|(u, v)| u.iter().zip(v.iter()).any(|(p, q)| (*p >= 0.0) != (*q >= 0.0)))
}

/// Relative errors between backprop and a five-point finite-difference
/// stencil on `probes` random parameters. Probes whose stencil crosses a
/// leaky-ReLU kink are redrawn.
pub fn gradient_probe_errors<R: Rng>(net: &Mlp, x: &RMat, upstream: &RMat, probes: usize, rng: &mut R) -> Vec<f64> {
    let h = 1e-4;
    let cache = net.forward_cached(x).unwrap();
    let (grads, _) = net.backward(&cache, upstream).unwrap();
    let analytic = grads.to_vec();
    let base = net.params();
    let mut errors = Vec::with_capacity(probes);
    let shifted = |i: usize, offset: f64| {
        let mut p = base.clone();
        p[i] = base[i] + offset;
        let mut m = net.clone();
        m.set_params(&p).unwrap();
        m
    };
    while errors.len() < probes {
        let i = rng.random_range(0..base.len());
        let nets: Vec<Mlp> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| shifted(i, k * h)).collect();
        if kink_between(&nets[0], &nets[3], x) {
            continue;
        }
        let f: Vec<f64> = nets.iter().map(|m| objective(m, x, upstream)).collect();
        let numeric = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
        let a = analytic[i];
        errors.push((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
    }
    errors
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> RMat {
    RMat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}
