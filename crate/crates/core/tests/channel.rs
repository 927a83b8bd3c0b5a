use std::f64::consts::PI;

use approx::assert_relative_eq;
use cfxl::channel::*;
use cfxl::linalg::{complex_normal_matrix, frobenius, hermitian_eigenvalues, hermitian_norm2, CMat, RMat};
use cfxl::rng::{stream, Stream};
use num_complex::Complex64;

const LAMBDA: f64 = 0.01;

#[test]
fn surface_examples() {
    let g = build_surface(1, 1, 0.01, [0.0; 3]).unwrap();
    assert_eq!(g.positions, vec![[0.0, 0.0, 0.0]]);

    let d = LAMBDA / 3.0;
    let g = build_surface(2, 2, d, [0.0; 3]).unwrap();
    assert_eq!(g.n_antennas(), 4);
    assert_relative_eq!(g.len_x(), 2.0 * LAMBDA / 3.0);
    assert_relative_eq!(g.len_y(), 2.0 * LAMBDA / 3.0);
    let side = distance(&g.positions[0], &g.positions[1]);
    assert_relative_eq!(side, d, epsilon = 1e-15);
    assert_relative_eq!(distance(&g.positions[0], &g.positions[2]), d, epsilon = 1e-15);
    assert_relative_eq!(
        distance(&g.positions[0], &g.positions[3]),
        d * 2f64.sqrt(),
        epsilon = 1e-15
    );

    let g = build_surface(3, 1, d, [0.0; 3]).unwrap();
    assert_relative_eq!(g.len_x(), 3.0 * d);
    assert_relative_eq!(g.len_y(), d);
    for w in g.positions.windows(2) {
        assert_relative_eq!(w[1][0] - w[0][0], d, epsilon = 1e-15);
        assert_eq!(w[1][1], w[0][1]);
    }
}

#[test]
fn surface_rejects_degenerate_input() {
    assert!(build_surface(0, 1, 0.01, [0.0; 3]).is_err());
    assert!(build_surface(1, 1, 0.0, [0.0; 3]).is_err());
}

#[test]
fn lattice_examples_and_order() {
    assert_eq!(
        wavenumber_lattice(LAMBDA / 2.0, LAMBDA / 2.0, LAMBDA).unwrap().points,
        vec![(0, 0)]
    );
    assert_eq!(
        wavenumber_lattice(LAMBDA, LAMBDA, LAMBDA).unwrap().points,
        vec![(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]
    );
    let l = wavenumber_lattice(2.0 * LAMBDA, 2.0 * LAMBDA, LAMBDA).unwrap();
    assert_eq!(l.len(), 13);
    let mut sorted = l.points.clone();
    sorted.sort();
    assert_eq!(sorted, l.points);
}

#[test]
fn wave_vector_phase_examples() {
    let g = build_surface(1, 1, LAMBDA / 4.0, [LAMBDA / 4.0, 0.0, 0.0]).unwrap();
    let lattice = WavenumberLattice {
        points: vec![(1, 0)],
        len_x: LAMBDA,
        len_y: LAMBDA,
        wavelength: LAMBDA,
    };
    // deliberately mismatched surface lengths are rejected
    assert!(wave_vector_matrix(&lattice, &g, KzConvention::Consistent).is_err());

    let g = build_surface(4, 4, LAMBDA / 4.0, [0.0; 3]).unwrap();
    let lattice = lattice_for(&g, LAMBDA).unwrap();
    let u = wave_vector_matrix(&lattice, &g, KzConvention::Consistent).unwrap();
    for z in u.iter() {
        assert_relative_eq!(z.norm(), 1.0 / 16.0, epsilon = 1e-15);
    }
    let origin = g.positions.iter().position(|p| p == &[0.0, 0.0, 0.0]);
    if let Some(a) = origin {
        for j in 0..u.ncols() {
            assert_relative_eq!(u[(a, j)].re, 1.0 / 16.0, epsilon = 1e-15);
        }
    }
    let (lx, ly) = (g.len_x(), g.len_y());
    let j = lattice.points.iter().position(|&p| p == (1, 0)).unwrap();
    let a = 1;
    let p = g.positions[a];
    let expected = -(2.0 * PI / lx * p[0]) - 0.0 * ly;
    let kz = ((2.0 * PI / LAMBDA).powi(2) - (2.0 * PI / lx).powi(2)).sqrt();
    let phase = expected - kz * p[2];
    let want = Complex64::from_polar(1.0 / 16.0, phase);
    assert_relative_eq!(u[(a, j)].re, want.re, epsilon = 1e-14);
    assert_relative_eq!(u[(a, j)].im, want.im, epsilon = 1e-14);
}

#[test]
fn variance_profile_examples() {
    let one = wavenumber_lattice(LAMBDA / 2.0, LAMBDA / 2.0, LAMBDA).unwrap();
    assert_eq!(variance_profile(&one, &SpectralModel::Isotropic, 9).unwrap(), vec![3.0]);
    let five = wavenumber_lattice(LAMBDA, LAMBDA, LAMBDA).unwrap();
    for v in variance_profile(&five, &SpectralModel::Isotropic, 1).unwrap() {
        assert_relative_eq!(v, (0.2f64).sqrt(), epsilon = 1e-15);
    }
    let two = WavenumberLattice {
        points: vec![(0, 0), (1, 0)],
        len_x: LAMBDA,
        len_y: LAMBDA / 2.0,
        wavelength: LAMBDA,
    };
    let v = variance_profile(&two, &SpectralModel::Custom(vec![4.0, 1.0]), 1).unwrap();
    assert_relative_eq!(v[0], 0.8f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(v[1], 0.2f64.sqrt(), epsilon = 1e-15);
    assert!(variance_profile(&two, &SpectralModel::Custom(vec![1.0]), 1).is_err());
}

#[test]
fn correlation_examples() {
    let u = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
    let r = correlation_matrix(&u, &u, &[0.5], &[3.0]).unwrap();
    assert_relative_eq!(r[(0, 0)].re, 0.25 * 9.0, epsilon = 1e-15);
    assert_eq!(r[(0, 0)].im, 0.0);

    let gr = build_surface(2, 2, LAMBDA / 3.0, [0.0; 3]).unwrap();
    let gs = build_surface(2, 1, LAMBDA / 3.0, [0.0, 0.0, 10.0]).unwrap();
    let st = ChannelStats::build(&gr, &gs, &ChannelParams::new(LAMBDA)).unwrap();
    let r = correlation_matrix(&st.u_r, &st.u_s, &vec![0.0; st.v_r.len()], &vec![0.0; st.v_s.len()]).unwrap();
    assert_eq!(frobenius(&r), 0.0);
}

fn desk_stats() -> ChannelStats {
    let gr = build_surface(4, 4, LAMBDA / 4.0, [0.0; 3]).unwrap();
    let gs = build_surface(2, 1, LAMBDA / 3.0, [3.0, 4.0, 10.0]).unwrap();
    ChannelStats::build(&gr, &gs, &ChannelParams::new(LAMBDA)).unwrap()
}

#[test]
fn correlation_is_hermitian_psd() {
    let st = desk_stats();
    let r = &*st.corr;
    assert_eq!(frobenius(&(r - r.adjoint())), 0.0);
    let min = hermitian_eigenvalues(r).into_iter().fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-8 * hermitian_norm2(r), "min eigenvalue {min}");
}

#[test]
fn ssf_statistics() {
    let st = desk_stats();
    let mut a = stream(11, Stream::MonteCarlo(0));
    let mut b = stream(11, Stream::MonteCarlo(0));
    assert_eq!(sample_ssf(&st, &mut a), sample_ssf(&st, &mut b));

    let mut silent = st.clone();
    silent.v_s = vec![0.0; silent.v_s.len()];
    assert_eq!(frobenius(&sample_ssf(&silent, &mut a)), 0.0);

    let n = 100_000;
    let (nr, ns) = (st.n_r(), st.n_s());
    let mut sum = CMat::zeros(nr, ns);
    let mut sq = RMat::zeros(nr, ns);
    for _ in 0..n {
        let h = sample_ssf(&st, &mut a);
        sum += &h;
        sq += h.map(|z| z.norm_sqr());
    }
    for i in 0..nr {
        for j in 0..ns {
            let mean = sum[(i, j)] / n as f64;
            let std = (sq[(i, j)] / n as f64).sqrt();
            // each of re/im has std std/sqrt(2)
            assert!(
                mean.re.abs() <= 3.0 * std / (2.0 * n as f64).sqrt() * 1.5,
                "{i},{j}: {mean}"
            );
            assert!(
                mean.im.abs() <= 3.0 * std / (2.0 * n as f64).sqrt() * 1.5,
                "{i},{j}: {mean}"
            );
        }
    }
}

#[test]
fn lsf_examples() {
    let r = build_surface(1, 1, LAMBDA / 4.0, [0.0; 3]).unwrap();
    let s = build_surface(1, 1, LAMBDA / 4.0, [0.0, 0.0, 10.0]).unwrap();
    let b = lsf_matrix(&r, &s, LAMBDA).unwrap();
    assert_relative_eq!(b[(0, 0)], 2f64.sqrt() * LAMBDA / (40.0 * PI), max_relative = 1e-14);
    let s2 = build_surface(1, 1, LAMBDA / 4.0, [0.0, 0.0, 20.0]).unwrap();
    assert_relative_eq!(
        lsf_matrix(&r, &s2, LAMBDA).unwrap()[(0, 0)],
        b[(0, 0)] / 2.0,
        max_relative = 1e-14
    );

    let coplanar = build_surface(1, 1, LAMBDA / 4.0, [1.0, 0.0, 0.0]).unwrap();
    assert!(lsf_matrix(&r, &coplanar, LAMBDA).is_err());
    assert!(lsf_matrix(&r, &r, LAMBDA).is_err());

    // Simpson quadrature of the pattern normalisation
    let n = 2000;
    let h = (PI / 2.0) / n as f64;
    let f = |t: f64| radiation_gain(t.cos()) * t.sin();
    let mut acc = f(0.0) + f(PI / 2.0);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    assert!((acc * h / 3.0 - 1.0).abs() < 1e-6);
}

#[test]
fn fresnel_examples() {
    let r = build_surface(1, 1, 0.01, [0.0; 3]).unwrap();
    let s = build_surface(1, 1, 0.01, [0.0, 0.0, 1.0 / (4.0 * PI)]).unwrap();
    assert_relative_eq!(fresnel_beta(&r, &s, 1.0).unwrap(), 2f64.sqrt(), max_relative = 1e-14);

    // 0.08 m aperture at 100 m
    let gr = build_surface(16, 16, 0.005, [0.0; 3]).unwrap();
    assert_relative_eq!(gr.aperture(), 0.08, epsilon = 1e-15);
    let gs = build_surface(2, 2, 0.003, [30.0, 40.0, 86.6]).unwrap();
    let beta = fresnel_beta(&gr, &gs, LAMBDA).unwrap();
    assert!(beta > 0.0);
    for v in lsf_matrix(&gr, &gs, LAMBDA).unwrap().iter() {
        assert!((v / beta - 1.0).abs() < 0.01);
    }

    let near = build_surface(1, 1, 0.005, [0.0, 0.0, 0.05]).unwrap();
    assert!(matches!(
        fresnel_beta(&gr, &near, LAMBDA),
        Err(cfxl::Error::FresnelInvalid { .. })
    ));
}

#[test]
fn channel_matrix_examples() {
    let mut rng = stream(3, Stream::MonteCarlo(0));
    let h = complex_normal_matrix(&mut rng, 3, 2);
    assert_eq!(channel_matrix(&RMat::from_element(3, 2, 1.0), &h).unwrap(), h);
    assert_eq!(
        frobenius(&channel_matrix(&RMat::from_element(3, 2, 0.7), &CMat::zeros(3, 2)).unwrap()),
        0.0
    );
    assert!(channel_matrix(&RMat::zeros(2, 2), &h).is_err());

    let st = desk_stats().with_lsf_mode(LsfMode::Scalar);
    let mut a = stream(5, Stream::MonteCarlo(1));
    let mut b = stream(5, Stream::MonteCarlo(1));
    let g = sample_channel(&st, &mut a);
    let h = sample_ssf(&st, &mut b);
    assert_eq!(g, h.map(|z| z * st.beta));
}

#[test]
fn spatial_model_is_translation_invariant() {
    let params = ChannelParams::new(LAMBDA);
    let gr = build_surface(2, 2, LAMBDA / 3.0, [0.0; 3]).unwrap();
    let gs = build_surface(2, 1, LAMBDA / 3.0, [5.0, 0.0, 8.5]).unwrap();
    let model = SpatialModel::new(&gr, &gs, &params).unwrap();
    let moved_r = gr.centered_at([100.0, 50.0, 10.0]);
    let moved_s = gs.centered_at([120.0, 70.0, 1.5]);
    let a = model.stats(&moved_r, &moved_s).unwrap();
    let b = ChannelStats::build(&moved_r, &moved_s, &params).unwrap();
    assert_eq!(*a.corr, *b.corr);
    assert_eq!(a.lsf, b.lsf);
    assert_eq!(a.beta, b.beta);
}
