use std::f64::consts::PI;

use approx::assert_relative_eq;
use cfxl::env::*;
use cfxl::harness::ExperimentConfig;
use cfxl::rng::{stream, Stream};

fn env_cfg(scenario: Scenario) -> EnvConfig {
    let mut c = ExperimentConfig::default();
    c.scenario = scenario;
    c.env_config()
}

fn full_power(n: usize, step: f64, angle: f64) -> Vec<AgentAction> {
    vec![
        AgentAction {
            power: 0.2,
            step,
            angle
        };
        n
    ]
}

#[test]
fn spaced_placement_of_nine_stations() {
    let mut c = ExperimentConfig::default();
    c.n_bs = 9;
    let env = CellFreeEnv::new(c.env_config(), 4).unwrap();
    let bs = &env.world().bs_positions;
    assert_eq!(bs.len(), 9);
    let t = env.torus();
    for i in 0..9 {
        assert_eq!(bs[i][2], c.bs_height_m);
        for j in 0..i {
            assert!(t.horizontal_distance(&bs[i], &bs[j]) >= 200.0);
        }
    }
}

#[test]
fn impossible_placement_is_reported() {
    let mut cfg = env_cfg(Scenario::Static);
    cfg.n_bs = 50;
    cfg.min_bs_spacing = 400.0;
    cfg.max_placement_tries = 500;
    assert!(matches!(CellFreeEnv::new(cfg, 1), Err(cfxl::Error::Placement { .. })));
}

#[test]
fn construction_is_deterministic() {
    let a = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 9).unwrap();
    let b = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 9).unwrap();
    let c = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 10).unwrap();
    assert_eq!(a.world(), b.world());
    assert_ne!(a.world(), c.world());
}

#[test]
fn movement_example() {
    let mut env = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 1).unwrap();
    env.set_ue_positions(vec![[100.0, 100.0, 1.5], [500.0, 995.0, 1.5]])
        .unwrap();
    let out = env.step(&full_power(2, 10.0, PI / 2.0)).unwrap();
    assert_eq!(out.moved, vec![10.0, 10.0]);
    let p = &env.world().ue_positions;
    assert_relative_eq!(p[0][0], 100.0, epsilon = 1e-12);
    assert_relative_eq!(p[0][1], 110.0, epsilon = 1e-12);
    // wraps across the upper edge
    assert_relative_eq!(p[1][1], 5.0, epsilon = 1e-9);
    assert_eq!(p[0][2], 1.5);
    assert_eq!(env.world().time, 1);
}

#[test]
fn zero_step_matches_static() {
    let mut dynamic = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 2).unwrap();
    let mut fixed = CellFreeEnv::new(env_cfg(Scenario::Static), 2).unwrap();
    for _ in 0..3 {
        let a = dynamic.step(&full_power(2, 0.0, 1.0)).unwrap();
        let b = fixed.step(&full_power(2, 7.0, 1.0)).unwrap();
        assert_eq!(a.rewards, b.rewards);
        assert_eq!(dynamic.world().ue_positions, fixed.world().ue_positions);
    }
    assert_eq!(fixed.world().ue_positions, fixed.origins());
}

#[test]
fn reward_equals_closed_form_report() {
    let mut env = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 3).unwrap();
    let actions = vec![
        AgentAction {
            power: 0.2,
            step: 20.0,
            angle: 0.3,
        },
        AgentAction {
            power: 0.05,
            step: 5.0,
            angle: 2.0,
        },
    ];
    let alloc = env.uniform_allocations(&actions).unwrap();
    let report = env.evaluate(&alloc).unwrap();
    let out = env.step(&actions).unwrap();
    assert_eq!(out.rewards, report.per_ue);
    assert_eq!(out.reward_sum, report.sum);
    assert_eq!(out.reward_sum, out.rewards.iter().sum::<f64>());
    for p in &out.allocations {
        assert!(p.trace() <= p.budget && p.budget <= 0.2);
    }
}

#[test]
fn predictive_limit_examples() {
    let mdp = MdpTuple {
        gamma: 0.99,
        r_g: 1.0,
        r_b: 0.1,
        alpha: 0.2,
        beta_acc: 2.0,
    };
    assert_eq!(predictive_limit(1.5, 10.0, &mdp), 2.0);
    assert_eq!(predictive_limit(1.0, 10.0, &mdp), 2.0);
    assert_eq!(predictive_limit(0.5, 10.0, &mdp), 10.0);
    assert_eq!(predictive_limit(0.1, 10.0, &mdp), 20.0);
    assert_eq!(predictive_limit(0.0, 10.0, &mdp), 20.0);
    assert!(MdpTuple { beta_acc: 1.0, ..mdp }.validate().is_err());
    assert!(MdpTuple { r_b: 2.0, ..mdp }.validate().is_err());
}

#[test]
fn project_power_examples() {
    let p = project_power(&[0.1, 0.1], 0.2).unwrap();
    assert_eq!(p.amplitudes, vec![0.1, 0.1]);
    let p = project_power(&[3.0, 4.0], 1.0).unwrap();
    assert_relative_eq!(p.amplitudes[0], 0.6, epsilon = 1e-15);
    assert_relative_eq!(p.amplitudes[1], 0.8, epsilon = 1e-15);
    assert!(p.trace() <= 1.0);
    assert!(project_power(&[-1.0], 1.0).is_err());
    assert!(project_power(&[f64::NAN], 1.0).is_err());
}

#[test]
fn unreachable_thresholds_reduce_to_dynamic() {
    let mut pm = env_cfg(Scenario::PmDynamic);
    pm.mdp.r_g = 1e9;
    pm.mdp.r_b = -1.0;
    let mut a = CellFreeEnv::new(pm, 5).unwrap();
    let mut b = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 5).unwrap();
    let mut rng = stream(5, Stream::Exploration(0));
    for _ in 0..5 {
        use rand::Rng;
        let acts: Vec<AgentAction> = (0..2)
            .map(|_| AgentAction {
                power: rng.random::<f64>() * 0.2,
                step: rng.random::<f64>() * 25.0,
                angle: rng.random::<f64>() * 2.0 * PI,
            })
            .collect();
        let x = a.step(&acts).unwrap();
        let y = b.step(&acts).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.world(), b.world());
    }
}

#[test]
fn pm_dynamic_scales_steps_by_reward() {
    let mut cfg = env_cfg(Scenario::PmDynamic);
    cfg.mdp.r_g = -2.0;
    cfg.mdp.r_b = -3.0;
    let mut env = CellFreeEnv::new(cfg.clone(), 6).unwrap();
    let out = env.step(&full_power(2, 10.0, 0.0)).unwrap();
    assert_eq!(out.moved, vec![cfg.mdp.alpha * 10.0; 2]);

    cfg.mdp.r_g = 1e9;
    cfg.mdp.r_b = 1e8;
    let mut env = CellFreeEnv::new(cfg.clone(), 6).unwrap();
    let out = env.step(&full_power(2, 10.0, 0.0)).unwrap();
    assert_eq!(out.moved, vec![cfg.mdp.beta_acc * 10.0; 2]);
}

#[test]
fn heights_are_preserved_and_static_never_moves() {
    let mut env = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 7).unwrap();
    let mut still = CellFreeEnv::new(env_cfg(Scenario::Static), 7).unwrap();
    for t in 0..10 {
        env.step(&full_power(2, 25.0, t as f64)).unwrap();
        still.step(&full_power(2, 25.0, t as f64)).unwrap();
        for p in &env.world().ue_positions {
            assert_eq!(p[2], 1.5);
            assert!((0.0..1000.0).contains(&p[0]) && (0.0..1000.0).contains(&p[1]));
        }
        assert_eq!(still.world().ue_positions, still.origins());
    }
}

#[test]
fn nan_action_is_rejected() {
    let mut env = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 8).unwrap();
    let mut acts = full_power(2, 1.0, 0.0);
    acts[1].power = f64::NAN;
    assert!(env.step(&acts).is_err());
    assert!(env.step(&full_power(3, 1.0, 0.0)).is_err());
}

#[test]
fn reset_returns_to_origins() {
    let mut env = CellFreeEnv::new(env_cfg(Scenario::Dynamic), 9).unwrap();
    let first = env.reset_episode();
    env.step(&full_power(2, 25.0, 1.0)).unwrap();
    assert_ne!(env.world().ue_positions, env.origins());
    let again = env.reset_episode();
    assert_eq!(first, again);
    assert_eq!(env.world().ue_positions, env.origins());
    assert_eq!(env.world().time, 0);
}

#[test]
fn torus_metric_examples() {
    let t = Torus { side: 1000.0 };
    assert_eq!(t.horizontal_distance(&[10.0, 0.0, 0.0], &[990.0, 0.0, 0.0]), 20.0);
    assert_eq!(t.distance(&[0.0, 0.0, 0.0], &[0.0, 0.0, 8.5]), 8.5);
    assert_eq!(t.wrap([-1.0, 1001.0, 3.0]), [999.0, 1.0, 3.0]);
}

#[test]
fn action_decoding() {
    let a = decode_action(&[0.5, 0.2, 0.25], Scenario::Dynamic, 0.2, 25.0);
    assert_eq!(a.power, 0.1);
    assert_eq!(a.step, 5.0);
    assert_relative_eq!(a.angle, PI / 2.0);
    let b = decode_action(&[2.0, -1.0, 1.0], Scenario::Dynamic, 0.2, 25.0);
    assert_eq!((b.power, b.step, b.angle), (0.2, 0.0, 0.0));
    let c = decode_action(&[0.5], Scenario::Static, 0.2, 25.0);
    assert_eq!(c, AgentAction::power_only(0.1));
    assert_eq!(action_dim(Scenario::Static), 1);
    assert_eq!(action_dim(Scenario::PmDynamic), 3);
}

#[test]
fn per_antenna_observation_sums_to_matrix_total() {
    let mut env = CellFreeEnv::new(env_cfg(Scenario::Static), 10).unwrap();
    let obs = env.observe_antennas().unwrap();
    let grid = env.stats_grid().unwrap();
    let total: f64 = grid.iter().flatten().map(|st| st.lsf.sum()).sum();
    assert_relative_eq!(obs.iter().sum::<f64>(), total, max_relative = 1e-12);
    assert_eq!(obs.len(), 2 * 2);
}
