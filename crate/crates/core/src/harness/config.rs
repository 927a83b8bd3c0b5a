use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelParams, KzConvention, LsfMode, SpectralModel};
use crate::dlpc::{Architecture, RunnerConfig};
use crate::env::{EnvConfig, MdpTuple, Scenario};
use crate::marl::{LearnerConfig, Sampling, SoftUpdate, Variant};
use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Flat experiment description. Every key is optional in the TOML file;
/// missing keys take the desk-scale defaults and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_bs: usize,
    pub n_ue: usize,
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub ue_rows: usize,
    pub ue_cols: usize,
    /// BS antenna spacing as a fraction of the wavelength.
    pub bs_spacing: f64,
    /// UE antenna spacing as a fraction of the wavelength.
    pub ue_spacing: f64,
    pub carrier_ghz: f64,
    pub area_m: f64,
    pub min_bs_spacing_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub noise_dbm: f64,
    pub p_max_mw: f64,
    pub bandwidth_mhz: f64,
    pub d_max_m: f64,
    pub max_placement_tries: usize,
    pub kz_convention: KzConvention,
    pub lsf_mode: LsfMode,

    pub variant: Variant,
    pub architecture: Architecture,
    pub scenario: Scenario,
    pub weight_sharing: bool,

    pub gamma: f64,
    pub r_g: f64,
    pub r_b: f64,
    pub alpha: f64,
    pub beta_acc: f64,

    pub lr_actor: f64,
    pub lr_critic: f64,
    pub tau: f64,
    pub soft_update: SoftUpdate,
    pub grad_clip: f64,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub pool_size: usize,
    pub batch_global: usize,
    pub batch_local: usize,
    pub mu: f64,
    pub nu: f64,
    pub noise_start: f64,
    pub noise_end: f64,
    pub noise_decay_steps: u64,
    /// Overrides the variant's use of the local-critic actor term.
    pub local_term: Option<bool>,
    /// Overrides the variant's sampling scheme.
    pub sampling: Option<Sampling>,

    pub episodes: usize,
    pub steps: usize,
    pub eval_every: usize,
    pub eval_draws: usize,
    pub n_conv: usize,
    pub delta_conv: f64,
    pub fractional_exponent: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let l = LearnerConfig::default();
        ExperimentConfig {
            seed: 0,
            n_bs: 2,
            n_ue: 2,
            bs_rows: 2,
            bs_cols: 2,
            ue_rows: 2,
            ue_cols: 1,
            bs_spacing: 1.0 / 3.0,
            ue_spacing: 1.0 / 3.0,
            carrier_ghz: 30.0,
            area_m: 1000.0,
            min_bs_spacing_m: 200.0,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            noise_dbm: -69.0,
            p_max_mw: 200.0,
            bandwidth_mhz: 20.0,
            d_max_m: 25.0,
            max_placement_tries: 10_000,
            kz_convention: KzConvention::default(),
            lsf_mode: LsfMode::default(),
            variant: Variant::default(),
            architecture: Architecture::default(),
            scenario: Scenario::default(),
            weight_sharing: false,
            gamma: l.gamma,
            r_g: 0.1,
            r_b: 0.002,
            alpha: 0.2,
            beta_acc: 2.0,
            lr_actor: l.lr_actor,
            lr_critic: l.lr_critic,
            tau: l.tau,
            soft_update: l.soft_update,
            grad_clip: l.grad_clip,
            hidden: l.hidden,
            buffer_capacity: l.buffer_capacity,
            pool_size: l.pool_size,
            batch_global: l.batch_global,
            batch_local: l.batch_local,
            mu: l.mu,
            nu: l.nu,
            noise_start: l.noise_start,
            noise_end: l.noise_end,
            noise_decay_steps: 4000,
            local_term: None,
            sampling: None,
            episodes: 300,
            steps: 20,
            eval_every: 10,
            eval_draws: 32,
            n_conv: 100,
            delta_conv: 0.01,
            fractional_exponent: 0.5,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

fn nonzero(key: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::config(key, "must be at least 1"))
    }
}

impl ExperimentConfig {
    /// Large-scale preset: 9 BSs with 9x9 surfaces serving 6 UEs with 3x3 surfaces.
    pub fn paper_scale() -> Self {
        ExperimentConfig {
            n_bs: 9,
            n_ue: 6,
            bs_rows: 9,
            bs_cols: 9,
            ue_rows: 3,
            ue_cols: 3,
            d_max_m: 5.0,
            episodes: 1000,
            steps: 100,
            noise_decay_steps: 66_000,
            ..Default::default()
        }
    }

    /// Named presets accepted by the CLI.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::default()),
            "paper" => Ok(Self::paper_scale()),
            _ => Err(Error::config(
                "preset",
                format!("unknown preset `{name}` (desk, paper)"),
            )),
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    pub fn noise_power(&self) -> f64 {
        10f64.powf(self.noise_dbm / 10.0) * 1e-3
    }

    pub fn p_max(&self) -> f64 {
        self.p_max_mw * 1e-3
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_mhz * 1e6
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("n_bs", self.n_bs),
            ("n_ue", self.n_ue),
            ("bs_rows", self.bs_rows),
            ("bs_cols", self.bs_cols),
            ("ue_rows", self.ue_rows),
            ("ue_cols", self.ue_cols),
            ("max_placement_tries", self.max_placement_tries),
            ("buffer_capacity", self.buffer_capacity),
            ("pool_size", self.pool_size),
            ("batch_global", self.batch_global),
            ("batch_local", self.batch_local),
            ("episodes", self.episodes),
            ("steps", self.steps),
            ("eval_every", self.eval_every),
            ("eval_draws", self.eval_draws),
            ("n_conv", self.n_conv),
        ] {
            nonzero(k, v)?;
        }
        for (k, v) in [
            ("bs_spacing", self.bs_spacing),
            ("ue_spacing", self.ue_spacing),
            ("carrier_ghz", self.carrier_ghz),
            ("area_m", self.area_m),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
            ("p_max_mw", self.p_max_mw),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("d_max_m", self.d_max_m),
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("tau", self.tau),
            ("grad_clip", self.grad_clip),
            ("delta_conv", self.delta_conv),
        ] {
            positive(k, v)?;
        }
        for (k, v) in [("bs_spacing", self.bs_spacing), ("ue_spacing", self.ue_spacing)] {
            if v >= 0.5 {
                return Err(Error::config(
                    k,
                    format!("spacing {v} wavelengths violates the sub-half-wavelength assumption (must be < 0.5)"),
                ));
            }
        }
        if !self.noise_dbm.is_finite() {
            return Err(Error::config("noise_dbm", "must be finite"));
        }
        if self.min_bs_spacing_m < 0.0 {
            return Err(Error::config("min_bs_spacing_m", "must be non-negative"));
        }
        if self.bs_height_m == self.ue_height_m {
            return Err(Error::config("ue_height_m", "BS and UE surfaces must not be coplanar"));
        }
        if self.tau > 1.0 {
            return Err(Error::config("tau", "must not exceed 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer widths must be positive"));
        }
        if self.pool_size > self.buffer_capacity {
            return Err(Error::config("pool_size", "must not exceed buffer_capacity"));
        }
        if !(self.noise_start >= 0.0 && self.noise_end >= 0.0) {
            return Err(Error::config("noise_start", "exploration noise must be non-negative"));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::config("mu", "must be non-negative"));
        }
        if !(self.nu >= 0.0) {
            return Err(Error::config("nu", "must be non-negative"));
        }
        if !(self.fractional_exponent >= 0.0) {
            return Err(Error::config("fractional_exponent", "must be non-negative"));
        }
        self.mdp().validate()
    }

    pub fn mdp(&self) -> MdpTuple {
        MdpTuple {
            gamma: self.gamma,
            r_g: self.r_g,
            r_b: self.r_b,
            alpha: self.alpha,
            beta_acc: self.beta_acc,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        let lambda = self.wavelength();
        let mut channel = ChannelParams::new(lambda);
        channel.kz = self.kz_convention;
        channel.spectrum_r = SpectralModel::Isotropic;
        channel.spectrum_s = SpectralModel::Isotropic;
        channel.lsf_mode = self.lsf_mode;
        EnvConfig {
            area: self.area_m,
            n_bs: self.n_bs,
            n_ue: self.n_ue,
            min_bs_spacing: self.min_bs_spacing_m,
            bs_height: self.bs_height_m,
            ue_height: self.ue_height_m,
            bs_shape: (self.bs_cols, self.bs_rows),
            ue_shape: (self.ue_cols, self.ue_rows),
            bs_spacing: self.bs_spacing * lambda,
            ue_spacing: self.ue_spacing * lambda,
            channel,
            noise_power: self.noise_power(),
            p_max: self.p_max(),
            d_max: self.d_max_m,
            mdp: self.mdp(),
            scenario: self.scenario,
            max_placement_tries: self.max_placement_tries,
        }
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            variant: self.variant,
            gamma: self.gamma,
            lr_actor: self.lr_actor,
            lr_critic: self.lr_critic,
            tau: self.tau,
            soft_update: self.soft_update,
            grad_clip: self.grad_clip,
            hidden: self.hidden.clone(),
            buffer_capacity: self.buffer_capacity,
            pool_size: self.pool_size,
            batch_global: self.batch_global,
            batch_local: self.batch_local,
            mu: self.mu,
            nu: self.nu,
            noise_start: self.noise_start,
            noise_end: self.noise_end,
            noise_decay_steps: self.noise_decay_steps,
            local_term: self.local_term,
            sampling: self.sampling,
            reward_scale: None,
            groups: None,
        }
    }

    pub fn runner_config(&self) -> RunnerConfig {
        RunnerConfig {
            architecture: self.architecture,
            layer1: self.learner_config(),
            layer2: self.learner_config(),
            weight_sharing: self.weight_sharing,
            steps: self.steps,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// SHA-256 of the serialized configuration with the seed cleared, so all
    /// seeds of one configuration share a hash.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.seed = 0;
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Read and validate a TOML configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text)
}

/// Write `cfg` as TOML.
pub fn dump_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_toml()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(
            ExperimentConfig::from_toml_str("").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn wide_spacing_rejected_by_key() {
        let e = ExperimentConfig::from_toml_str("bs_spacing = 0.6").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "bs_spacing"), "{e}");
        assert!(e.to_string().contains("half-wavelength"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("bogus = 1"),
            Err(Error::ConfigParse(_))
        ));
    }

    #[test]
    fn toml_round_trip() {
        for cfg in [ExperimentConfig::default(), ExperimentConfig::paper_scale()] {
            assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap(), cfg);
        }
    }

    #[test]
    fn hash_ignores_seed() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 7, ..a.clone() };
        let c = ExperimentConfig { n_ue: 3, ..a.clone() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn derived_units() {
        let c = ExperimentConfig::default();
        assert!((c.wavelength() - 0.01).abs() < 1e-15);
        assert!((c.p_max() - 0.2).abs() < 1e-15);
        assert!((c.noise_power() / 10f64.powf(-9.9) - 1.0).abs() < 1e-12);
    }
}
