use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aircomp::{InnerConfig, NoiseSpec};
use crate::channel::{ChannelSampler, RegionSpec};
use crate::error::{Error, Result};
use crate::pso::PsoParams;
use crate::sca::ScaParams;

/// `10^(dBm/10)` milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pso,
    Fpa,
    Ao,
    Aps,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Pso, Scheme::Fpa, Scheme::Ao, Scheme::Aps];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pso => "pso",
            Scheme::Fpa => "fpa",
            Scheme::Ao => "ao",
            Scheme::Aps => "aps",
        }
    }

    /// Stable label for seed derivation.
    pub(crate) fn stream_id(self) -> u64 {
        match self {
            Scheme::Pso => 1,
            Scheme::Fpa => 2,
            Scheme::Ao => 3,
            Scheme::Aps => 4,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the AO benchmark starts its antenna layout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AoInit {
    #[default]
    Fpa,
    Random,
}

fn desk_pso() -> PsoParams {
    PsoParams {
        n_particles: 50,
        max_iter: 100,
        ..PsoParams::default()
    }
}

/// Experiment description, read from JSON. Missing fields take the desk-scale
/// defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m_antennas: usize,
    pub k_users: usize,
    pub paths: usize,
    pub region: RegionSpec,
    pub noise_dbm: f64,
    pub pathloss_exp: f64,
    pub dist_range: (f64, f64),
    /// Transmit power cap `P_c` swept by `power-sweep`.
    pub power_dbm_sweep: Vec<f64>,
    /// Transmit power cap used by every other experiment.
    pub power_dbm: f64,
    pub k_sweep: Option<Vec<usize>>,
    pub aoa_error_sweep: Option<Vec<f64>>,
    pub schemes: Vec<Scheme>,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub pso: PsoParams,
    pub sca: ScaParams,
    pub inner: InnerConfig,
    pub aps_grid_step: f64,
    pub aps_max_rounds: usize,
    pub ao_init: AoInit,
    pub gain_map_step: f64,
    /// Write measured wall-clock times; otherwise the column is zero so that
    /// repeated runs are byte-identical.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m_antennas: 4,
            k_users: 10,
            paths: 5,
            region: RegionSpec::default(),
            noise_dbm: -80.0,
            pathloss_exp: 3.9,
            dist_range: (250.0, 300.0),
            power_dbm_sweep: vec![0.0, 10.0, 20.0],
            power_dbm: 10.0,
            k_sweep: None,
            aoa_error_sweep: None,
            schemes: Scheme::ALL.to_vec(),
            n_realizations: 10,
            master_seed: 0,
            pso: desk_pso(),
            sca: ScaParams::default(),
            inner: InnerConfig::default(),
            aps_grid_step: 0.25,
            aps_max_rounds: 10,
            ao_init: AoInit::Fpa,
            gain_map_step: 0.05,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| Error::Config(e.to_string());
        if self.m_antennas == 0 || self.k_users == 0 || self.paths == 0 || self.n_realizations == 0 {
            return Err(Error::Config(
                "m_antennas, k_users, paths and n_realizations must be at least 1".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme must be selected".into()));
        }
        if !(self.aps_grid_step > 0.0) || !(self.gain_map_step > 0.0) || self.aps_max_rounds == 0 {
            return Err(Error::Config(
                "grid steps and aps_max_rounds must be positive".into(),
            ));
        }
        if let Some(ks) = &self.k_sweep {
            if ks.contains(&0) {
                return Err(Error::Config("k_sweep entries must be at least 1".into()));
            }
        }
        if let Some(mus) = &self.aoa_error_sweep {
            if mus.iter().any(|mu| !(*mu >= 0.0)) {
                return Err(Error::Config(
                    "aoa_error_sweep entries must be non-negative".into(),
                ));
            }
        }
        self.region.validate().map_err(config)?;
        self.pso.validate().map_err(config)?;
        self.sca.validate().map_err(config)?;
        self.inner.validate().map_err(config)?;
        self.noise().map_err(config)?;
        self.sampler(self.k_users).validate().map_err(config)?;
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(dbm_to_mw(self.noise_dbm))
    }

    pub fn sampler(&self, k_users: usize) -> ChannelSampler {
        ChannelSampler {
            k_users,
            paths_per_user: self.paths,
            pathloss_exp: self.pathloss_exp,
            dist_range: self.dist_range,
        }
    }
}
