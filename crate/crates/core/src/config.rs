//! Run configuration, read from a TOML file.
//!
//! ```toml
//! mode = "full_solver"
//!
//! [device]
//! f_eff = 0.00909
//! window = "smooth"
//!
//! [sweep]
//! q_min = 2.0
//! q_max = 22.0
//! q_step = 0.1
//! nge_grid = [0.05, 0.1, 0.15, 0.2]
//!
//! [ensemble]
//! n_samples = 300
//! seed = 1
//! sign_model = "pair"
//!
//! [epm]
//! cutoff_sq = 12
//! form_factors = "form_factors.toml"
//! ```
//!
//! Every section and key is optional; missing values take the defaults
//! below. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crystal_basis::{Basis, DEFAULT_CUTOFF_SQ};
use crate::device::DeviceConfig;
use crate::epm::{FormFactors, Pseudopotential};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Name of the splitting method (see `sweep::MethodRegistry`).
    pub mode: String,
    pub device: DeviceConfig,
    pub sweep: GridConfig,
    pub ensemble: EnsembleConfig,
    pub epm: EpmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: "full_solver".into(),
            device: DeviceConfig::default(),
            sweep: GridConfig::default(),
            ensemble: EnsembleConfig::default(),
            epm: EpmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    /// Explicit q values; overrides the range when present.
    pub q_grid: Option<Vec<f64>>,
    pub nge_grid: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            q_min: 2.0,
            q_max: 22.0,
            q_step: 0.1,
            q_grid: None,
            nge_grid: vec![0.05, 0.1, 0.15, 0.2],
        }
    }
}

impl GridConfig {
    /// The q values in use. Range points are computed as `q_min + i·q_step`
    /// and rounded to 12 decimals so that the grid is reproducible.
    pub fn q_values(&self) -> Result<Vec<f64>> {
        if let Some(q) = &self.q_grid {
            return Ok(q.clone());
        }
        if !(self.q_step > 0.0) || !(self.q_max >= self.q_min) {
            return Err(Error::Config(format!(
                "q range [{}, {}] with step {} is empty",
                self.q_min, self.q_max, self.q_step
            )));
        }
        let n = ((self.q_max - self.q_min) / self.q_step + 1e-9).floor() as usize + 1;
        Ok((0..n)
            .map(|i| ((self.q_min + i as f64 * self.q_step) * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Name in `epm::SignModelRegistry`.
    pub sign_model: String,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_samples: 300,
            seed: 1,
            sign_model: "pair".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpmConfig {
    pub cutoff_sq: i32,
    /// Form-factor file; the built-in values when absent.
    pub form_factors: Option<PathBuf>,
}

impl Default for EpmConfig {
    fn default() -> Self {
        Self {
            cutoff_sq: DEFAULT_CUTOFF_SQ,
            form_factors: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        if let (Some(ff), Some(dir)) = (&cfg.epm.form_factors, path.parent()) {
            if ff.is_relative() {
                cfg.epm.form_factors = Some(dir.join(ff));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn form_factors(&self) -> Result<FormFactors> {
        match &self.epm.form_factors {
            Some(path) => FormFactors::load(path),
            None => Ok(FormFactors::default()),
        }
    }

    pub fn pseudopotential(&self) -> Result<Pseudopotential> {
        if self.epm.cutoff_sq < 3 {
            return Err(Error::Config(format!("cutoff_sq = {} leaves no potential", self.epm.cutoff_sq)));
        }
        let basis = Basis::with_lattice_constant(self.epm.cutoff_sq, self.device.lattice_constant);
        Ok(Pseudopotential::new(basis, self.form_factors()?))
    }
}
