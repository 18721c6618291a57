//! Smooth device potential along the growth direction: a tanh barrier with
//! a field tilt, plus the oscillating Ge potential inside the Si well.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{k0, SI_LATTICE_CONSTANT};

/// Longitudinal mass of the ±z valleys, in units of mₑ.
pub const M_LONGITUDINAL: f64 = 0.92;

/// Grid points per shortest oscillation period.
pub const POINTS_PER_PERIOD: f64 = 20.0;

/// Upper bound on the default grid spacing (nm).
pub const MAX_SPACING: f64 = 0.02;

/// How `V_osc` is confined to the well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// No window: the oscillation extends into the barrier.
    None,
    /// Step cut-off at `z = 0`.
    Hard,
    /// Cosine turn-off over `0 < z < w`.
    #[default]
    Smooth,
}

impl Window {
    pub fn weight(self, z: f64, w: f64) -> f64 {
        match self {
            Window::None => 1.0,
            Window::Hard => {
                if z < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Window::Smooth => {
                if z <= 0.0 {
                    1.0
                } else if z < w {
                    0.5 * (1.0 + (PI * z / w).cos())
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Barrier height (eV).
    pub v_b0: f64,
    /// Barrier width (nm).
    pub w: f64,
    /// Effective field F/ε as a potential slope (eV/nm).
    pub f_eff: f64,
    /// Dielectric constant; only used to convert a bare field with
    /// [`DeviceConfig::with_field`].
    pub epsilon: f64,
    /// Ge band-offset coefficient (eV).
    pub v0: f64,
    /// Mean Ge fraction in the well.
    pub n_ge: f64,
    /// Oscillation wavevector (nm⁻¹).
    pub q: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Number of grid points including both ends; `None` picks the default
    /// spacing.
    pub n_grid: Option<usize>,
    pub window: Window,
    /// Mass in the z kinetic term (mₑ).
    pub m_z: f64,
    pub lattice_constant: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            v_b0: 1.0,
            w: 1.0,
            f_eff: 0.1 / 11.0,
            epsilon: 11.0,
            v0: -0.5,
            n_ge: 0.0,
            q: 19.6,
            z_min: -30.0,
            z_max: 5.0,
            n_grid: None,
            window: Window::Smooth,
            m_z: M_LONGITUDINAL,
            lattice_constant: SI_LATTICE_CONSTANT,
        }
    }
}

impl DeviceConfig {
    /// Sets `f_eff = field / ε` for a bare field in V/nm.
    pub fn with_field(mut self, field: f64) -> Self {
        self.f_eff = field / self.epsilon;
        self
    }

    pub fn with_point(mut self, q: f64, n_ge: f64) -> Self {
        self.q = q;
        self.n_ge = n_ge;
        self
    }

    pub fn length(&self) -> f64 {
        self.z_max - self.z_min
    }

    /// Fastest spatial frequency the grid has to follow: `max(q, 2k₀)`.
    pub fn fastest_wavevector(&self) -> f64 {
        self.q.max(2.0 * k0(self.lattice_constant))
    }

    /// Fewest grid points that keep [`POINTS_PER_PERIOD`] points per period.
    pub fn required_points(&self) -> usize {
        (POINTS_PER_PERIOD * self.length() * self.fastest_wavevector() / (2.0 * PI)).ceil() as usize
    }

    /// Grid size in use: explicit `n_grid`, or the default spacing
    /// `min(2π / (20 max(q, 2k₀)), 0.02 nm)`.
    pub fn grid_points(&self) -> usize {
        self.n_grid.unwrap_or_else(|| {
            let dz = (2.0 * PI / (POINTS_PER_PERIOD * self.fastest_wavevector())).min(MAX_SPACING);
            (self.length() / dz).ceil() as usize + 1
        })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.v_b0,
            self.w,
            self.f_eff,
            self.epsilon,
            self.v0,
            self.n_ge,
            self.q,
            self.z_min,
            self.z_max,
            self.m_z,
            self.lattice_constant,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("device parameters must be finite".into()));
        }
        if !(0.0..=0.3).contains(&self.n_ge) {
            return Err(Error::Config(format!("n_ge = {} outside [0, 0.3]", self.n_ge)));
        }
        if self.q <= 0.0 {
            return Err(Error::Config(format!("q = {} must be positive", self.q)));
        }
        if !(self.z_min < 0.0 && 0.0 < self.z_max) {
            return Err(Error::Config(format!(
                "domain [{}, {}] must contain the interface z = 0",
                self.z_min, self.z_max
            )));
        }
        if self.w <= 0.0 || self.m_z <= 0.0 || self.epsilon <= 0.0 || self.lattice_constant <= 0.0 {
            return Err(Error::Config("w, m_z, epsilon and lattice_constant must be positive".into()));
        }
        let n = self.grid_points();
        let required = self.required_points();
        if n < required {
            return Err(Error::GridResolution { n_grid: n, required });
        }
        Ok(())
    }

    /// Uniform grid over `[z_min, z_max]`, both ends included.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points();
        let dz = self.length() / (n - 1) as f64;
        (0..n).map(|i| self.z_min + i as f64 * dz).collect()
    }
}

/// `V_b0 [1 + tanh(z/w)]/2 − F_eff z`.
pub fn structure_potential(cfg: &DeviceConfig, z: f64) -> f64 {
    cfg.v_b0 * 0.5 * (1.0 + (z / cfg.w).tanh()) - cfg.f_eff * z
}

/// `V₀ n̄_Ge (1 + cos qz)`, confined to the well by `cfg.window`.
pub fn oscillatory_potential(cfg: &DeviceConfig, z: f64) -> f64 {
    cfg.v0 * cfg.n_ge * (1.0 + (cfg.q * z).cos()) * cfg.window.weight(z, cfg.w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    pub z: Vec<f64>,
    pub v_str: Vec<f64>,
    pub v_osc: Vec<f64>,
    pub v_total: Vec<f64>,
}

impl PotentialProfile {
    pub fn spacing(&self) -> f64 {
        self.z[1] - self.z[0]
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Evaluates both potentials on the configured grid.
pub fn sample_profile(cfg: &DeviceConfig) -> Result<PotentialProfile> {
    cfg.validate()?;
    let z = cfg.grid();
    let v_str: Vec<f64> = z.iter().map(|&z| structure_potential(cfg, z)).collect();
    let v_osc: Vec<f64> = z.iter().map(|&z| oscillatory_potential(cfg, z)).collect();
    let v_total = v_str.iter().zip(&v_osc).map(|(a, b)| a + b).collect();
    Ok(PotentialProfile {
        z,
        v_str,
        v_osc,
        v_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat() -> DeviceConfig {
        DeviceConfig {
            f_eff: 0.0,
            ..DeviceConfig::default()
        }
    }

    #[test]
    fn barrier_midpoint_and_height() {
        assert_abs_diff_eq!(structure_potential(&flat(), 0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(structure_potential(&flat(), 50.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn field_term_in_the_well() {
        let cfg = DeviceConfig {
            f_eff: 8.5e-3,
            ..DeviceConfig::default()
        };
        let barrier = 0.5 * (1.0 + (-10.0f64).tanh());
        assert!(barrier < 1e-8);
        assert_abs_diff_eq!(structure_potential(&cfg, -10.0), 0.085, epsilon = 1e-8);
    }

    #[test]
    fn oscillation_values() {
        let mut cfg = DeviceConfig::default();
        assert_eq!(oscillatory_potential(&cfg, -3.0), 0.0);
        cfg.n_ge = 0.1;
        assert_abs_diff_eq!(oscillatory_potential(&cfg, -1e-12), -0.1, epsilon = 1e-12);
        // mean over 100 full periods
        let period = 2.0 * PI / cfg.q;
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|i| oscillatory_potential(&cfg, -100.0 * period * (i as f64 + 0.5) / n as f64))
            .sum::<f64>()
            / n as f64;
        assert_abs_diff_eq!(mean, -0.05, epsilon = 1e-9);
    }

    #[test]
    fn windows() {
        let w = 1.0;
        assert_eq!(Window::Smooth.weight(-0.1, w), 1.0);
        assert_abs_diff_eq!(Window::Smooth.weight(0.5, w), 0.5, epsilon = 1e-15);
        assert_eq!(Window::Smooth.weight(1.0, w), 0.0);
        assert_eq!(Window::Hard.weight(0.0, w), 0.0);
        assert_eq!(Window::Hard.weight(-1e-9, w), 1.0);
        assert_eq!(Window::None.weight(4.0, w), 1.0);
    }

    #[test]
    fn default_grid_resolves_valley_oscillation() {
        let cfg = DeviceConfig::default();
        cfg.validate().unwrap();
        let z = cfg.grid();
        assert_eq!(z.len(), cfg.grid_points());
        assert_eq!(z[0], cfg.z_min);
        assert_abs_diff_eq!(*z.last().unwrap(), cfg.z_max, epsilon = 1e-12);
        let dz = z[1] - z[0];
        assert!(dz <= 2.0 * PI / (20.0 * 2.0 * k0(cfg.lattice_constant)) + 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let cfg = DeviceConfig {
            n_grid: Some(200),
            ..DeviceConfig::default()
        };
        assert!(matches!(sample_profile(&cfg), Err(Error::GridResolution { .. })));
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = DeviceConfig::default();
        for bad in [
            DeviceConfig { n_ge: 0.31, ..base.clone() },
            DeviceConfig { q: 0.0, ..base.clone() },
            DeviceConfig { z_max: -1.0, ..base.clone() },
            DeviceConfig { w: f64::NAN, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn unmodulated_profile_has_a_single_minimum() {
        let p = sample_profile(&DeviceConfig::default()).unwrap();
        assert!(p.v_osc.iter().all(|&v| v == 0.0));
        // falls along the field tilt, then rises into the barrier; deep in
        // the barrier the tilt wins again, which is a maximum, not a minimum
        let rising: Vec<bool> = p.v_total.windows(2).map(|w| w[1] > w[0]).collect();
        let minima = rising.windows(2).filter(|s| !s[0] && s[1]).count();
        assert_eq!(minima, 1);
    }

    #[test]
    fn peak_to_trough_in_the_well() {
        let cfg = DeviceConfig {
            n_ge: 0.2,
            ..DeviceConfig::default()
        };
        let p = sample_profile(&cfg).unwrap();
        let well: Vec<f64> = p.z.iter().zip(&p.v_osc).filter(|(z, _)| **z < -1.0).map(|(_, v)| *v).collect();
        let max = well.iter().copied().fold(f64::MIN, f64::max);
        let min = well.iter().copied().fold(f64::MAX, f64::min);
        assert_abs_diff_eq!(max - min, 0.2, epsilon = 1e-3);
    }

    #[test]
    fn oscillation_period_from_zero_crossings() {
        let cfg = DeviceConfig {
            n_ge: 0.1,
            q: 3.7,
            ..DeviceConfig::default()
        };
        let p = sample_profile(&cfg).unwrap();
        let mean = cfg.v0 * cfg.n_ge;
        let crossings: Vec<f64> = p
            .z
            .windows(2)
            .zip(p.v_osc.windows(2))
            .filter(|(z, _)| z[1] < -0.5)
            .filter(|(_, v)| (v[0] - mean) * (v[1] - mean) < 0.0)
            .map(|(z, _)| z[0])
            .collect();
        let span = crossings.last().unwrap() - crossings[0];
        let period = 2.0 * span / (crossings.len() - 1) as f64;
        assert_abs_diff_eq!(period, 2.0 * PI / 3.7, epsilon = 0.01);
        assert_abs_diff_eq!(period, 1.70, epsilon = 0.01);
    }

    #[test]
    fn decomposition_is_exact() {
        let cfg = DeviceConfig {
            n_ge: 0.15,
            q: 9.8,
            ..DeviceConfig::default()
        };
        let p = sample_profile(&cfg).unwrap();
        for i in 0..p.len() {
            assert_eq!(p.v_total[i], p.v_str[i] + p.v_osc[i]);
        }
    }
}
