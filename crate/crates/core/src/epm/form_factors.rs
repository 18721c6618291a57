use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::RYDBERG_EV;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    Si,
    Ge,
}

/// Symmetric local form factors of one species, in Ry, at
/// `|G|² = 3, 8, 11` (units (2π/a)²). All other shells are zero.
///
/// These are the two-atom symmetric form factors, so a pure crystal has
/// `U_G = V(|G|²) cos(G·r₀/2)` and each atom carries half of `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactorSet {
    pub v3: f64,
    pub v8: f64,
    pub v11: f64,
}

impl FormFactorSet {
    pub const SI: Self = Self {
        v3: -0.21,
        v8: 0.04,
        v11: 0.08,
    };

    pub const GE: Self = Self {
        v3: -0.23,
        v8: 0.01,
        v11: 0.06,
    };

    pub fn symmetric_ev(&self, norm_sq: i32) -> f64 {
        RYDBERG_EV
            * match norm_sq {
                3 => self.v3,
                8 => self.v8,
                11 => self.v11,
                _ => 0.0,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFactors {
    #[serde(rename = "Si")]
    pub si: FormFactorSet,
    #[serde(rename = "Ge")]
    pub ge: FormFactorSet,
}

impl Default for FormFactors {
    fn default() -> Self {
        Self {
            si: FormFactorSet::SI,
            ge: FormFactorSet::GE,
        }
    }
}

impl FormFactors {
    pub fn get(&self, species: Species) -> &FormFactorSet {
        match species {
            Species::Si => &self.si,
            Species::Ge => &self.ge,
        }
    }

    /// Parse a form-factor file:
    ///
    /// ```toml
    /// [Si]
    /// v3 = -0.21
    /// v8 = 0.04
    /// v11 = 0.08
    ///
    /// [Ge]
    /// v3 = -0.23
    /// v8 = 0.01
    /// v11 = 0.06
    /// ```
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let ff: Self = toml::from_str(s)?;
        for (name, set) in [("Si", ff.si), ("Ge", ff.ge)] {
            if !(set.v3 < 0.0) {
                return Err(Error::Config(format!("{name}: v3 must be negative, got {}", set.v3)));
            }
        }
        Ok(ff)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("form factors serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_outside_support() {
        for n in [0, 1, 4, 12, 16, 19] {
            assert_eq!(FormFactorSet::SI.symmetric_ev(n), 0.0);
        }
        assert!((FormFactorSet::SI.symmetric_ev(3) + 0.21 * 13.605693).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip_and_override() {
        let text = "[Si]\nv3 = -0.22\nv8 = 0.04\nv11 = 0.08\n\n[Ge]\nv3 = -0.23\nv8 = 0.01\nv11 = 0.06\n";
        let ff = FormFactors::from_toml_str(text).unwrap();
        assert_eq!(ff.si.v3, -0.22);
        assert_eq!(FormFactors::from_toml_str(&ff.to_toml_string()).unwrap(), ff);
    }

    #[test]
    fn rejects_positive_v3_and_missing_species() {
        let text = "[Si]\nv3 = 0.1\nv8 = 0.0\nv11 = 0.0\n[Ge]\nv3 = -0.23\nv8 = 0.01\nv11 = 0.06\n";
        assert!(FormFactors::from_toml_str(text).is_err());
        assert!(FormFactors::from_toml_str("[Si]\nv3 = -0.2\nv8 = 0\nv11 = 0\n").is_err());
    }
}
