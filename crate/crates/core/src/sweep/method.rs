//! Interchangeable ways of turning one `(q, n̄_Ge)` point into splittings.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::crystal_basis::Basis;
use crate::device::{sample_profile, DeviceConfig};
use crate::envelope::{uncoupled_ground_state, valley_splitting_ww};
use crate::epm::IntervalleyDensityMatrix;
use crate::error::Result;
use crate::perturbation::{barrier_vs_first_order, first_order_vs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValues {
    pub delta_w: f64,
    pub delta_total: f64,
    pub e0: f64,
    pub e1: f64,
}

pub trait SplittingMethod: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn evaluate(&self, cfg: &DeviceConfig, rho: &IntervalleyDensityMatrix, basis: &Basis) -> Result<PointValues>;
}

/// Non-perturbative two-valley envelope solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullSolver;

impl SplittingMethod for FullSolver {
    fn name(&self) -> &'static str {
        "full_solver"
    }

    fn evaluate(&self, cfg: &DeviceConfig, rho: &IntervalleyDensityMatrix, basis: &Basis) -> Result<PointValues> {
        let r = valley_splitting_ww(cfg, rho, basis)?;
        Ok(PointValues {
            delta_w: r.delta_w,
            delta_total: r.delta_total,
            e0: r.e0,
            e1: r.e1,
        })
    }
}

/// First-order matrix elements over the uncoupled ground-state density.
/// Levels are `E ∓ |M_w + M_b|` around the uncoupled energy.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstOrder;

impl SplittingMethod for FirstOrder {
    fn name(&self) -> &'static str {
        "first_order"
    }

    fn evaluate(&self, cfg: &DeviceConfig, rho: &IntervalleyDensityMatrix, basis: &Basis) -> Result<PointValues> {
        sample_profile(cfg)?;
        let psi = uncoupled_ground_state(cfg)?;
        let w = first_order_vs(rho, basis, cfg, &psi.z, &psi.density);
        let b = barrier_vs_first_order(rho, basis, cfg, &psi.z, &psi.density);
        let half = (w.element + b.element).norm();
        Ok(PointValues {
            delta_w: w.delta,
            delta_total: 2.0 * half,
            e0: psi.e0 - half,
            e1: psi.e0 + half,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Arc<dyn SplittingMethod>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, method: Arc<dyn SplittingMethod>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn SplittingMethod>> {
        self.methods.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.keys().copied()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(FullSolver));
        r.register(Arc::new(FirstOrder));
        r
    }
}
