use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{opposite_valley_state, BlochState, Crystal, DisorderRealization, Pseudopotential, SignModel};
use crate::crystal_basis::Basis;
use crate::error::{Error, Result};

/// Ensemble average `ρ_{K,K'} = ⟨c₊*(K) c₋(K')⟩` restricted to pairs with
/// equal in-plane components. All other entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalleyDensityMatrix {
    pub rho: DMatrix<Complex64>,
    pub n_samples: usize,
    pub x_ge: f64,
    pub seed: u64,
}

/// Provenance of a density matrix, carried into results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySource {
    pub x_ge: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl IntervalleyDensityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            rho: DMatrix::zeros(n, n),
            n_samples: 0,
            x_ge: 0.0,
            seed: 0,
        }
    }

    /// Rank-one matrix of a single `+k₀` state.
    pub fn ordered(basis: &Basis, plus: &BlochState) -> Self {
        let mut out = Self::zeros(basis.len());
        out.n_samples = 1;
        accumulate(basis, &mut out.rho, plus);
        out
    }

    pub fn source(&self) -> DensitySource {
        DensitySource {
            x_ge: self.x_ge,
            n_samples: self.n_samples,
            seed: self.seed,
        }
    }

    /// `ρ` multiplied by a global phase.
    pub fn rotated(&self, phase: Complex64) -> Self {
        Self {
            rho: self.rho.map(|z| z * phase),
            ..self.clone()
        }
    }

    /// Sums `R_m = Σ ρ_{K,K'}` over entries with `l' − l = m`, i.e.
    /// `K'_z − K_z = m (2π/a)`; only even `m` occur.
    pub fn harmonics(&self, basis: &Basis) -> BTreeMap<i32, Complex64> {
        let vs = basis.vectors();
        let mut out: BTreeMap<i32, Complex64> = BTreeMap::new();
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                if a.h == b.h && a.k == b.k {
                    *out.entry(b.l - a.l).or_default() += self.rho[(i, j)];
                }
            }
        }
        out
    }

    pub fn abs_sum(&self) -> f64 {
        self.rho.iter().map(|z| z.norm()).sum()
    }
}

fn accumulate(basis: &Basis, rho: &mut DMatrix<Complex64>, plus: &BlochState) {
    let minus = opposite_valley_state(basis, plus);
    let vs = basis.vectors();
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            if a.h == b.h && a.k == b.k {
                rho[(i, j)] += plus.coeffs[i].conj() * minus.coeffs[j];
            }
        }
    }
}

/// Disorder-averaged density matrix of the extended virtual crystal at Ge
/// fraction `x_ge`, from `n_samples` sign realizations seeded
/// `seed, seed + 1, …`.
///
/// Realizations are solved in parallel and reduced in index order, so the
/// result does not depend on the thread count.
pub fn sample_density_matrix(
    pp: &Pseudopotential,
    x_ge: f64,
    n_samples: usize,
    seed: u64,
    model: &dyn SignModel,
) -> Result<IntervalleyDensityMatrix> {
    if !(0.0..=1.0).contains(&x_ge) {
        return Err(Error::AlloyFraction(x_ge));
    }
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let basis = pp.basis();
    let mut out = IntervalleyDensityMatrix {
        n_samples,
        x_ge,
        seed,
        ..IntervalleyDensityMatrix::zeros(basis.len())
    };
    if x_ge * (1.0 - x_ge) == 0.0 {
        // no mixed cells: every realization is the same ordered crystal
        let crystal = if x_ge == 0.0 { Crystal::Si } else { Crystal::Ge };
        accumulate(basis, &mut out.rho, &pp.valley_state(&crystal)?);
        return Ok(out);
    }

    let states: Vec<BlochState> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let r = DisorderRealization::draw(model, basis, seed, i);
            pp.valley_state(&Crystal::Alloy(x_ge, r))
        })
        .collect::<Result<_>>()?;
    for s in &states {
        accumulate(basis, &mut out.rho, s);
    }
    out.rho /= Complex64::new(n_samples as f64, 0.0);
    Ok(out)
}
