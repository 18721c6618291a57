//! First-order estimate of the valley splitting and the resonance
//! wavevectors it predicts.
//!
//! For a normalized density `|ψ(z)|²` the intervalley matrix element of a
//! potential `V` is `M = Σ ρ_{K,K'} ∫ |ψ|² e^{i(K'_z − K_z − 2k₀)z} V dz`
//! and the splitting is `2|M|`. Weighting by the envelope keeps the
//! integral finite where the bare Fourier transform of `V` would be a delta
//! function.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crystal_basis::{Basis, ReciprocalVector};
use crate::device::{oscillatory_potential, structure_potential, DeviceConfig};
use crate::epm::IntervalleyDensityMatrix;
use crate::units::{k0, two_pi_over_a};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    /// First-order resonance `q = |m (4π/a) − 2k₀|`.
    FirstOrder,
    /// `q = k₀`: two oscillation quanta span `2k₀`.
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateWavevector {
    /// nm⁻¹.
    pub q: f64,
    /// `K'_z − K_z` in units of 4π/a.
    pub multiple: i32,
    pub kind: CandidateKind,
    pub lambda_nm: f64,
    /// Wavelength in monolayers of thickness a/4.
    pub lambda_monolayers: f64,
}

impl CandidateWavevector {
    fn new(q: f64, multiple: i32, kind: CandidateKind, a: f64) -> Self {
        let lambda_nm = 2.0 * PI / q;
        Self {
            q,
            multiple,
            kind,
            lambda_nm,
            lambda_monolayers: lambda_nm / (a / 4.0),
        }
    }
}

/// Resonances `q = |m (4π/a) − 2k₀|` for `m = 0..=max_multiple`, sorted by
/// `q`, plus the second-order landmark `q = k₀`.
pub fn candidate_wavevectors(max_multiple: u32, lattice_constant: f64) -> Vec<CandidateWavevector> {
    let g = 2.0 * two_pi_over_a(lattice_constant);
    let two_k0 = 2.0 * k0(lattice_constant);
    let mut out: Vec<CandidateWavevector> = (0..=max_multiple as i32)
        .map(|m| {
            let q = (m as f64 * g - two_k0).abs();
            CandidateWavevector::new(q, m, CandidateKind::FirstOrder, lattice_constant)
        })
        .filter(|c| c.q > 0.0)
        .collect();
    out.push(CandidateWavevector::new(
        0.5 * two_k0,
        0,
        CandidateKind::SecondOrder,
        lattice_constant,
    ));
    out.sort_by(|a, b| a.q.total_cmp(&b.q));
    out
}

/// One `(K, K')` contribution to the matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub k: ReciprocalVector,
    pub k_prime: ReciprocalVector,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderResult {
    pub q: f64,
    pub delta: f64,
    /// `M = Σ terms`; `delta = 2|M|`.
    pub element: Complex64,
    pub terms: Vec<Term>,
}

/// `M` for a potential sampled on the grid of `density`.
pub fn matrix_element(
    rho: &IntervalleyDensityMatrix,
    basis: &Basis,
    z: &[f64],
    density: &[f64],
    potential: &[f64],
) -> (Complex64, Vec<Term>) {
    let g = two_pi_over_a(basis.lattice_constant());
    let two_k0 = 2.0 * k0(basis.lattice_constant());
    let weight: Vec<f64> = density.iter().zip(potential).map(|(d, v)| d * v).collect();
    // the integral only depends on K'_z − K_z
    let mut integrals: BTreeMap<i32, Complex64> = BTreeMap::new();
    let mut integral = |m: i32| -> Complex64 {
        *integrals.entry(m).or_insert_with(|| {
            let f = m as f64 * g - two_k0;
            let values: Vec<Complex64> = z.iter().zip(&weight).map(|(z, w)| Complex64::from_polar(*w, f * z)).collect();
            trapezoid_complex(z, &values)
        })
    };
    let vs = basis.vectors();
    let mut terms = Vec::new();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let r = rho.rho[(i, j)];
            if a.h != b.h || a.k != b.k || r == Complex64::new(0.0, 0.0) {
                continue;
            }
            let value = r * integral(b.l - a.l);
            total += value;
            terms.push(Term {
                k: *a,
                k_prime: *b,
                value,
            });
        }
    }
    (total, terms)
}

fn trapezoid_complex(z: &[f64], f: &[Complex64]) -> Complex64 {
    z.windows(2)
        .zip(f.windows(2))
        .map(|(z, f)| (f[0] + f[1]) * (0.5 * (z[1] - z[0])))
        .sum()
}

/// `Δ_w = 2|M|` with `V = V_osc`.
pub fn first_order_vs(
    rho: &IntervalleyDensityMatrix,
    basis: &Basis,
    cfg: &DeviceConfig,
    z: &[f64],
    density: &[f64],
) -> FirstOrderResult {
    let v: Vec<f64> = z.iter().map(|&z| oscillatory_potential(cfg, z)).collect();
    let (element, terms) = matrix_element(rho, basis, z, density, &v);
    FirstOrderResult {
        q: cfg.q,
        delta: 2.0 * element.norm(),
        element,
        terms,
    }
}

/// `Δ_b = 2|M|` with `V = V_str`; independent of `q`.
pub fn barrier_vs_first_order(
    rho: &IntervalleyDensityMatrix,
    basis: &Basis,
    cfg: &DeviceConfig,
    z: &[f64],
    density: &[f64],
) -> FirstOrderResult {
    let v: Vec<f64> = z.iter().map(|&z| structure_potential(cfg, z)).collect();
    let (element, terms) = matrix_element(rho, basis, z, density, &v);
    FirstOrderResult {
        q: cfg.q,
        delta: 2.0 * element.norm(),
        element,
        terms,
    }
}
