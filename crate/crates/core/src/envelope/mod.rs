//! Two-valley envelope equations along z.
//!
//! The `±k₀` envelopes `F±(z)` obey
//!
//! ```text
//! [−ℏ²/2m_z ∂² + V(z)] F⁺ + V_c(z) F⁻ = E F⁺
//! V_c*(z) F⁺ + [−ℏ²/2m_z ∂² + V(z)] F⁻ = E F⁻
//! ```
//!
//! with `V_c(z) = C(z) V(z)` and the kernel
//! `C(z) = Σ ρ_{K,K'} exp[i(K'_z − K_z − 2k₀) z]` over in-plane-matched
//! pairs. The splitting is the gap between the two lowest levels.

mod block;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crystal_basis::Basis;
use crate::device::{sample_profile, DeviceConfig, PotentialProfile};
use crate::epm::{DensitySource, IntervalleyDensityMatrix};
use crate::error::{Error, Result};
use crate::units::{k0, two_pi_over_a, HBAR2_OVER_2ME};

pub use block::{BlockTridiagonal, Doublet, RESIDUAL_TOL};

/// Largest boundary density allowed, relative to the peak.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Local maxima below this fraction of the global maximum are not counted
/// as density peaks.
pub const PEAK_FLOOR: f64 = 0.05;

/// Wanted margin between the potential at the domain ends and `e0` (eV).
pub const EDGE_MARGIN: f64 = 0.2;

/// `C(z)` sampled on a grid. `V(z)` is not folded in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingKernel {
    pub z: Vec<f64>,
    pub c_of_z: Vec<Complex64>,
    pub rho_source: DensitySource,
}

impl CouplingKernel {
    /// Evaluates the kernel from the `K'_z − K_z` harmonics of `ρ`.
    pub fn new(rho: &IntervalleyDensityMatrix, basis: &Basis, z: &[f64]) -> Self {
        let g = two_pi_over_a(basis.lattice_constant());
        let two_k0 = 2.0 * k0(basis.lattice_constant());
        let harmonics: Vec<(f64, Complex64)> = rho
            .harmonics(basis)
            .into_iter()
            .filter(|(_, r)| *r != Complex64::new(0.0, 0.0))
            .map(|(m, r)| (m as f64 * g - two_k0, r))
            .collect();
        let c_of_z = z
            .iter()
            .map(|&z| harmonics.iter().map(|(f, r)| r * Complex64::from_polar(1.0, f * z)).sum())
            .collect();
        Self {
            z: z.to_vec(),
            c_of_z,
            rho_source: rho.source(),
        }
    }

    pub fn zero(z: &[f64]) -> Self {
        Self {
            z: z.to_vec(),
            c_of_z: vec![Complex64::new(0.0, 0.0); z.len()],
            rho_source: DensitySource {
                x_ge: 0.0,
                n_samples: 0,
                seed: 0,
            },
        }
    }
}

/// Which potential multiplies `C(z)` in the off-diagonal block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSource {
    /// `V_str + V_osc`.
    Total,
    /// `V_osc` only; the barrier stays on the diagonal.
    Oscillatory,
}

/// Finite-difference operator on the interior points of a profile.
#[derive(Debug, Clone)]
pub struct EnvelopeHamiltonian {
    /// Full grid, both Dirichlet ends included.
    pub z: Vec<f64>,
    pub dz: f64,
    pub operator: BlockTridiagonal,
    /// Potential at the two ends, for the confinement margin.
    pub edge_potential: [f64; 2],
}

/// Assembles the operator from explicit arrays on a uniform grid.
/// `potential` and `coupling` are given on every grid point; the two end
/// points carry the Dirichlet condition.
pub fn assemble_from_arrays(z: &[f64], potential: &[f64], coupling: &[Complex64], m_z: f64) -> Result<EnvelopeHamiltonian> {
    let n = z.len();
    if n < 4 || potential.len() != n || coupling.len() != n {
        return Err(Error::Config("envelope grid needs at least 4 points and matching arrays".into()));
    }
    let dz = (z[n - 1] - z[0]) / (n - 1) as f64;
    let t = HBAR2_OVER_2ME / (m_z * dz * dz);
    let inner = 1..n - 1;
    let operator = BlockTridiagonal::new(t, potential[inner.clone()].to_vec(), coupling[inner].to_vec());
    Ok(EnvelopeHamiltonian {
        z: z.to_vec(),
        dz,
        operator,
        edge_potential: [potential[0], potential[n - 1]],
    })
}

/// Builds the operator for a device and kernel.
pub fn assemble_envelope_hamiltonian(
    cfg: &DeviceConfig,
    profile: &PotentialProfile,
    kernel: &CouplingKernel,
    source: CouplingSource,
) -> Result<EnvelopeHamiltonian> {
    if kernel.z.len() != profile.z.len() || kernel.z.iter().zip(&profile.z).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Config("coupling kernel and potential use different grids".into()));
    }
    let coupling: Vec<Complex64> = kernel
        .c_of_z
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c * match source {
                CouplingSource::Total => profile.v_total[i],
                CouplingSource::Oscillatory => profile.v_osc[i],
            }
        })
        .collect();
    assemble_from_arrays(&profile.z, &profile.v_total, &coupling, cfg.m_z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSolution {
    pub z: Vec<f64>,
    /// Ground-state components, zero at both ends.
    pub f_plus: Vec<Complex64>,
    pub f_minus: Vec<Complex64>,
    pub e0: f64,
    pub e1: f64,
    pub delta: f64,
    /// `|F⁺|² + |F⁻|²` of the ground state, normalized by the trapezoid rule.
    pub density: Vec<f64>,
    /// `‖H v − E v‖` of the two eigenpairs.
    pub residuals: [f64; 2],
    /// `min(V(z_min), V(z_max)) − e0`.
    pub edge_margin: f64,
}

/// Two lowest levels and the ground-state envelope.
pub fn solve_valley_doublet(h: &EnvelopeHamiltonian) -> Result<EnvelopeSolution> {
    let d = h.operator.lowest_pair()?;
    let scale = 1.0 / h.dz.sqrt();
    let mut out_density = Vec::new();
    for v in &d.vectors {
        let dens: Vec<f64> = v.iter().map(|p| (p[0].norm_sqr() + p[1].norm_sqr()) * scale * scale).collect();
        let peak = dens.iter().copied().fold(0.0, f64::max);
        let edge = dens[0].max(dens[dens.len() - 1]);
        if edge > BOUNDARY_TOL * peak {
            return Err(Error::BoundaryLeak(edge / peak));
        }
        out_density.push(dens);
    }
    let zero = Complex64::new(0.0, 0.0);
    let pad = |inner: Vec<Complex64>| {
        let mut full = Vec::with_capacity(inner.len() + 2);
        full.push(zero);
        full.extend(inner);
        full.push(zero);
        full
    };
    let ground = &d.vectors[0];
    let f_plus = pad(ground.iter().map(|p| p[0] * scale).collect());
    let f_minus = pad(ground.iter().map(|p| p[1] * scale).collect());
    let mut density = vec![0.0];
    density.extend(out_density.swap_remove(0));
    density.push(0.0);
    let (e0, e1) = (d.energies[0], d.energies[1]);
    let edge_margin = h.edge_potential[0].min(h.edge_potential[1]) - e0;
    if edge_margin < EDGE_MARGIN {
        log::debug!("confinement margin {edge_margin:.3} eV below {EDGE_MARGIN} eV");
    }
    Ok(EnvelopeSolution {
        z: h.z.clone(),
        f_plus,
        f_minus,
        e0,
        e1,
        delta: (e1 - e0).max(0.0),
        density,
        residuals: d.residuals,
        edge_margin,
    })
}

/// Trapezoid integral of samples on a uniform grid.
pub fn trapezoid(z: &[f64], f: &[f64]) -> f64 {
    z.windows(2)
        .zip(f.windows(2))
        .map(|(z, f)| 0.5 * (z[1] - z[0]) * (f[0] + f[1]))
        .sum()
}

/// Splittings with the full potential and with `V_osc` alone in the
/// off-diagonal block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingResult {
    pub delta_total: f64,
    pub delta_w: f64,
    /// Levels of the full-coupling solve.
    pub e0: f64,
    pub e1: f64,
}

pub fn valley_splitting_ww(cfg: &DeviceConfig, rho: &IntervalleyDensityMatrix, basis: &Basis) -> Result<SplittingResult> {
    let profile = sample_profile(cfg)?;
    let kernel = CouplingKernel::new(rho, basis, &profile.z);
    let total = solve_valley_doublet(&assemble_envelope_hamiltonian(cfg, &profile, &kernel, CouplingSource::Total)?)?;
    let ww = solve_valley_doublet(&assemble_envelope_hamiltonian(
        cfg,
        &profile,
        &kernel,
        CouplingSource::Oscillatory,
    )?)?;
    Ok(SplittingResult {
        delta_total: total.delta,
        delta_w: ww.delta,
        e0: total.e0,
        e1: total.e1,
    })
}

/// Ground state without valley coupling; its density feeds the
/// first-order estimates.
pub fn uncoupled_ground_state(cfg: &DeviceConfig) -> Result<EnvelopeSolution> {
    let profile = sample_profile(cfg)?;
    let kernel = CouplingKernel::zero(&profile.z);
    solve_valley_doublet(&assemble_envelope_hamiltonian(cfg, &profile, &kernel, CouplingSource::Total)?)
}

/// Local maxima of `density` above [`PEAK_FLOOR`] of the global maximum.
pub fn count_density_peaks(density: &[f64]) -> usize {
    let max = density.iter().copied().fold(0.0, f64::max);
    let floor = PEAK_FLOOR * max;
    density
        .windows(3)
        .filter(|w| w[1] > floor && w[1] > w[0] && w[1] >= w[2])
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCase {
    pub n_ge: f64,
    pub q: f64,
    pub e0: f64,
    pub delta_w: f64,
    pub norm: f64,
    pub peaks: usize,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub z: Vec<f64>,
    pub cases: Vec<DensityCase>,
}

/// Oscillation wavevector of the density report (nm⁻¹).
pub const REPORT_Q: f64 = 3.7;

/// Mean Ge fractions of the density report.
pub const REPORT_NGE: [f64; 3] = [0.0, 0.1, 0.2];

/// Ground-state densities at `q = 3.7 nm⁻¹` for `n̄_Ge ∈ {0, 0.1, 0.2}`,
/// with the oscillatory-only valley coupling. `rho_for` supplies the
/// density matrix for a given Ge fraction.
pub fn envelope_density_report(
    cfg: &DeviceConfig,
    basis: &Basis,
    rho_for: &dyn Fn(f64) -> Result<IntervalleyDensityMatrix>,
) -> Result<DensityReport> {
    let mut cases = Vec::new();
    let mut grid = Vec::new();
    for n_ge in REPORT_NGE {
        let c = cfg.clone().with_point(REPORT_Q, n_ge);
        let profile = sample_profile(&c)?;
        let rho = rho_for(n_ge)?;
        let kernel = CouplingKernel::new(&rho, basis, &profile.z);
        let sol = solve_valley_doublet(&assemble_envelope_hamiltonian(
            &c,
            &profile,
            &kernel,
            CouplingSource::Oscillatory,
        )?)?;
        grid = sol.z.clone();
        cases.push(DensityCase {
            n_ge,
            q: REPORT_Q,
            e0: sol.e0,
            delta_w: sol.delta,
            norm: trapezoid(&sol.z, &sol.density),
            peaks: count_density_peaks(&sol.density),
            density: sol.density,
        });
    }
    Ok(DensityReport { z: grid, cases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epm::{Crystal, FormFactors, Pseudopotential};
    use approx::assert_abs_diff_eq;

    /// First zero of Ai.
    const AIRY_A1: f64 = -2.338_107_410_459_767;

    fn si_rho() -> (Basis, IntervalleyDensityMatrix) {
        let pp = Pseudopotential::new(Basis::default(), FormFactors::default());
        let s = pp.valley_state(&Crystal::Si).unwrap();
        let rho = IntervalleyDensityMatrix::ordered(pp.basis(), &s);
        (pp.basis().clone(), rho)
    }

    #[test]
    fn kernel_at_origin_is_the_plain_sum() {
        let (basis, rho) = si_rho();
        let k = CouplingKernel::new(&rho, &basis, &[0.0, 0.3]);
        let direct: Complex64 = rho.rho.iter().sum();
        assert!((k.c_of_z[0] - direct).norm() < 1e-14);
    }

    #[test]
    fn kernel_matches_direct_double_sum() {
        let (basis, rho) = si_rho();
        let z = [-1.234, 0.77];
        let k = CouplingKernel::new(&rho, &basis, &z);
        let g = two_pi_over_a(basis.lattice_constant());
        let two_k0 = 2.0 * k0(basis.lattice_constant());
        for (zi, c) in z.iter().zip(&k.c_of_z) {
            let mut direct = Complex64::new(0.0, 0.0);
            for (i, a) in basis.vectors().iter().enumerate() {
                for (j, b) in basis.vectors().iter().enumerate() {
                    if a.h == b.h && a.k == b.k {
                        let phase = ((b.l - a.l) as f64 * g - two_k0) * zi;
                        direct += rho.rho[(i, j)] * Complex64::from_polar(1.0, phase);
                    }
                }
            }
            assert!((c - direct).norm() < 1e-13);
            assert!(c.norm() <= rho.abs_sum());
        }
    }

    #[test]
    fn zero_density_matrix_gives_zero_kernel() {
        let (basis, _) = si_rho();
        let rho = IntervalleyDensityMatrix::zeros(basis.len());
        let k = CouplingKernel::new(&rho, &basis, &[0.0, 1.0, 2.0]);
        assert!(k.c_of_z.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn ordered_kernel_oscillates_at_twice_k0() {
        let (basis, rho) = si_rho();
        let z: Vec<f64> = (0..4000).map(|i| i as f64 * 0.01).collect();
        let k = CouplingKernel::new(&rho, &basis, &z);
        let two_k0 = 2.0 * k0(basis.lattice_constant());
        // discrete Fourier amplitude at |f| on 0.1 nm⁻¹ steps up to 80 nm⁻¹
        let amplitude = |f: f64| -> f64 {
            let s: Complex64 = z.iter().zip(&k.c_of_z).map(|(z, c)| c * Complex64::from_polar(1.0, f * z)).sum();
            s.norm() / z.len() as f64
        };
        let (best, _) = (1..800)
            .map(|i| i as f64 * 0.1)
            .map(|f| (f, amplitude(f)))
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((best - two_k0).abs() <= 0.1, "dominant {best} vs {two_k0}");
        assert_abs_diff_eq!(two_k0, 19.4, epsilon = 0.05);
    }

    #[test]
    fn decoupled_problem_is_degenerate() {
        let cfg = DeviceConfig::default();
        let sol = uncoupled_ground_state(&cfg).unwrap();
        assert!(sol.delta < 1e-9, "{}", sol.delta);
        assert_abs_diff_eq!(trapezoid(&sol.z, &sol.density), 1.0, epsilon = 1e-10);
        let peak = sol.density.iter().copied().fold(0.0, f64::max);
        assert!(sol.density[1] < BOUNDARY_TOL * peak);
        assert!(sol.density[sol.density.len() - 2] < BOUNDARY_TOL * peak);
    }

    #[test]
    fn triangular_well_matches_airy_zero() {
        let field = 0.01;
        let m = 0.92;
        let n = 3001;
        let z: Vec<f64> = (0..n).map(|i| -30.0 + 30.0 * i as f64 / (n - 1) as f64).collect();
        let v: Vec<f64> = z.iter().map(|z| -field * z).collect();
        let c = vec![Complex64::new(0.0, 0.0); n];
        let h = assemble_from_arrays(&z, &v, &c, m).unwrap();
        // the hard wall at z = 0 is part of the problem, so the boundary
        // check of `solve_valley_doublet` does not apply
        let d = h.operator.lowest_pair().unwrap();
        let exact = (HBAR2_OVER_2ME / m * field * field).cbrt() * -AIRY_A1;
        assert_abs_diff_eq!(d.energies[0], exact, epsilon = 1e-4);
        assert!(d.energies[1] - d.energies[0] < 1e-9);
    }

    #[test]
    fn assembled_operator_is_hermitian_and_banded() {
        let (basis, rho) = si_rho();
        let cfg = DeviceConfig {
            n_ge: 0.1,
            z_min: -2.0,
            z_max: 1.0,
            ..DeviceConfig::default()
        };
        let profile = sample_profile(&cfg).unwrap();
        let kernel = CouplingKernel::new(&rho, &basis, &profile.z);
        let h = assemble_envelope_hamiltonian(&cfg, &profile, &kernel, CouplingSource::Total).unwrap();
        let dense = h.operator.to_dense();
        let defect = (&dense - dense.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(defect <= 1e-12 * h.operator.norm_estimate());
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                if i.abs_diff(j) > 2 {
                    assert_eq!(dense[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let cfg = DeviceConfig::default();
        let profile = sample_profile(&cfg).unwrap();
        let kernel = CouplingKernel::zero(&profile.z[1..]);
        assert!(assemble_envelope_hamiltonian(&cfg, &profile, &kernel, CouplingSource::Total).is_err());
    }

    #[test]
    fn small_domain_leaks() {
        let cfg = DeviceConfig {
            z_min: -2.0,
            f_eff: 0.0,
            ..DeviceConfig::default()
        };
        let profile = sample_profile(&cfg).unwrap();
        let kernel = CouplingKernel::zero(&profile.z);
        let h = assemble_envelope_hamiltonian(&cfg, &profile, &kernel, CouplingSource::Total).unwrap();
        assert!(matches!(solve_valley_doublet(&h), Err(Error::BoundaryLeak(_))));
    }

    #[test]
    fn peak_counting() {
        assert_eq!(count_density_peaks(&[0.0, 1.0, 2.0, 1.0, 0.0]), 1);
        assert_eq!(count_density_peaks(&[0.0, 1.0, 0.5, 1.0, 0.0]), 2);
        // a ripple below 5% of the maximum is ignored
        assert_eq!(count_density_peaks(&[0.0, 0.04, 0.0, 1.0, 0.0]), 1);
        assert_eq!(count_density_peaks(&[0.0, 0.0, 0.0]), 0);
    }
}
