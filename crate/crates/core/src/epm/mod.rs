//! Local empirical pseudopotential method for Si, Ge and their alloys on the
//! diamond lattice.
//!
//! The plane-wave Hamiltonian at wavevector `k` is
//! `H_{K,K'} = δ_{KK'} (ℏ²/2mₑ)|k − K|² + U_{K−K'}` with
//! `U_G = (1/ν)∫ U(r) e^{iG·r}`. In that basis the plane waves are
//! `e^{i(k−K)·r}`; [`BlochState`] re-indexes the eigenvector so that its
//! entries are the coefficients of `e^{+iK·r}` in the cell-periodic part
//! `u_k(r) = Σ c(K) e^{iK·r}`. The origin sits at the bond centre, with the
//! two atoms of the primitive cell at `±r₀/2`, `r₀ = (a/4)(1,1,1)`.

mod density;
mod disorder;
mod form_factors;

pub use density::{sample_density_matrix, DensitySource, IntervalleyDensityMatrix};
pub use disorder::{
    balanced_signs, DisorderRealization, PairSigns, SignModel, SignModelRegistry, SiteSwap,
};
pub use form_factors::{FormFactorSet, FormFactors, Species};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crystal_basis::{Basis, ReciprocalVector};
use crate::error::{Error, Result};
use crate::units::{two_pi_over_a, HBAR2_OVER_2ME, K0_REDUCED};

/// Index of the lowest conduction band: four valence bands lie below it.
pub const CONDUCTION_BAND: usize = 4;

/// Two bands closer than this (eV) make the conduction state ill-defined.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Which crystal potential to build.
#[derive(Debug, Clone, PartialEq)]
pub enum Crystal {
    Si,
    Ge,
    /// Standard virtual crystal, `(1−x) H_Si + x H_Ge`.
    Vca(f64),
    /// Extended virtual crystal for one sign realization,
    /// `(1−x)² H_Si + x² H_Ge + 2x(1−x) H_a(s)`.
    Alloy(f64, DisorderRealization),
}

impl Crystal {
    pub fn alloy_fraction(&self) -> f64 {
        match self {
            Crystal::Si => 0.0,
            Crystal::Ge => 1.0,
            Crystal::Vca(x) | Crystal::Alloy(x, _) => *x,
        }
    }

    /// True for potentials with inversion symmetry about the bond centre.
    pub fn is_ordered(&self) -> bool {
        !matches!(self, Crystal::Alloy(x, _) if *x > 0.0 && *x < 1.0)
    }

    pub fn describe(&self) -> String {
        match self {
            Crystal::Si => "Si".into(),
            Crystal::Ge => "Ge".into(),
            Crystal::Vca(x) => format!("VCA x={x}"),
            Crystal::Alloy(x, r) => format!("extended VCA x={x} seed={}", r.seed),
        }
    }
}

/// `cos((π/4) n)` and `sin((π/4) n)` without rounding: these are the only
/// angles `G·r₀/2` that occur on the reciprocal lattice.
pub(crate) fn eighth_turn(n: i32) -> (f64, f64) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match n.rem_euclid(8) {
        0 => (1.0, 0.0),
        1 => (r, r),
        2 => (0.0, 1.0),
        3 => (-r, r),
        4 => (-1.0, 0.0),
        5 => (-r, -r),
        6 => (0.0, -1.0),
        _ => (r, -r),
    }
}

/// Conduction-band eigenpair at one wavevector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    /// `c(K)` over the canonical basis, coefficient of `e^{iK·r}` in `u_k`.
    pub coeffs: Vec<Complex64>,
    /// Band energy in eV.
    pub energy: f64,
    /// Wavevector in units of 2π/a.
    pub k: [f64; 3],
    pub band_index: usize,
}

impl BlochState {
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn coeff(&self, basis: &Basis, v: &ReciprocalVector) -> Complex64 {
        basis
            .index_of(v)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

/// Pseudopotential model: basis, lattice constant and form factors.
#[derive(Debug, Clone)]
pub struct Pseudopotential {
    basis: Basis,
    form_factors: FormFactors,
}

impl Pseudopotential {
    pub fn new(basis: Basis, form_factors: FormFactors) -> Self {
        Self {
            basis,
            form_factors,
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn form_factors(&self) -> &FormFactors {
        &self.form_factors
    }

    pub fn lattice_constant(&self) -> f64 {
        self.basis.lattice_constant()
    }

    /// Valley wavevector `(0, 0, k₀)` in units of 2π/a.
    pub fn valley(&self) -> [f64; 3] {
        [0.0, 0.0, K0_REDUCED]
    }

    /// Single-atom form factor in eV.
    fn atomic(&self, species: Species, g: &ReciprocalVector) -> f64 {
        0.5 * self.form_factors.get(species).symmetric_ev(g.norm_sq())
    }

    /// `U_G` for a two-atom cell holding `first` at `+r₀/2` and `second` at
    /// `−r₀/2`: `(v₁ + v₂) cos(G·r₀/2) + i (v₁ − v₂) sin(G·r₀/2)`.
    fn cell_fourier(&self, first: Species, second: Species, g: &ReciprocalVector) -> Complex64 {
        let (cos, sin) = eighth_turn(g.index_sum());
        let v1 = self.atomic(first, g);
        let v2 = self.atomic(second, g);
        Complex64::new((v1 + v2) * cos, (v1 - v2) * sin)
    }

    /// Fourier component `U_G` of the crystal pseudopotential in eV.
    pub fn fourier(&self, crystal: &Crystal, g: &ReciprocalVector) -> Result<Complex64> {
        use Species::{Ge, Si};
        Ok(match crystal {
            Crystal::Si => self.cell_fourier(Si, Si, g),
            Crystal::Ge => self.cell_fourier(Ge, Ge, g),
            Crystal::Vca(x) => {
                check_fraction(*x)?;
                self.cell_fourier(Si, Si, g) * (1.0 - x) + self.cell_fourier(Ge, Ge, g) * *x
            }
            Crystal::Alloy(x, realization) => {
                check_fraction(*x)?;
                let mixed = match realization.sign(g) {
                    s if s >= 0 => self.cell_fourier(Si, Ge, g),
                    _ => self.cell_fourier(Ge, Si, g),
                };
                self.cell_fourier(Si, Si, g) * ((1.0 - x) * (1.0 - x))
                    + self.cell_fourier(Ge, Ge, g) * (x * x)
                    + mixed * (2.0 * x * (1.0 - x))
            }
        })
    }

    /// Hermitian plane-wave Hamiltonian in eV at `k` (units 2π/a).
    pub fn hamiltonian(&self, crystal: &Crystal, k: [f64; 3]) -> Result<DMatrix<Complex64>> {
        let n = self.basis.len();
        let scale = two_pi_over_a(self.lattice_constant());
        let kinetic = HBAR2_OVER_2ME * scale * scale;
        let vs = self.basis.vectors();
        let mut h = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            let d = [
                k[0] - vs[i].h as f64,
                k[1] - vs[i].k as f64,
                k[2] - vs[i].l as f64,
            ];
            h[(i, i)] = Complex64::new(kinetic * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), 0.0);
            for j in (i + 1)..n {
                let g = vs[i].sub(&vs[j]);
                let u = self.fourier(crystal, &g)?;
                h[(i, j)] = u;
                h[(j, i)] = u.conj();
            }
        }
        Ok(h)
    }

    /// Sorted band energies at `k` (eV).
    pub fn band_energies(&self, crystal: &Crystal, k: [f64; 3]) -> Result<Vec<f64>> {
        let h = self.hamiltonian(crystal, k)?;
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        Ok(e)
    }

    /// Build and solve the conduction state at `k`.
    pub fn conduction_state(&self, crystal: &Crystal, k: [f64; 3]) -> Result<BlochState> {
        let h = self.hamiltonian(crystal, k)?;
        solve_conduction_state(&self.basis, &h, k)
    }

    /// Conduction state of `crystal` at `+k₀`.
    pub fn valley_state(&self, crystal: &Crystal) -> Result<BlochState> {
        self.conduction_state(crystal, self.valley())
    }

    /// Conduction-band minimum over wavevectors `(0, 0, kz)`.
    pub fn conduction_minimum_scan(&self, crystal: &Crystal, kz_grid: &[f64]) -> Result<(f64, f64)> {
        let mut best = (f64::NAN, f64::INFINITY);
        for &kz in kz_grid {
            let e = self.band_energies(crystal, [0.0, 0.0, kz])?[CONDUCTION_BAND];
            if e < best.1 {
                best = (kz, e);
            }
        }
        Ok(best)
    }

    /// Indirect gap: conduction minimum minus the valence-band top at Γ.
    pub fn indirect_gap(&self, crystal: &Crystal, kz_grid: &[f64]) -> Result<f64> {
        let (_, e_c) = self.conduction_minimum_scan(crystal, kz_grid)?;
        let e_v = self.band_energies(crystal, [0.0; 3])?[CONDUCTION_BAND - 1];
        Ok(e_c - e_v)
    }
}

fn check_fraction(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::AlloyFraction(x))
    }
}

/// Uniform grid on `(0, 1]` in units of 2π/a.
pub fn kz_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

/// Fifth-lowest eigenpair of `h`, gauge-fixed so that `c(0)` is real and
/// positive, re-indexed to the `e^{iK·r}` convention.
pub fn solve_conduction_state(basis: &Basis, h: &DMatrix<Complex64>, k: [f64; 3]) -> Result<BlochState> {
    let n = h.nrows();
    if n <= CONDUCTION_BAND + 1 {
        return Err(Error::Eigensolver(format!("basis of {n} vectors has no conduction band")));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (lo, hi) = (order[CONDUCTION_BAND], order[CONDUCTION_BAND + 1]);
    let energy = eig.eigenvalues[lo];
    let gap = eig.eigenvalues[hi] - energy;
    if gap < DEGENERACY_TOL {
        return Err(Error::Degenerate {
            lower: CONDUCTION_BAND,
            upper: CONDUCTION_BAND + 1,
            gap,
        });
    }
    let v = eig.eigenvectors.column(lo);
    // v is indexed by the plane wave e^{i(k−K)·r}: c(K) = v(−K)
    let inversion = basis.inversion_map();
    let mut coeffs: Vec<Complex64> = inversion.iter().map(|&j| v[j]).collect();
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    fix_gauge(basis, &mut coeffs);
    for c in coeffs.iter_mut() {
        *c /= norm;
    }

    let residual = {
        let x = nalgebra::DVector::from_iterator(n, v.iter().copied());
        (h * &x - &x * Complex64::new(energy, 0.0)).norm()
    };
    let scale = h.norm();
    if residual > 1e-10 * scale {
        return Err(Error::Eigensolver(format!(
            "residual {residual:e} above tolerance for |H| = {scale:e}"
        )));
    }

    Ok(BlochState {
        coeffs,
        energy,
        k,
        band_index: CONDUCTION_BAND,
    })
}

/// Rotate the global phase so the `K = 0` coefficient (or the largest one if
/// that vanishes) is real and positive.
fn fix_gauge(basis: &Basis, coeffs: &mut [Complex64]) {
    let origin = basis
        .index_of(&ReciprocalVector::origin())
        .filter(|&i| coeffs[i].norm() > 1e-8);
    let reference = origin.unwrap_or_else(|| {
        (0..coeffs.len())
            .max_by(|&a, &b| coeffs[a].norm().total_cmp(&coeffs[b].norm()))
            .unwrap_or(0)
    });
    let c = coeffs[reference];
    if c.norm() == 0.0 {
        return;
    }
    let phase = c.conj() / c.norm();
    for x in coeffs.iter_mut() {
        *x *= phase;
    }
}

/// `c₋(K) = c₊*(−K)`, from time reversal; no second diagonalization.
pub fn opposite_valley_state(basis: &Basis, state: &BlochState) -> BlochState {
    let inversion = basis.inversion_map();
    BlochState {
        coeffs: inversion.iter().map(|&j| state.coeffs[j].conj()).collect(),
        energy: state.energy,
        k: [-state.k[0], -state.k[1], -state.k[2]],
        band_index: state.band_index,
    }
}
