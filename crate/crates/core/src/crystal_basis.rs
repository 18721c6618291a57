//! Reciprocal-lattice basis of the diamond structure and the symmetry group
//! of wavevectors on the Γ–X line along z.
//!
//! Reciprocal vectors are stored as integer triples `(h, k, l)` in units of
//! 2π/a. The bcc reciprocal lattice of the fcc Bravais lattice consists of
//! the triples whose entries are all even (sublattice A, `K = (4π/a) n`) or
//! all odd (sublattice B, `K = (4π/a)(n + ½)`).

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::SI_LATTICE_CONSTANT;

/// Shell cutoff `h² + k² + l² ≤ 12`, the unique cutoff giving 59 vectors.
pub const DEFAULT_CUTOFF_SQ: i32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// A bcc reciprocal-lattice point in units of 2π/a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReciprocalVector {
    pub h: i32,
    pub k: i32,
    pub l: i32,
}

impl ReciprocalVector {
    pub fn new(h: i32, k: i32, l: i32) -> Result<Self> {
        let parity = |x: i32| x.rem_euclid(2);
        if parity(h) != parity(k) || parity(k) != parity(l) {
            return Err(Error::MixedParity(h, k, l));
        }
        Ok(Self { h, k, l })
    }

    /// Unchecked constructor for internal arithmetic on known-valid vectors.
    pub(crate) const fn raw(h: i32, k: i32, l: i32) -> Self {
        Self { h, k, l }
    }

    pub fn origin() -> Self {
        Self::raw(0, 0, 0)
    }

    pub fn sublattice(&self) -> Sublattice {
        if self.h.rem_euclid(2) == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }

    pub fn norm_sq(&self) -> i32 {
        self.h * self.h + self.k * self.k + self.l * self.l
    }

    /// Cartesian components in nm⁻¹.
    pub fn cartesian(&self, a: f64) -> [f64; 3] {
        let s = 2.0 * std::f64::consts::PI / a;
        [s * self.h as f64, s * self.k as f64, s * self.l as f64]
    }

    pub fn neg(&self) -> Self {
        Self::raw(-self.h, -self.k, -self.l)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::raw(self.h + other.h, self.k + other.k, self.l + other.l)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::raw(self.h - other.h, self.k - other.k, self.l - other.l)
    }

    /// `h + k + l`, which fixes the phases `exp(i G·r₀/2)` with
    /// `r₀ = (a/4)(1,1,1)`: `G·r₀/2 = (π/4)(h + k + l)`.
    pub fn index_sum(&self) -> i32 {
        self.h + self.k + self.l
    }

    /// `(n_x, n_y, n_z)` labels with `K = (4π/a)·n` on sublattice A and
    /// `K = (4π/a)(n + ½)` on sublattice B.
    pub fn half_labels(&self) -> (i32, i32, i32) {
        match self.sublattice() {
            Sublattice::A => (self.h / 2, self.k / 2, self.l / 2),
            Sublattice::B => (
                (self.h - 1).div_euclid(2),
                (self.k - 1).div_euclid(2),
                (self.l - 1).div_euclid(2),
            ),
        }
    }
}

impl fmt::Display for ReciprocalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.h, self.k, self.l)
    }
}

/// The ordered list of plane waves used to expand Bloch functions.
#[derive(Debug, Clone)]
pub struct Basis {
    vectors: Vec<ReciprocalVector>,
    index: HashMap<ReciprocalVector, usize>,
    cutoff_sq: i32,
    a: f64,
}

impl Basis {
    pub fn new(cutoff_sq: i32) -> Self {
        Self::with_lattice_constant(cutoff_sq, SI_LATTICE_CONSTANT)
    }

    pub fn with_lattice_constant(cutoff_sq: i32, a: f64) -> Self {
        let vectors = enumerate_basis(cutoff_sq);
        let index = vectors.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        Self {
            vectors,
            index,
            cutoff_sq,
            a,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[ReciprocalVector] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> ReciprocalVector {
        self.vectors[i]
    }

    pub fn index_of(&self, v: &ReciprocalVector) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn cutoff_sq(&self) -> i32 {
        self.cutoff_sq
    }

    pub fn lattice_constant(&self) -> f64 {
        self.a
    }

    /// Index permutation `i ↦ index(−K_i)`; the basis is inversion symmetric.
    pub fn inversion_map(&self) -> Vec<usize> {
        self.vectors
            .iter()
            .map(|v| self.index[&v.neg()])
            .collect()
    }
}

impl Default for Basis {
    fn default() -> Self {
        Self::new(DEFAULT_CUTOFF_SQ)
    }
}

/// All bcc reciprocal vectors with `h² + k² + l² ≤ cutoff_sq`, sorted by norm
/// and then lexicographically.
pub fn enumerate_basis(cutoff_sq: i32) -> Vec<ReciprocalVector> {
    if cutoff_sq < 0 {
        return Vec::new();
    }
    let r = (cutoff_sq as f64).sqrt().floor() as i32;
    let mut out = Vec::new();
    for h in -r..=r {
        for k in -r..=r {
            for l in -r..=r {
                if let Ok(v) = ReciprocalVector::new(h, k, l) {
                    if v.norm_sq() <= cutoff_sq {
                        out.push(v);
                    }
                }
            }
        }
    }
    out.sort_by_key(|v| (v.norm_sq(), v.h, v.k, v.l));
    out
}

/// A fourth root of unity `iⁿ`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuarterPhase(u8);

impl std::ops::Mul for QuarterPhase {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self((self.0 + other.0) % 4)
    }
}

impl QuarterPhase {
    pub const ONE: Self = Self(0);

    pub fn from_power(n: i32) -> Self {
        Self(n.rem_euclid(4) as u8)
    }

    pub fn power(&self) -> u8 {
        self.0
    }


    pub fn conj(self) -> Self {
        Self((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// The eight operations of the group of the Δ line. Four are pure point
/// operations; the other four carry the non-primitive translation
/// `T = (a/4)(1,1,1)` of the diamond structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupElement {
    Identity,
    C4Squared,
    /// Reflection in the x = y plane.
    R,
    /// Reflection in the x = −y plane.
    RPrime,
    TRC4,
    TRPrimeC4,
    TC4,
    TC4Inv,
}

impl GroupElement {
    pub const ALL: [GroupElement; 8] = [
        GroupElement::Identity,
        GroupElement::C4Squared,
        GroupElement::R,
        GroupElement::RPrime,
        GroupElement::TRC4,
        GroupElement::TRPrimeC4,
        GroupElement::TC4,
        GroupElement::TC4Inv,
    ];

    /// Action on `(K_x, K_y)`; `K_z` is untouched.
    pub fn point_part(&self) -> [[i32; 2]; 2] {
        use GroupElement::*;
        match self {
            Identity => [[1, 0], [0, 1]],
            C4Squared => [[-1, 0], [0, -1]],
            R => [[0, 1], [1, 0]],
            RPrime => [[0, -1], [-1, 0]],
            // C4 takes (x, y) to (−y, x); R then swaps the components.
            TRC4 => [[1, 0], [0, -1]],
            TRPrimeC4 => [[-1, 0], [0, 1]],
            TC4 => [[0, -1], [1, 0]],
            TC4Inv => [[0, 1], [-1, 0]],
        }
    }

    pub fn has_glide(&self) -> bool {
        use GroupElement::*;
        matches!(self, TRC4 | TRPrimeC4 | TC4 | TC4Inv)
    }

    pub fn name(&self) -> &'static str {
        use GroupElement::*;
        match self {
            Identity => "E",
            C4Squared => "C4^2",
            R => "R",
            RPrime => "R'",
            TRC4 => "T.R.C4",
            TRPrimeC4 => "T.R'.C4",
            TC4 => "T.C4",
            TC4Inv => "T.C4^-1",
        }
    }

    pub fn rotate(&self, v: &ReciprocalVector) -> ReciprocalVector {
        let m = self.point_part();
        ReciprocalVector::raw(
            m[0][0] * v.h + m[0][1] * v.k,
            m[1][0] * v.h + m[1][1] * v.k,
            v.l,
        )
    }

    /// Image `K' = W K` and the phase `exp[i(a/4)(W K)·(1,1,1)]` that relates
    /// Δ₁ Bloch coefficients in the atom-centred gauge,
    /// `c(K) = phase · c(W K)`. The phase is 1 for pure point operations.
    pub fn apply(&self, v: &ReciprocalVector) -> (ReciprocalVector, QuarterPhase) {
        let image = self.rotate(v);
        let phase = if self.has_glide() {
            // (a/4)(2π/a)(h'+k'+l') = (π/2)(h'+k'+l')
            QuarterPhase::from_power(image.index_sum())
        } else {
            QuarterPhase::ONE
        };
        (image, phase)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let a = self.point_part();
        let b = other.point_part();
        let mut m = [[0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let glide = self.has_glide() ^ other.has_glide();
        Self::ALL
            .into_iter()
            .find(|g| g.point_part() == m && g.has_glide() == glide)
            .expect("Δ group is closed under composition")
    }
}

/// The seven classes of Δ-group orbits on the bcc reciprocal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrbitClass {
    A1,
    A2,
    A3,
    A4,
    B1,
    B2,
    B3,
}

impl OrbitClass {
    pub const ALL: [OrbitClass; 7] = [
        OrbitClass::A1,
        OrbitClass::A2,
        OrbitClass::A3,
        OrbitClass::A4,
        OrbitClass::B1,
        OrbitClass::B2,
        OrbitClass::B3,
    ];

    pub fn expected_size(&self) -> usize {
        match self {
            OrbitClass::A1 => 1,
            OrbitClass::A2 | OrbitClass::A3 | OrbitClass::B1 => 4,
            OrbitClass::A4 | OrbitClass::B2 | OrbitClass::B3 => 8,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OrbitClass::A1 => "A1",
            OrbitClass::A2 => "A2",
            OrbitClass::A3 => "A3",
            OrbitClass::A4 => "A4",
            OrbitClass::B1 => "B1",
            OrbitClass::B2 => "B2",
            OrbitClass::B3 => "B3",
        }
    }

    pub fn of(v: &ReciprocalVector) -> OrbitClass {
        let (h, k) = (v.h.abs(), v.k.abs());
        match v.sublattice() {
            Sublattice::A => {
                if h == 0 && k == 0 {
                    OrbitClass::A1
                } else if h == 0 || k == 0 {
                    OrbitClass::A2
                } else if h == k {
                    OrbitClass::A3
                } else {
                    OrbitClass::A4
                }
            }
            Sublattice::B => {
                if h == k {
                    OrbitClass::B1
                } else {
                    // n_x + n_y parity of the first-quadrant representative;
                    // the raw labels of other orbit members do not share it.
                    let (nx, ny) = ((h - 1) / 2, (k - 1) / 2);
                    if (nx + ny) % 2 == 0 {
                        OrbitClass::B2
                    } else {
                        OrbitClass::B3
                    }
                }
            }
        }
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Orbit of `v` under the eight group elements, in canonical order.
pub fn orbit_of(v: &ReciprocalVector) -> (OrbitClass, Vec<ReciprocalVector>) {
    let mut members: Vec<ReciprocalVector> =
        GroupElement::ALL.iter().map(|g| g.rotate(v)).collect();
    members.sort_by_key(|m| (m.norm_sq(), m.h, m.k, m.l));
    members.dedup();
    (OrbitClass::of(v), members)
}

/// Partition of a basis into orbits, each listed once in canonical order of
/// its first member.
pub fn orbits(basis: &Basis) -> Vec<(OrbitClass, Vec<ReciprocalVector>)> {
    let mut seen = vec![false; basis.len()];
    let mut out = Vec::new();
    for (i, v) in basis.vectors().iter().enumerate() {
        if seen[i] {
            continue;
        }
        let (class, members) = orbit_of(v);
        for m in &members {
            if let Some(j) = basis.index_of(m) {
                seen[j] = true;
            }
        }
        out.push((class, members));
    }
    out
}
