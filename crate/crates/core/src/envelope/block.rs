//! Lowest eigenpairs of the two-valley finite-difference operator.
//!
//! Unknowns are interleaved as `(F⁺ᵢ, F⁻ᵢ)`, which makes the operator block
//! tridiagonal with 2×2 Hermitian diagonal blocks
//! `[[2t + Vᵢ, V_c,ᵢ], [V_c,ᵢ*, 2t + Vᵢ]]` and `−t·I` off the diagonal.
//! Eigenvalues come from bisection on the block Sturm count (Sylvester
//! inertia of the block LDLᴴ factors), eigenvectors from shifted inverse
//! iteration with the same factorization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type Pair = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MAX_ITERATIONS: usize = 60;

/// Relative residual the returned eigenpairs must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// 2×2 Hermitian `[[a, b], [b*, d]]`.
#[derive(Debug, Clone, Copy)]
struct Herm2 {
    a: f64,
    d: f64,
    b: Complex64,
}

impl Herm2 {
    fn det(&self) -> f64 {
        self.a * self.d - self.b.norm_sqr()
    }

    /// Inverse, with a zero determinant nudged to `floor` so that an exact
    /// pivot breakdown acts like an infinitesimal shift.
    fn inverse(&self, floor: f64) -> Herm2 {
        let mut det = self.det();
        if det.abs() < floor {
            det = if det < 0.0 { -floor } else { floor };
        }
        Herm2 {
            a: self.d / det,
            d: self.a / det,
            b: -self.b / det,
        }
    }

    fn negative_eigenvalues(&self) -> usize {
        let det = self.det();
        if det < 0.0 {
            1
        } else if self.a + self.d < 0.0 {
            2
        } else {
            0
        }
    }

    fn mul(&self, x: &Pair) -> Pair {
        [
            x[0] * self.a + self.b * x[1],
            self.b.conj() * x[0] + x[1] * self.d,
        ]
    }
}

/// The operator itself, on interior grid points only (Dirichlet ends).
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    /// Hopping `t = ℏ²/(2 m Δz²)`.
    pub t: f64,
    /// Intravalley potential `Vᵢ` (eV).
    pub potential: Vec<f64>,
    /// Intervalley coupling `V_c,ᵢ` (eV), entering the `(+, −)` entry.
    pub coupling: Vec<Complex64>,
}

impl BlockTridiagonal {
    pub fn new(t: f64, potential: Vec<f64>, coupling: Vec<Complex64>) -> Self {
        assert_eq!(potential.len(), coupling.len());
        Self {
            t,
            potential,
            coupling,
        }
    }

    /// Number of grid points (half the dimension).
    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    fn block(&self, i: usize, sigma: f64) -> Herm2 {
        let diag = 2.0 * self.t + self.potential[i] - sigma;
        Herm2 {
            a: diag,
            d: diag,
            b: self.coupling[i],
        }
    }

    /// Gershgorin interval containing the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let hop = if n == 1 {
                0.0
            } else if i == 0 || i == n - 1 {
                self.t
            } else {
                2.0 * self.t
            };
            let centre = 2.0 * self.t + self.potential[i];
            let radius = hop + self.coupling[i].norm();
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        (lo, hi)
    }

    /// Scale used for relative tolerances: the largest Gershgorin bound.
    pub fn norm_estimate(&self) -> f64 {
        let (lo, hi) = self.spectral_bounds();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    fn pivot_floor(&self) -> f64 {
        let s = self.norm_estimate();
        (f64::EPSILON * s) * (f64::EPSILON * s)
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let floor = self.pivot_floor();
        let t2 = self.t * self.t;
        let mut count = 0;
        let mut prev_inv: Option<Herm2> = None;
        for i in 0..self.len() {
            let mut d = self.block(i, sigma);
            if let Some(p) = prev_inv {
                d.a -= t2 * p.a;
                d.d -= t2 * p.d;
                d.b -= p.b * t2;
            }
            count += d.negative_eigenvalues();
            prev_inv = Some(d.inverse(floor));
        }
        count
    }

    /// The `k`-th eigenvalue (zero-based) by bisection to working precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.spectral_bounds();
        let pad = 1e-12 * self.norm_estimate();
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `H x`.
    pub fn apply(&self, x: &[Pair]) -> Vec<Pair> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.block(i, 0.0).mul(&x[i]);
                for j in [i.wrapping_sub(1), i + 1] {
                    if j < n {
                        y[0] -= x[j][0] * self.t;
                        y[1] -= x[j][1] * self.t;
                    }
                }
                y
            })
            .collect()
    }

    /// Solves `(H − σ) x = b` by block Gaussian elimination.
    pub fn solve_shifted(&self, sigma: f64, b: &[Pair]) -> Vec<Pair> {
        let n = self.len();
        let floor = self.pivot_floor();
        let t2 = self.t * self.t;
        let mut inv: Vec<Herm2> = Vec::with_capacity(n);
        let mut g: Vec<Pair> = Vec::with_capacity(n);
        for i in 0..n {
            let mut d = self.block(i, sigma);
            let mut gi = b[i];
            if i > 0 {
                let p = inv[i - 1];
                d.a -= t2 * p.a;
                d.d -= t2 * p.d;
                d.b -= p.b * t2;
                let carried = p.mul(&g[i - 1]);
                gi[0] += carried[0] * self.t;
                gi[1] += carried[1] * self.t;
            }
            inv.push(d.inverse(floor));
            g.push(gi);
        }
        let mut x = vec![[ZERO; 2]; n];
        for i in (0..n).rev() {
            let mut rhs = g[i];
            if i + 1 < n {
                rhs[0] += x[i + 1][0] * self.t;
                rhs[1] += x[i + 1][1] * self.t;
            }
            x[i] = inv[i].mul(&rhs);
        }
        x
    }

    /// Dense copy in the interleaved ordering, for tests and small problems.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.len();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let b = self.block(i, 0.0);
            h[(2 * i, 2 * i)] = Complex64::new(b.a, 0.0);
            h[(2 * i + 1, 2 * i + 1)] = Complex64::new(b.d, 0.0);
            h[(2 * i, 2 * i + 1)] = b.b;
            h[(2 * i + 1, 2 * i)] = b.b.conj();
            if i + 1 < n {
                for c in 0..2 {
                    h[(2 * i + c, 2 * i + 2 + c)] = Complex64::new(-self.t, 0.0);
                    h[(2 * i + 2 + c, 2 * i + c)] = Complex64::new(-self.t, 0.0);
                }
            }
        }
        h
    }

    /// Two lowest eigenpairs, vectors normalized in the Euclidean norm.
    pub fn lowest_pair(&self) -> Result<Doublet> {
        if self.len() < 2 {
            return Err(Error::Eigensolver("need at least two grid points".into()));
        }
        let e = [self.eigenvalue(0), self.eigenvalue(1), self.eigenvalue(2)];
        let scale = self.norm_estimate();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let vectors = if e[1] - e[0] <= 0.1 * (e[2] - e[1]) {
            self.subspace_iteration(0.5 * (e[0] + e[1]), &mut rng)
        } else {
            let v0 = self.inverse_iteration(e[0], &mut rng);
            let mut v1 = self.inverse_iteration(e[1], &mut rng);
            let overlap = dot(&v0, &v1);
            axpy(&mut v1, -overlap, &v0);
            normalize(&mut v1);
            [v0, v1]
        };
        let mut residuals = [0.0; 2];
        for (k, v) in vectors.iter().enumerate() {
            residuals[k] = residual(self, v, e[k]);
            if !(residuals[k] <= RESIDUAL_TOL * scale) {
                return Err(Error::Eigensolver(format!(
                    "eigenpair {k} residual {:e} exceeds {:e}",
                    residuals[k],
                    RESIDUAL_TOL * scale
                )));
            }
        }
        let [v0, v1] = vectors;
        Ok(Doublet {
            energies: [e[0], e[1]],
            vectors: [v0, v1],
            residuals,
            next: e[2],
        })
    }

    fn inverse_iteration(&self, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Pair> {
        let mut v = random_vector(self.len(), rng);
        let tol = 0.1 * RESIDUAL_TOL * self.norm_estimate();
        for _ in 0..MAX_ITERATIONS {
            v = self.solve_shifted(sigma, &v);
            normalize(&mut v);
            if residual(self, &v, rayleigh(self, &v)) <= tol {
                break;
            }
        }
        v
    }

    /// Block inverse iteration on a two-dimensional subspace followed by a
    /// Rayleigh–Ritz rotation; handles exact and near degeneracy.
    fn subspace_iteration(&self, sigma: f64, rng: &mut ChaCha8Rng) -> [Vec<Pair>; 2] {
        let n = self.len();
        let mut x = [random_vector(n, rng), random_vector(n, rng)];
        let tol = 0.1 * RESIDUAL_TOL * self.norm_estimate();
        for _ in 0..MAX_ITERATIONS {
            x = [self.solve_shifted(sigma, &x[0]), self.solve_shifted(sigma, &x[1])];
            orthonormalize(&mut x);
            x = self.ritz(&x).1;
            let worst = x
                .iter()
                .map(|v| residual(self, v, rayleigh(self, v)))
                .fold(0.0, f64::max);
            if worst <= tol {
                break;
            }
        }
        x
    }

    /// Rayleigh–Ritz on an orthonormal pair: Ritz values and rotated vectors
    /// in ascending order.
    fn ritz(&self, x: &[Vec<Pair>; 2]) -> ([f64; 2], [Vec<Pair>; 2]) {
        let h0 = self.apply(&x[0]);
        let h1 = self.apply(&x[1]);
        let a = dot(&x[0], &h0).re;
        let d = dot(&x[1], &h1).re;
        let b = dot(&x[0], &h1);
        let (vals, rot) = eigh2(a, d, b);
        let combine = |c0: Complex64, c1: Complex64| -> Vec<Pair> {
            x[0].iter()
                .zip(&x[1])
                .map(|(p, q)| [p[0] * c0 + q[0] * c1, p[1] * c0 + q[1] * c1])
                .collect()
        };
        let mut v0 = combine(rot[0][0], rot[0][1]);
        let mut v1 = combine(rot[1][0], rot[1][1]);
        normalize(&mut v0);
        normalize(&mut v1);
        (vals, [v0, v1])
    }
}

/// Two lowest eigenpairs plus the third eigenvalue.
#[derive(Debug, Clone)]
pub struct Doublet {
    pub energies: [f64; 2],
    pub vectors: [Vec<Pair>; 2],
    pub residuals: [f64; 2],
    pub next: f64,
}

/// Eigen-decomposition of `[[a, b], [b*, d]]`: ascending values and the
/// coefficient vectors (rows).
fn eigh2(a: f64, d: f64, b: Complex64) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let vals = [mean - r, mean + r];
    if b.norm() == 0.0 {
        let one = Complex64::new(1.0, 0.0);
        return if a <= d {
            (vals, [[one, ZERO], [ZERO, one]])
        } else {
            (vals, [[ZERO, one], [one, ZERO]])
        };
    }
    // lower eigenvector from whichever row avoids cancellation; the upper
    // one is its orthogonal complement
    let (u, v) = if half >= 0.0 {
        (b, Complex64::new(-half - r, 0.0))
    } else {
        (Complex64::new(half - r, 0.0), b.conj())
    };
    let norm = (u.norm_sqr() + v.norm_sqr()).sqrt();
    let (u, v) = (u / norm, v / norm);
    (vals, [[u, v], [-v.conj(), u.conj()]])
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<Pair> {
    let mut v: Vec<Pair> = (0..n)
        .map(|_| {
            [
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ]
        })
        .collect();
    normalize(&mut v);
    v
}

/// `⟨x, y⟩ = Σ x* y`.
fn dot(x: &[Pair], y: &[Pair]) -> Complex64 {
    x.iter()
        .zip(y)
        .map(|(p, q)| p[0].conj() * q[0] + p[1].conj() * q[1])
        .sum()
}

fn axpy(y: &mut [Pair], alpha: Complex64, x: &[Pair]) {
    for (p, q) in y.iter_mut().zip(x) {
        p[0] += alpha * q[0];
        p[1] += alpha * q[1];
    }
}

fn normalize(v: &mut [Pair]) {
    let n = dot(v, v).re.sqrt();
    for p in v.iter_mut() {
        p[0] /= n;
        p[1] /= n;
    }
}

fn orthonormalize(x: &mut [Vec<Pair>; 2]) {
    normalize(&mut x[0]);
    let overlap = dot(&x[0], &x[1]);
    let (first, second) = x.split_at_mut(1);
    axpy(&mut second[0], -overlap, &first[0]);
    normalize(&mut second[0]);
}

fn rayleigh(h: &BlockTridiagonal, v: &[Pair]) -> f64 {
    dot(v, &h.apply(v)).re
}

/// `‖H v − λ v‖` for a unit vector `v`.
pub(crate) fn residual(h: &BlockTridiagonal, v: &[Pair], lambda: f64) -> f64 {
    h.apply(v)
        .iter()
        .zip(v)
        .map(|(hv, x)| (hv[0] - x[0] * lambda).norm_sqr() + (hv[1] - x[1] * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
