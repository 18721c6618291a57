//! Sign realizations for the mixed Si–Ge cells of the extended virtual
//! crystal.
//!
//! A mixed cell contributes `2 V̄_G cos(G·r₀/2) ± i δV_G sin(G·r₀/2)` to
//! `U_G`, the sign recording which site holds the Si atom. A realization
//! assigns one sign to every pair `{G, −G}` of difference vectors that
//! carries a sine term, so `U_{−G} = U_G*` and the Hamiltonian stays
//! Hermitian.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eighth_turn;
use crate::crystal_basis::{Basis, ReciprocalVector};

/// Strategy for drawing the sign vector of one realization.
pub trait SignModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// One `±1` per pair, in the canonical pair order.
    fn draw(&self, n_pairs: usize, rng: &mut ChaCha8Rng) -> Vec<i8>;
}

/// Independent sign per `{G, −G}` pair, with exactly as many plus as minus
/// signs (one extra of either when the pair count is odd).
#[derive(Debug, Clone, Copy, Default)]
pub struct PairSigns;

impl SignModel for PairSigns {
    fn name(&self) -> &'static str {
        "pair"
    }

    fn draw(&self, n_pairs: usize, rng: &mut ChaCha8Rng) -> Vec<i8> {
        balanced_signs(n_pairs, rng)
    }
}

/// A single sign shared by every pair: the whole crystal swaps its Si and
/// Ge sites at once. Used to probe sensitivity to the sign model.
#[derive(Debug, Clone, Copy, Default)]
pub struct SiteSwap;

impl SignModel for SiteSwap {
    fn name(&self) -> &'static str {
        "site-swap"
    }

    fn draw(&self, n_pairs: usize, rng: &mut ChaCha8Rng) -> Vec<i8> {
        let s = if rng.gen::<bool>() { 1 } else { -1 };
        vec![s; n_pairs]
    }
}

/// Stratified draw: half the entries `+1`, half `−1`, shuffled.
pub fn balanced_signs(n: usize, rng: &mut ChaCha8Rng) -> Vec<i8> {
    let plus = if n % 2 == 1 && rng.gen::<bool>() {
        n / 2 + 1
    } else {
        n / 2
    };
    let mut signs: Vec<i8> = (0..n).map(|i| if i < plus { 1 } else { -1 }).collect();
    signs.shuffle(rng);
    signs
}

/// Sign models by name.
#[derive(Debug, Clone)]
pub struct SignModelRegistry {
    models: BTreeMap<&'static str, Arc<dyn SignModel>>,
}

impl SignModelRegistry {
    pub fn empty() -> Self {
        Self {
            models: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, model: Arc<dyn SignModel>) {
        self.models.insert(model.name(), model);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn SignModel>> {
        self.models.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.models.keys().copied()
    }
}

impl Default for SignModelRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(PairSigns));
        r.register(Arc::new(SiteSwap));
        r
    }
}

/// Representative of `{G, −G}`: the lexicographically larger member.
fn canonical(g: &ReciprocalVector) -> ReciprocalVector {
    let n = g.neg();
    if (g.h, g.k, g.l) >= (n.h, n.k, n.l) {
        *g
    } else {
        n
    }
}

/// Difference-vector pairs of `basis` whose mixed-cell term has a nonzero
/// sine part, in canonical order.
pub fn sine_pairs(basis: &Basis) -> Vec<ReciprocalVector> {
    let vs = basis.vectors();
    let mut pairs: Vec<ReciprocalVector> = Vec::new();
    for a in vs {
        for b in vs {
            let g = a.sub(b);
            let on_support = matches!(g.norm_sq(), 3 | 8 | 11);
            if on_support && eighth_turn(g.index_sum()).1 != 0.0 {
                pairs.push(canonical(&g));
            }
        }
    }
    pairs.sort_by_key(|v| (v.norm_sq(), v.h, v.k, v.l));
    pairs.dedup();
    pairs
}

/// One draw of the mixed-cell signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    /// `(representative of {G, −G}, sign)` in canonical order.
    pub signs: Vec<(ReciprocalVector, i8)>,
    pub seed: u64,
    pub index: u64,
}

impl DisorderRealization {
    /// Realization number `index` of an ensemble; its generator is seeded
    /// with `seed + index` so draws do not depend on evaluation order.
    pub fn draw(model: &dyn SignModel, basis: &Basis, seed: u64, index: u64) -> Self {
        let pairs = sine_pairs(basis);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
        let signs = model.draw(pairs.len(), &mut rng);
        Self {
            signs: pairs.into_iter().zip(signs).collect(),
            seed,
            index,
        }
    }

    pub fn from_signs(signs: Vec<(ReciprocalVector, i8)>) -> Self {
        let mut signs: Vec<_> = signs.into_iter().map(|(g, s)| (canonical(&g), s)).collect();
        signs.sort_by_key(|(v, _)| (v.norm_sq(), v.h, v.k, v.l));
        Self {
            signs,
            seed: 0,
            index: 0,
        }
    }

    /// Sign attached to `G` (shared with `−G`); `+1` for vectors with no
    /// sine term.
    pub fn sign(&self, g: &ReciprocalVector) -> i8 {
        let key = canonical(g);
        self.signs
            .binary_search_by_key(&(key.norm_sq(), key.h, key.k, key.l), |(v, _)| {
                (v.norm_sq(), v.h, v.k, v.l)
            })
            .map(|i| self.signs[i].1)
            .unwrap_or(1)
    }

    pub fn balance(&self) -> i64 {
        self.signs.iter().map(|(_, s)| *s as i64).sum()
    }
}
