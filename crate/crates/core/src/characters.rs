//! Additive and multiplicative characters of `F_q`.
//!
//! Additive characters are `psi_b(x) = e^{2 pi i Tr(bx)/p}`; as `b` runs over
//! `F_q^×` these are exactly the nontrivial ones, and the fixed character
//! used downstream is `psi_1`. Multiplicative characters are indexed by
//! their discrete-log frequency `j mod q-1`: `chi_j(g^k) = e^{2 pi i jk/(q-1)}`.
//! Products and conjugates are index arithmetic.
//!
//! Values come from precomputed root-of-unity tables of orders `p` and
//! `q - 1`, so evaluation never calls trig functions.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::finite_field::{FieldElem, FieldTable};

/// Accumulated-rounding tolerance for a sum of `terms` values of modulus at
/// most `max_mag`: `64 * eps * terms * max_mag`.
pub fn tau(terms: usize, max_mag: f64) -> f64 {
    64.0 * f64::EPSILON * terms.max(1) as f64 * max_mag
}

/// `e^{2 pi i k / n}` for `k in 0..n`, computed from exact reduced fractions.
pub fn roots_of_unity(n: u32) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AddChar {
    pub b: FieldElem,
}

impl AddChar {
    /// The fixed nontrivial character `psi_1`.
    pub const PSI: AddChar = AddChar { b: FieldElem::ONE };

    pub fn is_trivial(self) -> bool {
        self.b.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MulChar {
    pub j: u32,
}

impl MulChar {
    pub const TRIVIAL: MulChar = MulChar { j: 0 };

    pub fn is_trivial(self) -> bool {
        self.j == 0
    }
}

/// A set of nontrivial multiplicative characters, stored as sorted indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CharSubset {
    indices: Vec<u32>,
}

impl CharSubset {
    /// Every nontrivial character `1..q-1`.
    pub fn full(q: u32) -> Self {
        CharSubset { indices: (1..q - 1).collect() }
    }

    /// Validate and normalize an explicit index list (residues mod `q-1`).
    pub fn explicit(q: u32, indices: &[i64]) -> Result<Self> {
        let m = (q - 1) as i64;
        let mut v: Vec<u32> = indices.iter().map(|&i| i.rem_euclid(m) as u32).collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::SizeOutOfRange { size: 0, max: (q - 2) as usize });
        }
        if v[0] == 0 {
            return Err(Error::TrivialCharacter);
        }
        Ok(CharSubset { indices: v })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: u32) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

/// Uniform sample of `size` distinct nontrivial characters of `F_q`.
///
/// The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
/// `seed_from_u64(seed)` with word stream `stream`, and the sample is drawn
/// by `rand::seq::index::sample` over `0..q-2` and shifted by one. Identical
/// `(q, size, seed, stream)` give identical subsets.
pub fn random_subset_stream(q: u32, size: usize, seed: u64, stream: u64) -> Result<CharSubset> {
    let max = q.saturating_sub(2) as usize;
    if size == 0 || size > max {
        return Err(Error::SizeOutOfRange { size, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut v: Vec<u32> = index::sample(&mut rng, max, size).into_iter().map(|i| i as u32 + 1).collect();
    v.sort_unstable();
    Ok(CharSubset { indices: v })
}

pub fn random_subset(q: u32, size: usize, seed: u64) -> Result<CharSubset> {
    random_subset_stream(q, size, seed, 0)
}

/// Character tables for one field.
#[derive(Debug, Clone)]
pub struct Characters {
    field: Arc<FieldTable>,
    add_roots: Vec<Complex64>,
    mul_roots: Vec<Complex64>,
}

impl Characters {
    pub fn new(field: Arc<FieldTable>) -> Self {
        let add_roots = roots_of_unity(field.p());
        let mul_roots = roots_of_unity(field.units());
        Characters { field, add_roots, mul_roots }
    }

    pub fn for_order(q: u64) -> Result<Self> {
        Ok(Self::new(Arc::new(FieldTable::for_order(q)?)))
    }

    pub fn field(&self) -> &FieldTable {
        &self.field
    }

    pub fn field_arc(&self) -> Arc<FieldTable> {
        Arc::clone(&self.field)
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// `e^{2 pi i t/(q-1)}`, `t` taken mod `q - 1`.
    pub fn unit_root(&self, t: u64) -> Complex64 {
        self.mul_roots[(t % self.mul_roots.len() as u64) as usize]
    }

    /// `e^{2 pi i t/p}`.
    pub fn prime_root(&self, t: u32) -> Complex64 {
        self.add_roots[(t % self.field.p()) as usize]
    }

    pub fn add_char_eval(&self, psi: AddChar, x: FieldElem) -> Complex64 {
        let t = self.field.trace(self.field.mul(psi.b, x));
        self.add_roots[t as usize]
    }

    pub fn mul_char_eval(&self, chi: MulChar, x: FieldElem) -> Result<Complex64> {
        match x {
            FieldElem::Zero => Err(Error::EvalAtZero),
            FieldElem::Pow(e) => Ok(self.unit_root(chi.j as u64 * e as u64)),
        }
    }

    pub fn mul_char(&self, j: i64) -> MulChar {
        MulChar { j: j.rem_euclid(self.field.units() as i64) as u32 }
    }

    pub fn product(&self, chars: &[MulChar]) -> MulChar {
        let m = self.field.units() as u64;
        MulChar { j: (chars.iter().map(|c| c.j as u64).sum::<u64>() % m) as u32 }
    }

    pub fn conj(&self, chi: MulChar) -> MulChar {
        self.mul_char(-(chi.j as i64))
    }

    /// Nontrivial multiplicative characters, ascending index (`q - 2` of them).
    pub fn enumerate_x(&self) -> Vec<MulChar> {
        (1..self.field.units()).map(|j| MulChar { j }).collect()
    }

    /// All multiplicative characters (`q - 1`).
    pub fn enumerate_xbar(&self) -> Vec<MulChar> {
        (0..self.field.units()).map(|j| MulChar { j }).collect()
    }

    /// Nontrivial additive characters `psi_b`, `b = g^0, g^1, ...` (`q - 1`).
    pub fn enumerate_psi(&self) -> Vec<AddChar> {
        self.field.units_iter().map(|b| AddChar { b }).collect()
    }

    /// `k -> psi(g^k)` for the given additive character.
    pub fn add_char_on_units(&self, psi: AddChar) -> Vec<Complex64> {
        self.field.units_iter().map(|x| self.add_char_eval(psi, x)).collect()
    }
}
