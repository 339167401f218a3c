//! Table-driven arithmetic in `F_q`, `q = p^r`.
//!
//! Elements are stored in discrete-log form: either zero or `g^e` for a fixed
//! generator `g`. Multiplication, inversion and powering are exponent
//! arithmetic mod `q - 1`; addition goes through the Zech logarithm table
//! `g^{Z(k)} = 1 + g^k`.
//!
//! Besides the log form every element has an *index* in `0..q`: the base-`p`
//! digits of the index are the coefficients of the element as a polynomial
//! in `F_p[x] / (f)`, lowest degree first. For `r = 1` the index is simply
//! the residue, so element `3` of `F_7` has index 3.
//!
//! Construction is deterministic: the modulus `f` is the monic irreducible
//! polynomial of degree `r` whose lower coefficients `(c_{r-1}, ..., c_0)` are
//! lexicographically smallest, and `g` is the generator of smallest index.

use crate::error::{Error, Result};

/// Upper bound on `q` accepted by [`FieldTable::build`].
pub const DEFAULT_FIELD_CAP: u64 = 1 << 24;

const NO_LOG: u32 = u32::MAX;

/// Deterministic primality for `u64` (Miller-Rabin with a fixed base set).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n` in ascending order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimePower {
    p: u32,
    r: u32,
    q: u32,
}

impl PrimePower {
    pub fn new(p: u64, r: u32) -> Result<Self> {
        Self::with_cap(p, r, DEFAULT_FIELD_CAP)
    }

    pub fn with_cap(p: u64, r: u32, cap: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if r == 0 {
            return Err(Error::DomainError("field degree must be at least 1".into()));
        }
        let mut q: u64 = 1;
        for _ in 0..r {
            q = q.saturating_mul(p);
            if q > cap {
                return Err(Error::FieldTooLarge { q, cap });
            }
        }
        if q < 3 {
            return Err(Error::FieldTooSmall(q));
        }
        Ok(PrimePower { p: p as u32, r, q: q as u32 })
    }

    /// Split a field order into `p^r`.
    pub fn from_order(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::NotPrimePower(q));
        }
        let factors = prime_factors(q);
        if factors.len() != 1 {
            return Err(Error::NotPrimePower(q));
        }
        let p = factors[0];
        let mut r = 0;
        let mut t = q;
        while t > 1 {
            t /= p;
            r += 1;
        }
        Self::new(p, r)
    }

    pub fn p(self) -> u32 {
        self.p
    }
    pub fn r(self) -> u32 {
        self.r
    }
    pub fn q(self) -> u32 {
        self.q
    }
}

/// An element of `F_q` in discrete-log form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldElem {
    Zero,
    /// `g^e` with `e` reduced mod `q - 1`.
    Pow(u32),
}

impl FieldElem {
    pub const ONE: FieldElem = FieldElem::Pow(0);

    pub fn is_zero(self) -> bool {
        self == FieldElem::Zero
    }

    pub fn exponent(self) -> Option<u32> {
        match self {
            FieldElem::Zero => None,
            FieldElem::Pow(e) => Some(e),
        }
    }
}

// Dense polynomials over F_p, coefficient i is the x^i term. Used only while
// constructing the tables.
mod poly {
    pub fn trim(a: &mut Vec<u64>) {
        while a.len() > 1 && *a.last().unwrap() == 0 {
            a.pop();
        }
    }

    pub fn inv_mod(a: u64, p: u64) -> u64 {
        let mut acc = 1u64;
        let mut b = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        acc
    }

    /// Remainder of `a` modulo `f` (leading coefficient of `f` nonzero).
    pub fn rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        trim(&mut a);
        let df = f.len() - 1;
        let lead_inv = inv_mod(f[df], p);
        while a.len() > df {
            let da = a.len() - 1;
            let c = a[da] * lead_inv % p;
            if c != 0 {
                for (i, &fc) in f.iter().enumerate() {
                    let k = da - df + i;
                    a[k] = (a[k] + p - c * fc % p) % p;
                }
            }
            a.pop();
        }
        if a.is_empty() {
            a.push(0);
        }
        trim(&mut a);
        a
    }

    pub fn mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        rem(&prod, f, p)
    }

    pub fn powmod(base: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem(base, f, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &b, f, p);
            }
            b = mulmod(&b, &b, f, p);
            e >>= 1;
        }
        acc
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut out: Vec<u64> = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    pub fn is_zero(a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !is_zero(&b) {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    /// Rabin's test for a monic `f` of degree `r`.
    pub fn is_irreducible(f: &[u64], p: u64) -> bool {
        let r = (f.len() - 1) as u32;
        let x = vec![0u64, 1];
        let frob = |k: u32| {
            let mut t = x.clone();
            for _ in 0..k {
                t = powmod(&t, p, f, p);
            }
            t
        };
        if !is_zero(&sub(&frob(r), &rem(&x, f, p), p)) {
            return false;
        }
        for d in super::prime_factors(r as u64) {
            let t = sub(&frob(r / d as u32), &x, p);
            let g = gcd(&t, f, p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

/// Precomputed arithmetic for one finite field. Immutable after
/// construction and cheap to share behind an `Arc`.
#[derive(Debug, Clone)]
pub struct FieldTable {
    pp: PrimePower,
    modulus: Vec<u32>,
    generator: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<u32>,
    trace: Vec<u32>,
}

impl FieldTable {
    pub fn build(p: u64, r: u32) -> Result<Self> {
        Self::from_prime_power(PrimePower::new(p, r)?)
    }

    pub fn build_with_cap(p: u64, r: u32, cap: u64) -> Result<Self> {
        Self::from_prime_power(PrimePower::with_cap(p, r, cap)?)
    }

    pub fn for_order(q: u64) -> Result<Self> {
        Self::from_prime_power(PrimePower::from_order(q)?)
    }

    pub fn from_prime_power(pp: PrimePower) -> Result<Self> {
        let p = pp.p as u64;
        let r = pp.r as usize;
        let q = pp.q as u64;
        let modulus = find_modulus(p, r).ok_or(Error::SearchExhausted { p: pp.p, r: pp.r })?;
        let units = q - 1;
        let factors = prime_factors(units);

        let to_poly = |idx: u64| -> Vec<u64> {
            let mut t = idx;
            let mut v = Vec::with_capacity(r);
            for _ in 0..r {
                v.push(t % p);
                t /= p;
            }
            v
        };
        let one = {
            let mut v = vec![0u64; r];
            v[0] = 1;
            v
        };
        let is_one = |v: &[u64]| v[0] == 1 && v[1..].iter().all(|&c| c == 0);
        let generator = (1..q)
            .find(|&idx| {
                let g = to_poly(idx);
                let mut gp = g.clone();
                gp.resize(r.max(1), 0);
                factors.iter().all(|&l| {
                    let mut t = poly::powmod(&gp, units / l, &modulus, p);
                    t.resize(r, 0);
                    !is_one(&t)
                })
            })
            .ok_or(Error::SearchExhausted { p: pp.p, r: pp.r })?;

        // exp table by repeated multiplication by g, carried in digit form.
        let g_digits = to_poly(generator);
        let g_terms: Vec<(usize, u64)> =
            g_digits.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)).collect();
        let mut exp = vec![0u32; units as usize];
        let mut log = vec![NO_LOG; q as usize];
        let mut cur = one.clone();
        let mut scratch = vec![0u64; 2 * r];
        for e in 0..units as usize {
            let idx = digits_to_index(&cur, p);
            exp[e] = idx as u32;
            log[idx as usize] = e as u32;
            scratch.iter_mut().for_each(|c| *c = 0);
            for (i, &c) in cur.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &(j, gc) in &g_terms {
                    scratch[i + j] = (scratch[i + j] + c * gc) % p;
                }
            }
            for deg in (r..2 * r).rev() {
                let c = scratch[deg];
                if c == 0 {
                    continue;
                }
                scratch[deg] = 0;
                // x^r = -(f_0 + ... + f_{r-1} x^{r-1})
                for (i, &fc) in modulus[..r].iter().enumerate() {
                    let k = deg - r + i;
                    scratch[k] = (scratch[k] + p - c * fc % p) % p;
                }
            }
            cur.copy_from_slice(&scratch[..r]);
        }
        if !is_one(&cur) || log.iter().skip(1).any(|&l| l == NO_LOG) {
            return Err(Error::SearchExhausted { p: pp.p, r: pp.r });
        }

        let zech = (0..units as usize)
            .map(|k| {
                let idx = exp[k] as u64;
                let c0 = idx % p;
                let shifted = idx - c0 + (c0 + 1) % p;
                if shifted == 0 {
                    NO_LOG
                } else {
                    log[shifted as usize]
                }
            })
            .collect();

        // Trace of the basis monomials x^i, then extend F_p-linearly.
        let basis_trace: Vec<u64> = (0..r)
            .map(|i| {
                let e = log[p.pow(i as u32) as usize] as u64;
                let mut acc = vec![0u64; r];
                let mut pk = 1u64;
                for _ in 0..r {
                    let idx = exp[((e * pk) % units) as usize] as u64;
                    for (d, a) in to_poly(idx).into_iter().zip(acc.iter_mut()) {
                        *a = (*a + d) % p;
                    }
                    pk = pk * p % units.max(1);
                }
                debug_assert!(acc[1..].iter().all(|&c| c == 0));
                acc[0]
            })
            .collect();
        let trace = (0..q)
            .map(|idx| {
                let s: u64 = to_poly(idx).iter().zip(&basis_trace).map(|(c, t)| c * t % p).sum();
                (s % p) as u32
            })
            .collect();

        Ok(FieldTable {
            pp,
            modulus: modulus.iter().map(|&c| c as u32).collect(),
            generator: generator as u32,
            exp,
            log,
            zech,
            trace,
        })
    }

    pub fn prime_power(&self) -> PrimePower {
        self.pp
    }
    pub fn p(&self) -> u32 {
        self.pp.p
    }
    pub fn r(&self) -> u32 {
        self.pp.r
    }
    pub fn q(&self) -> u32 {
        self.pp.q
    }
    /// `q - 1`, the order of `F_q^×`.
    pub fn units(&self) -> u32 {
        self.pp.q - 1
    }

    /// Coefficients `c_0..=c_r` of the monic modulus.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn generator_index(&self) -> u32 {
        self.generator
    }

    pub fn generator(&self) -> FieldElem {
        if self.units() == 1 {
            FieldElem::ONE
        } else {
            FieldElem::Pow(1)
        }
    }

    pub fn elem(&self, index: u32) -> FieldElem {
        assert!(index < self.q(), "element index {index} out of range");
        if index == 0 {
            FieldElem::Zero
        } else {
            FieldElem::Pow(self.log[index as usize])
        }
    }

    pub fn index(&self, x: FieldElem) -> u32 {
        match x {
            FieldElem::Zero => 0,
            FieldElem::Pow(e) => self.exp[e as usize],
        }
    }

    /// The prime-subfield element `n mod p`.
    pub fn from_int(&self, n: i64) -> FieldElem {
        self.elem(n.rem_euclid(self.p() as i64) as u32)
    }

    pub fn pow_of_generator(&self, e: i64) -> FieldElem {
        FieldElem::Pow(e.rem_euclid(self.units() as i64) as u32)
    }

    pub fn log(&self, x: FieldElem) -> Option<u32> {
        x.exponent()
    }

    /// Exponent `e` to element index of `g^e`.
    pub fn exp_index(&self, e: u32) -> u32 {
        self.exp[(e % self.units()) as usize]
    }

    /// `Z(k)` with `g^{Z(k)} = 1 + g^k`, or `None` when `1 + g^k = 0`.
    pub fn zech(&self, k: u32) -> Option<u32> {
        let z = self.zech[(k % self.units()) as usize];
        (z != NO_LOG).then_some(z)
    }

    pub fn mul(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        match (x, y) {
            (FieldElem::Pow(a), FieldElem::Pow(b)) => {
                FieldElem::Pow(((a as u64 + b as u64) % self.units() as u64) as u32)
            }
            _ => FieldElem::Zero,
        }
    }

    pub fn add(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        match (x, y) {
            (FieldElem::Zero, o) | (o, FieldElem::Zero) => o,
            (FieldElem::Pow(a), FieldElem::Pow(b)) => {
                let m = self.units();
                let d = (b + m - a) % m;
                match self.zech(d) {
                    None => FieldElem::Zero,
                    Some(z) => FieldElem::Pow(((a as u64 + z as u64) % m as u64) as u32),
                }
            }
        }
    }

    pub fn neg(&self, x: FieldElem) -> FieldElem {
        match x {
            FieldElem::Zero => FieldElem::Zero,
            FieldElem::Pow(e) if self.p() == 2 => FieldElem::Pow(e),
            FieldElem::Pow(e) => FieldElem::Pow((e + self.units() / 2) % self.units()),
        }
    }

    pub fn sub(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        self.add(x, self.neg(y))
    }

    pub fn inv(&self, x: FieldElem) -> Result<FieldElem> {
        match x {
            FieldElem::Zero => Err(Error::DivisionByZero),
            FieldElem::Pow(e) => Ok(FieldElem::Pow((self.units() - e) % self.units())),
        }
    }

    pub fn div(&self, x: FieldElem, y: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// `x^n`; `0^0 = 1`, and negative powers of zero are an error.
    pub fn pow(&self, x: FieldElem, n: i64) -> Result<FieldElem> {
        match x {
            FieldElem::Zero if n == 0 => Ok(FieldElem::ONE),
            FieldElem::Zero if n > 0 => Ok(FieldElem::Zero),
            FieldElem::Zero => Err(Error::DivisionByZero),
            FieldElem::Pow(e) => {
                let m = self.units() as i128;
                Ok(FieldElem::Pow(((e as i128 * n as i128).rem_euclid(m)) as u32))
            }
        }
    }

    /// `Tr_{F_q/F_p}(x)` as an integer in `0..p`.
    pub fn trace(&self, x: FieldElem) -> u32 {
        self.trace[self.index(x) as usize]
    }

    pub fn trace_of_index(&self, index: u32) -> u32 {
        self.trace[index as usize]
    }

    /// Index-level addition (digitwise mod `p`), used by additive convolutions.
    pub fn add_index(&self, a: u32, b: u32) -> u32 {
        let p = self.p();
        if self.r() == 1 {
            return (a + b) % p;
        }
        if p == 2 {
            return a ^ b;
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.r() {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    pub fn neg_index(&self, a: u32) -> u32 {
        let p = self.p();
        if self.r() == 1 {
            return (p - a % p) % p;
        }
        if p == 2 {
            return a;
        }
        let mut a = a;
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.r() {
            out += ((p - a % p) % p) * place;
            a /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    /// All nonzero elements in ascending exponent order.
    pub fn units_iter(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.units()).map(FieldElem::Pow)
    }

    /// Every element, zero first, then ascending exponent order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        std::iter::once(FieldElem::Zero).chain(self.units_iter())
    }
}

fn digits_to_index(d: &[u64], p: u64) -> u64 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Smallest monic irreducible of degree `r`, coefficients lowest degree first.
fn find_modulus(p: u64, r: usize) -> Option<Vec<u64>> {
    if r == 1 {
        return Some(vec![0, 1]);
    }
    let count = p.checked_pow(r as u32)?;
    // Enumerate (c_{r-1}, ..., c_0) lexicographically: c_{r-1} is the most
    // significant digit of `tail`.
    (0..count).find_map(|tail| {
        let mut f = vec![0u64; r + 1];
        let mut t = tail;
        for c in f[..r].iter_mut() {
            *c = t % p;
            t /= p;
        }
        f[r] = 1;
        (f[0] != 0 && poly::is_irreducible(&f, p)).then_some(f)
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn f125() -> &'static FieldTable {
        static F: OnceLock<FieldTable> = OnceLock::new();
        F.get_or_init(|| FieldTable::build(5, 3).unwrap())
    }

    proptest! {
        #[test]
        fn field_axioms(a in 0u32..125, b in 0u32..125, c in 0u32..125) {
            let f = f125();
            let (x, y, z) = (f.elem(a), f.elem(b), f.elem(c));
            prop_assert_eq!(f.add(f.add(x, y), z), f.add(x, f.add(y, z)));
            prop_assert_eq!(f.mul(f.mul(x, y), z), f.mul(x, f.mul(y, z)));
            prop_assert_eq!(f.add(x, y), f.add(y, x));
            prop_assert_eq!(f.mul(x, y), f.mul(y, x));
            prop_assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
        }

        #[test]
        fn trace_is_linear(a in 0u32..125, b in 0u32..125, c in 0u32..5) {
            let f = f125();
            let (x, y) = (f.elem(a), f.elem(b));
            let lhs = f.trace(f.add(f.mul(f.from_int(c as i64), x), y));
            prop_assert_eq!(lhs, (c * f.trace(x) + f.trace(y)) % 5);
        }
    }
}
