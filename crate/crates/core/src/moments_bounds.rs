//! Moments of Jacobi-sum families, the Erdős–Turán bound, and the explicit
//! discrepancy and moment bounds.
//!
//! With `u_j = G(chi_j)/sqrt(q)`, a normalized Jacobi sum is
//! `u_{j_1} ... u_{j_s} conj(u_rho)` where `rho = j_1 + ... + j_s`, so
//!
//! ```text
//! M^(n) = sum_{rho != 0} (f_1 * ... * f_s)[rho] conj(u_rho)^n,
//! f_i[j] = [j in A_i] u_j^n,
//! ```
//!
//! with `*` the cyclic convolution on `Z/(q-1)`. One product of spectra and one
//! inverse transform per `n`, instead of a sum over all tuples. Note that
//! `M^(n)` is also the power sum `sum z_i^n` of the family, which is what
//! the Erdős–Turán inequality consumes.
//!
//! The bound evaluators substitute into the stated closed forms. Factorials
//! and double factorials are exact integers first. Where a bound singles out
//! one or two of the subsets, the evaluator minimizes over the labeling,
//! since the family is symmetric in its slots.

use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;
use num_rational::Ratio;

use crate::characters::{CharSubset, MulChar};
use crate::dft;
use crate::discrepancy::{family_size, family_slots, gauss_phases};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exp_sums::{jacobi_via_gauss, GaussTable, KL_DFT_MAX_Q};

#[derive(Debug, Clone)]
pub struct MomentSpec {
    pub subsets: Vec<CharSubset>,
    pub k_extra: usize,
    pub n_max: u32,
}

/// `M^(1), ..., M^(n_max)` by cyclic convolution.
pub fn moments(gt: &GaussTable, spec: &MomentSpec) -> Result<Vec<Complex64>> {
    moments_with(gt, spec, Execution::default())
}

pub fn moments_with(gt: &GaussTable, spec: &MomentSpec, exec: Execution) -> Result<Vec<Complex64>> {
    let slots = family_slots(gt.q, &spec.subsets, spec.k_extra)?;
    moments_of_slots(gt, &slots, spec.n_max, exec)
}

pub fn moments_of_slots(gt: &GaussTable, slots: &[Vec<u32>], n_max: u32, exec: Execution) -> Result<Vec<Complex64>> {
    if n_max == 0 {
        return Err(Error::DomainError("n_max must be >= 1".into()));
    }
    if gt.q > KL_DFT_MAX_Q {
        return Err(Error::PrecisionCapExceeded(format!("moment convolution limited to q <= {KL_DFT_MAX_Q}")));
    }
    let phases = gauss_phases(gt);
    let m = gt.units() as usize;
    // Identical slots (the appended copies of all nontrivial characters)
    // share one spectrum.
    let mut distinct: Vec<(&Vec<u32>, u32)> = Vec::new();
    for s in slots {
        match distinct.iter_mut().find(|(d, _)| *d == s) {
            Some((_, c)) => *c += 1,
            None => distinct.push((s, 1)),
        }
    }
    let one_n = |n: u32| -> Complex64 {
        let mut spec = vec![Complex64::new(1.0, 0.0); m];
        for &(slot, times) in &distinct {
            let mut f = vec![Complex64::new(0.0, 0.0); m];
            for &j in slot.iter() {
                f[j as usize] = cis(n as f64 * phases[j as usize]);
            }
            for (acc, v) in spec.iter_mut().zip(dft::dft(&f)) {
                *acc *= v.powu(times);
            }
        }
        let conv = dft::idft(&spec);
        let mut total = Complex64::new(0.0, 0.0);
        for rho in 1..m {
            total += conv[rho] * cis(-(n as f64) * phases[rho]);
        }
        total
    };
    Ok(exec.map_range(1..n_max as usize + 1, |n| one_n(n as u32)))
}

fn cis(turns: f64) -> Complex64 {
    let t = std::f64::consts::TAU * turns.rem_euclid(1.0);
    Complex64::new(t.cos(), t.sin())
}

/// The same moments by enumerating every tuple. Oracle for small families.
pub fn moments_brute(gt: &GaussTable, slots: &[Vec<u32>], n_max: u32) -> Result<Vec<Complex64>> {
    let s = slots.len();
    let scale = (gt.q as f64).powf((s as f64 - 1.0) / 2.0);
    let mut out = vec![Complex64::new(0.0, 0.0); n_max as usize];
    let mut idx = vec![0usize; s];
    let m = gt.units() as u64;
    'outer: loop {
        let chis: Vec<MulChar> = idx.iter().zip(slots).map(|(&i, sl)| MulChar { j: sl[i] }).collect();
        if chis.iter().map(|c| c.j as u64).sum::<u64>() % m != 0 {
            let z = jacobi_via_gauss(gt, &chis)? / scale;
            let mut p = Complex64::new(1.0, 0.0);
            for v in out.iter_mut() {
                p *= z;
                *v += p;
            }
        }
        for t in 0..s {
            idx[t] += 1;
            if idx[t] < slots[t].len() {
                continue 'outer;
            }
            idx[t] = 0;
        }
        return Ok(out);
    }
}

/// Exact number of points of the family.
pub fn family_count(gt: &GaussTable, spec: &MomentSpec) -> Result<u128> {
    let slots = family_slots(gt.q, &spec.subsets, spec.k_extra)?;
    Ok(family_size(gt.units(), &slots))
}

/// `1/(K+1) + 3 sum_{n=1}^K S_n/(nN)` with `S_n = |sum_{i=1}^N z_i^n|`.
pub fn erdos_turan_bound(abs_moments: &[f64], n: u64, k: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::DomainError("Erdős–Turán bound needs N >= 1".into()));
    }
    if abs_moments.len() < k {
        return Err(Error::DomainError(format!("need {k} power sums, got {}", abs_moments.len())));
    }
    let nf = n as f64;
    let tail: f64 = abs_moments[..k].iter().enumerate().map(|(i, s)| s / ((i + 1) as f64 * nf)).sum();
    Ok(1.0 / (k as f64 + 1.0) + 3.0 * tail)
}

/// The best `K` in `1..=k_max` and its bound.
pub fn erdos_turan_best(abs_moments: &[f64], n: u64, k_max: usize) -> Result<(usize, f64)> {
    let mut best = (0, 1.0);
    for k in 1..=k_max.min(abs_moments.len()) {
        let b = erdos_turan_bound(abs_moments, n, k)?;
        if b < best.1 {
            best = (k, b);
        }
    }
    Ok(best)
}

fn factorial(n: u32) -> f64 {
    (1..=n as u128).product::<u128>() as f64
}

fn double_factorial(n: u32) -> f64 {
    (1..=n as u128).rev().step_by(2).product::<u128>() as f64
}

fn check_size(q: u32, a: u64) -> Result<()> {
    if a == 0 || a > q as u64 - 2 {
        return Err(Error::SizeOutOfRange { size: a as usize, max: q as usize - 2 });
    }
    Ok(())
}

fn check_sizes(q: u32, sizes: &[u64]) -> Result<()> {
    sizes.iter().try_for_each(|&a| check_size(q, a))
}

fn t1_one(q: f64, a1: f64, a2: f64) -> f64 {
    let ln = q.ln();
    let e1 = (2.0 * 6f64.powf(2.0 / 3.0) * a1.powf(-1.0 / 3.0) * q.powf(1.0 / 6.0)
        + 0.5 * (a1 * a2).powf(-0.5) * q.sqrt() * ln)
        * (1.0 + q.powf(-0.5) / 100.0);
    let e2 = 4.5 * a1.powf(-2.0 / 7.0) * a2.powf(-1.0 / 7.0) * q.powf(3.0 / 14.0)
        + 1.1 * a1.powf(-0.5) * a2.powf(-0.25) * q.sqrt() * ln;
    e1.min(e2)
}

/// Discrepancy bound for `m >= 2` slots with the two distinguished sizes.
pub fn rhs_theorem1(q: u32, a1: u64, a2: u64) -> Result<f64> {
    check_size(q, a1)?;
    check_size(q, a2)?;
    let (q, a1, a2) = (q as f64, a1 as f64, a2 as f64);
    Ok(t1_one(q, a1, a2).min(t1_one(q, a2, a1)))
}

/// [`rhs_theorem1`] minimized over every pair of slots.
pub fn rhs_theorem1_family(q: u32, sizes: &[u64]) -> Result<f64> {
    if sizes.len() < 2 {
        return Err(Error::DomainError("needs at least two slots".into()));
    }
    let mut best = f64::INFINITY;
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            best = best.min(rhs_theorem1(q, sizes[i], sizes[j])?);
        }
    }
    Ok(best)
}

/// Bound on `D_k(A_1, ..., A_m)` for `k >= 2` appended full slots.
pub fn rhs_theorem2(q: u32, k: u32, m: usize, a1: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::DomainError(format!("this form needs k >= 2, got {k}")));
    }
    if m == 0 {
        return Err(Error::DomainError("needs m >= 1".into()));
    }
    check_size(q, a1)?;
    let (qf, a) = (q as f64, a1 as f64);
    let kf = k as f64;
    let ln = qf.ln();
    let e1 = 3.0 * qf.powf(-kf / (2.0 * (kf + 1.0))) * (1.0 + factorial(k + 1) * qf.powf(-1.0 / 6.0) * ln);
    let e2 = 3.0
        * a.powf(-1.0 / (2.0 * kf + 3.0))
        * qf.powf(-(2.0 * kf - 1.0) / (2.0 * (2.0 * kf + 3.0)))
        * (1.0 + qf.powf(-2.0 / 7.0) * (7f64.powi(k as i32) + double_factorial(2 * k + 1).sqrt() * ln));
    Ok(e1.min(e2) / (1.0 - 2.0 / qf).powi(k as i32))
}

/// Bound on `D_1(A_1, ..., A_m)`; the `A_1` term drops out when `m = 1`.
pub fn rhs_theorem2_k1(q: u32, m: usize, a1: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::DomainError("needs m >= 1".into()));
    }
    check_size(q, a1)?;
    let qf = q as f64;
    let delta = if m > 1 { 1.0 } else { 0.0 };
    Ok((2.0 * 3f64.sqrt() * qf.powf(-0.25) + 0.75 * delta / a1 as f64 * (2.0 + qf.ln())) * (1.0 + 2.0 * qf.powf(-0.5)))
}

/// The `D_1` bound valid for `A_1 >= q^{3/4}`.
pub fn rhs_theorem2_k1_large(q: u32, a1: u64) -> Result<f64> {
    check_size(q, a1)?;
    if (a1 as u128).pow(4) < (q as u128).pow(3) {
        return Err(Error::DomainError(format!("needs A_1 >= q^(3/4), got A_1={a1}, q={q}")));
    }
    let (qf, a) = (q as f64, a1 as f64);
    Ok(3.0 * a.powf(-0.2) * qf.powf(-0.1) * (1.0 + qf.powf(-0.125) * qf.ln()))
}

/// Bound on `D_k`, the family of `k >= 2` full slots.
pub fn rhs_theorem3(q: u32, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::DomainError(format!("needs k >= 2, got {k}")));
    }
    let (qf, kf) = (q as f64, k as f64);
    Ok(3.0 * qf.powf(-kf / (2.0 * (kf + 1.0))) * (1.0 + factorial(k + 1) * qf.powf(-1.0 / 6.0) * qf.ln())
        / (1.0 - 2.0 / qf).powi(k as i32))
}

/// Bound on `|M^(n)(A_1, ..., A_m)|`, minimized over the choice of the two
/// distinguished slots.
pub fn rhs_moment1(q: u32, n: u32, sizes: &[u64]) -> Result<f64> {
    if sizes.len() < 2 || n == 0 {
        return Err(Error::DomainError("needs m >= 2 and n >= 1".into()));
    }
    check_sizes(q, sizes)?;
    let qf = q as f64;
    let nf = n as f64;
    let mut best = f64::INFINITY;
    for i in 0..sizes.len() {
        for j in 0..sizes.len() {
            if i == j {
                continue;
            }
            let (a1, a2) = (sizes[i] as f64, sizes[j] as f64);
            let rest: f64 =
                sizes.iter().enumerate().filter(|&(t, _)| t != i && t != j).map(|(_, &a)| a as f64).product();
            let tail = if n == 1 {
                qf.sqrt() * (1.0 + 1.0 / (2.0 * qf))
            } else {
                let x = (qf + (nf - 1.0) * a2 * qf.sqrt()).sqrt();
                let y = a2.powf(0.25) * (4.0 * qf * qf + (nf.powi(3) + 3.0) * qf.powf(1.5)).powf(0.25);
                x.min(y)
            };
            best = best.min((a1 * a2).sqrt() * rest * tail);
        }
    }
    Ok(best)
}

/// Bound on `|M^(n)_k(A_1, ..., A_m)|` for `k >= 1` appended full slots, with
/// `r_k1 = R^{k,1}` and `r_k1k1 = R^{k+1,k+1}` for the group of `(p, n)`.
/// Minimized over which subset plays `A_1`.
pub fn rhs_m2(q: u32, n: u32, k: u32, sizes: &[u64], r_k1: u128, r_k1k1: u128) -> Result<f64> {
    if sizes.is_empty() || k == 0 {
        return Err(Error::DomainError("needs m >= 1 and k >= 1".into()));
    }
    check_sizes(q, sizes)?;
    let (qf, nf, kf) = (q as f64, n as f64, k as f64);
    let delta = if sizes.len() > 1 { 1.0 } else { 0.0 };
    let all: f64 = sizes.iter().map(|&a| a as f64).product();
    let head = (kf + 1.0) * all * qf.powf(kf - 1.0 - nf / 2.0);
    let mut best = f64::INFINITY;
    for i in 0..sizes.len() {
        let a1 = sizes[i] as f64;
        let rest: f64 = sizes.iter().enumerate().filter(|&(t, _)| t != i).map(|(_, &a)| a as f64).product();
        let x = a1 * nf.powi(k as i32) + delta * r_k1 as f64 * (qf.sqrt() + 1.0);
        let y = a1.sqrt() * qf.powf(0.25) * (nf.powi(2 * k as i32 + 1) + r_k1k1 as f64 * (qf.sqrt() + 1.0)).sqrt();
        best = best.min(head + rest * qf.powf(kf / 2.0) * x.min(y));
    }
    Ok(best)
}

/// Bound on `|M^(n)_k|`, the family of `k >= 2` full slots.
pub fn rhs_m3(q: u32, n: u32, k: u32, r_k1: u128) -> Result<f64> {
    if k < 2 {
        return Err(Error::DomainError(format!("needs k >= 2, got {k}")));
    }
    let (qf, nf, kf) = (q as f64, n as f64, k as f64);
    Ok((kf + 1.0) * qf.powf(kf - 1.0 - nf / 2.0)
        + qf.powf(kf / 2.0) * (nf.powi(k as i32) + r_k1 as f64 * (qf.sqrt() + 1.0)))
}

/// Ordered field arithmetic shared by the exact and floating evaluations of
/// the exponent functions.
pub trait Scalar:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn frac(num: i64, den: i64) -> Self;
}

impl Scalar for f64 {
    fn frac(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for Ratio<i64> {
    fn frac(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
}

fn in_unit<T: Scalar>(x: T) -> bool {
    x >= T::frac(0, 1) && x <= T::frac(1, 1)
}

/// Exponent `f(x, y)` of the discrepancy for subsets of size `q^x`, `q^y`.
pub fn f_exponent<T: Scalar>(x: T, y: T) -> Result<T> {
    if !in_unit(x) || !in_unit(y) {
        return Err(Error::DomainError("f is defined on [0,1]^2".into()));
    }
    let (x, y) = if x >= y { (x, y) } else { (y, x) };
    let c = T::frac;
    let v = if x + y <= c(1, 1) {
        c(0, 1)
    } else if x + c(3, 1) * y <= c(2, 1) {
        c(1, 2) * x + c(1, 2) * y - c(1, 2)
    } else if c(2, 1) * x + c(3, 1) * y <= c(4, 1) {
        c(1, 3) * x - c(1, 6)
    } else if c(2, 1) * x + y <= c(8, 3) {
        c(1, 2) * x + c(1, 4) * y - c(1, 2)
    } else {
        c(2, 7) * x + c(1, 7) * y - c(3, 14)
    };
    Ok(v)
}

/// Exponent `g_{k,m}(x)` of `D_k(A_1, ..., A_m)` for `#A_1 = q^x`.
pub fn g_exponent<T: Scalar>(k: u32, m: u32, x: T) -> Result<T> {
    if k == 0 || m == 0 {
        return Err(Error::DomainError("g needs k, m >= 1".into()));
    }
    if !in_unit(x) {
        return Err(Error::DomainError("g is defined on [0,1]".into()));
    }
    let c = T::frac;
    let k = k as i64;
    if k == 1 && m > 1 {
        return Ok(if x <= c(1, 4) {
            x
        } else if x <= c(3, 4) {
            c(1, 4)
        } else {
            c(1, 5) * x + c(1, 10)
        });
    }
    Ok(if x <= c(2 * k + 1, 2 * k + 2) {
        c(k, 2 * (k + 1))
    } else {
        c(1, 2 * k + 3) * x + c(2 * k - 1, 2 * (2 * k + 3))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::Characters;
    use crate::discrepancy::{discrepancy_exact, jacobi_sequence};
    use crate::exp_sums::gauss_all;

    type Q = Ratio<i64>;

    fn r(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn moments_match_brute_force() {
        let gt = gauss_all(&Characters::for_order(7).unwrap());
        let full = CharSubset::full(7);
        for k_extra in 0..=1 {
            let spec = MomentSpec { subsets: vec![full.clone(), full.clone()], k_extra, n_max: 3 };
            let fast = moments(&gt, &spec).unwrap();
            let slots = family_slots(7, &spec.subsets, k_extra).unwrap();
            let slow = moments_brute(&gt, &slots, 3).unwrap();
            let n = family_count(&gt, &spec).unwrap() as f64;
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-8, "{a} vs {b}");
                assert!(a.norm() <= n + 1e-9);
            }
        }
        let gt = gauss_all(&Characters::for_order(25).unwrap());
        let a = CharSubset::explicit(25, &[1, 5, 7, 11, 20]).unwrap();
        let b = CharSubset::explicit(25, &[2, 3, 12]).unwrap();
        let spec = MomentSpec { subsets: vec![a, b.clone(), b], k_extra: 1, n_max: 4 };
        let fast = moments(&gt, &spec).unwrap();
        let slow = moments_brute(&gt, &family_slots(25, &spec.subsets, 1).unwrap(), 4).unwrap();
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).norm() <= 1e-7 * y.norm().max(1.0));
        }
        let seq = moments_with(&gt, &spec, Execution::Sequential).unwrap();
        assert_eq!(seq, fast);
    }

    #[test]
    fn erdos_turan_examples() {
        assert_eq!(erdos_turan_bound(&[], 5, 0).unwrap(), 1.0);
        assert!((erdos_turan_bound(&[0.0; 9], 5, 9).unwrap() - 0.1).abs() < 1e-15);
        assert!(erdos_turan_bound(&[1.0], 0, 1).is_err());
        let gt = gauss_all(&Characters::for_order(7).unwrap());
        let full = CharSubset::full(7);
        let subsets = vec![full.clone(), full];
        let d = discrepancy_exact(&jacobi_sequence(&gt, &subsets, 0).unwrap()).d;
        let mom = moments(&gt, &MomentSpec { subsets, k_extra: 0, n_max: 5 }).unwrap();
        let abs: Vec<f64> = mom.iter().map(|z| z.norm()).collect();
        assert!(erdos_turan_bound(&abs, 20, 5).unwrap() >= d);
    }

    // Reference values from a 40-digit evaluation of the closed forms.
    #[test]
    fn pinned_bounds() {
        let pins = [
            (rhs_theorem1(101, 99, 99).unwrap(), 3.3138400268284405762),
            (rhs_theorem1(101, 10, 60).unwrap(), 4.5915935354745944939),
            (rhs_theorem1(10007, 5000, 3000).unwrap(), 1.9119177049946305726),
            (rhs_theorem2(101, 2, 2, 50).unwrap(), 9.2738237277626031316),
            (rhs_theorem2(12007, 3, 2, 9000).unwrap(), 2.4900155705709876732),
            (rhs_theorem2_k1(101, 2, 50).unwrap(), 1.4291572742379484438),
            (rhs_theorem2_k1(101, 1, 50).unwrap(), 1.3101835936893950183),
            (rhs_theorem2_k1_large(101, 99).unwrap(), 2.7095931822287135278),
            (rhs_theorem3(9, 2).unwrap(), 24.177007342455157123),
            (rhs_theorem3(101, 3).unwrap(), 29.53112942940071662),
            (rhs_moment1(101, 1, &[99, 50]).unwrap(), 710.57177855248904105),
            (rhs_moment1(101, 3, &[99, 50, 20]).unwrap(), 46795.890556564219248),
            (rhs_m2(101, 2, 1, &[50, 99], 1, 3).unwrap(), 101772.41148557309278),
            (rhs_m2(31, 3, 2, &[10], 0, 6).unwrap(), 2795.388159060803247),
            (rhs_m3(7, 2, 2, 0).unwrap(), 31.0),
            (rhs_m3(101, 4, 3, 1).unwrap(), 76182.433452658644624),
        ];
        for (i, (got, want)) in pins.iter().enumerate() {
            assert!((got - want).abs() <= 1e-12 * want, "pin {i}: {got} vs {want}");
        }
    }

    #[test]
    fn bound_shapes() {
        assert_eq!(rhs_theorem1(101, 7, 60).unwrap(), rhs_theorem1(101, 60, 7).unwrap());
        let t3 = rhs_theorem3(1_000_000_007, 2).unwrap();
        assert!(t3 > 0.0 && t3 > 3.0 * 1_000_000_007f64.powf(-1.0 / 3.0));
        let m1 = rhs_theorem2_k1(101, 1, 7).unwrap();
        assert!((m1 - 2.0 * 3f64.sqrt() * 101f64.powf(-0.25) * (1.0 + 2.0 / 101f64.sqrt())).abs() < 1e-14);
        assert!(rhs_theorem2_k1_large(101, 31).is_err());
        assert!(rhs_theorem2_k1_large(101, 32).is_ok());
        let want = (3.0 * 5.0f64).sqrt() * 101f64.sqrt() * (1.0 + 1.0 / 202.0);
        assert!(close(rhs_moment1(101, 1, &[3, 5]).unwrap(), want, 1e-14));
        assert!(rhs_theorem1(101, 0, 5).is_err());
        assert!(rhs_theorem1(101, 100, 5).is_err());
    }

    #[test]
    fn stated_exponent_values() {
        let cases = [
            ((r(0, 1), r(0, 1)), r(0, 1)),
            ((r(1, 1), r(0, 1)), r(0, 1)),
            ((r(1, 2), r(1, 2)), r(0, 1)),
            ((r(4, 5), r(4, 5)), r(1, 10)),
            ((r(1, 1), r(1, 3)), r(1, 6)),
            ((r(1, 1), r(2, 3)), r(1, 6)),
            ((r(8, 9), r(8, 9)), r(1, 6)),
            ((r(1, 1), r(1, 1)), r(3, 14)),
        ];
        for ((x, y), want) in cases {
            assert_eq!(f_exponent(x, y).unwrap(), want);
            assert_eq!(f_exponent(y, x).unwrap(), want);
        }
        assert_eq!(g_exponent(1, 2, r(1, 2)).unwrap(), r(1, 4));
        for k in 1..6 {
            for m in 1..4 {
                assert_eq!(g_exponent(k, m, r(1, 1)).unwrap(), r(2 * k as i64 + 1, 2 * (2 * k as i64 + 3)));
                let next0 = g_exponent(k + 1, m, r(0, 1)).unwrap();
                assert_eq!(next0, r(k as i64 + 1, 2 * (k as i64 + 2)));
                assert!(g_exponent(k, m, r(1, 1)).unwrap() < next0);
            }
        }
        assert!(f_exponent(1.5, 0.0).is_err());
        assert!(g_exponent(1, 1, -0.1).is_err());
    }

    #[test]
    fn exponent_grid_properties() {
        let n = 200;
        let at = |i: i64| r(i, n);
        let mut prev_row: Vec<Q> = Vec::new();
        for i in 0..=n {
            let mut row = Vec::with_capacity(n as usize + 1);
            for j in 0..=n {
                let v = f_exponent(at(i), at(j)).unwrap();
                assert!(v >= r(0, 1) && v <= r(3, 14));
                assert_eq!(v, f_exponent(at(j), at(i)).unwrap());
                if j > 0 {
                    assert!(v >= row[j as usize - 1]);
                }
                if i > 0 {
                    assert!(v >= prev_row[j as usize]);
                }
                row.push(v);
            }
            prev_row = row;
        }
        for m in 1..3 {
            let mut last = g_exponent(1, m, r(0, 1)).unwrap();
            for i in 1..=n {
                let g = g_exponent(1, m, at(i)).unwrap();
                assert!(g >= last);
                last = g;
                assert!(f_exponent(r(1, 1), at(i)).unwrap() <= g);
            }
        }
    }

    #[test]
    fn exponent_continuity() {
        // Each boundary line, approached from both sides in floating point.
        let h = 1e-13;
        let lines: [fn(f64) -> f64; 4] =
            [|x| 1.0 - x, |x| (2.0 - x) / 3.0, |x| (4.0 - 2.0 * x) / 3.0, |x| 8.0 / 3.0 - 2.0 * x];
        for line in lines {
            for i in 0..=1000 {
                let x = 0.5 + 0.5 * i as f64 / 1000.0;
                let y = line(x);
                if !(0.0..=x).contains(&y) || y + h > 1.0 || y - h < 0.0 {
                    continue;
                }
                let a = f_exponent(x, y - h).unwrap();
                let b = f_exponent(x, y + h).unwrap();
                assert!((a - b).abs() < 1e-12, "x={x} y={y}");
            }
        }
        for k in 1..6 {
            for m in 1..3 {
                let breaks: Vec<f64> = if k == 1 && m > 1 {
                    vec![0.25, 0.75]
                } else {
                    vec![(2.0 * k as f64 + 1.0) / (2.0 * k as f64 + 2.0)]
                };
                for b in breaks {
                    let lo = g_exponent(k, m, b - h).unwrap();
                    let hi = g_exponent(k, m, b + h).unwrap();
                    assert!((lo - hi).abs() < 1e-12);
                }
            }
        }
    }
}
