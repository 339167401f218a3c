//! Gauss, Jacobi and Kloosterman sums, each along two routes.
//!
//! The transform routes are the production paths:
//!
//! * `G(chi_j) = sum_k psi(g^k) e^{2 pi i jk/(q-1)}`, one length `q - 1` DFT.
//! * `J(chi_1..chi_m) = q^{-1} G(chi_1)...G(chi_m) conj(G(chi_1...chi_m))`
//!   when every `chi_i` and the product are nontrivial.
//! * `Kl_n(g^t) = (q-1)^{-1} sum_j G(chi_j)^n e^{-2 pi i jt/(q-1)}`, the
//!   Fourier inversion of `G(chi)^n = sum_a Kl_n(a) chi(a)`.
//!
//! The direct routes (literal sums, additive convolution over `F_q`,
//! multiplicative convolution in log coordinates) serve as oracles.
//! Summation order is ascending index throughout, so results are bitwise
//! reproducible for a given build.

use num_complex::Complex64;

use crate::characters::{AddChar, Characters, MulChar};
use crate::dft;
use crate::error::{Error, Result};
use crate::finite_field::FieldElem;

/// Largest `n` for which `kloosterman_all` takes the transform route.
pub const KL_DFT_MAX_N: u32 = 6;
/// Largest `q` for which `kloosterman_all` takes the transform route.
pub const KL_DFT_MAX_Q: u32 = 100_000;

#[derive(Debug, Clone)]
pub struct GaussTable {
    pub q: u32,
    pub psi: AddChar,
    /// `values[j] = G(psi, chi_j)`.
    pub values: Vec<Complex64>,
}

impl GaussTable {
    pub fn get(&self, chi: MulChar) -> Complex64 {
        self.values[chi.j as usize]
    }

    pub fn units(&self) -> u32 {
        self.q - 1
    }
}

/// The literal sum `sum_{a != 0} psi(a) chi(a)`.
pub fn gauss_sum_naive(chars: &Characters, psi: AddChar, chi: MulChar) -> Complex64 {
    let f = chars.field();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..f.units() {
        let x = FieldElem::Pow(k);
        acc += chars.add_char_eval(psi, x) * chars.unit_root(chi.j as u64 * k as u64);
    }
    acc
}

/// All `q - 1` Gauss sums for the fixed character `psi_1`.
pub fn gauss_all(chars: &Characters) -> GaussTable {
    gauss_all_with(chars, AddChar::PSI)
}

pub fn gauss_all_with(chars: &Characters, psi: AddChar) -> GaussTable {
    let s = chars.add_char_on_units(psi);
    let m = s.len() as f64;
    let values = dft::idft(&s).into_iter().map(|z| z * m).collect();
    GaussTable { q: chars.q(), psi, values }
}

/// `J(chi_1, ..., chi_m)` by iterated additive convolution over `F_q` of the
/// value vectors (extended by 0 at 0), read off at 1. `O(m q^2)`.
pub fn jacobi_direct(chars: &Characters, chis: &[MulChar]) -> Result<Complex64> {
    if chis.len() < 2 {
        return Err(Error::DomainError(format!("a Jacobi sum needs at least 2 characters, got {}", chis.len())));
    }
    let f = chars.field();
    let q = f.q() as usize;
    let values = |chi: MulChar| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); q];
        for k in 0..f.units() {
            v[f.exp_index(k) as usize] = chars.unit_root(chi.j as u64 * k as u64);
        }
        v
    };
    let mut acc = values(chis[0]);
    for &chi in &chis[1..chis.len() - 1] {
        let v = values(chi);
        let mut next = vec![Complex64::new(0.0, 0.0); q];
        for (x, &a) in acc.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (y, &b) in v.iter().enumerate() {
                next[f.add_index(x as u32, y as u32) as usize] += a * b;
            }
        }
        acc = next;
    }
    // Last factor: only the coordinate at 1 is needed.
    let last = values(chis[chis.len() - 1]);
    let one = f.index(FieldElem::ONE);
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, &a) in acc.iter().enumerate() {
        let y = f.add_index(one, f.neg_index(x as u32));
        sum += a * last[y as usize];
    }
    Ok(sum)
}

/// `J` as the literal nested sum over `a_1 + ... + a_m = 1`. Exponential in
/// `m`; kept as an oracle for small fields.
pub fn jacobi_nested(chars: &Characters, chis: &[MulChar]) -> Result<Complex64> {
    let m = chis.len();
    if m < 2 {
        return Err(Error::DomainError(format!("a Jacobi sum needs at least 2 characters, got {m}")));
    }
    let f = chars.field();
    let q = f.q();
    let one = f.index(FieldElem::ONE);
    let eval = |chi: MulChar, idx: u32| -> Complex64 {
        match f.elem(idx) {
            FieldElem::Zero => Complex64::new(0.0, 0.0),
            x => chars.mul_char_eval(chi, x).expect("nonzero"),
        }
    };
    let mut digits = vec![0u32; m - 1];
    let mut sum = Complex64::new(0.0, 0.0);
    loop {
        let mut partial = 0u32;
        let mut term = Complex64::new(1.0, 0.0);
        for (i, &d) in digits.iter().enumerate() {
            partial = f.add_index(partial, d);
            term *= eval(chis[i], d);
        }
        let rest = f.add_index(one, f.neg_index(partial));
        sum += term * eval(chis[m - 1], rest);
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(sum);
            }
            digits[i] += 1;
            if digits[i] < q {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// `J = q^{-1} prod G(chi_i) conj(G(prod chi_i))`.
pub fn jacobi_via_gauss(gt: &GaussTable, chis: &[MulChar]) -> Result<Complex64> {
    if chis.len() < 2 {
        return Err(Error::DomainError(format!("a Jacobi sum needs at least 2 characters, got {}", chis.len())));
    }
    let m = gt.units() as u64;
    if chis.iter().any(|c| c.j as u64 % m == 0) {
        return Err(Error::TrivialCharacter);
    }
    let rho = chis.iter().map(|c| c.j as u64).sum::<u64>() % m;
    if rho == 0 {
        return Err(Error::ProductTrivial);
    }
    let mut prod = gt.values[rho as usize].conj();
    for c in chis {
        prod *= gt.values[(c.j as u64 % m) as usize];
    }
    Ok(prod / gt.q as f64)
}

#[derive(Debug, Clone)]
pub struct KloostermanTable {
    pub q: u32,
    pub n: u32,
    /// `values[t] = Kl_n(g^t)`.
    pub values: Vec<Complex64>,
}

impl KloostermanTable {
    pub fn at(&self, a: FieldElem) -> Result<Complex64> {
        match a {
            FieldElem::Zero => Err(Error::ZeroArgument),
            FieldElem::Pow(t) => Ok(self.values[t as usize]),
        }
    }
}

/// `Kl_n(g^t)` for all `t` by exact iterated convolution on `F_q^×` in log
/// coordinates: `Kl_1 = psi`, `Kl_n = Kl_{n-1} * psi`. `O(n q^2)`.
pub fn kloosterman_direct_all(chars: &Characters, n: u32) -> Result<KloostermanTable> {
    if n == 0 {
        return Err(Error::DomainError("Kloosterman sums need n >= 1".into()));
    }
    let s = chars.add_char_on_units(AddChar::PSI);
    let mut kl = s.clone();
    for _ in 1..n {
        kl = dft::cyclic_convolve_direct(&kl, &s)?;
    }
    Ok(KloostermanTable { q: chars.q(), n, values: kl })
}

pub fn kloosterman_direct(chars: &Characters, n: u32, a: FieldElem) -> Result<Complex64> {
    if a.is_zero() {
        return Err(Error::ZeroArgument);
    }
    kloosterman_direct_all(chars, n)?.at(a)
}

/// `Kl_n` from the Gauss table by one DFT of `j -> G(chi_j)^n`.
pub fn kloosterman_all(gt: &GaussTable, n: u32) -> Result<KloostermanTable> {
    if n == 0 {
        return Err(Error::DomainError("Kloosterman sums need n >= 1".into()));
    }
    if n > KL_DFT_MAX_N || gt.q > KL_DFT_MAX_Q {
        return Err(Error::PrecisionCapExceeded(format!(
            "transform route limited to n <= {KL_DFT_MAX_N}, q <= {KL_DFT_MAX_Q} (got n={n}, q={})",
            gt.q
        )));
    }
    let powers: Vec<Complex64> = gt.values.iter().map(|g| g.powu(n)).collect();
    let m = powers.len() as f64;
    let values = dft::dft(&powers).into_iter().map(|z| z / m).collect();
    Ok(KloostermanTable { q: gt.q, n, values })
}

/// Transform route inside the precision cap, exact convolution outside it.
pub fn kloosterman_table(chars: &Characters, gt: &GaussTable, n: u32) -> Result<KloostermanTable> {
    match kloosterman_all(gt, n) {
        Err(Error::PrecisionCapExceeded(_)) => kloosterman_direct_all(chars, n),
        other => other,
    }
}

/// `sum_a chi(a) Kl_n(a)^k conj(Kl_n(a))^l`, ascending log order.
pub fn kl_moment_sum(
    chars: &Characters,
    kt: &KloostermanTable,
    k: u32,
    l: u32,
    twist: Option<MulChar>,
) -> Result<Complex64> {
    if k + l == 0 {
        return Err(Error::DomainError("moment sum needs k + l >= 1".into()));
    }
    if matches!(twist, Some(c) if c.j % (kt.q - 1) == 0) {
        return Err(Error::TrivialTwist);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, &v) in kt.values.iter().enumerate() {
        let mut term = v.powu(k) * v.conj().powu(l);
        if let Some(c) = twist {
            term *= chars.unit_root(c.j as u64 * t as u64);
        }
        acc += term;
    }
    Ok(acc)
}

/// `floor(n^{k+l-1} - r/n)` in exact integers. `None` on overflow.
pub fn lemma_kl_floor(n: u32, k: u32, l: u32, r: u128) -> Option<i128> {
    let top = (n as i128).checked_pow(k + l)?;
    let r = i128::try_from(r).ok()?;
    Some((top - r).div_euclid(n as i128))
}

/// Right-hand side of the moment bound for `sum_a Kl_n^k conj(Kl_n)^l`:
/// untwisted `R q^{((n-1)(k+l)+2)/2} + (floor(n^{k+l-1} - R/n) + R) q^{((n-1)(k+l)+1)/2}`,
/// twisted `floor(n^{k+l-1} - R/n) q^{((n-1)(k+l)+1)/2}`.
pub fn lemma_kl_rhs(q: u32, n: u32, k: u32, l: u32, twisted: bool, r: u128) -> Result<f64> {
    if n == 0 || k + l == 0 {
        return Err(Error::DomainError("lemma bound needs n >= 1, k + l >= 1".into()));
    }
    let fl = lemma_kl_floor(n, k, l, r)
        .ok_or_else(|| Error::DomainError(format!("n^(k+l) overflows for n={n}, k+l={}", k + l)))?;
    let w = ((n - 1) * (k + l)) as f64;
    let qf = q as f64;
    let lo = qf.powf((w + 1.0) / 2.0);
    if twisted {
        Ok(fl as f64 * lo)
    } else {
        let hi = qf.powf((w + 2.0) / 2.0);
        Ok(r as f64 * hi + (fl + r as i128) as f64 * lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::tau;
    use num_complex::ComplexFloat;

    fn chars(q: u64) -> Characters {
        Characters::for_order(q).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_examples() {
        let ch = chars(7);
        for b in ch.enumerate_psi() {
            let g = gauss_sum_naive(&ch, b, MulChar::TRIVIAL);
            assert!((g + 1.0).abs() < tau(6, 1.0));
        }
        let ch = chars(3);
        let g = gauss_sum_naive(&ch, AddChar::PSI, MulChar { j: 1 });
        assert!((g - c(0.0, 3f64.sqrt())).abs() < 1e-14);
        let ch = chars(9);
        for j in 1..8 {
            assert!((gauss_sum_naive(&ch, AddChar::PSI, MulChar { j }).abs() - 3.0).abs() < tau(8, 1.0));
        }
    }

    #[test]
    fn gauss_table_matches_naive() {
        for q in [7u64, 8, 9, 25, 27, 101, 125, 127] {
            let ch = chars(q);
            let gt = gauss_all(&ch);
            assert!((gt.values[0] + 1.0).abs() < 1e-10);
            for j in 0..gt.units() {
                let naive = gauss_sum_naive(&ch, AddChar::PSI, MulChar { j });
                assert!((gt.values[j as usize] - naive).abs() < 1e-9, "q={q} j={j}");
                if j != 0 {
                    let err = (gt.values[j as usize].norm_sqr() - q as f64).abs();
                    assert!(err < 1e-9 * q as f64, "q={q} j={j}");
                }
            }
        }
    }

    #[test]
    fn jacobi_examples() {
        let ch = chars(3);
        let j = jacobi_direct(&ch, &[MulChar { j: 1 }, MulChar { j: 1 }]).unwrap();
        assert!((j - 1.0).abs() < 1e-14);
        let ch = chars(5);
        let chi = MulChar { j: 1 };
        assert!((ch.mul_char_eval(chi, ch.field().from_int(2)).unwrap() - c(0.0, 1.0)).abs() < 1e-15);
        let want = c(-1.0, -2.0);
        let d = jacobi_direct(&ch, &[chi, chi]).unwrap();
        assert!((d - want).abs() < 1e-13);
        assert!((d.abs() - 5f64.sqrt()).abs() < 1e-13);
        let gt = gauss_all(&ch);
        assert!((jacobi_via_gauss(&gt, &[chi, chi]).unwrap() - want).abs() < 1e-12);
        let quad = MulChar { j: 2 };
        assert_eq!(jacobi_via_gauss(&gt, &[quad, quad]), Err(Error::ProductTrivial));
        assert_eq!(jacobi_via_gauss(&gt, &[MulChar::TRIVIAL, quad]), Err(Error::TrivialCharacter));
        // The full triple family over F_7.
        let ch = chars(7);
        let gt = gauss_all(&ch);
        for a in 1..6 {
            for b in 1..6 {
                for d in 1..6 {
                    if (a + b + d) % 6 == 0 {
                        continue;
                    }
                    let t = [MulChar { j: a }, MulChar { j: b }, MulChar { j: d }];
                    assert!((jacobi_via_gauss(&gt, &t).unwrap().abs() - 7.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobi_routes_agree() {
        for q in [7u64, 8, 9, 11, 16] {
            let ch = chars(q);
            let gt = gauss_all(&ch);
            let m = gt.units();
            for a in 1..m {
                for b in 1..m {
                    let t = [MulChar { j: a }, MulChar { j: b }];
                    let d = jacobi_direct(&ch, &t).unwrap();
                    assert!((d - jacobi_nested(&ch, &t).unwrap()).abs() < 1e-12);
                    if (a + b) % m != 0 {
                        assert!((d - jacobi_via_gauss(&gt, &t).unwrap()).abs() < 1e-10, "q={q} {a},{b}");
                    } else {
                        // chi * conj(chi): J = -chi(-1).
                        let minus_one = ch.field().neg(FieldElem::ONE);
                        let want = -ch.mul_char_eval(t[0], minus_one).unwrap();
                        assert!((d - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn jacobi_is_psi_independent() {
        for q in [11u64, 9, 25] {
            let ch = chars(q);
            let g1 = gauss_all(&ch);
            let gg = gauss_all_with(&ch, AddChar { b: ch.field().generator() });
            let m = g1.units();
            for a in 1..m {
                for b in 1..m {
                    if (a + b) % m == 0 {
                        continue;
                    }
                    let t = [MulChar { j: a }, MulChar { j: b }];
                    let x = jacobi_via_gauss(&g1, &t).unwrap();
                    let y = jacobi_via_gauss(&gg, &t).unwrap();
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn kloosterman_examples() {
        let ch = chars(3);
        let k = kloosterman_direct(&ch, 2, FieldElem::ONE).unwrap();
        assert!((k + 1.0).abs() < 1e-14);
        assert_eq!(kloosterman_direct(&ch, 2, FieldElem::Zero), Err(Error::ZeroArgument));
        let ch = chars(7);
        let f = ch.field();
        let s = ch.add_char_on_units(AddChar::PSI);
        let kl1 = kloosterman_direct_all(&ch, 1).unwrap();
        assert_eq!(kl1.values, s);
        // Double-loop oracle over pairs and the reality of Kl_2.
        let kl2 = kloosterman_direct_all(&ch, 2).unwrap();
        for a in f.units_iter() {
            let mut want = c(0.0, 0.0);
            for x in f.units_iter() {
                let y = f.div(a, x).unwrap();
                want += ch.add_char_eval(AddChar::PSI, f.add(x, y));
            }
            let got = kl2.at(a).unwrap();
            assert!((got - want).abs() < 1e-12);
            assert!(got.im.abs() < 1e-12);
        }
        let gt = gauss_all(&ch);
        let viaf = kloosterman_all(&gt, 2).unwrap();
        for t in 0..6 {
            assert!((viaf.values[t] - kl2.values[t]).abs() < 1e-8);
        }
        let viaf1 = kloosterman_all(&gt, 1).unwrap();
        for t in 0..6 {
            assert!((viaf1.values[t] - s[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_round_trip() {
        for q in [11u64, 9, 32] {
            let ch = chars(q);
            let gt = gauss_all(&ch);
            for n in 1..=4 {
                let kt = kloosterman_all(&gt, n).unwrap();
                for j in 0..gt.units() {
                    let back: Complex64 =
                        kt.values.iter().enumerate().map(|(t, v)| v * ch.unit_root(j as u64 * t as u64)).sum();
                    let want = gt.values[j as usize].powu(n);
                    let scale = (q as f64).powf(n as f64 / 2.0);
                    assert!((back - want).abs() < tau(q as usize, scale) * 10.0, "q={q} n={n} j={j}");
                }
            }
        }
    }

    #[test]
    fn precision_cap() {
        let ch = chars(7);
        let gt = gauss_all(&ch);
        assert!(matches!(kloosterman_all(&gt, 7), Err(Error::PrecisionCapExceeded(_))));
        let kt = kloosterman_table(&ch, &gt, 7).unwrap();
        let direct = kloosterman_direct_all(&ch, 7).unwrap();
        assert_eq!(kt.values, direct.values);
    }

    #[test]
    fn lemma_examples() {
        for q in [5u32, 7, 101] {
            let qf = q as f64;
            assert!((lemma_kl_rhs(q, 1, 1, 1, false, 1).unwrap() - (qf + qf.sqrt())).abs() < 1e-9 * qf);
        }
        assert_eq!(lemma_kl_rhs(7, 2, 2, 1, true, 0).unwrap(), 4.0 * 49.0);
        let want = 2.0 * 7f64.powi(3) + 9.0 * 7f64.powf(2.5);
        assert!((lemma_kl_rhs(7, 2, 2, 2, false, 2).unwrap() - want).abs() < 1e-9 * want);
        assert_eq!(lemma_kl_floor(3, 1, 0, 1), Some(0));
        assert_eq!(lemma_kl_floor(2, 2, 2, 3), Some(6));

        let ch = chars(7);
        let gt = gauss_all(&ch);
        let kt = kloosterman_all(&gt, 2).unwrap();
        let plain = kl_moment_sum(&ch, &kt, 2, 1, None).unwrap();
        assert!(plain.abs() <= 2.0 * 49.0);
        for j in 1..6 {
            let tw = kl_moment_sum(&ch, &kt, 2, 1, Some(MulChar { j })).unwrap();
            assert!(tw.abs() <= 4.0 * 49.0);
        }
        let sq = kl_moment_sum(&ch, &kt, 1, 1, None).unwrap();
        assert!(sq.re >= 0.0 && sq.im.abs() < 1e-10);
        assert_eq!(kl_moment_sum(&ch, &kt, 1, 1, Some(MulChar::TRIVIAL)), Err(Error::TrivialTwist));
    }

    #[test]
    fn kloosterman_magnitude_sanity() {
        let ch = chars(13);
        let gt = gauss_all(&ch);
        for n in 1..=4u32 {
            let kt = kloosterman_all(&gt, n).unwrap();
            let cap = n as f64 * 13f64.powf((n as f64 - 1.0) / 2.0) + 1e-9;
            assert!(kt.values.iter().all(|v| v.abs() <= cap));
        }
    }
}
