//! DFT and cyclic convolution over `Z/M` for arbitrary `M`.
//!
//! `M = q - 1` is rarely smooth and can be prime, so lengths above
//! [`NAIVE_LIMIT`] go through Bluestein's chirp-z factorization: the DFT is
//! rewritten as a linear convolution with the chirp `e^{-pi i k^2 / M}` and
//! evaluated with a radix-2 FFT of length `L`, the smallest power of two
//! `>= 2M - 1`. Shorter inputs use the direct `O(M^2)` rule.
//!
//! Plans (chirps, filter spectra, radix-2 twiddles) are cached per `M` in a
//! process-wide map behind a mutex. Plans themselves are immutable and
//! shared as `Arc`, so concurrent transforms of the same length do not
//! contend beyond the lookup.
//!
//! Accuracy is that of double-precision FFTs: error grows roughly like
//! `eps * log M * max|x|` per output. Callers feeding sequences with a large
//! dynamic range (powers of Gauss sums) should normalize first.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Lengths up to this use the direct transform.
pub const NAIVE_LIMIT: usize = 64;

pub type ComplexSeq = Vec<Complex64>;

struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| {
                let t = -std::f64::consts::TAU * k as f64 / len as f64;
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        Radix2 { len, twiddles }
    }

    /// In-place forward transform (`e^{-2 pi i jk/L}` kernel).
    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.len;
        let bits = n.trailing_zeros();
        if n <= 1 {
            return;
        }
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let step = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    fn inverse(&self, buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|z| *z = z.conj());
        self.forward(buf);
        let s = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|z| *z = z.conj() * s);
    }
}

enum Plan {
    Naive { twiddles: Vec<Complex64> },
    Bluestein { chirp: Vec<Complex64>, filter_spectrum: Vec<Complex64>, inner: Radix2 },
}

impl Plan {
    fn new(m: usize) -> Plan {
        if m <= NAIVE_LIMIT {
            return Plan::Naive { twiddles: unit_roots(m, -1.0) };
        }
        // k^2 mod 2M is exact in integers, which keeps the chirp phase exact
        // for large k.
        let two_m = 2 * m as u64;
        let chirp: Vec<Complex64> = (0..m as u64)
            .map(|k| {
                let t = -std::f64::consts::PI * ((k * k) % two_m) as f64 / m as f64;
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        let len = (2 * m - 1).next_power_of_two();
        let inner = Radix2::new(len);
        let mut filter = vec![Complex64::new(0.0, 0.0); len];
        filter[0] = chirp[0].conj();
        for k in 1..m {
            filter[k] = chirp[k].conj();
            filter[len - k] = chirp[k].conj();
        }
        inner.forward(&mut filter);
        Plan::Bluestein { chirp, filter_spectrum: filter, inner }
    }

    fn forward(&self, x: &[Complex64]) -> ComplexSeq {
        let m = x.len();
        match self {
            Plan::Naive { twiddles } => (0..m)
                .map(|j| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &v) in x.iter().enumerate() {
                        acc += v * twiddles[(j * k) % m];
                    }
                    acc
                })
                .collect(),
            Plan::Bluestein { chirp, filter_spectrum, inner } => {
                let mut buf = vec![Complex64::new(0.0, 0.0); inner.len];
                for k in 0..m {
                    buf[k] = x[k] * chirp[k];
                }
                inner.forward(&mut buf);
                for (b, f) in buf.iter_mut().zip(filter_spectrum) {
                    *b *= f;
                }
                inner.inverse(&mut buf);
                (0..m).map(|k| buf[k] * chirp[k]).collect()
            }
        }
    }
}

fn unit_roots(m: usize, sign: f64) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            let t = sign * std::f64::consts::TAU * k as f64 / m as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

fn plan(m: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&m) {
        return Arc::clone(p);
    }
    let built = Arc::new(Plan::new(m));
    let mut guard = cache.lock().unwrap();
    Arc::clone(guard.entry(m).or_insert(built))
}

/// `X[j] = sum_k x[k] e^{-2 pi i jk/M}`.
pub fn dft(x: &[Complex64]) -> ComplexSeq {
    if x.is_empty() {
        return Vec::new();
    }
    plan(x.len()).forward(x)
}

/// Inverse of [`dft`], including the `1/M` factor.
pub fn idft(x: &[Complex64]) -> ComplexSeq {
    let m = x.len();
    if m == 0 {
        return Vec::new();
    }
    let conj: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
    let s = 1.0 / m as f64;
    plan(m).forward(&conj).into_iter().map(|z| z.conj() * s).collect()
}

/// `z[k] = sum_j x[j] y[k - j mod M]`, through the transform.
pub fn cyclic_convolve(x: &[Complex64], y: &[Complex64]) -> Result<ComplexSeq> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let fx = dft(x);
    let fy = dft(y);
    let prod: Vec<Complex64> = fx.iter().zip(&fy).map(|(a, b)| a * b).collect();
    Ok(idft(&prod))
}

/// The same convolution by the direct double loop. Exact up to the rounding
/// of each product; used where the transform's error budget is too loose.
pub fn cyclic_convolve_direct(x: &[Complex64], y: &[Complex64]) -> Result<ComplexSeq> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let m = x.len();
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    for (j, &a) in x.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (t, &b) in y.iter().enumerate() {
            z[(j + t) % m] += a * b;
        }
    }
    Ok(z)
}
