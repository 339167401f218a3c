//! Exact circle discrepancy, and the normalized Jacobi-sum families.
//!
//! For a multiset of angles in `[0, 1)`,
//! `D = sup_{a <= b <= a+1} |T(a, b)/N - (b - a)|` where `T` counts points
//! (with multiplicity) whose angle lies in the closed arc `[a, b]` mod 1, and
//! `D = 1` when `N = 0`.
//!
//! Let `theta_0 < ... < theta_{s-1}` be the occupied angles with masses
//! `w_i`, and `C_i = w_0 + ... + w_{i-1}`. Put
//!
//! ```text
//! a_j = C_{j+1}/N - theta_j,    b_i = C_i/N - theta_i.
//! ```
//!
//! The closed run from `theta_i` to `theta_j` (wrapping when `j < i`) has
//! deviation `a_j - b_i`, and the open arc `(theta_i, theta_j)` has
//! `-(count/N - length) = a_i - b_j`, again with or without wrap. Every
//! extremal arc is one of these, so both one-sided suprema equal
//! `max a - min b`, which gives an `O(s)` evaluation after sorting. The
//! quadratic scan over all runs and open arcs is kept as a cross-check.

use num_complex::Complex64;

use crate::characters::CharSubset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exp_sums::GaussTable;

/// Angles closer than this are merged into one point with multiplicity.
pub const MERGE_EPS: f64 = 1.0 / (1u64 << 40) as f64;
/// Largest tolerated `| |z| - 1 |` for points fed to [`normalize_points`].
pub const CIRCLE_TOL: f64 = 1e-6;
/// Default cap on enumerated tuples in [`jacobi_sequence`].
pub const DEFAULT_TUPLE_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CirclePoints {
    angles: Vec<f64>,
    mult: Vec<u64>,
    n: u64,
}

impl CirclePoints {
    pub fn empty() -> Self {
        CirclePoints { angles: Vec::new(), mult: Vec::new(), n: 0 }
    }

    /// Angles are reduced mod 1, sorted and merged.
    pub fn from_angles(angles: Vec<f64>) -> Self {
        Self::from_angles_with(angles, Execution::default())
    }

    pub fn from_angles_with(mut angles: Vec<f64>, exec: Execution) -> Self {
        for a in angles.iter_mut() {
            *a = reduce(*a);
        }
        exec.sort_f64(&mut angles);
        Self::from_sorted(&angles)
    }

    /// `sorted` must already lie in `[0, 1)` in ascending order.
    fn from_sorted(sorted: &[f64]) -> Self {
        let mut out: Vec<f64> = Vec::new();
        let mut mult: Vec<u64> = Vec::new();
        for &a in sorted {
            match out.last() {
                Some(&last) if a - last <= MERGE_EPS => *mult.last_mut().unwrap() += 1,
                _ => {
                    out.push(a);
                    mult.push(1);
                }
            }
        }
        // Wrap: a point just below 1 coincides with one just above 0.
        if out.len() > 1 && out[0] + 1.0 - out[out.len() - 1] <= MERGE_EPS {
            let w = mult.pop().unwrap();
            out.pop();
            mult[0] += w;
        }
        let n = sorted.len() as u64;
        CirclePoints { angles: out, mult, n }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.mult
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distinct(&self) -> usize {
        self.angles.len()
    }

    /// The points as unit complex numbers, each repeated by multiplicity.
    pub fn to_complex(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.n as usize);
        for (&a, &w) in self.angles.iter().zip(&self.mult) {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * a);
            v.extend(std::iter::repeat_n(z, w as usize));
        }
        v
    }
}

fn reduce(a: f64) -> f64 {
    let r = a.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Projects unit-modulus values to angles `arg(z)/2pi mod 1`.
pub fn normalize_points(values: &[Complex64]) -> Result<CirclePoints> {
    let mut angles = Vec::with_capacity(values.len());
    for (index, z) in values.iter().enumerate() {
        let modulus = z.norm();
        if (modulus - 1.0).abs() > CIRCLE_TOL || !modulus.is_finite() {
            return Err(Error::NotOnCircle { index, modulus });
        }
        angles.push(z.arg() / std::f64::consts::TAU);
    }
    Ok(CirclePoints::from_angles(angles))
}

/// An arc from `start` to `end` (`start <= end <= start + 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcWitness {
    pub start: f64,
    pub end: f64,
    /// Closed arcs carry positive deviation, open arcs negative.
    pub closed: bool,
    /// Points inside the arc, with multiplicity.
    pub count: u64,
    pub n: u64,
}

impl ArcWitness {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// `|T/N - length|` with the sign fixed by the arc type.
    pub fn deviation(&self) -> f64 {
        let frac = self.count as f64 / self.n as f64;
        if self.closed {
            frac - self.length()
        } else {
            self.length() - frac
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyResult {
    pub d: f64,
    /// `None` only for the empty sequence.
    pub witness: Option<ArcWitness>,
}

/// Exact discrepancy in `O(s)` for already sorted points.
pub fn discrepancy_exact(pts: &CirclePoints) -> DiscrepancyResult {
    if pts.n == 0 {
        return DiscrepancyResult { d: 1.0, witness: None };
    }
    let n = pts.n as f64;
    let mut c = 0u64;
    let (mut best_a, mut ja) = (f64::NEG_INFINITY, 0usize);
    let (mut best_b, mut ib) = (f64::INFINITY, 0usize);
    let mut prefix = Vec::with_capacity(pts.angles.len() + 1);
    for (i, (&t, &w)) in pts.angles.iter().zip(&pts.mult).enumerate() {
        prefix.push(c);
        let b = c as f64 / n - t;
        if b < best_b {
            best_b = b;
            ib = i;
        }
        c += w;
        let a = c as f64 / n - t;
        if a > best_a {
            best_a = a;
            ja = i;
        }
    }
    prefix.push(c);
    let witness = closed_run(pts, &prefix, ib, ja);
    DiscrepancyResult { d: witness.deviation(), witness: Some(witness) }
}

fn closed_run(pts: &CirclePoints, prefix: &[u64], i: usize, j: usize) -> ArcWitness {
    let (end, count) = if j >= i {
        (pts.angles[j], prefix[j + 1] - prefix[i])
    } else {
        (pts.angles[j] + 1.0, pts.n - prefix[i] + prefix[j + 1])
    };
    ArcWitness { start: pts.angles[i], end, closed: true, count, n: pts.n }
}

fn open_arc(pts: &CirclePoints, prefix: &[u64], i: usize, j: usize) -> ArcWitness {
    let (end, count) = if j > i {
        (pts.angles[j], prefix[j] - prefix[i + 1])
    } else {
        (pts.angles[j] + 1.0, pts.n - prefix[i + 1] + prefix[j])
    };
    ArcWitness { start: pts.angles[i], end, closed: false, count, n: pts.n }
}

/// Both one-sided suprema by scanning every closed run and open arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticScan {
    pub d_plus: f64,
    pub d_minus: f64,
    pub plus_witness: Option<ArcWitness>,
    pub minus_witness: Option<ArcWitness>,
}

impl QuadraticScan {
    pub fn d(&self) -> f64 {
        self.d_plus.max(self.d_minus).max(0.0)
    }
}

/// `O(s^2)` scan; `N = 0` reports `D = 1` through `d_plus`.
pub fn discrepancy_quadratic(pts: &CirclePoints) -> QuadraticScan {
    if pts.n == 0 {
        return QuadraticScan { d_plus: 1.0, d_minus: 1.0, plus_witness: None, minus_witness: None };
    }
    let mut prefix = vec![0u64];
    for &w in &pts.mult {
        prefix.push(prefix.last().unwrap() + w);
    }
    let s = pts.angles.len();
    let mut plus: Option<ArcWitness> = None;
    let mut minus: Option<ArcWitness> = None;
    for i in 0..s {
        for j in 0..s {
            let c = closed_run(pts, &prefix, i, j);
            if plus.is_none_or(|p| c.deviation() > p.deviation()) {
                plus = Some(c);
            }
            let o = open_arc(pts, &prefix, i, j);
            if minus.is_none_or(|p| o.deviation() > p.deviation()) {
                minus = Some(o);
            }
        }
    }
    QuadraticScan {
        d_plus: plus.unwrap().deviation(),
        d_minus: minus.unwrap().deviation(),
        plus_witness: plus,
        minus_witness: minus,
    }
}

/// The slot lists of a family: the given subsets, then `k_extra` copies of
/// all nontrivial characters.
pub fn family_slots(q: u32, subsets: &[CharSubset], k_extra: usize) -> Result<Vec<Vec<u32>>> {
    if subsets.is_empty() || subsets.len() + k_extra < 2 {
        return Err(Error::DomainError(format!(
            "a family needs m >= 1 and m + k_extra >= 2 (m={}, k_extra={k_extra})",
            subsets.len()
        )));
    }
    let mut slots: Vec<Vec<u32>> = Vec::with_capacity(subsets.len() + k_extra);
    for s in subsets {
        if s.is_empty() {
            return Err(Error::DomainError("empty character subset".into()));
        }
        if s.indices().iter().any(|&j| j == 0 || j >= q - 1) {
            return Err(Error::InvalidCharacter { index: *s.indices().last().unwrap(), q });
        }
        slots.push(s.indices().to_vec());
    }
    for _ in 0..k_extra {
        slots.push((1..q - 1).collect());
    }
    Ok(slots)
}

/// Number of tuples per residue of `j_1 + ... + j_s mod units`, exactly.
pub fn residue_counts(units: u32, slots: &[Vec<u32>]) -> Vec<u128> {
    let m = units as usize;
    let mut counts = vec![0u128; m];
    counts[0] = 1;
    for slot in slots {
        let total: u128 = counts.iter().sum();
        let mut next = vec![0u128; m];
        if slot.len() == m - 1 && slot.first() == Some(&1) {
            // All nontrivial: every residue except "r + 0".
            for r in 0..m {
                next[r] = total - counts[r];
            }
        } else {
            for (r, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &j in slot {
                    next[(r + j as usize) % m] += c;
                }
            }
        }
        counts = next;
    }
    counts
}

/// `N`: tuples with nontrivial product.
pub fn family_size(units: u32, slots: &[Vec<u32>]) -> u128 {
    let c = residue_counts(units, slots);
    c.iter().sum::<u128>() - c[0]
}

/// Enumerated tuples (before dropping trivial products).
pub fn tuple_total(slots: &[Vec<u32>]) -> u128 {
    slots.iter().map(|s| s.len() as u128).product()
}

/// Phases `arg(G(chi_j))/2pi` of the Gauss table.
pub fn gauss_phases(gt: &GaussTable) -> Vec<f64> {
    gt.values.iter().map(|g| g.arg() / std::f64::consts::TAU).collect()
}

/// Angles of `q^{-(s-1)/2} J(chi_1, ..., chi_s)` over the family, in
/// enumeration order. Each angle is `sum phase(j_i) - phase(j_1 + ... + j_s)`,
/// which is the argument of the Gauss-sum factorization of `J`.
pub fn jacobi_angles(gt: &GaussTable, slots: &[Vec<u32>], exec: Execution, budget: u128) -> Result<Vec<f64>> {
    let total = tuple_total(slots);
    if total > budget {
        return Err(Error::TupleBudgetExceeded { count: total, cap: budget });
    }
    let phases = gauss_phases(gt);
    let m = gt.units() as usize;
    let first = &slots[0];
    let rest = &slots[1..];
    Ok(exec.flat_map_range(0..first.len(), |i| {
        let j = first[i] as usize;
        let mut out = Vec::new();
        walk(rest, &phases, m, j, phases[j], &mut out);
        out
    }))
}

fn walk(slots: &[Vec<u32>], phases: &[f64], m: usize, residue: usize, phase: f64, out: &mut Vec<f64>) {
    let (head, tail) = slots.split_first().expect("at least two slots");
    if tail.is_empty() {
        for &j in head {
            let rho = (residue + j as usize) % m;
            if rho != 0 {
                out.push(reduce(phase + phases[j as usize] - phases[rho]));
            }
        }
    } else {
        for &j in head {
            walk(tail, phases, m, (residue + j as usize) % m, phase + phases[j as usize], out);
        }
    }
}

/// The normalized Jacobi-sum family as circle points.
pub fn jacobi_sequence(gt: &GaussTable, subsets: &[CharSubset], k_extra: usize) -> Result<CirclePoints> {
    jacobi_sequence_with(gt, subsets, k_extra, Execution::default(), DEFAULT_TUPLE_BUDGET)
}

pub fn jacobi_sequence_with(
    gt: &GaussTable,
    subsets: &[CharSubset],
    k_extra: usize,
    exec: Execution,
    budget: u128,
) -> Result<CirclePoints> {
    let slots = family_slots(gt.q, subsets, k_extra)?;
    let angles = jacobi_angles(gt, &slots, exec, budget)?;
    Ok(CirclePoints::from_angles_with(angles, exec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{Characters, MulChar};
    use crate::exp_sums::{gauss_all, jacobi_via_gauss};
    use proptest::prelude::*;

    fn pts(angles: &[f64]) -> CirclePoints {
        CirclePoints::from_angles(angles.to_vec())
    }

    // Oracle: closed arcs with endpoints on a 2^12 grid plus the sample angles,
    // counted by direct membership on the raw angle list.
    fn grid_oracle(raw: &[f64]) -> f64 {
        let n = raw.len() as f64;
        let mut ends: Vec<f64> = (0..4096).map(|i| i as f64 / 4096.0).collect();
        ends.extend_from_slice(raw);
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let mut sorted = raw.to_vec();
        sorted.sort_by(f64::total_cmp);
        let le: Vec<usize> = ends.iter().map(|&e| sorted.partition_point(|&x| x <= e)).collect();
        let lt: Vec<usize> = ends.iter().map(|&e| sorted.partition_point(|&x| x < e)).collect();
        let mut best = 0.0f64;
        for a in 0..ends.len() {
            for b in 0..ends.len() {
                let (count, len) = if b >= a {
                    (le[b] - lt[a], ends[b] - ends[a])
                } else {
                    (raw.len() - lt[a] + le[b], 1.0 - ends[a] + ends[b])
                };
                best = best.max((count as f64 / n - len).abs());
            }
        }
        best
    }

    #[test]
    fn normalize_examples() {
        let p = normalize_points(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap();
        assert_eq!(p.angles(), &[0.0, 0.5]);
        assert_eq!(p.len(), 2);
        assert!(normalize_points(&[]).unwrap().is_empty());
        let i = Complex64::new(0.0, 1.0);
        let p = normalize_points(&[i, i, i]).unwrap();
        assert_eq!(p.angles(), &[0.25]);
        assert_eq!(p.multiplicities(), &[3]);
        assert!(matches!(normalize_points(&[Complex64::new(1.1, 0.0)]), Err(Error::NotOnCircle { index: 0, .. })));
        let p = pts(&[1.0 - 1e-14, 0.0, 0.5]);
        assert_eq!(p.angles(), &[0.0, 0.5]);
        assert_eq!(p.multiplicities(), &[2, 1]);
    }

    #[test]
    fn exact_values() {
        assert_eq!(discrepancy_exact(&CirclePoints::empty()).d, 1.0);
        for a in [0.0, 0.3, 0.999] {
            assert_eq!(discrepancy_exact(&pts(&[a])).d, 1.0);
        }
        assert_eq!(discrepancy_exact(&pts(&[0.1, 0.6])).d, 0.5);
        for n in 1..=12 {
            let a: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let d = discrepancy_exact(&pts(&a)).d;
            assert!((d - 1.0 / n as f64).abs() < 1e-12, "n={n} d={d}");
        }
        // Mass 3 at a single angle.
        assert_eq!(discrepancy_exact(&pts(&[0.2, 0.2, 0.2])).d, 1.0);
    }

    #[test]
    fn witness_reproduces_d() {
        let p = pts(&[0.05, 0.1, 0.1, 0.7, 0.71, 0.9]);
        let r = discrepancy_exact(&p);
        let w = r.witness.unwrap();
        assert_eq!(w.deviation(), r.d);
        assert!(w.start <= w.end && w.end <= w.start + 1.0);
        let q = discrepancy_quadratic(&p);
        assert!((q.d() - r.d).abs() < 1e-15);
        assert!((q.d_plus - q.d_minus).abs() < 1e-15);
    }

    #[test]
    fn grid_oracle_random() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for inst in 0..20 {
            use rand::Rng;
            let n = rng.random_range(1..=50);
            let raw: Vec<f64> = if inst % 3 == 0 {
                (0..n).map(|_| rng.random_range(0..16) as f64 / 16.0).collect()
            } else {
                (0..n).map(|_| rng.random::<f64>()).collect()
            };
            let d = discrepancy_exact(&pts(&raw)).d;
            let o = grid_oracle(&raw);
            assert!(o <= d + 1e-12 && d <= o + 2.0 / 4096.0, "inst={inst} d={d} oracle={o}");
        }
    }

    #[test]
    fn gap_point_bound_and_counterexample() {
        // Even spacing: D^- = 1/N, and filling one gap raises it to (2N-1)/(N(N+1)).
        let n = 10usize;
        let mut a: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let before = discrepancy_quadratic(&pts(&a)).d_minus;
        a.push(0.5 / n as f64);
        let after = discrepancy_quadratic(&pts(&a)).d_minus;
        assert!((before - 0.1).abs() < 1e-12);
        assert!((after - 19.0 / 110.0).abs() < 1e-12);
        assert!(after <= before + 1.0 / (n as f64 + 1.0));
    }

    #[test]
    fn q7_family() {
        let ch = Characters::for_order(7).unwrap();
        let gt = gauss_all(&ch);
        let full = CharSubset::full(7);
        let p = jacobi_sequence(&gt, &[full.clone(), full.clone()], 0).unwrap();
        assert_eq!(p.len(), 20);
        let slots = family_slots(7, &[full.clone(), full.clone()], 0).unwrap();
        assert_eq!(family_size(6, &slots), 20);
        // Against the explicit Gauss-sum formula.
        let mut want = Vec::new();
        for a in 1..6 {
            for b in 1..6 {
                if (a + b) % 6 != 0 {
                    let j = jacobi_via_gauss(&gt, &[MulChar { j: a }, MulChar { j: b }]).unwrap() / 7f64.sqrt();
                    assert!((j.norm() - 1.0).abs() < 1e-6);
                    want.push(j);
                }
            }
        }
        assert_eq!(normalize_points(&want).unwrap().multiplicities(), p.multiplicities());
        let single = |j| CharSubset::explicit(7, &[j]).unwrap();
        let e = jacobi_sequence(&gt, &[single(2), single(4)], 0).unwrap();
        assert!(e.is_empty());
        assert_eq!(discrepancy_exact(&e).d, 1.0);
        let cap = jacobi_sequence_with(&gt, &[full.clone(), full], 1, Execution::Sequential, 100);
        assert_eq!(cap, Err(Error::TupleBudgetExceeded { count: 125, cap: 100 }));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let ch = Characters::for_order(31).unwrap();
        let gt = gauss_all(&ch);
        let full = CharSubset::full(31);
        let s = [full.clone(), full];
        let a = jacobi_sequence_with(&gt, &s, 1, Execution::Sequential, DEFAULT_TUPLE_BUDGET).unwrap();
        let b = jacobi_sequence_with(&gt, &s, 1, Execution::Parallel, DEFAULT_TUPLE_BUDGET).unwrap();
        assert_eq!(a, b);
        let slots = family_slots(31, &s, 1).unwrap();
        assert_eq!(a.len() as u128, family_size(30, &slots));
    }

    proptest! {
        #[test]
        fn fast_matches_quadratic(raw in prop::collection::vec(0u32..64, 1..40), fine in prop::collection::vec(0.0f64..1.0, 0..10)) {
            let mut angles: Vec<f64> = raw.iter().map(|&k| k as f64 / 64.0).collect();
            angles.extend(fine);
            let p = pts(&angles);
            let fast = discrepancy_exact(&p);
            let slow = discrepancy_quadratic(&p);
            prop_assert!((fast.d - slow.d_plus).abs() < 1e-12);
            prop_assert!((fast.d - slow.d_minus).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&fast.d));
            prop_assert_eq!(fast.witness.unwrap().deviation(), fast.d);
        }

        #[test]
        fn rotation_invariant(raw in prop::collection::vec(0.0f64..1.0, 1..50), shift in 0.0f64..1.0) {
            let d0 = discrepancy_exact(&pts(&raw)).d;
            let rotated: Vec<f64> = raw.iter().map(|a| a + shift).collect();
            let d1 = discrepancy_exact(&pts(&rotated)).d;
            prop_assert!((d0 - d1).abs() <= 1.0 / (1u64 << 35) as f64);
        }

        #[test]
        fn gap_point_raises_d_minus_at_most(raw in prop::collection::vec(0.0f64..1.0, 2..40)) {
            let p = pts(&raw);
            let before = discrepancy_quadratic(&p).d_minus;
            let a = p.angles();
            let (mut gap, mut at) = (0.0, 0.0);
            for i in 0..a.len() {
                let next = if i + 1 < a.len() { a[i + 1] } else { a[0] + 1.0 };
                if next - a[i] > gap {
                    gap = next - a[i];
                    at = a[i] + gap / 2.0;
                }
            }
            let mut more = raw.clone();
            more.push(at);
            let after = discrepancy_quadratic(&pts(&more)).d_minus;
            prop_assert!(after <= before + 1.0 / (raw.len() as f64 + 1.0) + 1e-12);
        }
    }
}
