//! The acceptance criteria as runnable checks.
//!
//! Each criterion returns a [`CriterionReport`] with a one-line summary.
//! `jlab verify` and the `acceptance` test target both drive this module.
//! Criterion 8 reuses the families of criterion 6, so [`run_all`] runs the
//! sweep once and hands its rows to both.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::characters::{CharSubset, Characters};
use crate::discrepancy::{discrepancy_exact, jacobi_sequence_with, CirclePoints, DEFAULT_TUPLE_BUDGET};
use crate::exec::Execution;
use crate::exp_sums::gauss_all;
use crate::finite_field::{is_prime, PrimePower};
use crate::invariant_dims::{r_bounds, r_g2, r_lookup, r_sl, r_sl_k1_hook, r_sl_kk_syt, GroupSpec, RQuery};
use crate::moments_bounds::{f_exponent, g_exponent, rhs_theorem1};
use crate::report::{
    failures, run_config_with, ExperimentConfig, OneOrMany, ResultRow, RunOptions, SizeSpec, SubsetPolicy, Suite,
};

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Settings shared by every criterion.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub exec: Execution,
    /// Tuple count up to which criterion 6 scans the exact discrepancy.
    pub exact_budget: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { exec: Execution::default(), exact_budget: 2_000_000 }
    }
}

fn field_of(q: u64) -> (u64, u32) {
    let pp = PrimePower::from_order(q).expect("prime power");
    (pp.p() as u64, pp.r())
}

fn run(cfg: &ExperimentConfig, opts: VerifyOptions) -> Vec<ResultRow> {
    run_config_with(cfg, RunOptions { exec: opts.exec }).expect("acceptance configs are valid")
}

fn summarize(rows: &[ResultRow]) -> (bool, String) {
    let bad = failures(rows);
    let mut detail = format!("{} rows, {} failing", rows.len(), bad.len());
    if let Some(r) = bad.first() {
        detail.push_str(&format!(
            "; first: {} {} q={} m={} k={} n={} measured={:e} bound={:e} {}",
            r.suite, r.case, r.q, r.m, r.k, r.n, r.measured, r.bound, r.note
        ));
    }
    (bad.is_empty() && !rows.is_empty(), detail)
}

fn timed(id: u8, title: &'static str, limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> CriterionReport {
    let start = Instant::now();
    let (mut pass, mut detail) = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            pass = false;
            detail.push_str(&format!("; over the {} s limit", limit.as_secs()));
        }
    }
    CriterionReport { id, title, pass, detail, elapsed }
}

fn modulus_fields() -> Vec<(u64, u32)> {
    let mut qs: Vec<u64> = (3..=101).filter(|&n| is_prime(n)).collect();
    qs.extend([9, 25, 27, 49]);
    qs.into_iter().map(field_of).collect()
}

fn small_fields(q_max: u64) -> Vec<(u64, u32)> {
    (3..=q_max).filter(|&q| PrimePower::from_order(q).is_ok()).map(field_of).collect()
}

pub fn criterion_1(opts: VerifyOptions) -> CriterionReport {
    timed(1, "Gauss and Jacobi moduli", Some(Duration::from_secs(30)), || {
        let mut rows = run(&ExperimentConfig::new(modulus_fields(), vec![Suite::Gauss]), opts);
        let mut jac = ExperimentConfig::new(small_fields(31), vec![Suite::Jacobi]);
        jac.m = OneOrMany::Many(vec![2, 3]);
        jac.precision.jacobi_direct_q_max = 0;
        rows.extend(run(&jac, opts));
        summarize(&rows)
    })
}

pub fn criterion_2(opts: VerifyOptions) -> CriterionReport {
    timed(2, "identity cross-checks", None, || {
        let mut jac = ExperimentConfig::new(small_fields(31), vec![Suite::Jacobi]);
        jac.m = OneOrMany::Many(vec![2, 3]);
        let mut rows: Vec<ResultRow> = run(&jac, opts).into_iter().filter(|r| r.case == "direct-vs-gauss").collect();
        let kl = ExperimentConfig::new(small_fields(101), vec![Suite::Kloosterman]);
        rows.extend(run(&kl, opts).into_iter().filter(|r| r.case != "weil"));
        summarize(&rows)
    })
}

pub fn criterion_3(opts: VerifyOptions) -> CriterionReport {
    timed(3, "Kloosterman moment lemma", Some(Duration::from_secs(120)), || {
        let fields = [7, 11, 13, 17, 23].map(|p| (p, 1)).to_vec();
        summarize(&run(&ExperimentConfig::new(fields, vec![Suite::LemmaKl]), opts))
    })
}

fn r(group: GroupSpec, k: u32, l: u32) -> u64 {
    r_lookup(RQuery { group, k, l }).ok().and_then(|v| v.to_u64()).unwrap_or(u64::MAX)
}

pub fn criterion_4(_opts: VerifyOptions) -> CriterionReport {
    timed(4, "invariant dimension tables", None, || {
        let mut bad: Vec<String> = Vec::new();
        let groups = [
            GroupSpec::MuP(2),
            GroupSpec::MuP(5),
            GroupSpec::MuP(11),
            GroupSpec::Sp(2),
            GroupSpec::Sp(4),
            GroupSpec::Sp(6),
            GroupSpec::Sp(10),
            GroupSpec::SL(3),
            GroupSpec::SL(5),
            GroupSpec::SL(9),
            GroupSpec::SO(3),
            GroupSpec::SO(5),
            GroupSpec::SO(11),
            GroupSpec::G2,
        ];
        for g in groups {
            let want21 = u64::from(matches!(g, GroupSpec::SO(3) | GroupSpec::G2));
            let want22 = match g {
                GroupSpec::MuP(_) => 1,
                GroupSpec::Sp(2) | GroupSpec::SL(_) => 2,
                GroupSpec::Sp(_) | GroupSpec::SO(_) => 3,
                GroupSpec::G2 => 4,
            };
            let want33 = match g {
                GroupSpec::MuP(_) => 1,
                GroupSpec::Sp(2) => 5,
                GroupSpec::SL(_) => 6,
                GroupSpec::Sp(4) => 14,
                GroupSpec::Sp(_) | GroupSpec::SO(_) => 15,
                GroupSpec::G2 => 35,
            };
            for (k, l, want) in [(1, 1, 1), (2, 1, want21), (2, 2, want22), (3, 3, want33)] {
                let got = r(g, k, l);
                if got != want {
                    bad.push(format!("{} R^({k},{l}) = {got}, expected {want}", g.name()));
                }
            }
        }
        let g2: Vec<BigUint> = (0..=8).map(r_g2).collect();
        let want: Vec<BigUint> = [1u32, 0, 1, 1, 4, 10, 35, 120, 455].map(BigUint::from).to_vec();
        if g2 != want {
            bad.push(format!("G2 sequence {g2:?}"));
        }
        let mut cross = 0;
        for n in [3u32, 5] {
            for k in 0..=13u32 {
                if k % n == 1 {
                    cross += 1;
                    if r_sl_k1_hook(n, k).ok() != r_sl(n, k, 1).ok() {
                        bad.push(format!("hook formula SL_{n} k={k}"));
                    }
                }
                cross += 1;
                if r_sl_kk_syt(n, k).ok() != r_sl(n, k, k).ok() {
                    bad.push(format!("tableau sum SL_{n} k={k}"));
                }
            }
        }
        let mut bounded = 0;
        let mut all = vec![GroupSpec::G2, GroupSpec::MuP(2), GroupSpec::MuP(3), GroupSpec::MuP(7)];
        for n in 2..=9u32 {
            if n % 2 == 0 {
                all.push(GroupSpec::Sp(n));
            } else {
                all.extend([GroupSpec::SL(n), GroupSpec::SO(n)]);
            }
        }
        for g in all {
            for k in 0..=12u32 {
                for l in 0..=12 - k {
                    let q = RQuery { group: g, k, l };
                    let v = r_lookup(q).ok().and_then(|v| v.to_f64()).unwrap_or(f64::INFINITY);
                    bounded += 1;
                    if v > r_bounds(q) {
                        bad.push(format!("{} k={k} l={l}: {v} above bound {}", g.name(), r_bounds(q)));
                    }
                }
            }
        }
        let detail = format!(
            "table, G2 sequence, {cross} tableau cross-checks, {bounded} bound checks; {} mismatches{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        );
        (bad.is_empty(), detail)
    })
}

pub fn criterion_5(opts: VerifyOptions) -> CriterionReport {
    timed(5, "moment oracle equivalence", None, || {
        let policies = OneOrMany::Many(vec![
            SubsetPolicy::Full,
            SubsetPolicy::Random { sizes: vec![SizeSpec::Frac([1, 2])], seeds: vec![0, 1] },
        ]);
        let mut rows = Vec::new();
        for (ms, ks) in [(vec![2, 3], vec![0, 1]), (vec![1], vec![1])] {
            let mut cfg = ExperimentConfig::new(small_fields(31), vec![Suite::Moments]);
            cfg.m = OneOrMany::Many(ms);
            cfg.k_extra = OneOrMany::Many(ks);
            cfg.n_max = 4;
            cfg.k_max = 4;
            cfg.subset_policy = policies.clone();
            cfg.precision.oracle_budget = u64::MAX;
            cfg.precision.exact_budget = 0;
            rows.extend(run(&cfg, opts).into_iter().filter(|r| r.case == "oracle"));
        }
        summarize(&rows)
    })
}

/// The criterion 6 parameter grid.
pub fn sweep_config(exact_budget: u64) -> ExperimentConfig {
    let fields = (11..=199).filter(|&p| is_prime(p)).map(|p| (p, 1)).collect();
    let mut cfg = ExperimentConfig::new(fields, vec![Suite::Discrepancy, Suite::Bounds]);
    cfg.m = OneOrMany::Many(vec![2, 3]);
    cfg.k_extra = OneOrMany::Many(vec![0, 1, 2]);
    cfg.n_max = 6;
    cfg.subset_policy = OneOrMany::Many(vec![
        SubsetPolicy::Full,
        SubsetPolicy::Random { sizes: vec![SizeSpec::Frac([1, 4]), SizeSpec::Frac([1, 2])], seeds: (0..20).collect() },
    ]);
    cfg.precision.exact_budget = exact_budget;
    cfg
}

pub fn sweep_rows(opts: VerifyOptions) -> (Vec<ResultRow>, Duration) {
    let start = Instant::now();
    let rows = run(&sweep_config(opts.exact_budget), opts);
    (rows, start.elapsed())
}

pub fn criterion_6(opts: VerifyOptions, rows: &[ResultRow], took: Duration) -> CriterionReport {
    let limit = if opts.exec.is_parallel() && rayon_threads() >= 4 { 180 } else { 600 };
    let start = Instant::now();
    let bounds: Vec<ResultRow> = rows.iter().filter(|r| r.suite == "bounds").cloned().collect();
    let (mut pass, mut detail) = summarize(&bounds);
    let exact = rows.iter().filter(|r| r.suite == "discrepancy" && r.case == "D").count();
    let cert = rows.iter().filter(|r| r.suite == "discrepancy" && r.case == "D-certificate").count();
    detail.push_str(&format!("; {exact} families with exact D, {cert} with an Erdős–Turán certificate"));
    if took.as_secs() > limit {
        pass = false;
        detail.push_str(&format!("; sweep took {} s, over the {limit} s limit", took.as_secs()));
    }
    CriterionReport { id: 6, title: "bound domination sweep", pass, detail, elapsed: took + start.elapsed() }
}

fn rayon_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    1
}

/// Grid oracle: with every point on the grid `i / grid`, the extremal arcs
/// have grid endpoints, so scanning all of them by direct membership gives
/// the exact discrepancy.
pub fn grid_discrepancy(points: &[u32], grid: u32) -> f64 {
    let n = points.len() as f64;
    if points.is_empty() {
        return 1.0;
    }
    let mut best: f64 = 0.0;
    for a in 0..grid {
        for len in 0..=grid {
            let inside = |strict: bool| {
                points
                    .iter()
                    .filter(|&&x| {
                        let off = (x + grid - a) % grid;
                        if strict {
                            off > 0 && off < len
                        } else {
                            off <= len
                        }
                    })
                    .count() as f64
            };
            let l = len as f64 / grid as f64;
            best = best.max(inside(false) / n - l);
            if len > 0 {
                best = best.max(l - inside(true) / n);
            }
        }
    }
    best
}

pub fn criterion_7(_opts: VerifyOptions) -> CriterionReport {
    timed(7, "discrepancy engine", None, || {
        let mut bad = Vec::new();
        let d = |a: Vec<f64>| discrepancy_exact(&CirclePoints::from_angles(a)).d;
        if d(vec![]) != 1.0 || d(vec![0.3]) != 1.0 {
            bad.push("N in {0, 1}".to_string());
        }
        if (d(vec![0.1, 0.6]) - 0.5).abs() > 1e-12 {
            bad.push("antipodal pair".to_string());
        }
        for n in 1..=12u32 {
            let v = d((0..n).map(|i| i as f64 / n as f64 + 0.05).collect());
            if (v - 1.0 / n as f64).abs() > 1e-12 {
                bad.push(format!("{n} equally spaced points gave {v}"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = 64;
        for inst in 0..200 {
            let n = rng.random_range(1..=50usize);
            let pts: Vec<u32> = (0..n).map(|_| rng.random_range(0..grid)).collect();
            let fast = d(pts.iter().map(|&x| x as f64 / grid as f64).collect());
            let slow = grid_discrepancy(&pts, grid);
            if (fast - slow).abs() > 1e-12 {
                bad.push(format!("instance {inst}: {fast} vs grid {slow}"));
            }
        }
        let detail = format!(
            "closed forms and 200 grid instances; {} mismatches{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        );
        (bad.is_empty(), detail)
    })
}

type Q = Ratio<i64>;

pub fn criterion_8(rows: &[ResultRow]) -> CriterionReport {
    timed(8, "exponent functions and Erdős–Turán", None, || {
        let mut bad = Vec::new();
        let q = |n, d| Q::new(n, d);
        let stated = [
            ((0, 1), (0, 1), (0, 1)),
            ((1, 1), (0, 1), (0, 1)),
            ((1, 2), (1, 2), (0, 1)),
            ((4, 5), (4, 5), (1, 10)),
            ((1, 1), (1, 3), (1, 6)),
            ((1, 1), (2, 3), (1, 6)),
            ((8, 9), (8, 9), (1, 6)),
            ((1, 1), (1, 1), (3, 14)),
        ];
        for ((xn, xd), (yn, yd), (vn, vd)) in stated {
            let got = f_exponent(q(xn, xd), q(yn, yd)).unwrap();
            if got != q(vn, vd) {
                bad.push(format!("f({xn}/{xd}, {yn}/{yd}) = {got}"));
            }
        }
        for k in 1..=6u32 {
            for m in 1..=4u32 {
                let k = k as i64;
                let got = g_exponent(k as u32, m, q(1, 1)).unwrap();
                if got != q(2 * k + 1, 2 * (2 * k + 3)) {
                    bad.push(format!("g_({k},{m})(1) = {got}"));
                }
                let next0 = g_exponent(k as u32 + 1, m, q(0, 1)).unwrap();
                if got >= next0 {
                    bad.push(format!("g_({k},{m})(1) >= g_({},{m})(0)", k + 1));
                }
            }
        }
        // Neighbouring grid values: nondecreasing, and no jump larger than the
        // steepest slope allows.
        let steps = 72;
        let h = q(1, steps);
        for i in 0..=steps {
            for j in 0..=steps {
                let (x, y) = (q(i, steps), q(j, steps));
                let v = f_exponent(x, y).unwrap();
                if i < steps {
                    let w = f_exponent(x + h, y).unwrap();
                    if w < v || w - v > h / 2 {
                        bad.push(format!("f step in x at ({x}, {y})"));
                    }
                }
                if j < steps {
                    let w = f_exponent(x, y + h).unwrap();
                    if w < v || w - v > h / 2 {
                        bad.push(format!("f step in y at ({x}, {y})"));
                    }
                }
            }
            for k in 1..=4u32 {
                for m in 1..=3u32 {
                    let x = q(i, steps);
                    let v = g_exponent(k, m, x).unwrap();
                    if i < steps {
                        let w = g_exponent(k, m, x + h).unwrap();
                        if w < v || w - v > h {
                            bad.push(format!("g_({k},{m}) step at {x}"));
                        }
                    }
                    if m > 1 && f_exponent(q(1, 1), x).unwrap() > g_exponent(1, m, x).unwrap() {
                        bad.push(format!("f(1, {x}) > g_(1,{m})({x})"));
                    }
                }
            }
        }
        let et: Vec<&ResultRow> = rows.iter().filter(|r| r.suite == "discrepancy" && r.case == "erdos-turan").collect();
        let et_fail = et.iter().filter(|r| !r.pass).count();
        if et.is_empty() {
            bad.push("no exact-D families to compare against".into());
        }
        if et_fail > 0 {
            bad.push(format!("{et_fail} families where D exceeds the Erdős–Turán bound"));
        }
        let detail = format!(
            "stated values, grid checks, Erdős–Turán over {} exact families; {} problems{}",
            et.len(),
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        );
        (bad.is_empty(), detail)
    })
}

/// `(q, N, D, rhs_theorem1, log_q(1/D))` along the trend sequence.
pub fn trend(qs: &[u64], exec: Execution) -> Vec<(u64, u64, f64, f64, f64)> {
    qs.iter()
        .map(|&q| {
            let chars = Characters::for_order(q).expect("trend fields are prime");
            let gt = gauss_all(&chars);
            let full = CharSubset::full(q as u32);
            let pts = jacobi_sequence_with(&gt, &[full.clone(), full], 0, exec, DEFAULT_TUPLE_BUDGET)
                .expect("within the tuple budget");
            let d = discrepancy_exact(&pts).d;
            let bound = rhs_theorem1(q as u32, q - 2, q - 2).unwrap();
            (q, pts.len(), d, bound, (1.0 / d).ln() / (q as f64).ln())
        })
        .collect()
}

pub const TREND_QS: [u64; 5] = [101, 499, 997, 4999, 9973];

pub fn criterion_9(opts: VerifyOptions) -> CriterionReport {
    timed(9, "equidistribution trend", None, || {
        let t = trend(&TREND_QS, opts.exec);
        let decreasing = t.windows(2).all(|w| w[1].2 < w[0].2);
        let bounded = t.iter().all(|r| r.2 <= r.3);
        let parts: Vec<String> =
            t.iter().map(|(q, _, d, b, e)| format!("q={q} D={d:.6} (bound {b:.3}, log_q(1/D)={e:.4})")).collect();
        let detail = format!(
            "{}; decreasing={decreasing}, bounded={bounded}; f(1,1)=3/14={:.4} for reference",
            parts.join(", "),
            3.0 / 14.0
        );
        (decreasing && bounded, detail)
    })
}

/// Run the criteria in `ids` (all of them when empty), in order.
pub fn run_selected(ids: &[u8], opts: VerifyOptions, mut sink: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    let want = |i: u8| ids.is_empty() || ids.contains(&i);
    let mut out = Vec::new();
    let mut emit = |r: CriterionReport| {
        sink(&r);
        out.push(r);
    };
    for (id, f) in [
        (1u8, criterion_1 as fn(VerifyOptions) -> CriterionReport),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
    ] {
        if want(id) {
            emit(f(opts));
        }
    }
    if want(6) || want(8) {
        let (rows, took) = sweep_rows(opts);
        if want(6) {
            emit(criterion_6(opts, &rows, took));
        }
        if want(7) {
            emit(criterion_7(opts));
        }
        if want(8) {
            emit(criterion_8(&rows));
        }
    } else if want(7) {
        emit(criterion_7(opts));
    }
    if want(9) {
        emit(criterion_9(opts));
    }
    out
}

pub fn run_all(opts: VerifyOptions, sink: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    run_selected(&[], opts, sink)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_oracle_known_values() {
        assert_eq!(grid_discrepancy(&[], 8), 1.0);
        assert!((grid_discrepancy(&[0, 4], 8) - 0.5).abs() < 1e-15);
        assert!((grid_discrepancy(&[0, 2, 4, 6], 8) - 0.25).abs() < 1e-15);
        assert!((grid_discrepancy(&[3, 3, 3], 8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cheap_criteria_pass() {
        let opts = VerifyOptions::default();
        for r in [criterion_4(opts), criterion_7(opts)] {
            assert!(r.pass, "{}", r.line());
        }
    }
}
