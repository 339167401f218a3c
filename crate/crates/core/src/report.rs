//! Experiment configuration, result rows, and the suite runner.
//!
//! A sweep is described by a versioned JSON [`ExperimentConfig`]. Running it
//! produces [`ResultRow`]s in a fixed order (suite, then `q`, then seed, with
//! emission order preserved inside each key), so two runs of the same config
//! give byte-identical CSV.
//!
//! CSV layout: a first line `#schema=jacobi-lab-results/1`, a header naming
//! every column of [`CSV_COLUMNS`], then one record per row. Floats are
//! written as `{:.16e}` (17 significant digits), so parsing the file gives
//! back the same doubles. Empty cells mean "not applicable". Character
//! indices in `case` are exponents `j` of `chi_j(g^k) = e^{2 pi i jk/(q-1)}`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characters::{random_subset_stream, tau, CharSubset, Characters, MulChar};
use crate::dft;
use crate::discrepancy::{
    discrepancy_exact, family_size, family_slots, jacobi_angles, tuple_total, CirclePoints, DiscrepancyResult,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exp_sums::{
    gauss_all, jacobi_direct, jacobi_via_gauss, kloosterman_all, kloosterman_direct_all, kloosterman_table,
    lemma_kl_rhs, GaussTable,
};
use crate::finite_field::{FieldTable, PrimePower};
use crate::invariant_dims::{group_for, r_bounds, r_for, r_lookup, RQuery};
use crate::moments_bounds::{
    erdos_turan_best, moments_brute, moments_of_slots, rhs_m2, rhs_m3, rhs_moment1, rhs_theorem1_family, rhs_theorem2,
    rhs_theorem2_k1, rhs_theorem2_k1_large, rhs_theorem3,
};

pub const CONFIG_VERSION: u32 = 1;
pub const CSV_SCHEMA: &str = "jacobi-lab-results/1";
pub const CSV_COLUMNS: [&str; 15] = [
    "suite",
    "case",
    "q",
    "m",
    "k",
    "n",
    "sizes",
    "seed",
    "measured",
    "bound",
    "pass",
    "value_re",
    "value_im",
    "wall_time_ms",
    "note",
];

pub const GAUSS_REL_TOL: f64 = 1e-8;
pub const GAUSS_TRIVIAL_TOL: f64 = 1e-10;
pub const JACOBI_MODULUS_TOL: f64 = 1e-7;
pub const JACOBI_ROUTE_TOL: f64 = 1e-8;
pub const KL_ROUTE_TOL: f64 = 1e-8;
pub const MOMENT_ORACLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Gauss,
    Jacobi,
    Kloosterman,
    LemmaKl,
    Discrepancy,
    Moments,
    Bounds,
    Rconsts,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Gauss,
        Suite::Jacobi,
        Suite::Kloosterman,
        Suite::LemmaKl,
        Suite::Discrepancy,
        Suite::Moments,
        Suite::Bounds,
        Suite::Rconsts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Gauss => "gauss",
            Suite::Jacobi => "jacobi",
            Suite::Kloosterman => "kloosterman",
            Suite::LemmaKl => "lemma-kl",
            Suite::Discrepancy => "discrepancy",
            Suite::Moments => "moments",
            Suite::Bounds => "bounds",
            Suite::Rconsts => "rconsts",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown suite {s:?}")))
    }
}

/// A scalar or a list in the config; scalars are one-element lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// A subset size: an absolute count, or `[num, den]` meaning `ceil(num (q-2) / den)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    Abs(u64),
    Frac([u64; 2]),
}

impl SizeSpec {
    pub fn resolve(self, q: u32) -> Result<u64> {
        let max = q as u64 - 2;
        let s = match self {
            SizeSpec::Abs(a) => a,
            SizeSpec::Frac([num, den]) => {
                if den == 0 {
                    return Err(Error::ConfigInvalid("size fraction with zero denominator".into()));
                }
                (num * max).div_ceil(den)
            }
        };
        if s == 0 || s > max {
            return Err(Error::ConfigInvalid(format!("subset size {s} outside 1..={max} for q = {q}")));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SubsetPolicy {
    /// Every slot is the full set of nontrivial characters.
    Full,
    /// Slot `i` is `random_subset_stream(q, size, seed, i)`.
    Random { sizes: Vec<SizeSpec>, seeds: Vec<u64> },
    /// One index list per slot; `m` is the number of lists.
    Explicit { lists: Vec<Vec<i64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrecisionFlags {
    /// Largest tuple count for which the exact discrepancy is computed;
    /// larger families get the Erdős–Turán certificate instead.
    pub exact_budget: u64,
    /// Hard cap on enumerated tuples for any single computation.
    pub tuple_budget: u64,
    /// Largest tuple count for the brute-force moment oracle.
    pub oracle_budget: u64,
    /// Largest `q` for the direct Jacobi cross-check.
    pub jacobi_direct_q_max: u32,
    pub kl_n_max: u32,
    pub lemma_kl_n_max: u32,
    pub lemma_kl_weight: u32,
    pub rconst_n_max: u32,
    pub rconst_weight: u32,
    /// Fill the `wall_time_ms` column. Off by default so output is reproducible.
    pub timings: bool,
}

impl Default for PrecisionFlags {
    fn default() -> Self {
        PrecisionFlags {
            exact_budget: 2_000_000,
            tuple_budget: 100_000_000,
            oracle_budget: 200_000,
            jacobi_direct_q_max: 31,
            kl_n_max: 4,
            lemma_kl_n_max: 4,
            lemma_kl_weight: 6,
            rconst_n_max: 7,
            rconst_weight: 8,
            timings: false,
        }
    }
}

fn default_m() -> OneOrMany<usize> {
    OneOrMany::One(2)
}
fn default_k_extra() -> OneOrMany<usize> {
    OneOrMany::One(0)
}
fn default_policy() -> OneOrMany<SubsetPolicy> {
    OneOrMany::One(SubsetPolicy::Full)
}
fn default_n_max() -> u32 {
    6
}
fn default_k_max() -> u32 {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// `(p, r)` pairs, `q = p^r`.
    pub fields: Vec<(u64, u32)>,
    #[serde(default = "default_m")]
    pub m: OneOrMany<usize>,
    #[serde(default = "default_k_extra")]
    pub k_extra: OneOrMany<usize>,
    /// Highest moment order checked against the moment bounds.
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Highest `K` tried in the Erdős–Turán bound.
    #[serde(default = "default_k_max", rename = "K_max", alias = "k_max")]
    pub k_max: u32,
    #[serde(default = "default_policy")]
    pub subset_policy: OneOrMany<SubsetPolicy>,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub precision: PrecisionFlags,
}

impl ExperimentConfig {
    /// A config with default options for the given fields and suites.
    pub fn new(fields: Vec<(u64, u32)>, suites: Vec<Suite>) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            fields,
            m: default_m(),
            k_extra: default_k_extra(),
            n_max: default_n_max(),
            k_max: default_k_max(),
            subset_policy: default_policy(),
            suites,
            output_path: None,
            precision: PrecisionFlags::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.fields.is_empty() {
            return bad("no fields given".into());
        }
        if self.suites.is_empty() {
            return bad("no suites given".into());
        }
        let mut qs = Vec::new();
        for &(p, r) in &self.fields {
            let pp = PrimePower::new(p, r).map_err(|e| Error::ConfigInvalid(format!("field ({p}, {r}): {e}")))?;
            qs.push(pp.q());
        }
        if self.n_max == 0 || self.k_max == 0 {
            return bad("n_max and K_max must be at least 1".into());
        }
        let ms = self.m.to_vec();
        let ks = self.k_extra.to_vec();
        if ms.is_empty() || ks.is_empty() {
            return bad("m and k_extra must not be empty".into());
        }
        let policies = self.subset_policy.to_vec();
        for policy in &policies {
            match policy {
                SubsetPolicy::Full => {}
                SubsetPolicy::Random { sizes, seeds } => {
                    if sizes.is_empty() || seeds.is_empty() {
                        return bad("random policy needs sizes and seeds".into());
                    }
                    for &q in &qs {
                        for s in sizes {
                            s.resolve(q)?;
                        }
                    }
                }
                SubsetPolicy::Explicit { lists } => {
                    if lists.is_empty() {
                        return bad("explicit policy needs at least one list".into());
                    }
                    for &q in &qs {
                        for l in lists {
                            CharSubset::explicit(q, l)
                                .map_err(|e| Error::ConfigInvalid(format!("explicit list {l:?} for q = {q}: {e}")))?;
                        }
                    }
                    for &k in &ks {
                        if lists.len() + k < 2 {
                            return bad(format!(
                                "family with m = {} and k_extra = {k} has fewer than two slots",
                                lists.len()
                            ));
                        }
                    }
                }
            }
        }
        for &m in &ms {
            for &k in &ks {
                if m == 0 || m + k < 2 {
                    return bad(format!("family with m = {m} and k_extra = {k} has fewer than two slots"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub suite: String,
    pub case: String,
    pub q: u32,
    pub m: u32,
    pub k: u32,
    pub n: u32,
    /// Subset sizes joined by `;`.
    pub sizes: String,
    pub seed: Option<u64>,
    #[serde(with = "nan_as_null")]
    pub measured: f64,
    #[serde(with = "nan_as_null")]
    pub bound: f64,
    pub pass: bool,
    pub value_re: Option<f64>,
    pub value_im: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub note: String,
}

impl ResultRow {
    pub fn new(suite: impl fmt::Display, case: impl Into<String>, q: u32) -> Self {
        ResultRow {
            suite: suite.to_string(),
            case: case.into(),
            q,
            m: 0,
            k: 0,
            n: 0,
            sizes: String::new(),
            seed: None,
            measured: f64::NAN,
            bound: f64::NAN,
            pass: false,
            value_re: None,
            value_im: None,
            wall_time_ms: None,
            note: String::new(),
        }
    }

    /// Set `measured`, `bound` and `pass = measured <= bound + slack`.
    pub fn check(mut self, measured: f64, bound: f64, slack: f64) -> Self {
        self.measured = measured;
        self.bound = bound;
        self.pass = measured <= bound + slack;
        self
    }

    pub fn value(mut self, z: Complex64) -> Self {
        self.value_re = Some(z.re);
        self.value_im = Some(z.im);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// A failed row carrying the error text.
    pub fn error(suite: impl fmt::Display, case: impl Into<String>, q: u32, err: &Error) -> Self {
        ResultRow::new(suite, case, q).note(format!("error: {err}"))
    }

    fn record(&self) -> [String; 15] {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        [
            self.suite.clone(),
            self.case.clone(),
            self.q.to_string(),
            self.m.to_string(),
            self.k.to_string(),
            self.n.to_string(),
            self.sizes.clone(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_f64(self.measured),
            fmt_f64(self.bound),
            self.pass.to_string(),
            opt(self.value_re),
            opt(self.value_im),
            opt(self.wall_time_ms),
            self.note.clone(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_COLUMNS.len() {
            return Err(Error::ConfigInvalid(format!(
                "CSV record has {} fields, expected {}",
                rec.len(),
                CSV_COLUMNS.len()
            )));
        }
        let bad = |col: &str, v: &str| Error::ConfigInvalid(format!("bad {col} value {v:?}"));
        let int = |i: usize| rec[i].parse::<u32>().map_err(|_| bad(CSV_COLUMNS[i], &rec[i]));
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[i], &rec[i]));
        let opt = |i: usize| if rec[i].is_empty() { Ok(None) } else { float(i).map(Some) };
        Ok(ResultRow {
            suite: rec[0].to_string(),
            case: rec[1].to_string(),
            q: int(2)?,
            m: int(3)?,
            k: int(4)?,
            n: int(5)?,
            sizes: rec[6].to_string(),
            seed: if rec[7].is_empty() { None } else { Some(rec[7].parse().map_err(|_| bad("seed", &rec[7]))?) },
            measured: float(8)?,
            bound: float(9)?,
            pass: rec[10].parse().map_err(|_| bad("pass", &rec[10]))?,
            value_re: opt(11)?,
            value_im: opt(12)?,
            wall_time_ms: opt(13)?,
            note: rec[14].to_string(),
        })
    }
}

/// JSON has no NaN; it travels as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "#schema={CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for row in rows {
        w.write_record(row.record()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let expected = format!("#schema={CSV_SCHEMA}");
    if first.trim_end() != expected {
        return Err(Error::ConfigInvalid(format!("unrecognized CSV schema line {first:?}")));
    }
    let mut rd = csv::Reader::from_reader(rest.as_bytes());
    let headers = rd.headers().map_err(|e| Error::Io(e.to_string()))?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::ConfigInvalid("CSV header does not match the schema".into()));
    }
    rd.records().map(|r| ResultRow::from_record(&r.map_err(|e| Error::Io(e.to_string()))?)).collect()
}

#[derive(Serialize, Deserialize)]
struct JsonDoc {
    schema: String,
    rows: Vec<ResultRow>,
}

pub fn to_json_string(rows: &[ResultRow]) -> String {
    let doc = JsonDoc { schema: CSV_SCHEMA.into(), rows: rows.to_vec() };
    serde_json::to_string_pretty(&doc).expect("rows serialize")
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRow>> {
    let doc: JsonDoc = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    if doc.schema != CSV_SCHEMA {
        return Err(Error::ConfigInvalid(format!("unrecognized schema {:?}", doc.schema)));
    }
    Ok(doc.rows)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Spreads tasks over the pool; each task then runs sequentially.
    pub exec: Execution,
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_config_with(cfg, RunOptions::default())
}

struct FieldCtx {
    p: u64,
    chars: Characters,
    gt: GaussTable,
}

#[derive(Debug, Clone)]
struct FamilySpec {
    subsets: Vec<CharSubset>,
    k_extra: usize,
    seed: Option<u64>,
    label: String,
}

enum Task {
    Gauss(usize),
    Jacobi(usize, usize),
    Kloosterman(usize),
    LemmaKl(usize),
    Family(usize, FamilySpec),
    Rconsts(u64),
}

/// Execute every requested suite. Row-level failures become `pass = false`
/// rows; only an invalid config is an error.
pub fn run_config_with(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let suites: BTreeSet<Suite> = cfg.suites.iter().copied().collect();
    let mut ctxs = Vec::new();
    for &(p, r) in &cfg.fields {
        let field = Arc::new(FieldTable::build(p, r)?);
        let chars = Characters::new(field);
        let gt = gauss_all(&chars);
        ctxs.push(FieldCtx { p, chars, gt });
    }

    let mut tasks = Vec::new();
    for (fi, ctx) in ctxs.iter().enumerate() {
        let q = ctx.chars.q();
        if suites.contains(&Suite::Gauss) {
            tasks.push(Task::Gauss(fi));
        }
        if suites.contains(&Suite::Jacobi) {
            for m in cfg.m.to_vec() {
                tasks.push(Task::Jacobi(fi, m));
            }
        }
        if suites.contains(&Suite::Kloosterman) {
            tasks.push(Task::Kloosterman(fi));
        }
        if suites.contains(&Suite::LemmaKl) {
            tasks.push(Task::LemmaKl(fi));
        }
        if [Suite::Discrepancy, Suite::Moments, Suite::Bounds].iter().any(|s| suites.contains(s)) {
            for fam in families(cfg, q) {
                tasks.push(Task::Family(fi, fam));
            }
        }
    }
    if suites.contains(&Suite::Rconsts) {
        let ps: BTreeSet<u64> = ctxs.iter().map(|c| c.p).collect();
        tasks.extend(ps.into_iter().map(Task::Rconsts));
    }

    let batches = opts.exec.map_slice(&tasks, |task| {
        let start = Instant::now();
        let mut rows = match task {
            Task::Gauss(fi) => gauss_rows(&ctxs[*fi]),
            Task::Jacobi(fi, m) => jacobi_rows(&ctxs[*fi], *m, &cfg.precision),
            Task::Kloosterman(fi) => kloosterman_rows(&ctxs[*fi], &cfg.precision),
            Task::LemmaKl(fi) => lemma_rows(&ctxs[*fi], &cfg.precision),
            Task::Family(fi, fam) => family_rows(&ctxs[*fi], fam, cfg, &suites),
            Task::Rconsts(p) => rconst_rows(*p, &cfg.precision),
        };
        if cfg.precision.timings {
            let ms = start.elapsed().as_secs_f64() * 1e3;
            for r in &mut rows {
                r.wall_time_ms = Some(ms);
            }
        }
        rows
    });
    let mut rows: Vec<ResultRow> = batches.into_iter().flatten().collect();
    let order = |s: &str| Suite::from_str(s).map(|x| x as usize).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| (order(&a.suite), a.q, a.seed).cmp(&(order(&b.suite), b.q, b.seed)));
    Ok(rows)
}

fn families(cfg: &ExperimentConfig, q: u32) -> Vec<FamilySpec> {
    let mut out = Vec::new();
    let ks = cfg.k_extra.to_vec();
    for policy in cfg.subset_policy.to_vec() {
        match policy {
            SubsetPolicy::Full => {
                for &m in &cfg.m.to_vec() {
                    for &k in &ks {
                        let subsets = vec![CharSubset::full(q); m];
                        out.push(FamilySpec { subsets, k_extra: k, seed: None, label: "full".into() });
                    }
                }
            }
            SubsetPolicy::Random { sizes, seeds } => {
                for &m in &cfg.m.to_vec() {
                    for &k in &ks {
                        for size in &sizes {
                            let a = size.resolve(q).expect("validated") as usize;
                            for &seed in &seeds {
                                let subsets = (0..m)
                                    .map(|i| random_subset_stream(q, a, seed, i as u64).expect("validated size"))
                                    .collect();
                                out.push(FamilySpec { subsets, k_extra: k, seed: Some(seed), label: "random".into() });
                            }
                        }
                    }
                }
            }
            SubsetPolicy::Explicit { lists } => {
                let subsets: Vec<CharSubset> =
                    lists.iter().map(|l| CharSubset::explicit(q, l).expect("validated")).collect();
                for &k in &ks {
                    out.push(FamilySpec { subsets: subsets.clone(), k_extra: k, seed: None, label: "explicit".into() });
                }
            }
        }
    }
    out
}

fn gauss_rows(ctx: &FieldCtx) -> Vec<ResultRow> {
    let q = ctx.chars.q();
    let sq = (q as f64).sqrt();
    let mut rows = Vec::with_capacity(q as usize - 1);
    let g0 = ctx.gt.values[0];
    rows.push(
        ResultRow::new(Suite::Gauss, "trivial", q)
            .check((g0 + 1.0).norm(), GAUSS_TRIVIAL_TOL, 0.0)
            .value(g0)
            .note("|G(1) + 1|"),
    );
    for (j, &g) in ctx.gt.values.iter().enumerate().skip(1) {
        let mut r = ResultRow::new(Suite::Gauss, format!("chi={j}"), q)
            .check((g.norm() - sq).abs(), GAUSS_REL_TOL * sq, 0.0)
            .value(g);
        r.m = 1;
        rows.push(r);
    }
    rows
}

/// Every tuple of nontrivial characters with nontrivial product, as exponents.
fn nontrivial_tuples(q: u32, m: usize, budget: u64) -> Result<Vec<Vec<u32>>> {
    let units = q - 1;
    let total = ((q - 2) as u128).pow(m as u32);
    if total > budget as u128 {
        return Err(Error::TupleBudgetExceeded { count: total, cap: budget as u128 });
    }
    let mut out = Vec::new();
    let mut cur = vec![1u32; m];
    loop {
        if cur.iter().map(|&j| j as u64).sum::<u64>() % units as u64 != 0 {
            out.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == m {
                return Ok(out);
            }
            cur[i] += 1;
            if cur[i] < units {
                break;
            }
            cur[i] = 1;
            i += 1;
        }
    }
}

fn jacobi_rows(ctx: &FieldCtx, m: usize, prec: &PrecisionFlags) -> Vec<ResultRow> {
    let q = ctx.chars.q();
    let scale = (q as f64).powf((m as f64 - 1.0) / 2.0);
    let tag = |mut r: ResultRow| {
        r.m = m as u32;
        r
    };
    let tuples = match nontrivial_tuples(q, m, prec.tuple_budget) {
        Ok(t) => t,
        Err(e) => return vec![tag(ResultRow::error(Suite::Jacobi, "modulus", q, &e))],
    };
    let mut worst_mod: f64 = 0.0;
    let mut worst_route: f64 = 0.0;
    let direct = q <= prec.jacobi_direct_q_max;
    for t in &tuples {
        let chis: Vec<MulChar> = t.iter().map(|&j| MulChar { j }).collect();
        let jg = match jacobi_via_gauss(&ctx.gt, &chis) {
            Ok(v) => v,
            Err(e) => return vec![tag(ResultRow::error(Suite::Jacobi, "modulus", q, &e))],
        };
        worst_mod = worst_mod.max((jg.norm() - scale).abs() / scale);
        if direct {
            match jacobi_direct(&ctx.chars, &chis) {
                Ok(jd) => worst_route = worst_route.max((jd - jg).norm() / scale),
                Err(e) => return vec![tag(ResultRow::error(Suite::Jacobi, "direct-vs-gauss", q, &e))],
            }
        }
    }
    let mut rows = vec![tag(ResultRow::new(Suite::Jacobi, "modulus", q)
        .check(worst_mod, JACOBI_MODULUS_TOL, 0.0)
        .note(format!("max ||J| - q^((m-1)/2)| / q^((m-1)/2) over {} tuples", tuples.len())))];
    if direct {
        rows.push(tag(ResultRow::new(Suite::Jacobi, "direct-vs-gauss", q)
            .check(worst_route, JACOBI_ROUTE_TOL, 0.0)
            .note(format!("max |J_direct - J_gauss| / q^((m-1)/2) over {} tuples", tuples.len()))));
    }
    rows
}

fn kloosterman_rows(ctx: &FieldCtx, prec: &PrecisionFlags) -> Vec<ResultRow> {
    let q = ctx.chars.q();
    let qf = q as f64;
    let mut rows = Vec::new();
    for n in 1..=prec.kl_n_max {
        let tag = |mut r: ResultRow| {
            r.n = n;
            r
        };
        let direct = match kloosterman_direct_all(&ctx.chars, n) {
            Ok(t) => t,
            Err(e) => {
                rows.push(tag(ResultRow::error(Suite::Kloosterman, "dft-vs-direct", q, &e)));
                continue;
            }
        };
        let floor = qf.powf((n as f64 - 1.0) / 2.0);
        match kloosterman_all(&ctx.gt, n) {
            Ok(fast) => {
                let err = fast
                    .values
                    .iter()
                    .zip(&direct.values)
                    .map(|(a, b)| (a - b).norm() / b.norm().max(floor))
                    .fold(0.0, f64::max);
                rows.push(tag(ResultRow::new(Suite::Kloosterman, "dft-vs-direct", q).check(err, KL_ROUTE_TOL, 0.0)));
            }
            Err(e) => rows.push(tag(ResultRow::error(Suite::Kloosterman, "dft-vs-direct", q, &e))),
        }
        // sum_a Kl_n(a) chi_j(a) against G(chi_j)^n, all j at once.
        let units = direct.values.len() as f64;
        let scale = qf.powf(n as f64 / 2.0);
        let fourier = dft::idft(&direct.values);
        let err =
            fourier.iter().zip(&ctx.gt.values).map(|(s, g)| (s * units - g.powu(n)).norm() / scale).fold(0.0, f64::max);
        rows.push(tag(ResultRow::new(Suite::Kloosterman, "fourier", q)
            .check(err, KL_ROUTE_TOL, 0.0)
            .note("max_j |sum_a Kl_n(a) chi_j(a) - G(chi_j)^n| / q^(n/2)")));
        let peak = direct.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let weil = n as f64 * floor;
        rows.push(tag(ResultRow::new(Suite::Kloosterman, "weil", q)
            .check(peak, weil, tau(q as usize, weil))
            .note("max_a |Kl_n(a)| against n q^((n-1)/2)")));
    }
    rows
}

fn lemma_rows(ctx: &FieldCtx, prec: &PrecisionFlags) -> Vec<ResultRow> {
    let q = ctx.chars.q();
    let mut rows = Vec::new();
    for n in 1..=prec.lemma_kl_n_max {
        let kt = match kloosterman_table(&ctx.chars, &ctx.gt, n) {
            Ok(t) => t,
            Err(e) => {
                let mut r = ResultRow::error(Suite::LemmaKl, "untwisted", q, &e);
                r.n = n;
                rows.push(r);
                continue;
            }
        };
        let units = kt.values.len();
        let mag = n as f64 * (q as f64).powf((n as f64 - 1.0) / 2.0);
        for w in 1..=prec.lemma_kl_weight {
            for k in 0..=w {
                let l = w - k;
                let terms: Vec<Complex64> = kt.values.iter().map(|v| v.powu(k) * v.conj().powu(l)).collect();
                let slack = tau(units, mag.powi(w as i32)) * 64.0;
                // One inverse transform gives the twists by every chi_j.
                let twists = dft::idft(&terms);
                let untwisted = twists[0] * units as f64;
                let twisted_max = twists.iter().skip(1).map(|z| z.norm() * units as f64).fold(0.0, f64::max);
                for twisted in [false, true] {
                    let case = format!("{} k={k} l={l}", if twisted { "twisted" } else { "untwisted" });
                    let row = r_for(ctx.p, n, k, l).and_then(|r| lemma_kl_rhs(q, n, k, l, twisted, r).map(|b| (r, b)));
                    let mut row = match row {
                        Ok((r, bound)) => {
                            let measured = if twisted { twisted_max } else { untwisted.norm() };
                            let group = group_for(ctx.p, n).map(|g| g.name()).unwrap_or_default();
                            let mut row = ResultRow::new(Suite::LemmaKl, case, q)
                                .check(measured, bound, slack)
                                .note(format!("{group} R={r}"));
                            if !twisted {
                                row = row.value(untwisted);
                            } else {
                                row.note.push_str("; max over nontrivial chi");
                            }
                            row
                        }
                        Err(e) => ResultRow::error(Suite::LemmaKl, case, q, &e),
                    };
                    row.n = n;
                    row.k = k;
                    rows.push(row);
                }
            }
        }
    }
    rows
}

/// Everything the family suites need, computed once.
struct FamilyData {
    slots: Vec<Vec<u32>>,
    n_points: u128,
    exact: Option<DiscrepancyResult>,
    tuples: u128,
    moments: Vec<Complex64>,
    et: Result<(usize, f64)>,
}

fn analyze_family(ctx: &FieldCtx, fam: &FamilySpec, cfg: &ExperimentConfig) -> Result<FamilyData> {
    let q = ctx.chars.q();
    let slots = family_slots(q, &fam.subsets, fam.k_extra)?;
    let n_points = family_size(q - 1, &slots);
    let tuples = tuple_total(&slots);
    let exec = Execution::Sequential;
    let exact = if tuples <= cfg.precision.exact_budget as u128 {
        let angles = jacobi_angles(&ctx.gt, &slots, exec, cfg.precision.tuple_budget as u128)?;
        Some(discrepancy_exact(&CirclePoints::from_angles_with(angles, exec)))
    } else {
        None
    };
    let moments = moments_of_slots(&ctx.gt, &slots, cfg.n_max.max(cfg.k_max), exec)?;
    let abs: Vec<f64> = moments.iter().map(|z| z.norm()).collect();
    let et = u64::try_from(n_points)
        .map_err(|_| Error::DomainError("family too large".into()))
        .and_then(|n| erdos_turan_best(&abs, n, cfg.k_max as usize));
    Ok(FamilyData { slots, n_points, exact, tuples, moments, et })
}

fn family_rows(ctx: &FieldCtx, fam: &FamilySpec, cfg: &ExperimentConfig, suites: &BTreeSet<Suite>) -> Vec<ResultRow> {
    let q = ctx.chars.q();
    let sizes: Vec<u64> = fam.subsets.iter().map(|s| s.len() as u64).collect();
    let tag = |mut r: ResultRow| {
        r.m = fam.subsets.len() as u32;
        r.k = fam.k_extra as u32;
        r.sizes = sizes.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        r.seed = fam.seed;
        if r.note.is_empty() {
            r.note = fam.label.clone();
        } else {
            r.note = format!("{}; {}", fam.label, r.note);
        }
        r
    };
    let data = match analyze_family(ctx, fam, cfg) {
        Ok(d) => d,
        Err(e) => {
            return [Suite::Discrepancy, Suite::Moments, Suite::Bounds]
                .into_iter()
                .filter(|s| suites.contains(s))
                .map(|s| tag(ResultRow::error(s, "family", q, &e)))
                .collect();
        }
    };
    let mut rows = Vec::new();
    // Upper estimate of D used in the domination rows: the exact value, or
    // the Erdős–Turán certificate when the family is over the exact budget.
    let d_upper: Result<(f64, String)> = match (&data.exact, &data.et) {
        (Some(res), _) => Ok((res.d, "exact D".into())),
        (None, Ok((k, v))) => {
            Ok((v.min(1.0), format!("D <= Erdős–Turán certificate (K={k}); {} tuples over exact budget", data.tuples)))
        }
        (None, Err(e)) => Err(e.clone()),
    };

    if suites.contains(&Suite::Discrepancy) {
        match &data.exact {
            Some(res) => {
                let note = match res.witness {
                    Some(w) => format!(
                        "N={} witness {} arc [{:.12}, {:.12}] holding {} points",
                        data.n_points,
                        if w.closed { "closed" } else { "open" },
                        w.start,
                        w.end,
                        w.count
                    ),
                    None => "N=0".into(),
                };
                rows.push(tag(ResultRow::new(Suite::Discrepancy, "D", q).check(res.d, 1.0, 1e-12).note(note)));
                match &data.et {
                    Ok((k, v)) => rows.push(tag(ResultRow::new(Suite::Discrepancy, "erdos-turan", q)
                        .check(res.d, *v, 1e-12)
                        .note(format!("best K={k}")))),
                    Err(e) => rows.push(tag(ResultRow::error(Suite::Discrepancy, "erdos-turan", q, e))),
                }
            }
            None => match &d_upper {
                Ok((v, note)) => rows.push(tag(ResultRow::new(Suite::Discrepancy, "D-certificate", q)
                    .check(*v, 1.0, 1e-12)
                    .note(format!("N={} {note}", data.n_points)))),
                Err(e) => rows.push(tag(ResultRow::error(Suite::Discrepancy, "D-certificate", q, e))),
            },
        }
    }

    if suites.contains(&Suite::Moments) {
        let nf = data.n_points as f64;
        for (i, z) in data.moments.iter().take(cfg.n_max as usize).enumerate() {
            let mut r = ResultRow::new(Suite::Moments, "M", q)
                .check(z.norm(), nf, tau(data.n_points as usize, 1.0))
                .value(*z)
                .note(format!("N={}", data.n_points));
            r.n = i as u32 + 1;
            rows.push(tag(r));
        }
        if data.tuples <= cfg.precision.oracle_budget as u128 {
            let n_max = cfg.n_max.min(data.moments.len() as u32);
            match moments_brute(&ctx.gt, &data.slots, n_max) {
                Ok(slow) => {
                    let err = data
                        .moments
                        .iter()
                        .zip(&slow)
                        .map(|(a, b)| (a - b).norm() / b.norm().max(1.0))
                        .fold(0.0, f64::max);
                    rows.push(tag(ResultRow::new(Suite::Moments, "oracle", q)
                        .check(err, MOMENT_ORACLE_TOL, 0.0)
                        .note(format!("convolution vs brute force, n <= {n_max}"))));
                }
                Err(e) => rows.push(tag(ResultRow::error(Suite::Moments, "oracle", q, &e))),
            }
        }
    }

    if suites.contains(&Suite::Bounds) {
        let all_sizes: Vec<u64> = sizes.iter().copied().chain(std::iter::repeat_n(q as u64 - 2, fam.k_extra)).collect();
        let all_full = sizes.iter().all(|&a| a == q as u64 - 2);
        let total_slots = all_sizes.len() as u32;
        let k = fam.k_extra as u32;
        let m = sizes.len();
        let mut d_bounds: Vec<(&str, Result<f64>)> = vec![("t1", rhs_theorem1_family(q, &all_sizes))];
        let over_a1 = |f: &dyn Fn(u64) -> Result<f64>| -> Result<f64> {
            sizes.iter().map(|&a| f(a)).try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
        };
        if k >= 2 {
            d_bounds.push(("t2", over_a1(&|a| rhs_theorem2(q, k, m, a))));
        } else if k == 1 {
            d_bounds.push(("t2-k1", over_a1(&|a| rhs_theorem2_k1(q, m, a))));
            let large: Vec<u64> = sizes.iter().copied().filter(|&a| (a as u128).pow(4) >= (q as u128).pow(3)).collect();
            if !large.is_empty() {
                let v = large
                    .iter()
                    .map(|&a| rhs_theorem2_k1_large(q, a))
                    .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)));
                d_bounds.push(("t2-k1-large", v));
            }
        }
        if all_full && total_slots >= 2 {
            d_bounds.push(("t3", rhs_theorem3(q, total_slots)));
        }
        for (case, bound) in d_bounds {
            let row = match (&d_upper, bound) {
                (Ok((d, note)), Ok(b)) => ResultRow::new(Suite::Bounds, case, q).check(*d, b, 1e-12).note(note.clone()),
                (Err(e), _) => ResultRow::error(Suite::Bounds, case, q, e),
                (_, Err(e)) => ResultRow::error(Suite::Bounds, case, q, &e),
            };
            rows.push(tag(row));
        }

        let slack = tau(data.n_points as usize, 1.0);
        for n in 1..=cfg.n_max.min(data.moments.len() as u32) {
            let measured = data.moments[n as usize - 1].norm();
            let mut m_bounds: Vec<(&str, Result<f64>)> = vec![("moment1", rhs_moment1(q, n, &all_sizes))];
            if k >= 1 {
                let b = r_for(ctx.p, n, k, 1)
                    .and_then(|r1| r_for(ctx.p, n, k + 1, k + 1).map(|r2| (r1, r2)))
                    .and_then(|(r1, r2)| rhs_m2(q, n, k, &sizes, r1, r2));
                m_bounds.push(("m2", b));
            }
            if all_full && total_slots >= 2 {
                m_bounds.push(("m3", r_for(ctx.p, n, total_slots, 1).and_then(|r| rhs_m3(q, n, total_slots, r))));
            }
            for (case, bound) in m_bounds {
                let mut row = match bound {
                    Ok(b) => ResultRow::new(Suite::Bounds, case, q).check(measured, b, slack),
                    Err(e) => ResultRow::error(Suite::Bounds, case, q, &e),
                };
                row.n = n;
                rows.push(tag(row));
            }
        }
    }
    rows
}

fn rconst_rows(p: u64, prec: &PrecisionFlags) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for n in 1..=prec.rconst_n_max {
        let group = match group_for(p, n) {
            Ok(g) => g,
            Err(e) => {
                let mut r = ResultRow::error(Suite::Rconsts, "group", p as u32, &e);
                r.n = n;
                rows.push(r);
                continue;
            }
        };
        for w in 0..=prec.rconst_weight {
            for k in 0..=w {
                let l = w - k;
                let query = RQuery { group, k, l };
                let case = format!("{} k={k} l={l}", group.name());
                let mut row = match r_lookup(query) {
                    Ok(v) => {
                        let exact = v.to_string();
                        let measured: f64 = exact.parse().unwrap_or(f64::INFINITY);
                        ResultRow::new(Suite::Rconsts, case, p as u32)
                            .check(measured, r_bounds(query), 0.0)
                            .note(format!("R={exact}"))
                    }
                    Err(e) => ResultRow::error(Suite::Rconsts, case, p as u32, &e),
                };
                row.n = n;
                row.k = k;
                rows.push(row);
            }
        }
    }
    rows
}

/// The rows whose `pass` flag is false.
pub fn failures(rows: &[ResultRow]) -> Vec<&ResultRow> {
    rows.iter().filter(|r| !r.pass).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(json)
    }

    #[test]
    fn minimal_gauss_config() {
        let c = cfg(r#"{"version":1,"fields":[[7,1]],"suites":["gauss"]}"#).unwrap();
        let rows = run_config(&c).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| r.case == "trivial").count(), 1);
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(cfg(r#"{"version":1,"fields":[[7,1]],"suites":["gauss"],"extra":1}"#).is_err());
        assert!(cfg(r#"{"version":2,"fields":[[7,1]],"suites":["gauss"]}"#).is_err());
        assert!(cfg(r#"{"version":1,"fields":[[6,1]],"suites":["gauss"]}"#).is_err());
        assert!(cfg(r#"{"version":1,"fields":[[7,1]],"suites":["nope"]}"#).is_err());
        let big = r#"{"version":1,"fields":[[7,1]],"suites":["bounds"],
            "subset_policy":{"kind":"random","sizes":[6],"seeds":[1]}}"#;
        assert!(matches!(cfg(big), Err(Error::ConfigInvalid(_))));
        let one_slot = r#"{"version":1,"fields":[[7,1]],"suites":["moments"],"m":1}"#;
        assert!(cfg(one_slot).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{"version":1,"fields":[[3,2],[11,1]],"m":[2,3],"k_extra":[0,1],"n_max":4,"K_max":20,
            "subset_policy":[{"kind":"full"},{"kind":"random","sizes":[3,[1,2]],"seeds":[0,5]}],
            "suites":["discrepancy","bounds"],"precision":{"exact_budget":1000}}"#;
        let c = cfg(text).unwrap();
        assert_eq!(c.k_max, 20);
        assert_eq!(c.precision.exact_budget, 1000);
        assert_eq!(c.precision.oracle_budget, PrecisionFlags::default().oracle_budget);
        let again = cfg(&c.to_json()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn size_specs_resolve() {
        assert_eq!(SizeSpec::Frac([1, 4]).resolve(101).unwrap(), 25);
        assert_eq!(SizeSpec::Frac([1, 2]).resolve(11).unwrap(), 5);
        assert_eq!(SizeSpec::Frac([1, 4]).resolve(11).unwrap(), 3);
        assert!(SizeSpec::Abs(0).resolve(11).is_err());
    }

    #[test]
    fn full_family_at_101_meets_the_two_slot_bound() {
        let c = ExperimentConfig::new(vec![(101, 1)], vec![Suite::Discrepancy, Suite::Bounds]);
        let rows = run_config(&c).unwrap();
        let t1 = rows.iter().find(|r| r.suite == "bounds" && r.case == "t1").unwrap();
        let d = rows.iter().find(|r| r.suite == "discrepancy" && r.case == "D").unwrap();
        assert_eq!(t1.measured, d.measured);
        assert_eq!(t1.bound, crate::moments_bounds::rhs_theorem1(101, 99, 99).unwrap());
        assert!(rows.iter().all(|r| r.pass), "{:?}", failures(&rows));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut c = ExperimentConfig::new(vec![(7, 1), (3, 2)], vec![Suite::Gauss, Suite::Moments, Suite::Rconsts]);
        c.subset_policy = OneOrMany::Many(vec![
            SubsetPolicy::Full,
            SubsetPolicy::Random { sizes: vec![SizeSpec::Abs(2)], seeds: vec![3, 1] },
        ]);
        let rows = run_config(&c).unwrap();
        let text = to_csv_string(&rows);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.record(), b.record());
            assert_eq!(a.measured.to_bits(), b.measured.to_bits());
            assert_eq!(a.value_re.map(f64::to_bits), b.value_re.map(f64::to_bits));
        }
        assert_eq!(to_csv_string(&back), text);
        assert_eq!(to_csv_string(&run_config(&c).unwrap()), text);
    }

    #[test]
    fn rows_are_sorted_by_suite_q_seed() {
        let mut c = ExperimentConfig::new(vec![(11, 1), (7, 1)], vec![Suite::Moments, Suite::Gauss]);
        c.subset_policy = OneOrMany::One(SubsetPolicy::Random { sizes: vec![SizeSpec::Abs(3)], seeds: vec![9, 2] });
        let rows = run_config(&c).unwrap();
        let keys: Vec<(String, u32, Option<u64>)> = rows.iter().map(|r| (r.suite.clone(), r.q, r.seed)).collect();
        assert_eq!(keys.first().unwrap().0, "gauss");
        assert_eq!(keys.first().unwrap().1, 7);
        let moments: Vec<_> = keys.iter().filter(|k| k.0 == "moments").collect();
        assert!(moments.windows(2).all(|w| (w[0].1, w[0].2) <= (w[1].1, w[1].2)));
    }

    #[test]
    fn per_row_errors_do_not_abort() {
        // m = 3 at q = 7 enumerates 125 tuples, over a budget of 100.
        let mut c = ExperimentConfig::new(vec![(7, 1)], vec![Suite::Jacobi, Suite::Gauss]);
        c.m = OneOrMany::Many(vec![2, 3]);
        c.precision.tuple_budget = 100;
        let rows = run_config(&c).unwrap();
        let bad = failures(&rows);
        assert_eq!(bad.len(), 1);
        assert!(bad[0].note.starts_with("error:"));
        assert_eq!(rows.iter().filter(|r| r.suite == "gauss").count(), 6);
    }

    #[test]
    fn json_rows_round_trip() {
        let c = ExperimentConfig::new(vec![(5, 1)], vec![Suite::Gauss]);
        let mut rows = run_config(&c).unwrap();
        assert_eq!(parse_json(&to_json_string(&rows)).unwrap(), rows);
        rows.push(ResultRow::error(Suite::Bounds, "t1", 5, &Error::ZeroArgument));
        let back = parse_json(&to_json_string(&rows)).unwrap();
        assert!(back.last().unwrap().measured.is_nan());
        assert_eq!(back.last().unwrap().record(), rows.last().unwrap().record());
    }
}
