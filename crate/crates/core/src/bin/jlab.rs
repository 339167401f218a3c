//! `jlab`: command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check or bound is violated, 2 on usage
//! or input errors. `JACOBI_LAB_THREADS` sets the worker count.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jacobi_lab::characters::{random_subset_stream, CharSubset, Characters, MulChar};
use jacobi_lab::discrepancy::{discrepancy_exact, family_size, family_slots, jacobi_angles, CirclePoints};
use jacobi_lab::exec::Execution;
use jacobi_lab::exp_sums::{gauss_all, gauss_sum_naive, jacobi_direct, jacobi_via_gauss, kloosterman_table};
use jacobi_lab::finite_field::{FieldElem, FieldTable};
use jacobi_lab::invariant_dims::{group_for, r_bounds, r_lookup, GroupSpec, RQuery};
use jacobi_lab::moments_bounds::{erdos_turan_best, moments_of_slots};
use jacobi_lab::report::{self, failures, ExperimentConfig, ResultRow, RunOptions};
use jacobi_lab::verify::{self, VerifyOptions};
use jacobi_lab::{Complex64, Error};

#[derive(Parser)]
#[command(name = "jlab", version, about = "Exponential sums over finite fields: values, discrepancy, bounds")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random subsets.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run data-parallel loops sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Field order (a prime power).
    #[arg(long, conflicts_with_all = ["p", "r"])]
    q: Option<u64>,
    /// Characteristic, used with --r.
    #[arg(long, requires = "r")]
    p: Option<u64>,
    /// Degree over the prime field.
    #[arg(long, requires = "p")]
    r: Option<u32>,
}

impl FieldArgs {
    fn build(&self) -> Result<FieldTable, Error> {
        match (self.q, self.p, self.r) {
            (Some(q), _, _) => FieldTable::for_order(q),
            (None, Some(p), Some(r)) => FieldTable::build(p, r),
            _ => Err(Error::ConfigInvalid("give --q or both --p and --r".into())),
        }
    }
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Number of chosen subsets.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Number of extra slots running over every nontrivial character.
    #[arg(long, default_value_t = 0)]
    k_extra: usize,
    /// Every subset is the full set of nontrivial characters (the default).
    #[arg(long, conflicts_with_all = ["size", "explicit"])]
    full: bool,
    /// Random subsets of this size, drawn from --seed.
    #[arg(long, conflicts_with = "explicit")]
    size: Option<usize>,
    /// Explicit subsets: index lists separated by ';', e.g. "1,2;3,4".
    #[arg(long)]
    explicit: Option<String>,
}

impl FamilyArgs {
    fn subsets(&self, q: u32, seed: u64) -> Result<(Vec<CharSubset>, Option<u64>), Error> {
        if let Some(spec) = &self.explicit {
            let lists = spec
                .split(';')
                .map(|l| parse_list(l).and_then(|v| CharSubset::explicit(q, &v)))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((lists, None));
        }
        if let Some(size) = self.size {
            let subsets =
                (0..self.m).map(|i| random_subset_stream(q, size, seed, i as u64)).collect::<Result<Vec<_>, _>>()?;
            return Ok((subsets, Some(seed)));
        }
        Ok((vec![CharSubset::full(q); self.m], None))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Field parameters: modulus, generator, optional log/Zech table.
    Field {
        #[command(flatten)]
        field: FieldArgs,
        /// Print the table of g^k and Zech logarithms.
        #[arg(long)]
        table: bool,
    },
    /// Gauss sums G(psi_1, chi_j).
    Gauss {
        #[command(flatten)]
        field: FieldArgs,
        /// Character indices (all when omitted).
        #[arg(long, value_delimiter = ',')]
        chi: Vec<i64>,
    },
    /// Jacobi sum J(chi_{j1}, ..., chi_{jm}).
    Jacobi {
        #[command(flatten)]
        field: FieldArgs,
        /// Character indices, comma separated.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        chars: Vec<i64>,
        /// Use the direct additive convolution even when the Gauss route applies.
        #[arg(long)]
        direct: bool,
    },
    /// Kloosterman sums Kl_n(g^t).
    Kloosterman {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Exponents t of the arguments g^t (all when omitted).
        #[arg(long, value_delimiter = ',')]
        t: Vec<u32>,
    },
    /// Exact discrepancy of a normalized Jacobi-sum family.
    Discrepancy {
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Moments of a family and the Erdős–Turán bound.
    Moments {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 6)]
        n_max: u32,
        /// Highest K tried in the Erdős–Turán bound.
        #[arg(long, default_value_t = 50)]
        k_max: u32,
    },
    /// Invariant dimension R^{k,l} of a monodromy group.
    Rconst {
        /// mu, sp, sl, so or g2; omitted means the group of (--p, --n).
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        p: Option<u64>,
        /// Walk length k + l for the self-dual groups (sets k = steps, l = 0).
        #[arg(long, conflicts_with_all = ["k", "l"])]
        steps: Option<u32>,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        l: u32,
    },
    /// Run acceptance criteria.
    Verify {
        /// all, or a comma-separated list of criterion numbers.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Exact discrepancy budget for the sweep criterion.
        #[arg(long, default_value_t = VerifyOptions::default().exact_budget)]
        exact_budget: u64,
    },
    /// Run a JSON experiment config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Fill the wall_time_ms column.
        #[arg(long)]
        timings: bool,
    },
}

struct Output {
    text: String,
    rows: Vec<ResultRow>,
    violated: bool,
}

impl Output {
    fn new(text: String, rows: Vec<ResultRow>) -> Self {
        Output { text, rows, violated: false }
    }
}

fn parse_list(s: &str) -> Result<Vec<i64>, Error> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<i64>().map_err(|_| Error::ConfigInvalid(format!("bad index {t:?}"))))
        .collect()
}

fn cx(z: Complex64) -> String {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    format!("{re:.12}{}{:.12}i", if im < 0.0 { "-" } else { "+" }, im.abs())
}

fn info_row(suite: &str, case: impl Into<String>, q: u32) -> ResultRow {
    let mut r = ResultRow::new(suite, case, q);
    r.pass = true;
    r
}

fn chars_for(field: &FieldArgs) -> Result<Characters, Error> {
    Ok(Characters::new(Arc::new(field.build()?)))
}

fn cmd_field(field: &FieldArgs, table: bool) -> Result<Output, Error> {
    let f = field.build()?;
    let q = f.q();
    let modulus: Vec<String> = f.modulus().iter().map(u32::to_string).collect();
    let gen = f.generator_index();
    let mut text = format!(
        "q = {q} = {}^{}\nmodulus coefficients (low to high): [{}]\ngenerator g has index {gen}\n",
        f.p(),
        f.r(),
        modulus.join(", ")
    );
    if table {
        text.push_str("k\tindex(g^k)\tzech(k)\n");
        for k in 0..f.units() {
            let z = f.zech(k).map(|z| z.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(text, "{k}\t{}\t{z}", f.exp_index(k));
        }
    }
    let row = info_row("field", "field", q).note(format!(
        "p={} r={} modulus=[{}] generator={gen}",
        f.p(),
        f.r(),
        modulus.join(";")
    ));
    Ok(Output::new(text, vec![row]))
}

fn cmd_gauss(field: &FieldArgs, chi: &[i64]) -> Result<Output, Error> {
    let chars = chars_for(field)?;
    let q = chars.q();
    let gt = gauss_all(&chars);
    let js: Vec<MulChar> =
        if chi.is_empty() { chars.enumerate_xbar() } else { chi.iter().map(|&j| chars.mul_char(j)).collect() };
    let mut text = String::new();
    let mut rows = Vec::new();
    for c in js {
        let g = gt.get(c);
        let naive = gauss_sum_naive(&chars, gt.psi, c);
        let _ = writeln!(
            text,
            "G(chi_{}) = {}  |G| = {:.12}  naive difference {:.2e}",
            c.j,
            cx(g),
            g.norm(),
            (g - naive).norm()
        );
        let mut r = info_row("gauss", format!("chi={}", c.j), q).value(g);
        r.measured = g.norm();
        rows.push(r);
    }
    Ok(Output::new(text, rows))
}

fn cmd_jacobi(field: &FieldArgs, idx: &[i64], direct: bool) -> Result<Output, Error> {
    let chars = chars_for(field)?;
    let q = chars.q();
    if idx.len() < 2 {
        return Err(Error::ConfigInvalid("a Jacobi sum needs at least two characters".into()));
    }
    let chis: Vec<MulChar> = idx.iter().map(|&j| chars.mul_char(j)).collect();
    let gt = gauss_all(&chars);
    let (v, route) = if direct {
        (jacobi_direct(&chars, &chis)?, "direct")
    } else {
        match jacobi_via_gauss(&gt, &chis) {
            Ok(v) => (v, "gauss"),
            Err(Error::ProductTrivial | Error::TrivialCharacter) => (jacobi_direct(&chars, &chis)?, "direct"),
            Err(e) => return Err(e),
        }
    };
    let names: Vec<String> = chis.iter().map(|c| format!("chi_{}", c.j)).collect();
    let text = format!("J({}) over F_{q} = {}  |J| = {:.12}  ({route} route)\n", names.join(", "), cx(v), v.norm());
    let mut row = info_row("jacobi", names.join(";"), q).value(v).note(route);
    row.m = chis.len() as u32;
    row.measured = v.norm();
    Ok(Output::new(text, vec![row]))
}

fn cmd_kloosterman(field: &FieldArgs, n: u32, ts: &[u32]) -> Result<Output, Error> {
    let chars = chars_for(field)?;
    let q = chars.q();
    let gt = gauss_all(&chars);
    let kt = kloosterman_table(&chars, &gt, n)?;
    let ts: Vec<u32> = if ts.is_empty() { (0..q - 1).collect() } else { ts.iter().map(|t| t % (q - 1)).collect() };
    let mut text = String::new();
    let mut rows = Vec::new();
    for t in ts {
        let v = kt.at(FieldElem::Pow(t))?;
        let _ = writeln!(text, "Kl_{n}(g^{t}) = {}", cx(v));
        let mut r = info_row("kloosterman", format!("t={t}"), q).value(v);
        r.n = n;
        r.measured = v.norm();
        rows.push(r);
    }
    Ok(Output::new(text, rows))
}

fn exec(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn family_tag(r: &mut ResultRow, subsets: &[CharSubset], k_extra: usize, seed: Option<u64>) {
    r.m = subsets.len() as u32;
    r.k = k_extra as u32;
    r.sizes = subsets.iter().map(|s| s.len().to_string()).collect::<Vec<_>>().join(";");
    r.seed = seed;
}

fn cmd_discrepancy(cli: &Cli, fam: &FamilyArgs) -> Result<Output, Error> {
    let chars = chars_for(&fam.field)?;
    let q = chars.q();
    let gt = gauss_all(&chars);
    let (subsets, seed) = fam.subsets(q, cli.seed)?;
    let slots = family_slots(q, &subsets, fam.k_extra)?;
    let angles = jacobi_angles(&gt, &slots, exec(cli), jacobi_lab::discrepancy::DEFAULT_TUPLE_BUDGET)?;
    let pts = CirclePoints::from_angles_with(angles, exec(cli));
    let res = discrepancy_exact(&pts);
    let mut text = format!("N={} distinct={}\nD={:.16}\n", pts.len(), pts.distinct(), res.d);
    let mut row = info_row("discrepancy", "D", q);
    row.measured = res.d;
    if let Some(w) = res.witness {
        let kind = if w.closed { "closed" } else { "open" };
        let _ = writeln!(
            text,
            "witness: {kind} arc [{:.12}, {:.12}] of length {:.12} holding {} of {} points",
            w.start,
            w.end,
            w.length(),
            w.count,
            w.n
        );
        row.note = format!("N={} {kind} arc [{:.12}, {:.12}] count={}", pts.len(), w.start, w.end, w.count);
    } else {
        row.note = "N=0".into();
    }
    family_tag(&mut row, &subsets, fam.k_extra, seed);
    Ok(Output::new(text, vec![row]))
}

fn cmd_moments(cli: &Cli, fam: &FamilyArgs, n_max: u32, k_max: u32) -> Result<Output, Error> {
    let chars = chars_for(&fam.field)?;
    let q = chars.q();
    let gt = gauss_all(&chars);
    let (subsets, seed) = fam.subsets(q, cli.seed)?;
    let slots = family_slots(q, &subsets, fam.k_extra)?;
    let n_points = family_size(q - 1, &slots);
    let ms = moments_of_slots(&gt, &slots, n_max.max(k_max), exec(cli))?;
    let mut text = format!("N={n_points}\n");
    let mut rows = Vec::new();
    for (i, z) in ms.iter().take(n_max as usize).enumerate() {
        let _ = writeln!(text, "M^({}) = {}  |M| = {:.12}", i + 1, cx(*z), z.norm());
        let mut r = info_row("moments", "M", q).value(*z);
        r.n = i as u32 + 1;
        r.measured = z.norm();
        family_tag(&mut r, &subsets, fam.k_extra, seed);
        rows.push(r);
    }
    if let Ok(n) = u64::try_from(n_points) {
        if n > 0 {
            let abs: Vec<f64> = ms.iter().map(|z| z.norm()).collect();
            let (k, b) = erdos_turan_best(&abs, n, k_max as usize)?;
            let _ = writeln!(text, "Erdős–Turán bound at best K={k}: {b:.12}");
            let mut r = info_row("moments", "erdos-turan", q).note(format!("best K={k}"));
            r.measured = b;
            family_tag(&mut r, &subsets, fam.k_extra, seed);
            rows.push(r);
        }
    }
    Ok(Output::new(text, rows))
}

fn parse_group(name: &str, n: Option<u32>, p: Option<u64>) -> Result<GroupSpec, Error> {
    let need_n = || n.ok_or_else(|| Error::ConfigInvalid(format!("group {name} needs --n")));
    let g = match name.to_ascii_lowercase().as_str() {
        "mu" | "mu_p" => GroupSpec::MuP(p.ok_or_else(|| Error::ConfigInvalid("group mu needs --p".into()))?),
        "sp" => GroupSpec::Sp(need_n()?),
        "sl" => GroupSpec::SL(need_n()?),
        "so" => GroupSpec::SO(need_n()?),
        "g2" => GroupSpec::G2,
        other => return Err(Error::ConfigInvalid(format!("unknown group {other:?}"))),
    };
    Ok(g)
}

fn cmd_rconst(
    group: Option<&str>,
    n: Option<u32>,
    p: Option<u64>,
    steps: Option<u32>,
    k: u32,
    l: u32,
) -> Result<Output, Error> {
    let g = match group {
        Some(name) => parse_group(name, n, p)?,
        None => match (p, n) {
            (Some(p), Some(n)) => group_for(p, n)?,
            _ => return Err(Error::ConfigInvalid("give --group, or --p and --n".into())),
        },
    };
    let (k, l) = match steps {
        Some(s) => (s, 0),
        None => (k, l),
    };
    let query = RQuery { group: g, k, l };
    let v = r_lookup(query)?;
    let bound = r_bounds(query);
    let text = format!("{v}\n");
    let mut row = info_row("rconsts", format!("{} k={k} l={l}", g.name()), p.unwrap_or(0) as u32)
        .check(v.to_string().parse().unwrap_or(f64::INFINITY), bound, 0.0)
        .note(format!("R={v}"));
    row.k = k;
    row.n = g.dim();
    Ok(Output::new(text, vec![row]))
}

fn cmd_verify(cli: &Cli, suite: &str, exact_budget: u64) -> Result<Output, Error> {
    let ids: Vec<u8> = if suite == "all" {
        Vec::new()
    } else {
        suite
            .split(',')
            .map(|s| match s.trim().parse::<u8>() {
                Ok(i) if (1..=9).contains(&i) => Ok(i),
                _ => Err(Error::ConfigInvalid(format!("unknown criterion {s:?}"))),
            })
            .collect::<Result<_, _>>()?
    };
    let opts = VerifyOptions { exec: exec(cli), exact_budget };
    let live = cli.format == Format::Text && cli.out.is_none();
    let reports = verify::run_selected(&ids, opts, |r| {
        if live {
            println!("{}", r.line());
        }
    });
    let mut text = String::new();
    if !live {
        for r in &reports {
            let _ = writeln!(text, "{}", r.line());
        }
    }
    let rows = reports
        .iter()
        .map(|r| {
            let mut row =
                ResultRow::new("verify", format!("criterion {}", r.id), 0).note(format!("{}: {}", r.title, r.detail));
            row.pass = r.pass;
            row.measured = r.elapsed.as_secs_f64();
            row
        })
        .collect();
    let violated = reports.iter().any(|r| !r.pass);
    Ok(Output { text, rows, violated })
}

fn cmd_sweep(cli: &Cli, config: &PathBuf, timings: bool) -> Result<(Output, Option<PathBuf>), Error> {
    let text = std::fs::read_to_string(config)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.precision.timings |= timings;
    let rows = report::run_config_with(&cfg, RunOptions { exec: exec(cli) })?;
    let bad = failures(&rows);
    let mut summary = format!("{} rows, {} failing\n", rows.len(), bad.len());
    for r in bad.iter().take(20) {
        let _ = writeln!(
            summary,
            "FAIL {} {} q={} n={} measured={:e} bound={:e} {}",
            r.suite, r.case, r.q, r.n, r.measured, r.bound, r.note
        );
    }
    let violated = !bad.is_empty();
    let out_path = cli.out.clone().or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    Ok((Output { text: summary, rows, violated }, out_path))
}

fn render(format: Format, out: &Output) -> String {
    match format {
        Format::Text => out.text.clone(),
        Format::Csv => report::to_csv_string(&out.rows),
        Format::Json => report::to_json_string(&out.rows) + "\n",
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    if let Command::Sweep { config, timings } = &cli.command {
        let (out, path) = cmd_sweep(cli, config, *timings)?;
        eprint!("{}", out.text);
        let format = match (cli.format, &path) {
            (Format::Text, Some(p)) if p.extension().is_some_and(|e| e == "json") => Format::Json,
            (Format::Text, _) => Format::Csv,
            (f, _) => f,
        };
        let body = render(format, &out);
        match path {
            Some(p) => std::fs::write(p, body)?,
            None => print!("{body}"),
        }
        return Ok(if out.violated { ExitCode::from(1) } else { ExitCode::SUCCESS });
    }
    let out = match &cli.command {
        Command::Field { field, table } => cmd_field(field, *table)?,
        Command::Gauss { field, chi } => cmd_gauss(field, chi)?,
        Command::Jacobi { field, chars, direct } => cmd_jacobi(field, chars, *direct)?,
        Command::Kloosterman { field, n, t } => cmd_kloosterman(field, *n, t)?,
        Command::Discrepancy { family } => cmd_discrepancy(cli, family)?,
        Command::Moments { family, n_max, k_max } => cmd_moments(cli, family, *n_max, *k_max)?,
        Command::Rconst { group, n, p, steps, k, l } => cmd_rconst(group.as_deref(), *n, *p, *steps, *k, *l)?,
        Command::Verify { suite, exact_budget } => cmd_verify(cli, suite, *exact_budget)?,
        Command::Sweep { .. } => unreachable!(),
    };
    let body = render(cli.format, &out);
    match &cli.out {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(if out.violated { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("JACOBI_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize =
        v.trim().parse().map_err(|_| Error::ConfigInvalid(format!("JACOBI_LAB_THREADS={v:?} is not a count")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("jlab: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("jlab: {e}");
            ExitCode::from(2)
        }
    }
}
