//! The `sumset` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::correlated::{accordion_probs, growth_rate, miss_pair_correlated, miss_single_correlated};
use crate::error::{Error, Result};
use crate::fringe::{self, EnumerateOptions, FringeTable, Progress};
use crate::misschance::{miss_pair, miss_single, pair_miss_upper_bound};
use crate::model::{CorrelatedParams, ModelParams, NumericMode, ProbValue, Scalar};
use crate::moments::{expected_lower_bound, expected_missing, expected_size, expected_upper_bound, variance};
use crate::montecarlo::{empirical_divots, simulate_with, MissDistribution, SimModel, SimOptions};
use crate::oracle;

#[derive(Debug, Parser)]
#[command(name = "sumset", version, about = "Exact and simulated statistics of random sumsets")]
struct Cli {
    /// Worker threads for parallel kernels.
    #[arg(long, global = true, env = "SUMSET_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the result to this file, with a manifest next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// E|A+A| and the expected number of missing sums.
    Expected(SizeArgs),
    /// Var|A+A|.
    Variance(SizeArgs),
    /// P(i not in A+A).
    Miss(MissArgs),
    /// P(i and j not in A+A).
    PairMiss(PairArgs),
    /// Fringe tables.
    #[command(subcommand)]
    Fringe(FringeCommand),
    /// Certify a divot at one over a grid of p.
    Divot(DivotArgs),
    /// Simulate the number of missing sums.
    Simulate(SimArgs),
    /// The correlated sumset A+B.
    #[command(subcommand)]
    Correlated(CorrelatedCommand),
    /// Exhaustive references for small n.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Data behind the distribution and divot-bound plots.
    Figures(FigureArgs),
}

#[derive(Debug, Args)]
struct SizeArgs {
    #[arg(long)]
    n: usize,
    /// Decimal (float mode) or `num/den` (exact mode).
    #[arg(long)]
    p: ProbValue,
    /// Also print the closed-form bounds (float).
    #[arg(long)]
    bounds: bool,
}

#[derive(Debug, Args)]
struct MissArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    i: usize,
    #[arg(long)]
    p: ProbValue,
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    i: usize,
    #[arg(long)]
    j: usize,
    #[arg(long)]
    p: ProbValue,
    /// Also print the float upper bound.
    #[arg(long)]
    bound: bool,
}

#[derive(Debug, Subcommand)]
enum FringeCommand {
    /// Tabulate every fringe of width l (needs --out).
    Enumerate(EnumerateArgs),
    /// P(L_k), P(L_k^a) and the bounds on m_p(k) from a table.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[arg(long)]
    l: usize,
    #[arg(long)]
    a: usize,
    #[arg(long)]
    kmax: usize,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    chunk_bits: u32,
    /// Stop after this many chunks; rerun with the same checkpoint to resume.
    #[arg(long)]
    max_chunks: Option<u64>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    p: ProbValue,
}

#[derive(Debug, Args)]
struct DivotArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 0.68)]
    pmin: f64,
    #[arg(long, default_value_t = 0.99)]
    pmax: f64,
    #[arg(long, default_value_t = 0.001)]
    step: f64,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Put 0 in A on every trial.
    #[arg(long)]
    force_zero: bool,
}

#[derive(Debug, Subcommand)]
enum CorrelatedCommand {
    /// P(i not in A+B), or P(i and j not in A+B) with --j.
    Miss(CorrelatedMissArgs),
    /// x_m, y_m, z_m for one accordion length.
    Accordion(AccordionArgs),
    /// Spectral radius of the governing matrix.
    Growth(CorrelatedParamArgs),
    /// Simulate the number of sums missing from A+B.
    Simulate(CorrelatedSimArgs),
}

#[derive(Debug, Args)]
struct CorrelatedParamArgs {
    #[arg(long)]
    p: ProbValue,
    #[arg(long)]
    p1: ProbValue,
    #[arg(long)]
    p2: ProbValue,
}

#[derive(Debug, Args)]
struct CorrelatedMissArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    i: usize,
    #[arg(long)]
    j: Option<usize>,
    #[command(flatten)]
    params: CorrelatedParamArgs,
}

#[derive(Debug, Args)]
struct AccordionArgs {
    #[arg(long)]
    len: usize,
    #[command(flatten)]
    params: CorrelatedParamArgs,
}

#[derive(Debug, Args)]
struct CorrelatedSimArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    p2: f64,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    force_zero: bool,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// The exact law of the number of missing sums.
    Law(OracleLawArgs),
    /// P(no sum of F lies in A+A), by enumeration.
    Miss(OracleMissArgs),
}

#[derive(Debug, Args)]
struct OracleLawArgs {
    #[arg(long)]
    n: usize,
    /// Must be `num/den`.
    #[arg(long)]
    p: ProbValue,
}

#[derive(Debug, Args)]
struct OracleMissArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    f: Vec<usize>,
    #[arg(long)]
    p: ProbValue,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// Directory for the figure files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Fringe table for the divot bounds; those files are skipped without it.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 401)]
    n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8,0.9")]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pmin: f64,
    #[arg(long, default_value_t = 0.99)]
    pmax: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: BTreeMap<String, Value>,
    pub mode: Option<NumericMode>,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    /// Absent from the inline header so reruns print identical bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            params: BTreeMap::new(),
            mode: None,
            seed: None,
            versions: BTreeMap::from([("sumset-core".to_string(), env!("CARGO_PKG_VERSION").to_string())]),
            wall_time_secs: None,
            outputs: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }
}

/// Manifest next to an output file: `dist.csv` -> `dist.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[derive(Debug, Default)]
struct Report {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    notes: Vec<String>,
}

impl Report {
    fn new(columns: &[&'static str]) -> Self {
        Report {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    fn row(&mut self, cells: Vec<Value>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn render(&self, format: Format, header: &str) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut buf = format!("# manifest: {header}\n").into_bytes();
                {
                    let mut w = csv::Writer::from_writer(&mut buf);
                    w.write_record(&self.columns)?;
                    for row in &self.rows {
                        w.write_record(row.iter().map(plain))?;
                    }
                    w.flush()?;
                }
                for note in &self.notes {
                    buf.extend_from_slice(format!("# {note}\n").as_bytes());
                }
                Ok(buf)
            }
            Format::Json => {
                let rows: Vec<serde_json::Map<String, Value>> = self
                    .rows
                    .iter()
                    .map(|r| self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect())
                    .collect();
                let manifest = serde_json::from_str(header).unwrap_or_else(|_| Value::String(header.to_string()));
                let doc = json!({ "manifest": manifest, "rows": rows, "notes": self.notes });
                let mut buf = serde_json::to_vec_pretty(&doc)?;
                buf.push(b'\n');
                Ok(buf)
            }
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn scalar<S: Scalar>(v: &S) -> Value {
    match S::MODE {
        NumericMode::Exact => Value::String(v.to_string()),
        NumericMode::Float => json!(v.to_f64()),
    }
}

fn float(v: f64) -> Value {
    json!(v)
}

struct Ctx {
    format: Format,
    out: Option<PathBuf>,
    threads: Option<usize>,
    started: Instant,
}

impl Ctx {
    /// Writes the report to `--out` (plus manifest) or to stdout.
    fn emit(&self, mut manifest: RunManifest, report: &Report, stdout: &mut dyn Write) -> Result<()> {
        match &self.out {
            Some(path) => {
                let mpath = manifest_path(path);
                let mname = mpath.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                fs::write(path, report.render(self.format, &mname)?)?;
                manifest.outputs.push(path.display().to_string());
                self.write_manifest(manifest, &mpath)?;
                for note in &report.notes {
                    writeln!(stdout, "{note}")?;
                }
                writeln!(stdout, "wrote {}", path.display())?;
            }
            None => {
                let header = serde_json::to_string(&manifest)?;
                stdout.write_all(&report.render(self.format, &header)?)?;
            }
        }
        Ok(())
    }

    fn write_manifest(&self, mut manifest: RunManifest, path: &Path) -> Result<()> {
        manifest.wall_time_secs = Some(self.started.elapsed().as_secs_f64());
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        fs::write(path, text)?;
        Ok(())
    }

    fn require_out(&self, what: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("{what} needs --out")))
    }
}

fn with_params<R>(
    p: &ProbValue,
    exact: impl FnOnce(ModelParams<BigRational>) -> Result<R>,
    float: impl FnOnce(ModelParams<f64>) -> Result<R>,
) -> Result<R> {
    match p {
        ProbValue::Exact(r) => exact(ModelParams::new(r.clone())?),
        ProbValue::Float(x) => float(ModelParams::new(*x)?),
    }
}

fn with_correlated<R>(
    args: &CorrelatedParamArgs,
    exact: impl FnOnce(CorrelatedParams<BigRational>) -> Result<R>,
    float: impl FnOnce(CorrelatedParams<f64>) -> Result<R>,
) -> Result<(R, NumericMode)> {
    let all = [&args.p, &args.p1, &args.p2];
    if let [Some(p), Some(p1), Some(p2)] = all.map(|v| v.as_exact()) {
        return Ok((exact(CorrelatedParams::new(p.clone(), p1.clone(), p2.clone())?)?, NumericMode::Exact));
    }
    let [p, p1, p2] = all.map(|v| v.as_f64());
    Ok((float(CorrelatedParams::new(p, p1, p2)?)?, NumericMode::Float))
}

fn size_row<S: Scalar>(n: usize, params: &ModelParams<S>, var: bool) -> Result<Vec<Value>> {
    if var {
        let v = variance(n, params)?;
        return Ok(vec![scalar(&v), float(v.to_f64())]);
    }
    let e = expected_size(n, params)?;
    let m = expected_missing(n, params)?;
    Ok(vec![scalar(&e), float(e.to_f64()), scalar(&m), float(m.to_f64())])
}

fn cmd_size(ctx: &Ctx, args: &SizeArgs, var: bool, stdout: &mut dyn Write) -> Result<()> {
    let name = if var { "variance" } else { "expected" };
    let mut m = RunManifest::new(name);
    m.param("n", args.n).param("p", args.p.to_string()).param("bounds", args.bounds);
    m.mode = Some(args.p.mode());
    let cells = with_params(&args.p, |e| size_row(args.n, &e, var), |f| size_row(args.n, &f, var))?;
    let mut columns = vec!["n", "p", "mode"];
    if var {
        columns.extend(["variance", "variance_f64"]);
    } else {
        columns.extend(["expected_size", "expected_size_f64", "expected_missing", "expected_missing_f64"]);
    }
    let mut row = vec![json!(args.n), Value::String(args.p.to_string()), Value::String(args.p.mode().to_string())];
    row.extend(cells);
    if args.bounds && !var {
        columns.extend(["upper_bound", "lower_bound"]);
        let p = args.p.as_f64();
        row.push(float(expected_upper_bound(args.n, p)));
        row.push(expected_lower_bound(args.n, p).map_or(Value::Null, float));
    }
    let mut report = Report::new(&columns);
    report.row(row);
    ctx.emit(m, &report, stdout)
}

fn cmd_miss(ctx: &Ctx, args: &MissArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut m = RunManifest::new("miss");
    m.param("n", args.n).param("i", args.i).param("p", args.p.to_string());
    m.mode = Some(args.p.mode());
    let value = with_params(
        &args.p,
        |e| miss_single(args.n, args.i, &e).map(|v| (scalar(&v), v.to_f64())),
        |f| miss_single(args.n, args.i, &f).map(|v| (scalar(&v), v)),
    )?;
    let mut report = Report::new(&["n", "i", "p", "probability", "probability_f64"]);
    report.row(vec![json!(args.n), json!(args.i), Value::String(args.p.to_string()), value.0, float(value.1)]);
    ctx.emit(m, &report, stdout)
}

fn cmd_pair(ctx: &Ctx, args: &PairArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut m = RunManifest::new("pair-miss");
    m.param("n", args.n).param("i", args.i).param("j", args.j).param("p", args.p.to_string()).param("bound", args.bound);
    m.mode = Some(args.p.mode());
    let (n, i, j) = (args.n, args.i, args.j);
    let value = with_params(
        &args.p,
        |e| miss_pair(n, i, j, &e).map(|v| (scalar(&v), v.to_f64())),
        |f| miss_pair(n, i, j, &f).map(|v| (scalar(&v), v)),
    )?;
    let mut columns = vec!["n", "i", "j", "p", "probability", "probability_f64"];
    let mut row = vec![json!(n), json!(i), json!(j), Value::String(args.p.to_string()), value.0, float(value.1)];
    if args.bound {
        columns.push("upper_bound");
        row.push(float(pair_miss_upper_bound(i, j, args.p.as_f64())?));
    }
    let mut report = Report::new(&columns);
    report.row(row);
    ctx.emit(m, &report, stdout)
}

fn cmd_enumerate(ctx: &Ctx, args: &EnumerateArgs, stdout: &mut dyn Write) -> Result<()> {
    let out = ctx.require_out("fringe enumerate")?.to_path_buf();
    if ctx.format == Format::Json {
        return Err(Error::InvalidArgument("fringe tables are written as CSV".into()));
    }
    let mut m = RunManifest::new("fringe enumerate");
    m.param("l", args.l).param("a", args.a).param("kmax", args.kmax).param("chunk_bits", args.chunk_bits);
    m.mode = Some(NumericMode::Exact);
    let opts = EnumerateOptions {
        threads: ctx.threads,
        checkpoint: args.checkpoint.clone(),
        chunk_bits: args.chunk_bits,
        max_chunks: args.max_chunks,
    };
    match fringe::enumerate_with(args.l, args.a, args.kmax, &opts)? {
        Progress::Paused { next_chunk, total_chunks } => {
            writeln!(stdout, "paused at chunk {next_chunk} of {total_chunks}; rerun with the same --checkpoint to resume")?;
        }
        Progress::Done(table) => {
            let mpath = manifest_path(&out);
            let mname = mpath.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            fringe::write_table(&table, &out, Some(&mname))?;
            m.outputs.push(out.display().to_string());
            m.outputs.push(fringe::sidecar_path(&out).display().to_string());
            ctx.write_manifest(m, &mpath)?;
            let show = |v: &[Option<u32>]| v.iter().map(|x| x.map_or("-".into(), |x| x.to_string())).collect::<Vec<_>>().join(",");
            writeln!(stdout, "min_a = ({})", show(&table.min_a))?;
            writeln!(stdout, "tau = ({})", show(&table.tau))?;
            writeln!(stdout, "wrote {}", out.display())?;
        }
    }
    Ok(())
}

fn bounds_rows<S: Scalar>(table: &FringeTable, params: &ModelParams<S>, report: &mut Report) -> Result<()> {
    for k in 0..=table.kmax {
        let lk = table.prob_lk(k, params)?;
        let lka = table.prob_lka(k, params)?;
        let ub = table.upper_bound_mk(k, params)?;
        let lb = if table.a >= 3 { Some(table.lower_bound_mk(k, params)?) } else { None };
        report.row(vec![
            json!(k),
            float(lk.to_f64()),
            float(lka.to_f64()),
            lb.map_or(Value::Null, |v| float(v.to_f64())),
            float(ub.to_f64()),
        ]);
    }
    Ok(())
}

fn cmd_bounds(ctx: &Ctx, args: &BoundsArgs, stdout: &mut dyn Write) -> Result<()> {
    let table = fringe::read_table(&args.table)?;
    let mut m = RunManifest::new("fringe bounds");
    m.param("table", args.table.display().to_string()).param("p", args.p.to_string());
    m.mode = Some(args.p.mode());
    let mut report = Report::new(&["k", "p_lk", "p_lka", "lower_bound", "upper_bound"]);
    match &args.p {
        // the event C bound needs a real exponent when l is odd
        ProbValue::Exact(r) if table.l % 2 == 0 => bounds_rows(&table, &ModelParams::new(r.clone())?, &mut report)?,
        p => bounds_rows(&table, &ModelParams::new(p.as_f64())?, &mut report)?,
    }
    ctx.emit(m, &report, stdout)
}

fn divot_report(table: &FringeTable, grid: &[f64]) -> Result<Report> {
    let verdicts = fringe::certify_divot_grid(table, grid)?;
    let mut report = Report::new(&["p", "lb0", "ub1", "lb2", "divot_at_1"]);
    for v in &verdicts {
        report.row(vec![float(v.p), float(v.lb0), float(v.ub1), float(v.lb2), json!(v.divot_at_1)]);
    }
    let failed: Vec<f64> = verdicts.iter().filter(|v| !v.divot_at_1).map(|v| v.p).collect();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    report.notes.push(if failed.is_empty() {
        format!("divot at 1 certified on [{lo}, {hi}]")
    } else {
        format!("divot at 1 not certified at {} of {} grid points (first p = {})", failed.len(), grid.len(), failed[0])
    });
    Ok(report)
}

fn cmd_divot(ctx: &Ctx, args: &DivotArgs, stdout: &mut dyn Write) -> Result<()> {
    let table = fringe::read_table(&args.table)?;
    let mut m = RunManifest::new("divot");
    m.param("table", args.table.display().to_string())
        .param("pmin", args.pmin)
        .param("pmax", args.pmax)
        .param("step", args.step);
    m.mode = Some(NumericMode::Float);
    let grid = fringe::p_grid(args.pmin, args.pmax, args.step)?;
    let report = divot_report(&table, &grid)?;
    ctx.emit(m, &report, stdout)
}

fn distribution_report(d: &MissDistribution) -> Report {
    let mut report = Report::new(&["k", "count", "freq"]);
    for (k, &c) in d.counts.iter().enumerate() {
        report.row(vec![json!(k), json!(c), float(d.freq(k))]);
    }
    report.notes.push(format!("divots: {:?}", empirical_divots(d)));
    report
}

fn sim_manifest(name: &str, n: usize, model: SimModel, trials: u64, seed: u64, force_zero: bool) -> RunManifest {
    let mut m = RunManifest::new(name);
    m.param("n", n).param("model", model).param("trials", trials).param("force_zero", force_zero);
    m.mode = Some(NumericMode::Float);
    m.seed = Some(seed);
    m
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(ctx: &Ctx, name: &str, n: usize, model: SimModel, trials: u64, seed: u64, force_zero: bool, stdout: &mut dyn Write) -> Result<()> {
    let m = sim_manifest(name, n, model, trials, seed, force_zero);
    let opts = SimOptions {
        force_zero,
        threads: ctx.threads,
    };
    let d = simulate_with(n, model, trials, seed, &opts)?;
    ctx.emit(m, &distribution_report(&d), stdout)
}

fn cmd_correlated_miss(ctx: &Ctx, args: &CorrelatedMissArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut m = RunManifest::new("correlated miss");
    let pa = &args.params;
    m.param("n", args.n)
        .param("i", args.i)
        .param("j", args.j)
        .param("p", pa.p.to_string())
        .param("p1", pa.p1.to_string())
        .param("p2", pa.p2.to_string());
    let (n, i, j) = (args.n, args.i, args.j);
    let ((value, value_f64), mode) = with_correlated(
        pa,
        |c| {
            let v = match j {
                Some(j) => miss_pair_correlated(n, i, j, &c)?,
                None => miss_single_correlated(n, i, &c)?,
            };
            Ok((scalar(&v), v.to_f64()))
        },
        |c| {
            let v = match j {
                Some(j) => miss_pair_correlated(n, i, j, &c)?,
                None => miss_single_correlated(n, i, &c)?,
            };
            Ok((scalar(&v), v))
        },
    )?;
    m.mode = Some(mode);
    let mut report = Report::new(&["n", "i", "j", "p", "p1", "p2", "probability", "probability_f64"]);
    report.row(vec![
        json!(n),
        json!(i),
        j.map_or(Value::Null, |j| json!(j)),
        Value::String(pa.p.to_string()),
        Value::String(pa.p1.to_string()),
        Value::String(pa.p2.to_string()),
        value,
        float(value_f64),
    ]);
    ctx.emit(m, &report, stdout)
}

fn cmd_accordion(ctx: &Ctx, args: &AccordionArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut m = RunManifest::new("correlated accordion");
    let pa = &args.params;
    m.param("len", args.len).param("p", pa.p.to_string()).param("p1", pa.p1.to_string()).param("p2", pa.p2.to_string());
    let (cells, mode) = with_correlated(
        pa,
        |c| accordion_probs(args.len, &c).map(|s| vec![scalar(&s.x), scalar(&s.y), scalar(&s.z)]),
        |c| accordion_probs(args.len, &c).map(|s| vec![scalar(&s.x), scalar(&s.y), scalar(&s.z)]),
    )?;
    m.mode = Some(mode);
    let mut report = Report::new(&["len", "x", "y", "z"]);
    let mut row = vec![json!(args.len)];
    row.extend(cells);
    report.row(row);
    ctx.emit(m, &report, stdout)
}

fn cmd_growth(ctx: &Ctx, args: &CorrelatedParamArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut m = RunManifest::new("correlated growth");
    m.param("p", args.p.to_string()).param("p1", args.p1.to_string()).param("p2", args.p2.to_string());
    m.mode = Some(NumericMode::Float);
    let c = CorrelatedParams::new(args.p.as_f64(), args.p1.as_f64(), args.p2.as_f64())?;
    let mut report = Report::new(&["p", "p1", "p2", "growth_rate"]);
    report.row(vec![float(*c.p()), float(*c.p1()), float(*c.p2()), float(growth_rate(&c))]);
    ctx.emit(m, &report, stdout)
}

fn exact_p(p: &ProbValue) -> Result<ModelParams<BigRational>> {
    let r = p
        .as_exact()
        .ok_or_else(|| Error::InvalidArgument("oracle needs p as num/den".into()))?;
    ModelParams::new(r.clone())
}

fn cmd_oracle_law(ctx: &Ctx, args: &OracleLawArgs, stdout: &mut dyn Write) -> Result<()> {
    let params = exact_p(&args.p)?;
    let mut m = RunManifest::new("oracle law");
    m.param("n", args.n).param("p", args.p.to_string());
    m.mode = Some(NumericMode::Exact);
    let law = oracle::exact_law(args.n, &params)?;
    let mut report = Report::new(&["k", "probability", "probability_f64"]);
    for (k, v) in law.law.iter().enumerate() {
        report.row(vec![json!(k), scalar(v), float(Scalar::to_f64(v))]);
    }
    report.notes.push(format!("expected_size = {}", law.mean));
    report.notes.push(format!("variance = {}", law.variance));
    ctx.emit(m, &report, stdout)
}

fn cmd_oracle_miss(ctx: &Ctx, args: &OracleMissArgs, stdout: &mut dyn Write) -> Result<()> {
    let params = exact_p(&args.p)?;
    let mut m = RunManifest::new("oracle miss");
    m.param("n", args.n).param("f", &args.f).param("p", args.p.to_string());
    m.mode = Some(NumericMode::Exact);
    let v = oracle::exact_miss(args.n, &args.f, &params)?;
    let f = args.f.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut report = Report::new(&["n", "f", "p", "probability", "probability_f64"]);
    report.row(vec![json!(args.n), Value::String(f), Value::String(args.p.to_string()), scalar(&v), float(Scalar::to_f64(&v))]);
    ctx.emit(m, &report, stdout)
}

fn cmd_figures(ctx: &Ctx, args: &FigureArgs, stdout: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(&args.out_dir)?;
    let mut m = RunManifest::new("figures");
    m.param("n", args.n)
        .param("trials", args.trials)
        .param("ps", &args.ps)
        .param("table", args.table.as_ref().map(|t| t.display().to_string()))
        .param("pmin", args.pmin)
        .param("pmax", args.pmax)
        .param("step", args.step);
    m.mode = Some(NumericMode::Float);
    m.seed = Some(args.seed);
    let mpath = args.out_dir.join("figures.manifest.json");
    let header = mpath.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let opts = SimOptions {
        force_zero: false,
        threads: ctx.threads,
    };
    let mut dists = Vec::new();
    let mut curves = Report::new(&["p", "k", "count", "freq"]);
    for &p in &args.ps {
        let d = simulate_with(args.n, SimModel::Independent { p }, args.trials, args.seed, &opts)?;
        for (k, &c) in d.counts.iter().enumerate() {
            curves.row(vec![float(p), json!(k), json!(c), float(d.freq(k))]);
        }
        curves.notes.push(format!("p = {p}: divots {:?}", empirical_divots(&d)));
        dists.push((p, d));
    }
    let mut write = |name: &str, report: &Report| -> Result<()> {
        let path = args.out_dir.join(name);
        fs::write(&path, report.render(Format::Csv, &header)?)?;
        m.outputs.push(path.display().to_string());
        writeln!(stdout, "wrote {}", path.display())?;
        Ok(())
    };
    write("missing_sums.csv", &curves)?;
    if let Some(table_path) = &args.table {
        let table = fringe::read_table(table_path)?;
        let grid = fringe::p_grid(args.pmin, args.pmax, args.step)?;
        write("divot_bounds.csv", &divot_report(&table, &grid)?)?;
        let mut sandwich = Report::new(&["p", "k", "lower_bound", "empirical", "std_error", "upper_bound"]);
        for (p, d) in &dists {
            let params = ModelParams::new(*p)?;
            for k in 0..=table.kmax {
                let lb = if table.a >= 3 { float(table.lower_bound_mk(k, &params)?) } else { Value::Null };
                let ub = table.upper_bound_mk(k, &params)?;
                sandwich.row(vec![float(*p), json!(k), lb, float(d.freq(k)), float(d.std_error(k)), float(ub)]);
            }
        }
        write("bounds_vs_simulation.csv", &sandwich)?;
    }
    ctx.write_manifest(m, &mpath)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::out_of_range("threads", 0, ">= 1"));
        }
        // a second call in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let ctx = Ctx {
        format: cli.format,
        out: cli.out,
        threads: cli.threads,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Expected(a) => cmd_size(&ctx, a, false, stdout),
        Command::Variance(a) => cmd_size(&ctx, a, true, stdout),
        Command::Miss(a) => cmd_miss(&ctx, a, stdout),
        Command::PairMiss(a) => cmd_pair(&ctx, a, stdout),
        Command::Fringe(FringeCommand::Enumerate(a)) => cmd_enumerate(&ctx, a, stdout),
        Command::Fringe(FringeCommand::Bounds(a)) => cmd_bounds(&ctx, a, stdout),
        Command::Divot(a) => cmd_divot(&ctx, a, stdout),
        Command::Simulate(a) => {
            let model = SimModel::Independent { p: a.p };
            cmd_simulate(&ctx, "simulate", a.n, model, a.trials, a.seed, a.force_zero, stdout)
        }
        Command::Correlated(CorrelatedCommand::Miss(a)) => cmd_correlated_miss(&ctx, a, stdout),
        Command::Correlated(CorrelatedCommand::Accordion(a)) => cmd_accordion(&ctx, a, stdout),
        Command::Correlated(CorrelatedCommand::Growth(a)) => cmd_growth(&ctx, a, stdout),
        Command::Correlated(CorrelatedCommand::Simulate(a)) => {
            let model = SimModel::Correlated { p: a.p, p1: a.p1, p2: a.p2 };
            cmd_simulate(&ctx, "correlated simulate", a.n, model, a.trials, a.seed, a.force_zero, stdout)
        }
        Command::Oracle(OracleCommand::Law(a)) => cmd_oracle_law(&ctx, a, stdout),
        Command::Oracle(OracleCommand::Miss(a)) => cmd_oracle_miss(&ctx, a, stdout),
        Command::Figures(a) => cmd_figures(&ctx, a, stdout),
    }
}

/// Runs one command line. Usage errors return 2, domain errors 1.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().ansi().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("sumset").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn miss_example() {
        let (code, out, _) = call(&["miss", "--n", "4", "--i", "2", "--p", "0.5"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("# manifest: {"));
        assert!(out.contains("\n4,2,0.5,0.375,0.375\n"), "{out}");
        let (_, out, _) = call(&["miss", "--n", "4", "--i", "2", "--p", "1/2"]);
        assert!(out.contains("\n4,2,1/2,3/8,0.375\n"), "{out}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["miss", "--n", "4", "--bogus"]).0, 2);
        assert_eq!(call(&["nonsense"]).0, 2);
        let (code, _, err) = call(&["miss", "--n", "4", "--i", "9", "--p", "0.5"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error: i = 9 is out of range"), "{err}");
        assert_eq!(call(&["miss", "--n", "4", "--i", "1", "--p", "1.5"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn json_format() {
        let (code, out, _) = call(&["--format", "json", "variance", "--n", "2", "--p", "1/2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["rows"][0]["variance"], "19/16");
    }

    #[test]
    fn manifest_names() {
        assert_eq!(manifest_path(Path::new("/tmp/x/dist.csv")), PathBuf::from("/tmp/x/dist.csv.manifest.json"));
    }
}
