//! Command-line driver: validation, analysis, constants, volumes, exact
//! counts, and end-to-end verification with reproducible report files.
//!
//! Exit codes: 0 success, 1 usage or io, 2 invalid morphism, 3 analysis
//! failure, 4 budget exceeded.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use sha2::{Digest, Sha256};

use wproj::arith::FieldContext;
use wproj::asymptotics::{predict, AsymptoticPrediction};
use wproj::enumeration::{convergence_report, count_exact, CountOptions};
use wproj::local_analysis::{global_analysis, GlobalAnalysis};
use wproj::morphism::{parse_morphism, MorphismSpec};
use wproj::volume::{bounding_box, volume_monte_carlo, volume_slice};
use wproj::{parse_rational, rational_string, Error};

#[derive(Parser)]
#[command(
    name = "wproj",
    version,
    about = "Height counting on weighted projective spaces: local analysis, \
             leading constants, region volumes, and exact enumeration"
)]
struct Cli {
    /// Morphism description (JSON file)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads for the enumerator (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Directory for report files (verify defaults to the current directory)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Which report files verify writes
    #[arg(long, global = true, value_parser = ["json", "csv", "both"], default_value = "both")]
    format: String,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the morphism conditions and print degrees
    Validate,
    /// Discrepancy set, bad primes, moduli, census, and the arithmetic factor
    Analyze,
    /// Predicted leading constant and exponents
    Constant(ConstantArgs),
    /// Region volume by slice quadrature and/or Monte Carlo
    Volume(VolumeArgs),
    /// Exact stacky count of points of height at most T
    Count(CountArgs),
    /// Full pipeline along a T ladder; writes report.json, counts.csv, manifest.json
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConstantArgs {
    /// Quadrature grid for the volume factor
    #[arg(long, default_value_t = 2048)]
    grid: u32,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long, value_parser = ["slice", "mc", "both"], default_value = "slice")]
    method: String,
    #[arg(long, default_value_t = 2048)]
    grid: u32,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Height bound
    #[arg(long = "T", default_value = "1", value_name = "RATIONAL")]
    t: String,
    /// Also write region_grid.csv (256 x 256 membership cloud) to --out
    #[arg(long)]
    dump_region_grid: bool,
}

#[derive(Args)]
struct CountArgs {
    /// Height bound
    #[arg(long = "T", value_name = "RATIONAL")]
    t: String,
    /// Break the mass down by discrepancy class
    #[arg(long)]
    by_discrepancy: bool,
    /// Abort (exit 4) if the search exceeds this many columns
    #[arg(long, value_name = "CELLS")]
    budget: Option<u64>,
    /// Resume/record progress in this JSON file
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Drop points whose image lies on the singular families (weights (4,6) targets only)
    #[arg(long)]
    exclude_singular: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated ascending height bounds, e.g. 5,10,20,30
    #[arg(long, value_delimiter = ',', value_name = "T1,T2,...")]
    ladder: Vec<String>,
    /// Quadrature grid for the volume factor
    #[arg(long, default_value_t = 2048)]
    grid: u32,
    #[arg(long, value_name = "CELLS")]
    budget: Option<u64>,
    #[arg(long)]
    exclude_singular: bool,
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn exit_code(err: &CliError) -> u8 {
    match err {
        CliError::Usage(_) => 1,
        CliError::Lib(Error::InvalidMorphism(_)) => 2,
        CliError::Lib(Error::Analysis(_)) => 3,
        CliError::Lib(Error::Budget(_)) => 4,
        CliError::Lib(Error::Io(_)) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Round to 12 significant digits; serialized floats then print as the
/// shortest round-trip of the rounded value, stable across platforms.
fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("round-trip")
}

fn fmt_float(x: f64) -> String {
    format!("{}", round12(x))
}

fn sha_hex(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serialize");
    bytes.push(b'\n');
    bytes
}

/// Collects report files and their digests for the run manifest. Files are
/// only written when an output directory was requested.
struct Sink {
    dir: Option<PathBuf>,
    digests: BTreeMap<String, String>,
}

impl Sink {
    fn new(dir: Option<PathBuf>) -> Self {
        Sink {
            dir,
            digests: BTreeMap::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        fs::create_dir_all(dir).map_err(Error::from)?;
        fs::write(dir.join(name), bytes).map_err(Error::from)?;
        self.digests.insert(name.to_string(), sha_hex(bytes));
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest {
    tool_version: String,
    config_digest: String,
    subcommand: String,
    flags: BTreeMap<String, String>,
    seeds: Vec<u64>,
    timing_ms: u128,
    outputs: BTreeMap<String, String>,
}

struct Run {
    spec: MorphismSpec,
    config_digest: String,
    sink: Sink,
    flags: BTreeMap<String, String>,
    seeds: Vec<u64>,
    started: Instant,
}

impl Run {
    fn flag(&mut self, key: &str, value: impl ToString) {
        self.flags.insert(key.to_string(), value.to_string());
    }

    /// Print the subcommand report to stdout and, when an output directory
    /// is active, persist it with the run manifest.
    fn finish(mut self, subcommand: &str, report_name: &str, report: &[u8]) -> Result<(), CliError> {
        print!("{}", String::from_utf8_lossy(report));
        self.sink.write(report_name, report)?;
        self.write_manifest(subcommand)
    }

    fn write_manifest(mut self, subcommand: &str) -> Result<(), CliError> {
        if self.sink.dir.is_none() {
            return Ok(());
        }
        let manifest = Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.config_digest.clone(),
            subcommand: subcommand.to_string(),
            flags: self.flags.clone(),
            seeds: self.seeds.clone(),
            timing_ms: self.started.elapsed().as_millis(),
            outputs: self.digests_snapshot(),
        };
        let bytes = to_json(&manifest);
        self.sink.write("manifest.json", &bytes)
    }

    fn digests_snapshot(&self) -> BTreeMap<String, String> {
        self.sink.digests.clone()
    }
}

fn load_run(cli: &Cli, default_out: Option<&Path>) -> Result<Run, CliError> {
    let Some(path) = &cli.config else {
        return Err(usage("--config <PATH> is required"));
    };
    let bytes = fs::read(path).map_err(Error::from)?;
    let text = String::from_utf8_lossy(&bytes);
    let spec = parse_morphism(&text)?;
    let dir = cli.out.clone().or_else(|| default_out.map(Path::to_path_buf));
    let mut flags = BTreeMap::new();
    flags.insert("config".to_string(), path.display().to_string());
    if let Some(n) = cli.threads {
        flags.insert("threads".to_string(), n.to_string());
    }
    Ok(Run {
        spec,
        config_digest: sha_hex(&bytes),
        sink: Sink::new(dir),
        flags,
        seeds: Vec::new(),
        started: Instant::now(),
    })
}

fn parse_t(s: &str) -> Result<BigRational, CliError> {
    let t = parse_rational(s).map_err(|_| usage(format!("invalid height bound {s:?}")))?;
    if t <= BigRational::from_integer(0.into()) {
        return Err(usage(format!("height bound must be positive, got {s}")));
    }
    Ok(t)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    match &cli.cmd {
        Cmd::Validate => cmd_validate(&cli),
        Cmd::Analyze => cmd_analyze(&cli),
        Cmd::Constant(args) => cmd_constant(&cli, args),
        Cmd::Volume(args) => cmd_volume(&cli, args),
        Cmd::Count(args) => cmd_count(&cli, args),
        Cmd::Verify(args) => cmd_verify(&cli, args),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    name: String,
    valid: bool,
    e: u32,
    source_weights: Vec<u32>,
    target_weights: Vec<u32>,
    /// Weighted degree of each component polynomial, `e * u_j`.
    weighted_degrees: Vec<u32>,
    common_zero: String,
}

fn cmd_validate(cli: &Cli) -> Result<(), CliError> {
    let run = load_run(cli, None)?;
    let spec = &run.spec;
    let report = ValidateReport {
        name: spec.name.clone(),
        valid: true,
        e: spec.e,
        source_weights: spec.source.0.clone(),
        target_weights: spec.target.0.clone(),
        weighted_degrees: spec.target.0.iter().map(|u| u * spec.e).collect(),
        common_zero: "none off the origin".to_string(),
    };
    run.finish("validate", "validate.json", &to_json(&report))
}

#[derive(Serialize)]
struct ModulusEntry {
    p: u64,
    s: Vec<u32>,
}

#[derive(Serialize)]
struct CensusEntry {
    d: String,
    c1: u64,
    count: String,
}

#[derive(Serialize)]
struct IndexEntry {
    c1: u64,
    index: String,
}

#[derive(Serialize)]
struct AnalyzeReport {
    name: String,
    e: u32,
    source_weights: Vec<u32>,
    target_weights: Vec<u32>,
    discrepancy_set: Vec<String>,
    bad_primes: Vec<u64>,
    moduli: Vec<ModulusEntry>,
    census: Vec<CensusEntry>,
    modulus_index: Vec<IndexEntry>,
    c_phi: String,
}

fn analyze_report(spec: &MorphismSpec, analysis: &GlobalAnalysis) -> AnalyzeReport {
    AnalyzeReport {
        name: spec.name.clone(),
        e: spec.e,
        source_weights: spec.source.0.clone(),
        target_weights: spec.target.0.clone(),
        discrepancy_set: analysis
            .discrepancy_set
            .iter()
            .map(|d| rational_string(&d.value()))
            .collect(),
        bad_primes: analysis.bad_primes.clone(),
        moduli: analysis
            .profiles
            .iter()
            .filter(|profile| !profile.is_trivial())
            .map(|profile| ModulusEntry {
                p: profile.p,
                s: profile.s.clone(),
            })
            .collect(),
        census: analysis
            .census
            .iter()
            .map(|cell| CensusEntry {
                d: rational_string(&cell.d.value()),
                c1: cell.c1,
                count: cell.count.to_string(),
            })
            .collect(),
        modulus_index: analysis
            .modulus_index
            .iter()
            .map(|(c1, index)| IndexEntry {
                c1: *c1,
                index: index.to_string(),
            })
            .collect(),
        c_phi: rational_string(&analysis.c_phi),
    }
}

fn cmd_analyze(cli: &Cli) -> Result<(), CliError> {
    let run = load_run(cli, None)?;
    let analysis = global_analysis(&run.spec)?;
    let report = analyze_report(&run.spec, &analysis);
    run.finish("analyze", "analyze.json", &to_json(&report))
}

#[derive(Serialize)]
struct ConstantReport {
    name: String,
    c_phi: String,
    volume: f64,
    #[serde(rename = "C")]
    c: f64,
    exponent: String,
    error_exponent: String,
    special_log: bool,
}

fn constant_report(spec: &MorphismSpec, pred: &AsymptoticPrediction) -> ConstantReport {
    ConstantReport {
        name: spec.name.clone(),
        c_phi: rational_string(&pred.c_phi),
        volume: round12(pred.volume),
        c: round12(pred.constant),
        exponent: rational_string(&pred.exponent),
        error_exponent: rational_string(&pred.error_exponent),
        special_log: pred.log_correction,
    }
}

fn cmd_constant(cli: &Cli, args: &ConstantArgs) -> Result<(), CliError> {
    let mut run = load_run(cli, None)?;
    run.flag("grid", args.grid);
    let analysis = global_analysis(&run.spec)?;
    let one = BigRational::from_integer(1.into());
    let vol = volume_slice(&run.spec, &one, args.grid)?;
    let pred = predict(&run.spec, &analysis, vol.value, &FieldContext::rationals())?;
    let report = constant_report(&run.spec, &pred);
    run.finish("constant", "constant.json", &to_json(&report))
}

#[derive(Serialize)]
struct SliceReport {
    value: f64,
    error_estimate: f64,
    grid: u32,
    pieces: usize,
    bounds: Vec<f64>,
}

#[derive(Serialize)]
struct McReport {
    value: f64,
    std_error: f64,
    samples: u64,
    hits: u64,
    seed: u64,
}

#[derive(Serialize)]
struct VolumeReport {
    name: String,
    t: String,
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    slice: Option<SliceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<McReport>,
}

fn cmd_volume(cli: &Cli, args: &VolumeArgs) -> Result<(), CliError> {
    let mut run = load_run(cli, None)?;
    let t = parse_t(&args.t)?;
    run.flag("T", rational_string(&t));
    run.flag("method", &args.method);

    let slice = if args.method != "mc" {
        run.flag("grid", args.grid);
        let est = volume_slice(&run.spec, &t, args.grid)?;
        Some(SliceReport {
            value: round12(est.value),
            error_estimate: round12(est.error_estimate),
            grid: args.grid,
            pieces: est.pieces,
            bounds: est.bounds.iter().map(|b| round12(*b)).collect(),
        })
    } else {
        None
    };
    let monte_carlo = if args.method != "slice" {
        run.flag("samples", args.samples);
        run.flag("seed", args.seed);
        run.seeds.push(args.seed);
        let est = volume_monte_carlo(&run.spec, &t, args.samples, args.seed)?;
        Some(McReport {
            value: round12(est.value),
            std_error: round12(est.std_error),
            samples: est.samples,
            hits: est.hits,
            seed: args.seed,
        })
    } else {
        None
    };

    if args.dump_region_grid {
        if run.sink.dir.is_none() {
            return Err(usage("--dump-region-grid needs --out <DIR>"));
        }
        run.flag("dump_region_grid", true);
        let csv = region_grid_csv(&run.spec, &t)?;
        run.sink.write("region_grid.csv", csv.as_bytes())?;
    }

    let report = VolumeReport {
        name: run.spec.name.clone(),
        t: rational_string(&t),
        method: args.method.clone(),
        slice,
        monte_carlo,
    };
    run.finish("volume", "volume.json", &to_json(&report))
}

/// A 256 x 256 membership cloud over the certified bounding box, for
/// external plotting of the height region.
fn region_grid_csv(spec: &MorphismSpec, t: &BigRational) -> Result<String, CliError> {
    const N: i32 = 256;
    let bounds = bounding_box(spec, t)?;
    let thresholds: Vec<BigRational> = spec
        .target
        .0
        .iter()
        .map(|u| num_traits::pow(t.clone(), *u as usize))
        .collect();
    let mut csv = String::from("x1,x2,inside\n");
    let b0 = bounds[0].to_f64().unwrap();
    let b1 = bounds[1].to_f64().unwrap();
    for i in 0..N {
        for j in 0..N {
            let x = b0 * (2.0 * (i as f64 + 0.5) / N as f64 - 1.0);
            let y = b1 * (2.0 * (j as f64 + 0.5) / N as f64 - 1.0);
            let xr = BigRational::from_float(x).expect("finite");
            let yr = BigRational::from_float(y).expect("finite");
            let fv = spec.evaluate(&[xr, yr]);
            let inside = fv
                .iter()
                .zip(&thresholds)
                .all(|(v, tau)| v.abs() <= *tau);
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_float(x),
                fmt_float(y),
                u8::from(inside)
            ));
        }
    }
    Ok(csv)
}

#[derive(Serialize)]
struct DiscrepancyRow {
    d: String,
    mass: String,
}

#[derive(Serialize)]
struct CountReportJson {
    name: String,
    t: String,
    mass: String,
    mass_float: f64,
    columns: u64,
    candidates: u64,
    points: u64,
    audited: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    by_discrepancy: Option<Vec<DiscrepancyRow>>,
}

fn cmd_count(cli: &Cli, args: &CountArgs) -> Result<(), CliError> {
    let mut run = load_run(cli, None)?;
    let t = parse_t(&args.t)?;
    run.flag("T", rational_string(&t));
    let mut opts = CountOptions::default();
    if let Some(budget) = args.budget {
        opts.budget_columns = budget;
        run.flag("budget", budget);
    }
    if let Some(path) = &args.checkpoint {
        opts.checkpoint = Some(path.clone());
        run.flag("checkpoint", path.display().to_string());
    }
    if args.exclude_singular {
        opts.exclude_singular = true;
        run.flag("exclude_singular", true);
    }
    if args.by_discrepancy {
        run.flag("by_discrepancy", true);
    }

    let analysis = global_analysis(&run.spec)?;
    let outcome = count_exact(&run.spec, &analysis, &t, &opts)?;
    let by_discrepancy = args.by_discrepancy.then(|| {
        outcome
            .by_discrepancy
            .iter()
            .map(|(d, mass)| DiscrepancyRow {
                d: rational_string(d),
                mass: rational_string(mass),
            })
            .collect()
    });
    let report = CountReportJson {
        name: run.spec.name.clone(),
        t: rational_string(&t),
        mass: rational_string(&outcome.mass),
        mass_float: round12(outcome.mass.to_f64().unwrap()),
        columns: outcome.columns,
        candidates: outcome.candidates,
        points: outcome.points,
        audited: outcome.audited,
        by_discrepancy,
    };
    run.finish("count", "count.json", &to_json(&report))
}

#[derive(Serialize)]
struct LadderRow {
    t: String,
    mass: String,
    fitted: f64,
    rel_gap: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    name: String,
    e: u32,
    exponent: String,
    error_exponent: String,
    special_log: bool,
    c_phi: String,
    volume: f64,
    predicted_constant: f64,
    rows: Vec<LadderRow>,
    gaps_shrinking: bool,
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<(), CliError> {
    let mut run = load_run(cli, Some(Path::new(".")))?;
    if args.ladder.is_empty() {
        return Err(usage("--ladder t1,t2,... is required"));
    }
    let mut ladder = Vec::new();
    for s in &args.ladder {
        ladder.push(parse_t(s)?);
    }
    run.flag(
        "ladder",
        ladder
            .iter()
            .map(rational_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    run.flag("grid", args.grid);
    run.flag("format", &cli.format);
    let mut opts = CountOptions::default();
    if let Some(budget) = args.budget {
        opts.budget_columns = budget;
        run.flag("budget", budget);
    }
    if args.exclude_singular {
        opts.exclude_singular = true;
        run.flag("exclude_singular", true);
    }

    let analysis = global_analysis(&run.spec)?;
    let one = BigRational::from_integer(1.into());
    let vol = volume_slice(&run.spec, &one, args.grid)?;
    let pred = predict(&run.spec, &analysis, vol.value, &FieldContext::rationals())?;
    let report = convergence_report(&run.spec, &analysis, &pred, &ladder, &opts)?;

    let rows: Vec<LadderRow> = report
        .t_ladder
        .iter()
        .zip(&report.masses)
        .zip(report.fitted.iter().zip(&report.relative_gaps))
        .map(|((t, mass), (fitted, gap))| LadderRow {
            t: rational_string(t),
            mass: rational_string(mass),
            fitted: round12(*fitted),
            rel_gap: round12(*gap),
        })
        .collect();
    let json_report = VerifyReport {
        name: run.spec.name.clone(),
        e: run.spec.e,
        exponent: rational_string(&pred.exponent),
        error_exponent: rational_string(&pred.error_exponent),
        special_log: pred.log_correction,
        c_phi: rational_string(&pred.c_phi),
        volume: round12(pred.volume),
        predicted_constant: round12(pred.constant),
        rows,
        gaps_shrinking: report.gaps_shrinking,
    };
    let json_bytes = to_json(&json_report);
    print!("{}", String::from_utf8_lossy(&json_bytes));

    if cli.format != "csv" {
        run.sink.write("report.json", &json_bytes)?;
    }
    if cli.format != "json" {
        let mut csv = String::from("T,mass_num,mass_den,fitted,predicted,rel_gap\n");
        for ((t, mass), (fitted, gap)) in report
            .t_ladder
            .iter()
            .zip(&report.masses)
            .zip(report.fitted.iter().zip(&report.relative_gaps))
        {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rational_string(t),
                mass.numer(),
                mass.denom(),
                fmt_float(*fitted),
                fmt_float(pred.constant),
                fmt_float(*gap)
            ));
        }
        run.sink.write("counts.csv", csv.as_bytes())?;
    }
    run.write_manifest("verify")
}
