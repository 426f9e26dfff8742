//! `esfme`: estimate motion on raw frame pairs, evaluate the surface path
//! against oracle searches, print schedule arithmetic, and self-check the
//! model invariants.
//!
//! Exit codes: 0 ok, 1 usage, 2 I/O, 3 internal invariant violation.

mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use esfme::driver::{estimate_frame, evaluate_frame};
use esfme::ime::{Metric, SearchConfig};
use esfme::pixel::{load_raw_frames, Plane, RawFormat};
use esfme::rate::LambdaFixed;
use esfme::report::{
    estimate_csv, schedule_summary, to_json, EstimateReport, EvaluateReport, ReportConfig,
};
use esfme::schedule::{cu_size_set, CtuCountMode, EstimateParams, SizeMode};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "esfme",
    version,
    about = "Interpolation-free fractional motion estimation model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimation pass on a frame pair and write per-CU MV records
    Estimate(RunArgs),
    /// Compare the surface path and the two-step search to the exhaustive optimum
    Evaluate(RunArgs),
    /// Print cycle count and required clock for a configuration
    Schedule(ScheduleArgs),
    /// Run the built-in invariant suites
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Optional TOML config file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Raw file holding the frame being predicted
    #[arg(long)]
    orig: Option<PathBuf>,
    /// Raw file holding the reference frame
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Frame width in pixels (never inferred from the file)
    #[arg(long)]
    width: Option<usize>,
    /// Frame height in pixels
    #[arg(long)]
    height: Option<usize>,
    /// Raw layout: gray8 or yuv420p (luma kept, chroma dropped)
    #[arg(long)]
    format: Option<String>,
    /// Frame index in the orig file
    #[arg(long)]
    orig_frame: Option<usize>,
    /// Frame index in the ref file
    #[arg(long)]
    ref_frame: Option<usize>,
    /// Quantization parameter driving the default lambda
    #[arg(long)]
    qp: Option<i32>,
    /// Explicit lambda in Q16, overrides --qp
    #[arg(long)]
    lambda_q16: Option<u64>,
    /// Integer search half-range in pels
    #[arg(long)]
    range: Option<i32>,
    /// Integer-search metric: sad or satd
    #[arg(long)]
    metric: Option<String>,
    /// CU size family: full or quadtree
    #[arg(long)]
    mode: Option<String>,
    /// Quarter-offset clamp, 3 (default) or 2
    #[arg(long)]
    max_quarter: Option<i32>,
    /// Frame rate used for the throughput summary
    #[arg(long)]
    fps: Option<u32>,
    /// CTU counting: exact-area or ceil-grid
    #[arg(long)]
    ctu_count_mode: Option<String>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: json (canonical) or csv (estimate only)
    #[arg(long)]
    out_format: Option<String>,
}

/// TOML mirror of the run flags.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    orig: Option<PathBuf>,
    #[serde(rename = "ref")]
    reference: Option<PathBuf>,
    width: Option<usize>,
    height: Option<usize>,
    format: Option<String>,
    orig_frame: Option<usize>,
    ref_frame: Option<usize>,
    qp: Option<i32>,
    lambda_q16: Option<u64>,
    range: Option<i32>,
    metric: Option<String>,
    mode: Option<String>,
    max_quarter: Option<i32>,
    fps: Option<u32>,
    ctu_count_mode: Option<String>,
    out: Option<PathBuf>,
    out_format: Option<String>,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// CU size family: full or quadtree
    #[arg(long, default_value = "full")]
    mode: String,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 30)]
    fps: u32,
    /// CTU counting: exact-area or ceil-grid
    #[arg(long, default_value = "exact-area")]
    ctu_count_mode: String,
    /// Also write the JSON document here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Random grids per surface suite
    #[arg(long, default_value_t = 100_000)]
    grids: usize,
    /// Random residuals for the SATD suite
    #[arg(long, default_value_t = 100_000)]
    residuals: usize,
    #[arg(long, default_value_t = 0x45534d45)]
    seed: u64,
}

struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<esfme::Error> for CliError {
    fn from(err: esfme::Error) -> Self {
        let (code, kind) = match err {
            esfme::Error::Io { .. } | esfme::Error::FileTooShort { .. } => (EXIT_IO, "io"),
            esfme::Error::SlotRewrite { .. }
            | esfme::Error::CostOverflow
            | esfme::Error::RankDeficient => (EXIT_INTERNAL, "internal"),
            _ => (EXIT_USAGE, "usage"),
        };
        CliError {
            code,
            kind,
            message: err.to_string(),
        }
    }
}

/// Fully resolved run configuration: flags over TOML over defaults.
struct RunConfig {
    orig: PathBuf,
    reference: PathBuf,
    width: usize,
    height: usize,
    format: RawFormat,
    orig_frame: usize,
    ref_frame: usize,
    lambda: LambdaFixed,
    search: SearchConfig,
    mode: SizeMode,
    max_quarter: i32,
    fps: u32,
    ctu_count_mode: CtuCountMode,
    out: Option<PathBuf>,
    out_format: OutFormat,
}

#[derive(PartialEq, Clone, Copy)]
enum OutFormat {
    Json,
    Csv,
}

fn parse_with<T, E: std::fmt::Display>(
    what: &str,
    value: Option<String>,
    f: impl Fn(&str) -> Result<T, E>,
    default: T,
) -> Result<T, CliError> {
    match value {
        None => Ok(default),
        Some(s) => f(&s).map_err(|e| CliError::usage(format!("{what}: {e}"))),
    }
}

impl RunConfig {
    fn resolve(args: RunArgs) -> Result<RunConfig, CliError> {
        let file: FileConfig = match &args.config {
            None => FileConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| {
                    CliError::from(esfme::Error::Io {
                        path: path.clone(),
                        source,
                    })
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?
            }
        };

        let orig = args
            .orig
            .or(file.orig)
            .ok_or_else(|| CliError::usage("missing --orig"))?;
        let reference = args
            .reference
            .or(file.reference)
            .ok_or_else(|| CliError::usage("missing --ref"))?;
        let width = args
            .width
            .or(file.width)
            .ok_or_else(|| CliError::usage("missing --width"))?;
        let height = args
            .height
            .or(file.height)
            .ok_or_else(|| CliError::usage("missing --height"))?;
        let format = parse_with(
            "--format",
            args.format.or(file.format),
            RawFormat::from_str,
            RawFormat::Gray8,
        )?;
        let mode = parse_with(
            "--mode",
            args.mode.or(file.mode),
            SizeMode::from_str,
            SizeMode::Full,
        )?;
        let ctu_count_mode = parse_with(
            "--ctu-count-mode",
            args.ctu_count_mode.or(file.ctu_count_mode),
            CtuCountMode::from_str,
            CtuCountMode::ExactArea,
        )?;
        let metric = parse_with(
            "--metric",
            args.metric.or(file.metric),
            |s| match s {
                "sad" => Ok(Metric::Sad),
                "satd" => Ok(Metric::Satd),
                other => Err(format!("unknown metric `{other}`")),
            },
            Metric::Sad,
        )?;
        let out_format = parse_with(
            "--out-format",
            args.out_format.or(file.out_format),
            |s| match s {
                "json" => Ok(OutFormat::Json),
                "csv" => Ok(OutFormat::Csv),
                other => Err(format!("unknown output format `{other}`")),
            },
            OutFormat::Json,
        )?;

        let lambda = match args.lambda_q16.or(file.lambda_q16) {
            Some(q16) => LambdaFixed::from_q16(q16),
            None => LambdaFixed::from_qp(args.qp.or(file.qp).unwrap_or(32)),
        };
        let range = args.range.or(file.range).unwrap_or(8);
        if range < 1 {
            return Err(CliError::usage("--range must be at least 1"));
        }
        let max_quarter = args.max_quarter.or(file.max_quarter).unwrap_or(3);
        if !(2..=3).contains(&max_quarter) {
            return Err(CliError::usage("--max-quarter must be 2 or 3"));
        }

        Ok(RunConfig {
            orig,
            reference,
            width,
            height,
            format,
            orig_frame: args.orig_frame.or(file.orig_frame).unwrap_or(0),
            ref_frame: args.ref_frame.or(file.ref_frame).unwrap_or(0),
            lambda,
            search: SearchConfig::new(range, metric),
            mode,
            max_quarter,
            fps: args.fps.or(file.fps).unwrap_or(30),
            ctu_count_mode,
            out: args.out.or(file.out),
            out_format,
        })
    }

    fn load_frame(&self, path: &Path, index: usize) -> Result<Plane, CliError> {
        let mut frames = load_raw_frames(path, self.width, self.height, self.format, index + 1)?;
        Ok(frames.remove(index))
    }

    fn estimate_params(&self) -> EstimateParams {
        EstimateParams {
            search: self.search,
            lambda: self.lambda,
            max_quarter: self.max_quarter,
        }
    }

    fn report_config(&self) -> ReportConfig {
        ReportConfig {
            width: self.width,
            height: self.height,
            orig_frame: self.orig_frame,
            ref_frame: self.ref_frame,
            size_mode: self.mode,
            search_range: self.search.range,
            lambda_q16: self.lambda.q16,
            max_quarter: self.max_quarter,
            fps: self.fps,
            ctu_count_mode: self.ctu_count_mode,
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text).map_err(|source| {
            CliError::from(esfme::Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }),
    }
}

fn cmd_estimate(args: RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let orig = cfg.load_frame(&cfg.orig, cfg.orig_frame)?;
    let reference = cfg.load_frame(&cfg.reference, cfg.ref_frame)?;
    let sizes = cu_size_set(cfg.mode);
    log::info!(
        "estimating {}x{} frame pair, {} CU sizes",
        cfg.width,
        cfg.height,
        sizes.len()
    );
    let frame = estimate_frame(&orig, &reference, &sizes, &cfg.estimate_params())?;
    let report = EstimateReport {
        config: cfg.report_config(),
        schedule: schedule_summary(&sizes, cfg.width, cfg.height, cfg.fps, cfg.ctu_count_mode),
        frame,
    };
    let text = match cfg.out_format {
        OutFormat::Json => to_json(&report),
        OutFormat::Csv => estimate_csv(&report),
    };
    write_output(cfg.out.as_deref(), &text)
}

fn cmd_evaluate(args: RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    if cfg.out_format == OutFormat::Csv {
        return Err(CliError::usage("evaluate emits JSON only"));
    }
    let orig = cfg.load_frame(&cfg.orig, cfg.orig_frame)?;
    let reference = cfg.load_frame(&cfg.reference, cfg.ref_frame)?;
    let sizes = cu_size_set(cfg.mode);
    log::info!("evaluating against oracle searches");
    let metrics = evaluate_frame(&orig, &reference, &sizes, &cfg.estimate_params())?;
    let report = EvaluateReport {
        config: cfg.report_config(),
        metrics,
    }
    .normalized();
    write_output(cfg.out.as_deref(), &to_json(&report))
}

fn cmd_schedule(args: ScheduleArgs) -> Result<(), CliError> {
    let mode = SizeMode::from_str(&args.mode).map_err(CliError::usage)?;
    let ctu_count_mode = CtuCountMode::from_str(&args.ctu_count_mode).map_err(CliError::usage)?;
    if args.width == 0 || args.height == 0 {
        return Err(CliError::usage("width and height must be positive"));
    }
    let sizes = cu_size_set(mode);
    let summary = schedule_summary(&sizes, args.width, args.height, args.fps, ctu_count_mode);

    println!("mode            {:?} ({} CU sizes)", mode, sizes.len());
    println!(
        "frame           {}x{} @ {} fps",
        args.width, args.height, args.fps
    );
    println!("cycles/CTU      {}", summary.cycles_per_ctu);
    println!(
        "CTUs/frame      {}/{} ({})",
        summary.ctus_per_frame.num,
        summary.ctus_per_frame.den,
        summary.ctus_per_frame.to_f64()
    );
    println!(
        "required clock  {:.3} MHz ({}/{} Hz)",
        summary.required_hz.to_f64() / 1e6,
        summary.required_hz.num,
        summary.required_hz.den
    );

    #[derive(serde::Serialize)]
    struct ScheduleDoc<'a> {
        mode: SizeMode,
        width: usize,
        height: usize,
        fps: u32,
        ctu_count_mode: CtuCountMode,
        #[serde(flatten)]
        summary: &'a esfme::report::ScheduleSummary,
    }
    let doc = to_json(&ScheduleDoc {
        mode,
        width: args.width,
        height: args.height,
        fps: args.fps,
        ctu_count_mode,
        summary: &summary,
    });
    match &args.out {
        Some(_) => write_output(args.out.as_deref(), &doc),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn cmd_selftest(args: SelftestArgs) -> Result<(), CliError> {
    let failures = selftest::run_all(args.grids, args.residuals, args.seed);
    if failures == 0 {
        println!("selftest: all suites passed");
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_INTERNAL,
            kind: "internal",
            message: format!("selftest: {failures} suite(s) failed"),
        })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ESFME_LOG")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if err.use_stderr() {
                let first_line = err.to_string();
                let first_line = first_line.lines().next().unwrap_or("bad arguments");
                eprintln!("error[usage]: {first_line}");
                return ExitCode::from(EXIT_USAGE);
            }
            // --help / --version
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
    };

    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Schedule(args) => cmd_schedule(args),
        Command::Selftest(args) => cmd_selftest(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, e.message);
            ExitCode::from(e.code)
        }
    }
}
