use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qspkit::bench::{self, BenchConfig, BenchRecord};
use qspkit::metrics::{sup_error, unitarity_residual};
use qspkit::pipeline::{
    find_angles, CompletionKind, DecompKind, FindOptions, Method, DEFAULT_EPS_CAP,
};
use qspkit::qspmodel::{read_sequences, write_sequences, Convention};
use qspkit::QspError;

const EXIT_ARGS: u8 = 1;
const EXIT_METHOD: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

/// Phase-angle finding for quantum signal processing.
#[derive(Parser)]
#[command(name = "qspkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find angles implementing e^{-i tau x} / 2 at truncation order --degree.
    FindAngles(FindArgs),
    /// Recompute the error and unitarity residual of a stored sequence file.
    Verify(VerifyArgs),
    /// Benchmark sweeps, error distributions and runtime scaling.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Wx,
    Wz,
    Gqsp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rf,
    Drf,
    Prony,
    Opt,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecompArg {
    Carve,
    Halve,
    HalveCap,
}

#[derive(Args)]
struct FindArgs {
    #[arg(long, value_enum)]
    convention: ConventionArg,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Defaults to halve for wz and carve otherwise; ignored by opt.
    #[arg(long, value_enum)]
    decomp: Option<DecompArg>,
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    /// Even truncation order d >= 2.
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPS_CAP)]
    eps_cap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    tau: f64,
    /// CSV output; a JSON-lines mirror is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs.
    #[arg(long, env = "QSPKIT_JOBS")]
    jobs: Option<usize>,
    /// Per-run timeout in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    #[arg(long, default_value_t = DEFAULT_EPS_CAP)]
    eps_cap: f64,
}

impl Common {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            jobs: self.jobs,
            timeout: Duration::from_secs(self.timeout),
            eps_cap: self.eps_cap,
        }
    }
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Error against degree, best of --trials per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated method ids such as g.p.c,wz.p.h,wx.o.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "g.p.c,g.drf.c,wx.drf.c,wz.drf.h,wz.p.h,wz.p.ch,wx.o"
        )]
        methods: Vec<String>,
        #[arg(long, default_value_t = 4)]
        dmin: usize,
        #[arg(long, default_value_t = 100)]
        dmax: usize,
        #[arg(long, default_value_t = 4)]
        dstep: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Write every trial instead of the best per point.
        #[arg(long)]
        all: bool,
    },
    /// Error distribution at one degree over seeds 0..trials.
    Cdf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 34)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Wall time against degree with a fitted log-log slope per method.
    Timing {
        #[command(flatten)]
        common: Common,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "g.p.c,g.drf.c,wx.drf.c,wz.drf.h,wz.p.h"
        )]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

fn method_of(args: &FindArgs) -> Method {
    let convention = match args.convention {
        ConventionArg::Wx => Convention::WxSz,
        ConventionArg::Wz => Convention::WzSx,
        ConventionArg::Gqsp => Convention::Gqsp,
    };
    let completion = match args.method {
        MethodArg::Opt => return Method::Optimization { convention },
        MethodArg::Rf => CompletionKind::Rootfind,
        MethodArg::Drf => CompletionKind::DeterministicRootfind,
        MethodArg::Prony => CompletionKind::Prony,
    };
    let decomp = match (args.decomp, convention) {
        (Some(DecompArg::Carve), _) => DecompKind::Carve,
        (Some(DecompArg::Halve), _) => DecompKind::Halve,
        (Some(DecompArg::HalveCap), _) => DecompKind::CapHalve,
        (None, Convention::WzSx) => DecompKind::Halve,
        (None, _) => DecompKind::Carve,
    };
    Method::Direct {
        convention,
        completion,
        decomp,
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn is_argument_error(e: &QspError) -> bool {
    matches!(e, QspError::Argument(_) | QspError::Unsupported(_))
}

fn cmd_find(args: FindArgs) -> ExitCode {
    let method = match method_of(&args).validate() {
        Ok(m) => m,
        Err(e) => return fail(EXIT_ARGS, e),
    };
    if args.degree < 2 || args.degree % 2 == 1 {
        return fail(
            EXIT_ARGS,
            format!("--degree must be even and at least 2, got {}", args.degree),
        );
    }
    let opts = FindOptions {
        seed: args.seed,
        eps_cap: args.eps_cap,
    };
    let found = match find_angles(method, args.tau, args.degree, &opts) {
        Ok(f) => f,
        Err(e) if is_argument_error(&e) => return fail(EXIT_ARGS, e),
        Err(e) => return fail(EXIT_METHOD, e),
    };
    let written = write_sequences(&found.sequences)
        .and_then(|text| std::fs::write(&args.out, text).map_err(QspError::from));
    if let Err(e) = written {
        return fail(EXIT_ARGS, e);
    }
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:e}"));
    println!("method={method}");
    println!("tau={}", args.tau);
    println!("degree={}", args.degree);
    println!("epsilon={:e}", found.epsilon);
    println!("queries={}", found.queries);
    println!("cert_residual={}", opt(found.cert_residual));
    println!("recon_residual={}", opt(found.recon_residual));
    println!("converged={}", found.converged);
    println!("sequences={}", found.sequences.len());
    println!("wall_time_ms={:.3}", found.wall_time_ms);
    println!("out={}", args.out.display());
    ExitCode::SUCCESS
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let seqs = match std::fs::read_to_string(&args.input)
        .map_err(QspError::from)
        .and_then(|t| read_sequences(&t))
    {
        Ok(s) => s,
        Err(e) => return fail(EXIT_ARGS, e),
    };
    let (eps, unit) =
        match sup_error(&seqs, args.tau).and_then(|e| Ok((e, unitarity_residual(&seqs)?))) {
            Ok(v) => v,
            Err(e) => return fail(EXIT_ARGS, e),
        };
    let ok = eps < args.tol;
    println!("epsilon={eps:e}");
    println!("unitarity_residual={unit:e}");
    println!("tol={:e}", args.tol);
    println!("ok={ok}");
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TOLERANCE)
    }
}

fn parse_methods(ids: &[String]) -> Result<Vec<Method>, QspError> {
    ids.iter()
        .map(|id| id.trim().parse::<Method>().and_then(Method::validate))
        .collect()
}

fn write_outputs(path: &Path, records: &[BenchRecord]) -> Result<(), QspError> {
    bench::write_csv(records, BufWriter::new(File::create(path)?))?;
    bench::write_jsonl(
        records,
        BufWriter::new(File::create(path.with_extension("jsonl"))?),
    )
}

fn emit(common: &Common, records: &[BenchRecord]) -> ExitCode {
    match &common.out {
        Some(path) => match write_outputs(path, records) {
            Ok(()) => {
                println!("records={}", records.len());
                println!("out={}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_ARGS, e),
        },
        None => match bench::write_csv(records, std::io::stdout().lock()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(EXIT_ARGS, e),
        },
    }
}

fn cmd_bench(cmd: BenchCommand) -> ExitCode {
    match cmd {
        BenchCommand::Sweep {
            common,
            methods,
            dmin,
            dmax,
            dstep,
            trials,
            all,
        } => {
            let methods = match parse_methods(&methods) {
                Ok(m) => m,
                Err(e) => return fail(EXIT_ARGS, e),
            };
            if dstep == 0 || dstep % 2 == 1 || dmin < 2 || dmin % 2 == 1 || dmax < dmin {
                return fail(
                    EXIT_ARGS,
                    "degrees need even --dmin >= 2, even --dstep and --dmax >= --dmin",
                );
            }
            let ds: Vec<usize> = (dmin..=dmax).step_by(dstep).collect();
            let mut records = bench::run_sweep(common.tau, &ds, &methods, trials, &common.config());
            if !all {
                records.retain(|r| r.best);
            }
            emit(&common, &records)
        }
        BenchCommand::Cdf {
            common,
            method,
            d,
            trials,
            threshold,
        } => {
            let method = match parse_methods(&[method]) {
                Ok(m) => m[0],
                Err(e) => return fail(EXIT_ARGS, e),
            };
            let records = bench::run_cdf(common.tau, d, method, trials, &common.config());
            eprintln!("success_rate={}", bench::success_rate(&records, threshold));
            emit(&common, &records)
        }
        BenchCommand::Timing {
            common,
            methods,
            degrees,
            repeats,
        } => {
            let methods = match parse_methods(&methods) {
                Ok(m) => m,
                Err(e) => return fail(EXIT_ARGS, e),
            };
            let report =
                bench::run_timing(common.tau, &degrees, &methods, repeats, &common.config());
            for (id, slope) in &report.slopes {
                eprintln!(
                    "slope {id}={}",
                    slope.map_or("none".into(), |s| format!("{s:.3}"))
                );
            }
            emit(&common, &report.records)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGS } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::FindAngles(a) => cmd_find(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(b) => cmd_bench(b),
    }
}
