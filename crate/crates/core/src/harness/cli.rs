//! The `halpern` command line. [`main_with`] is the whole program minus
//! process exit, so tests can drive it in-process.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::geometry::check_w_axioms;
use crate::moduli::exact::parse_rational;
use crate::moduli::{Budget, Counterexample, ScalarSchedule};
use crate::rates::{browder_k, meta_div, meta_harmonic, meta_prod};
use crate::realseq::AoyamaVariant;
use crate::with_model;

use super::{emit_report, parse_report, parse_space, parse_spec, run_experiment, Format, HarnessError};

#[derive(Parser, Debug)]
#[command(name = "halpern", version, about = "Rates and empirical certification for Halpern iterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a named bound.
    Rates {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        args: RateArgs,
    },
    /// Run an experiment spec and emit its report.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Sample the metric and convexity axioms of a model space.
    VerifyAxioms {
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-emit a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    Asreg,
    Meta,
    Browder,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RatesArg {
    Harmonic,
    Prod,
    Div,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[arg(long, default_value = "harmonic")]
    schedule: String,
    /// Rational, e.g. `1/2` or `0.1`.
    #[arg(long)]
    eps: String,
    #[arg(long = "M")]
    m: u64,
    #[arg(long, default_value = "g:const:0")]
    g: String,
    /// Rate family; defaults to `harmonic` for the harmonic schedule and `div` otherwise.
    #[arg(long, value_enum)]
    rates: Option<RatesArg>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    max_bits: Option<u64>,
}

/// Exit code for a run that could not start.
pub const EXIT_USAGE: i32 = 2;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(HarnessError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                HarnessError::Io(_) | HarnessError::Report(_) => 1,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn usage(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Usage(e.to_string())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, HarnessError> {
    match cmd {
        Command::Rates { which, args } => rates(which, &args, out),
        Command::Run { spec, out: path, format } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| usage(format!("{}: {e}", spec.display())))?;
            let spec = parse_spec(&text)?;
            let report = run_experiment(&spec);
            match path {
                Some(p) => emit_report(&report, format.into(), std::fs::File::create(p)?)?,
                None => emit_report(&report, format.into(), &mut *out)?,
            }
            let _ = writeln!(
                err,
                "{} rows: {} pass, {} fail, {} inconclusive",
                report.rows.len(),
                report.count(super::Status::Pass),
                report.count(super::Status::Fail),
                report.count(super::Status::Inconclusive)
            );
            Ok(report.exit_code())
        }
        Command::VerifyAxioms { space, samples, seed } => {
            let model = parse_space(&space).map_err(usage)?;
            let r = with_model!(&model, s => check_w_axioms(&**s, samples, seed)).map_err(usage)?;
            for (name, v) in r.entries() {
                writeln!(out, "{name:>9} {v:+.3e}")?;
            }
            writeln!(out, "{} samples, worst {:+.3e}: {}", r.samples, r.worst(), if r.pass() { "pass" } else { "fail" })?;
            Ok(if r.pass() { 0 } else { 1 })
        }
        Command::Report { input, format } => {
            let text = std::fs::read_to_string(&input)?;
            let report = parse_report(&text)?;
            emit_report(&report, format.into(), &mut *out)?;
            Ok(report.exit_code())
        }
    }
}

fn rates(which: Which, a: &RateArgs, out: &mut dyn Write) -> Result<i32, HarnessError> {
    let eps = parse_rational(&a.eps).map_err(usage)?;
    let g: Counterexample = a.g.parse().map_err(usage)?;
    let schedule = ScalarSchedule::by_name(&a.schedule).map_err(usage)?;
    let mut budget = Budget::default();
    budget.max_steps = a.max_steps.unwrap_or(budget.max_steps);
    budget.max_bits = a.max_bits.unwrap_or(budget.max_bits);
    let variant = match a.rates {
        Some(RatesArg::Harmonic) => AoyamaVariant::Harmonic,
        Some(RatesArg::Prod) => AoyamaVariant::Product,
        Some(RatesArg::Div) => AoyamaVariant::Divergence,
        None if schedule.name() == "harmonic" => AoyamaVariant::Harmonic,
        None => AoyamaVariant::Divergence,
    };
    if variant == AoyamaVariant::Harmonic && schedule.name() != "harmonic" {
        return Err(usage("harmonic rates need the harmonic schedule"));
    }
    match which {
        Which::Asreg => {
            let r = match variant {
                AoyamaVariant::Harmonic => crate::rates::asreg_rate_harmonic(&eps, a.m),
                AoyamaVariant::Product => crate::rates::asreg_rate_prod(&eps, a.m, &schedule),
                AoyamaVariant::Divergence => crate::rates::asreg_rate_div(&eps, a.m, &schedule),
            }
            .map_err(usage)?;
            let (t, p) = if variant == AoyamaVariant::Harmonic { ("Ψ̃", "Ψ") } else { ("Φ̃", "Φ") };
            writeln!(out, "{t}={} {p}={}", r.phi_tilde, r.phi)?;
            writeln!(out, "{}", r.to_json())?;
            Ok(0)
        }
        Which::Meta => {
            let sigma = match variant {
                AoyamaVariant::Harmonic => meta_harmonic(&eps, &g, a.m, &budget),
                AoyamaVariant::Divergence => meta_div(&eps, &g, a.m, &schedule, &budget),
                AoyamaVariant::Product => meta_prod(&eps, &g, a.m, &schedule, None, &budget),
            }
            .map_err(usage)?;
            if sigma.is_complete() {
                writeln!(out, "Σ={}", sigma.sigma)?;
            } else {
                writeln!(out, "Σ>={} (partial)", sigma.sigma)?;
            }
            writeln!(out, "{}", sigma.to_json())?;
            Ok(if sigma.is_complete() { 0 } else { 1 })
        }
        Which::Browder => {
            let k = browder_k(&eps, &g, a.m, &budget).map_err(usage)?;
            writeln!(out, "K{}{}", if k.complete { "=" } else { ">=" }, k.value)?;
            writeln!(out, "{}", k.to_json())?;
            Ok(if k.complete { 0 } else { 1 })
        }
    }
}
