use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lambertq::bench::{run_bench, BenchSeries};
use lambertq::bilateral::{jordan_direct, jordan_form1, jordan_form2, jordan_theta, BilateralParams};
use lambertq::identities::{check_identity, registry, IdentityReport};
use lambertq::lambert::{
    glambert_lhs, glambert_theta, lambert_naive, lambert_theta, series_qxt_alt, series_qxt_lhs,
    series_qxt_rhs, QxtParams,
};
use lambertq::numerics::{format_significant, make_context, BigReal, RealContext};
use lambertq::qcore::{theta3, SeriesValue};
use lambertq::recurrences::{
    fib_even_theta, fib_odd_theta, fib_recip_gosper_auto, recip_sum_fast, recip_sum_naive,
    HoradamSequence,
};
use lambertq::{gospermat, Error};

/// Contexts below this many digits are not meaningful; smaller requests are
/// computed at this precision and printed with fewer digits.
const MIN_CONTEXT_DIGITS: u32 = 10;

const GOSPER_MATRIX: &str = "gosper-matrix";

#[derive(Parser)]
#[command(name = "lambertq", version, about = "High-precision Lambert-type q-series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Significant decimal digits of the result.
    #[arg(long, default_value_t = 30)]
    digits: u32,
    /// Emit a JSON report instead of the bare value.
    #[arg(long)]
    report: bool,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = 42, allow_negative_numbers = true)]
    seed: i64,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one series.
    Eval {
        series: EvalSeries,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: SeriesParams,
        /// Evaluation method (naive, theta, alt; direct, form1, form2 for bilateral).
        #[arg(long)]
        method: Option<String>,
    },
    /// Sum of reciprocals of a Horadam sequence.
    RecipSum {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        m1: i64,
        #[arg(long, allow_negative_numbers = true)]
        m2: i64,
        #[arg(long, value_enum, default_value_t = RecipMethod::Horadam)]
        method: RecipMethod,
    },
    /// Check identities at sampled points.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        identity: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 100)]
        trials: u32,
        /// Factor count for the matrix products (default: until converged).
        #[arg(long)]
        factors: Option<u64>,
    },
    /// Compare every method of a series.
    Bench {
        #[arg(long, value_enum)]
        series: BenchKind,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: SeriesParams,
    },
}

#[derive(Args, Clone, Default)]
struct SeriesParams {
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSeries {
    Lambert,
    Glambert,
    Qxt,
    Bilateral,
    Theta3,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Lambert,
    Glambert,
    Qxt,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecipMethod {
    Naive,
    Horadam,
    Gosper,
    Split,
}

impl RecipMethod {
    fn name(self) -> &'static str {
        match self {
            RecipMethod::Naive => "naive",
            RecipMethod::Horadam => "horadam",
            RecipMethod::Gosper => "gosper",
            RecipMethod::Split => "split",
        }
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Pole(_) => 3,
            Error::Divergence(_) | Error::PrecisionLoss(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn context(digits: u32) -> Result<RealContext, Failure> {
    if digits == 0 {
        return Err(usage("--digits must be positive"));
    }
    Ok(make_context(digits.max(MIN_CONTEXT_DIGITS))?)
}

impl SeriesParams {
    fn get(&self, name: &str, ctx: &RealContext) -> Result<BigReal, Failure> {
        let text = match name {
            "q" => &self.q,
            "x" => &self.x,
            _ => &self.t,
        };
        let text = text.as_ref().ok_or_else(|| usage(format!("--{name} is required")))?;
        Ok(ctx.parse(text)?)
    }
}

fn emit(line: &str) {
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn emit_value(v: &SeriesValue, method: &str, common: &Common) {
    let value = format_significant(&v.value, common.digits as usize);
    if common.report {
        let report = json!({
            "value": value,
            "terms_used": v.terms_used,
            "tail_bound": v.tail_bound.to_scientific(6),
            "method": method,
        });
        emit(&report.to_string());
    } else {
        emit(&value);
    }
}

fn cmd_eval(series: EvalSeries, common: &Common, params: &SeriesParams, method: Option<&str>) -> Outcome {
    let ctx = context(common.digits)?;
    let c = &ctx;
    let bad_method = |m: &str| usage(format!("unknown method {m:?} for this series"));
    let (value, tag) = match series {
        EvalSeries::Lambert => {
            let q = params.get("q", c)?;
            match method.unwrap_or("theta") {
                "naive" => (lambert_naive(&q, c)?, "naive"),
                "theta" => (lambert_theta(&q, c)?, "theta"),
                m => return Err(bad_method(m)),
            }
        }
        EvalSeries::Glambert => {
            let (x, q) = (params.get("x", c)?, params.get("q", c)?);
            match method.unwrap_or("theta") {
                "naive" => (glambert_lhs(&x, &q, c)?, "naive"),
                "theta" => (glambert_theta(&x, &q, c)?, "theta"),
                m => return Err(bad_method(m)),
            }
        }
        EvalSeries::Qxt => {
            let p = QxtParams::new(params.get("x", c)?, params.get("t", c)?, params.get("q", c)?, c)?;
            match method.unwrap_or("theta") {
                "naive" => (series_qxt_lhs(&p, c)?, "naive"),
                "theta" => (series_qxt_rhs(&p, c)?, "theta"),
                "alt" => (series_qxt_alt(&p, c)?, "alt"),
                m => return Err(bad_method(m)),
            }
        }
        EvalSeries::Bilateral => {
            let p = BilateralParams::new(params.get("x", c)?, params.get("t", c)?, params.get("q", c)?, c)?;
            match method.unwrap_or("theta") {
                "direct" | "naive" => (jordan_direct(&p, c)?, "direct"),
                "theta" => (jordan_theta(&p, c)?, "theta"),
                "form1" => (jordan_form1(&p, c)?, "form1"),
                "form2" => (jordan_form2(&p, c)?, "form2"),
                m => return Err(bad_method(m)),
            }
        }
        EvalSeries::Theta3 => {
            let q = params.get("q", c)?;
            match method.unwrap_or("theta") {
                "theta" => (theta3(&q, c)?, "theta"),
                m => return Err(bad_method(m)),
            }
        }
    };
    emit_value(&value, tag, common);
    Ok(0)
}

fn cmd_recip_sum(common: &Common, m1: i64, m2: i64, method: RecipMethod) -> Outcome {
    let seq = HoradamSequence::new(m1, m2)?;
    let ctx = context(common.digits)?;
    if matches!(method, RecipMethod::Gosper | RecipMethod::Split) && !seq.is_fibonacci() {
        return Err(usage(format!("method {} needs --m1 1 --m2 1", method.name())));
    }
    let value = match method {
        RecipMethod::Naive => recip_sum_naive(&seq, &ctx)?,
        RecipMethod::Horadam => recip_sum_fast(&seq, &ctx)?,
        RecipMethod::Gosper => fib_recip_gosper_auto(&ctx)?,
        RecipMethod::Split => fib_even_theta(&ctx)?.combine(&fib_odd_theta(&ctx)?, "split"),
    };
    emit_value(&value, method.name(), common);
    Ok(0)
}

fn emit_report(report: &IdentityReport) {
    emit(&serde_json::to_string(report).expect("reports serialize"));
}

fn cmd_verify(common: &Common, identity: Option<&str>, all: bool, trials: u32, factors: Option<u64>) -> Outcome {
    let ctx = make_context(common.digits)?;
    let names: Vec<String> = if all {
        registry()
            .iter()
            .map(|e| e.name.to_string())
            .chain([GOSPER_MATRIX.to_string()])
            .collect()
    } else {
        vec![identity.expect("clap enforces --identity or --all").to_string()]
    };
    let mut all_pass = true;
    for name in &names {
        let report = if name == GOSPER_MATRIX {
            gospermat::verify(&gospermat::default_qs(&ctx), factors, common.seed, &ctx)?
        } else {
            check_identity(name, trials, common.seed, &ctx)?
        };
        all_pass &= report.pass;
        emit_report(&report);
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_bench(kind: BenchKind, common: &Common, params: &SeriesParams) -> Outcome {
    let ctx = context(common.digits)?;
    let c = &ctx;
    let series = match kind {
        BenchKind::Lambert => BenchSeries::Lambert { q: params.get("q", c)? },
        BenchKind::Glambert => BenchSeries::GLambert {
            x: params.get("x", c)?,
            q: params.get("q", c)?,
        },
        BenchKind::Qxt => BenchSeries::Qxt {
            x: params.get("x", c)?,
            t: params.get("t", c)?,
            q: params.get("q", c)?,
        },
    };
    let report = run_bench(&series, c)?;
    emit(&serde_json::to_string(&report).expect("reports serialize"));
    if !report.consistent {
        eprintln!("error: methods disagree beyond 4 epsilon");
        return Ok(1);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Eval {
            series,
            common,
            params,
            method,
        } => cmd_eval(*series, common, params, method.as_deref()),
        Command::RecipSum { common, m1, m2, method } => cmd_recip_sum(common, *m1, *m2, *method),
        Command::Verify {
            common,
            identity,
            all,
            trials,
            factors,
        } => cmd_verify(common, identity.as_deref(), *all, *trials, *factors),
        Command::Bench { series, common, params } => cmd_bench(*series, common, params),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
