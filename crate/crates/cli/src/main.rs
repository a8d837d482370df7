//! `yamabe`: integrate, classify, scan and verify warp-function solutions.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
//! 3 integration failure, 4 inconclusive.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod scan;
mod stream;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use yamabe_core::classifier::{classify, Branch, Check, DEFAULT_TOL};
use yamabe_core::geometry::make_constant_example;
use yamabe_core::integrator::{integrate, sphere_tip_initialize, Direction, Trajectory, TIP_R0};
use yamabe_core::ode::SolitonParams;
use yamabe_core::suites::{trajectory_checks, Suite};

use args::{output, usage, OptsArgs, SolitonArgs, Usage};

const OK: u8 = 0;
const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;
const INTEGRATION_FAILED: u8 = 3;
const INCONCLUSIVE: u8 = 4;

#[derive(Parser)]
#[command(name = "yamabe", version, about = "Expanding gradient Yamabe solitons through their warp ODE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream the samples of one trajectory as JSON lines.
    Integrate(SolitonArgs),
    /// Classify one trajectory and run the checks that apply to its branch.
    Classify {
        #[command(flatten)]
        soliton: SolitonArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Run a parameter grid from a JSON config.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        opts: OptsArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream a closed-form or tip-shooting example.
    Example(ExampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    Constant,
    SphereTip,
}

#[derive(clap::Args)]
struct ExampleArgs {
    #[arg(long, value_enum)]
    name: ExampleName,
    #[arg(long, default_value_t = 3)]
    n: u32,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    rbar: f64,
    /// Half-width of the window for `constant`.
    #[arg(long, default_value_t = 10.0)]
    half_width: f64,
    #[command(flatten)]
    opts: OptsArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let status = match cli.command {
        Command::Integrate(a) => cmd_integrate(&a),
        Command::Classify { soliton, tol } => cmd_classify(&soliton, tol),
        Command::Scan { config } => cmd_scan(&config),
        Command::Verify { suite, opts, out } => cmd_verify(&suite, &opts, out.as_ref()),
        Command::Example(a) => cmd_example(&a),
    };
    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    if e.is::<Usage>() {
        return USAGE;
    }
    match e.downcast_ref::<yamabe_core::Error>() {
        Some(yamabe_core::Error::Unreached { .. }) => INTEGRATION_FAILED,
        _ => USAGE,
    }
}

fn failed(tr: &Trajectory) -> bool {
    tr.termination_fwd().is_failure() || tr.termination_bwd().is_failure()
}

fn emit(tr: &Trajectory, out: Option<&PathBuf>) -> Result<u8> {
    let mut w = output(out)?;
    stream::write_stream(&mut w, tr)?;
    if failed(tr) {
        eprintln!(
            "integration failed: forward {}, backward {}",
            tr.termination_fwd().as_str(),
            tr.termination_bwd().as_str()
        );
        return Ok(INTEGRATION_FAILED);
    }
    Ok(OK)
}

fn cmd_integrate(a: &SolitonArgs) -> Result<u8> {
    let tr = a.trajectory()?;
    emit(&tr, a.out.as_ref())
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    branch: Branch,
    asymptote_c: Option<f64>,
    details: &'a str,
    checks: Vec<Check>,
}

fn cmd_classify(a: &SolitonArgs, tol: f64) -> Result<u8> {
    if !(tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {tol}")).into());
    }
    let tr = a.trajectory()?;
    let c = classify(&tr, tol)?;
    let mut checks = Vec::new();
    if c.branch != Branch::Inconclusive {
        for report in trajectory_checks(&tr, &c) {
            checks.extend(report.checks.into_iter().map(|mut k| {
                k.name = format!("{}: {}", report.suite, k.name);
                k
            }));
        }
    }
    let all_pass = checks.iter().all(|k| k.passed);
    let doc = ClassifyOutput {
        branch: c.branch,
        asymptote_c: c.asymptote_c,
        details: &c.details,
        checks,
    };
    let mut w = output(a.out.as_ref())?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;

    Ok(if failed(&tr) {
        INTEGRATION_FAILED
    } else if c.branch == Branch::Inconclusive {
        INCONCLUSIVE
    } else if !all_pass {
        CHECK_FAILED
    } else {
        OK
    })
}

fn cmd_scan(path: &PathBuf) -> Result<u8> {
    let config = scan::ScanConfig::load(path)?;
    let outcome = scan::run(&config)?;
    if let Some((index, error)) = &outcome.failure {
        eprintln!("grid point {index} failed: {error}");
        return Ok(INTEGRATION_FAILED);
    }
    Ok(if outcome.records.iter().all(|r| r.suite_pass) {
        OK
    } else {
        CHECK_FAILED
    })
}

fn cmd_verify(name: &str, opts: &OptsArgs, out: Option<&PathBuf>) -> Result<u8> {
    let Some(suite) = Suite::from_name(name) else {
        let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        return Err(usage(format!("unknown suite {name:?}; known: {}", known.join(", "))).into());
    };
    let report = suite.run(&opts.options()?)?;
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    for f in report.failures() {
        eprintln!("FAIL {}: {}", f.name, f.detail);
    }
    Ok(if report.passed() { OK } else { CHECK_FAILED })
}

fn cmd_example(a: &ExampleArgs) -> Result<u8> {
    let tr = match a.name {
        ExampleName::Constant => make_constant_example(a.n, a.lambda, a.rbar, a.half_width)?,
        ExampleName::SphereTip => {
            let params = SolitonParams::expanding(a.n, a.lambda, a.rbar)?;
            let init = sphere_tip_initialize(&params, TIP_R0)?;
            integrate(&params, init, Direction::Both, &a.opts.options()?)?
        }
    };
    emit(&tr, a.out.as_ref())
}
