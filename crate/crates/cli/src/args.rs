use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use yamabe_core::integrator::{
    integrate, sphere_tip_initialize, Direction, IntegrationOptions, Trajectory, TIP_R0,
};
use yamabe_core::ode::{SolitonParams, SolitonState};
use yamabe_core::separatrix::{separatrix, AsymptoticEnd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
    Both,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Backward => Direction::Backward,
            DirectionArg::Both => Direction::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndArg {
    Backward,
    Forward,
}

impl From<EndArg> for AsymptoticEnd {
    fn from(e: EndArg) -> Self {
        match e {
            EndArg::Backward => AsymptoticEnd::Backward,
            EndArg::Forward => AsymptoticEnd::Forward,
        }
    }
}

/// Integration window and tolerances.
#[derive(Debug, Clone, Args)]
pub struct OptsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub r_span: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rtol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub atol: Option<f64>,
}

impl OptsArgs {
    pub fn options(&self) -> Result<IntegrationOptions> {
        let mut o = IntegrationOptions::default();
        if let Some(v) = self.r_span {
            o.r_span = v;
        }
        if let Some(v) = self.rtol {
            o.rtol = v;
        }
        if let Some(v) = self.atol {
            o.atol = v;
        }
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolitonArgs {
    /// Total dimension, at least 3.
    #[arg(long)]
    pub n: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Scalar curvature of the fiber.
    #[arg(long, allow_negative_numbers = true)]
    pub rbar: f64,

    #[arg(long, allow_negative_numbers = true)]
    pub rho0: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["tip", "separatrix"])]
    pub drho0: Option<f64>,

    /// Start at a smooth tip (needs rbar > 0).
    #[arg(long, conflicts_with_all = ["rho0", "separatrix"])]
    pub tip: bool,
    /// Offset of the start point from the tip.
    #[arg(long, default_value_t = TIP_R0, requires = "tip")]
    pub r0: f64,

    /// Grow the orbit through rho0 out of the constant warp at this end.
    #[arg(long, value_enum)]
    pub separatrix: Option<EndArg>,

    #[arg(long, value_enum, default_value = "both")]
    pub direction: DirectionArg,

    #[command(flatten)]
    pub opts: OptsArgs,

    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SolitonArgs {
    pub fn params(&self) -> Result<SolitonParams> {
        Ok(SolitonParams::expanding(self.n, self.lambda, self.rbar)?)
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let params = self.params()?;
        let opts = self.opts.options()?;
        if self.tip {
            let init = sphere_tip_initialize(&params, self.r0)?;
            return Ok(integrate(&params, init, self.direction.into(), &opts)?);
        }
        let Some(rho0) = self.rho0 else {
            bail!(usage("one of --rho0 with --drho0, --tip or --rho0 with --separatrix is required"));
        };
        if let Some(end) = self.separatrix {
            return Ok(separatrix(&params, rho0, end.into(), &opts)?);
        }
        let Some(drho0) = self.drho0 else {
            bail!(usage("--drho0 is required with --rho0"));
        };
        let init = SolitonState::new(0.0, rho0, drho0);
        Ok(integrate(&params, init, self.direction.into(), &opts)?)
    }
}

/// An error that is the caller's fault.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> Usage {
    Usage(msg.into())
}

pub fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
