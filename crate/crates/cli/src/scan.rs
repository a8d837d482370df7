//! Cross-product parameter scans.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use yamabe_core::classifier::{classify, Branch, Classification, DEFAULT_TOL};
use yamabe_core::integrator::{
    integrate, sphere_tip_initialize, Direction, Event, IntegrationOptions, Termination, TIP_R0,
};
use yamabe_core::ode::{SolitonParams, SolitonState};
use yamabe_core::suites::{cross_grid, line_run, trajectory_checks, GridPoint};

use crate::args::{output, usage, EndArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub n: Vec<u32>,
    pub lambda: Vec<f64>,
    pub rbar: Vec<f64>,
    #[serde(default)]
    pub rho0: Vec<f64>,
    #[serde(default)]
    pub drho0: Vec<f64>,
    #[serde(default)]
    pub tip: bool,
    /// Realise each point as the orbit through `rho0` asymptotic to the
    /// constant warp; `drho0` is then kept only as a label.
    #[serde(default)]
    pub separatrix: Option<SeparatrixEnd>,
    #[serde(default)]
    pub opts: IntegrationOptions,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparatrixEnd {
    Backward,
    Forward,
}

impl From<SeparatrixEnd> for EndArg {
    fn from(e: SeparatrixEnd) -> Self {
        match e {
            SeparatrixEnd::Backward => EndArg::Backward,
            SeparatrixEnd::Forward => EndArg::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Init {
    State { rho0: f64, drho0: f64 },
    Tip { r0: f64, rho0: f64, drho0: f64 },
    Separatrix { end: &'static str, rho0: f64, drho0: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub grid_index: usize,
    pub params: SolitonParams,
    pub init: Init,
    pub classification: Classification,
    pub report_summary: BTreeMap<String, bool>,
    pub suite_pass: bool,
    pub termination_fwd: Termination,
    pub termination_bwd: Termination,
    pub terminal_fwd: Option<Event>,
    pub terminal_bwd: Option<Event>,
    pub asymptote_c: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    grid_index: usize,
    n: u32,
    lambda: f64,
    rbar: f64,
    rho0: f64,
    drho0: f64,
    branch: &'a str,
    asymptote_c: Option<f64>,
    suite_pass: bool,
    termination_fwd: &'a str,
    termination_bwd: &'a str,
}

pub const CSV_HEADER: &str =
    "grid_index,n,lambda,rbar,rho0,drho0,branch,asymptote_c,suite_pass,termination_fwd,termination_bwd";

impl ScanConfig {
    pub fn load(path: &PathBuf) -> Result<ScanConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("malformed config: {e}")).into())
    }

    /// The grid, checked before anything runs.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(usage(format!("grid {name} is empty")))
            } else {
                Ok(())
            }
        };
        empty("n", self.n.len())?;
        empty("lambda", self.lambda.len())?;
        empty("rbar", self.rbar.len())?;
        if self.tip && self.separatrix.is_some() {
            return Err(usage("tip and separatrix are exclusive").into());
        }
        if !self.tip {
            empty("rho0", self.rho0.len())?;
            empty("drho0", self.drho0.len())?;
        }
        self.opts.validate().map_err(|e| usage(e.to_string()))?;
        for &n in &self.n {
            for &lambda in &self.lambda {
                for &rbar in &self.rbar {
                    SolitonParams::expanding(n, lambda, rbar).map_err(|e| usage(e.to_string()))?;
                    if self.tip && !(rbar > 0.0) {
                        return Err(usage(format!("tip entries need rbar > 0, got {rbar}")).into());
                    }
                }
            }
        }
        Ok(if self.tip {
            cross_grid(&self.n, &self.lambda, &self.rbar, &[f64::NAN], &[f64::NAN])
        } else {
            cross_grid(&self.n, &self.lambda, &self.rbar, &self.rho0, &self.drho0)
        })
    }

    fn run_point(&self, point: GridPoint) -> Result<RunRecord> {
        let params = point.params()?;
        let (trajectory, classification, init) = if self.tip {
            let s = sphere_tip_initialize(&params, TIP_R0)?;
            let tr = integrate(&params, s, Direction::Both, &self.opts)?;
            let c = classify(&tr, DEFAULT_TOL)?;
            let init = Init::Tip {
                r0: s.r,
                rho0: s.rho,
                drho0: s.drho,
            };
            (Some(tr), c, init)
        } else if let Some(end) = self.separatrix {
            let run = line_run(point, EndArg::from(end).into(), &self.opts);
            let init = Init::Separatrix {
                end: match end {
                    SeparatrixEnd::Backward => "backward",
                    SeparatrixEnd::Forward => "forward",
                },
                rho0: point.rho0,
                drho0: point.drho0,
            };
            (run.trajectory, run.classification, init)
        } else {
            let s = SolitonState::new(0.0, point.rho0, point.drho0);
            let tr = integrate(&params, s, Direction::Both, &self.opts)?;
            let c = classify(&tr, DEFAULT_TOL)?;
            let init = Init::State {
                rho0: point.rho0,
                drho0: point.drho0,
            };
            (Some(tr), c, init)
        };

        let mut summary = BTreeMap::new();
        if let Some(tr) = &trajectory {
            let failed = tr.termination_fwd().is_failure() || tr.termination_bwd().is_failure();
            summary.insert("integration".to_string(), !failed);
            if classification.branch != Branch::Inconclusive {
                for report in trajectory_checks(tr, &classification) {
                    summary.insert(report.suite.clone(), report.passed());
                }
            }
        }
        let suite_pass = summary.values().all(|&p| p);
        let term = |f: fn(&yamabe_core::integrator::Trajectory) -> Termination| {
            trajectory.as_ref().map_or(Termination::NotIntegrated, f)
        };
        Ok(RunRecord {
            grid_index: point.index,
            params,
            init,
            asymptote_c: classification.asymptote_c,
            report_summary: summary,
            suite_pass,
            termination_fwd: term(|t| t.termination_fwd()),
            termination_bwd: term(|t| t.termination_bwd()),
            terminal_fwd: trajectory.as_ref().and_then(|t| t.terminal_event(true).copied()),
            terminal_bwd: trajectory.as_ref().and_then(|t| t.terminal_event(false).copied()),
            classification,
        })
    }
}

/// What a scan produced: the records up to the first worker error.
pub struct ScanOutcome {
    pub records: Vec<RunRecord>,
    pub failure: Option<(usize, String)>,
}

pub fn run(config: &ScanConfig) -> Result<ScanOutcome> {
    let points = config.points()?;
    eprintln!("scan: {} grid points", points.len());
    let results: Vec<Result<RunRecord>> = points.par_iter().map(|&p| config.run_point(p)).collect();

    let mut records = Vec::with_capacity(results.len());
    let mut failure = None;
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failure = Some((p.index, format!("{e:#}")));
                break;
            }
        }
    }

    let mut out = output(config.output_path.as_ref())?;
    match config.format {
        Format::Jsonl => write_jsonl(&mut out, &records, failure.as_ref())?,
        Format::Csv => write_csv(&mut out, &records, failure.as_ref())?,
    }
    out.flush()?;
    eprintln!("{}", summary_line(&records, failure.is_some()));
    Ok(ScanOutcome { records, failure })
}

fn write_jsonl(out: &mut dyn Write, records: &[RunRecord], failure: Option<&(usize, String)>) -> Result<()> {
    let header = serde_json::json!({
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "records": records.len(),
    });
    writeln!(out, "{header}")?;
    for rec in records {
        serde_json::to_writer(&mut *out, rec)?;
        out.write_all(b"\n")?;
    }
    if let Some((index, error)) = failure {
        let sentinel = serde_json::json!({ "FAILED": { "grid_index": index, "error": error } });
        writeln!(out, "{sentinel}")?;
    }
    Ok(())
}

fn write_csv(out: &mut dyn Write, records: &[RunRecord], failure: Option<&(usize, String)>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for rec in records {
        let (rho0, drho0) = match rec.init {
            Init::State { rho0, drho0 } | Init::Tip { rho0, drho0, .. } => (rho0, drho0),
            Init::Separatrix { rho0, drho0, .. } => (rho0, drho0),
        };
        w.serialize(CsvRow {
            grid_index: rec.grid_index,
            n: rec.params.n(),
            lambda: rec.params.lambda(),
            rbar: rec.params.rbar(),
            rho0,
            drho0,
            branch: rec.classification.branch.as_str(),
            asymptote_c: rec.asymptote_c,
            suite_pass: rec.suite_pass,
            termination_fwd: rec.termination_fwd.as_str(),
            termination_bwd: rec.termination_bwd.as_str(),
        })?;
    }
    if let Some((index, error)) = failure {
        w.write_record(["FAILED", &index.to_string(), error])?;
    }
    w.flush()?;
    Ok(())
}

fn summary_line(records: &[RunRecord], failed: bool) -> String {
    let mut branches: BTreeMap<&str, usize> = BTreeMap::new();
    let mut suites: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for rec in records {
        *branches.entry(rec.classification.branch.as_str()).or_default() += 1;
        for (name, &ok) in &rec.report_summary {
            let e = suites.entry(name.as_str()).or_default();
            e.0 += usize::from(ok);
            e.1 += 1;
        }
    }
    let b: Vec<String> = branches.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let s: Vec<String> = suites.iter().map(|(k, (p, t))| format!("{k} {p}/{t}")).collect();
    format!(
        "records {}{}; branches: {}; suites passed: {}",
        records.len(),
        if failed { " (FAILED)" } else { "" },
        b.join(" "),
        s.join(", ")
    )
}
