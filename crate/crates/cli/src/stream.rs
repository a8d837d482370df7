//! One JSON object per sample, then a summary line.

use std::io::Write;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use yamabe_core::geometry::scalar_curvature_direct;
use yamabe_core::integrator::{EventKind, Termination, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub r: f64,
    pub rho: f64,
    pub drho: f64,
    pub ddrho: f64,
    #[serde(rename = "R")]
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventLine {
    pub kind: EventKind,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub events: Vec<EventLine>,
    pub termination_fwd: Termination,
    pub termination_bwd: Termination,
}

pub fn write_stream(out: &mut dyn Write, tr: &Trajectory) -> Result<()> {
    let lambda = tr.params().lambda();
    for s in tr.samples() {
        let line = SampleLine {
            r: s.r,
            rho: s.rho,
            drho: s.drho,
            ddrho: s.ddrho,
            curvature: scalar_curvature_direct(s.drho, lambda),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    let summary = Summary {
        events: tr
            .events()
            .iter()
            .map(|e| EventLine { kind: e.kind, r: e.r })
            .collect(),
        termination_fwd: tr.termination_fwd(),
        termination_bwd: tr.termination_bwd(),
    };
    serde_json::to_writer(&mut *out, &summary)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
