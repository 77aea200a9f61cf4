//! CSV serialization. Numbers are written in scientific notation with 17
//! significant digits so that every `f64` survives a text round trip.

use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub const SERIES_HEADER: &str = "time,dt_used,cfl_used,energy,dissipation,budget_residual,\
l2_u,l2_v,l2_te,l2_qe,l4_u,l4_v,h1_u,h1_v,h1_te,h1_qe,qplus_l2_sq_over_eps,max_qe,grad_u_linf";

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn series_row(r: &DiagnosticsRecord) -> String {
    let mut cols: Vec<String> = [
        r.time,
        r.dt_used,
        r.cfl_used,
        r.energy,
        r.dissipation,
        r.budget_residual,
        r.l2_u,
        r.l2_v,
        r.l2_te,
        r.l2_qe,
        r.l4_u,
        r.l4_v,
        r.h1_u,
        r.h1_v,
        r.h1_te,
        r.h1_qe,
    ]
    .iter()
    .map(|&v| fmt_num(v))
    .collect();
    cols.push(r.qplus_l2_sq_over_eps.map(fmt_num).unwrap_or_default());
    cols.push(fmt_num(r.max_qe));
    cols.push(fmt_num(r.grad_u_linf));
    cols.join(",")
}

/// In-memory `series.csv`, one row per sampled record.
#[derive(Clone, Debug, Default)]
pub struct Series {
    rows: Vec<String>,
}

impl Series {
    pub fn push(&mut self, r: &DiagnosticsRecord) {
        self.rows.push(series_row(r));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(SERIES_HEADER.len() + 1 + self.rows.len() * 400);
        out.push_str(SERIES_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
