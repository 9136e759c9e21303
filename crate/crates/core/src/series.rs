//! CSV output of trajectories: one row per output time, 15 significant
//! digits, LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use crate::four_mode::TrajectoryRecord;
use crate::physical_map::TrapSolution;
use crate::{Error, Result};

pub const HEADER: [&str; 16] = [
    "t", "n0", "n1", "n2", "n3", "j01", "j12", "j23", "E0", "E3", "J01", "J23", "Gamma", "r1", "r2", "r3",
];

pub const TRAP_HEADER: [&str; 4] = ["V0", "V3", "delta0", "delta3"];

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        let _ = write!(out, "{v:.14e}");
    }
    out.push('\n');
}

/// Renders the record; `trap` (one entry per sample) appends the trap
/// columns.
pub fn render(record: &TrajectoryRecord, trap: Option<&[TrapSolution]>) -> String {
    let mut out = HEADER.join(",");
    if trap.is_some() {
        out.push(',');
        out.push_str(&TRAP_HEADER.join(","));
    }
    out.push('\n');
    for (k, s) in record.samples.iter().enumerate() {
        let o = &s.obs;
        let p = &s.params;
        let r = &s.residuals;
        let mut row = vec![
            s.t, o.n[0], o.n[1], o.n[2], o.n[3], o.j01, o.j12, o.j23, p.e0, p.e3, p.j01, p.j23, s.gamma, r.r1,
            r.r2, r.r3,
        ];
        if let Some(sol) = trap.and_then(|t| t.get(k)) {
            row.extend([sol.v0, sol.v3, sol.delta0, sol.delta3]);
        }
        push_row(&mut out, row);
    }
    out
}

/// Trap parameters over time: `t, V0, V3, delta0, delta3`.
pub fn render_trap(times: &[f64], trap: &[TrapSolution]) -> String {
    let mut out = format!("t,{}\n", TRAP_HEADER.join(","));
    for (t, s) in times.iter().zip(trap) {
        push_row(&mut out, [*t, s.v0, s.v3, s.delta0, s.delta3]);
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_series(record: &TrajectoryRecord, trap: Option<&[TrapSolution]>, path: &Path) -> Result<()> {
    write_text(path, &render(record, trap))
}

/// Parsed CSV: header names and numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn parse_table(text: &str) -> Option<Table> {
    let mut lines = text.lines();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().ok()).collect::<Option<Vec<f64>>>())
        .collect::<Option<_>>()?;
    Some(Table { header, rows })
}
