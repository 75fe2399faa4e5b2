//! Ledger CSV files, JSON sidecars and optional SVG charts. Every file is
//! written to a temporary sibling first and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::RunLedger;

/// One CSV row per interaction step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerRow {
    pub k: usize,
    pub j: usize,
    pub s: f64,
    pub beta: f64,
    #[serde(rename = "dS")]
    pub ds: f64,
    #[serde(rename = "dQ")]
    pub dq: f64,
    pub sigma: f64,
    pub balance_residual: f64,
    pub dist_to_invariant: f64,
    #[serde(rename = "X_norm")]
    pub x_norm: f64,
}

pub const LEDGER_COLUMNS: [&str; 10] = [
    "k",
    "j",
    "s",
    "beta",
    "dS",
    "dQ",
    "sigma",
    "balance_residual",
    "dist_to_invariant",
    "X_norm",
];

pub fn ledger_rows(ledger: &RunLedger) -> Vec<LedgerRow> {
    ledger
        .steps
        .iter()
        .map(|r| LedgerRow {
            k: r.k,
            j: r.j,
            s: r.s,
            beta: r.beta,
            ds: r.ds,
            dq: r.dq,
            sigma: r.sigma,
            balance_residual: r.balance_residual,
            dist_to_invariant: r.dist_to_invariant,
            x_norm: r.x_norm,
        })
        .collect()
}

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Precondition(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn ledger_csv_bytes(rows: &[LedgerRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(LEDGER_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_ledger_csv(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    write_atomic(path, &ledger_csv_bytes(rows)?)
}

pub fn read_ledger_csv(path: &Path) -> Result<Vec<LedgerRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != LEDGER_COLUMNS {
        return Err(Error::InvalidConfig(format!("unexpected ledger header {header:?}")));
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn ledger_stem(t: usize, lambda: f64) -> String {
    format!("ledger_T{t}_lambda{lambda}")
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Static line chart with one polyline per series.
pub fn line_chart_svg(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in finite() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let w = (hi - lo).abs().max(1e-12 * hi.abs().max(1.0));
        (lo - 0.05 * w, hi + 0.05 * w)
    };
    let ((x0, x1), (y0, y1)) = (pad(x0, x1), pad(y0, y1));

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 500)).into_drawing_area();
        let draw = |e: Box<dyn std::error::Error + '_>| Error::Precondition(format!("chart: {e}"));
        root.fill(&WHITE).map_err(|e| draw(Box::new(e)))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(|e| draw(Box::new(e)))?;
        chart
            .configure_mesh()
            .x_desc(x_label)
            .y_desc(y_label)
            .draw()
            .map_err(|e| draw(Box::new(e)))?;
        for (i, s) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(
                    s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()),
                    color.stroke_width(2),
                ))
                .map_err(|e| draw(Box::new(e)))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
        if series.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| draw(Box::new(e)))?;
        }
        root.present().map_err(|e| draw(Box::new(e)))?;
    }
    write_atomic(path, svg.as_bytes())
}

/// Per-block entropy production `Σ_j σ_{k,j}` against `k`.
pub fn block_sigma_series(rows: &[LedgerRow], label: String) -> Series {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        match points.last_mut() {
            Some(last) if last.0 == r.k as f64 => last.1 += r.sigma,
            _ => points.push((r.k as f64, r.sigma)),
        }
    }
    Series { label, points }
}
