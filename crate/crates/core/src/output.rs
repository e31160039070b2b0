//! CSV and text outputs. Numbers use `{:.16e}` so every double survives a
//! round trip; files are written to a temporary sibling and renamed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::diagnostics::{EnergyRecord, SweepKind, SweepReport};
use crate::error::Result;
use crate::filter::{deconvolution_gain, filter_gain, helmholtz_multiplier, FilterParams};
use crate::grid::WaveGrid;

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn energy_csv(records: &[EnergyRecord]) -> String {
    let mut out = String::from(EnergyRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `parameter,error` rows followed by a `slope,<v>` or `ratio,<v>` footer
/// (`exact` when every error vanished).
pub fn sweep_csv(report: &SweepReport) -> String {
    let (param, footer) = match report.kind {
        SweepKind::Alpha => ("alpha", "slope"),
        SweepKind::Order => ("n_deconv", "ratio"),
    };
    let mut out = format!("{param},error\n");
    for (p, e) in report.parameters.iter().zip(&report.errors) {
        let _ = writeln!(out, "{},{}", num(*p), num(*e));
    }
    let fitted = report.fitted.map(num).unwrap_or_else(|| "exact".into());
    let _ = writeln!(out, "{footer},{fitted}");
    out
}

/// One row per distinct `|k|` on the grid, excluding zero.
pub fn multiplier_table(grid: &WaveGrid, p: &FilterParams) -> String {
    let mut a2: Vec<i64> = (0..grid.len()).map(|s| grid.a2(s)).filter(|&v| v > 0).collect();
    a2.sort_unstable();
    a2.dedup();
    let mut out = String::from("k_mag,g_multiplier,filter_multiplier,hn_multiplier\n");
    for v in a2 {
        let k = grid.k_unit() * (v as f64).sqrt();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(k),
            num(helmholtz_multiplier(k, p)),
            num(filter_gain(k, p)),
            num(deconvolution_gain(k, p))
        );
    }
    out
}
