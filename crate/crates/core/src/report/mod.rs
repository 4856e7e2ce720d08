//! Run outputs: results table, group-colored and assignment scatter plots,
//! thumbnail contact sheet, run log and the batch-effect test report.
//!
//! Everything except the log is a pure function of its inputs; files are
//! written to a temporary sibling and renamed into place.

mod log;
mod results;
mod sheet;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use log::{Level, LogEvent, RunLog};
pub use results::{read_results_csv, write_be_report, write_results_csv, ResultRow, ResultsLayout};
pub use sheet::render_contact_sheet;
pub use svg::{render_assignment_plot, render_embedding_plot, PALETTE};

/// Paths of everything a run produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOutputs {
    pub results_csv_path: PathBuf,
    pub embedding_plot_path: PathBuf,
    pub assignment_plot_path: PathBuf,
    pub contact_sheet_path: Option<PathBuf>,
    pub log_path: PathBuf,
    pub be_report_path: Option<PathBuf>,
}

impl RunOutputs {
    /// Every path the run claims to have written.
    pub fn all_paths(&self) -> Vec<&Path> {
        let mut paths = vec![
            self.results_csv_path.as_path(),
            self.embedding_plot_path.as_path(),
            self.assignment_plot_path.as_path(),
            self.log_path.as_path(),
        ];
        paths.extend(self.contact_sheet_path.as_deref());
        paths.extend(self.be_report_path.as_deref());
        paths
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let name = path
        .file_name()
        .ok_or_else(|| err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a file path")))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        err(e)
    })
}

/// Decimal text with 6 significant digits, trailing zeros trimmed; scientific
/// notation outside `[1e-5, 1e6)`.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // `{:e}` rounds correctly, so the exponent accounts for carries like 9.999995 -> 1e1.
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value a reader recovers from [`format_sig6`].
pub fn quantize_sig6(v: f64) -> f64 {
    format_sig6(v).parse().unwrap_or(v)
}

/// `target` expressed relative to directory `base` when both are absolute
/// or both relative; otherwise `target` unchanged.
pub(crate) fn relative_to(target: &Path, base: &Path) -> PathBuf {
    use std::path::Component;
    if target.is_absolute() != base.is_absolute() {
        return target.to_path_buf();
    }
    let t: Vec<Component> = target.components().filter(|c| *c != Component::CurDir).collect();
    let b: Vec<Component> = base.components().filter(|c| *c != Component::CurDir).collect();
    if b.contains(&Component::ParentDir) {
        return target.to_path_buf();
    }
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &t[common..] {
        out.push(c.as_os_str());
    }
    out
}

pub(crate) fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}
