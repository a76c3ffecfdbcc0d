//! CSV rendering of grid estimates.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::estimator::Estimate;

pub const CSV_HEADER: &str = "x0,t,mean_re,mean_im,stderr_re,stderr_im,exact_re,exact_im,n_paths,n_blowups";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub x0: f64,
    pub t: f64,
    pub estimate: Estimate,
    pub exact: Option<Complex64>,
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_row(row: &Row) -> String {
    let e = &row.estimate;
    let (exact_re, exact_im) = row
        .exact
        .map_or((String::new(), String::new()), |u| (format_float(u.re), format_float(u.im)));
    [
        format_float(row.x0),
        format_float(row.t),
        format_float(e.mean.re),
        format_float(e.mean.im),
        format_float(e.stderr.re),
        format_float(e.stderr.im),
        exact_re,
        exact_im,
        e.n_paths.to_string(),
        e.n_blowups.to_string(),
    ]
    .join(",")
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", format_row(row));
    }
    out
}
