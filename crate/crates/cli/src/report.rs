//! CSV tables written by `compare` and `bounds`, with readers for both.
//! Floats are written in Rust's shortest round-trip form, so reading and
//! rewriting a table reproduces it byte for byte.

use std::io::{Read, Write};

use crate::{usage, CliError};

const SUMMARY_PREFIX: &str = "# max_abs_dev,";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub x_ode: f64,
    pub x_empirical_mean: f64,
    pub abs_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub max_abs_dev: f64,
}

impl CompareTable {
    pub fn from_rows(rows: Vec<CompareRow>) -> Self {
        let max_abs_dev = rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
        Self { rows, max_abs_dev }
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    usage(format!("writing output: {e}"))
}

fn parse_err(e: impl std::fmt::Display) -> CliError {
    usage(format!("malformed CSV: {e}"))
}

/// Header `t,x_ode,x_empirical_mean,abs_dev`, then a trailing
/// `# max_abs_dev,<value>` line.
pub fn write_compare_csv<W: Write>(table: &CompareTable, mut out: W) -> Result<(), CliError> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["t", "x_ode", "x_empirical_mean", "abs_dev"]).map_err(io_err)?;
        for r in &table.rows {
            w.write_record([r.t, r.x_ode, r.x_empirical_mean, r.abs_dev].map(|v| v.to_string()))
                .map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    writeln!(out, "{SUMMARY_PREFIX}{}", table.max_abs_dev).map_err(io_err)
}

pub fn read_compare_csv<R: Read>(mut input: R) -> Result<CompareTable, CliError> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(parse_err)?;
    let max_abs_dev = text
        .lines()
        .find_map(|l| l.strip_prefix(SUMMARY_PREFIX))
        .ok_or_else(|| parse_err("missing max_abs_dev summary"))?
        .parse::<f64>()
        .map_err(parse_err)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = r.headers().map_err(parse_err)?;
    if headers != vec!["t", "x_ode", "x_empirical_mean", "abs_dev"] {
        return Err(parse_err(format!("unexpected header {headers:?}")));
    }
    let rows = r
        .records()
        .map(|rec| {
            let rec = rec.map_err(parse_err)?;
            let f = |i: usize| -> Result<f64, CliError> { rec[i].parse::<f64>().map_err(parse_err) };
            Ok(CompareRow {
                t: f(0)?,
                x_ode: f(1)?,
                x_empirical_mean: f(2)?,
                abs_dev: f(3)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(CompareTable { rows, max_abs_dev })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    pub k: usize,
    pub l: usize,
    pub x0: f64,
    pub h: f64,
    /// Bound from the piecewise lower bound on the drift.
    pub bound_closed_form: f64,
    /// Bound `x0 (h - 1) / p(h x0)`.
    pub bound_generic: f64,
    /// `None` when the ODE did not reach `h x0` within the search horizon.
    pub ode_time: Option<f64>,
}

impl BoundsRow {
    /// `ode_time <= bound_generic <= bound_closed_form`, each with `slack`.
    pub fn is_ordered(&self, slack: f64) -> bool {
        let Some(t) = self.ode_time else {
            return false;
        };
        t <= self.bound_generic + slack && self.bound_generic <= self.bound_closed_form + slack
    }
}

pub const BOUNDS_HEADER: [&str; 7] = ["k", "l", "x0", "h", "bound_closed_form", "bound_generic", "ode_time"];

pub fn write_bounds_csv<W: Write>(rows: &[BoundsRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUNDS_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.l.to_string(),
            r.x0.to_string(),
            r.h.to_string(),
            r.bound_closed_form.to_string(),
            r.bound_generic.to_string(),
            r.ode_time.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_bounds_csv<R: Read>(input: R) -> Result<Vec<BoundsRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(parse_err)?;
    if headers != BOUNDS_HEADER.to_vec() {
        return Err(parse_err(format!("unexpected header {headers:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(parse_err)?;
            let f = |i: usize| -> Result<f64, CliError> { rec[i].parse::<f64>().map_err(parse_err) };
            let u = |i: usize| -> Result<usize, CliError> { rec[i].parse::<usize>().map_err(parse_err) };
            Ok(BoundsRow {
                k: u(0)?,
                l: u(1)?,
                x0: f(2)?,
                h: f(3)?,
                bound_closed_form: f(4)?,
                bound_generic: f(5)?,
                ode_time: if rec[6].is_empty() { None } else { Some(f(6)?) },
            })
        })
        .collect()
}
