//! Deterministic CSV emission and parsing for the sweep outputs.
//!
//! Columns are fixed, reals are printed with 6 significant digits, and a
//! given row set always serializes to identical bytes.

use std::io::Write;
use std::path::Path;

use super::sweep::{CostRow, UtilityRow};
use super::BenchError;

pub const UTILITY_HEADER: &str = "dataset,mechanism,epsilon,mean_error,std_error,runs";
pub const COST_HEADER: &str = "d,a,online_bytes,offline_bytes,rounds,wall_seconds";

/// Format with 6 significant digits (C's `%.6g` behavior: trailing zeros
/// trimmed, scientific notation outside `[1e-4, 1e6)`).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp10 = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp10) {
        let s = format!("{:.5e}", x);
        // normalize "1.20000e-5" -> "1.2e-05" style trimming
        match s.split_once('e') {
            Some((mantissa, exp)) => {
                let m = mantissa.trim_end_matches('0').trim_end_matches('.');
                format!("{m}e{exp}")
            }
            None => s,
        }
    } else {
        let decimals = (5 - exp10).max(0) as usize;
        let s = format!("{x:.decimals$}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), BenchError> {
    let io_err = |source| BenchError::Io { path: path.to_path_buf(), source };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    for line in lines {
        writeln!(file, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Write utility rows (header always present; empty rows give a
/// header-only file).
pub fn emit_utility_csv(rows: &[UtilityRow], path: &Path) -> Result<(), BenchError> {
    let mut lines = vec![UTILITY_HEADER.to_string()];
    for r in rows {
        lines.push(format!(
            "{},{},{},{},{},{}",
            r.dataset,
            r.mechanism,
            fmt_sig(r.epsilon),
            fmt_sig(r.mean_error),
            fmt_sig(r.std_error),
            r.runs
        ));
    }
    write_lines(path, &lines)
}

pub fn emit_cost_csv(rows: &[CostRow], path: &Path) -> Result<(), BenchError> {
    let mut lines = vec![COST_HEADER.to_string()];
    for r in rows {
        lines.push(format!(
            "{},{},{},{},{},{}",
            r.d,
            r.a,
            r.online_bytes,
            r.offline_bytes,
            r.rounds,
            fmt_sig(r.wall_seconds)
        ));
    }
    write_lines(path, &lines)
}

pub fn parse_utility_csv(path: &Path) -> Result<Vec<UtilityRow>, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
    let fail = |line: usize, message: String| BenchError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != UTILITY_HEADER {
                return Err(fail(1, format!("expected header `{UTILITY_HEADER}`")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(fail(lineno + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64, BenchError> {
            fields[i]
                .parse()
                .map_err(|_| fail(lineno + 1, format!("bad number `{}`", fields[i])))
        };
        rows.push(UtilityRow {
            dataset: fields[0].to_string(),
            mechanism: fields[1].to_string(),
            epsilon: num(2)?,
            mean_error: num(3)?,
            std_error: num(4)?,
            runs: fields[5]
                .parse()
                .map_err(|_| fail(lineno + 1, format!("bad runs `{}`", fields[5])))?,
        });
    }
    Ok(rows)
}

pub fn parse_cost_csv(path: &Path) -> Result<Vec<CostRow>, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
    let fail = |line: usize, message: String| BenchError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != COST_HEADER {
                return Err(fail(1, format!("expected header `{COST_HEADER}`")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(fail(lineno + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let int = |i: usize| -> Result<u64, BenchError> {
            fields[i]
                .parse()
                .map_err(|_| fail(lineno + 1, format!("bad integer `{}`", fields[i])))
        };
        rows.push(CostRow {
            d: int(0)? as usize,
            a: int(1)? as u32,
            online_bytes: int(2)?,
            offline_bytes: int(3)?,
            rounds: int(4)?,
            wall_seconds: fields[5]
                .parse()
                .map_err(|_| fail(lineno + 1, format!("bad number `{}`", fields[5])))?,
        });
    }
    Ok(rows)
}
