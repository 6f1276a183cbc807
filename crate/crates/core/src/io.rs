//! CSV and PGM artifacts.
//!
//! Floats are written with `{:e}`, which round-trips exactly and does not
//! depend on locale or thread count.

use std::io::Write;

use crate::analysis::ComparisonReport;
use crate::channel::{ConcentrationSeries, GridField, ReceiverSpec, Source};
use crate::error::{Error, Result};

pub const IMPULSE_HEADER: &str = "t_s,concentration_per_m2";
pub const PBS_HEADER: &str = "t_s,mean_concentration_per_m2,stderr_per_m2";
pub const COMPARE_HEADER: &str =
    "receiver,rho_um,theta_rad,radius_um,peak_rel_err,peak_time_offset_s,\
nrmse,n_samples_compared,within_ci_fraction,resampled,pass";

/// Largest PGM gray level.
pub const PGM_MAXVAL: u32 = 65535;

/// Write an analytical series, clipping negative values at zero.
/// Returns the number of clipped samples.
pub fn write_impulse_csv(
    mut out: impl Write,
    series: &ConcentrationSeries,
) -> std::io::Result<usize> {
    let (values, clipped) = series.clipped_values();
    writeln!(out, "{IMPULSE_HEADER}")?;
    for (t, v) in series.times.iter().zip(&values) {
        writeln!(out, "{t:e},{v:e}")?;
    }
    Ok(clipped)
}

/// Write a Monte Carlo series. A missing stderr is written as `nan`.
pub fn write_pbs_csv(mut out: impl Write, series: &ConcentrationSeries) -> std::io::Result<()> {
    writeln!(out, "{PBS_HEADER}")?;
    for (i, (t, v)) in series.times.iter().zip(&series.values).enumerate() {
        let se = series.stderr.as_ref().map_or(f64::NAN, |s| s[i]);
        writeln!(out, "{t:e},{v:e},{se:e}")?;
    }
    Ok(())
}

/// Read a series written by [`write_impulse_csv`] or [`write_pbs_csv`].
///
/// The first column is time and the second the value. A third column, if
/// present, is taken as the standard error and the series is tagged as
/// Monte Carlo output.
pub fn read_series_csv(text: &str, receiver: ReceiverSpec) -> Result<ConcentrationSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Csv("empty CSV".into()))?;
    let n_cols = header.split(',').count();
    if !(2..=3).contains(&n_cols) {
        return Err(Error::Csv(format!(
            "expected 2 or 3 columns, header is `{header}`"
        )));
    }
    let (mut times, mut values, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != n_cols {
            return Err(Error::Csv(format!(
                "line {}: expected {n_cols} columns",
                i + 1
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Csv(format!("line {}: malformed number `{s}`", i + 1)))
        };
        times.push(parse(cells[0])?);
        values.push(parse(cells[1])?);
        if n_cols == 3 {
            stderr.push(parse(cells[2])?);
        }
    }
    if n_cols == 3 {
        ConcentrationSeries::new(times, values, Some(stderr), Source::Pbs, receiver)
    } else {
        ConcentrationSeries::new(times, values, None, Source::Analytical, receiver)
    }
}

/// Field as CSV: a header row of pixel-center x coordinates (m), then one
/// row per pixel row, in increasing y, led by its y coordinate.
pub fn write_field_csv(mut out: impl Write, field: &GridField, scale: f64) -> std::io::Result<()> {
    write!(out, "y_m")?;
    for ix in 0..field.nx {
        write!(out, ",{:e}", field.center(ix, 0).0)?;
    }
    writeln!(out)?;
    for iy in 0..field.ny {
        write!(out, "{:e}", field.center(0, iy).1)?;
        for ix in 0..field.nx {
            write!(out, ",{:e}", field.get(ix, iy) * scale)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Field as a plain 16-bit PGM with the top row at the largest y.
///
/// Gray levels are `round(value / max * 65535)` with negative values shown
/// as black. Returns the frame maximum, which maps to 65535; an all-zero
/// frame is written black with maximum 0.
pub fn write_pgm(mut out: impl Write, field: &GridField, scale: f64) -> std::io::Result<f64> {
    let max = field.max_value().max(0.0) * scale;
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", field.nx, field.ny)?;
    writeln!(out, "{PGM_MAXVAL}")?;
    for iy in (0..field.ny).rev() {
        let row: Vec<String> = (0..field.nx)
            .map(|ix| {
                let v = field.get(ix, iy) * scale;
                let level = if max > 0.0 {
                    (v / max * PGM_MAXVAL as f64)
                        .round()
                        .clamp(0.0, PGM_MAXVAL as f64)
                } else {
                    0.0
                };
                (level as u32).to_string()
            })
            .collect();
        // Plain PGM asks for lines of at most 70 characters.
        let mut line = String::new();
        for cell in row {
            if !line.is_empty() && line.len() + 1 + cell.len() > 70 {
                writeln!(out, "{line}")?;
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&cell);
        }
        writeln!(out, "{line}")?;
    }
    Ok(max)
}

/// Sidecar text for a PGM: the physical value of gray level 65535 and the
/// frame geometry.
pub fn write_pgm_scale(
    mut out: impl Write,
    field: &GridField,
    max: f64,
    units: &str,
) -> std::io::Result<()> {
    writeln!(out, "maxval = {PGM_MAXVAL}")?;
    writeln!(out, "value_at_maxval = {max:e}")?;
    writeln!(out, "units = {units}")?;
    writeln!(out, "t_s = {:e}", field.t)?;
    writeln!(out, "pixel_m = {:e}", field.pixel)?;
    writeln!(out, "origin_x_m = {:e}", field.origin.0)?;
    writeln!(out, "origin_y_m = {:e}", field.origin.1)?;
    writeln!(out, "top_row = max_y")?;
    Ok(())
}

/// One CSV row per compared receiver.
pub fn write_compare_csv(
    mut out: impl Write,
    rows: &[(ReceiverSpec, ComparisonReport)],
    max_nrmse: f64,
    max_peak_rel_err: f64,
) -> std::io::Result<()> {
    writeln!(out, "{COMPARE_HEADER}")?;
    for (i, (rx, r)) in rows.iter().enumerate() {
        writeln!(
            out,
            "{i},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{},{}",
            rx.rho * 1e6,
            rx.theta,
            rx.radius * 1e6,
            r.peak_rel_err,
            r.peak_time_offset,
            r.nrmse,
            r.n_samples_compared,
            r.within_ci_fraction,
            r.resampled,
            r.passes(max_nrmse, max_peak_rel_err)
        )?;
    }
    Ok(())
}
