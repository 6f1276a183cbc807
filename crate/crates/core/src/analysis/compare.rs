//! Comparison of analytical and simulated outputs, plus the conservation
//! and anisotropy checks built on the series solution.

use std::f64::consts::PI;

use crate::channel::gfc::Probe;
use crate::channel::modes::{build_mode_table, ModeTable, Truncation};
use crate::channel::observables::ConcentrationSeries;
use crate::channel::params::ChannelParams;
use crate::error::{Error, Result};
use crate::numerics::bessel;
use crate::numerics::quad::composite_gauss_legendre;

/// Agreement metrics of a test series against a reference series.
///
/// By convention the reference is the analytical solution, and every
/// normalization uses the reference peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// `|peak(test) - peak(ref)| / peak(ref)`, global maxima.
    pub peak_rel_err: f64,
    /// Interpolated peak time of the test minus that of the reference (s).
    pub peak_time_offset: f64,
    /// Root-mean-square difference over the reference peak.
    pub nrmse: f64,
    pub n_samples_compared: usize,
    /// Share of samples with the reference inside `test +- 3 stderr`.
    pub within_ci_fraction: f64,
    /// Whether the test series was interpolated onto the reference times.
    pub resampled: bool,
}

impl ComparisonReport {
    pub fn passes(&self, max_nrmse: f64, max_peak_rel_err: f64) -> bool {
        self.nrmse <= max_nrmse && self.peak_rel_err <= max_peak_rel_err
    }
}

/// Compare `test` against `reference`. When the time grids differ, `test`
/// (and its stderr) is linearly interpolated onto the reference times that
/// fall inside its own time span.
pub fn compare_series(
    reference: &ConcentrationSeries,
    test: &ConcentrationSeries,
) -> Result<ComparisonReport> {
    if reference.is_empty() || test.is_empty() {
        return Err(Error::EmptySeries);
    }
    let same_grid = reference.times == test.times;
    let (times, ref_values, test_values, stderr) = if same_grid {
        (
            reference.times.clone(),
            reference.values.clone(),
            test.values.clone(),
            test.stderr.clone(),
        )
    } else {
        let (lo, hi) = (test.times[0], test.times[test.len() - 1]);
        let keep: Vec<usize> = (0..reference.len())
            .filter(|&i| reference.times[i] >= lo && reference.times[i] <= hi)
            .collect();
        if keep.is_empty() {
            return Err(Error::NoOverlap);
        }
        let times: Vec<f64> = keep.iter().map(|&i| reference.times[i]).collect();
        let values = keep.iter().map(|&i| reference.values[i]).collect();
        let test_values = times
            .iter()
            .map(|&t| interpolate(&test.times, &test.values, t))
            .collect();
        let stderr = test.stderr.as_ref().map(|e| {
            times
                .iter()
                .map(|&t| interpolate(&test.times, e, t))
                .collect()
        });
        (times, values, test_values, stderr)
    };

    let (ref_peak, ref_time) = peak(&times, &ref_values);
    let (test_peak, test_time) = peak(&times, &test_values);
    if !(ref_peak > 0.0) {
        return Err(Error::invalid(
            "reference",
            "peak must be positive to normalize errors",
        ));
    }

    let n = times.len();
    let mut sq = 0.0;
    let mut within = 0;
    for i in 0..n {
        let diff = test_values[i] - ref_values[i];
        sq += diff * diff;
        let band = 3.0 * stderr.as_ref().map_or(0.0, |e| e[i]);
        if diff.abs() <= band {
            within += 1;
        }
    }

    Ok(ComparisonReport {
        peak_rel_err: (test_peak - ref_peak).abs() / ref_peak,
        peak_time_offset: test_time - ref_time,
        nrmse: (sq / n as f64).sqrt() / ref_peak,
        n_samples_compared: n,
        within_ci_fraction: within as f64 / n as f64,
        resampled: !same_grid,
    })
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x < t);
    if k == 0 {
        return values[0];
    }
    if k == times.len() {
        return values[k - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// Global maximum value and its time, the time refined by the vertex of the
/// parabola through the maximum and its two neighbours.
fn peak(times: &[f64], values: &[f64]) -> (f64, f64) {
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[k] {
            k = i;
        }
    }
    let value = values[k];
    if k == 0 || k + 1 == values.len() {
        return (value, times[k]);
    }
    let (x0, x1, x2) = (times[k - 1], times[k], times[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature < 0.0) {
        return (value, x1);
    }
    // y = y1 + d01 (x - x1) + curvature (x - x0)(x - x1), stationary at:
    let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    (value, vertex.clamp(x0, x2))
}

/// Integrated concentration at one time against the decay law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassCheck {
    pub t: f64,
    pub mass: f64,
    /// `exp(-k_d (t - t0))`, zero before the release.
    pub expected: f64,
    /// `|mass - expected| / expected`, or the absolute error when nothing is expected.
    pub rel_err: f64,
}

/// Integrate the series over the disk at each time in `times`.
///
/// The rule is a tensor product of composite Gauss-Legendre in `rho` and the
/// trapezoid rule in `theta`; the angular rule has more nodes than twice the
/// largest azimuthal index, so it integrates every `cos(n theta)` exactly and
/// the double sum factors mode by mode.
pub fn mass_check_gfc(table: &ModeTable, times: &[f64]) -> Result<Vec<MassCheck>> {
    let params = table.params();
    let rho_c = params.rho_c;
    let n_theta = 2 * table.truncation().n_max + 8;
    let max_x = table
        .modes()
        .iter()
        .map(|m| m.lambda * rho_c)
        .fold(0.0, f64::max);
    let panels = (max_x / PI).ceil() as usize + 4;
    let (nodes, weights) = composite_gauss_legendre(0.0, rho_c, panels, 20);
    let angles: Vec<f64> = (0..n_theta)
        .map(|i| 2.0 * PI * i as f64 / n_theta as f64 - params.tx_theta)
        .collect();
    let dtheta = 2.0 * PI / n_theta as f64;

    let mode_integrals: Vec<f64> = table
        .modes()
        .iter()
        .zip(table.amplitudes())
        .map(|(mode, &amp)| {
            if amp == 0.0 {
                return 0.0;
            }
            let radial: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&r, &w)| w * r * bessel::j(mode.zeta, mode.lambda * r))
                .sum();
            let angular: f64 = angles
                .iter()
                .map(|&a| dtheta * (mode.n as f64 * a).cos())
                .sum();
            amp * radial * angular
        })
        .collect();

    Ok(times
        .iter()
        .map(|&t| {
            let elapsed = t - params.t0;
            let (mass, expected) = if elapsed < 0.0 {
                (0.0, 0.0)
            } else {
                let mass = mode_integrals
                    .iter()
                    .zip(table.rates())
                    .map(|(&i, &rate)| i * (-rate * elapsed).exp())
                    .sum();
                (mass, (-params.k_d * elapsed).exp())
            };
            let rel_err = if expected > 0.0 {
                (mass - expected).abs() / expected
            } else {
                (mass - expected).abs()
            };
            MassCheck {
                t,
                mass,
                expected,
                rel_err,
            }
        })
        .collect())
}

/// Time window and accuracy of the peak search in [`anisotropy_effect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakScan {
    /// Earliest time searched (s); also sets the truncation.
    pub t_min: f64,
    pub t_max: f64,
    /// Points of the coarse logarithmic scan before refinement.
    pub n_grid: usize,
    /// Truncation tolerance passed to [`Truncation::for_time`].
    pub tol: f64,
}

impl Default for PeakScan {
    fn default() -> Self {
        PeakScan {
            t_min: 0.05,
            t_max: 20.0,
            n_grid: 400,
            tol: 1e-3,
        }
    }
}

/// Peak of the point response of one transmitter/receiver pair in both channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyRow {
    pub tx_rho: f64,
    pub rx_rho: f64,
    pub iso_peak: f64,
    pub iso_peak_time: f64,
    pub aniso_peak: f64,
    pub aniso_peak_time: f64,
    /// `aniso_peak / iso_peak`.
    pub ratio: f64,
}

/// Peak point concentrations for every `(tx, rx)` pair, transmitters and
/// receivers on the ray `theta = 0`. A center transmitter is always included.
pub fn anisotropy_effect(
    params_iso: &ChannelParams,
    params_aniso: &ChannelParams,
    tx_list: &[f64],
    rx_list: &[f64],
    scan: &PeakScan,
) -> Result<Vec<AnisotropyRow>> {
    if !(scan.t_min > 0.0 && scan.t_max > scan.t_min && scan.n_grid >= 3) {
        return Err(Error::invalid(
            "scan",
            "need 0 < t_min < t_max and at least 3 grid points",
        ));
    }
    let mut txs = vec![0.0];
    txs.extend(tx_list.iter().copied().filter(|&t| t != 0.0));

    let mut rows = Vec::new();
    for &tx in &txs {
        let iso = params_iso.with_tx(tx, 0.0);
        let aniso = params_aniso.with_tx(tx, 0.0);
        let iso_table = build_mode_table(&iso, truncation_for(&iso, scan)?)?;
        let aniso_table = build_mode_table(&aniso, truncation_for(&aniso, scan)?)?;
        for &rx in rx_list {
            let (iso_peak_time, iso_peak) =
                peak_of(&Probe::point(&iso_table, rx, 0.0)?, iso.t0, scan);
            let (aniso_peak_time, aniso_peak) =
                peak_of(&Probe::point(&aniso_table, rx, 0.0)?, aniso.t0, scan);
            rows.push(AnisotropyRow {
                tx_rho: tx,
                rx_rho: rx,
                iso_peak,
                iso_peak_time,
                aniso_peak,
                aniso_peak_time,
                ratio: aniso_peak / iso_peak,
            });
        }
    }
    Ok(rows)
}

/// With the transmitter at the center only the `n = 0` modes contribute, so
/// the angular truncation is dropped.
fn truncation_for(params: &ChannelParams, scan: &PeakScan) -> Result<Truncation> {
    let t = Truncation::for_time(params, scan.t_min, scan.tol)?;
    Ok(if params.tx_rho == 0.0 {
        Truncation::new(0, t.m_max)
    } else {
        t
    })
}

/// Largest value of `probe` on a logarithmic grid, refined by golden-section
/// search between the neighbouring grid points.
fn peak_of(probe: &Probe, t0: f64, scan: &PeakScan) -> (f64, f64) {
    let ratio = (scan.t_max / scan.t_min).powf(1.0 / (scan.n_grid - 1) as f64);
    let grid: Vec<f64> = (0..scan.n_grid)
        .map(|i| t0 + scan.t_min * ratio.powi(i as i32))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| probe.eval(t)).collect();
    let mut k = 0;
    for i in 1..values.len() {
        if values[i] > values[k] {
            k = i;
        }
    }
    let mut a = grid[k.saturating_sub(1)];
    let mut b = grid[(k + 1).min(grid.len() - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (probe.eval(c), probe.eval(d));
    for _ in 0..80 {
        if (b - a) <= 1e-10 * b {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = probe.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = probe.eval(d);
        }
    }
    let (mut best_t, mut best) = (grid[k], values[k]);
    for (t, v) in [(c, fc), (d, fd)] {
        if v > best {
            best = v;
            best_t = t;
        }
    }
    (best_t, best)
}
