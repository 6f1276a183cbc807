//! Evaluation of the eigenfunction series for the concentration Green's
//! function
//!
//! ```text
//! C(rho, theta, t) = sum_{n,m} L_n / N_nm J_zeta(lambda rho_tx) J_zeta(lambda rho)
//!                    cos(n (theta - theta_tx)) exp(-(D_rho lambda^2 + k_d)(t - t0))
//! ```
//!
//! for `t >= t0` and zero before the release.

use rayon::prelude::*;

use crate::channel::modes::{build_mode_table, ModeTable, Truncation};
use crate::channel::observables::{ConcentrationSeries, GridField, Source};
use crate::channel::params::ReceiverSpec;
use crate::error::{Error, Result};
use crate::numerics::bessel;
use crate::numerics::quad::gauss_legendre;

/// Radial and angular node counts of the receiver-disc rule.
const DISC_RADIAL_NODES: usize = 8;
const DISC_ANGULAR_NODES: usize = 16;

/// Relative slack on `rho <= rho_c` for points that sit on the wall.
const RADIUS_SLACK: f64 = 1e-12;

fn spatial_factor(table: &ModeTable, k: usize, rho: f64, dtheta: f64) -> f64 {
    let amp = table.amplitudes()[k];
    if amp == 0.0 {
        return 0.0;
    }
    let mode = &table.modes()[k];
    let radial = bessel::j(mode.zeta, mode.lambda * rho);
    amp * radial * (mode.n as f64 * dtheta).cos()
}

fn check_point(table: &ModeTable, rho: f64, theta: f64) -> Result<()> {
    let rho_c = table.params().rho_c;
    if !(rho.is_finite() && rho >= 0.0 && rho <= rho_c * (1.0 + RADIUS_SLACK)) {
        return Err(Error::invalid(
            "rho",
            format!("{rho:e} m is outside [0, {rho_c:e}]"),
        ));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite"));
    }
    Ok(())
}

/// Truncated series value at `(rho, theta)` and time `t`.
pub fn gfc_eval(table: &ModeTable, rho: f64, theta: f64, t: f64) -> Result<f64> {
    check_point(table, rho, theta)?;
    let params = table.params();
    if t < params.t0 {
        return Ok(0.0);
    }
    let elapsed = t - params.t0;
    let rho = rho.min(params.rho_c);
    let dtheta = theta - params.tx_theta;
    let mut sum = 0.0;
    for (k, &rate) in table.rates().iter().enumerate() {
        let decay = (-rate * elapsed).exp();
        if decay == 0.0 {
            continue;
        }
        sum += spatial_factor(table, k, rho, dtheta) * decay;
    }
    Ok(sum)
}

/// Spatial part of the series at a fixed observation site, so that time
/// sampling only costs one exponential per mode.
#[derive(Debug, Clone)]
pub struct Probe {
    factors: Vec<f64>,
    rates: Vec<f64>,
    t0: f64,
}

impl Probe {
    pub fn point(table: &ModeTable, rho: f64, theta: f64) -> Result<Probe> {
        check_point(table, rho, theta)?;
        let rho = rho.min(table.params().rho_c);
        let dtheta = theta - table.params().tx_theta;
        let factors = (0..table.len())
            .map(|k| spatial_factor(table, k, rho, dtheta))
            .collect();
        Ok(Probe::from_factors(table, factors))
    }

    /// Mean over a receiver disc lying wholly inside the channel.
    pub fn disc(table: &ModeTable, rx: &ReceiverSpec) -> Result<Probe> {
        let rho_c = table.params().rho_c;
        if !rx.fits_inside(rho_c * (1.0 + RADIUS_SLACK)) {
            return Err(Error::ReceiverOutsideDomain {
                rho: rx.rho,
                radius: rx.radius,
                rho_c,
            });
        }
        Probe::clipped_disc(table, rx)
    }

    /// Mean over the part of a receiver disc that lies inside the channel.
    pub fn clipped_disc(table: &ModeTable, rx: &ReceiverSpec) -> Result<Probe> {
        if !(rx.radius.is_finite() && rx.radius >= 0.0) {
            return Err(Error::invalid("radius", "must be finite and >= 0"));
        }
        check_point(table, rx.rho, rx.theta)?;
        if rx.radius == 0.0 {
            return Probe::point(table, rx.rho, rx.theta);
        }
        let rho_c = table.params().rho_c;
        let (cx, cy) = (rx.rho * rx.theta.cos(), rx.rho * rx.theta.sin());
        let (xr, wr) = gauss_legendre(DISC_RADIAL_NODES);
        let (xa, wa) = gauss_legendre(DISC_ANGULAR_NODES);
        let tx_theta = table.params().tx_theta;

        let mut factors = vec![0.0; table.len()];
        let mut total_weight = 0.0;
        for (&ua, &va) in xa.iter().zip(&wa) {
            let phi = std::f64::consts::PI * (ua + 1.0);
            let (dx, dy) = (phi.cos(), phi.sin());
            // Distance to the wall along this direction.
            let b = cx * dx + cy * dy;
            let c = cx * cx + cy * cy - rho_c * rho_c;
            let to_wall = -b + (b * b - c).max(0.0).sqrt();
            let reach = rx.radius.min(to_wall.max(0.0));
            for (&ur, &vr) in xr.iter().zip(&wr) {
                let s = 0.5 * reach * (ur + 1.0);
                let w = std::f64::consts::PI * va * 0.5 * reach * vr * s;
                let (px, py) = (cx + s * dx, cy + s * dy);
                let rho = px.hypot(py).min(rho_c);
                let dtheta = py.atan2(px) - tx_theta;
                for (k, f) in factors.iter_mut().enumerate() {
                    *f += w * spatial_factor(table, k, rho, dtheta);
                }
                total_weight += w;
            }
        }
        for f in &mut factors {
            *f /= total_weight;
        }
        Ok(Probe::from_factors(table, factors))
    }

    fn from_factors(table: &ModeTable, factors: Vec<f64>) -> Probe {
        Probe {
            factors,
            rates: table.rates().to_vec(),
            t0: table.params().t0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.t0 {
            return 0.0;
        }
        let elapsed = t - self.t0;
        let mut sum = 0.0;
        for (f, &rate) in self.factors.iter().zip(&self.rates) {
            let decay = (-rate * elapsed).exp();
            if decay == 0.0 {
                continue;
            }
            sum += f * decay;
        }
        sum
    }

    pub fn series(&self, times: &[f64], receiver: ReceiverSpec) -> Result<ConcentrationSeries> {
        let values = times.iter().map(|&t| self.eval(t)).collect();
        ConcentrationSeries::new(times.to_vec(), values, None, Source::Analytical, receiver)
    }
}

/// Series value at a point for every time in `times`.
pub fn gfc_time_series(
    table: &ModeTable,
    rho: f64,
    theta: f64,
    times: &[f64],
) -> Result<ConcentrationSeries> {
    Probe::point(table, rho, theta)?.series(times, ReceiverSpec::point(rho, theta))
}

/// Mean of the series over a receiver disc at time `t`.
pub fn rx_disc_average(table: &ModeTable, rx: &ReceiverSpec, t: f64) -> Result<f64> {
    Ok(Probe::disc(table, rx)?.eval(t))
}

/// Disc-averaged concentration over a time grid. Receivers reaching past
/// the wall are averaged over their clipped area, matching the particle
/// simulator's normalization.
pub fn rx_disc_series(
    table: &ModeTable,
    rx: &ReceiverSpec,
    times: &[f64],
) -> Result<ConcentrationSeries> {
    Probe::clipped_disc(table, rx)?.series(times, *rx)
}

/// Series sampled at pixel centers of a square grid covering the disk.
pub fn gfc_field(table: &ModeTable, t: f64, pixel: f64, extent: f64) -> Result<GridField> {
    let rho_c = table.params().rho_c;
    if !(pixel.is_finite() && pixel > 0.0) {
        return Err(Error::invalid("pixel", format!("must be > 0, got {pixel}")));
    }
    if !(extent >= 2.0 * rho_c) {
        return Err(Error::invalid(
            "extent",
            format!("must cover the disk (>= {:e} m)", 2.0 * rho_c),
        ));
    }
    let mut field = GridField::centered(pixel, extent, rho_c, t);
    let nx = field.nx;
    let rows: Vec<Vec<f64>> = (0..field.ny)
        .into_par_iter()
        .map(|iy| {
            (0..nx)
                .map(|ix| {
                    if !field.mask[iy * nx + ix] {
                        return Ok(0.0);
                    }
                    let (x, y) = field.center(ix, iy);
                    gfc_eval(table, x.hypot(y), y.atan2(x), t)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    field.values = rows.into_iter().flatten().collect();
    Ok(field)
}

/// Outcome of the truncation doubling search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub converged: bool,
    /// Smallest truncation in the sequence whose successor changed the probes by less than `tol`.
    pub truncation: Truncation,
    pub max_rel_change: f64,
}

/// Largest truncation the doubling search will build.
pub const TRUNCATION_CAP: Truncation = Truncation::new(32, 320);

/// Grow the truncation (`n_max += 2`, `m_max *= 2`) until the largest
/// relative change at the probe points, over times `t_min * {1, 2, 4, 8, 16}`,
/// drops below `tol`.
pub fn truncation_converged(
    table: &ModeTable,
    probes: &[(f64, f64)],
    t_min: f64,
    tol: f64,
) -> Result<TruncationReport> {
    let params = *table.params();
    if !(t_min > params.t0) {
        return Err(Error::invalid(
            "t_min",
            "must be later than the release time",
        ));
    }
    if probes.is_empty() {
        return Err(Error::invalid("probes", "need at least one probe point"));
    }
    let mut current = table.truncation();
    if tol.is_infinite() && tol > 0.0 {
        return Ok(TruncationReport {
            converged: true,
            truncation: current,
            max_rel_change: 0.0,
        });
    }
    let times: Vec<f64> = (0..5).map(|k| t_min * f64::from(1u32 << k)).collect();
    // Changes far below the uniform plateau are not meaningful.
    let floor = 1e-9 / (std::f64::consts::PI * params.rho_c * params.rho_c);

    let sample = |table: &ModeTable| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(probes.len() * times.len());
        for &(rho, theta) in probes {
            let probe = Probe::point(table, rho, theta)?;
            out.extend(times.iter().map(|&t| probe.eval(t)));
        }
        Ok(out)
    };

    let mut current_values = sample(table)?;
    let mut last_change = f64::INFINITY;
    loop {
        let next = Truncation::new(
            (current.n_max + 2).min(TRUNCATION_CAP.n_max),
            (current.m_max * 2).min(TRUNCATION_CAP.m_max),
        );
        if next == current {
            return Err(Error::TruncationNotConverged {
                n_max: current.n_max,
                m_max: current.m_max,
                last_change,
            });
        }
        let next_table = build_mode_table(&params, next)?;
        let next_values = sample(&next_table)?;
        let change = current_values
            .iter()
            .zip(&next_values)
            .map(|(a, b)| (b - a).abs() / b.abs().max(floor))
            .fold(0.0, f64::max);
        if change < tol {
            return Ok(TruncationReport {
                converged: true,
                truncation: current,
                max_rel_change: change,
            });
        }
        last_change = change;
        current = next;
        current_values = next_values;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::params::ChannelParams;
    use std::f64::consts::PI;

    fn table(params: ChannelParams, truncation: Truncation) -> ModeTable {
        build_mode_table(&params, truncation).unwrap()
    }

    #[test]
    fn zero_before_release() {
        let p = ChannelParams {
            t0: 1.0,
            ..ChannelParams::default()
        };
        let t = table(p, Truncation::paper());
        assert_eq!(gfc_eval(&t, 20e-6, 0.0, 0.5).unwrap(), 0.0);
        let s = gfc_time_series(&t, 20e-6, 0.0, &[0.1, 0.9, 0.999, 1.5]).unwrap();
        assert_eq!(&s.values[..3], &[0.0, 0.0, 0.0]);
        assert!(s.values[3] > 0.0);
    }

    #[test]
    fn single_sample_series_matches_point_eval() {
        let t = table(
            ChannelParams::anisotropic().with_tx(50e-6, 0.0),
            Truncation::new(4, 10),
        );
        let s = gfc_time_series(&t, 30e-6, 0.2, &[1.3]).unwrap();
        assert_eq!(s.values[0], gfc_eval(&t, 30e-6, 0.2, 1.3).unwrap());
    }

    #[test]
    fn long_time_plateau() {
        let p = ChannelParams::default().with_k_d(0.0).with_tx(30e-6, 1.0);
        let t = table(p, Truncation::default());
        // D lambda_min^2 t = 0.05 * 3.83^2 * 300 > 40
        let v = gfc_eval(&t, 70e-6, -2.0, 300.0).unwrap();
        let uniform = 1.0 / (PI * 1e-8);
        assert!((v / uniform - 1.0).abs() < 1e-12, "{v}");
        assert!((uniform - 3.1831e7).abs() < 1e3);
    }

    #[test]
    fn rejects_points_outside() {
        let t = table(ChannelParams::default(), Truncation::paper());
        assert!(gfc_eval(&t, 101e-6, 0.0, 1.0).is_err());
        assert!(gfc_eval(&t, -1e-6, 0.0, 1.0).is_err());
        assert!(gfc_eval(&t, 100e-6, 0.0, 1.0).is_ok());
    }

    #[test]
    fn azimuthal_mirror_symmetry() {
        let t = table(
            ChannelParams::anisotropic().with_tx(60e-6, 0.0),
            Truncation::new(8, 20),
        );
        for &phi in &[0.1, 0.7, 2.0, 3.0] {
            let a = gfc_eval(&t, 45e-6, phi, 2.0).unwrap();
            let b = gfc_eval(&t, 45e-6, -phi, 2.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn depends_only_on_angular_offset() {
        let base = ChannelParams::anisotropic();
        let a = table(base.with_tx(60e-6, 0.0), Truncation::new(6, 12));
        let b = table(base.with_tx(60e-6, 1.1), Truncation::new(6, 12));
        let va = gfc_eval(&a, 40e-6, 0.4, 1.5).unwrap();
        let vb = gfc_eval(&b, 40e-6, 1.5, 1.5).unwrap();
        assert!((va - vb).abs() <= 1e-12 * va.abs());
    }

    #[test]
    fn disc_average_limits() {
        let t = table(
            ChannelParams::default().with_tx(20e-6, 0.0),
            Truncation::default(),
        );
        let point = gfc_eval(&t, 50e-6, 0.3, 2.0).unwrap();
        let tiny = rx_disc_average(&t, &ReceiverSpec::new(50e-6, 0.3, 1e-9), 2.0).unwrap();
        assert!((tiny / point - 1.0).abs() < 1e-6);

        let flat = table(
            ChannelParams::default().with_tx(20e-6, 0.0),
            Truncation::new(0, 1),
        );
        // Only the constant mode survives this long.
        let v = rx_disc_average(&flat, &ReceiverSpec::new(50e-6, 0.3, 1e-6), 2000.0).unwrap();
        let expect = 1.0 / (PI * 1e-8) * (-0.3f64 * 2000.0).exp();
        assert!((v / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn disc_crossing_wall_is_rejected_but_clipped_series_works() {
        let t = table(ChannelParams::default(), Truncation::paper());
        let rx = ReceiverSpec::new(99.5e-6, 0.0, 1e-6);
        assert!(matches!(
            rx_disc_average(&t, &rx, 1.0),
            Err(Error::ReceiverOutsideDomain { .. })
        ));
        let s = rx_disc_series(&t, &rx, &[1.0, 2.0]).unwrap();
        assert!(s.values.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn field_rejects_bad_geometry() {
        let t = table(ChannelParams::default(), Truncation::paper());
        assert!(gfc_field(&t, 1.0, 0.0, 200e-6).is_err());
        assert!(gfc_field(&t, 1.0, 20e-6, 150e-6).is_err());
        let f = gfc_field(&t, 1.0, 20e-6, 200e-6).unwrap();
        assert_eq!((f.nx, f.ny), (10, 10));
        assert!(f.values.iter().zip(&f.mask).all(|(v, m)| *m || *v == 0.0));
    }

    #[test]
    fn infinite_tolerance_keeps_truncation() {
        let t = table(ChannelParams::default(), Truncation::new(3, 7));
        let r = truncation_converged(&t, &[(20e-6, 0.0)], 1.0, f64::INFINITY).unwrap();
        assert!(r.converged);
        assert_eq!(r.truncation, Truncation::new(3, 7));
    }
}
