//! Eigenmodes of the anisotropic diffusion operator on the disk.
//!
//! Mode `(n, m)` has azimuthal profile `cos(n (theta - theta_tx))` and radial
//! profile `J_zeta(lambda rho)` with `zeta = n sqrt(D_theta / D_rho)` and
//! `lambda` the `m`-th positive root of the Robin condition. With a
//! reflecting wall the constant mode `(n, m) = (0, 0)`, `lambda = 0`, is
//! included as well.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::channel::params::ChannelParams;
use crate::error::{Error, Result};
use crate::numerics::bessel::{self, BesselOrder};
use crate::numerics::quad::integrate_adaptive;

/// Series cut-offs: azimuthal indices `0..=n_max`, radial indices `1..=m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub n_max: usize,
    pub m_max: usize,
}

impl Truncation {
    pub const fn new(n_max: usize, m_max: usize) -> Self {
        Truncation { n_max, m_max }
    }

    /// The short series `n < 3`, `m < 5`.
    pub const fn paper() -> Self {
        Truncation::new(2, 4)
    }

    /// Truncation beyond which every omitted mode has decayed by at least
    /// `tol` relative to the constant mode once `t - t0 >= t_min`.
    ///
    /// Every root of order `zeta` exceeds `zeta`, so a mode is negligible
    /// when `lambda rho_c` exceeds `x_max = rho_c sqrt(ln(1/tol) / (D_rho t_min))`.
    /// That bounds the azimuthal index by `x_max / sqrt(D_theta / D_rho)` and
    /// the radial index by about `x_max / pi`.
    pub fn for_time(params: &ChannelParams, t_min: f64, tol: f64) -> Result<Self> {
        params.validate()?;
        if !(t_min.is_finite() && t_min > 0.0) {
            return Err(Error::invalid("t_min", format!("must be > 0, got {t_min}")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::invalid(
                "tol",
                format!("must lie in (0, 1), got {tol}"),
            ));
        }
        let x_max = params.rho_c * ((1.0 / tol).ln() / (params.d_rho * t_min)).sqrt();
        let n_max = (x_max / params.order_scale()).ceil() as usize;
        let m_max = (x_max / PI).ceil() as usize + 1;
        Ok(Truncation::new(n_max, m_max))
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::new(8, 40)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Azimuthal index.
    pub n: usize,
    /// Radial index; 0 only for the constant mode.
    pub m: usize,
    /// Bessel order.
    pub zeta: f64,
    /// Radial wavenumber (1/m).
    pub lambda: f64,
    /// `int_0^rho_c rho J_zeta(lambda rho)^2 d rho` (m^2).
    pub norm: f64,
    /// Fourier weight of the angular delta: `1/(2 pi)` for `n = 0`, else `1/pi`.
    pub weight: f64,
}

impl Mode {
    pub fn is_zero_mode(&self) -> bool {
        self.lambda == 0.0
    }
}

/// Immutable table of modes, sorted by `(n, m)`, together with the
/// per-mode source amplitude and decay rate for its channel.
#[derive(Debug, Clone)]
pub struct ModeTable {
    params: ChannelParams,
    truncation: Truncation,
    modes: Vec<Mode>,
    /// `L_n / N_nm * J_zeta(lambda rho_tx)`.
    amplitudes: Vec<f64>,
    /// `D_rho lambda^2 + k_d` (1/s).
    rates: Vec<f64>,
}

impl ModeTable {
    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn has_zero_mode(&self) -> bool {
        self.modes.iter().any(Mode::is_zero_mode)
    }

    pub(crate) fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub(crate) fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Copy of the table with the constant mode dropped. Only useful as a
    /// negative control: the result no longer conserves mass.
    pub fn without_zero_mode(&self) -> ModeTable {
        let keep: Vec<usize> = (0..self.modes.len())
            .filter(|&i| !self.modes[i].is_zero_mode())
            .collect();
        ModeTable {
            params: self.params,
            truncation: self.truncation,
            modes: keep.iter().map(|&i| self.modes[i]).collect(),
            amplitudes: keep.iter().map(|&i| self.amplitudes[i]).collect(),
            rates: keep.iter().map(|&i| self.rates[i]).collect(),
        }
    }

    /// Header `n,m,zeta,lambda_per_m,lambda_rho_c,norm_m2,L_n`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "n,m,zeta,lambda_per_m,lambda_rho_c,norm_m2,L_n")?;
        for mode in &self.modes {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e}",
                mode.n,
                mode.m,
                mode.zeta,
                mode.lambda,
                mode.lambda * self.params.rho_c,
                mode.norm,
                mode.weight
            )?;
        }
        Ok(())
    }
}

/// Build the mode table for `params` at the given truncation.
pub fn build_mode_table(params: &ChannelParams, truncation: Truncation) -> Result<ModeTable> {
    let params = params.normalized()?;
    if truncation.m_max == 0 {
        return Err(Error::invalid("m_max", "must be >= 1"));
    }
    let scale = params.order_scale();

    let per_order: Vec<Vec<Mode>> = (0..=truncation.n_max)
        .into_par_iter()
        .map(|n| modes_for_order(&params, n, n as f64 * scale, truncation.m_max))
        .collect::<Result<_>>()?;

    let mut modes = Vec::with_capacity(1 + (truncation.n_max + 1) * truncation.m_max);
    if params.k_f == 0.0 {
        modes.push(Mode {
            n: 0,
            m: 0,
            zeta: 0.0,
            lambda: 0.0,
            norm: 0.5 * params.rho_c * params.rho_c,
            weight: 0.5 / PI,
        });
    }
    modes.extend(per_order.into_iter().flatten());

    let amplitudes = modes
        .iter()
        .map(|mode| mode.weight / mode.norm * bessel::j(mode.zeta, mode.lambda * params.tx_rho))
        .collect();
    let rates = modes
        .iter()
        .map(|mode| params.d_rho * mode.lambda * mode.lambda + params.k_d)
        .collect();

    Ok(ModeTable {
        params,
        truncation,
        modes,
        amplitudes,
        rates,
    })
}

fn modes_for_order(params: &ChannelParams, n: usize, zeta: f64, m_max: usize) -> Result<Vec<Mode>> {
    let order = BesselOrder::new(zeta)?;
    let weight = if n == 0 { 0.5 / PI } else { 1.0 / PI };
    let roots = bessel::find_robin_roots(order, params.rho_c, params.d_rho, params.k_f, m_max)?;
    roots
        .into_iter()
        .enumerate()
        .map(|(i, lambda)| {
            Ok(Mode {
                n,
                m: i + 1,
                zeta,
                lambda,
                norm: mode_norm(order, lambda, params.rho_c)?,
                weight,
            })
        })
        .collect()
}

/// Relative tolerance of the norm quadrature.
const NORM_QUAD_TOL: f64 = 1e-12;
/// Allowed disagreement between quadrature and the closed form.
const NORM_CHECK_TOL: f64 = 1e-8;

/// `N = int_0^rho_c rho J_zeta(lambda rho)^2 d rho` by adaptive quadrature,
/// checked against
/// `(rho_c^2 / 2) [J'_zeta(x)^2 + (1 - zeta^2 / x^2) J_zeta(x)^2]`, `x = lambda rho_c`.
pub fn mode_norm(zeta: BesselOrder, lambda: f64, rho_c: f64) -> Result<f64> {
    let nu = zeta.value();
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(
            "lambda",
            format!("must be >= 0, got {lambda}"),
        ));
    }
    if !(rho_c.is_finite() && rho_c > 0.0) {
        return Err(Error::invalid("rho_c", format!("must be > 0, got {rho_c}")));
    }
    let half_area = 0.5 * rho_c * rho_c;
    if lambda == 0.0 {
        return if nu == 0.0 {
            Ok(half_area)
        } else {
            Err(Error::invalid(
                "lambda",
                "lambda = 0 gives a vanishing mode for zeta > 0",
            ))
        };
    }

    let x = lambda * rho_c;
    // One panel per period of J^2.
    let panels = (x / PI).ceil() as usize + 1;
    let integral = integrate_adaptive(
        |s| {
            let v = bessel::j(nu, x * s);
            s * v * v
        },
        0.0,
        1.0,
        panels,
        NORM_QUAD_TOL,
        0.0,
    );
    let quadrature = rho_c * rho_c * integral.value;

    let jv = bessel::j(nu, x);
    let jp = bessel::j_prime(nu, x);
    let closed_form = half_area * (jp * jp + (1.0 - nu * nu / (x * x)) * jv * jv);

    if !integral.converged
        || !(quadrature > 0.0)
        || (quadrature - closed_form).abs() > NORM_CHECK_TOL * closed_form.abs()
    {
        return Err(Error::NormMismatch {
            order: nu,
            x,
            quadrature,
            closed_form,
        });
    }
    Ok(quadrature)
}
