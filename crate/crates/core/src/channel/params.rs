use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical description of the disk channel. All quantities SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Radial diffusion coefficient (m^2/s).
    pub d_rho: f64,
    /// Azimuthal diffusion coefficient (m^2/s).
    pub d_theta: f64,
    /// Disk radius (m).
    pub rho_c: f64,
    /// First-order degradation rate (1/s).
    pub k_d: f64,
    /// Boundary reaction rate; 0 is a reflecting wall.
    pub k_f: f64,
    /// Transmitter radius (m).
    pub tx_rho: f64,
    /// Transmitter angle (rad), kept in `[-pi, pi)`.
    pub tx_theta: f64,
    /// Release time (s).
    pub t0: f64,
}

/// Radial diffusion coefficient used throughout the reference scenarios.
pub const D_RHO_DEFAULT: f64 = 5e-10;
/// Reduced azimuthal coefficient of the anisotropic scenario.
pub const D_THETA_ANISOTROPIC: f64 = 5e-11;
pub const RHO_C_DEFAULT: f64 = 100e-6;
pub const K_D_DEFAULT: f64 = 0.3;
pub const RX_RADIUS_DEFAULT: f64 = 1e-6;
pub const DT_DEFAULT: f64 = 1e-2;

impl Default for ChannelParams {
    /// Isotropic reference channel: 100 um reflecting disk, center release.
    fn default() -> Self {
        ChannelParams {
            d_rho: D_RHO_DEFAULT,
            d_theta: D_RHO_DEFAULT,
            rho_c: RHO_C_DEFAULT,
            k_d: K_D_DEFAULT,
            k_f: 0.0,
            tx_rho: 0.0,
            tx_theta: 0.0,
            t0: 0.0,
        }
    }
}

impl ChannelParams {
    /// Same channel with `D_theta = D_rho / 10`.
    pub fn anisotropic() -> Self {
        ChannelParams {
            d_theta: D_THETA_ANISOTROPIC,
            ..Self::default()
        }
    }

    pub fn with_tx(mut self, rho: f64, theta: f64) -> Self {
        self.tx_rho = rho;
        self.tx_theta = wrap_angle(theta);
        self
    }

    pub fn with_d_theta(mut self, d_theta: f64) -> Self {
        self.d_theta = d_theta;
        self
    }

    pub fn with_k_d(mut self, k_d: f64) -> Self {
        self.k_d = k_d;
        self
    }

    pub fn with_rho_c(mut self, rho_c: f64) -> Self {
        self.rho_c = rho_c;
        self
    }

    /// `sqrt(D_theta / D_rho)`; the Bessel order of azimuthal mode `n` is `n` times this.
    pub fn order_scale(&self) -> f64 {
        (self.d_theta / self.d_rho).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        positive("d_rho", self.d_rho)?;
        positive("d_theta", self.d_theta)?;
        positive("rho_c", self.rho_c)?;
        non_negative("k_d", self.k_d)?;
        non_negative("k_f", self.k_f)?;
        if !self.t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        non_negative("tx_rho", self.tx_rho)?;
        if self.tx_rho > self.rho_c {
            return Err(Error::invalid(
                "tx_rho",
                format!(
                    "{:e} m lies outside the disk of radius {:e} m",
                    self.tx_rho, self.rho_c
                ),
            ));
        }
        if !self.tx_theta.is_finite() {
            return Err(Error::invalid("tx_theta", "must be finite"));
        }
        Ok(())
    }

    /// Validated copy with `tx_theta` wrapped into `[-pi, pi)`.
    pub fn normalized(self) -> Result<Self> {
        self.validate()?;
        Ok(ChannelParams {
            tx_theta: wrap_angle(self.tx_theta),
            ..self
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and >= 0, got {v}"),
        ))
    }
}

/// Wrap an angle into `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi after rounding.
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A circular observation region, passive and transparent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    pub rho: f64,
    pub theta: f64,
    pub radius: f64,
}

impl ReceiverSpec {
    pub fn new(rho: f64, theta: f64, radius: f64) -> Self {
        ReceiverSpec { rho, theta, radius }
    }

    /// A zero-radius receiver, used to tag point evaluations.
    pub fn point(rho: f64, theta: f64) -> Self {
        ReceiverSpec {
            rho,
            theta,
            radius: 0.0,
        }
    }

    pub fn fits_inside(&self, rho_c: f64) -> bool {
        self.rho + self.radius <= rho_c
    }

    /// Area of the receiver disc intersected with the channel disk.
    pub fn clipped_area(&self, rho_c: f64) -> f64 {
        circle_overlap(self.rho, self.radius, rho_c)
    }

    /// Whether the point `(rho, theta)` lies in the receiver disc.
    #[inline]
    pub fn contains(&self, rho: f64, theta: f64) -> bool {
        if (rho - self.rho).abs() > self.radius {
            return false;
        }
        let d2 =
            rho * rho + self.rho * self.rho - 2.0 * rho * self.rho * (theta - self.theta).cos();
        d2 <= self.radius * self.radius
    }
}

/// Overlap area of a disc of radius `r` whose center is `d` from the center
/// of a disc of radius `big_r`.
fn circle_overlap(d: f64, r: f64, big_r: f64) -> f64 {
    if d + r <= big_r {
        PI * r * r
    } else if d >= big_r + r {
        0.0
    } else if d + big_r <= r {
        PI * big_r * big_r
    } else {
        let a1 = ((d * d + r * r - big_r * big_r) / (2.0 * d * r))
            .clamp(-1.0, 1.0)
            .acos();
        let a2 = ((d * d + big_r * big_r - r * r) / (2.0 * d * big_r))
            .clamp(-1.0, 1.0)
            .acos();
        let k = (-d + r + big_r) * (d + r - big_r) * (d - r + big_r) * (d + r + big_r);
        r * r * a1 + big_r * big_r * a2 - 0.5 * k.max(0.0).sqrt()
    }
}
