//! Bessel functions of the first kind for real, non-negative order, and the
//! root search for the Robin characteristic equation
//! `D_rho * lambda * J'_zeta(lambda rho_c) + k_f * J_zeta(lambda rho_c) = 0`.
//!
//! `J_nu(x)` is evaluated by its power series for `x < 2` and by Steed's
//! method otherwise: the continued fraction for `J'_nu / J_nu`, downward
//! recurrence to an order `|mu| <= 1/2`, and the complex continued fraction
//! for `(J'_mu + i Y'_mu) / (J_mu + i Y_mu)` which fixes the normalization
//! through the Wronskian.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Switch from the power series to Steed's method at this argument.
const SERIES_LIMIT: f64 = 2.0;
/// Below this argument the asymptotic expansion is not attempted.
const HANKEL_MIN_X: f64 = 25.0;
const HANKEL_MAX_TERM: f64 = 100.0;
const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = 1e-30;
const MAX_ITER: usize = 200_000;

/// Order of a Bessel function. Always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::BesselDomain { order: nu, x: 0.0 })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `J_nu(x)` for `nu >= 0`, `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    check_argument(order, x)?;
    let value = j(order.0, x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::BesselNoConvergence { order: order.0, x })
    }
}

/// `J'_nu(x)`, via `J'_0 = -J_1` and `J'_nu = (J_{nu-1} - J_{nu+1}) / 2` for
/// `nu >= 1`. For `0 < nu < 1` the equivalent form `(nu/x) J_nu - J_{nu+1}`
/// is used, since the lower neighbour would have negative order.
pub fn bessel_j_prime(order: BesselOrder, x: f64) -> Result<f64> {
    check_argument(order, x)?;
    let nu = order.0;
    if x == 0.0 && nu > 0.0 && nu < 1.0 {
        return Err(Error::SingularDerivative { order: nu });
    }
    let value = j_prime(nu, x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::BesselNoConvergence { order: nu, x })
    }
}

fn check_argument(order: BesselOrder, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::BesselDomain { order: order.0, x })
    }
}

/// Unchecked `J_nu(x)`; callers guarantee `nu >= 0`, `x >= 0`.
pub(crate) fn j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        series(nu, x)
    } else if x >= HANKEL_MIN_X {
        hankel(nu, x).unwrap_or_else(|| steed(nu, x))
    } else {
        steed(nu, x)
    }
}

/// Unchecked `J'_nu(x)`. Returns `+inf` at `x = 0` for `0 < nu < 1`.
pub(crate) fn j_prime(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 1.0 {
            0.5
        } else if nu > 0.0 && nu < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    if nu == 0.0 {
        -j(1.0, x)
    } else if nu >= 1.0 {
        0.5 * (j(nu - 1.0, x) - j(nu + 1.0, x))
    } else {
        nu / x * j(nu, x) - j(nu + 1.0, x)
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (nu + k));
        sum += term;
        if term.abs() <= EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel's asymptotic expansion. Returns `None` unless the terms fall below
/// `EPS` before they start to grow; past `k > nu - 1/2` the truncation error
/// is bounded by the first omitted term. Large intermediate terms would
/// cancel and cost accuracy, so those are rejected too.
fn hankel(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut converged = false;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) * inv8x / k as f64;
        if (k as f64) > nu + 0.5 && next.abs() > term.abs() {
            break;
        }
        term = next;
        if term.abs() > HANKEL_MAX_TERM {
            return None;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if (k as f64) > nu + 0.5 && term.abs() <= 0.5 * EPS * (p.abs() + q.abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    Some((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
}

fn steed(nu: f64, x: f64) -> f64 {
    let nl = (nu - x + 1.5).floor().max(0.0) as usize;
    let mu = nu - nl as f64;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: h = J'_nu / J_nu, modified Lentz.
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() <= EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return f64::NAN;
    }

    // Unnormalized downward recurrence from nu to mu.
    let mut jl = isign * FPMIN;
    let mut jpl = h * jl;
    let jl_nu = jl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let tmp = fact * jl + jpl;
        fact -= xi;
        jpl = fact * tmp - jl;
        jl = tmp;
    }
    if jl == 0.0 {
        jl = EPS;
    }
    let f = jpl / jl;

    // CF2: p + iq, Steed's algorithm in complex arithmetic.
    let mut a = 0.25 - mu * mu;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut tmp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = tmp;
    let mut converged = false;
    for i in 2..MAX_ITER {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        tmp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = tmp;
        if (dlr - 1.0).abs() + dli.abs() <= EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return f64::NAN;
    }

    let gam = (p - f) / q;
    let j_mu = (w / ((p - f) * gam + q)).sqrt().copysign(jl);
    jl_nu * (j_mu / jl)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(z)` for `z >= 0.5` (Lanczos, g = 7).
pub(crate) fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z >= 0.5);
    let z = z - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Scan step in units of `lambda * rho_c`. Finer than the asymptotic root
/// spacing `pi` so that no bracket holds two roots.
const SCAN_STEP: f64 = PI / 4.0;

/// The `m_max` smallest strictly positive roots `lambda` (1/m) of
/// `g(lambda) = D_rho lambda J'_zeta(lambda rho_c) + k_f J_zeta(lambda rho_c)`.
///
/// `lambda = 0` is never returned, even when it is a root (`zeta = 0`,
/// `k_f = 0`); the constant mode is the caller's business.
pub fn find_robin_roots(
    zeta: BesselOrder,
    rho_c: f64,
    d_rho: f64,
    k_f: f64,
    m_max: usize,
) -> Result<Vec<f64>> {
    if !(rho_c.is_finite() && rho_c > 0.0) {
        return Err(Error::invalid("rho_c", format!("must be > 0, got {rho_c}")));
    }
    if !(d_rho.is_finite() && d_rho > 0.0) {
        return Err(Error::invalid("d_rho", format!("must be > 0, got {d_rho}")));
    }
    if !(k_f.is_finite() && k_f >= 0.0) {
        return Err(Error::invalid("k_f", format!("must be >= 0, got {k_f}")));
    }
    if m_max == 0 {
        return Err(Error::invalid("m_max", "must be >= 1"));
    }
    let nu = zeta.value();
    let biot = k_f * rho_c / d_rho;
    // g(lambda) = (D_rho / rho_c) * h(lambda rho_c)
    let h = |x: f64| x * j_prime(nu, x) + biot * j(nu, x);

    // Every root exceeds the order: J'_nu and J_nu have no zeros in (0, nu].
    let start = (0.5 * nu).max(1e-6);
    // McMahon: the m-th zero of J'_nu sits near (m + nu/2 - 3/4) pi, and the
    // Robin roots lie below the Dirichlet ones at (m + nu/2 - 1/4) pi.
    let bound = (m_max as f64 + 10.0 + 0.5 * nu) * PI;

    let mut roots = Vec::with_capacity(m_max);
    let mut lo = start;
    let mut h_lo = h(lo);
    if h_lo == 0.0 || !h_lo.is_finite() {
        return Err(Error::RootCheck {
            order: nu,
            reason: format!("characteristic function vanishes at scan start {start:e}"),
        });
    }
    while roots.len() < m_max && lo < bound {
        let hi = lo + SCAN_STEP;
        let h_hi = h(hi);
        if h_hi == 0.0 {
            check_residual(&h, nu, lo, hi, hi)?;
            roots.push(hi);
            // Step off the exact root so the next bracket starts with a sign.
            lo = hi + 1e-3 * SCAN_STEP;
            h_lo = h(lo);
            continue;
        }
        if h_lo.signum() != h_hi.signum() {
            let root = bisect(&h, lo, hi, h_lo);
            check_residual(&h, nu, lo, hi, root)?;
            roots.push(root);
        }
        lo = hi;
        h_lo = h_hi;
    }
    if roots.len() < m_max {
        return Err(Error::RootBracket {
            order: nu,
            wanted: m_max,
            found: roots.len(),
            bound,
        });
    }

    // g must alternate in sign across consecutive roots.
    let mut prev_sign = h(0.5 * (start + roots[0])).signum();
    for pair in roots.windows(2) {
        let sign = h(0.5 * (pair[0] + pair[1])).signum();
        if sign == prev_sign {
            return Err(Error::RootCheck {
                order: nu,
                reason: format!(
                    "no sign change between roots {:.12} and {:.12}",
                    pair[0], pair[1]
                ),
            });
        }
        prev_sign = sign;
    }

    Ok(roots.into_iter().map(|x| x / rho_c).collect())
}

fn bisect(h: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut h_lo: f64) -> f64 {
    // Interval shrinks below 1e-13 in lambda*rho_c, well inside the 1e-10 contract.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let h_mid = h(mid);
        if h_mid == 0.0 {
            return mid;
        }
        if h_mid.signum() == h_lo.signum() {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_residual(h: &impl Fn(f64) -> f64, nu: f64, lo: f64, hi: f64, root: f64) -> Result<()> {
    let scale = (0..=8)
        .map(|k| h(lo + (hi - lo) * k as f64 / 8.0).abs())
        .fold(0.0, f64::max);
    let residual = h(root).abs();
    if residual <= 1e-8 * scale {
        Ok(())
    } else {
        Err(Error::RootCheck {
            order: nu,
            reason: format!("residual {residual:e} at {root:.12} exceeds 1e-8 of {scale:e}"),
        })
    }
}
