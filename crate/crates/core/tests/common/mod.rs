//! Oracles shared by the integration tests. They are deliberately written
//! differently from the library code they check.

#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// `J_nu(x)` from its power series, summed with compensation. Accurate to
/// about 1e-13 relative for `x <= 12`.
pub fn j_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let h = 0.5 * x;
    let mut term = h.powf(nu) / gamma(nu + 1.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 0..400 {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        let kf = k as f64;
        term *= -h * h / ((kf + 1.0) * (kf + 1.0 + nu));
        if term.abs() < 1e-18 * sum.abs() && kf > h {
            break;
        }
    }
    sum
}

/// Composite Simpson rule with `panels` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `J_nu(x)` from Schlaefli's integral. Good to about 1e-12 absolute for
/// `x <= 200`.
pub fn j_integral(nu: f64, x: f64) -> f64 {
    let first = simpson(|t| (nu * t - x * t.sin()).cos(), 0.0, PI, 200_000) / PI;
    if nu.fract() == 0.0 {
        return first;
    }
    let t_max = (40.0 / x).asinh().max(1.0) + 1.0;
    let tail = simpson(|t| (-x * t.sinh() - nu * t).exp(), 0.0, t_max, 200_000);
    first - (nu * PI).sin() / PI * tail
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) <= 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-15 * b.abs() {
            break;
        }
    }
    0.5 * (a + b)
}

/// Free-space 2D heat kernel with first-order decay.
pub fn free_space(d: f64, dist: f64, k_d: f64, t: f64) -> f64 {
    (-dist * dist / (4.0 * d * t)).exp() / (4.0 * PI * d * t) * (-k_d * t).exp()
}
