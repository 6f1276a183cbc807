//! How many modes the series needs as the earliest evaluation time shrinks.
//!
//! Run with `cargo run --release --example truncation`.

use biofilm_mc::channel::{build_mode_table, gfc_eval, truncation_converged, ChannelParams, Truncation};

fn main() -> biofilm_mc::Result<()> {
    let iso = ChannelParams::default().with_tx(50e-6, 0.0);
    let aniso = ChannelParams::anisotropic().with_tx(50e-6, 0.0);
    println!("  t_min (s)   isotropic (n, m)   anisotropic (n, m)");
    for t_min in [1.0, 0.2, 0.05, 0.01] {
        let a = Truncation::for_time(&iso, t_min, 1e-4)?;
        let b = Truncation::for_time(&aniso, t_min, 1e-4)?;
        println!("{:>11}{:>12}, {:<6}{:>12}, {}", t_min, a.n_max, a.m_max, b.n_max, b.m_max);
    }

    println!("short series against a converged one at rho = 30 um, t = 0.2 s");
    let fine = build_mode_table(&iso, Truncation::for_time(&iso, 0.2, 1e-10)?)?;
    let exact = gfc_eval(&fine, 30e-6, 0.0, 0.2)?;
    for t in [Truncation::paper(), Truncation::default(), Truncation::new(32, 40)] {
        let table = build_mode_table(&iso, t)?;
        let c = gfc_eval(&table, 30e-6, 0.0, 0.2)?;
        println!(
            "  n_max {:>2}, m_max {:>3}: {c:.6e} (rel {:.1e})",
            t.n_max,
            t.m_max,
            (c - exact).abs() / exact
        );
    }

    let start = build_mode_table(&iso, Truncation::paper())?;
    let report = truncation_converged(&start, &[(30e-6, 0.0), (70e-6, 0.0)], 0.5, 1e-6)?;
    println!(
        "doubling search from t = 0.5 s: converged {} at n_max {}, m_max {} (largest change {:.1e})",
        report.converged, report.truncation.n_max, report.truncation.m_max, report.max_rel_change
    );
    Ok(())
}
