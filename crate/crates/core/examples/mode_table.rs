//! Build the eigenmode table of the disk and check that the series keeps
//! the surviving mass.
//!
//! Run with `cargo run --example mode_table`.

use biofilm_mc::analysis::mass_check_gfc;
use biofilm_mc::channel::{build_mode_table, ChannelParams, Truncation};

fn main() -> biofilm_mc::Result<()> {
    let params = ChannelParams::anisotropic().with_tx(50e-6, 0.0);
    let table = build_mode_table(&params, Truncation::default())?;
    println!(
        "{} modes for n <= {}, m <= {} (constant mode included: {})",
        table.len(),
        table.truncation().n_max,
        table.truncation().m_max,
        table.has_zero_mode()
    );

    println!("    n    m      zeta    lambda rho_c          norm (m^2)");
    for mode in table.modes().iter().filter(|m| m.m <= 2 && m.n <= 3) {
        println!(
            "{:>5}{:>5}{:>10.4}{:>14.6}{:>20.6e}",
            mode.n,
            mode.m,
            mode.zeta,
            mode.lambda * params.rho_c,
            mode.norm
        );
    }

    println!("integrated concentration against exp(-k_d t)");
    for check in mass_check_gfc(&table, &[0.1, 1.0, 10.0])? {
        println!(
            "  t = {:>4} s: {:.10} vs {:.10} (rel {:.1e})",
            check.t, check.mass, check.expected, check.rel_err
        );
    }

    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let text = String::from_utf8(csv).expect("CSV is ASCII");
    println!("CSV header: {}", text.lines().next().unwrap_or(""));
    Ok(())
}
