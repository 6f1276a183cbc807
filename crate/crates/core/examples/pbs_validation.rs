//! Particle simulation against the series solution at a few receivers.
//!
//! Run with `cargo run --release --example pbs_validation`.

use biofilm_mc::analysis::compare_series;
use biofilm_mc::channel::{
    build_mode_table, rx_disc_series, ChannelParams, ReceiverSpec, Truncation,
};
use biofilm_mc::sim::{run_pbs, PbsConfig};

fn main() -> biofilm_mc::Result<()> {
    let params = ChannelParams::default();
    let config = PbsConfig {
        n_realizations: 20,
        t_end: 3.0,
        ..PbsConfig::desk(params)
    };
    let times = config.sample_times();
    let receivers: Vec<ReceiverSpec> = [20.0, 40.0]
        .iter()
        .map(|r| ReceiverSpec::new(r * 1e-6, 0.0, 1e-6))
        .collect();

    let output = run_pbs(&config, &receivers, None)?;
    let table = build_mode_table(&params, Truncation::for_time(&params, times[0], 1e-6)?)?;

    println!(
        "{} molecules x {} realizations, dt {} s",
        config.n_molecules, config.n_realizations, config.dt
    );
    for (rx, sim) in receivers.iter().zip(&output.series) {
        let reference = rx_disc_series(&table, rx, &times)?;
        let report = compare_series(&reference, sim)?;
        println!(
            "  rx {:.0} um: nrmse {:.4}, peak error {:.4}, peak time offset {:+.3} s, {:.0}% inside 3 stderr",
            rx.rho * 1e6,
            report.nrmse,
            report.peak_rel_err,
            report.peak_time_offset,
            100.0 * report.within_ci_fraction
        );
    }
    let survived = output
        .surviving_fraction
        .last()
        .copied()
        .unwrap_or(f64::NAN);
    println!(
        "surviving fraction at {} s: {survived:.4} (exp(-k_d t) = {:.4})",
        config.t_end,
        (-params.k_d * config.t_end).exp()
    );
    Ok(())
}
