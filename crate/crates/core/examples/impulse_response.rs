//! Received concentration after an impulse release at the center, for
//! receivers on one ray.
//!
//! Run with `cargo run --release --example impulse_response`.

use biofilm_mc::channel::{
    build_mode_table, rx_disc_series, ChannelParams, ReceiverSpec, Truncation,
};

fn main() -> biofilm_mc::Result<()> {
    let params = ChannelParams::default();
    let times: Vec<f64> = (1..=100).map(|k| k as f64 * 0.05).collect();
    let table = build_mode_table(&params, Truncation::for_time(&params, times[0], 1e-4)?)?;
    println!("{} modes", table.len());

    println!("  rx (um)   peak (1/m^2)   peak time (s)   value at 5 s");
    for rx_um in [20.0, 40.0, 60.0, 80.0] {
        let rx = ReceiverSpec::new(rx_um * 1e-6, 0.0, 1e-6);
        let series = rx_disc_series(&table, &rx, &times)?;
        let i = series.peak_index().expect("series is not empty");
        println!(
            "{:>9}{:>15.4e}{:>16.2}{:>15.4e}",
            rx_um,
            series.values[i],
            series.times[i],
            series.values[series.len() - 1]
        );
    }
    Ok(())
}
