//! Peak concentration with isotropic and with reduced azimuthal diffusion,
//! for transmitters away from the center.
//!
//! Run with `cargo run --release --example anisotropy_peaks`.

use biofilm_mc::analysis::{anisotropy_effect, PeakScan};
use biofilm_mc::channel::ChannelParams;

fn main() -> biofilm_mc::Result<()> {
    let iso = ChannelParams::default();
    let aniso = ChannelParams::anisotropic();
    let rx: Vec<f64> = [10.0, 20.0, 40.0, 60.0, 80.0, 90.0]
        .iter()
        .map(|r| r * 1e-6)
        .collect();
    let rows = anisotropy_effect(&iso, &aniso, &[50e-6, 100e-6], &rx, &PeakScan::default())?;

    println!("  tx (um)  rx (um)    iso peak  at (s)  aniso peak  at (s)   ratio");
    for row in rows {
        println!(
            "{:>9.0}{:>9.0}{:>12.4e}{:>8.3}{:>12.4e}{:>8.3}{:>8.3}",
            row.tx_rho * 1e6,
            row.rx_rho * 1e6,
            row.iso_peak,
            row.iso_peak_time,
            row.aniso_peak,
            row.aniso_peak_time,
            row.ratio
        );
    }
    Ok(())
}
