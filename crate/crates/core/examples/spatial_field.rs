//! Concentration maps from the series and from particles, written as PGM
//! images.
//!
//! Run with `cargo run --release --example spatial_field`. Images land in
//! the system temporary directory.

use std::fs::File;

use biofilm_mc::channel::{build_mode_table, gfc_field, ChannelParams, Truncation};
use biofilm_mc::io::write_pgm;
use biofilm_mc::sim::{run_pbs, FieldSpec, PbsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ChannelParams::anisotropic().with_tx(60e-6, 0.0);
    let pixel = 5e-6;
    let snapshots = vec![0.5, 2.0];

    let table = build_mode_table(&params, Truncation::for_time(&params, snapshots[0], 1e-4)?)?;
    let config = PbsConfig {
        n_realizations: 4,
        t_end: 2.0,
        ..PbsConfig::desk(params)
    };
    let spec = FieldSpec::covering(&params, pixel, snapshots.clone());
    let particles = run_pbs(&config, &[], Some(&spec))?.fields;

    let dir = std::env::temp_dir();
    for (t, hist) in snapshots.iter().zip(&particles) {
        let series = gfc_field(&table, *t, pixel, 2.0 * params.rho_c)?;
        for (name, field) in [("gfc", &series), ("pbs", hist)] {
            let path = dir.join(format!("field_{name}_t{t}s.pgm"));
            let max = write_pgm(File::create(&path)?, field, 1.0)?;
            println!(
                "{}: {}x{} pixels, mass {:.4}, max {max:.3e} 1/m^2",
                path.display(),
                field.nx,
                field.ny,
                field.total_mass()
            );
        }
    }
    Ok(())
}
