//! Bessel functions of real order and the radial eigenvalues of the disk.
//!
//! Run with `cargo run --example bessel_roots`.

use biofilm_mc::numerics::{bessel_j, bessel_j_prime, find_robin_roots, BesselOrder};

fn main() -> biofilm_mc::Result<()> {
    let rho_c = 100e-6;
    let d = 5e-10;

    println!("J_nu(x) for a few real orders");
    for nu in [0.0, 0.5, 1.0, 2.5, 10.0] {
        let order = BesselOrder::new(nu)?;
        let row: Vec<String> = [1.0, 5.0, 20.0, 60.0]
            .iter()
            .map(|&x| Ok(format!("{:>12.8}", bessel_j(order, x)?)))
            .collect::<biofilm_mc::Result<_>>()?;
        println!("  nu = {nu:>4}: {}", row.join(" "));
    }

    println!("first radial roots lambda rho_c, reflecting wall");
    for zeta in [0.0, 1.0, 1.0 / 10f64.sqrt(), 2.5] {
        let order = BesselOrder::new(zeta)?;
        let roots = find_robin_roots(order, rho_c, d, 0.0, 5)?;
        let scaled: Vec<String> = roots.iter().map(|l| format!("{:.6}", l * rho_c)).collect();
        let residual = roots
            .iter()
            .map(|&l| bessel_j_prime(order, l * rho_c).map(f64::abs))
            .collect::<biofilm_mc::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "  zeta = {zeta:.4}: {}  (largest |J'| {residual:.1e})",
            scaled.join(", ")
        );
    }

    println!("a reactive wall lowers every root");
    for k_f in [0.0, 1e-6, 1e-5] {
        let roots = find_robin_roots(BesselOrder::new(0.0)?, rho_c, d, k_f, 3)?;
        let scaled: Vec<String> = roots.iter().map(|l| format!("{:.5}", l * rho_c)).collect();
        println!("  k_f = {k_f:e} m/s: {}", scaled.join(", "));
    }
    Ok(())
}
