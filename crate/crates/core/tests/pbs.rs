use std::f64::consts::PI;

use biofilm_mc::channel::{build_mode_table, gfc_field, ChannelParams, ReceiverSpec, Truncation};
use biofilm_mc::sim::{
    apply_degradation, block_rng, run_ensemble, run_pbs, step_particle, FieldSpec,
    ParticleEnsemble, PbsConfig, Stepper,
};
use proptest::prelude::*;

fn small(
    params: ChannelParams,
    n_molecules: usize,
    n_realizations: usize,
    t_end: f64,
) -> PbsConfig {
    PbsConfig {
        n_molecules,
        n_realizations,
        t_end,
        ..PbsConfig::desk(params)
    }
}

/// Mean and standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn mean_squared_displacement_in_open_space() {
    // A disk far larger than the spread behaves as the plane.
    let p = ChannelParams::default().with_rho_c(1.0);
    let (dt, steps, n) = (0.01, 50, 100_000);
    let stepper = Stepper::new(&p, dt);
    let mut ens = ParticleEnsemble::at_source(n, &p);
    let mut rng = block_rng(7, 0, 0);
    for _ in 0..steps {
        ens.step(&stepper, &mut rng);
    }
    let sq: Vec<f64> = ens.rho.iter().map(|r| r * r).collect();
    let (mean, se) = mean_se(&sq);
    let want = 4.0 * p.d_rho * steps as f64 * dt;
    assert!(
        (mean - want).abs() < 3.0 * se,
        "{mean:e} vs {want:e} (se {se:e})"
    );
}

#[test]
fn anisotropic_step_moments_away_from_the_center() {
    let p = ChannelParams::anisotropic().with_rho_c(1.0);
    let (rho0, dt, n) = (50e-6, 0.01, 200_000);
    let stepper = Stepper::new(&p, dt);
    let mut ens = ParticleEnsemble::at_source(n, &p.with_tx(rho0, 0.0));
    let mut rng = block_rng(11, 0, 0);
    ens.step(&stepper, &mut rng);
    let radial: Vec<f64> = ens.rho.iter().map(|r| (r - rho0).powi(2)).collect();
    let arc: Vec<f64> = ens.theta.iter().map(|t| (rho0 * t).powi(2)).collect();
    let (mr, _) = mean_se(&radial);
    let (ma, _) = mean_se(&arc);
    assert!((mr / (2.0 * p.d_rho * dt) - 1.0).abs() < 0.02, "{mr:e}");
    assert!((ma / (2.0 * p.d_theta * dt) - 1.0).abs() < 0.02, "{ma:e}");
}

#[test]
fn survival_follows_the_decay_law() {
    let p = ChannelParams::default();
    let (dt, n) = (0.01, 100_000);
    assert!(((-p.k_d * dt).exp() - 0.9970045).abs() < 1e-7);
    let mut ens = ParticleEnsemble::at_source(n, &p);
    let mut rng = block_rng(3, 0, 0);
    for _ in 0..300 {
        apply_degradation(&mut ens, p.k_d, dt, &mut rng);
    }
    let frac = ens.alive_count() as f64 / n as f64;
    let want = (-0.9f64).exp();
    let se = (want * (1.0 - want) / n as f64).sqrt();
    assert!((frac - want).abs() < 3.0 * se, "{frac} vs {want}");
}

#[test]
fn no_decay_keeps_every_molecule() {
    let p = ChannelParams::default().with_k_d(0.0).with_tx(90e-6, 1.0);
    let config = small(p, 5_000, 2, 2.0);
    let whole = ReceiverSpec::new(0.0, 0.0, p.rho_c);
    let out = run_pbs(&config, &[whole], None).unwrap();
    assert!(out.surviving_fraction.iter().all(|&f| f == 1.0));
    let want = 1.0 / (PI * p.rho_c * p.rho_c);
    for &v in &out.series[0].values {
        assert!((v - want).abs() < 1e-12 * want);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = ChannelParams::anisotropic().with_tx(50e-6, 0.5);
    let config = small(p, 20_000, 3, 1.0);
    let rx = [
        ReceiverSpec::new(30e-6, 0.0, 5e-6),
        ReceiverSpec::new(99.5e-6, 0.5, 1e-6),
    ];
    let field = FieldSpec::covering(&p, 20e-6, vec![0.5, 1.0]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_pbs(&config, &rx, Some(&field)).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.series, b.series);
    assert_eq!(a.fields, b.fields);
    assert_eq!(a.surviving_fraction, b.surviving_fraction);
}

#[test]
fn stderr_shrinks_with_more_realizations() {
    let p = ChannelParams::default();
    let rx = [ReceiverSpec::new(20e-6, 0.0, 10e-6)];
    let se = |r| {
        let s = run_ensemble(&small(p, 2_000, r, 2.0), &rx)
            .unwrap()
            .remove(0);
        s.stderr.unwrap().iter().sum::<f64>()
    };
    let ratio = se(80) / se(40);
    assert!(
        (ratio - 0.5f64.sqrt()).abs() < 0.2 * 0.5f64.sqrt(),
        "{ratio}"
    );
}

/// Positions after `steps` steps of `n` molecules from the transmitter.
fn evolve(p: ChannelParams, n: usize, steps: usize, seed: u64) -> ParticleEnsemble {
    let stepper = Stepper::new(&p, 0.01);
    let mut ens = ParticleEnsemble::at_source(n, &p);
    let mut rng = block_rng(seed, 0, 0);
    for _ in 0..steps {
        ens.step(&stepper, &mut rng);
    }
    ens
}

#[test]
fn center_release_is_angularly_uniform() {
    let ens = evolve(ChannelParams::default(), 100_000, 100, 5);
    let mut bins = [0usize; 36];
    for &t in &ens.theta {
        bins[(((t + PI) / (2.0 * PI)) * 36.0).floor().min(35.0) as usize] += 1;
    }
    let expected = ens.len() as f64 / 36.0;
    let chi2: f64 = bins
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 99th percentile of chi-square with 35 degrees of freedom.
    assert!(chi2 < 57.34, "{chi2}");
}

/// Standard deviations of the radius and of the arc length `rho * theta`
/// about the source angle.
fn spreads(weights: impl Iterator<Item = (f64, f64, f64)>) -> (f64, f64) {
    let (mut s0, mut s1, mut s2, mut a2) = (0.0, 0.0, 0.0, 0.0);
    for (w, r, t) in weights {
        s0 += w;
        s1 += w * r;
        s2 += w * r * r;
        a2 += w * (r * t).powi(2);
    }
    let m = s1 / s0;
    ((s2 / s0 - m * m).sqrt(), (a2 / s0).sqrt())
}

#[test]
fn boundary_release_spreads_more_radially_than_along_the_arc() {
    // By 2 s the radial spread has nearly saturated in the bounded disk while
    // the arc spread keeps growing; the ordering flips a little after 3 s.
    let p = ChannelParams::anisotropic()
        .with_k_d(0.0)
        .with_tx(100e-6, 0.0);
    let ens = evolve(p, 50_000, 200, 9);
    let (radial, arc) = spreads(ens.rho.iter().zip(&ens.theta).map(|(&r, &t)| (1.0, r, t)));
    assert!(radial > arc, "{radial:e} vs {arc:e}");

    let table = build_mode_table(&p, Truncation::for_time(&p, 2.0, 1e-8).unwrap()).unwrap();
    let f = gfc_field(&table, 2.0, 1e-6, 2.0 * p.rho_c).unwrap();
    let cells = (0..f.ny).flat_map(|iy| (0..f.nx).map(move |ix| (ix, iy)));
    let (g_radial, g_arc) = spreads(cells.map(|(ix, iy)| {
        let (x, y) = f.center(ix, iy);
        (f.get(ix, iy), x.hypot(y), y.atan2(x))
    }));
    assert!(
        (radial / g_radial - 1.0).abs() < 0.05,
        "{radial:e} vs {g_radial:e}"
    );
    assert!((arc / g_arc - 1.0).abs() < 0.05, "{arc:e} vs {g_arc:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn steps_stay_in_the_disk(
        rho_frac in 0.0f64..=1.0,
        theta in -PI..PI,
        z0 in -8.0f64..8.0,
        z1 in -8.0f64..8.0,
        aniso in any::<bool>(),
        dt in 1e-3f64..1.0,
    ) {
        let p = if aniso { ChannelParams::anisotropic() } else { ChannelParams::default() };
        let (r, t) = step_particle(rho_frac * p.rho_c, theta, &p, dt, [z0, z1]);
        prop_assert!((0.0..=p.rho_c).contains(&r));
        prop_assert!((-PI..PI).contains(&t));
    }

    #[test]
    fn zero_noise_is_a_fixed_point(rho_frac in 0.0f64..=1.0, theta in -PI..PI) {
        let p = ChannelParams::anisotropic();
        let (r, t) = step_particle(rho_frac * p.rho_c, theta, &p, 0.01, [0.0, 0.0]);
        prop_assert_eq!(r, rho_frac * p.rho_c);
        prop_assert_eq!(t, theta);
    }
}
