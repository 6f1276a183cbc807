//! Particle-based simulation of anisotropic diffusion in the disk.
//!
//! Each molecule carries a polar position `(rho, theta)`. One step of length
//! `dt` is a planar Gaussian step with coefficient `D_rho`, which reproduces
//! the radial law of the diffusion operator including its `D_rho / rho`
//! drift; the turning angle of that step is scaled by `sqrt(D_theta / D_rho)`
//! (see [`Stepper::advance`]). Crossing the wall is undone by specular
//! reflection in `rho`. Degradation is applied after the move with per-step
//! survival `exp(-k_d dt)`.
//!
//! Random numbers come from xoshiro256++ streams, one per block of
//! [`BLOCK_SIZE`] molecules of one realization, so results depend only on
//! the seed and not on how work is scheduled across threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::channel::observables::{ConcentrationSeries, GridField, Source};
use crate::channel::params::{wrap_angle, ChannelParams, ReceiverSpec, DT_DEFAULT};
use crate::error::{Error, Result};

/// Molecules per random stream. Part of the reproducibility contract:
/// changing it changes every result for a given seed.
pub const BLOCK_SIZE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbsConfig {
    pub params: ChannelParams,
    pub n_molecules: usize,
    /// Time step (s).
    pub dt: f64,
    /// Last simulated instant (s).
    pub t_end: f64,
    /// Record receivers every this many steps.
    pub sample_every: usize,
    pub n_realizations: usize,
    pub seed: u64,
}

impl PbsConfig {
    /// 1e5 molecules, 50 realizations, 10 ms steps to 5 s, sampled every 50 ms.
    pub fn desk(params: ChannelParams) -> Self {
        PbsConfig {
            params,
            n_molecules: 100_000,
            dt: DT_DEFAULT,
            t_end: 5.0,
            sample_every: 5,
            n_realizations: 50,
            seed: 1,
        }
    }

    /// 1e7 molecules and 500 realizations, otherwise as [`PbsConfig::desk`].
    pub fn paper(params: ChannelParams) -> Self {
        PbsConfig {
            n_molecules: 10_000_000,
            n_realizations: 500,
            ..PbsConfig::desk(params)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(
                "dt",
                format!("must be > 0, got {}", self.dt),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > self.params.t0) {
            return Err(Error::invalid(
                "t_end",
                "must be later than the release time",
            ));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every", "must be >= 1"));
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be >= 1"));
        }
        if self.n_steps() == 0 {
            return Err(Error::invalid(
                "dt",
                "is longer than the simulated interval",
            ));
        }
        Ok(())
    }

    /// Whether the typical step `sqrt(2 max(D) dt)` stays within a tenth of
    /// the disk radius. Larger steps still run but reflect less faithfully.
    pub fn step_guard_ok(&self) -> bool {
        let d = self.params.d_rho.max(self.params.d_theta);
        (2.0 * d * self.dt).sqrt() <= 0.1 * self.params.rho_c
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.params.t0) / self.dt + 1e-9).floor() as usize
    }

    /// Step indices at which receivers are read.
    pub fn sample_steps(&self) -> Vec<usize> {
        (1..=self.n_steps() / self.sample_every)
            .map(|k| k * self.sample_every)
            .collect()
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_steps()
            .into_iter()
            .map(|s| self.time_of_step(s))
            .collect()
    }

    pub fn time_of_step(&self, step: usize) -> f64 {
        self.params.t0 + step as f64 * self.dt
    }

    /// Nearest step to time `t`.
    pub fn step_of_time(&self, t: f64) -> usize {
        ((t - self.params.t0) / self.dt).round().max(0.0) as usize
    }
}

/// Positions and survival flags of one group of molecules.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub alive: Vec<bool>,
}

impl ParticleEnsemble {
    /// `n` live molecules at the transmitter.
    pub fn at_source(n: usize, params: &ChannelParams) -> Self {
        ParticleEnsemble {
            rho: vec![params.tx_rho; n],
            theta: vec![wrap_angle(params.tx_theta); n],
            alive: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// Advance every live molecule by one step, two normal draws each.
    pub fn step(&mut self, stepper: &Stepper, rng: &mut impl Rng) {
        for i in 0..self.rho.len() {
            if !self.alive[i] {
                continue;
            }
            let z = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            (self.rho[i], self.theta[i]) = stepper.advance(self.rho[i], self.theta[i], z);
        }
    }

    /// Live molecules inside `rx`.
    pub fn count_in(&self, rx: &ReceiverSpec) -> u64 {
        let mut count = 0;
        for i in 0..self.rho.len() {
            if self.alive[i] && rx.contains(self.rho[i], self.theta[i]) {
                count += 1;
            }
        }
        count
    }
}

/// Precomputed step scales for one channel and time step.
#[derive(Debug, Clone, Copy)]
pub struct Stepper {
    sigma: f64,
    angle_scale: f64,
    rho_c: f64,
}

impl Stepper {
    pub fn new(params: &ChannelParams, dt: f64) -> Self {
        Stepper {
            sigma: (2.0 * params.d_rho * dt).sqrt(),
            angle_scale: params.order_scale(),
            rho_c: params.rho_c,
        }
    }

    /// Move `(rho, theta)` using standard normal draws `z`: `z[0]` along the
    /// radial unit vector, `z[1]` along the tangential one.
    ///
    /// The planar step with coefficient `D_rho` fixes the new radius and an
    /// isotropic turning angle; the angle actually taken is that turn scaled
    /// by `sqrt(D_theta / D_rho)`. Given the radial path, the angle of
    /// anisotropic diffusion is isotropic winding run at that reduced rate,
    /// so the scaling is exact away from the center. From `rho = 0` the
    /// direction is uniform by symmetry and is left unscaled.
    #[inline]
    pub fn advance(&self, rho: f64, theta: f64, z: [f64; 2]) -> (f64, f64) {
        let x = rho + self.sigma * z[0];
        let y = self.sigma * z[1];
        let mut r = (x * x + y * y).sqrt();
        while r > self.rho_c {
            r = (2.0 * self.rho_c - r).abs();
        }
        if y == 0.0 && x >= 0.0 {
            return (r, theta);
        }
        let turn = y.atan2(x);
        let scale = if rho > 0.0 { self.angle_scale } else { 1.0 };
        let mut th = theta + scale * turn;
        if !(-PI..PI).contains(&th) {
            th = wrap_angle(th);
        }
        (r, th)
    }
}

/// One step of a single molecule. See [`Stepper::advance`].
pub fn step_particle(
    rho: f64,
    theta: f64,
    params: &ChannelParams,
    dt: f64,
    z: [f64; 2],
) -> (f64, f64) {
    Stepper::new(params, dt).advance(rho, theta, z)
}

/// Each live molecule survives independently with probability `exp(-k_d dt)`.
/// Draws nothing when `k_d = 0`.
pub fn apply_degradation(ensemble: &mut ParticleEnsemble, k_d: f64, dt: f64, rng: &mut impl Rng) {
    if k_d == 0.0 {
        return;
    }
    let survival = (-k_d * dt).exp();
    for alive in ensemble.alive.iter_mut() {
        if *alive && rng.random::<f64>() >= survival {
            *alive = false;
        }
    }
}

/// Grid and snapshot times for particle histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    /// Pixel edge (m).
    pub pixel: f64,
    /// Side of the square grid (m); at least the disk diameter.
    pub extent: f64,
    /// Snapshot times (s), each rounded to the nearest step.
    pub times: Vec<f64>,
}

impl FieldSpec {
    /// Grid just covering the disk.
    pub fn covering(params: &ChannelParams, pixel: f64, times: Vec<f64>) -> Self {
        FieldSpec {
            pixel,
            extent: 2.0 * params.rho_c,
            times,
        }
    }

    fn validate(&self, config: &PbsConfig) -> Result<()> {
        if !(self.pixel.is_finite() && self.pixel > 0.0) {
            return Err(Error::invalid(
                "pixel",
                format!("must be > 0, got {}", self.pixel),
            ));
        }
        if !(self.extent >= 2.0 * config.params.rho_c) {
            return Err(Error::invalid("extent", "must cover the disk"));
        }
        for &t in &self.times {
            if !(t >= config.params.t0 && config.step_of_time(t) <= config.n_steps()) {
                return Err(Error::invalid(
                    "snapshot",
                    format!("time {t} s is outside the run"),
                ));
            }
        }
        Ok(())
    }
}

/// Pixel index for a molecule at `(rho, theta)`. Molecules in a pixel whose
/// center lies outside the disk are moved inward along their radius, half a
/// pixel at a time, into the nearest unmasked pixel, so masked pixels stay
/// empty and no molecule is dropped.
fn histogram_pixel(grid: &GridField, rho: f64, theta: f64) -> Option<usize> {
    let (s, c) = theta.sin_cos();
    let mut r = rho;
    loop {
        let (ix, iy) = grid.locate(r * c, r * s)?;
        let p = iy * grid.nx + ix;
        if grid.mask[p] || r <= 0.0 {
            return Some(p);
        }
        r = (r - 0.5 * grid.pixel).max(0.0);
    }
}

/// Raw counts of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    /// `counts[receiver][sample]`.
    pub counts: Vec<Vec<u64>>,
    /// Live molecules at each sample.
    pub survivors: Vec<u64>,
    /// `histograms[snapshot][iy * nx + ix]`, empty without a field spec.
    pub histograms: Vec<Vec<u64>>,
}

impl RealizationOutput {
    fn zeros(n_rx: usize, n_samples: usize, n_snap: usize, n_pix: usize) -> Self {
        RealizationOutput {
            counts: vec![vec![0; n_samples]; n_rx],
            survivors: vec![0; n_samples],
            histograms: vec![vec![0; n_pix]; n_snap],
        }
    }

    fn add(&mut self, other: &RealizationOutput) {
        let pairs = self
            .counts
            .iter_mut()
            .chain(self.histograms.iter_mut())
            .chain(std::iter::once(&mut self.survivors));
        let others = other
            .counts
            .iter()
            .chain(other.histograms.iter())
            .chain(std::iter::once(&other.survivors));
        for (a, b) in pairs.zip(others) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// The random stream for `block` of `realization`: the seed's stream
/// advanced by `realization` long jumps (2^192 draws each), then `block`
/// jumps (2^128 draws each).
pub fn block_rng(seed: u64, realization: usize, block: usize) -> Xoshiro256PlusPlus {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..realization {
        rng.long_jump();
    }
    for _ in 0..block {
        rng.jump();
    }
    rng
}

fn block_rngs(seed: u64, realization: usize, n_blocks: usize) -> Vec<Xoshiro256PlusPlus> {
    let mut rng = block_rng(seed, realization, 0);
    (0..n_blocks)
        .map(|_| {
            let here = rng.clone();
            rng.jump();
            here
        })
        .collect()
}

struct Plan<'a> {
    config: &'a PbsConfig,
    receivers: &'a [ReceiverSpec],
    sample_steps: Vec<usize>,
    grid: Option<GridField>,
    snapshot_steps: Vec<usize>,
}

impl<'a> Plan<'a> {
    fn new(
        config: &'a PbsConfig,
        receivers: &'a [ReceiverSpec],
        field: Option<&FieldSpec>,
    ) -> Result<Self> {
        config.validate()?;
        let rho_c = config.params.rho_c;
        for rx in receivers {
            if !(rx.radius.is_finite() && rx.radius > 0.0) {
                return Err(Error::invalid("radius", "receiver radius must be > 0"));
            }
            if !(rx.rho.is_finite() && rx.rho >= 0.0) || rx.clipped_area(rho_c) <= 0.0 {
                return Err(Error::ReceiverOutsideDomain {
                    rho: rx.rho,
                    radius: rx.radius,
                    rho_c,
                });
            }
        }
        let (grid, snapshot_steps) = match field {
            Some(spec) => {
                spec.validate(config)?;
                let grid = GridField::centered(spec.pixel, spec.extent, rho_c, 0.0);
                let steps = spec.times.iter().map(|&t| config.step_of_time(t)).collect();
                (Some(grid), steps)
            }
            None => (None, Vec::new()),
        };
        Ok(Plan {
            config,
            receivers,
            sample_steps: config.sample_steps(),
            grid,
            snapshot_steps,
        })
    }

    fn n_pixels(&self) -> usize {
        self.grid.as_ref().map_or(0, |g| g.nx * g.ny)
    }

    fn empty_output(&self) -> RealizationOutput {
        RealizationOutput::zeros(
            self.receivers.len(),
            self.sample_steps.len(),
            self.snapshot_steps.len(),
            self.n_pixels(),
        )
    }

    fn run_block(&self, n: usize, mut rng: Xoshiro256PlusPlus) -> RealizationOutput {
        let config = self.config;
        let stepper = Stepper::new(&config.params, config.dt);
        let mut ensemble = ParticleEnsemble::at_source(n, &config.params);
        let mut out = self.empty_output();
        let last = self
            .sample_steps
            .last()
            .copied()
            .into_iter()
            .chain(self.snapshot_steps.iter().copied())
            .max()
            .unwrap_or(0);
        let mut next_sample = 0;

        self.record_snapshots(0, &ensemble, &mut out);
        for step in 1..=last {
            ensemble.step(&stepper, &mut rng);
            apply_degradation(&mut ensemble, config.params.k_d, config.dt, &mut rng);
            if self.sample_steps.get(next_sample) == Some(&step) {
                for (r, rx) in self.receivers.iter().enumerate() {
                    out.counts[r][next_sample] = ensemble.count_in(rx);
                }
                out.survivors[next_sample] = ensemble.alive_count() as u64;
                next_sample += 1;
            }
            self.record_snapshots(step, &ensemble, &mut out);
        }
        out
    }

    fn record_snapshots(
        &self,
        step: usize,
        ensemble: &ParticleEnsemble,
        out: &mut RealizationOutput,
    ) {
        let Some(grid) = &self.grid else { return };
        for (k, _) in self
            .snapshot_steps
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == step)
        {
            let hist = &mut out.histograms[k];
            for i in 0..ensemble.len() {
                if !ensemble.alive[i] {
                    continue;
                }
                if let Some(p) = histogram_pixel(grid, ensemble.rho[i], ensemble.theta[i]) {
                    hist[p] += 1;
                }
            }
        }
    }

    fn run_realization(&self, realization: usize) -> RealizationOutput {
        let n = self.config.n_molecules;
        let n_blocks = n.div_ceil(BLOCK_SIZE);
        let rngs = block_rngs(self.config.seed, realization, n_blocks);
        let parts: Vec<RealizationOutput> = rngs
            .into_par_iter()
            .enumerate()
            .map(|(b, rng)| {
                let size = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
                self.run_block(size, rng)
            })
            .collect();
        let mut total = self.empty_output();
        for part in &parts {
            total.add(part);
        }
        total
    }
}

/// Simulate realization number `realization` and return its raw counts.
pub fn run_realization(
    config: &PbsConfig,
    receivers: &[ReceiverSpec],
    field: Option<&FieldSpec>,
    realization: usize,
) -> Result<RealizationOutput> {
    Ok(Plan::new(config, receivers, field)?.run_realization(realization))
}

/// Ensemble estimates from all realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct PbsOutput {
    /// One series per receiver, in input order.
    pub series: Vec<ConcentrationSeries>,
    /// One field per snapshot time.
    pub fields: Vec<GridField>,
    /// Mean surviving fraction at each sample.
    pub surviving_fraction: Vec<f64>,
}

/// Run every realization and reduce to per-receiver concentration series
/// (and particle-density fields when `field` is given).
pub fn run_pbs(
    config: &PbsConfig,
    receivers: &[ReceiverSpec],
    field: Option<&FieldSpec>,
) -> Result<PbsOutput> {
    let plan = Plan::new(config, receivers, field)?;
    let outputs: Vec<RealizationOutput> = (0..config.n_realizations)
        .into_par_iter()
        .map(|r| plan.run_realization(r))
        .collect();

    let series = reduce_series(config, receivers, &outputs)?;
    let n = config.n_molecules as f64;
    let reps = config.n_realizations as f64;
    let surviving_fraction = (0..config.sample_steps().len())
        .map(|s| {
            let total: u64 = outputs.iter().map(|o| o.survivors[s]).sum();
            if n > 0.0 {
                total as f64 / (n * reps)
            } else {
                0.0
            }
        })
        .collect();

    let mut fields = Vec::new();
    if let (Some(spec), Some(grid)) = (field, &plan.grid) {
        let norm = if n > 0.0 {
            1.0 / (spec.pixel * spec.pixel * n * reps)
        } else {
            0.0
        };
        for (k, &step) in plan.snapshot_steps.iter().enumerate() {
            let mut f = grid.clone();
            f.t = config.time_of_step(step);
            for (p, v) in f.values.iter_mut().enumerate() {
                let total: u64 = outputs.iter().map(|o| o.histograms[k][p]).sum();
                *v = total as f64 * norm;
            }
            fields.push(f);
        }
    }

    Ok(PbsOutput {
        series,
        fields,
        surviving_fraction,
    })
}

/// Mean and standard error over realizations of `count / (area * n_molecules)`.
fn reduce_series(
    config: &PbsConfig,
    receivers: &[ReceiverSpec],
    outputs: &[RealizationOutput],
) -> Result<Vec<ConcentrationSeries>> {
    let n = config.n_molecules as f64;
    let reps = outputs.len() as f64;
    let times = config.sample_times();
    let rho_c = config.params.rho_c;
    let mut series = Vec::with_capacity(receivers.len());
    for (i, rx) in receivers.iter().enumerate() {
        let scale = if n > 0.0 {
            1.0 / (rx.clipped_area(rho_c) * n)
        } else {
            0.0
        };
        let mut mean = vec![0.0; times.len()];
        let mut stderr = vec![0.0; times.len()];
        for (s, (m, e)) in mean.iter_mut().zip(&mut stderr).enumerate() {
            let values = outputs.iter().map(|o| o.counts[i][s] as f64 * scale);
            *m = values.clone().sum::<f64>() / reps;
            if outputs.len() > 1 {
                let ss: f64 = values.map(|v| (v - *m) * (v - *m)).sum();
                *e = (ss / (reps - 1.0)).sqrt() / reps.sqrt();
            }
        }
        let stderr = (outputs.len() > 1).then_some(stderr);
        series.push(ConcentrationSeries::new(
            times.clone(),
            mean,
            stderr,
            Source::Pbs,
            *rx,
        )?);
    }
    Ok(series)
}

/// Series from `config` and from the same run with the step halved.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPair {
    pub coarse: Vec<ConcentrationSeries>,
    pub fine: Vec<ConcentrationSeries>,
}

/// Run `config` and its half-step refinement on shared randomness, so the
/// difference between the two isolates the time-step error.
///
/// Each molecule draws its half-step increments for the fine run. Those are
/// given in each half-step's local frame, so they are turned into the
/// coarse molecule's frame before being summed and scaled by `1/sqrt(2)`.
/// Rotating standard normals by angles fixed before the draw leaves them
/// standard normal, so the coarse run is an exact run at step `dt` that
/// follows the fine path instead of drifting off it. Degradation uses one
/// exponential lifetime per molecule for both runs, which reproduces
/// per-step survival `exp(-k_d dt)` in each. Both runs sample at the times
/// of `config`.
pub fn run_step_pair(config: &PbsConfig, receivers: &[ReceiverSpec]) -> Result<StepPair> {
    let plan = Plan::new(config, receivers, None)?;
    let fine_config = PbsConfig {
        dt: 0.5 * config.dt,
        sample_every: 2 * config.sample_every,
        ..*config
    };
    let n = config.n_molecules;
    let n_blocks = n.div_ceil(BLOCK_SIZE);
    let outputs: Vec<(RealizationOutput, RealizationOutput)> = (0..config.n_realizations)
        .into_par_iter()
        .map(|r| {
            let parts: Vec<_> = block_rngs(config.seed, r, n_blocks)
                .into_par_iter()
                .enumerate()
                .map(|(b, rng)| plan.run_pair_block(BLOCK_SIZE.min(n - b * BLOCK_SIZE), rng))
                .collect();
            let mut coarse = plan.empty_output();
            let mut fine = plan.empty_output();
            for (c, f) in &parts {
                coarse.add(c);
                fine.add(f);
            }
            (coarse, fine)
        })
        .collect();
    let (coarse, fine): (Vec<_>, Vec<_>) = outputs.into_iter().unzip();
    Ok(StepPair {
        coarse: reduce_series(config, receivers, &coarse)?,
        fine: reduce_series(&fine_config, receivers, &fine)?,
    })
}

impl Plan<'_> {
    fn run_pair_block(
        &self,
        n: usize,
        mut rng: Xoshiro256PlusPlus,
    ) -> (RealizationOutput, RealizationOutput) {
        let config = self.config;
        let params = &config.params;
        let coarse_step = Stepper::new(params, config.dt);
        let fine_step = Stepper::new(params, 0.5 * config.dt);
        let mut coarse = ParticleEnsemble::at_source(n, params);
        let mut fine = coarse.clone();
        let lifetime: Vec<f64> = (0..n)
            .map(|_| {
                if params.k_d > 0.0 {
                    -(1.0 - rng.random::<f64>()).ln() / params.k_d
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mut out_coarse = self.empty_output();
        let mut out_fine = self.empty_output();
        let last = self.sample_steps.last().copied().unwrap_or(0);
        let mut next_sample = 0;
        for step in 1..=last {
            let t_start = (step - 1) as f64 * config.dt;
            let t_mid = (step as f64 - 0.5) * config.dt;
            let t_end = step as f64 * config.dt;
            for i in 0..n {
                if lifetime[i] <= t_start {
                    continue;
                }
                let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let first = rotate([z[0], z[1]], fine.theta[i] - coarse.theta[i]);
                (fine.rho[i], fine.theta[i]) =
                    fine_step.advance(fine.rho[i], fine.theta[i], [z[0], z[1]]);
                let second = rotate([z[2], z[3]], fine.theta[i] - coarse.theta[i]);
                fine.alive[i] = lifetime[i] > t_mid;
                if fine.alive[i] {
                    (fine.rho[i], fine.theta[i]) =
                        fine_step.advance(fine.rho[i], fine.theta[i], [z[2], z[3]]);
                }
                let combined = [
                    (first[0] + second[0]) * std::f64::consts::FRAC_1_SQRT_2,
                    (first[1] + second[1]) * std::f64::consts::FRAC_1_SQRT_2,
                ];
                (coarse.rho[i], coarse.theta[i]) =
                    coarse_step.advance(coarse.rho[i], coarse.theta[i], combined);
                let alive = lifetime[i] > t_end;
                coarse.alive[i] = alive;
                fine.alive[i] = alive;
            }
            if self.sample_steps.get(next_sample) == Some(&step) {
                for (r, rx) in self.receivers.iter().enumerate() {
                    out_coarse.counts[r][next_sample] = coarse.count_in(rx);
                    out_fine.counts[r][next_sample] = fine.count_in(rx);
                }
                out_coarse.survivors[next_sample] = coarse.alive_count() as u64;
                out_fine.survivors[next_sample] = fine.alive_count() as u64;
                next_sample += 1;
            }
        }
        (out_coarse, out_fine)
    }
}

/// `v` turned counterclockwise by `angle`.
#[inline]
fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (sin, cos) = angle.sin_cos();
    [v[0] * cos - v[1] * sin, v[0] * sin + v[1] * cos]
}

/// Per-receiver concentration series averaged over all realizations.
pub fn run_ensemble(
    config: &PbsConfig,
    receivers: &[ReceiverSpec],
) -> Result<Vec<ConcentrationSeries>> {
    Ok(run_pbs(config, receivers, None)?.series)
}

/// Particle density maps (1/m^2 per released molecule) at the given times
/// on a grid of `pixel`-sized cells covering the disk.
pub fn pbs_field(config: &PbsConfig, snapshot_times: &[f64], pixel: f64) -> Result<Vec<GridField>> {
    let spec = FieldSpec::covering(&config.params, pixel, snapshot_times.to_vec());
    Ok(run_pbs(config, &[], Some(&spec))?.fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(params: ChannelParams) -> PbsConfig {
        PbsConfig {
            n_molecules: 5000,
            n_realizations: 3,
            t_end: 0.5,
            ..PbsConfig::desk(params)
        }
    }

    #[test]
    fn zero_noise_leaves_particle_in_place() {
        let p = ChannelParams::anisotropic();
        assert_eq!(step_particle(40e-6, 1.2, &p, 0.01, [0.0; 2]), (40e-6, 1.2));
        assert_eq!(step_particle(0.0, 0.0, &p, 0.01, [0.0; 2]), (0.0, 0.0));
    }

    #[test]
    fn reflection_at_wall() {
        let p = ChannelParams::default();
        let sigma = (2.0 * p.d_rho * 0.01).sqrt();
        let (r, th) = step_particle(p.rho_c, 0.0, &p, 0.01, [0.5, 0.0]);
        assert!((r - (p.rho_c - 0.5 * sigma)).abs() < 1e-18);
        assert_eq!(th, 0.0);
        let (r, th) = step_particle(p.rho_c, 3.1, &p, 0.01, [3.0, 4.0]);
        assert!(r <= p.rho_c && r >= 0.0);
        assert!((-PI..PI).contains(&th));
    }

    #[test]
    fn survival_per_step() {
        assert!(((-0.3f64 * 0.01).exp() - 0.9970045).abs() < 1e-7);
        let mut e = ParticleEnsemble::at_source(1000, &ChannelParams::default());
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        apply_degradation(&mut e, 0.0, 0.01, &mut rng);
        assert_eq!(e.alive_count(), 1000);
        apply_degradation(&mut e, 1e9, 0.01, &mut rng);
        assert_eq!(e.alive_count(), 0);
    }

    #[test]
    fn sample_grid() {
        let c = PbsConfig::desk(ChannelParams::default());
        assert_eq!(c.n_steps(), 500);
        let s = c.sample_steps();
        assert_eq!(s.len(), 100);
        assert_eq!(s[0], 5);
        assert!((c.sample_times()[99] - 5.0).abs() < 1e-12);
        assert!(c.step_guard_ok());
        assert!(!PbsConfig { dt: 1.0, ..c }.step_guard_ok());
    }

    #[test]
    fn zero_molecules_give_zero_series() {
        let c = PbsConfig {
            n_molecules: 0,
            ..small(ChannelParams::default())
        };
        let rx = [ReceiverSpec::new(20e-6, 0.0, 1e-6)];
        let out = run_ensemble(&c, &rx).unwrap();
        assert!(out[0].values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn whole_domain_receiver_conserves_without_decay() {
        let p = ChannelParams::default().with_k_d(0.0).with_tx(70e-6, 0.5);
        let c = small(p);
        let rx = [ReceiverSpec::new(0.0, 0.0, p.rho_c)];
        let out = run_ensemble(&c, &rx).unwrap();
        let expected = 1.0 / (PI * p.rho_c * p.rho_c);
        for &v in &out[0].values {
            assert!(
                (v - expected).abs() <= 1e-12 * expected,
                "{v} vs {expected}"
            );
        }
    }

    #[test]
    fn clipped_receiver_accepted() {
        let c = small(ChannelParams::default());
        let rx = [ReceiverSpec::new(c.params.rho_c, 0.0, 1e-6)];
        assert!(run_ensemble(&c, &rx).is_ok());
        let outside = [ReceiverSpec::new(2.0 * c.params.rho_c, 0.0, 1e-6)];
        assert!(run_ensemble(&c, &outside).is_err());
    }

    #[test]
    fn block_streams_are_distinct_and_reproducible() {
        let a = block_rng(7, 2, 1).random::<u64>();
        assert_eq!(a, block_rng(7, 2, 1).random::<u64>());
        assert_ne!(a, block_rng(7, 2, 0).random::<u64>());
        assert_ne!(a, block_rng(7, 1, 1).random::<u64>());
        let rngs = block_rngs(7, 2, 3);
        assert_eq!(rngs[1].clone().random::<u64>(), a);
    }

    #[test]
    fn step_pair_shares_paths() {
        let c = PbsConfig {
            n_molecules: 2000,
            n_realizations: 2,
            t_end: 0.3,
            ..PbsConfig::desk(ChannelParams::default().with_tx(30e-6, 0.0))
        };
        let rx = [
            ReceiverSpec::new(30e-6, 0.0, 5e-6),
            ReceiverSpec::new(0.0, 0.0, c.params.rho_c),
        ];
        let pair = run_step_pair(&c, &rx).unwrap();
        assert_eq!(pair.coarse[0].times, pair.fine[0].times);
        // Same lifetimes: the whole-disk counts agree exactly.
        assert_eq!(pair.coarse[1].values, pair.fine[1].values);
        let diff: f64 = pair.coarse[0]
            .values
            .iter()
            .zip(&pair.fine[0].values)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let total: f64 = pair.coarse[0].values.iter().sum();
        assert!(diff < 0.2 * total, "{diff} vs {total}");
    }

    #[test]
    fn field_mass_is_surviving_fraction() {
        let c = small(ChannelParams::anisotropic().with_tx(90e-6, 0.0));
        let times = c.sample_times();
        let spec = FieldSpec::covering(&c.params, 5e-6, vec![times[9]]);
        let out = run_pbs(&c, &[], Some(&spec)).unwrap();
        let field = &out.fields[0];
        let mass = field.total_mass();
        assert!((mass - out.surviving_fraction[9]).abs() < 1e-12, "{mass}");
        assert!(field
            .values
            .iter()
            .zip(&field.mask)
            .all(|(&v, &m)| m || v == 0.0));
    }
}
