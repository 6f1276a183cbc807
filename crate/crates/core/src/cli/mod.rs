//! Command-line front end: `modes | impulse | pbs | compare | field`.
//!
//! Every subcommand writes its artifacts, the effective config
//! (`config.txt`) and a `manifest.txt` into the output directory.
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 a comparison
//! exceeded its thresholds.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::analysis::{compare_series, ComparisonReport};
use crate::channel::{
    build_mode_table, gfc_field, gfc_time_series, rx_disc_series, GridField, ModeTable,
    ReceiverSpec,
};
use crate::error::{Error, Result};
use crate::io;
use crate::sim::{run_pbs, PbsConfig};

pub use config::{parse_config, parse_config_str, FieldSolver, GfcPreset, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_THRESHOLD: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "biofilm-mc",
    version,
    about = "Diffusion in a bounded disk: series solution and particle simulation"
)]
pub struct Cli {
    /// Run configuration (`key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte Carlo seed, overriding `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo scale: molecule and realization counts.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<ScalePreset>,
    /// Worker threads. Changes speed only.
    #[arg(long, global = true, env = "BIOFILM_MC_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalePreset {
    /// 1e5 molecules, 50 realizations.
    Desk,
    /// 1e7 molecules, 500 realizations.
    Paper,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the eigenmode table.
    Modes,
    /// Series-solution concentration at each receiver.
    Impulse {
        /// Evaluate at receiver centers instead of averaging over the disc.
        #[arg(long)]
        point: bool,
    },
    /// Particle simulation at each receiver.
    Pbs {
        /// Also write particle histograms at the snapshot times.
        #[arg(long)]
        field: bool,
        /// Histograms as molecule counts per pixel instead of concentration.
        #[arg(long, requires = "field")]
        counts: bool,
    },
    /// Compare two series files, or the two solvers at each receiver.
    Compare {
        /// Reference series CSV.
        #[arg(long, requires = "test")]
        reference: Option<PathBuf>,
        /// Series CSV to test against the reference.
        #[arg(long, requires = "reference")]
        test: Option<PathBuf>,
    },
    /// Concentration maps at the snapshot times.
    Field {
        /// Molecule counts per pixel instead of concentration.
        #[arg(long)]
        counts: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Impulse { .. } => "impulse",
            Command::Pbs { .. } => "pbs",
            Command::Compare { .. } => "compare",
            Command::Field { .. } => "field",
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

/// Config file plus command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.pbs.seed = seed;
    }
    if let Some(preset) = cli.preset {
        let scale = match preset {
            ScalePreset::Desk => PbsConfig::desk(cfg.channel_params()),
            ScalePreset::Paper => PbsConfig::paper(cfg.channel_params()),
        };
        cfg.pbs.n_molecules = scale.n_molecules;
        cfg.pbs.n_realizations = scale.n_realizations;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run a parsed command line and return the exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    let cfg = effective_config(cli)?;
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
            pool.install(|| dispatch(&cli.command, &cfg))
        }
        None => dispatch(&cli.command, &cfg),
    }
}

/// Artifacts written by one subcommand, and what goes in the manifest.
struct Run {
    dir: PathBuf,
    files: Vec<String>,
    entries: Vec<(String, String)>,
}

impl Run {
    fn new(cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out_dir)?;
        Ok(Run {
            dir: cfg.out_dir.clone(),
            files: Vec::new(),
            entries: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn finish(mut self, command: &str, cfg: &RunConfig, started: Instant) -> Result<()> {
        let text = cfg.serialize();
        std::fs::write(self.dir.join("config.txt"), &text)?;
        self.files.push("config.txt".into());
        // The output directory does not change results, so it is left out of the hash.
        let hashed: String = text
            .lines()
            .filter(|l| !l.starts_with("out_dir"))
            .map(|l| format!("{l}\n"))
            .collect();
        let hash = Sha256::digest(hashed.as_bytes());
        let mut m = BufWriter::new(File::create(self.dir.join("manifest.txt"))?);
        writeln!(m, "tool = {}", env!("CARGO_PKG_NAME"))?;
        writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(m, "subcommand = {command}")?;
        writeln!(m, "config_sha256 = {}", hex(&hash))?;
        writeln!(m, "seed = {}", cfg.pbs.seed)?;
        for (k, v) in &self.entries {
            writeln!(m, "{k} = {v}")?;
        }
        for f in &self.files {
            writeln!(m, "file = {f}")?;
        }
        writeln!(m, "wall_time_s = {:.3}", started.elapsed().as_secs_f64())?;
        m.flush()?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let mut run = Run::new(cfg)?;
    let code = match command {
        Command::Modes => modes(cfg, &mut run)?,
        Command::Impulse { point } => impulse(cfg, *point, &mut run)?,
        Command::Pbs { field, counts } => pbs(cfg, *field, *counts, &mut run)?,
        Command::Compare { reference, test } => match (reference, test) {
            (Some(r), Some(t)) => compare_files(cfg, r, t, &mut run)?,
            _ => compare_solvers(cfg, &mut run)?,
        },
        Command::Field { counts } => field(cfg, *counts, &mut run)?,
    };
    let n_files = run.files.len() + 2;
    let dir = run.dir.clone();
    run.finish(command.name(), cfg, started)?;
    println!("wrote {n_files} files to {}", dir.display());
    Ok(code)
}

fn mode_table(cfg: &RunConfig, t_first: f64, run: &mut Run) -> Result<ModeTable> {
    let truncation = cfg.truncation(t_first)?;
    run.note(
        "truncation",
        format!("n_max {} m_max {}", truncation.n_max, truncation.m_max),
    );
    build_mode_table(&cfg.channel_params(), truncation)
}

fn note_receivers(receivers: &[ReceiverSpec], run: &mut Run) {
    for (i, rx) in receivers.iter().enumerate() {
        run.note(
            format!("receiver.{i}"),
            format!(
                "rho_um {:?} theta_rad {:?} radius_um {:?}",
                rx.rho * 1e6,
                rx.theta,
                rx.radius * 1e6
            ),
        );
    }
}

fn first_sample(times: &[f64]) -> Result<f64> {
    times
        .first()
        .copied()
        .ok_or_else(|| Error::invalid("t_end_s", "no sample times"))
}

fn modes(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let table = mode_table(cfg, first_sample(&cfg.sample_times())?, run)?;
    let mut out = run.create("modes.csv")?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn gfc_series(
    cfg: &RunConfig,
    point: bool,
    run: &mut Run,
) -> Result<Vec<crate::channel::ConcentrationSeries>> {
    let times = cfg.sample_times();
    let table = mode_table(cfg, first_sample(&times)?, run)?;
    let receivers = cfg.receivers();
    note_receivers(&receivers, run);
    receivers
        .iter()
        .map(|rx| {
            if point {
                gfc_time_series(&table, rx.rho, rx.theta, &times)
            } else {
                rx_disc_series(&table, rx, &times)
            }
        })
        .collect()
}

fn write_impulse(series: &[crate::channel::ConcentrationSeries], run: &mut Run) -> Result<()> {
    for (i, s) in series.iter().enumerate() {
        let name = format!("impulse_rx{i}.csv");
        let mut out = run.create(&name)?;
        let clipped = io::write_impulse_csv(&mut out, s)?;
        out.flush()?;
        run.note(format!("clipped_samples.{name}"), clipped);
    }
    Ok(())
}

fn impulse(cfg: &RunConfig, point: bool, run: &mut Run) -> Result<i32> {
    let series = gfc_series(cfg, point, run)?;
    write_impulse(&series, run)?;
    Ok(EXIT_OK)
}

fn write_field(
    field: &GridField,
    stem: &str,
    scale: f64,
    units: &str,
    run: &mut Run,
) -> Result<()> {
    let mut out = run.create(&format!("{stem}.csv"))?;
    io::write_field_csv(&mut out, field, scale)?;
    out.flush()?;
    let mut out = run.create(&format!("{stem}.pgm"))?;
    let max = io::write_pgm(&mut out, field, scale)?;
    out.flush()?;
    let mut out = run.create(&format!("{stem}.pgm.scale.txt"))?;
    io::write_pgm_scale(&mut out, field, max, units)?;
    out.flush()?;
    Ok(())
}

/// Multiplier and unit label for field output.
fn field_scale(cfg: &RunConfig, counts: bool) -> (f64, &'static str) {
    if counts {
        let pixel = cfg.field.pixel_um / 1e6;
        (
            pixel * pixel * cfg.pbs.n_molecules as f64,
            "molecules_per_pixel",
        )
    } else {
        (1.0, "per_m2")
    }
}

fn pbs(cfg: &RunConfig, with_field: bool, counts: bool, run: &mut Run) -> Result<i32> {
    let receivers = cfg.receivers();
    note_receivers(&receivers, run);
    let spec = cfg.field_spec();
    let output = run_pbs(&cfg.pbs_config(), &receivers, with_field.then_some(&spec))?;
    for (i, s) in output.series.iter().enumerate() {
        let mut out = run.create(&format!("pbs_rx{i}.csv"))?;
        io::write_pbs_csv(&mut out, s)?;
        out.flush()?;
    }
    let (scale, units) = field_scale(cfg, counts);
    for f in &output.fields {
        write_field(f, &format!("field_pbs_t{}s", f.t), scale, units, run)?;
    }
    Ok(EXIT_OK)
}

fn field(cfg: &RunConfig, counts: bool, run: &mut Run) -> Result<i32> {
    let times = &cfg.field.snapshot_times_s;
    let earliest = times
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::invalid("snapshot_times_s", "no snapshot times"))?;
    let (scale, units) = field_scale(cfg, counts);
    let spec = cfg.field_spec();
    if cfg.field.solver.gfc() {
        let table = mode_table(cfg, earliest, run)?;
        for &t in times {
            let f = gfc_field(&table, t, spec.pixel, spec.extent)?;
            write_field(&f, &format!("field_gfc_t{t}s"), scale, units, run)?;
        }
    }
    if cfg.field.solver.pbs() {
        let output = run_pbs(&cfg.pbs_config(), &[], Some(&spec))?;
        for f in &output.fields {
            write_field(f, &format!("field_pbs_t{}s", f.t), scale, units, run)?;
        }
    }
    Ok(EXIT_OK)
}

fn report_rows(
    cfg: &RunConfig,
    rows: &[(ReceiverSpec, ComparisonReport)],
    run: &mut Run,
) -> Result<i32> {
    let (max_nrmse, max_peak) = (cfg.thresholds.max_nrmse, cfg.thresholds.max_peak_rel_err);
    let mut out = run.create("compare.csv")?;
    io::write_compare_csv(&mut out, rows, max_nrmse, max_peak)?;
    out.flush()?;
    let mut all_pass = true;
    for (i, (rx, r)) in rows.iter().enumerate() {
        let pass = r.passes(max_nrmse, max_peak);
        all_pass &= pass;
        println!(
            "rx{i} rho {:.1} um: peak_rel_err {:.4} nrmse {:.4} peak_dt {:+.4} s within_ci {:.2} {}",
            rx.rho * 1e6,
            r.peak_rel_err,
            r.nrmse,
            r.peak_time_offset,
            r.within_ci_fraction,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    run.note("compare_pass", all_pass);
    Ok(if all_pass { EXIT_OK } else { EXIT_THRESHOLD })
}

fn compare_files(cfg: &RunConfig, reference: &Path, test: &Path, run: &mut Run) -> Result<i32> {
    let rx = ReceiverSpec::point(0.0, 0.0);
    let read = |p: &Path| -> Result<_> {
        let text =
            std::fs::read_to_string(p).map_err(|e| Error::Csv(format!("{}: {e}", p.display())))?;
        io::read_series_csv(&text, rx).map_err(|e| Error::Csv(format!("{}: {e}", p.display())))
    };
    let (r, t) = (read(reference)?, read(test)?);
    run.note("reference", reference.display());
    run.note("test", test.display());
    let report = compare_series(&r, &t)?;
    report_rows(cfg, &[(rx, report)], run)
}

fn compare_solvers(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let gfc = gfc_series(cfg, false, run)?;
    write_impulse(&gfc, run)?;
    let receivers = cfg.receivers();
    let output = run_pbs(&cfg.pbs_config(), &receivers, None)?;
    let mut rows = Vec::new();
    for (i, (g, p)) in gfc.iter().zip(&output.series).enumerate() {
        let mut out = run.create(&format!("pbs_rx{i}.csv"))?;
        io::write_pbs_csv(&mut out, p)?;
        out.flush()?;
        rows.push((receivers[i], compare_series(g, p)?));
    }
    report_rows(cfg, &rows, run)
}
