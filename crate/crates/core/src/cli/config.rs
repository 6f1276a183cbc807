//! Flat `key = value` run configuration.
//!
//! Lengths are written in micrometres and kept that way in [`RunConfig`];
//! [`RunConfig::channel_params`] and friends convert to SI.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::params::{DT_DEFAULT, D_RHO_DEFAULT, K_D_DEFAULT};
use crate::channel::{ChannelParams, ReceiverSpec, Truncation};
use crate::error::{Error, Result};
use crate::sim::{FieldSpec, PbsConfig};

/// Micrometres per metre. Dividing by it is exact for round inputs.
const UM_PER_M: f64 = 1e6;

/// Which truncation the series solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfcPreset {
    /// `n_max = 8`, `m_max = 40`.
    Default,
    /// `n_max = 2`, `m_max = 4`.
    Paper,
    /// Sized from the earliest evaluated time and `gfc_tol`.
    Auto,
}

impl GfcPreset {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "default" => Some(GfcPreset::Default),
            "paper" => Some(GfcPreset::Paper),
            "auto" => Some(GfcPreset::Auto),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            GfcPreset::Default => "default",
            GfcPreset::Paper => "paper",
            GfcPreset::Auto => "auto",
        }
    }
}

/// Solver used for `field` maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSolver {
    Gfc,
    Pbs,
    Both,
}

impl FieldSolver {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "gfc" => Some(FieldSolver::Gfc),
            "pbs" => Some(FieldSolver::Pbs),
            "both" => Some(FieldSolver::Both),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            FieldSolver::Gfc => "gfc",
            FieldSolver::Pbs => "pbs",
            FieldSolver::Both => "both",
        }
    }

    pub fn gfc(self) -> bool {
        matches!(self, FieldSolver::Gfc | FieldSolver::Both)
    }

    pub fn pbs(self) -> bool {
        matches!(self, FieldSolver::Pbs | FieldSolver::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub d_rho: f64,
    pub d_theta: f64,
    pub rho_c_um: f64,
    pub k_d: f64,
    pub k_f: f64,
    pub tx_rho_um: f64,
    pub tx_theta_rad: f64,
    pub t0_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GfcConfig {
    pub preset: GfcPreset,
    /// Overrides the preset's azimuthal cut-off.
    pub n_max: Option<usize>,
    /// Overrides the preset's radial cut-off.
    pub m_max: Option<usize>,
    /// Relative size of the slowest omitted mode for the `auto` preset.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbsSettings {
    pub n_molecules: usize,
    pub dt_s: f64,
    pub t_end_s: f64,
    pub sample_every: usize,
    pub n_realizations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub rho_um: Vec<f64>,
    /// One angle for all receivers, or one per receiver.
    pub theta_rad: Vec<f64>,
    pub radius_um: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub pixel_um: f64,
    pub snapshot_times_s: Vec<f64>,
    pub solver: FieldSolver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub max_nrmse: f64,
    pub max_peak_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    pub gfc: GfcConfig,
    pub pbs: PbsSettings,
    pub receivers: ReceiverConfig,
    pub field: FieldConfig,
    pub thresholds: Thresholds,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    /// Isotropic reference channel, center release, receivers at 20, 40, 60
    /// and 80 um on the x axis, desk-scale Monte Carlo.
    fn default() -> Self {
        let p = ChannelParams::default();
        let pbs = PbsConfig::desk(p);
        RunConfig {
            channel: ChannelConfig {
                d_rho: D_RHO_DEFAULT,
                d_theta: D_RHO_DEFAULT,
                rho_c_um: 100.0,
                k_d: K_D_DEFAULT,
                k_f: 0.0,
                tx_rho_um: 0.0,
                tx_theta_rad: 0.0,
                t0_s: 0.0,
            },
            gfc: GfcConfig {
                preset: GfcPreset::Auto,
                n_max: None,
                m_max: None,
                tol: 1e-4,
            },
            pbs: PbsSettings {
                n_molecules: pbs.n_molecules,
                dt_s: DT_DEFAULT,
                t_end_s: pbs.t_end,
                sample_every: pbs.sample_every,
                n_realizations: pbs.n_realizations,
                seed: pbs.seed,
            },
            receivers: ReceiverConfig {
                rho_um: vec![20.0, 40.0, 60.0, 80.0],
                theta_rad: vec![0.0],
                radius_um: 1.0,
            },
            field: FieldConfig {
                pixel_um: 20.0,
                snapshot_times_s: vec![0.5, 1.0, 3.0],
                solver: FieldSolver::Gfc,
            },
            thresholds: Thresholds {
                max_nrmse: 0.05,
                max_peak_rel_err: 0.05,
            },
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "d_rho",
    "d_theta",
    "rho_c_um",
    "k_d",
    "k_f",
    "tx_rho_um",
    "tx_theta_rad",
    "t0_s",
    "gfc_preset",
    "n_max",
    "m_max",
    "gfc_tol",
    "n_molecules",
    "dt_s",
    "t_end_s",
    "sample_every",
    "n_realizations",
    "seed",
    "rx_rho_um",
    "rx_theta_rad",
    "rx_radius_um",
    "pixel_um",
    "snapshot_times_s",
    "field_solver",
    "max_nrmse",
    "max_peak_rel_err",
    "out_dir",
];

/// Read and validate a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parse and validate config text. An empty text gives [`RunConfig::default`].
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut lines: HashMap<&'static str, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                key: line.to_string(),
                reason: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            return Err(Error::Config {
                line: line_no,
                key: key.to_string(),
                reason: "unknown key".into(),
            });
        };
        if let Some(first) = lines.insert(known, line_no) {
            return Err(Error::Config {
                line: line_no,
                key: key.to_string(),
                reason: format!("already set on line {first}"),
            });
        }
        cfg.set(known, value).map_err(|reason| Error::Config {
            line: line_no,
            key: key.to_string(),
            reason,
        })?;
    }
    cfg.check().map_err(|(key, reason)| Error::Config {
        line: lines.get(key).copied().unwrap_or(0),
        key: key.to_string(),
        reason,
    })?;
    Ok(cfg)
}

fn float(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("malformed number `{v}`"))
}

fn uint<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>()
        .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn float_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| float(s.trim())).collect()
}

fn optional_uint(v: &str) -> std::result::Result<Option<usize>, String> {
    if v == "none" {
        Ok(None)
    } else {
        uint(v).map(Some)
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "d_rho" => self.channel.d_rho = float(v)?,
            "d_theta" => self.channel.d_theta = float(v)?,
            "rho_c_um" => self.channel.rho_c_um = float(v)?,
            "k_d" => self.channel.k_d = float(v)?,
            "k_f" => self.channel.k_f = float(v)?,
            "tx_rho_um" => self.channel.tx_rho_um = float(v)?,
            "tx_theta_rad" => self.channel.tx_theta_rad = float(v)?,
            "t0_s" => self.channel.t0_s = float(v)?,
            "gfc_preset" => {
                self.gfc.preset = GfcPreset::parse(v)
                    .ok_or_else(|| format!("expected default, paper or auto, got `{v}`"))?
            }
            "n_max" => self.gfc.n_max = optional_uint(v)?,
            "m_max" => self.gfc.m_max = optional_uint(v)?,
            "gfc_tol" => self.gfc.tol = float(v)?,
            "n_molecules" => self.pbs.n_molecules = uint(v)?,
            "dt_s" => self.pbs.dt_s = float(v)?,
            "t_end_s" => self.pbs.t_end_s = float(v)?,
            "sample_every" => self.pbs.sample_every = uint(v)?,
            "n_realizations" => self.pbs.n_realizations = uint(v)?,
            "seed" => self.pbs.seed = uint(v)?,
            "rx_rho_um" => self.receivers.rho_um = float_list(v)?,
            "rx_theta_rad" => self.receivers.theta_rad = float_list(v)?,
            "rx_radius_um" => self.receivers.radius_um = float(v)?,
            "pixel_um" => self.field.pixel_um = float(v)?,
            "snapshot_times_s" => self.field.snapshot_times_s = float_list(v)?,
            "field_solver" => {
                self.field.solver = FieldSolver::parse(v)
                    .ok_or_else(|| format!("expected gfc, pbs or both, got `{v}`"))?
            }
            "max_nrmse" => self.thresholds.max_nrmse = float(v)?,
            "max_peak_rel_err" => self.thresholds.max_peak_rel_err = float(v)?,
            "out_dir" => {
                if v.is_empty() {
                    return Err("must not be empty".into());
                }
                self.out_dir = PathBuf::from(v)
            }
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    /// Cross-field checks. Errors carry the key to blame.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let c = &self.channel;
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err((key, format!("must be > 0, got {v}")))
            }
        };
        let non_negative = |key: &'static str, v: f64| {
            if v >= 0.0 {
                Ok(())
            } else {
                Err((key, format!("must be >= 0, got {v}")))
            }
        };
        positive("d_rho", c.d_rho)?;
        positive("d_theta", c.d_theta)?;
        positive("rho_c_um", c.rho_c_um)?;
        non_negative("k_d", c.k_d)?;
        non_negative("k_f", c.k_f)?;
        non_negative("tx_rho_um", c.tx_rho_um)?;
        if c.tx_rho_um > c.rho_c_um {
            return Err((
                "tx_rho_um",
                format!(
                    "{} um lies outside the disk of radius {} um",
                    c.tx_rho_um, c.rho_c_um
                ),
            ));
        }
        if !(self.gfc.tol > 0.0 && self.gfc.tol < 1.0) {
            return Err((
                "gfc_tol",
                format!("must lie in (0, 1), got {}", self.gfc.tol),
            ));
        }
        if self.gfc.m_max == Some(0) {
            return Err(("m_max", "must be >= 1".into()));
        }
        positive("dt_s", self.pbs.dt_s)?;
        if self.pbs.sample_every == 0 {
            return Err(("sample_every", "must be >= 1".into()));
        }
        if self.pbs.n_realizations == 0 {
            return Err(("n_realizations", "must be >= 1".into()));
        }
        if self.pbs_config().n_steps() < self.pbs.sample_every {
            return Err((
                "t_end_s",
                format!("the run from t0 to {} s holds no sample", self.pbs.t_end_s),
            ));
        }
        let r = &self.receivers;
        if r.theta_rad.len() != 1 && r.theta_rad.len() != r.rho_um.len() {
            return Err((
                "rx_theta_rad",
                format!(
                    "give one angle or one per receiver ({} receivers)",
                    r.rho_um.len()
                ),
            ));
        }
        positive("rx_radius_um", r.radius_um)?;
        for &rho in &r.rho_um {
            if !(rho >= 0.0 && rho <= c.rho_c_um) {
                return Err((
                    "rx_rho_um",
                    format!("receiver center {rho} um lies outside the disk"),
                ));
            }
        }
        positive("pixel_um", self.field.pixel_um)?;
        for &t in &self.field.snapshot_times_s {
            if !(t > c.t0_s) {
                return Err(("snapshot_times_s", format!("{t} s must lie after t0")));
            }
        }
        positive("max_nrmse", self.thresholds.max_nrmse)?;
        positive("max_peak_rel_err", self.thresholds.max_peak_rel_err)?;
        Ok(())
    }

    /// Re-run the checks done by [`parse_config_str`], e.g. after applying
    /// command-line overrides.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(key, reason)| Error::Config {
            line: 0,
            key: key.to_string(),
            reason,
        })
    }

    /// Text that parses back to `self`. Every key is written.
    pub fn serialize(&self) -> String {
        let c = &self.channel;
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |n| n.to_string());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("d_rho", format!("{:?}", c.d_rho));
        kv("d_theta", format!("{:?}", c.d_theta));
        kv("rho_c_um", format!("{:?}", c.rho_c_um));
        kv("k_d", format!("{:?}", c.k_d));
        kv("k_f", format!("{:?}", c.k_f));
        kv("tx_rho_um", format!("{:?}", c.tx_rho_um));
        kv("tx_theta_rad", format!("{:?}", c.tx_theta_rad));
        kv("t0_s", format!("{:?}", c.t0_s));
        kv("gfc_preset", self.gfc.preset.name().to_string());
        kv("n_max", opt(self.gfc.n_max));
        kv("m_max", opt(self.gfc.m_max));
        kv("gfc_tol", format!("{:?}", self.gfc.tol));
        kv("n_molecules", self.pbs.n_molecules.to_string());
        kv("dt_s", format!("{:?}", self.pbs.dt_s));
        kv("t_end_s", format!("{:?}", self.pbs.t_end_s));
        kv("sample_every", self.pbs.sample_every.to_string());
        kv("n_realizations", self.pbs.n_realizations.to_string());
        kv("seed", self.pbs.seed.to_string());
        kv("rx_rho_um", join(&self.receivers.rho_um));
        kv("rx_theta_rad", join(&self.receivers.theta_rad));
        kv("rx_radius_um", format!("{:?}", self.receivers.radius_um));
        kv("pixel_um", format!("{:?}", self.field.pixel_um));
        kv("snapshot_times_s", join(&self.field.snapshot_times_s));
        kv("field_solver", self.field.solver.name().to_string());
        kv("max_nrmse", format!("{:?}", self.thresholds.max_nrmse));
        kv(
            "max_peak_rel_err",
            format!("{:?}", self.thresholds.max_peak_rel_err),
        );
        kv("out_dir", self.out_dir.display().to_string());
        s
    }

    /// Channel in SI units.
    pub fn channel_params(&self) -> ChannelParams {
        let c = &self.channel;
        ChannelParams {
            d_rho: c.d_rho,
            d_theta: c.d_theta,
            rho_c: c.rho_c_um / UM_PER_M,
            k_d: c.k_d,
            k_f: c.k_f,
            tx_rho: c.tx_rho_um / UM_PER_M,
            tx_theta: c.tx_theta_rad,
            t0: c.t0_s,
        }
    }

    pub fn pbs_config(&self) -> PbsConfig {
        PbsConfig {
            params: self.channel_params(),
            n_molecules: self.pbs.n_molecules,
            dt: self.pbs.dt_s,
            t_end: self.pbs.t_end_s,
            sample_every: self.pbs.sample_every,
            n_realizations: self.pbs.n_realizations,
            seed: self.pbs.seed,
        }
    }

    pub fn receivers(&self) -> Vec<ReceiverSpec> {
        let r = &self.receivers;
        r.rho_um
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let theta = if r.theta_rad.len() == 1 {
                    r.theta_rad[0]
                } else {
                    r.theta_rad[i]
                };
                ReceiverSpec::new(rho / UM_PER_M, theta, r.radius_um / UM_PER_M)
            })
            .collect()
    }

    /// Times at which series are reported: every `sample_every` steps.
    pub fn sample_times(&self) -> Vec<f64> {
        self.pbs_config().sample_times()
    }

    pub fn field_spec(&self) -> FieldSpec {
        FieldSpec::covering(
            &self.channel_params(),
            self.field.pixel_um / UM_PER_M,
            self.field.snapshot_times_s.clone(),
        )
    }

    /// Series truncation for evaluations no earlier than `t_first`.
    pub fn truncation(&self, t_first: f64) -> Result<Truncation> {
        let base = match self.gfc.preset {
            GfcPreset::Default => Truncation::default(),
            GfcPreset::Paper => Truncation::paper(),
            GfcPreset::Auto => {
                let p = self.channel_params();
                Truncation::for_time(&p, t_first - p.t0, self.gfc.tol)?
            }
        };
        Ok(Truncation::new(
            self.gfc.n_max.unwrap_or(base.n_max),
            self.gfc.m_max.unwrap_or(base.m_max),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::params::{RHO_C_DEFAULT, RX_RADIUS_DEFAULT};

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let p = cfg.channel_params();
        assert_eq!(p, ChannelParams::default());
        assert_eq!(cfg.receivers().len(), 4);
        assert_eq!(
            cfg.receivers()[0],
            ReceiverSpec::new(20e-6, 0.0, RX_RADIUS_DEFAULT)
        );
        assert_eq!(p.rho_c, RHO_C_DEFAULT);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg =
            parse_config_str("# anisotropic\n\n d_theta = 5e-11  # tenfold slower\n").unwrap();
        assert_eq!(cfg.channel_params(), ChannelParams::anisotropic());
    }

    #[test]
    fn tx_outside_disk_names_key_and_line() {
        let err = parse_config_str("rho_c_um = 100\ntx_rho_um = 150\n").unwrap_err();
        match err {
            Error::Config { line, key, .. } => {
                assert_eq!((line, key.as_str()), (2, "tx_rho_um"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config_str("d_rho = 5e-10\nrho_c = 100\n").unwrap_err();
        assert!(
            matches!(err, Error::Config { line: 2, ref key, .. } if key == "rho_c"),
            "{err}"
        );
    }

    #[test]
    fn malformed_values_are_rejected() {
        for text in [
            "k_d = fast",
            "seed = -1",
            "rx_rho_um = 20, x",
            "gfc_preset = huge",
            "k_d",
            "k_d = 0.1\nk_d = 0.2",
            "dt_s = 0",
            "rx_theta_rad = 0, 1",
            "snapshot_times_s = -1",
        ] {
            assert!(parse_config_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn truncation_presets() {
        let mut cfg = RunConfig::default();
        cfg.gfc.preset = GfcPreset::Paper;
        assert_eq!(cfg.truncation(0.05).unwrap(), Truncation::new(2, 4));
        cfg.gfc.preset = GfcPreset::Default;
        cfg.gfc.m_max = Some(12);
        assert_eq!(cfg.truncation(0.05).unwrap(), Truncation::new(8, 12));
        cfg.gfc.preset = GfcPreset::Auto;
        cfg.gfc.m_max = None;
        let t = cfg.truncation(0.05).unwrap();
        assert!(t.n_max > 8 && t.m_max > 8, "{t:?}");
    }

    #[test]
    fn serialize_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.channel.d_theta = 5e-11;
        cfg.channel.tx_rho_um = 100.0 / 3.0;
        cfg.channel.tx_theta_rad = 0.1;
        cfg.gfc.n_max = Some(17);
        cfg.receivers.rho_um = vec![10.0, 30.0, 70.0, 90.0];
        cfg.receivers.theta_rad = vec![0.0, 0.5, 1.0, 1.5];
        cfg.field.snapshot_times_s = vec![];
        cfg.field.solver = FieldSolver::Both;
        cfg.out_dir = PathBuf::from("runs/fig 3");
        let text = cfg.serialize();
        assert_eq!(parse_config_str(&text).unwrap(), cfg);
    }
}
