//! JSON scenario configuration with defaults, strict key checking and
//! field-level validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::comm::RelayMode;
use crate::error::{Error, Result};
use crate::propagation::{ClutterStatistics, Fading, PathLossModel, ReflectivityPhase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub array: ArraySection,
    pub scene: SceneSection,
    pub path_loss: PathLossModel,
    pub channels: ChannelSection,
    pub power_sweep: PowerSweepSection,
    pub detection: DetectionSection,
    pub targets: TargetSection,
    pub optimizer: OptimizerSection,
    pub tradeoff: TradeoffSection,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 2024,
            array: ArraySection::default(),
            scene: SceneSection::default(),
            path_loss: PathLossModel::FreeSpace,
            channels: ChannelSection::default(),
            power_sweep: PowerSweepSection::default(),
            detection: DetectionSection::default(),
            targets: TargetSection::default(),
            optimizer: OptimizerSection::default(),
            tradeoff: TradeoffSection::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub n_antennas: usize,
    pub carrier_ghz: f64,
    /// Element spacing in metres; half a wavelength when absent.
    pub spacing_m: Option<f64>,
}

impl Default for ArraySection {
    fn default() -> Self {
        ArraySection {
            n_antennas: 5,
            carrier_ghz: 28.0,
            spacing_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClutterLevel {
    None,
    Light,
    Intense,
}

impl ClutterLevel {
    pub const ALL: [ClutterLevel; 3] = [ClutterLevel::None, ClutterLevel::Light, ClutterLevel::Intense];

    pub fn label(self) -> &'static str {
        match self {
            ClutterLevel::None => "none",
            ClutterLevel::Light => "light",
            ClutterLevel::Intense => "intense",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    pub clutter_count: usize,
    pub clutter_max_range_m: f64,
    pub sigma_light: f64,
    pub sigma_intense: f64,
    /// Clutter level of the single-scene experiments (optimize, tradeoff).
    pub clutter: ClutterLevel,
    pub angle_exclusion_rad: f64,
    pub target_range_m: f64,
    /// Fixed target angle; drawn uniformly from the min/max window when absent.
    pub target_angle_deg: Option<f64>,
    pub target_angle_min_deg: f64,
    pub target_angle_max_deg: f64,
    pub rcs_scale: f64,
    pub reflectivity_phase: ReflectivityPhase,
    /// Clutter amplitude law in detection trials.
    pub clutter_statistics: ClutterStatistics,
    /// Scene realisation used by the single-scene experiments.
    pub realization: u64,
}

impl Default for SceneSection {
    fn default() -> Self {
        SceneSection {
            clutter_count: 3,
            clutter_max_range_m: 5.0,
            sigma_light: 0.1,
            sigma_intense: 0.8,
            clutter: ClutterLevel::Intense,
            angle_exclusion_rad: 0.05,
            target_range_m: 5.0,
            target_angle_deg: None,
            target_angle_min_deg: 30.0,
            target_angle_max_deg: 150.0,
            rcs_scale: 316.0,
            reflectivity_phase: ReflectivityPhase::Fixed0,
            clutter_statistics: ClutterStatistics::Gaussian,
            realization: 0,
        }
    }
}

impl SceneSection {
    pub fn sigma(&self, level: ClutterLevel) -> f64 {
        match level {
            ClutterLevel::None => 0.0,
            ClutterLevel::Light => self.sigma_light,
            ClutterLevel::Intense => self.sigma_intense,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodePosition {
    pub range_m: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub destination: NodePosition,
    pub relay: NodePosition,
    pub fading: Fading,
    pub noise_var_dest_w: f64,
    pub noise_var_relay_w: f64,
    pub radar_noise_var_w: f64,
    pub relay_power_w: f64,
    pub relay_mode: RelayMode,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            destination: NodePosition {
                range_m: 30.0,
                angle_deg: 45.0,
            },
            relay: NodePosition {
                range_m: 15.0,
                angle_deg: 120.0,
            },
            fading: Fading::Los,
            noise_var_dest_w: 1e-12,
            noise_var_relay_w: 1e-12,
            radar_noise_var_w: 1e-12,
            relay_power_w: 0.1,
            relay_mode: RelayMode::NoiseOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    /// Evenly spaced in dBm.
    Log,
    /// Evenly spaced in watts.
    Linear,
}

/// Evenly spaced power grid in watts between two dBm bounds.
pub fn power_grid_w(min_dbm: f64, max_dbm: f64, points: usize, scale: SweepScale) -> Vec<f64> {
    let (lo, hi) = (dbm_to_w(min_dbm), dbm_to_w(max_dbm));
    (0..points)
        .map(|i| {
            let t = if points == 1 {
                0.0
            } else {
                i as f64 / (points - 1) as f64
            };
            match scale {
                SweepScale::Log => dbm_to_w(min_dbm + t * (max_dbm - min_dbm)),
                SweepScale::Linear => lo + t * (hi - lo),
            }
        })
        .collect()
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSweepSection {
    pub min_dbm: f64,
    pub max_dbm: f64,
    pub points: usize,
    pub scale: SweepScale,
    pub radar_fraction: f64,
    pub realizations: u64,
    pub antenna_counts: Vec<usize>,
    pub carriers_ghz: Vec<f64>,
}

impl Default for PowerSweepSection {
    fn default() -> Self {
        PowerSweepSection {
            min_dbm: -10.0,
            max_dbm: 40.0,
            points: 26,
            scale: SweepScale::Log,
            radar_fraction: 0.5,
            realizations: 100,
            antenna_counts: vec![5, 10],
            carriers_ghz: vec![2.8, 28.0],
        }
    }
}

impl PowerSweepSection {
    pub fn grid_w(&self) -> Vec<f64> {
        power_grid_w(self.min_dbm, self.max_dbm, self.points, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub eta: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub kappa_points: usize,
    pub trials: u64,
    pub powers_dbm: Vec<f64>,
    pub radar_fraction: f64,
    /// Also report the false-alarm expression with the target mean in the
    /// numerator, next to the simulated rate.
    pub shifted_pfa: bool,
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            eta: 1e-6,
            kappa_min: 0.0,
            kappa_max: 60.0,
            kappa_points: 21,
            trials: 100_000,
            powers_dbm: vec![5.0, 10.0, 15.0],
            radar_fraction: 0.5,
            shifted_pfa: false,
        }
    }
}

impl DetectionSection {
    pub fn kappa_grid(&self) -> Vec<f64> {
        if self.kappa_points == 1 {
            return vec![self.kappa_min];
        }
        (0..self.kappa_points)
            .map(|i| self.kappa_min + (self.kappa_max - self.kappa_min) * i as f64 / (self.kappa_points - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub rate_target: f64,
    pub pfa_max: f64,
    pub pd_min: f64,
    pub p_max_w: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        TargetSection {
            rate_target: 5.0,
            pfa_max: 1e-6,
            pd_min: 0.6,
            p_max_w: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub power_points: usize,
    pub rho_points: usize,
    pub kappa_points: usize,
    /// Threshold search half-width in units of `σ² + |μ₁|²`.
    pub kappa_span: f64,
    /// Bisection tolerance as a fraction of `p_max`.
    pub tol_fraction: f64,
    /// Lowest coarse-grid power as a fraction of `p_max`.
    pub p_min_fraction: f64,
    /// Radar power fraction held fixed instead of optimised.
    pub fixed_rho: Option<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            power_points: 64,
            rho_points: 21,
            kappa_points: 101,
            kappa_span: 10.0,
            tol_fraction: 1e-3,
            p_min_fraction: 1e-6,
            fixed_rho: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TradeoffSection {
    pub min_dbm: f64,
    pub max_dbm: f64,
    pub points: usize,
}

impl Default for TradeoffSection {
    fn default() -> Self {
        TradeoffSection {
            min_dbm: -20.0,
            max_dbm: 30.0,
            points: 51,
        }
    }
}

fn check(ok: bool, field: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn positive(value: f64, field: &str) -> Result<()> {
    check(
        value > 0.0 && value.is_finite(),
        field,
        format!("must be a positive finite number, got {value}"),
    )
}

fn probability(value: f64, field: &str) -> Result<()> {
    check(
        (0.0..=1.0).contains(&value),
        field,
        format!("must lie in [0, 1], got {value}"),
    )
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.array;
        check(a.n_antennas >= 1, "array.n_antennas", "must be at least 1")?;
        positive(a.carrier_ghz, "array.carrier_ghz")?;
        if let Some(d) = a.spacing_m {
            positive(d, "array.spacing_m")?;
        }

        let s = &self.scene;
        check(
            s.clutter_max_range_m > crate::propagation::CLUTTER_MIN_RANGE && s.clutter_max_range_m.is_finite(),
            "scene.clutter_max_range_m",
            format!(
                "must exceed {} m, got {}",
                crate::propagation::CLUTTER_MIN_RANGE,
                s.clutter_max_range_m
            ),
        )?;
        check(
            s.sigma_light >= 0.0 && s.sigma_light.is_finite(),
            "scene.sigma_light",
            "must be >= 0",
        )?;
        check(
            s.sigma_intense >= 0.0 && s.sigma_intense.is_finite(),
            "scene.sigma_intense",
            "must be >= 0",
        )?;
        check(
            s.angle_exclusion_rad >= 0.0,
            "scene.angle_exclusion_rad",
            "must be >= 0",
        )?;
        positive(s.target_range_m, "scene.target_range_m")?;
        if let Some(t) = s.target_angle_deg {
            check(
                t > 0.0 && t < 180.0,
                "scene.target_angle_deg",
                format!("must lie in (0, 180), got {t}"),
            )?;
        }
        check(
            s.target_angle_min_deg > 0.0
                && s.target_angle_max_deg < 180.0
                && s.target_angle_min_deg < s.target_angle_max_deg,
            "scene.target_angle_min_deg",
            "target angle window must satisfy 0 < min < max < 180",
        )?;
        check(
            s.rcs_scale >= 0.0 && s.rcs_scale.is_finite(),
            "scene.rcs_scale",
            "must be >= 0",
        )?;

        if let PathLossModel::UmiLos { h_bs, h_ut } = self.path_loss {
            check(h_bs > 1.0 && h_ut > 1.0, "path_loss", "UMi heights must exceed 1 m")?;
        }

        let c = &self.channels;
        for (name, node) in [("channels.destination", c.destination), ("channels.relay", c.relay)] {
            check(
                node.range_m > 0.0 && node.range_m.is_finite(),
                name,
                "range_m must be > 0",
            )?;
            check(
                node.angle_deg > 0.0 && node.angle_deg < 180.0,
                name,
                "angle_deg must lie in (0, 180)",
            )?;
        }
        positive(c.noise_var_dest_w, "channels.noise_var_dest_w")?;
        positive(c.noise_var_relay_w, "channels.noise_var_relay_w")?;
        positive(c.radar_noise_var_w, "channels.radar_noise_var_w")?;
        positive(c.relay_power_w, "channels.relay_power_w")?;

        let p = &self.power_sweep;
        check(
            p.min_dbm < p.max_dbm,
            "power_sweep.min_dbm",
            "must be below power_sweep.max_dbm",
        )?;
        check(p.points >= 2, "power_sweep.points", "must be at least 2")?;
        probability(p.radar_fraction, "power_sweep.radar_fraction")?;
        check(p.realizations >= 1, "power_sweep.realizations", "must be at least 1")?;
        check(
            !p.antenna_counts.is_empty() && p.antenna_counts.iter().all(|&n| n >= 1),
            "power_sweep.antenna_counts",
            "must be a non-empty list of positive counts",
        )?;
        check(
            !p.carriers_ghz.is_empty() && p.carriers_ghz.iter().all(|&f| f > 0.0 && f.is_finite()),
            "power_sweep.carriers_ghz",
            "must be a non-empty list of positive frequencies",
        )?;

        let d = &self.detection;
        positive(d.eta, "detection.eta")?;
        check(d.kappa_points >= 1, "detection.kappa_points", "must be at least 1")?;
        check(
            d.kappa_min < d.kappa_max || (d.kappa_points == 1 && d.kappa_min == d.kappa_max),
            "detection.kappa_min",
            "must be below detection.kappa_max",
        )?;
        check(d.trials >= 1, "detection.trials", "must be at least 1")?;
        check(!d.powers_dbm.is_empty(), "detection.powers_dbm", "must not be empty")?;
        check(
            d.powers_dbm.iter().all(|x| x.is_finite()),
            "detection.powers_dbm",
            "must be finite",
        )?;
        probability(d.radar_fraction, "detection.radar_fraction")?;

        let t = &self.targets;
        check(
            t.rate_target >= 0.0 && t.rate_target.is_finite(),
            "targets.rate_target",
            "must be >= 0",
        )?;
        probability(t.pfa_max, "targets.pfa_max")?;
        probability(t.pd_min, "targets.pd_min")?;
        positive(t.p_max_w, "targets.p_max_w")?;

        let o = &self.optimizer;
        check(o.power_points >= 2, "optimizer.power_points", "must be at least 2")?;
        check(o.rho_points >= 1, "optimizer.rho_points", "must be at least 1")?;
        check(o.kappa_points >= 2, "optimizer.kappa_points", "must be at least 2")?;
        positive(o.kappa_span, "optimizer.kappa_span")?;
        check(
            o.tol_fraction > 0.0 && o.tol_fraction < 1.0,
            "optimizer.tol_fraction",
            "must lie in (0, 1)",
        )?;
        check(
            o.p_min_fraction > 0.0 && o.p_min_fraction < 1.0,
            "optimizer.p_min_fraction",
            "must lie in (0, 1)",
        )?;
        if let Some(r) = o.fixed_rho {
            probability(r, "optimizer.fixed_rho")?;
        }

        let tr = &self.tradeoff;
        check(
            tr.min_dbm < tr.max_dbm,
            "tradeoff.min_dbm",
            "must be below tradeoff.max_dbm",
        )?;
        check(tr.points >= 1, "tradeoff.points", "must be at least 1")?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON serialisation, hex encoded and cut to
    /// 16 characters. The output directory is left out: it decides where
    /// results go, not what they are.
    pub fn hash(&self) -> String {
        let canonical = ScenarioConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config always serialises");
        let digest = Sha256::digest(&bytes);
        hex::encode(digest)[..16].to_string()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let text = if text.trim().is_empty() { "{}" } else { text };
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serialises")
    }
}

/// Reads, defaults and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_json_str(&text)
}
