//! Path loss, communication channel synthesis, target reflectivity and random
//! clutter scenes.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArrayConfig, PolarPosition, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, CVector, C64};

/// Clutter never sits closer than this to the array (metres).
pub const CLUTTER_MIN_RANGE: f64 = 0.5;

/// Large-scale path-loss model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathLossModel {
    /// Friis free-space loss `20·log10(4π·d·f/c)`.
    #[default]
    FreeSpace,
    /// 3GPP TR 38.901 UMi street-canyon line-of-sight, without shadow fading.
    /// `h_bs`/`h_ut` are antenna heights in metres; the 2D link distance is
    /// lifted to 3D with their difference.
    UmiLos { h_bs: f64, h_ut: f64 },
}

impl PathLossModel {
    pub fn umi_los_default() -> Self {
        PathLossModel::UmiLos { h_bs: 10.0, h_ut: 1.5 }
    }
}

/// Path loss in dB at carrier `freq` (Hz) over `dist` metres.
pub fn path_loss_db(model: &PathLossModel, freq: f64, dist: f64) -> Result<f64> {
    if !(dist > 0.0 && dist.is_finite()) {
        return Err(Error::invalid("dist", format!("must be > 0, got {dist}")));
    }
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(Error::invalid("freq", format!("must be > 0, got {freq}")));
    }
    match *model {
        PathLossModel::FreeSpace => Ok(20.0 * (4.0 * PI * dist * freq / SPEED_OF_LIGHT).log10()),
        PathLossModel::UmiLos { h_bs, h_ut } => {
            if !(h_bs > 1.0 && h_ut > 1.0) {
                return Err(Error::invalid("umi heights", "h_bs and h_ut must exceed 1 m"));
            }
            let fc_ghz = freq / 1e9;
            let dh = h_bs - h_ut;
            let d3 = (dist * dist + dh * dh).sqrt();
            // Breakpoint with effective heights h' = h − 1 m.
            let d_bp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * freq / SPEED_OF_LIGHT;
            let pl = if dist <= d_bp {
                32.4 + 21.0 * d3.log10() + 20.0 * fc_ghz.log10()
            } else {
                32.4 + 40.0 * d3.log10() + 20.0 * fc_ghz.log10() - 9.5 * (d_bp * d_bp + dh * dh).log10()
            };
            Ok(pl)
        }
    }
}

/// Amplitude gain `10^(−PL/20)`.
pub fn amplitude_gain(model: &PathLossModel, freq: f64, dist: f64) -> Result<f64> {
    Ok(10f64.powf(-path_loss_db(model, freq, dist)? / 20.0))
}

/// Small-scale fading applied on top of path loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    #[default]
    Los,
    Rayleigh,
}

/// Channel from the array to a single-antenna node at `pos`.
///
/// Line of sight returns `g·a(r, θ)`; Rayleigh draws i.i.d. `CN(0, g²)`
/// entries so that `E‖h‖² = N·g²`.
pub fn synthesize_comm_channel<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    pos: &PolarPosition,
    model: &PathLossModel,
    fading: Fading,
    rng: &mut R,
) -> Result<CVector> {
    let g = amplitude_gain(model, cfg.carrier_freq(), pos.range())?;
    Ok(match fading {
        Fading::Los => steering_vector(cfg, pos) * C64::new(g, 0.0),
        Fading::Rayleigh => CVector::from_fn(cfg.n_antennas(), |_, _| complex_normal(rng) * g),
    })
}

/// Channel between two single-antenna nodes `dist` metres apart.
pub fn synthesize_scalar_channel<R: Rng + ?Sized>(
    freq: f64,
    dist: f64,
    model: &PathLossModel,
    fading: Fading,
    rng: &mut R,
) -> Result<C64> {
    let g = amplitude_gain(model, freq, dist)?;
    Ok(match fading {
        Fading::Los => C64::from_polar(g, -2.0 * PI * dist * freq / SPEED_OF_LIGHT),
        Fading::Rayleigh => complex_normal(rng) * g,
    })
}

/// Phase convention for the target reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectivityPhase {
    #[default]
    Fixed0,
    UniformRandom,
}

/// Round-trip target reflectivity: `|α₀| = rcs_scale · 10^(−2·PL/20)`.
pub fn target_reflectivity<R: Rng + ?Sized>(
    model: &PathLossModel,
    freq: f64,
    range: f64,
    rcs_scale: f64,
    rng: &mut R,
    phase: ReflectivityPhase,
) -> Result<C64> {
    if !(rcs_scale >= 0.0 && rcs_scale.is_finite()) {
        return Err(Error::invalid("rcs_scale", format!("must be >= 0, got {rcs_scale}")));
    }
    let magnitude = rcs_scale * amplitude_gain(model, freq, range)?.powi(2);
    let phi = match phase {
        ReflectivityPhase::Fixed0 => 0.0,
        ReflectivityPhase::UniformRandom => rng.random::<f64>() * 2.0 * PI,
    };
    Ok(C64::from_polar(magnitude, phi))
}

/// Point target with its complex round-trip reflectivity `α₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub position: PolarPosition,
    pub reflectivity: C64,
}

/// One clutter scatterer. `amplitude_scale` is `σ_l`; `phase` is the fixed
/// phase used by the fixed-envelope statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterElement {
    pub position: PolarPosition,
    pub amplitude_scale: f64,
    pub phase: f64,
}

/// Channels of the cooperative link: source→destination `h_sd`, source→relay
/// `h_sr` (both length `N`) and relay→destination `h_rd`, with the receiver
/// noise variances in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_sd: CVector,
    pub h_sr: CVector,
    pub h_rd: C64,
    pub noise_var_dest: f64,
    pub noise_var_relay: f64,
}

impl ChannelSet {
    pub fn new(h_sd: CVector, h_sr: CVector, h_rd: C64, noise_var_dest: f64, noise_var_relay: f64) -> Result<Self> {
        if h_sd.len() != h_sr.len() {
            return Err(Error::invalid(
                "h_sr",
                format!("length {} differs from h_sd length {}", h_sr.len(), h_sd.len()),
            ));
        }
        if !(noise_var_dest > 0.0) {
            return Err(Error::invalid(
                "noise_var_dest",
                format!("must be > 0, got {noise_var_dest}"),
            ));
        }
        if !(noise_var_relay > 0.0) {
            return Err(Error::invalid(
                "noise_var_relay",
                format!("must be > 0, got {noise_var_relay}"),
            ));
        }
        Ok(ChannelSet {
            h_sd,
            h_sr,
            h_rd,
            noise_var_dest,
            noise_var_relay,
        })
    }
}

/// How clutter amplitudes `α_l` are realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClutterStatistics {
    /// `α_l ~ CN(0, σ_l²)`, redrawn for every realisation.
    #[default]
    Gaussian,
    /// `α_l = σ_l·e^{jφ_l}` with the scene's stored phase.
    FixedEnvelope,
}

impl ClutterElement {
    pub fn draw_amplitude<R: Rng + ?Sized>(&self, stats: ClutterStatistics, rng: &mut R) -> C64 {
        match stats {
            ClutterStatistics::Gaussian => complex_normal(rng) * self.amplitude_scale,
            ClutterStatistics::FixedEnvelope => C64::from_polar(self.amplitude_scale, self.phase),
        }
    }
}

/// A single target plus `L` clutter scatterers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub target: Target,
    pub clutter: Vec<ClutterElement>,
}

impl Scene {
    /// Same geometry with every clutter scale replaced by `sigma`.
    pub fn with_clutter_scale(&self, sigma: f64) -> Scene {
        let clutter = self
            .clutter
            .iter()
            .map(|c| ClutterElement {
                amplitude_scale: sigma,
                ..*c
            })
            .collect();
        Scene {
            target: self.target,
            clutter,
        }
    }

    /// Same geometry without any clutter.
    pub fn clutter_free(&self) -> Scene {
        Scene {
            target: self.target,
            clutter: Vec::new(),
        }
    }

    /// Same clutter with the target removed (`α₀ = 0`).
    pub fn without_target(&self) -> Scene {
        Scene {
            target: Target {
                reflectivity: C64::new(0.0, 0.0),
                ..self.target
            },
            clutter: self.clutter.clone(),
        }
    }
}

/// Draws `count` clutter scatterers: range uniform on `(0.5, max_range]`, angle
/// uniform on `(0, π)` minus the window `target_angle ± angle_exclusion`.
pub fn make_clutter_scene<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    max_range: f64,
    sigma_c: f64,
    target_angle: f64,
    angle_exclusion: f64,
) -> Result<Vec<ClutterElement>> {
    if !(max_range > CLUTTER_MIN_RANGE) {
        return Err(Error::invalid(
            "max_range",
            format!("must exceed the {CLUTTER_MIN_RANGE} m minimum clutter range, got {max_range}"),
        ));
    }
    if !(sigma_c >= 0.0 && sigma_c.is_finite()) {
        return Err(Error::invalid("sigma_c", format!("must be >= 0, got {sigma_c}")));
    }
    if !(angle_exclusion >= 0.0) {
        return Err(Error::invalid(
            "angle_exclusion",
            format!("must be >= 0, got {angle_exclusion}"),
        ));
    }
    let below = (target_angle - angle_exclusion).clamp(0.0, PI);
    let above_start = (target_angle + angle_exclusion).clamp(0.0, PI);
    let above = PI - above_start;
    if below + above <= 0.0 {
        return Err(Error::invalid(
            "angle_exclusion",
            "exclusion window covers the whole (0, π) sector",
        ));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let range = max_range - rng.random::<f64>() * (max_range - CLUTTER_MIN_RANGE);
        let u = rng.random::<f64>() * (below + above);
        let angle = if u < below { u } else { above_start + (u - below) };
        let phase = rng.random::<f64>() * 2.0 * PI;
        // Open-interval endpoints have probability ~2^-53; redraw if hit.
        if let Ok(position) = PolarPosition::new(range, angle) {
            out.push(ClutterElement {
                position,
                amplitude_scale: sigma_c,
                phase,
            });
        }
    }
    Ok(out)
}
