//! A fully resolved operating scenario: array, scene, link channels and noise
//! levels, plus the beam and filter construction shared by the optimiser and
//! the experiments.

use rand::Rng;

use crate::array::{steering_vector, ArrayConfig, PolarPosition};
use crate::comm::{link_metrics, BeamformerSet, LinkMetrics, RelayMode};
use crate::detection::{unit_variance_filter, DetectionSetup};
use crate::error::Result;
use crate::experiments::config::{ClutterLevel, NodePosition, ScenarioConfig};
use crate::linalg::CVector;
use crate::propagation::{
    make_clutter_scene, synthesize_comm_channel, synthesize_scalar_channel, target_reflectivity, ChannelSet,
    ClutterStatistics, Scene, Target,
};
use crate::radar;
use crate::stats::{derive_stream, streams};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub scene: Scene,
    pub channels: ChannelSet,
    pub relay_power: f64,
    pub relay_mode: RelayMode,
    /// Radar receiver noise power in watts; radar quantities are computed in
    /// units of it.
    pub radar_noise_var: f64,
    pub clutter_stats: ClutterStatistics,
    target_steering: CVector,
}

fn polar(node: NodePosition) -> Result<PolarPosition> {
    PolarPosition::new(node.range_m, node.angle_deg.to_radians())
}

impl Scenario {
    /// Scenario for the configured array, clutter level and realisation.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Scenario> {
        Scenario::build(
            cfg,
            cfg.array.n_antennas,
            cfg.array.carrier_ghz,
            cfg.scene.clutter,
            cfg.scene.realization,
        )
    }

    /// Scenario for realisation `realization` with the array and clutter level
    /// overridden. Geometry and phases come from a stream keyed only by the
    /// seed and realisation, so every array/carrier/clutter cell of a sweep
    /// sees the same placements.
    pub fn build(
        cfg: &ScenarioConfig,
        n_antennas: usize,
        carrier_ghz: f64,
        level: ClutterLevel,
        realization: u64,
    ) -> Result<Scenario> {
        let freq = carrier_ghz * 1e9;
        let array = match cfg.array.spacing_m {
            Some(d) => ArrayConfig::with_spacing(n_antennas, freq, d)?,
            None => ArrayConfig::half_wavelength(n_antennas, freq)?,
        };
        let sc = &cfg.scene;
        let mut rng = derive_stream(cfg.seed, streams::SCENE + realization);
        let drawn_angle = (sc.target_angle_min_deg
            + rng.random::<f64>() * (sc.target_angle_max_deg - sc.target_angle_min_deg))
            .to_radians();
        let theta = sc.target_angle_deg.map_or(drawn_angle, f64::to_radians);
        let position = PolarPosition::new(sc.target_range_m, theta)?;
        let reflectivity = target_reflectivity(
            &cfg.path_loss,
            freq,
            sc.target_range_m,
            sc.rcs_scale,
            &mut rng,
            sc.reflectivity_phase,
        )?;
        let clutter = make_clutter_scene(
            &mut rng,
            sc.clutter_count,
            sc.clutter_max_range_m,
            sc.sigma(level),
            theta,
            sc.angle_exclusion_rad,
        )?;
        let scene = Scene {
            target: Target { position, reflectivity },
            clutter: if level == ClutterLevel::None {
                Vec::new()
            } else {
                clutter
            },
        };

        let ch = &cfg.channels;
        let mut crng = derive_stream(cfg.seed, streams::CHANNEL + realization);
        let dest = polar(ch.destination)?;
        let relay = polar(ch.relay)?;
        let h_sd = synthesize_comm_channel(&array, &dest, &cfg.path_loss, ch.fading, &mut crng)?;
        let h_sr = synthesize_comm_channel(&array, &relay, &cfg.path_loss, ch.fading, &mut crng)?;
        let [dx, dy] = dest.cartesian();
        let [rx, ry] = relay.cartesian();
        let h_rd = synthesize_scalar_channel(freq, (dx - rx).hypot(dy - ry), &cfg.path_loss, ch.fading, &mut crng)?;
        let channels = ChannelSet::new(h_sd, h_sr, h_rd, ch.noise_var_dest_w, ch.noise_var_relay_w)?;

        let target_steering = steering_vector(&array, &position);
        Ok(Scenario {
            array,
            scene,
            channels,
            relay_power: ch.relay_power_w,
            relay_mode: ch.relay_mode,
            radar_noise_var: ch.radar_noise_var_w,
            clutter_stats: sc.clutter_statistics,
            target_steering,
        })
    }

    /// Copy with the scene's clutter replaced.
    pub fn with_scene(&self, scene: Scene) -> Scenario {
        let mut s = self.clone();
        s.target_steering = steering_vector(&s.array, &scene.target.position);
        s.scene = scene;
        s
    }

    pub fn target_steering(&self) -> &CVector {
        &self.target_steering
    }

    /// Matched beams in watts: `(1−ρ)·P` toward the destination, `ρ·P` toward
    /// the target.
    pub fn beams(&self, power: f64, rho: f64) -> Result<BeamformerSet> {
        BeamformerSet::matched(&self.channels.h_sd, &self.target_steering, power, rho)
    }

    pub fn link(&self, beams: &BeamformerSet) -> Result<LinkMetrics> {
        link_metrics(&self.channels, beams, self.relay_power, self.relay_mode)
    }

    /// Beams rescaled to units of the radar noise power.
    pub fn radar_beams(&self, beams: &BeamformerSet) -> BeamformerSet {
        beams.scaled(1.0 / self.radar_noise_var.sqrt())
    }

    /// Symbol-averaged optimum SCNR (linear).
    pub fn average_scnr(&self, beams: &BeamformerSet) -> Result<f64> {
        radar::average_scnr(&self.array, &self.radar_beams(beams), &self.scene)
    }

    /// Known transmit waveform of a detection experiment (all symbols one),
    /// in radar noise units.
    pub fn detection_waveform(&self, beams: &BeamformerSet) -> CVector {
        self.radar_beams(beams).unit_waveform()
    }

    /// Trial set-up with the unit-variance clutter-aware filter.
    pub fn detection_setup(&self, beams: &BeamformerSet) -> Result<DetectionSetup> {
        let x = self.detection_waveform(beams);
        let w = unit_variance_filter(&self.array, &self.scene, &x)?;
        DetectionSetup::new(&self.array, &self.scene, &x, &w, self.clutter_stats)
    }

    /// `|μ₁|²` of the unit-variance filter, which equals the optimum SCNR for
    /// the known waveform. Zero when nothing reaches the target.
    pub fn detection_snr(&self, beams: &BeamformerSet) -> Result<f64> {
        let x = self.detection_waveform(beams);
        let cov = radar::conditioned_covariance(&self.array, &self.scene, &x)?;
        let target = radar::response_matrix(&self.array, &self.scene.target.position);
        Ok(radar::scnr_at_optimum(
            self.scene.target.reflectivity,
            &target,
            &cov,
            &x,
        ))
    }
}
