//! Uniform linear array geometry and near-field steering vectors.
//!
//! Elements sit on the x-axis at `t_n = [n·d, 0]`, with the index offsets `n`
//! centred on zero so the phase reference is the array centre for both odd
//! and even element counts. A point at range `r` and angle `θ` (measured from
//! the array axis) has element distance
//!
//! ```text
//! r_n = sqrt(r² + n²d² − 2·r·n·d·cosθ) ≈ r − n·d·cosθ + n²d²/(2r)
//! ```
//!
//! and the steering entry uses the second-order (Fresnel) form of that phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry of an `N`-element uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    n_antennas: usize,
    carrier_freq: f64,
    spacing: f64,
}

impl ArrayConfig {
    /// Half-wavelength array at `carrier_freq` Hz.
    pub fn half_wavelength(n_antennas: usize, carrier_freq: f64) -> Result<Self> {
        if !(carrier_freq > 0.0 && carrier_freq.is_finite()) {
            return Err(Error::invalid(
                "carrier_freq",
                format!("must be > 0, got {carrier_freq}"),
            ));
        }
        Self::with_spacing(n_antennas, carrier_freq, SPEED_OF_LIGHT / carrier_freq / 2.0)
    }

    pub fn with_spacing(n_antennas: usize, carrier_freq: f64, spacing: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::invalid("n_antennas", "must be at least 1"));
        }
        if !(carrier_freq > 0.0 && carrier_freq.is_finite()) {
            return Err(Error::invalid(
                "carrier_freq",
                format!("must be > 0, got {carrier_freq}"),
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("spacing", format!("must be > 0, got {spacing}")));
        }
        Ok(Self {
            n_antennas,
            carrier_freq,
            spacing,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn aperture(&self) -> f64 {
        (self.n_antennas - 1) as f64 * self.spacing
    }
}

/// Point in the array plane, polar about the array centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPosition {
    range: f64,
    angle: f64,
}

impl PolarPosition {
    /// `range > 0` and `angle` strictly inside `(0, π)`; endfire is rejected
    /// because the second-order distance expansion is poorest there.
    pub fn new(range: f64, angle: f64) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::invalid("range", format!("must be > 0, got {range}")));
        }
        if !(angle > 0.0 && angle < std::f64::consts::PI) {
            return Err(Error::invalid("angle", format!("must lie in (0, π), got {angle}")));
        }
        Ok(Self { range, angle })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Cartesian coordinates `[r·cosθ, r·sinθ]`.
    pub fn cartesian(&self) -> [f64; 2] {
        [self.range * self.angle.cos(), self.range * self.angle.sin()]
    }
}

/// Element index offsets `m − (N−1)/2`, `m = 0..N`.
pub fn element_index_offsets(cfg: &ArrayConfig) -> Vec<f64> {
    let centre = (cfg.n_antennas - 1) as f64 / 2.0;
    (0..cfg.n_antennas).map(|m| m as f64 - centre).collect()
}

pub fn exact_distance(cfg: &ArrayConfig, pos: &PolarPosition, n: f64) -> f64 {
    let r = pos.range;
    let nd = n * cfg.spacing;
    (r * r + nd * nd - 2.0 * r * nd * pos.angle.cos()).sqrt()
}

pub fn fresnel_distance(cfg: &ArrayConfig, pos: &PolarPosition, n: f64) -> f64 {
    let r = pos.range;
    let nd = n * cfg.spacing;
    r - nd * pos.angle.cos() + nd * nd / (2.0 * r)
}

/// Near-field steering vector `a_n = exp(−j·2π/λ·(r_n − r))` with `r_n` from
/// the Fresnel expansion. The centre element (when present) is exactly `1`.
pub fn steering_vector(cfg: &ArrayConfig, pos: &PolarPosition) -> CVector {
    let k = 2.0 * std::f64::consts::PI / cfg.wavelength();
    let r = pos.range;
    let cos = pos.angle.cos();
    let entries = element_index_offsets(cfg).into_iter().map(|n| {
        let nd = n * cfg.spacing;
        // r_n − r, formed without the leading r to avoid cancellation.
        let excess = -nd * cos + nd * nd / (2.0 * r);
        C64::from_polar(1.0, -k * excess)
    });
    CVector::from_iterator(cfg.n_antennas, entries)
}

/// Far-field (plane-wave) steering vector `exp(j·2π/λ·n·d·cosθ)`.
pub fn far_field_steering_vector(cfg: &ArrayConfig, angle: f64) -> CVector {
    let k = 2.0 * std::f64::consts::PI / cfg.wavelength();
    let entries = element_index_offsets(cfg)
        .into_iter()
        .map(|n| C64::from_polar(1.0, k * n * cfg.spacing * angle.cos()));
    CVector::from_iterator(cfg.n_antennas, entries)
}

/// Fraunhofer distance `2·D²/λ`.
pub fn fraunhofer_distance(cfg: &ArrayConfig) -> f64 {
    2.0 * cfg.aperture().powi(2) / cfg.wavelength()
}
