//! Gaussian tail probabilities, binomial confidence intervals and seeded
//! random streams.
//!
//! Every random quantity in the simulator is drawn from a [`Stream`] obtained
//! through [`derive_stream`], so a `(master_seed, stream_id)` pair pins the
//! exact sequence of draws on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded random stream handle. Single owner; derive a new one per task.
pub type Stream = ChaCha8Rng;

/// Gaussian upper-tail probability `Q(x) = P[Z > x]`, `Z ~ N(0, 1)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`q_function`]: returns `x` with `Q(x) = p`.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return inverse_q(1.0 - p).map(|x| -x);
    }
    // Tail asymptote as the starting point, then Newton on Q(x) - p.
    // Q is convex on x > 0, so the iteration settles from either side.
    let t = (-2.0 * p.ln()).sqrt();
    let mut x = t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    for _ in 0..64 {
        let step = (q_function(x) - p) / normal_pdf(x);
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Two-sided confidence interval on a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn binomial_ci(successes: u64, trials: u64, level: f64) -> Result<ConfidenceInterval> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    if successes > trials {
        return Err(Error::invalid(
            "successes",
            format!("{successes} exceeds trials {trials}"),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", format!("must lie in (0, 1), got {level}")));
    }
    let z = inverse_q(0.5 * (1.0 - level))?;
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    let mut lo = (centre - half).clamp(0.0, 1.0);
    let mut hi = (centre + half).clamp(0.0, 1.0);
    if successes == 0 {
        lo = 0.0;
    }
    if successes == trials {
        hi = 1.0;
    }
    Ok(ConfidenceInterval { lo, hi, level })
}

/// Derives an independent random stream from a master seed and a stream id.
///
/// The master seed keys a ChaCha8 generator and the id selects its 64-bit
/// stream counter, so distinct ids never share keystream.
pub fn derive_stream(master_seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream-id namespaces, kept disjoint so that e.g. scene `i` and trial `i`
/// never draw from the same stream.
pub mod streams {
    pub const SCENE: u64 = 1 << 56;
    pub const CHANNEL: u64 = 2 << 56;
    pub const TRIAL_H0: u64 = 3 << 56;
    pub const TRIAL_H1: u64 = 4 << 56;
    pub const SNAPSHOT: u64 = 5 << 56;
    pub const SYMBOLS: u64 = 6 << 56;
}
