//! Target presence test on the beamformed radar sample: statistic, threshold,
//! closed-form error probabilities and their Monte Carlo counterparts.
//!
//! With `y = wᴴs`, the sample is `CN(0, σ²)` without a target and
//! `CN(μ₁, σ²)` with one, where `μ₁ = α₀·wᴴA·x` and
//! `σ² = Σ σ_l²·|wᴴA_l·x|² + ‖w‖²`. The statistic `T = 2·Re(y·conj(μ₁))` is
//! then real Gaussian with variance `2|μ₁|²σ²` and mean `0` or `2|μ₁|²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, dot_h, norm_sqr, CVector, C64};
use crate::propagation::{ClutterStatistics, Scene};
use crate::radar::{clutter_responses, conditioned_covariance, response_matrix};
use crate::stats::{binomial_ci, derive_stream, q_function, streams, ConfidenceInterval};

/// Confidence level attached to every Monte Carlo rate.
pub const CI_LEVEL: f64 = 0.95;

/// Moments of the beamformed sample and the decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionStatisticParams {
    pub mu1: C64,
    pub sigma2: f64,
    /// Likelihood-ratio threshold `η`, when `κ` was derived from one.
    pub eta: Option<f64>,
    pub kappa: f64,
}

impl DetectionStatisticParams {
    pub fn with_kappa(self, kappa: f64) -> Self {
        DetectionStatisticParams {
            eta: None,
            kappa,
            ..self
        }
    }

    /// Standard deviation of `T`, `|μ₁|·√(2σ²)`.
    pub fn statistic_std(&self) -> f64 {
        self.mu1.norm() * (2.0 * self.sigma2).sqrt()
    }
}

/// `κ = σ²·ln η + |μ₁|²`.
pub fn kappa_from_eta(mu1: C64, sigma2: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", format!("must be > 0, got {eta}")));
    }
    Ok(sigma2 * eta.ln() + mu1.norm_sqr())
}

/// Everything a trial needs, precomputed for one scene, waveform `x` and
/// receive filter `w`: the target return `A·x`, the clutter returns `A_l·x`
/// and their projections onto `w`.
#[derive(Debug, Clone)]
pub struct DetectionSetup {
    w: CVector,
    alpha0: C64,
    target_return: CVector,
    clutter_returns: Vec<CVector>,
    clutter_scales: Vec<f64>,
    clutter_phases: Vec<f64>,
    stats: ClutterStatistics,
    mu1: C64,
    sigma2: f64,
}

impl DetectionSetup {
    pub fn new(cfg: &ArrayConfig, scene: &Scene, x: &CVector, w: &CVector, stats: ClutterStatistics) -> Result<Self> {
        let n = cfg.n_antennas();
        if w.len() != n || x.len() != n {
            return Err(Error::invalid("w", format!("w and x must have length {n}")));
        }
        if norm_sqr(w) == 0.0 {
            return Err(Error::ZeroBeamformer);
        }
        let target_return = response_matrix(cfg, &scene.target.position).apply(x);
        let clutter_returns: Vec<CVector> = clutter_responses(cfg, scene).iter().map(|r| r.apply(x)).collect();
        let clutter_scales: Vec<f64> = scene.clutter.iter().map(|c| c.amplitude_scale).collect();
        let alpha0 = scene.target.reflectivity;
        let mu1 = alpha0 * dot_h(w, &target_return);
        let sigma2 = clutter_returns
            .iter()
            .zip(&clutter_scales)
            .map(|(r, s)| s * s * dot_h(w, r).norm_sqr())
            .sum::<f64>()
            + norm_sqr(w);
        Ok(DetectionSetup {
            w: w.clone(),
            alpha0,
            target_return,
            clutter_returns,
            clutter_scales,
            clutter_phases: scene.clutter.iter().map(|c| c.phase).collect(),
            stats,
            mu1,
            sigma2,
        })
    }

    pub fn mu1(&self) -> C64 {
        self.mu1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn params(&self, kappa: f64) -> DetectionStatisticParams {
        DetectionStatisticParams {
            mu1: self.mu1,
            sigma2: self.sigma2,
            eta: None,
            kappa,
        }
    }

    pub fn params_from_eta(&self, eta: f64) -> Result<DetectionStatisticParams> {
        Ok(DetectionStatisticParams {
            eta: Some(eta),
            ..self.params(kappa_from_eta(self.mu1, self.sigma2, eta)?)
        })
    }

    /// Draws one full snapshot under the given hypothesis and returns
    /// `T = 2·Re(wᴴs·conj(μ₁))`.
    fn trial_statistic(&self, target_present: bool, master_seed: u64, index: u64) -> f64 {
        let base = if target_present {
            streams::TRIAL_H1
        } else {
            streams::TRIAL_H0
        };
        let mut rng = derive_stream(master_seed, base + index);
        let n = self.w.len();
        let mut s = if target_present {
            &self.target_return * self.alpha0
        } else {
            CVector::zeros(n)
        };
        for (l, r) in self.clutter_returns.iter().enumerate() {
            let alpha = match self.stats {
                ClutterStatistics::Gaussian => complex_normal(&mut rng) * self.clutter_scales[l],
                ClutterStatistics::FixedEnvelope => C64::from_polar(self.clutter_scales[l], self.clutter_phases[l]),
            };
            s.axpy(alpha, r, C64::new(1.0, 0.0));
        }
        for z in s.iter_mut() {
            *z += complex_normal(&mut rng);
        }
        statistic_value(dot_h(&self.w, &s), self.mu1)
    }

    /// Per-threshold counts of `T ≥ κ` over `trials` trials of one hypothesis.
    /// Integer reduction keeps the result independent of scheduling.
    fn count_detections(&self, target_present: bool, kappas: &[f64], trials: u64, master_seed: u64) -> Vec<u64> {
        const CHUNK: u64 = 4096;
        let chunks = trials.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut counts = vec![0u64; kappas.len()];
                for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                    let t = self.trial_statistic(target_present, master_seed, i);
                    for (k, &kappa) in kappas.iter().enumerate() {
                        if decide(t, kappa) == Hypothesis::H1 {
                            counts[k] += 1;
                        }
                    }
                }
                counts
            })
            .reduce(
                || vec![0u64; kappas.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }

    /// Samples of `T` for moment checks.
    pub fn sample_statistics(&self, target_present: bool, trials: u64, master_seed: u64) -> Vec<f64> {
        (0..trials)
            .into_par_iter()
            .map(|i| self.trial_statistic(target_present, master_seed, i))
            .collect()
    }
}

/// Clutter-aware receive filter `W_x⁻¹·A·x` for a known waveform `x`, scaled
/// so the beamformed disturbance has unit variance. Then `σ² = 1` and
/// `|μ₁|²` equals the optimum SCNR, which puts thresholds on a common scale
/// across scenes and powers.
pub fn unit_variance_filter(cfg: &ArrayConfig, scene: &Scene, x: &CVector) -> Result<CVector> {
    let cov = conditioned_covariance(cfg, scene, x)?;
    let target = response_matrix(cfg, &scene.target.position);
    let b = target.apply(x);
    let w = cov.solve(&b);
    let q = dot_h(&b, &w).re;
    if !(q > 0.0) {
        return Err(Error::ZeroBeamformer);
    }
    Ok(w / C64::new(q.sqrt(), 0.0))
}

/// Computes `μ₁`, `σ²` and `κ = σ²·ln η + |μ₁|²` for filter `w`.
pub fn statistic_params(
    cfg: &ArrayConfig,
    w: &CVector,
    scene: &Scene,
    x: &CVector,
    eta: f64,
) -> Result<DetectionStatisticParams> {
    DetectionSetup::new(cfg, scene, x, w, ClutterStatistics::Gaussian)?.params_from_eta(eta)
}

fn statistic_value(y: C64, mu1: C64) -> f64 {
    2.0 * (y * mu1.conj()).re
}

/// `T = 2·Re(y·conj(μ₁))`.
pub fn test_statistic(y: C64, params: &DetectionStatisticParams) -> f64 {
    statistic_value(y, params.mu1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// H1 iff `T ≥ κ`.
pub fn decide(t: f64, kappa: f64) -> Hypothesis {
    if t >= kappa {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

fn checked_std(params: &DetectionStatisticParams) -> Result<f64> {
    if params.mu1.norm() == 0.0 {
        return Err(Error::DegenerateStatistic);
    }
    Ok(params.statistic_std())
}

/// `Q(κ / (|μ₁|·√(2σ²)))`.
pub fn pfa_analytic(params: &DetectionStatisticParams) -> Result<f64> {
    Ok(q_function(params.kappa / checked_std(params)?))
}

/// `Q((κ + 2|μ₁|²) / (|μ₁|·√(2σ²)))`, the false-alarm expression with the
/// target mean added to the numerator. Kept for side-by-side comparison; it
/// does not match simulation.
pub fn pfa_shifted(params: &DetectionStatisticParams) -> Result<f64> {
    Ok(q_function(
        (params.kappa + 2.0 * params.mu1.norm_sqr()) / checked_std(params)?,
    ))
}

/// `Q((κ − 2|μ₁|²) / (|μ₁|·√(2σ²)))`.
pub fn pd_analytic(params: &DetectionStatisticParams) -> Result<f64> {
    Ok(q_function(
        (params.kappa - 2.0 * params.mu1.norm_sqr()) / checked_std(params)?,
    ))
}

/// Empirical rate with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci: ConfidenceInterval,
}

impl MonteCarloRate {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        Ok(MonteCarloRate {
            successes,
            trials,
            rate: successes as f64 / trials as f64,
            ci: binomial_ci(successes, trials, CI_LEVEL)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionOperatingPoint {
    pub kappa: f64,
    pub pfa_analytic: f64,
    pub pd_analytic: f64,
    pub pfa_mc: MonteCarloRate,
    pub pd_mc: MonteCarloRate,
    pub trials: u64,
}

/// Monte Carlo false-alarm and detection rates at one threshold. Trial `i`
/// of each hypothesis draws from its own stream derived from
/// `(master_seed, i)`.
pub fn simulate_detection(
    setup: &DetectionSetup,
    kappa: f64,
    trials: u64,
    master_seed: u64,
) -> Result<DetectionOperatingPoint> {
    Ok(roc_sweep(setup, &[kappa], trials, master_seed)?.remove(0))
}

/// Analytic and empirical operating points along a threshold grid. Each
/// trial's statistic is computed once and compared against every `κ`.
pub fn roc_sweep(
    setup: &DetectionSetup,
    kappas: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<DetectionOperatingPoint>> {
    if kappas.is_empty() {
        return Err(Error::invalid("kappa_grid", "must not be empty"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let h0 = setup.count_detections(false, kappas, trials, master_seed);
    let h1 = setup.count_detections(true, kappas, trials, master_seed);
    kappas
        .iter()
        .enumerate()
        .map(|(k, &kappa)| {
            let p = setup.params(kappa);
            Ok(DetectionOperatingPoint {
                kappa,
                pfa_analytic: pfa_analytic(&p)?,
                pd_analytic: pd_analytic(&p)?,
                pfa_mc: MonteCarloRate::new(h0[k], trials)?,
                pd_mc: MonteCarloRate::new(h1[k], trials)?,
                trials,
            })
        })
        .collect()
}
