//! Transmit power minimisation under rate, false-alarm, detection and budget
//! constraints, and the rate/detection trade-off sweep.
//!
//! Beam directions are fixed (matched), so a candidate is the triple
//! `(P, ρ, κ)`: total power, radar share and detection threshold. Detection
//! uses the unit-variance clutter-aware filter, for which `σ² = 1` and `|μ₁|²`
//! is the optimum SCNR `γ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm::rate_threshold;
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::stats::{inverse_q, q_function};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintTargets {
    /// SINR-sum threshold `Γ`.
    pub gamma_min: f64,
    pub pfa_max: f64,
    pub pd_min: f64,
    pub p_max: f64,
}

impl ConstraintTargets {
    pub fn new(gamma_min: f64, pfa_max: f64, pd_min: f64, p_max: f64) -> Result<Self> {
        if !(gamma_min >= 0.0) {
            return Err(Error::invalid("gamma_min", format!("must be >= 0, got {gamma_min}")));
        }
        for (name, p) in [("pfa_max", pfa_max), ("pd_min", pd_min)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::invalid("p_max", format!("must be > 0, got {p_max}")));
        }
        Ok(ConstraintTargets {
            gamma_min,
            pfa_max,
            pd_min,
            p_max,
        })
    }

    /// Targets with the rate requirement given in bits/s/Hz.
    pub fn from_rate(rate_target: f64, pfa_max: f64, pd_min: f64, p_max: f64) -> Result<Self> {
        ConstraintTargets::new(rate_threshold(rate_target), pfa_max, pd_min, p_max)
    }
}

/// Search resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerGrid {
    /// Coarse power points, log-spaced over `[p_min_fraction·p_max, p_max]`.
    pub power_points: usize,
    pub rho_points: usize,
    pub kappa_points: usize,
    /// Threshold range is `±kappa_span·(σ² + |μ₁|²)`.
    pub kappa_span: f64,
    pub p_min_fraction: f64,
    /// Hold the radar share fixed instead of searching it.
    pub fixed_rho: Option<f64>,
}

impl Default for OptimizerGrid {
    fn default() -> Self {
        OptimizerGrid {
            power_points: 64,
            rho_points: 21,
            kappa_points: 101,
            kappa_span: 10.0,
            p_min_fraction: 1e-6,
            fixed_rho: None,
        }
    }
}

impl OptimizerGrid {
    fn validate(&self) -> Result<()> {
        if self.power_points < 2 {
            return Err(Error::invalid("power_points", "must be at least 2"));
        }
        if self.rho_points < 1 {
            return Err(Error::invalid("rho_points", "must be at least 1"));
        }
        if self.kappa_points < 2 {
            return Err(Error::invalid("kappa_points", "must be at least 2"));
        }
        if !(self.kappa_span > 0.0) {
            return Err(Error::invalid("kappa_span", "must be > 0"));
        }
        if !(self.p_min_fraction > 0.0 && self.p_min_fraction < 1.0) {
            return Err(Error::invalid("p_min_fraction", "must lie in (0, 1)"));
        }
        if let Some(r) = self.fixed_rho {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid("fixed_rho", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn rho_grid(&self) -> Vec<f64> {
        match self.fixed_rho {
            Some(r) => vec![r],
            None if self.rho_points == 1 => vec![0.5],
            None => (0..self.rho_points)
                .map(|i| i as f64 / (self.rho_points - 1) as f64)
                .collect(),
        }
    }

    pub fn power_grid(&self, p_max: f64) -> Vec<f64> {
        let lo = (p_max * self.p_min_fraction).ln();
        let hi = p_max.ln();
        (0..self.power_points)
            .map(|i| {
                if i + 1 == self.power_points {
                    p_max
                } else {
                    (lo + (hi - lo) * i as f64 / (self.power_points - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// Everything evaluated at one `(P, ρ, κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub power: f64,
    pub rho: f64,
    pub kappa: f64,
    pub rate: f64,
    pub sinr_sum: f64,
    pub pd: f64,
    pub pfa: f64,
    /// Symbol-averaged optimum SCNR (linear).
    pub average_scnr: f64,
    /// `|μ₁|²` of the unit-variance filter.
    pub detection_snr: f64,
    pub rate_ok: bool,
    pub pfa_ok: bool,
    pub pd_ok: bool,
    pub power_ok: bool,
    /// `μ₁ = 0`: the statistic carries no information and the point is
    /// reported infeasible.
    pub degenerate: bool,
}

impl PointMetrics {
    pub fn feasible(&self) -> bool {
        self.rate_ok && self.pfa_ok && self.pd_ok && self.power_ok && !self.degenerate
    }
}

/// Power-dependent quantities that do not involve `κ`.
#[derive(Debug, Clone, Copy)]
struct SplitEval {
    power: f64,
    rho: f64,
    rate: f64,
    sinr_sum: f64,
    average_scnr: f64,
    snr: f64,
    beam_power: f64,
}

fn eval_split(scenario: &Scenario, power: f64, rho: f64) -> Result<SplitEval> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::invalid("power", format!("must be >= 0, got {power}")));
    }
    let beams = scenario.beams(power, rho)?;
    let link = scenario.link(&beams)?;
    let (snr, average_scnr) = if power == 0.0 {
        (0.0, 0.0)
    } else {
        (scenario.detection_snr(&beams)?, scenario.average_scnr(&beams)?)
    };
    Ok(SplitEval {
        power,
        rho,
        rate: link.rate,
        sinr_sum: link.sinr_direct + link.sinr_relayed,
        average_scnr,
        snr,
        beam_power: beams.total_power(),
    })
}

/// `(P_FA, P_D)` at threshold `κ` with `σ² = 1`, `|μ₁|² = γ`.
fn probabilities(snr: f64, kappa: f64) -> (f64, f64) {
    if snr > 0.0 {
        let std = (2.0 * snr).sqrt();
        (q_function(kappa / std), q_function((kappa - 2.0 * snr) / std))
    } else {
        // T ≡ 0: both hypotheses decide H1 exactly when κ ≤ 0.
        let p = if kappa <= 0.0 { 1.0 } else { 0.0 };
        (p, p)
    }
}

fn finish(e: &SplitEval, kappa: f64, targets: &ConstraintTargets) -> PointMetrics {
    let (pfa, pd) = probabilities(e.snr, kappa);
    PointMetrics {
        power: e.power,
        rho: e.rho,
        kappa,
        rate: e.rate,
        sinr_sum: e.sinr_sum,
        pd,
        pfa,
        average_scnr: e.average_scnr,
        detection_snr: e.snr,
        rate_ok: e.sinr_sum >= targets.gamma_min,
        pfa_ok: pfa <= targets.pfa_max,
        pd_ok: pd >= targets.pd_min,
        power_ok: e.beam_power <= e.power * (1.0 + 1e-9) + 1e-300 && e.power <= targets.p_max * (1.0 + 1e-12),
        degenerate: e.snr == 0.0,
    }
}

/// Metrics and constraint flags at one candidate.
pub fn evaluate_point(
    scenario: &Scenario,
    targets: &ConstraintTargets,
    power: f64,
    rho: f64,
    kappa: f64,
) -> Result<PointMetrics> {
    Ok(finish(&eval_split(scenario, power, rho)?, kappa, targets))
}

/// Threshold candidates: the uniform grid over `±span·(σ² + |μ₁|²)` plus the
/// smallest threshold meeting the false-alarm ceiling, which is where the
/// detection probability is largest subject to that ceiling.
fn kappa_candidates(snr: f64, targets: &ConstraintTargets, grid: &OptimizerGrid) -> Vec<f64> {
    let half = grid.kappa_span * (1.0 + snr);
    let mut ks: Vec<f64> = (0..grid.kappa_points)
        .map(|i| -half + 2.0 * half * i as f64 / (grid.kappa_points - 1) as f64)
        .collect();
    if snr > 0.0 && targets.pfa_max > 0.0 && targets.pfa_max < 1.0 {
        if let Ok(z) = inverse_q(targets.pfa_max) {
            let mut k = (2.0 * snr).sqrt() * z;
            // Nudge up until the ceiling holds exactly in floating point.
            let mut step = k.abs().max(1e-300) * 1e-14;
            while q_function(k / (2.0 * snr).sqrt()) > targets.pfa_max {
                k += step;
                step *= 2.0;
            }
            ks.push(k);
        }
    }
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    ks
}

/// Best operating points at one power level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLevelSummary {
    pub power: f64,
    pub best_rate: f64,
    /// Largest detection probability meeting the false-alarm ceiling, if any
    /// candidate meets it.
    pub best_pd: Option<f64>,
    /// Feasible candidate with the smallest `ρ`, then smallest `κ`.
    pub first_feasible: Option<PointMetrics>,
    /// Feasible candidate with the largest detection probability, or the
    /// best-detection candidate when nothing is feasible.
    pub operating_point: PointMetrics,
    pub evaluations: usize,
}

impl PowerLevelSummary {
    pub fn feasible(&self) -> bool {
        self.first_feasible.is_some()
    }
}

/// Inner search over `(ρ, κ)` at fixed power.
pub fn optimize_at_power(
    scenario: &Scenario,
    targets: &ConstraintTargets,
    grid: &OptimizerGrid,
    power: f64,
) -> Result<PowerLevelSummary> {
    grid.validate()?;
    let mut best_rate = f64::NEG_INFINITY;
    let mut best_pd: Option<f64> = None;
    let mut first_feasible: Option<PointMetrics> = None;
    let mut best_feasible: Option<PointMetrics> = None;
    let mut best_constrained: Option<PointMetrics> = None;
    let mut best_any: Option<PointMetrics> = None;
    let mut evaluations = 0;
    for rho in grid.rho_grid() {
        let e = eval_split(scenario, power, rho)?;
        best_rate = best_rate.max(e.rate);
        for kappa in kappa_candidates(e.snr, targets, grid) {
            evaluations += 1;
            let m = finish(&e, kappa, targets);
            // Strict comparisons keep the earliest (smallest ρ, then κ) on ties.
            if best_any.is_none_or(|b| m.pd > b.pd) {
                best_any = Some(m);
            }
            if m.pfa_ok && !m.degenerate {
                if best_pd.is_none_or(|b| m.pd > b) {
                    best_pd = Some(m.pd);
                }
                if best_constrained.is_none_or(|b| m.pd > b.pd) {
                    best_constrained = Some(m);
                }
            }
            if m.feasible() {
                if first_feasible.is_none() {
                    first_feasible = Some(m);
                }
                if best_feasible.is_none_or(|b| m.pd > b.pd) {
                    best_feasible = Some(m);
                }
            }
        }
    }
    let operating_point = best_feasible
        .or(best_constrained)
        .or(best_any)
        .expect("at least one candidate");
    Ok(PowerLevelSummary {
        power,
        best_rate,
        best_pd,
        first_feasible,
        operating_point,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub feasible: bool,
    /// Least feasible power found (watts); `p_max` when infeasible.
    pub p_star: f64,
    pub rho: f64,
    pub kappa_star: f64,
    /// Metrics at the certificate, or at the best point at `p_max` when
    /// infeasible.
    pub achieved: PointMetrics,
    pub evaluations: usize,
    pub bisection_steps: usize,
    /// Coarse-grid powers, for step-size comparisons.
    pub coarse_grid: Vec<f64>,
}

/// Least total power meeting every constraint: first feasible point of a
/// coarse log-spaced power grid, refined by bisection down to `tol` watts with
/// the `(ρ, κ)` search repeated at every probe.
pub fn minimize_power(
    scenario: &Scenario,
    targets: &ConstraintTargets,
    grid: &OptimizerGrid,
    tol: f64,
) -> Result<OptimizationResult> {
    grid.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    let powers = grid.power_grid(targets.p_max);
    let infeasible_at_max = |evaluations: usize, summary: PowerLevelSummary| OptimizationResult {
        feasible: false,
        p_star: targets.p_max,
        rho: summary.operating_point.rho,
        kappa_star: summary.operating_point.kappa,
        achieved: summary.operating_point,
        evaluations,
        bisection_steps: 0,
        coarse_grid: powers.clone(),
    };
    if targets.pd_min >= 1.0 {
        // Q never reaches one at a finite argument.
        let top = optimize_at_power(scenario, targets, grid, targets.p_max)?;
        return Ok(infeasible_at_max(top.evaluations, top));
    }
    let coarse: Vec<PowerLevelSummary> = powers
        .par_iter()
        .map(|&p| optimize_at_power(scenario, targets, grid, p))
        .collect::<Result<_>>()?;
    let mut evaluations: usize = coarse.iter().map(|s| s.evaluations).sum();
    let Some(k) = coarse.iter().position(PowerLevelSummary::feasible) else {
        let top = *coarse.last().expect("grid has at least two points");
        return Ok(infeasible_at_max(evaluations, top));
    };
    let mut hi = coarse[k];
    let mut steps = 0;
    if k > 0 {
        let mut lo = powers[k - 1];
        while hi.power - lo > tol {
            let mid = 0.5 * (lo + hi.power);
            let s = optimize_at_power(scenario, targets, grid, mid)?;
            evaluations += s.evaluations;
            steps += 1;
            if s.feasible() {
                hi = s;
            } else {
                lo = mid;
            }
        }
    }
    let cert = hi.first_feasible.expect("upper bracket is feasible");
    Ok(OptimizationResult {
        feasible: true,
        p_star: hi.power,
        rho: cert.rho,
        kappa_star: cert.kappa,
        achieved: cert,
        evaluations,
        bisection_steps: steps,
        coarse_grid: powers,
    })
}

/// True when some `(ρ, κ)` candidate is feasible at `power`. Non-positive
/// power is never feasible.
pub fn feasible_at(scenario: &Scenario, targets: &ConstraintTargets, grid: &OptimizerGrid, power: f64) -> Result<bool> {
    if power <= 0.0 {
        return Ok(false);
    }
    Ok(optimize_at_power(scenario, targets, grid, power)?.feasible())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRecord {
    pub summary: PowerLevelSummary,
    /// First jointly feasible power of the sweep.
    pub marked: bool,
}

/// One inner optimisation per power level, in ascending power order.
pub fn tradeoff_sweep(
    scenario: &Scenario,
    targets: &ConstraintTargets,
    grid: &OptimizerGrid,
    powers: &[f64],
) -> Result<Vec<TradeoffRecord>> {
    if powers.is_empty() {
        return Err(Error::invalid("powers", "must not be empty"));
    }
    let mut sorted = powers.to_vec();
    sorted.sort_by(f64::total_cmp);
    let summaries: Vec<PowerLevelSummary> = sorted
        .par_iter()
        .map(|&p| optimize_at_power(scenario, targets, grid, p))
        .collect::<Result<_>>()?;
    let first = summaries.iter().position(PowerLevelSummary::feasible);
    Ok(summaries
        .into_iter()
        .enumerate()
        .map(|(i, summary)| TradeoffRecord {
            summary,
            marked: Some(i) == first,
        })
        .collect())
}
