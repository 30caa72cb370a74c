//! Experiment drivers: SCNR versus power, detection curves, the rate/detection
//! trade-off with its power-optimal point, and the analytic-versus-simulation
//! report.
//!
//! Sweep cells run concurrently but every record is placed by its index, so
//! output order never depends on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{dbm_to_w, power_grid_w, w_to_dbm, ClutterLevel, ScenarioConfig};
use super::output::{Cell, Table};
use crate::detection::{pfa_shifted, roc_sweep};
use crate::error::Result;
use crate::power::{
    minimize_power, tradeoff_sweep, ConstraintTargets, OptimizationResult, OptimizerGrid, TradeoffRecord,
};
use crate::scenario::Scenario;

/// Probabilities outside `[lo, 1 − lo]` are too rare for desk-scale Monte
/// Carlo and are reported but not judged.
pub const MC_PROBABILITY_FLOOR: f64 = 1e-3;
/// Agreement band in binomial standard errors.
pub const MC_SIGMA_BAND: f64 = 3.0;

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnrRecord {
    pub power_dbm: f64,
    pub n_antennas: usize,
    pub carrier_ghz: f64,
    pub clutter: ClutterLevel,
    pub scnr_db_mean: f64,
    pub scnr_db_std: f64,
    pub realizations: u64,
}

/// Per array/carrier/clutter cell: SCNR averaged over the power grid and
/// realisations, and the mean dB gap to the clutter-free cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnrSummaryRecord {
    pub n_antennas: usize,
    pub carrier_ghz: f64,
    pub clutter: ClutterLevel,
    pub scnr_db_mean: f64,
    pub error_db: f64,
    pub realizations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnrSweep {
    pub records: Vec<ScnrRecord>,
    pub summary: Vec<ScnrSummaryRecord>,
}

/// Average SCNR in dB for every array size, carrier, clutter level and power,
/// over `power_sweep.realizations` scene realisations.
pub fn run_scnr_sweep(cfg: &ScenarioConfig) -> Result<ScnrSweep> {
    let ps = &cfg.power_sweep;
    let powers = ps.grid_w();
    let mut cells = Vec::new();
    for &n in &ps.antenna_counts {
        for &f in &ps.carriers_ghz {
            for level in ClutterLevel::ALL {
                cells.push((n, f, level));
            }
        }
    }
    // samples[cell][power][realization], in dB.
    let samples: Vec<Vec<Vec<f64>>> = cells
        .par_iter()
        .map(|&(n, f, level)| {
            let mut by_power = vec![Vec::with_capacity(ps.realizations as usize); powers.len()];
            for r in 0..ps.realizations {
                let s = Scenario::build(cfg, n, f, level, r)?;
                for (k, &p) in powers.iter().enumerate() {
                    by_power[k].push(db(s.average_scnr(&s.beams(p, ps.radar_fraction)?)?));
                }
            }
            Ok(by_power)
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut summary = Vec::new();
    for (c, &(n, f, level)) in cells.iter().enumerate() {
        let means: Vec<f64> = samples[c].iter().map(|v| mean_std(v).0).collect();
        for (k, &p) in powers.iter().enumerate() {
            let (mean, std) = mean_std(&samples[c][k]);
            records.push(ScnrRecord {
                power_dbm: w_to_dbm(p),
                n_antennas: n,
                carrier_ghz: f,
                clutter: level,
                scnr_db_mean: mean,
                scnr_db_std: std,
                realizations: ps.realizations,
            });
        }
        let free = cells
            .iter()
            .position(|&(n2, f2, l2)| n2 == n && f2 == f && l2 == ClutterLevel::None)
            .expect("clutter-free cell present");
        let free_means: Vec<f64> = samples[free].iter().map(|v| mean_std(v).0).collect();
        let gaps: Vec<f64> = free_means.iter().zip(&means).map(|(a, b)| a - b).collect();
        summary.push(ScnrSummaryRecord {
            n_antennas: n,
            carrier_ghz: f,
            clutter: level,
            scnr_db_mean: mean_std(&means).0,
            error_db: mean_std(&gaps).0,
            realizations: ps.realizations,
        });
    }
    Ok(ScnrSweep { records, summary })
}

impl ScnrSweep {
    pub fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "scnr_sweep",
            &[
                "power_dbm",
                "n_antennas",
                "carrier_ghz",
                "clutter",
                "scnr_db_mean",
                "scnr_db_std",
                "realizations",
            ],
        );
        for r in &self.records {
            t.push(vec![
                r.power_dbm.into(),
                r.n_antennas.into(),
                r.carrier_ghz.into(),
                r.clutter.label().into(),
                r.scnr_db_mean.into(),
                r.scnr_db_std.into(),
                r.realizations.into(),
            ]);
        }
        let mut s = Table::new(
            "scnr_summary",
            &[
                "n_antennas",
                "carrier_ghz",
                "clutter",
                "scnr_db_mean",
                "error_db",
                "realizations",
            ],
        );
        for r in &self.summary {
            s.push(vec![
                r.n_antennas.into(),
                r.carrier_ghz.into(),
                r.clutter.label().into(),
                r.scnr_db_mean.into(),
                r.error_db.into(),
                r.realizations.into(),
            ]);
        }
        vec![t, s]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub kappa: f64,
    pub power_dbm: f64,
    pub clutter: ClutterLevel,
    pub pfa_analytic: f64,
    pub pd_analytic: f64,
    pub pfa_mc: f64,
    pub pfa_ci_lo: f64,
    pub pfa_ci_hi: f64,
    pub pd_mc: f64,
    pub pd_ci_lo: f64,
    pub pd_ci_hi: f64,
    pub trials: u64,
    /// Present when `detection.shifted_pfa` is set.
    pub pfa_shifted: Option<f64>,
}

/// Analytic and simulated detection curves on the configured scenario, for
/// light and intense clutter at each configured power. Every cell reuses the
/// master seed, so cells differ only in the physics, not in the noise draws.
pub fn run_detection_sweep(cfg: &ScenarioConfig) -> Result<Vec<DetectionRecord>> {
    let d = &cfg.detection;
    let kappas = d.kappa_grid();
    let mut out = Vec::new();
    for level in [ClutterLevel::Light, ClutterLevel::Intense] {
        let s = Scenario::build(
            cfg,
            cfg.array.n_antennas,
            cfg.array.carrier_ghz,
            level,
            cfg.scene.realization,
        )?;
        let mut powers = d.powers_dbm.clone();
        powers.sort_by(f64::total_cmp);
        for p_dbm in powers {
            let setup = s.detection_setup(&s.beams(dbm_to_w(p_dbm), d.radar_fraction)?)?;
            for op in roc_sweep(&setup, &kappas, d.trials, cfg.seed)? {
                let shifted = if d.shifted_pfa {
                    Some(pfa_shifted(&setup.params(op.kappa))?)
                } else {
                    None
                };
                out.push(DetectionRecord {
                    kappa: op.kappa,
                    power_dbm: p_dbm,
                    clutter: level,
                    pfa_analytic: op.pfa_analytic,
                    pd_analytic: op.pd_analytic,
                    pfa_mc: op.pfa_mc.rate,
                    pfa_ci_lo: op.pfa_mc.ci.lo,
                    pfa_ci_hi: op.pfa_mc.ci.hi,
                    pd_mc: op.pd_mc.rate,
                    pd_ci_lo: op.pd_mc.ci.lo,
                    pd_ci_hi: op.pd_mc.ci.hi,
                    trials: op.trials,
                    pfa_shifted: shifted,
                });
            }
        }
    }
    Ok(out)
}

pub fn detection_table(records: &[DetectionRecord]) -> Table {
    let shifted = records.iter().any(|r| r.pfa_shifted.is_some());
    let mut cols = vec![
        "kappa",
        "power_dbm",
        "clutter",
        "pfa_analytic",
        "pd_analytic",
        "pfa_mc",
        "pfa_ci_lo",
        "pfa_ci_hi",
        "pd_mc",
        "pd_ci_lo",
        "pd_ci_hi",
        "trials",
    ];
    if shifted {
        cols.push("pfa_shifted");
    }
    let mut t = Table::new("detection_sweep", &cols);
    for r in records {
        let mut row: Vec<Cell> = vec![
            r.kappa.into(),
            r.power_dbm.into(),
            r.clutter.label().into(),
            r.pfa_analytic.into(),
            r.pd_analytic.into(),
            r.pfa_mc.into(),
            r.pfa_ci_lo.into(),
            r.pfa_ci_hi.into(),
            r.pd_mc.into(),
            r.pd_ci_lo.into(),
            r.pd_ci_hi.into(),
            r.trials.into(),
        ];
        if shifted {
            row.push(r.pfa_shifted.unwrap_or(f64::NAN).into());
        }
        t.push(row);
    }
    t
}

pub fn targets_from(cfg: &ScenarioConfig) -> Result<ConstraintTargets> {
    let t = &cfg.targets;
    ConstraintTargets::from_rate(t.rate_target, t.pfa_max, t.pd_min, t.p_max_w)
}

pub fn grid_from(cfg: &ScenarioConfig) -> OptimizerGrid {
    let o = &cfg.optimizer;
    OptimizerGrid {
        power_points: o.power_points,
        rho_points: o.rho_points,
        kappa_points: o.kappa_points,
        kappa_span: o.kappa_span,
        p_min_fraction: o.p_min_fraction,
        fixed_rho: o.fixed_rho,
    }
}

/// Least-power search on the configured scenario.
pub fn run_optimize(cfg: &ScenarioConfig) -> Result<OptimizationResult> {
    let s = Scenario::from_config(cfg)?;
    minimize_power(
        &s,
        &targets_from(cfg)?,
        &grid_from(cfg),
        cfg.optimizer.tol_fraction * cfg.targets.p_max_w,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRun {
    pub records: Vec<TradeoffRecord>,
    pub optimum: OptimizationResult,
    pub rate_target: f64,
    pub pd_min: f64,
}

/// Best rate and best detection per power on the trade-off grid, the first
/// jointly feasible grid power, and the refined least-power point.
pub fn run_tradeoff(cfg: &ScenarioConfig) -> Result<TradeoffRun> {
    let s = Scenario::from_config(cfg)?;
    let targets = targets_from(cfg)?;
    let grid = grid_from(cfg);
    let tr = &cfg.tradeoff;
    let powers = power_grid_w(tr.min_dbm, tr.max_dbm, tr.points, super::config::SweepScale::Log);
    let records = tradeoff_sweep(&s, &targets, &grid, &powers)?;
    let optimum = minimize_power(&s, &targets, &grid, cfg.optimizer.tol_fraction * cfg.targets.p_max_w)?;
    Ok(TradeoffRun {
        records,
        optimum,
        rate_target: cfg.targets.rate_target,
        pd_min: cfg.targets.pd_min,
    })
}

impl TradeoffRun {
    pub fn marked(&self) -> Option<&TradeoffRecord> {
        self.records.iter().find(|r| r.marked)
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "tradeoff",
            &[
                "power_dbm",
                "rho",
                "kappa",
                "rate_bps_hz",
                "pd",
                "pfa",
                "feasible",
                "best_rate_bps_hz",
                "best_pd",
                "rate_ok",
                "detection_ok",
                "marked",
            ],
        );
        for r in &self.records {
            let s = &r.summary;
            let op = &s.operating_point;
            let best_pd = s.best_pd.unwrap_or(f64::NAN);
            t.push(vec![
                w_to_dbm(s.power).into(),
                op.rho.into(),
                op.kappa.into(),
                op.rate.into(),
                op.pd.into(),
                op.pfa.into(),
                s.feasible().into(),
                s.best_rate.into(),
                best_pd.into(),
                (s.best_rate >= self.rate_target).into(),
                (best_pd >= self.pd_min).into(),
                r.marked.into(),
            ]);
        }
        vec![
            t,
            optimum_table(&self.optimum, self.marked().map(|r| w_to_dbm(r.summary.power))),
        ]
    }
}

pub fn optimum_table(o: &OptimizationResult, marked_dbm: Option<f64>) -> Table {
    let mut t = Table::new(
        "optimum",
        &[
            "feasible",
            "p_star_w",
            "p_star_dbm",
            "rho",
            "kappa",
            "rate_bps_hz",
            "pd",
            "pfa",
            "average_scnr_db",
            "detection_snr_db",
            "evaluations",
            "bisection_steps",
            "marked_power_dbm",
        ],
    );
    let a = &o.achieved;
    t.push(vec![
        o.feasible.into(),
        o.p_star.into(),
        w_to_dbm(o.p_star).into(),
        o.rho.into(),
        o.kappa_star.into(),
        a.rate.into(),
        a.pd.into(),
        a.pfa.into(),
        db(a.average_scnr).into(),
        db(a.detection_snr).into(),
        o.evaluations.into(),
        o.bisection_steps.into(),
        marked_dbm.unwrap_or(f64::NAN).into(),
    ]);
    t
}

/// One analytic-versus-simulated comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRecord {
    pub clutter: ClutterLevel,
    pub power_dbm: f64,
    pub kappa: f64,
    pub quantity: String,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub z: f64,
    /// Analytic probability inside `[floor, 1 − floor]`.
    pub judged: bool,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: Vec<AgreementRecord>,
    pub judged: usize,
    pub agreed: usize,
}

impl ValidationReport {
    pub fn all_agree(&self) -> bool {
        self.judged == self.agreed
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(
            "validation",
            &[
                "clutter",
                "power_dbm",
                "kappa",
                "quantity",
                "analytic",
                "monte_carlo",
                "std_error",
                "z",
                "judged",
                "agrees",
            ],
        );
        for r in &self.records {
            t.push(vec![
                r.clutter.label().into(),
                r.power_dbm.into(),
                r.kappa.into(),
                r.quantity.as_str().into(),
                r.analytic.into(),
                r.monte_carlo.into(),
                r.std_error.into(),
                r.z.into(),
                r.judged.into(),
                r.agrees.into(),
            ]);
        }
        t
    }
}

/// Compares each analytic probability of a detection sweep with its
/// simulated rate in units of the binomial standard error.
pub fn validate_detection(records: &[DetectionRecord]) -> ValidationReport {
    let mut out = Vec::new();
    for r in records {
        for (quantity, analytic, mc) in [("pfa", r.pfa_analytic, r.pfa_mc), ("pd", r.pd_analytic, r.pd_mc)] {
            let se = (analytic * (1.0 - analytic) / r.trials as f64).sqrt();
            let judged = (MC_PROBABILITY_FLOOR..=1.0 - MC_PROBABILITY_FLOOR).contains(&analytic);
            let z = if se > 0.0 { (mc - analytic) / se } else { f64::NAN };
            out.push(AgreementRecord {
                clutter: r.clutter,
                power_dbm: r.power_dbm,
                kappa: r.kappa,
                quantity: quantity.to_string(),
                analytic,
                monte_carlo: mc,
                std_error: se,
                z,
                judged,
                agrees: !judged || z.abs() <= MC_SIGMA_BAND,
            });
        }
    }
    let judged = out.iter().filter(|r| r.judged).count();
    let agreed = out.iter().filter(|r| r.judged && r.agrees).count();
    ValidationReport {
        records: out,
        judged,
        agreed,
    }
}
