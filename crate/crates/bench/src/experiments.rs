//! Phase diagrams, noise sweeps and tomography runs.

use std::time::Instant;

use rankone::analysis::Source;
use rankone::designs::read_design;
use rankone::ensembles::{add_noise, Field};
use rankone::linalg::random_low_rank;
use rankone::rng::{derive_seed, stream};
use rankone::solver::{solve, Mode, RecoveryProblem, Status};
use rankone::HermitianMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Kind, StateKind, TrialRecord};
use crate::error::{BenchError, Result};
use crate::pool;

/// Feasibility tolerance used by the minimality witness, relative to 1 + ‖b‖₂.
pub const WITNESS_GAP_TOL: f64 = 1e-7;
/// Allowed excess of the solver objective over the truth's objective.
pub const WITNESS_OBJECTIVE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub eta: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub converged: usize,
    pub median_rel_error: f64,
    pub median_error_ratio: Option<f64>,
    pub median_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub kind: Kind,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> Result<String> {
        crate::output::records_to_csv(&self.records)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Seed for one (cell, trial); independent of the rest of the grid.
pub fn trial_seed(master: u64, n: usize, r: usize, m: usize, trial: usize) -> u64 {
    derive_seed(master, &[n as u64, r as u64, m as u64, trial as u64])
}

fn source(cfg: &ExperimentConfig) -> Result<Source> {
    if let Some(path) = &cfg.design {
        let (d, _) = read_design(path)?;
        return Ok(Source::Design(d));
    }
    Ok(match cfg.field() {
        Field::Complex => Source::ComplexGaussian,
        Field::Real => Source::RealGaussian,
    })
}

struct Task {
    n: usize,
    r: usize,
    m: usize,
    eta: f64,
    trial: usize,
}

fn tasks(cfg: &ExperimentConfig) -> Vec<Task> {
    let mut out = Vec::new();
    for (n, r, m) in cfg.cells() {
        for &eta in &cfg.eta {
            for trial in 0..cfg.trials {
                out.push(Task { n, r, m, eta, trial });
            }
        }
    }
    out
}

fn density_matrix<R: rand::Rng + ?Sized>(cfg: &ExperimentConfig, n: usize, r: usize, rng: &mut R) -> Result<HermitianMatrix> {
    Ok(match cfg.state {
        StateKind::MaximallyMixed => HermitianMatrix::identity(n).scaled(1.0 / n as f64),
        StateKind::Random => {
            let x = random_low_rank(n, r, true, rng)?.matrix;
            let t = x.trace();
            x.scaled(1.0 / t)
        }
    })
}

fn run_trial(cfg: &ExperimentConfig, src: &Source, task: &Task) -> Result<TrialRecord> {
    let Task { n, r, m, eta, trial } = *task;
    let seed = trial_seed(cfg.seed, n, r, m, trial);
    let mut rng = stream(seed);
    let tomography = cfg.kind == Kind::Tomography;
    let (x, mode) = if tomography {
        (density_matrix(cfg, n, r, &mut rng)?, Mode::PsdTrace)
    } else {
        (random_low_rank(n, r, false, &mut rng)?.matrix, Mode::Nuclear)
    };
    let ensemble = src.ensemble(n, m, &mut rng)?;
    let clean = ensemble.apply(&x)?;
    // the same signal and ensemble are reused across the η list
    let noisy = add_noise(&clean, eta, &mut stream(derive_seed(seed, &[eta.to_bits()])))?;
    let b_norm = noisy.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let problem = RecoveryProblem::new(ensemble, noisy.b, eta, mode)?;
    let truth_objective = problem.objective(&x)?;

    let start = Instant::now();
    let result = solve(&problem, &cfg.solver)?;
    let wall_ms = if cfg.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };

    let mut estimate = result.x_hat.clone();
    let (mut fidelity, mut psd_trace_ok) = (None, None);
    if tomography {
        let t = estimate.trace();
        if t > 0.0 {
            estimate = estimate.scaled(1.0 / t);
        }
        let diff = x.sub(&estimate)?;
        fidelity = Some(1.0 - 0.5 * diff.nuclear_norm()?);
        psd_trace_ok = Some(estimate.is_psd(1e-10)? && (estimate.trace() - 1.0).abs() <= 1e-10);
    }
    let abs_error = x.sub(&estimate)?.frobenius_norm();
    let rel_error = abs_error / x.frobenius_norm();
    Ok(TrialRecord {
        n,
        r,
        m,
        eta,
        seed,
        trial,
        rel_error,
        success: rel_error <= cfg.success_threshold,
        iterations: result.iterations,
        wall_ms,
        status: result.status,
        objective: result.objective,
        truth_objective,
        feasibility_gap: result.feasibility_gap,
        b_norm,
        error_ratio: (eta > 0.0).then(|| abs_error / (eta / (m as f64).sqrt())),
        fidelity,
        psd_trace_ok,
    })
}

/// Runs every (cell, η, trial) of the grid; rows come back in grid order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let src = source(cfg)?;
    let tasks = tasks(cfg);
    pool::build()?.install(|| tasks.par_iter().map(|t| run_trial(cfg, &src, t)).collect())
}

fn summarize_cells(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    for (n, r, m) in cfg.cells() {
        for &eta in &cfg.eta {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|t| t.n == n && t.r == r && t.m == m && t.eta == eta)
                .collect();
            let successes = rows.iter().filter(|t| t.success).count();
            let ratios: Vec<f64> = rows.iter().filter_map(|t| t.error_ratio).collect();
            cells.push(CellSummary {
                n,
                r,
                m,
                eta,
                trials: rows.len(),
                successes,
                success_rate: successes as f64 / rows.len() as f64,
                converged: rows.iter().filter(|t| t.status == Status::Converged).count(),
                median_rel_error: median(&rows.iter().map(|t| t.rel_error).collect::<Vec<_>>()),
                median_error_ratio: (!ratios.is_empty()).then(|| median(&ratios)),
                median_iterations: median(&rows.iter().map(|t| t.iterations as f64).collect::<Vec<_>>()),
            });
        }
    }
    cells
}

/// On converged noiseless instances the estimate is feasible and no worse
/// than the truth in objective.
pub fn minimality_witness(records: &[TrialRecord]) -> Check {
    let checked: Vec<&TrialRecord> = records
        .iter()
        .filter(|t| t.eta == 0.0 && t.status == Status::Converged)
        .collect();
    let violations: Vec<String> = checked
        .iter()
        .filter(|t| {
            t.objective > t.truth_objective + WITNESS_OBJECTIVE_SLACK
                || t.feasibility_gap > WITNESS_GAP_TOL * (1.0 + t.b_norm)
        })
        .map(|t| format!("(n={}, r={}, m={}, trial={})", t.n, t.r, t.m, t.trial))
        .collect();
    Check::new(
        "minimality_witness",
        violations.is_empty(),
        format!(
            "{} converged noiseless instances, {} violations {}",
            checked.len(),
            violations.len(),
            violations.join(" ")
        ),
    )
}

/// No success rate drops by more than three pooled standard errors as m grows.
pub fn monotone_in_m(cells: &[CellSummary]) -> Check {
    let mut drops = Vec::new();
    for a in cells {
        for b in cells {
            if a.n != b.n || a.r != b.r || a.eta != b.eta || b.m <= a.m {
                continue;
            }
            let pooled = (a.successes + b.successes) as f64 / (a.trials + b.trials) as f64;
            let se = (pooled * (1.0 - pooled) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt();
            if a.success_rate - b.success_rate > 3.0 * se {
                drops.push(format!("(n={}, r={}: m={} -> {})", a.n, a.r, a.m, b.m));
            }
        }
    }
    Check::new(
        "success_monotone_in_m",
        drops.is_empty(),
        if drops.is_empty() {
            "no significant drops".to_string()
        } else {
            drops.join(" ")
        },
    )
}

fn min_rate_check(cells: &[CellSummary], min: f64, noiseless_only: bool) -> Check {
    let low: Vec<String> = cells
        .iter()
        .filter(|c| !noiseless_only || c.eta == 0.0)
        .filter(|c| c.success_rate < min)
        .map(|c| format!("(n={}, r={}, m={}, eta={}: {:.3})", c.n, c.r, c.m, c.eta, c.success_rate))
        .collect();
    Check::new(
        "min_success_rate",
        low.is_empty(),
        if low.is_empty() {
            format!("every cell at or above {min}")
        } else {
            low.join(" ")
        },
    )
}

/// Per (n, r, m): median error ratios agree within the allowed spread across
/// positive η, and the median error does not decrease as η grows.
pub fn noise_checks(cells: &[CellSummary], spread: f64) -> Vec<Check> {
    let mut out = Vec::new();
    let mut keys: Vec<(usize, usize, usize)> = cells.iter().map(|c| (c.n, c.r, c.m)).collect();
    keys.dedup();
    for (n, r, m) in keys {
        let mut row: Vec<&CellSummary> = cells
            .iter()
            .filter(|c| (c.n, c.r, c.m) == (n, r, m) && c.eta > 0.0)
            .collect();
        if row.len() < 2 {
            continue;
        }
        row.sort_by(|a, b| a.eta.total_cmp(&b.eta));
        let ratios: Vec<f64> = row.iter().filter_map(|c| c.median_error_ratio).collect();
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            format!("ratio_spread(n={n}, r={r}, m={m})"),
            hi / lo < spread,
            format!("median ratios {ratios:?}, max/min {:.3} (limit {spread})", hi / lo),
        ));
        let errors: Vec<f64> = row.iter().map(|c| c.median_rel_error).collect();
        out.push(Check::new(
            format!("error_monotone_in_eta(n={n}, r={r}, m={m})"),
            errors.windows(2).all(|w| w[0] <= w[1]),
            format!("median errors {errors:?}"),
        ));
    }
    out
}

pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> ExperimentSummary {
    let cells = summarize_cells(cfg, records);
    let mut checks = vec![minimality_witness(records)];
    checks.push(Check::new(
        "errors_nonnegative",
        records.iter().all(|t| t.rel_error >= 0.0),
        "",
    ));
    match cfg.kind {
        Kind::PhaseDiagram => checks.push(monotone_in_m(&cells)),
        Kind::NoiseSweep => checks.extend(noise_checks(&cells, cfg.max_ratio_spread)),
        Kind::Tomography => {
            let bad = records.iter().filter(|t| t.psd_trace_ok != Some(true)).count();
            checks.push(Check::new(
                "estimate_psd_trace_one",
                bad == 0,
                format!("{bad} estimates fail after renormalization"),
            ));
        }
        _ => {}
    }
    if let Some(min) = cfg.min_success_rate {
        checks.push(min_rate_check(&cells, min, cfg.kind == Kind::NoiseSweep));
    }
    let all_pass = checks.iter().all(|c| c.pass);
    ExperimentSummary {
        kind: cfg.kind,
        seed: cfg.seed,
        cells,
        checks,
        all_pass,
    }
}

fn run_kind(cfg: &ExperimentConfig, kind: Kind) -> Result<ExperimentOutput> {
    if cfg.kind != kind {
        return Err(BenchError::Config(format!("expected a {kind:?} config, got {:?}", cfg.kind)));
    }
    let records = run_trials(cfg)?;
    let summary = summarize(cfg, &records);
    Ok(ExperimentOutput { records, summary })
}

pub fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_kind(cfg, Kind::PhaseDiagram)
}

pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_kind(cfg, Kind::NoiseSweep)
}

pub fn run_tomography(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_kind(cfg, Kind::Tomography)
}
