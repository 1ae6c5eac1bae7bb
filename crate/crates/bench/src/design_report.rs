use std::path::Path;

use rankone::designs::{
    certify, construct_phase_orbit_design, construct_weighted_design, read_design, DesignMeta, WeightedDesign,
};
use rankone::rng::stream;
use rankone::tensor::sym_dim;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::experiments::Check;

/// Slack for the θ∞ ≤ θ₁ ≤ n^k θ∞ rows, which are exact inequalities.
const ORDER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub k: usize,
    pub theta_inf: f64,
    pub theta_1: f64,
    pub norms_ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// 1/Σp², the number of equally weighted vectors with the same spread
    pub effective_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub n: usize,
    pub t: usize,
    pub vectors: usize,
    pub orders: Vec<OrderRow>,
    pub tight_frame_gap: f64,
    /// tight-frame gap ≤ 1/n
    pub usable: bool,
    pub weights: WeightStats,
    pub meta: Option<DesignMeta>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

pub fn design_report(d: &WeightedDesign, k_max: usize, meta: Option<DesignMeta>) -> Result<DesignReport> {
    if k_max == 0 {
        return Err(BenchError::Config("k_max must be at least 1".into()));
    }
    let n = d.dim();
    let mut orders = Vec::new();
    let mut tight_frame_gap = 0.0;
    for k in 1..=k_max.min(d.order()) {
        let c = certify(d, k)?;
        tight_frame_gap = c.tight_frame_gap;
        orders.push(OrderRow {
            k,
            theta_inf: c.theta_inf,
            theta_1: c.theta_1,
            norms_ordered: c.norms_ordered(n, ORDER_SLACK),
        });
    }
    let w = d.weights();
    let weights = WeightStats {
        min: w.iter().cloned().fold(f64::INFINITY, f64::min),
        max: w.iter().cloned().fold(0.0, f64::max),
        mean: w.iter().sum::<f64>() / w.len() as f64,
        effective_count: 1.0 / w.iter().map(|p| p * p).sum::<f64>(),
    };
    let usable = tight_frame_gap <= 1.0 / n as f64;
    let checks = vec![
        Check::new(
            "norms_ordered",
            orders.iter().all(|o| o.norms_ordered),
            "theta_inf <= theta_1 <= n^k theta_inf for every order",
        ),
        Check::new("tight_frame_usable", usable, format!("gap {tight_frame_gap:e}, limit 1/n")),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(DesignReport {
        n,
        t: d.order(),
        vectors: d.len(),
        orders,
        tight_frame_gap,
        usable,
        weights,
        meta,
        checks,
        all_pass,
    })
}

pub fn run_design_report(path: &Path, k_max: usize) -> Result<DesignReport> {
    let (d, meta) = read_design(path)?;
    design_report(&d, k_max, meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMethod {
    /// full moment matching for small Sym^t, phase orbits otherwise
    Auto,
    MomentMatching,
    PhaseOrbit,
}

impl std::str::FromStr for BuildMethod {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "moment_matching" | "nnls" => Ok(Self::MomentMatching),
            "phase_orbit" => Ok(Self::PhaseOrbit),
            _ => Err(BenchError::Config(format!("unknown build method `{s}`"))),
        }
    }
}

/// Above this Sym^t dimension the auto method switches to phase orbits.
pub const AUTO_PHASE_ORBIT_DIM: usize = 20;

#[derive(Debug, Clone, Copy)]
pub struct BuildParams {
    pub n: usize,
    pub t: usize,
    /// candidate pool size; None picks a default for the method
    pub candidates: Option<usize>,
    pub seed: u64,
    pub tol: f64,
    pub method: BuildMethod,
}

pub fn build_design(p: &BuildParams) -> Result<(WeightedDesign, DesignMeta)> {
    let dd = sym_dim(p.n, p.t);
    let phase_orbit = match p.method {
        BuildMethod::PhaseOrbit => true,
        BuildMethod::MomentMatching => false,
        BuildMethod::Auto => dd > AUTO_PHASE_ORBIT_DIM,
    };
    let mut rng = stream(p.seed);
    let d = if phase_orbit {
        let c = p.candidates.unwrap_or(400.max(10 * (dd + 1)));
        construct_phase_orbit_design(p.n, p.t, c, &mut rng, p.tol)?
    } else {
        let c = p.candidates.unwrap_or(2000.max(40 * (dd * dd + 1)));
        construct_weighted_design(p.n, p.t, c, &mut rng, p.tol)?
    };
    let theta_inf = certify(&d, p.t)?.theta_inf;
    Ok((d, DesignMeta { seed: p.seed, theta_inf }))
}
