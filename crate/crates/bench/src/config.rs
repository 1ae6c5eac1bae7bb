use std::path::{Path, PathBuf};

use rankone::ensembles::Field;
use rankone::solver::{SolverConfig, Status};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    PhaseDiagram,
    NoiseSweep,
    DesignReport,
    Tomography,
    VerifySuite,
}

/// Which density matrices a tomography run draws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// random rank-r density matrices
    #[default]
    Random,
    /// id/n; the rank grid is ignored
    MaximallyMixed,
}

fn one() -> usize {
    1
}

fn noiseless() -> Vec<f64> {
    vec![0.0]
}

fn default_threshold() -> f64 {
    DEFAULT_SUCCESS_THRESHOLD
}

fn default_k_max() -> usize {
    4
}

fn default_spread() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub r: Vec<usize>,
    /// Measurement counts. Exactly one of `m` and `m_factor` is given.
    #[serde(default)]
    pub m: Vec<usize>,
    /// m = factor·r·n
    #[serde(default)]
    pub m_factor: Vec<usize>,
    /// Design file to draw measurement vectors from instead of Gaussians.
    #[serde(default)]
    pub design: Option<PathBuf>,
    #[serde(default)]
    pub field: Option<Field>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "noiseless")]
    pub eta: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub state: StateKind,
    /// Wall-clock times are written as 0 unless set, keeping output
    /// byte-identical across runs.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Checked for every cell when set (noiseless cells only in a noise sweep).
    #[serde(default)]
    pub min_success_rate: Option<f64>,
    /// Noise sweeps: allowed max/min ratio of the per-η median error ratios.
    #[serde(default = "default_spread")]
    pub max_ratio_spread: f64,
    /// Verify suite: reduced trial counts.
    #[serde(default)]
    pub quick: bool,
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            n: Vec::new(),
            r: Vec::new(),
            m: Vec::new(),
            m_factor: Vec::new(),
            design: None,
            field: None,
            trials: 1,
            eta: noiseless(),
            seed: 0,
            solver: SolverConfig::default(),
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            state: StateKind::Random,
            record_timing: false,
            k_max: default_k_max(),
            min_success_rate: None,
            max_ratio_spread: default_spread(),
            quick: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn field(&self) -> Field {
        self.field.unwrap_or(Field::Complex)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.success_threshold > 0.0) {
            return bad("success_threshold must be positive".into());
        }
        if let Some(e) = self.eta.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return bad(format!("eta values must be finite and nonnegative, got {e}"));
        }
        if let Some(p) = self.min_success_rate {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("min_success_rate must lie in [0, 1], got {p}"));
            }
        }
        if self.design.is_some() && self.field == Some(Field::Real) {
            return bad("design measurements are complex".into());
        }
        match self.kind {
            Kind::DesignReport => {
                if self.design.is_none() {
                    return bad("design_report needs a design file".into());
                }
                if self.k_max == 0 {
                    return bad("k_max must be at least 1".into());
                }
            }
            Kind::VerifySuite => {}
            Kind::PhaseDiagram | Kind::NoiseSweep | Kind::Tomography => {
                if self.n.is_empty() {
                    return bad("grid needs at least one n".into());
                }
                if self.r.is_empty() && !(self.kind == Kind::Tomography && self.state == StateKind::MaximallyMixed) {
                    return bad("grid needs at least one r".into());
                }
                if self.n.contains(&0) || self.r.contains(&0) || self.m.contains(&0) || self.m_factor.contains(&0) {
                    return bad("grid values must be positive".into());
                }
                if self.m.is_empty() == self.m_factor.is_empty() {
                    return bad("give exactly one of m and m_factor".into());
                }
                if self.eta.is_empty() {
                    return bad("eta list is empty".into());
                }
                for &n in &self.n {
                    if let Some(r) = self.r.iter().find(|&&r| r > n) {
                        return bad(format!("rank {r} exceeds dimension {n}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Grid cells (n, r, m) in configuration order.
    pub fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.n {
            let ranks = if self.kind == Kind::Tomography && self.state == StateKind::MaximallyMixed {
                vec![n]
            } else {
                self.r.clone()
            };
            for &r in &ranks {
                if self.m.is_empty() {
                    out.extend(self.m_factor.iter().map(|f| (n, r, f * r * n)));
                } else {
                    out.extend(self.m.iter().map(|&m| (n, r, m)));
                }
            }
        }
        out
    }
}

/// One solved instance. The first ten fields form the fixed CSV prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub eta: f64,
    pub seed: u64,
    pub trial: usize,
    pub rel_error: f64,
    pub success: bool,
    pub iterations: usize,
    pub wall_ms: f64,
    pub status: Status,
    pub objective: f64,
    /// objective value of the true signal
    pub truth_objective: f64,
    pub feasibility_gap: f64,
    pub b_norm: f64,
    /// error / (η/√m), noisy trials only
    pub error_ratio: Option<f64>,
    /// 1 − ½‖ρ − ρ̂‖₁, tomography only
    pub fidelity: Option<f64>,
    /// ρ̂ is PSD with unit trace, tomography only
    pub psd_trace_ok: Option<bool>,
}

pub const CSV_PREFIX: &str = "n,r,m,eta,seed,trial,rel_error,success,iterations,wall_ms";
