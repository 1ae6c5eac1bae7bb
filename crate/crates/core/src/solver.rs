//! Nuclear-norm and PSD trace minimization under an ℓ2 data constraint,
//!
//!   minimize ‖Z‖₁ (or tr Z with Z ≽ 0)  subject to  ‖A(Z) − b‖₂ ≤ η,
//!
//! by ADMM on the splitting Z = W, A(Z) = y. The Z-update is the linear
//! system (I + A*A) Z = R, solved exactly through the m×m matrix
//! K = I + A A* (Woodbury); K does not depend on the penalty, so it is
//! factored once per problem.

use serde::{Deserialize, Serialize};

use crate::ensembles::MeasurementEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{EigenDecomposition, HermitianMatrix};

const RELAXATION: f64 = 1.6;
const BALANCE_RATIO: f64 = 3.0;
const WHITEN_PIVOT_MIN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// minimize ‖Z‖₁
    Nuclear,
    /// minimize tr Z over Z ≽ 0
    PsdTrace,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nuclear" => Ok(Mode::Nuclear),
            "psd_trace" | "psd" => Ok(Mode::PsdTrace),
            _ => Err(Error::Parse {
                field: "mode".into(),
                reason: format!("expected `nuclear` or `psd_trace`, got `{s}`"),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    ensemble: MeasurementEnsemble,
    b: Vec<f64>,
    eta: f64,
    mode: Mode,
}

impl RecoveryProblem {
    pub fn new(ensemble: MeasurementEnsemble, b: Vec<f64>, eta: f64, mode: Mode) -> Result<Self> {
        if b.len() != ensemble.count() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.count(),
                found: b.len(),
            });
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta must be nonnegative, got {eta}")));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("measurements must be finite".into()));
        }
        Ok(Self {
            ensemble,
            b,
            eta,
            mode,
        })
    }

    pub fn ensemble(&self) -> &MeasurementEnsemble {
        &self.ensemble
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// ‖A(Z) − b‖₂
    pub fn residual_norm(&self, z: &HermitianMatrix) -> Result<f64> {
        let az = self.ensemble.apply(z)?;
        Ok(norm(&sub(&az, &self.b)))
    }

    /// max(0, ‖A(Z) − b‖₂ − η)
    pub fn feasibility_gap(&self, z: &HermitianMatrix) -> Result<f64> {
        Ok((self.residual_norm(z)? - self.eta).max(0.0))
    }

    /// ‖Z‖₁ in nuclear mode, tr Z in PSD mode.
    pub fn objective(&self, z: &HermitianMatrix) -> Result<f64> {
        match self.mode {
            Mode::Nuclear => z.nuclear_norm(),
            Mode::PsdTrace => Ok(z.trace()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Initial ADMM penalty ρ.
    pub penalty: f64,
    /// Residual balancing: every 10 iterations ρ is doubled or halved when
    /// one residual exceeds the other threefold.
    pub adapt_penalty: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            penalty: 1.0,
            adapt_penalty: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(Error::Domain("solver tolerances must be positive".into()));
        }
        if !(self.penalty > 0.0) || !self.penalty.is_finite() {
            return Err(Error::Domain("penalty must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverResult {
    pub x_hat: HermitianMatrix,
    pub status: Status,
    pub iterations: usize,
    pub feasibility_gap: f64,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub penalty: f64,
}

/// Dense real symmetric positive definite factorization L Lᵀ.
struct Cholesky {
    m: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn new(m: usize, a: &[f64]) -> Option<Self> {
        let mut l = vec![0.0; m * m];
        for j in 0..m {
            let mut d = a[j * m + j];
            for k in 0..j {
                d -= l[j * m + k] * l[j * m + k];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[j * m + j] = d;
            for i in j + 1..m {
                let mut s = a[i * m + j];
                for k in 0..j {
                    s -= l[i * m + k] * l[j * m + k];
                }
                l[i * m + j] = s / d;
            }
        }
        Some(Self { m, l })
    }

    /// L⁻¹ x
    fn forward(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x = rhs.to_vec();
        for i in 0..m {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * m + k] * x[k];
            }
            x[i] = s / self.l[i * m + i];
        }
        x
    }

    /// L⁻ᵀ x
    fn backward(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x = rhs.to_vec();
        for i in (0..m).rev() {
            let mut s = x[i];
            for k in i + 1..m {
                s -= self.l[k * m + i] * x[k];
            }
            x[i] = s / self.l[i * m + i];
        }
        x
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(rhs))
    }

    /// Smallest squared pivot relative to the largest diagonal entry of the
    /// factored matrix; a cheap conditioning proxy.
    fn pivot_ratio(&self) -> f64 {
        let m = self.m;
        let d: Vec<f64> = (0..m).map(|i| self.l[i * m + i].powi(2)).collect();
        let big = d.iter().cloned().fold(0.0, f64::max);
        d.iter().cloned().fold(f64::INFINITY, f64::min) / big
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn mat_vec(m: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..m)
        .map(|i| a[i * m..(i + 1) * m].iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Euclidean projection of x onto the ball of radius r around c.
fn project_ball(x: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let d = sub(x, c);
    let nd = norm(&d);
    if nd <= r {
        x.to_vec()
    } else {
        c.iter().zip(&d).map(|(ci, di)| ci + di * (r / nd)).collect()
    }
}

/// Smallest achievable residual ‖A(Z) − b‖₂ in the scaled problem, via
/// iterated Tikhonov regularization of the Gram system.
fn least_squares_residual(m: usize, gram: &[f64], b: &[f64]) -> f64 {
    let trace: f64 = (0..m).map(|i| gram[i * m + i]).sum();
    let delta = 1e-10 * (trace / m as f64).max(1e-300);
    let mut reg = gram.to_vec();
    for i in 0..m {
        reg[i * m + i] += delta;
    }
    let Some(chol) = Cholesky::new(m, &reg) else {
        return norm(b);
    };
    let mut x = vec![0.0; m];
    let mut best = norm(b);
    for _ in 0..8 {
        let r = sub(b, &mat_vec(m, gram, &x));
        best = best.min(norm(&r));
        let step = chol.solve(&r);
        x.iter_mut().zip(&step).for_each(|(xi, si)| *xi += si);
    }
    best.min(norm(&sub(b, &mat_vec(m, gram, &x))))
}

struct Operator<'a> {
    ensemble: &'a MeasurementEnsemble,
    /// combined scale s/√m of the rescaled measurement matrices
    scale: f64,
    /// Cholesky factor L of the Gram matrix; the operator becomes L⁻¹Ã,
    /// whose rows are orthonormal
    whiten: Option<Cholesky>,
}

impl Operator<'_> {
    fn apply(&self, z: &HermitianMatrix) -> Vec<f64> {
        let out: Vec<f64> = self
            .ensemble
            .vectors()
            .iter()
            .map(|a| self.scale * z.quad_form(a))
            .collect();
        match &self.whiten {
            Some(l) => l.forward(&out),
            None => out,
        }
    }

    fn adjoint(&self, y: &[f64]) -> HermitianMatrix {
        let y = match &self.whiten {
            Some(l) => l.backward(y),
            None => y.to_vec(),
        };
        let mut out = HermitianMatrix::zeros(self.ensemble.dim());
        for (a, &yj) in self.ensemble.vectors().iter().zip(&y) {
            if yj != 0.0 {
                out.add_rank_one(a, self.scale * yj);
            }
        }
        out
    }
}

fn prox(mode: Mode, v: &HermitianMatrix, tau: f64, warm: &mut Option<EigenDecomposition>) -> Result<HermitianMatrix> {
    let eig = match warm.as_ref() {
        Some(basis) => v.eigh_warm(basis)?,
        None => v.eigh()?,
    };
    let out = match mode {
        Mode::Nuclear => eig.prox_nuclear(tau)?,
        Mode::PsdTrace => eig.prox_psd_trace(tau)?,
    };
    *warm = Some(eig);
    Ok(out)
}

pub fn solve(problem: &RecoveryProblem, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    let e = &problem.ensemble;
    let (n, m) = (e.dim(), e.count());
    let sqrt_m = (m as f64).sqrt();
    let mut op = Operator {
        ensemble: e,
        scale: e.matrix_scale() / sqrt_m,
        whiten: None,
    };
    let mut b: Vec<f64> = problem.b.iter().map(|x| x / sqrt_m).collect();
    let eta = problem.eta / sqrt_m;
    let b_norm = norm(&problem.b);
    let feas_tol = config.tol_primal * (1.0 + b_norm);

    let finish = |x_hat: HermitianMatrix, status, iterations, pr, dr, penalty| -> Result<SolverResult> {
        Ok(SolverResult {
            feasibility_gap: problem.feasibility_gap(&x_hat)?,
            objective: problem.objective(&x_hat)?,
            x_hat,
            status,
            iterations,
            primal_residual: pr,
            dual_residual: dr,
            penalty,
        })
    };

    // Z = 0 is feasible and optimal for both objectives
    if norm(&problem.b) <= problem.eta {
        return finish(HermitianMatrix::zeros(n), Status::Converged, 0, 0.0, 0.0, config.penalty);
    }

    let mut gram = e.gram();
    gram.iter_mut().for_each(|g| *g /= m as f64);
    if least_squares_residual(m, &gram, &b) * sqrt_m > problem.eta + feas_tol {
        return finish(HermitianMatrix::zeros(n), Status::Infeasible, 0, f64::NAN, f64::NAN, config.penalty);
    }
    // Noiseless constraints are unchanged by whitening, and the dual update
    // no longer slows down along weak directions of the Gram matrix.
    if problem.eta == 0.0 {
        if let Some(l) = Cholesky::new(m, &gram).filter(|l| l.pivot_ratio() > WHITEN_PIVOT_MIN) {
            b = l.forward(&b);
            gram = (0..m * m).map(|k| if k % (m + 1) == 0 { 1.0 } else { 0.0 }).collect();
            op.whiten = Some(l);
        }
    }
    let mut kmat = gram;
    for i in 0..m {
        kmat[i * m + i] += 1.0;
    }
    let k_chol = Cholesky::new(m, &kmat).ok_or_else(|| Error::Domain("measurement Gram matrix is not finite".into()))?;

    let mut rho = config.penalty;
    let mut w = HermitianMatrix::zeros(n);
    let mut y = project_ball(&vec![0.0; m], &b, eta);
    let mut u = HermitianMatrix::zeros(n);
    let mut v = vec![0.0; m];
    let mut warm: Option<EigenDecomposition> = None;
    let (mut pr, mut dr) = (f64::INFINITY, f64::INFINITY);

    for iter in 1..=config.max_iters {
        // Z-update: (I + A*A) Z = R, and A(Z) = K⁻¹ A(R)
        let mut r = w.sub(&u)?;
        r.axpy(1.0, &op.adjoint(&sub(&y, &v)));
        let s = k_chol.solve(&op.apply(&r));
        let mut z = r;
        z.axpy(-1.0, &op.adjoint(&s));
        let az = s;

        // over-relaxed copies of (Z, A(Z))
        let zh = z.lin_comb(RELAXATION, &w, 1.0 - RELAXATION)?;
        let azh: Vec<f64> = az
            .iter()
            .zip(&y)
            .map(|(a, yi)| RELAXATION * a + (1.0 - RELAXATION) * yi)
            .collect();
        let mut zu = zh.clone();
        zu.axpy(1.0, &u);
        let w_new = prox(problem.mode, &zu, 1.0 / rho, &mut warm)?;
        let azv: Vec<f64> = azh.iter().zip(&v).map(|(a, b)| a + b).collect();
        let y_new = project_ball(&azv, &b, eta);

        u.axpy(1.0, &zh.sub(&w_new)?);
        v.iter_mut()
            .zip(azh.iter().zip(&y_new))
            .for_each(|(vi, (a, yi))| *vi += a - yi);
        let rz = z.sub(&w_new)?;
        let ry = sub(&az, &y_new);

        let dw = w_new.sub(&w)?;
        let dy = sub(&y_new, &y);
        let mut dual = dw;
        dual.axpy(1.0, &op.adjoint(&dy));
        w = w_new;
        y = y_new;

        pr = (rz.frobenius_norm().powi(2) + norm(&ry).powi(2)).sqrt();
        dr = rho * dual.frobenius_norm();
        let primal_scale = (z.frobenius_norm().powi(2) + norm(&az).powi(2))
            .sqrt()
            .max((w.frobenius_norm().powi(2) + norm(&y).powi(2)).sqrt());
        let dual_scale = rho * (u.frobenius_norm().powi(2) + norm(&v).powi(2)).sqrt();

        if pr <= config.tol_primal * (1.0 + primal_scale) && dr <= config.tol_dual * (1.0 + dual_scale) {
            let gap = problem.feasibility_gap(&w)?;
            if gap <= feas_tol {
                return finish(w, Status::Converged, iter, pr, dr, rho);
            }
        }

        if config.adapt_penalty && iter % 10 == 0 {
            let factor = if pr > BALANCE_RATIO * dr {
                2.0
            } else if dr > BALANCE_RATIO * pr {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u = u.scaled(1.0 / factor);
                v.iter_mut().for_each(|vi| *vi /= factor);
            }
        }
    }
    finish(w, Status::MaxIters, config.max_iters, pr, dr, rho)
}

/// Diagnostics of a solution against its problem and, optionally, the
/// matrix that generated the measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub feasibility_gap: f64,
    pub objective: f64,
    pub residual_norm: f64,
    /// ‖X − X̂‖₂ (Frobenius)
    pub abs_error: Option<f64>,
    /// ‖X − X̂‖₂ / ‖X‖₂, or the absolute error when X = 0
    pub rel_error: Option<f64>,
    /// ‖X − X̂‖₂ / (η/√m), defined for η > 0
    pub error_ratio: Option<f64>,
    /// objective of X itself
    pub truth_objective: Option<f64>,
}

pub fn certify(result: &SolverResult, problem: &RecoveryProblem, truth: Option<&HermitianMatrix>) -> Result<SolutionReport> {
    let residual_norm = problem.residual_norm(&result.x_hat)?;
    let mut report = SolutionReport {
        feasibility_gap: (residual_norm - problem.eta).max(0.0),
        objective: problem.objective(&result.x_hat)?,
        residual_norm,
        abs_error: None,
        rel_error: None,
        error_ratio: None,
        truth_objective: None,
    };
    if let Some(x) = truth {
        let err = x.sub(&result.x_hat)?.frobenius_norm();
        let xn = x.frobenius_norm();
        report.abs_error = Some(err);
        report.rel_error = Some(if xn > 0.0 { err / xn } else { err });
        if problem.eta > 0.0 {
            report.error_ratio = Some(err / (problem.eta / (problem.b.len() as f64).sqrt()));
        }
        report.truth_objective = Some(problem.objective(x)?);
    }
    Ok(report)
}
