//! The registered analysis checks, run as one suite.

use rankone::analysis::{
    chernoff_sum_check, empirical_min_conic_singular, empirical_q, empirical_w_bound, gaussian_moment_check,
    kmt_lower_bound, kmt_xi, min_design_measurements, moment_identity_check, sample_descent_directions,
    small_ball_bound, BoundReport, Source,
};
use rankone::designs::{construct_phase_orbit_design, qubit_icosahedron, WeightedDesign};
use rankone::ensembles::{sample_gaussian, Field};
use rankone::linalg::{random_low_rank, random_unit_hermitian};
use rankone::rng::{derive_seed, stream, Stream};
use rankone::tensor::{factorial, sym_moment, sym_projector, TensorOperator};
use rankone::HermitianMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSize {
    pub scalar_trials: usize,
    pub matrix_trials: usize,
    pub random_z: usize,
    pub signals_per_rank: usize,
    pub directions: usize,
}

impl SuiteSize {
    pub fn full() -> Self {
        Self {
            scalar_trials: 100_000,
            matrix_trials: 200,
            random_z: 3,
            signals_per_rank: 10,
            directions: 100,
        }
    }

    pub fn quick() -> Self {
        Self {
            scalar_trials: 20_000,
            matrix_trials: 50,
            random_z: 1,
            signals_per_rank: 2,
            directions: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub quick: bool,
    pub entries: Vec<BoundReport>,
    /// every asserted entry passes; entries with `pass: null` are informational
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&BoundReport> {
        self.entries.iter().filter(|e| e.pass == Some(false)).collect()
    }
}

fn entry(quantity: String, estimate: f64, stderr: f64, bound: f64, source: &str, pass: Option<bool>) -> BoundReport {
    BoundReport {
        quantity,
        estimate,
        stderr,
        bound,
        bound_source: source.into(),
        pass,
    }
}

/// m!·tr(P_Sym Z^⊗m) from explicit tensors.
pub fn brute_force_sym_moment(z: &HermitianMatrix, m: usize) -> Result<f64> {
    let zt = TensorOperator::tensor_power(z, m)?;
    let p = sym_projector(z.dim(), m)?;
    Ok(factorial(m) as f64 * zt.trace_product(&p)?.re)
}

/// Largest relative deviation of sym_moment from the explicit tensor trace.
pub fn sym_moment_oracle(n: usize, m: usize, samples: usize, rng: &mut Stream) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let z = random_unit_hermitian(n, rng);
        let fast = sym_moment(&z, m)?;
        let brute = brute_force_sym_moment(&z, m)?;
        worst = worst.max((fast - brute).abs() / brute.abs().max(1e-300));
    }
    Ok(worst)
}

/// Exact 4-designs used as design sources: the icosahedron for qubits and
/// a phase-orbit construction otherwise.
pub fn exact_four_design(n: usize, seed: u64) -> Result<WeightedDesign> {
    if n == 2 {
        return Ok(qubit_icosahedron());
    }
    Ok(construct_phase_orbit_design(n, 4, 400, &mut stream(seed), 1e-10)?)
}

pub fn run_suite(seed: u64, size: SuiteSize, quick: bool) -> Result<VerifyReport> {
    let mut entries = Vec::new();
    let mut label = 0u64;
    let mut next_rng = || {
        label += 1;
        stream(derive_seed(seed, &[label]))
    };
    let designs = [exact_four_design(2, seed)?, exact_four_design(3, seed)?];

    for n in [2, 3] {
        for m in 1..=4 {
            let worst = sym_moment_oracle(n, m, 5, &mut next_rng())?;
            entries.push(entry(
                format!("sym_moment relative deviation (n={n}, m={m})"),
                worst,
                0.0,
                1e-10,
                "explicit tensor trace",
                Some(worst <= 1e-10),
            ));
        }
    }

    for k in 1..=4 {
        let c = gaussian_moment_check(k, size.scalar_trials, &mut next_rng())?;
        entries.push(entry(
            format!("E|Z|^{} complex Gaussian", 2 * k),
            c.mean,
            c.stderr,
            c.reference,
            "k! (two-sided, 3 sigma)",
            Some(c.within(3.0)),
        ));
    }

    for (name, source) in [
        ("complex Gaussian", Source::ComplexGaussian),
        ("exact 4-design", Source::Design(designs[0].clone())),
        ("exact 4-design", Source::Design(designs[1].clone())),
    ] {
        let n = match &source {
            Source::Design(d) => d.dim(),
            _ => 3,
        };
        let mut rng = next_rng();
        for _ in 0..size.random_z {
            let z = random_unit_hermitian(n, &mut rng);
            let rep = moment_identity_check(&source, &z, size.scalar_trials, &mut rng)?;
            entries.push(entry(
                format!("E S^2 {name} (n={n})"),
                rep.second,
                rep.second_stderr,
                rep.second_reference,
                "tr(Z)^2 + tr(Z^2) (two-sided, 3 sigma)",
                Some(rep.second_within(3.0)),
            ));
            if matches!(source, Source::ComplexGaussian) {
                let bound = 24.0 * rep.second * rep.second;
                entries.push(entry(
                    format!("E S^4 complex Gaussian (n={n})"),
                    rep.fourth,
                    rep.fourth_stderr,
                    bound,
                    "24 (E S^2)^2, upper bound",
                    Some(rep.fourth <= bound + 3.0 * rep.fourth_stderr),
                ));
            }
        }
    }

    let xi_c = std::f64::consts::FRAC_1_SQRT_2;
    for (name, source, xi, n) in [
        ("complex Gaussian", Source::ComplexGaussian, xi_c, 4),
        ("real Gaussian", Source::RealGaussian, 1.0, 4),
        ("exact 4-design", Source::Design(designs[0].clone()), 0.5, 2),
        ("exact 4-design", Source::Design(designs[1].clone()), 0.5, 3),
    ] {
        let bound = small_ball_bound(&source, xi).expect("bounded regime");
        let mut rng = next_rng();
        for _ in 0..size.random_z {
            let z = random_unit_hermitian(n, &mut rng);
            let q = empirical_q(&source, &z, xi, size.scalar_trials, &mut rng)?;
            entries.push(entry(
                format!("Q_{xi:.4} {name} (n={n})"),
                q.q_hat,
                q.stderr,
                bound,
                "small-ball lower bound",
                Some(q.q_hat + 3.0 * q.stderr >= bound),
            ));
        }
    }

    for r in 1..=3 {
        let mut rng = next_rng();
        let mut worst = 0.0_f64;
        for _ in 0..size.signals_per_rank {
            let x = random_low_rank(10, r, false, &mut rng)?;
            let sample = sample_descent_directions(&x, size.directions, &mut rng)?;
            for d in &sample.directions {
                worst = worst.max(d.y.nuclear_norm()? / d.y.frobenius_norm());
            }
        }
        let bound = 2.0 * (r as f64).sqrt();
        entries.push(entry(
            format!("max ||Y||_1/||Y||_2 over descent directions (n=10, r={r})"),
            worst,
            0.0,
            bound,
            "2 sqrt(r), upper bound",
            Some(worst <= bound + 1e-9),
        ));
    }

    for d in &designs {
        let n = d.dim();
        let m = min_design_measurements(n);
        let mut rng = next_rng();
        entries.push(chernoff_sum_check(d, m, size.matrix_trials, &mut rng)?);
        let w = empirical_w_bound(n, 1, m, &Source::Design(d.clone()), size.matrix_trials, &mut rng)?;
        entries.push(w.claim.expect("m meets the design width precondition"));
    }

    // informational entries: estimates with no stated numeric bound
    let mut rng = next_rng();
    let g = empirical_w_bound(16, 1, 64, &Source::ComplexGaussian, size.matrix_trials / 4 + 1, &mut rng)?;
    entries.push(entry(
        "E||H||_inf / sqrt(n) complex Gaussian (n=16, m=64)".into(),
        g.normalized,
        g.stderr_h / 4.0,
        f64::NAN,
        "measured constant, reported only",
        None,
    ));

    let (n, m) = (8, 48);
    let x = random_low_rank(n, 1, false, &mut rng)?;
    let sample = sample_descent_directions(&x, 500, &mut rng)?;
    let e = sample_gaussian(n, m, Field::Complex, &mut rng)?;
    let lam = empirical_min_conic_singular(&e, &sample)?;
    entries.push(entry(
        format!("sampled min ||A(Y)||_2 / sqrt(m) (n={n}, r=1, m={m})"),
        lam / (m as f64).sqrt(),
        0.0,
        0.1,
        "sampled estimate, reported only",
        None,
    ));

    let xi = kmt_xi();
    let z = random_unit_hermitian(n, &mut rng);
    let q = empirical_q(&Source::ComplexGaussian, &z, 2.0 * xi, size.scalar_trials, &mut rng)?;
    let w = empirical_w_bound(n, 1, m, &Source::ComplexGaussian, size.matrix_trials / 4 + 1, &mut rng)?;
    entries.push(entry(
        format!("KMT lower bound at xi = 1/(2 sqrt 2), t = 0 (n={n}, r=1, m={m})"),
        kmt_lower_bound(m, xi, q.q_hat, w.width_bound, 0.0),
        0.0,
        f64::NAN,
        "reported only",
        None,
    ));

    let all_pass = entries.iter().all(|e| e.pass != Some(false));
    Ok(VerifyReport {
        seed,
        quick,
        entries,
        all_pass,
    })
}

pub fn run_verify_suite(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    if cfg.kind != Kind::VerifySuite {
        return Err(BenchError::Config(format!("expected a VerifySuite config, got {:?}", cfg.kind)));
    }
    cfg.validate()?;
    let size = if cfg.quick { SuiteSize::quick() } else { SuiteSize::full() };
    run_suite(cfg.seed, size, cfg.quick)
}
