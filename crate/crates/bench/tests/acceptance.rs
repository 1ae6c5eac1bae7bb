//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::time::Instant;

use rankone::analysis::{
    chernoff_sum_check, empirical_q, empirical_w_bound, gaussian_moment_check, min_design_measurements,
    moment_identity_check, sample_descent_directions, small_ball_bound, Source,
};
use rankone::designs::{certify, write_design};
use rankone::linalg::{random_low_rank, random_unit_hermitian};
use rankone::rng::{derive_seed, stream};
use rankone_bench::config::{ExperimentConfig, Kind, TrialRecord};
use rankone_bench::design_report::{build_design, BuildMethod, BuildParams};
use rankone_bench::experiments::{minimality_witness, ExperimentOutput};
use rankone_bench::verify::{exact_four_design, sym_moment_oracle};
use rankone_bench::{run_noise_sweep, run_phase_diagram, run_tomography};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rates(out: &ExperimentOutput) -> String {
    out.summary
        .cells
        .iter()
        .map(|c| format!("(n={}, r={}, m={}): {:.2}", c.n, c.r, c.m, c.success_rate))
        .collect::<Vec<_>>()
        .join(", ")
}

fn all_cells_at_least(out: &ExperimentOutput, min: f64) -> bool {
    out.summary.cells.iter().all(|c| c.success_rate >= min)
}

fn criterion_1(noiseless: &mut Vec<TrialRecord>) -> Outcome {
    let mut cfg = ExperimentConfig::new(Kind::PhaseDiagram);
    cfg.n = vec![16];
    cfg.r = vec![1, 2, 3];
    cfg.m_factor = vec![6];
    cfg.trials = 50;
    cfg.seed = derive_seed(SEED, &[1]);
    let out = run_phase_diagram(&cfg).expect("phase diagram runs");
    noiseless.extend(out.records.iter().cloned());
    outcome(all_cells_at_least(&out, 0.9), format!("success rates {}", rates(&out)))
}

fn criterion_2(noiseless: &mut Vec<TrialRecord>) -> Outcome {
    let mut cfg = ExperimentConfig::new(Kind::Tomography);
    cfg.n = vec![8];
    cfg.r = vec![1];
    cfg.m = vec![48];
    cfg.trials = 50;
    cfg.seed = derive_seed(SEED, &[2]);
    let out = run_tomography(&cfg).expect("tomography runs");
    noiseless.extend(out.records.iter().cloned());
    let psd = out.records.iter().all(|t| t.psd_trace_ok == Some(true));
    outcome(
        all_cells_at_least(&out, 0.9) && psd,
        format!("success rates {}; all estimates PSD with trace 1: {psd}", rates(&out)),
    )
}

fn criterion_3() -> Outcome {
    let mut cfg = ExperimentConfig::new(Kind::NoiseSweep);
    cfg.n = vec![12];
    cfg.r = vec![2];
    cfg.m_factor = vec![8];
    cfg.eta = vec![1e-3, 1e-2, 1e-1];
    cfg.trials = 25;
    cfg.seed = derive_seed(SEED, &[3]);
    let out = run_noise_sweep(&cfg).expect("noise sweep runs");
    let ratios: Vec<f64> = out.summary.cells.iter().filter_map(|c| c.median_error_ratio).collect();
    let errors: Vec<f64> = out.summary.cells.iter().map(|c| c.median_rel_error).collect();
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let monotone = errors.windows(2).all(|w| w[0] <= w[1]);
    outcome(
        ratios.len() == 3 && hi / lo < 4.0 && monotone,
        format!(
            "median ratios {:?}, spread {:.3}; median errors {:?} monotone: {monotone}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
            hi / lo,
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [2, 3] {
        let (d, _) = build_design(&BuildParams {
            n,
            t: 4,
            candidates: None,
            seed: derive_seed(SEED, &[4, n as u64]),
            tol: 1e-10,
            method: BuildMethod::MomentMatching,
        })
        .expect("design construction succeeds");
        let mut worst = 0.0_f64;
        let mut gap = 0.0_f64;
        for k in 1..=4 {
            let c = certify(&d, k).expect("certificate");
            worst = worst.max(c.theta_inf);
            gap = gap.max(c.tight_frame_gap);
            pass &= c.theta_inf <= 1e-8 && c.tight_frame_gap <= 1e-10 && c.norms_ordered(n, 1e-12);
        }
        detail.push(format!("n={n}: {} vectors, max theta_inf {worst:.1e}, frame gap {gap:.1e}", d.len()));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_5(dir: &Path, noiseless: &mut Vec<TrialRecord>) -> Outcome {
    let d = exact_four_design(4, derive_seed(SEED, &[5])).expect("n=4 design");
    let c = certify(&d, 4).expect("certificate");
    let path = dir.join("design_n4_t4.json");
    write_design(&path, &d, None).expect("design file written");
    let mut cfg = ExperimentConfig::new(Kind::PhaseDiagram);
    cfg.n = vec![4];
    cfg.r = vec![1];
    cfg.m = vec![80];
    cfg.trials = 50;
    cfg.design = Some(path);
    cfg.seed = derive_seed(SEED, &[5]);
    let out = run_phase_diagram(&cfg).expect("design recovery runs");
    noiseless.extend(out.records.iter().cloned());
    outcome(
        all_cells_at_least(&out, 0.9) && c.theta_inf <= 1e-8,
        format!("design with {} vectors, theta_inf {:.1e}; success rates {}", d.len(), c.theta_inf, rates(&out)),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = stream(derive_seed(SEED, &[6]));
    let mut worst = 0.0_f64;
    for n in [2, 3] {
        for m in 1..=4 {
            worst = worst.max(sym_moment_oracle(n, m, 50, &mut rng).expect("oracle"));
        }
    }
    let part_a = worst <= 1e-10;

    let mut misses = Vec::new();
    let mut checked = 0;
    for n in [2, 3] {
        let design = exact_four_design(n, derive_seed(SEED, &[6, n as u64])).expect("design");
        for source in [Source::ComplexGaussian, Source::Design(design)] {
            for i in 0..20 {
                let z = random_unit_hermitian(n, &mut rng);
                let rep = moment_identity_check(&source, &z, 100_000, &mut rng).expect("moment check");
                checked += 1;
                if !rep.second_within(3.0) {
                    misses.push(format!("{} n={n} Z#{i}", source.name()));
                }
            }
        }
    }
    let part_b = misses.is_empty();

    let mut part_c = true;
    let mut means = Vec::new();
    for k in 1..=4 {
        let c = gaussian_moment_check(k, 100_000, &mut rng).expect("gaussian moments");
        part_c &= c.within(3.0);
        means.push(format!("{:.3}±{:.3}", c.mean, c.stderr));
    }
    outcome(
        part_a && part_b && part_c,
        format!(
            "(a) max rel deviation {worst:.1e}; (b) {} of {checked} outside 3 sigma {misses:?}; (c) means {means:?}",
            misses.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = stream(derive_seed(SEED, &[7]));
    let regimes = [
        ("complex_gaussian", Source::ComplexGaussian, std::f64::consts::FRAC_1_SQRT_2, 4),
        ("real_gaussian", Source::RealGaussian, 1.0, 4),
        ("design n=2", Source::Design(exact_four_design(2, 0).expect("design")), 0.5, 2),
        (
            "design n=3",
            Source::Design(exact_four_design(3, derive_seed(SEED, &[7, 3])).expect("design")),
            0.5,
            3,
        ),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, source, xi, n) in regimes {
        let bound = small_ball_bound(&source, xi).expect("bounded regime");
        let mut min_q = f64::INFINITY;
        for _ in 0..20 {
            let z = random_unit_hermitian(n, &mut rng);
            let q = empirical_q(&source, &z, xi, 100_000, &mut rng).expect("small ball");
            pass &= q.q_hat + 3.0 * q.stderr >= bound;
            min_q = min_q.min(q.q_hat);
        }
        detail.push(format!("{name}: min q {min_q:.4} vs {bound:.4}"));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let mut rng = stream(derive_seed(SEED, &[8]));
    let mut violations = 0;
    let mut detail = Vec::new();
    for r in 1..=3 {
        let bound = 2.0 * (r as f64).sqrt() + 1e-9;
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let x = random_low_rank(10, r, false, &mut rng).expect("signal");
            let sample = sample_descent_directions(&x, 100, &mut rng).expect("descent sample");
            for d in &sample.directions {
                let ratio = d.y.nuclear_norm().expect("eigenvalues") / d.y.frobenius_norm();
                worst = worst.max(ratio);
                if ratio > bound {
                    violations += 1;
                }
            }
        }
        detail.push(format!("r={r}: max ratio {worst:.4} vs {:.4}", bound));
    }
    outcome(violations == 0, format!("{violations} violations; {}", detail.join("; ")))
}

fn criterion_9() -> Outcome {
    let mut rng = stream(derive_seed(SEED, &[9]));
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [2, 3] {
        let d = exact_four_design(n, derive_seed(SEED, &[9, n as u64])).expect("design");
        let m = min_design_measurements(n);
        let chernoff = chernoff_sum_check(&d, m, 200, &mut rng).expect("chernoff");
        let width = empirical_w_bound(n, 1, m, &Source::Design(d), 200, &mut rng).expect("width");
        let claim = width.claim.expect("precondition met");
        pass &= chernoff.pass == Some(true) && claim.pass == Some(true);
        detail.push(format!(
            "n={n}, m={m}: sum {:.3} vs {:.3}, H {:.3} vs {:.3}",
            chernoff.estimate, chernoff.bound, claim.estimate, claim.bound
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_10(noiseless: &[TrialRecord]) -> Outcome {
    let c = minimality_witness(noiseless);
    outcome(c.pass, c.detail)
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut noiseless = Vec::new();
    let mut failed = 0;
    let mut report = |k: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {k:>2} {status} {name} [{:.1}s] {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    };
    report(1, "exact recovery, Gaussian", &mut || criterion_1(&mut noiseless));
    report(2, "PSD pure-state recovery", &mut || criterion_2(&mut noiseless));
    report(3, "noise robustness", &mut criterion_3);
    report(4, "design construction and certification", &mut criterion_4);
    report(5, "recovery from 4-design measurements", &mut || criterion_5(dir.path(), &mut noiseless));
    report(6, "moment identities", &mut criterion_6);
    report(7, "small-ball bounds", &mut criterion_7);
    report(8, "descent-cone bound", &mut criterion_8);
    report(9, "Chernoff and width constants", &mut criterion_9);
    report(10, "solver minimality witness", &mut || criterion_10(&noiseless));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
