//! Monte Carlo checks of the quantities behind the recovery guarantees:
//! Gaussian and design moments, small-ball probabilities, the Rademacher
//! width matrix H, matrix-Chernoff sums and descent-cone geometry.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::designs::WeightedDesign;
use crate::ensembles::{sample_from_design, sample_gaussian, Field, MeasurementEnsemble};
use crate::error::{Error, Result};
use crate::linalg::{mat_mul, random_hermitian, HermitianMatrix, LowRankSignal, RANK_TOL};
use crate::rng::{complex_gaussian, complex_gaussian_vector, real_gaussian};
use crate::tensor::sym_moment;

/// Matrix-Chernoff constant for E‖Σ a_j a_j*‖∞ / m with super-normalized
/// design atoms and m ≥ 2n ln n.
pub const CHERNOFF_C5: f64 = 3.4084;
/// The τ at which [`CHERNOFF_C5`] is evaluated.
pub const CHERNOFF_TAU: f64 = 1.27;
/// Width constant for E‖H‖∞ / √(n ln 2n) with design measurements.
pub const WIDTH_C4: f64 = 3.1049;
/// Slack used when verifying descent-cone membership.
pub const DESCENT_SLACK: f64 = 1e-9;

const UNIT_TOL: f64 = 1e-8;

/// The KMT small-ball parameter used for Gaussian reporting.
pub fn kmt_xi() -> f64 {
    1.0 / (2.0 * std::f64::consts::SQRT_2)
}

/// ξ√m·Q_{2ξ} − 2W_m − ξt
pub fn kmt_lower_bound(m: usize, xi: f64, q_2xi: f64, w_m: f64, t: f64) -> f64 {
    xi * (m as f64).sqrt() * q_2xi - 2.0 * w_m - xi * t
}

/// (e^τ − 1)/τ·√2 + 1/(√2 τ)
pub fn chernoff_constant(tau: f64) -> f64 {
    (tau.exp() - 1.0) / tau * std::f64::consts::SQRT_2 + 1.0 / (std::f64::consts::SQRT_2 * tau)
}

/// Smallest m with m ≥ 2n ln n.
pub fn min_design_measurements(n: usize) -> usize {
    (2.0 * n as f64 * (n as f64).ln()).ceil().max(1.0) as usize
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub quantity: String,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub bound_source: String,
    /// None when the check is informational only.
    pub pass: Option<bool>,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Where measurement vectors come from.
#[derive(Debug, Clone)]
pub enum Source {
    ComplexGaussian,
    RealGaussian,
    /// Draws from the design, with matrix scale √(n(n+1)).
    Design(WeightedDesign),
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::ComplexGaussian => "complex_gaussian",
            Source::RealGaussian => "real_gaussian",
            Source::Design(_) => "design",
        }
    }

    pub fn ensemble<R: Rng + ?Sized>(&self, n: usize, m: usize, rng: &mut R) -> Result<MeasurementEnsemble> {
        match self {
            Source::ComplexGaussian => sample_gaussian(n, m, Field::Complex, rng),
            Source::RealGaussian => sample_gaussian(n, m, Field::Real, rng),
            Source::Design(d) => {
                check_dim(d.dim(), n)?;
                sample_from_design(d, m, rng)
            }
        }
    }

    fn sampler(&self, n: usize) -> Result<Sampler<'_>> {
        Ok(match self {
            Source::ComplexGaussian => Sampler::Complex(n),
            Source::RealGaussian => Sampler::Real(n),
            Source::Design(d) => {
                check_dim(d.dim(), n)?;
                let index = WeightedIndex::new(d.weights()).map_err(|e| Error::InvalidDesign(e.to_string()))?;
                let nf = n as f64;
                Sampler::Design {
                    design: d,
                    index,
                    scale: (nf * (nf + 1.0)).sqrt(),
                }
            }
        })
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

enum Sampler<'a> {
    Complex(usize),
    Real(usize),
    Design {
        design: &'a WeightedDesign,
        index: WeightedIndex<f64>,
        scale: f64,
    },
}

impl Sampler<'_> {
    /// S = tr(A Z) for one random measurement matrix A.
    fn draw<R: Rng + ?Sized>(&self, z: &HermitianMatrix, rng: &mut R) -> f64 {
        match self {
            Sampler::Complex(n) => z.quad_form(&complex_gaussian_vector(*n, rng)),
            Sampler::Real(n) => {
                let a: Vec<Complex64> = (0..*n).map(|_| Complex64::new(real_gaussian(rng), 0.0)).collect();
                z.quad_form(&a)
            }
            Sampler::Design { design, index, scale } => scale * z.quad_form(&design.vectors()[index.sample(rng)]),
        }
    }
}

fn check_unit_frobenius(z: &HermitianMatrix) -> Result<()> {
    let f = z.frobenius_norm();
    if (f - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotNormalized { norm: f });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMomentCheck {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
    pub reference: f64,
}

impl GaussianMomentCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.mean - self.reference).abs() <= sigmas * self.stderr
    }
}

/// Sample mean of |Z|^{2k} for a standard complex Gaussian Z; reference k!.
pub fn gaussian_moment_check<R: Rng + ?Sized>(k: usize, trials: usize, rng: &mut R) -> Result<GaussianMomentCheck> {
    if k == 0 || k > 4 {
        return Err(Error::Domain(format!("moment order must satisfy 1 <= k <= 4, got {k}")));
    }
    if trials < 2 {
        return Err(Error::Domain("need at least two trials".into()));
    }
    let xs: Vec<f64> = (0..trials)
        .map(|_| complex_gaussian(rng).norm_sqr().powi(k as i32))
        .collect();
    let (mean, stderr) = mean_stderr(&xs);
    Ok(GaussianMomentCheck {
        k,
        mean,
        stderr,
        reference: (1..=k).product::<usize>() as f64,
    })
}

/// Sampled second and fourth moments of S = tr(A Z) against closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentIdentityReport {
    pub second: f64,
    pub second_stderr: f64,
    /// tr(Z)² + tr(Z²)
    pub second_reference: f64,
    pub fourth: f64,
    pub fourth_stderr: f64,
    /// 24·tr(P_Sym Z^⊗4) for Gaussians, scaled by n(n+1)/((n+3)(n+2)) for designs
    pub fourth_reference: f64,
    /// E S⁴ / (E S²)², from the samples
    pub kurtosis: f64,
}

impl MomentIdentityReport {
    pub fn second_within(&self, sigmas: f64) -> bool {
        (self.second - self.second_reference).abs() <= sigmas * self.second_stderr
    }

    pub fn fourth_within(&self, sigmas: f64) -> bool {
        (self.fourth - self.fourth_reference).abs() <= sigmas * self.fourth_stderr
    }
}

/// Requires ‖Z‖₂ = 1 and a complex source (Gaussian or exact 4-design).
pub fn moment_identity_check<R: Rng + ?Sized>(
    source: &Source,
    z: &HermitianMatrix,
    trials: usize,
    rng: &mut R,
) -> Result<MomentIdentityReport> {
    check_unit_frobenius(z)?;
    if trials < 2 {
        return Err(Error::Domain("need at least two trials".into()));
    }
    let n = z.dim();
    // sym_moment carries the 4! factor
    let p4 = sym_moment(z, 4)?;
    let fourth_reference = match source {
        Source::ComplexGaussian => p4,
        Source::Design(_) => {
            let nf = n as f64;
            nf * (nf + 1.0) / ((nf + 3.0) * (nf + 2.0)) * p4
        }
        Source::RealGaussian => {
            return Err(Error::Domain("reference moments are stated for complex sources".into()))
        }
    };
    let sampler = source.sampler(n)?;
    let mut s2 = Vec::with_capacity(trials);
    let mut s4 = Vec::with_capacity(trials);
    for _ in 0..trials {
        let s = sampler.draw(z, rng);
        s2.push(s * s);
        s4.push(s.powi(4));
    }
    let (second, second_stderr) = mean_stderr(&s2);
    let (fourth, fourth_stderr) = mean_stderr(&s4);
    Ok(MomentIdentityReport {
        second,
        second_stderr,
        second_reference: z.trace().powi(2) + z.frobenius_norm().powi(2),
        fourth,
        fourth_stderr,
        fourth_reference,
        kurtosis: fourth / (second * second),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub xi: f64,
    pub q_hat: f64,
    pub trials: usize,
    /// √(q̂(1−q̂)/trials)
    pub stderr: f64,
}

/// Estimates P(|tr(A Z)| ≥ ξ) for unit-Frobenius Z.
pub fn empirical_q<R: Rng + ?Sized>(
    source: &Source,
    z: &HermitianMatrix,
    xi: f64,
    trials: usize,
    rng: &mut R,
) -> Result<SmallBallEstimate> {
    if !(xi > 0.0) {
        return Err(Error::Domain(format!("xi must be positive, got {xi}")));
    }
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    check_unit_frobenius(z)?;
    let sampler = source.sampler(z.dim())?;
    let hits = (0..trials).filter(|_| sampler.draw(z, rng).abs() >= xi).count();
    let q_hat = hits as f64 / trials as f64;
    Ok(SmallBallEstimate {
        xi,
        q_hat,
        trials,
        stderr: (q_hat * (1.0 - q_hat) / trials as f64).sqrt(),
    })
}

/// Known lower bound on the small-ball probability, where one is stated:
/// (1−ξ²)²/24 for complex Gaussians and exact 4-designs with ξ < 1, and
/// 1/108 for real Gaussians at ξ = 1.
pub fn small_ball_bound(source: &Source, xi: f64) -> Option<f64> {
    match source {
        Source::ComplexGaussian | Source::Design(_) if xi > 0.0 && xi < 1.0 => {
            Some((1.0 - xi * xi).powi(2) / 24.0)
        }
        Source::RealGaussian if xi == 1.0 => Some(1.0 / 108.0),
        _ => None,
    }
}

/// H = (1/√m) Σ_j ε_j A_j with independent Rademacher signs.
pub fn rademacher_h<R: Rng + ?Sized>(e: &MeasurementEnsemble, rng: &mut R) -> HermitianMatrix {
    let signs: Vec<f64> = (0..e.count())
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    rademacher_h_with_signs(e, &signs)
}

pub fn rademacher_h_with_signs(e: &MeasurementEnsemble, signs: &[f64]) -> HermitianMatrix {
    let mut h = HermitianMatrix::zeros(e.dim());
    let s = e.matrix_scale() / (e.count() as f64).sqrt();
    for (a, eps) in e.vectors().iter().zip(signs) {
        h.add_rank_one(a, s * eps);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub source: String,
    /// sample mean of ‖H‖∞
    pub mean_h: f64,
    pub stderr_h: f64,
    /// 2√r·mean ‖H‖∞, an upper estimate of the mean empirical width
    pub width_bound: f64,
    /// mean ‖H‖∞ / √n
    pub normalized: f64,
    /// design sources with m ≥ 2n ln n: the c₄ claim
    pub claim: Option<BoundReport>,
}

pub fn empirical_w_bound<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    m: usize,
    source: &Source,
    trials: usize,
    rng: &mut R,
) -> Result<WidthReport> {
    if n == 0 || r == 0 || r > n || m == 0 || trials == 0 {
        return Err(Error::Domain("need n, m, trials >= 1 and 1 <= r <= n".into()));
    }
    let norms = (0..trials)
        .map(|_| {
            let e = source.ensemble(n, m, rng)?;
            rademacher_h(&e, rng).spectral_norm()
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean_h, stderr_h) = mean_stderr(&norms);
    let claim = match source {
        Source::Design(_) if m >= min_design_measurements(n) => {
            let nf = n as f64;
            let bound = WIDTH_C4 * (nf * (2.0 * nf).ln()).sqrt();
            Some(BoundReport {
                quantity: format!("E||H||_inf (design, n={n}, m={m})"),
                estimate: mean_h,
                stderr: stderr_h,
                bound,
                bound_source: "design width constant c4 = 3.1049, upper bound".into(),
                pass: Some(mean_h <= bound + 3.0 * stderr_h),
            })
        }
        _ => None,
    };
    Ok(WidthReport {
        n,
        r,
        m,
        source: source.name().into(),
        mean_h,
        stderr_h,
        width_bound: 2.0 * (r as f64).sqrt() * mean_h,
        normalized: mean_h / (n as f64).sqrt(),
        claim,
    })
}

/// Mean of ‖Σ_j A_j‖∞ for m design draws against c₅·m. The claim is only
/// asserted when m ≥ 2n ln n and the design is a tight frame.
pub fn chernoff_sum_check<R: Rng + ?Sized>(d: &WeightedDesign, m: usize, trials: usize, rng: &mut R) -> Result<BoundReport> {
    if m == 0 || trials == 0 {
        return Err(Error::Domain("need m, trials >= 1".into()));
    }
    let n = d.dim();
    let norms = (0..trials)
        .map(|_| {
            let e = sample_from_design(d, m, rng)?;
            e.adjoint(&vec![1.0; m])?.spectral_norm()
        })
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, stderr) = mean_stderr(&norms);
    let mut frame = d.frame_operator();
    frame.axpy(-1.0 / n as f64, &HermitianMatrix::identity(n));
    let tight = frame.spectral_norm()? <= 1e-8;
    let bound = CHERNOFF_C5 * m as f64;
    let asserted = tight && m >= min_design_measurements(n);
    Ok(BoundReport {
        quantity: format!("E||sum A_j||_inf (design, n={n}, m={m})"),
        estimate,
        stderr,
        bound,
        bound_source: "matrix Chernoff constant c5 = 3.4084 times m, upper bound".into(),
        pass: asserted.then_some(estimate <= bound + 3.0 * stderr),
    })
}

/// A verified descent direction and the step at which it was verified.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentDirection {
    pub y: HermitianMatrix,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentSample {
    pub signal: LowRankSignal,
    pub directions: Vec<DescentDirection>,
}

/// Largest τ ∈ {2⁻¹, …, 2⁻¹⁰} with ‖X + τY‖₁ ≤ ‖X‖₁ + slack.
pub fn verify_descent(x: &HermitianMatrix, y: &HermitianMatrix, slack: f64) -> Result<Option<f64>> {
    let f0 = x.nuclear_norm()?;
    for k in 1..=10 {
        let tau = 0.5_f64.powi(k);
        if x.lin_comb(1.0, y, tau)?.nuclear_norm()? <= f0 + slack {
            return Ok(Some(tau));
        }
    }
    Ok(None)
}

/// Samples unit-Frobenius directions in the descent cone of ‖·‖₁ at X.
///
/// In the eigenbasis of X a direction splits into a support block Y₁,
/// a coupling block Y₂ and an off-support block Y₄. To first order the
/// nuclear norm changes by tr(S₁Y₁) + ‖Y₄‖₁ with S₁ the sign pattern of
/// the nonzero eigenvalues, so random blocks are drawn and Y₁ is shifted
/// along −S₁ until that quantity is negative by a random margin. Every
/// candidate is then verified on the dyadic τ grid; failures are redrawn.
pub fn sample_descent_directions<R: Rng + ?Sized>(x: &LowRankSignal, count: usize, rng: &mut R) -> Result<DescentSample> {
    let n = x.matrix.dim();
    let eig = x.matrix.eigh()?;
    let mx = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let mut support: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k].abs() > RANK_TOL * mx).collect();
    if support.len() != x.rank || x.rank == 0 {
        return Err(Error::Domain(format!(
            "signal has numerical rank {} but declares rank {}",
            support.len(),
            x.rank
        )));
    }
    let r = support.len();
    let off: Vec<usize> = (0..n).filter(|k| !support.contains(k)).collect();
    support.extend(&off);
    // columns reordered: support first
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    for (new, &old) in support.iter().enumerate() {
        for i in 0..n {
            u[i * n + new] = eig.vectors[i * n + old];
        }
    }
    let mut uh = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            uh[j * n + i] = u[i * n + j].conj();
        }
    }
    let signs: Vec<f64> = support[..r].iter().map(|&k| eig.eigenvalues[k].signum()).collect();
    let q = n - r;

    let mut directions = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while directions.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::Domain("descent sampler failed to verify candidates".into()));
        }
        let y = match rng.random_range(0..8) {
            0 => x.matrix.scaled(-1.0),
            kind => {
                let mut block = vec![Complex64::new(0.0, 0.0); n * n];
                let y1 = random_hermitian(r, rng);
                for i in 0..r {
                    for j in 0..r {
                        block[i * n + j] = y1.get(i, j);
                    }
                }
                let mut budget = (0..r).map(|i| signs[i] * y1.get(i, i).re).sum::<f64>();
                if kind > 1 && q > 0 {
                    let s2 = (rng.random_range(-4.0..1.0_f64)).exp();
                    for i in 0..r {
                        for j in r..n {
                            let g = complex_gaussian(rng) * s2;
                            block[i * n + j] = g;
                            block[j * n + i] = g.conj();
                        }
                    }
                    let y4 = off_support_block(q, kind, rng);
                    let s4 = (rng.random_range(-3.0..1.0_f64)).exp();
                    for i in 0..q {
                        for j in 0..q {
                            block[(r + i) * n + r + j] = y4.get(i, j) * s4;
                        }
                    }
                    budget += s4 * y4.nuclear_norm()?;
                }
                // shift Y₁ by −c·S₁ so the first-order change is −margin
                let scale = (0..r).map(|i| block[i * n + i].norm()).sum::<f64>() + budget.abs() + 1e-3;
                let margin = rng.random_range(0.001..1.0) * scale;
                let c = (budget + margin) / r as f64;
                for i in 0..r {
                    block[i * n + i] -= c * signs[i];
                }
                HermitianMatrix::new(n, mat_mul(n, &mat_mul(n, &u, &block), &uh))?
            }
        };
        let f = y.frobenius_norm();
        if f == 0.0 {
            continue;
        }
        let y = y.scaled(1.0 / f);
        if let Some(tau) = verify_descent(&x.matrix, &y, DESCENT_SLACK)? {
            directions.push(DescentDirection { y, tau });
        }
    }
    Ok(DescentSample {
        signal: x.clone(),
        directions,
    })
}

/// Off-support block shapes: general, positive semidefinite, or spread
/// evenly (flat spectrum, small Frobenius norm for its nuclear norm).
fn off_support_block<R: Rng + ?Sized>(q: usize, kind: usize, rng: &mut R) -> HermitianMatrix {
    match kind % 3 {
        0 => random_hermitian(q, rng),
        1 => {
            let g = random_hermitian(q, rng);
            let p = mat_mul(q, g.as_slice(), g.as_slice());
            HermitianMatrix::new(q, p).expect("square of a Hermitian matrix is Hermitian")
        }
        _ => HermitianMatrix::identity(q),
    }
}

/// min over sampled directions of ‖A(Y)‖₂; an upper estimate of the
/// minimum conic singular value, not a certified bound.
pub fn empirical_min_conic_singular(e: &MeasurementEnsemble, sample: &DescentSample) -> Result<f64> {
    if sample.directions.is_empty() {
        return Err(Error::Domain("descent sample is empty".into()));
    }
    let mut best = f64::INFINITY;
    for d in &sample.directions {
        let ay = e.apply(&d.y)?;
        best = best.min(ay.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(best)
}

/// ‖X − X̂‖₂·‖A(Ŷ)‖₂ ≤ 2η(1 + 1e-6) + gap with Ŷ the normalized error,
/// which holds whenever X and X̂ are both feasible up to `gap`.
pub fn error_bound_consistent(
    e: &MeasurementEnsemble,
    x: &HermitianMatrix,
    x_hat: &HermitianMatrix,
    eta: f64,
    gap: f64,
) -> Result<bool> {
    let diff = x_hat.sub(x)?;
    let ad = e.apply(&diff)?;
    let lhs = ad.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(lhs <= 2.0 * eta * (1.0 + 1e-6) + gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{construct_weighted_design, qubit_icosahedron};
    use crate::linalg::{random_low_rank, random_unit_hermitian};
    use crate::rng::{haar_vector, stream};

    #[test]
    fn constants_follow_from_their_formulas() {
        assert!((chernoff_constant(CHERNOFF_TAU) - CHERNOFF_C5).abs() < 1e-4);
        assert!((2.0_f64.powf(0.75) * CHERNOFF_C5.sqrt() - WIDTH_C4).abs() < 1e-4);
        assert_eq!(min_design_measurements(2), 3);
        assert_eq!(min_design_measurements(3), 7);
        assert!((kmt_xi() - 0.353_553_390_593_273_8).abs() < 1e-15);
    }

    #[test]
    fn gaussian_moments_are_factorials() {
        let mut rng = stream(1);
        for (k, reference) in [(1, 1.0), (2, 2.0), (3, 6.0), (4, 24.0)] {
            let c = gaussian_moment_check(k, 100_000, &mut rng).unwrap();
            assert_eq!(c.reference, reference);
            assert!(c.within(3.0), "{c:?}");
        }
        assert!(gaussian_moment_check(5, 10, &mut rng).is_err());
    }

    #[test]
    fn moment_references() {
        let mut rng = stream(2);
        // traceless Z: reference E S² = 1
        let mut z = random_unit_hermitian(2, &mut rng);
        let t = z.trace() / 2.0;
        z.axpy(-t, &HermitianMatrix::identity(2));
        let z = z.scaled(1.0 / z.frobenius_norm());
        let rep = moment_identity_check(&Source::Design(qubit_icosahedron()), &z, 1000, &mut rng).unwrap();
        assert!((rep.second_reference - 1.0).abs() < 1e-12);
        // Z = id/√n: reference n + 1
        let n = 3;
        let z = HermitianMatrix::identity(n).scaled(1.0 / (n as f64).sqrt());
        let rep = moment_identity_check(&Source::ComplexGaussian, &z, 1000, &mut rng).unwrap();
        assert!((rep.second_reference - (n as f64 + 1.0)).abs() < 1e-12);
        assert!(moment_identity_check(&Source::ComplexGaussian, &z.scaled(2.0), 10, &mut rng).is_err());
    }

    #[test]
    fn exact_design_fourth_moment_reference_is_exact() {
        // the design average is a finite sum; compare it with the reference directly
        let d = qubit_icosahedron();
        let mut rng = stream(3);
        for _ in 0..10 {
            let z = random_unit_hermitian(2, &mut rng);
            let s = 6.0_f64.sqrt();
            let exact: f64 = d
                .vectors()
                .iter()
                .zip(d.weights())
                .map(|(w, p)| p * (s * z.quad_form(w)).powi(4))
                .sum();
            let rep = moment_identity_check(&Source::Design(d.clone()), &z, 10, &mut rng).unwrap();
            assert!((exact - rep.fourth_reference).abs() < 1e-10, "{exact} vs {}", rep.fourth_reference);
        }
    }

    #[test]
    fn moment_identities_hold_in_monte_carlo() {
        let mut rng = stream(4);
        let design = construct_weighted_design(3, 4, 10_000, &mut rng, 1e-8).unwrap();
        for source in [Source::ComplexGaussian, Source::Design(design)] {
            let z = random_unit_hermitian(3, &mut rng);
            let rep = moment_identity_check(&source, &z, 100_000, &mut rng).unwrap();
            assert!(rep.second_within(3.0), "{rep:?}");
            assert!(rep.fourth_within(3.0), "{rep:?}");
            assert!(rep.kurtosis <= 24.0);
        }
    }

    #[test]
    fn small_ball_bounds() {
        let mut rng = stream(5);
        let z = random_unit_hermitian(4, &mut rng);
        let xi = std::f64::consts::FRAC_1_SQRT_2;
        let est = empirical_q(&Source::ComplexGaussian, &z, xi, 20_000, &mut rng).unwrap();
        assert!((small_ball_bound(&Source::ComplexGaussian, xi).unwrap() - 1.0 / 96.0).abs() < 1e-15);
        assert!(est.q_hat + 3.0 * est.stderr >= 1.0 / 96.0);
        assert!((est.stderr - (est.q_hat * (1.0 - est.q_hat) / 20_000.0).sqrt()).abs() < 1e-15);
        let real = empirical_q(&Source::RealGaussian, &z, 1.0, 20_000, &mut rng).unwrap();
        assert!(real.q_hat + 3.0 * real.stderr >= small_ball_bound(&Source::RealGaussian, 1.0).unwrap());
        let d = Source::Design(qubit_icosahedron());
        let z2 = random_unit_hermitian(2, &mut rng);
        let est = empirical_q(&d, &z2, 0.5, 20_000, &mut rng).unwrap();
        let bound = small_ball_bound(&d, 0.5).unwrap();
        assert!((bound - 0.5625 / 24.0).abs() < 1e-15);
        assert!(est.q_hat + 3.0 * est.stderr >= bound);
        assert!(empirical_q(&d, &z2, 0.0, 10, &mut rng).is_err());
    }

    #[test]
    fn rademacher_matrix_properties() {
        let mut rng = stream(6);
        let e = sample_gaussian(3, 1, Field::Complex, &mut rng).unwrap();
        let h = rademacher_h(&e, &mut rng);
        assert_eq!(h.rank().unwrap(), 1);
        let a = &e.vectors()[0];
        let aa = HermitianMatrix::rank_one(a, 1.0);
        assert!(h.sub(&aa).unwrap().frobenius_norm() < 1e-14 || h.add(&aa).unwrap().frobenius_norm() < 1e-14);

        let m = 8;
        let e = sample_gaussian(3, m, Field::Complex, &mut rng).unwrap();
        let mut total = HermitianMatrix::zeros(3);
        for mask in 0u32..(1 << m) {
            let signs: Vec<f64> = (0..m).map(|j| if mask & (1 << j) != 0 { 1.0 } else { -1.0 }).collect();
            let h = rademacher_h_with_signs(&e, &signs);
            let tri: f64 = e.vectors().iter().map(|a| a.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>()
                / (m as f64).sqrt();
            assert!(h.spectral_norm().unwrap() <= tri + 1e-12);
            total.axpy(1.0, &h);
        }
        assert!(total.frobenius_norm() < 1e-12);

        // a single design atom: ‖H‖∞ = √((n+1)n)
        let single = WeightedDesign::uniform(3, 1, vec![haar_vector(3, &mut rng)]).unwrap();
        let e = sample_from_design(&single, 1, &mut rng).unwrap();
        assert!((rademacher_h(&e, &mut rng).spectral_norm().unwrap() - 12.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn width_and_chernoff_claims() {
        let mut rng = stream(7);
        let d = qubit_icosahedron();
        let m = min_design_measurements(2);
        let rep = empirical_w_bound(2, 1, m, &Source::Design(d.clone()), 200, &mut rng).unwrap();
        assert_eq!(rep.claim.as_ref().unwrap().pass, Some(true));
        let g = empirical_w_bound(16, 1, 64, &Source::ComplexGaussian, 20, &mut rng).unwrap();
        assert!(g.claim.is_none() && g.normalized > 0.5 && g.normalized < 10.0);

        let rep = chernoff_sum_check(&d, 6, 500, &mut rng).unwrap();
        assert_eq!(rep.pass, Some(true), "{rep:?}");
        // below 2n ln n only reported
        let basis = (0..3)
            .map(|i| (0..3).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let rep = chernoff_sum_check(&WeightedDesign::uniform(3, 1, basis).unwrap(), 2, 10, &mut rng).unwrap();
        assert_eq!(rep.pass, None);
    }

    #[test]
    fn chernoff_mean_matches_closed_form() {
        // E Σ A_j = m·√((n+1)n)/n·id for an exact 1-design
        let d = qubit_icosahedron();
        let (m, trials) = (6, 4000);
        let mut rng = stream(8);
        let mut samples = vec![Vec::new(); 4];
        for _ in 0..trials {
            let e = sample_from_design(&d, m, &mut rng).unwrap();
            let s = e.adjoint(&vec![1.0; m]).unwrap();
            samples[0].push(s.get(0, 0).re);
            samples[1].push(s.get(1, 1).re);
            samples[2].push(s.get(0, 1).re);
            samples[3].push(s.get(0, 1).im);
        }
        let diag = m as f64 * 6.0_f64.sqrt() / 2.0;
        for (k, xs) in samples.iter().enumerate() {
            let (mean, se) = mean_stderr(xs);
            let target = if k < 2 { diag } else { 0.0 };
            assert!((mean - target).abs() < 3.5 * se, "{k}: {mean} ± {se} vs {target}");
        }
        let e = sample_from_design(&d, 20, &mut rng).unwrap();
        for a in e.vectors() {
            let sq: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>() * e.matrix_scale();
            assert!((sq - 6.0_f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn descent_directions_are_verified_and_obey_the_cone_bound() {
        let mut rng = stream(9);
        for r in 1..=3 {
            let x = random_low_rank(8, r, false, &mut rng).unwrap();
            let sample = sample_descent_directions(&x, 300, &mut rng).unwrap();
            let bound = 2.0 * (r as f64).sqrt();
            for d in &sample.directions {
                assert!((d.y.frobenius_norm() - 1.0).abs() < 1e-12);
                let f = x.matrix.lin_comb(1.0, &d.y, d.tau).unwrap().nuclear_norm().unwrap();
                assert!(f <= x.matrix.nuclear_norm().unwrap() + DESCENT_SLACK);
                assert!(d.y.nuclear_norm().unwrap() <= bound + 1e-9);
            }
        }
        let x = random_low_rank(5, 2, true, &mut rng).unwrap();
        let y = x.matrix.scaled(-1.0 / x.matrix.frobenius_norm());
        assert!(verify_descent(&x.matrix, &y, DESCENT_SLACK).unwrap().is_some());
    }

    #[test]
    fn conic_singular_estimate() {
        let mut rng = stream(10);
        let x = random_low_rank(6, 1, false, &mut rng).unwrap();
        let sample = sample_descent_directions(&x, 50, &mut rng).unwrap();
        let e = sample_gaussian(6, 1, Field::Complex, &mut rng).unwrap();
        let direct = sample
            .directions
            .iter()
            .map(|d| e.apply(&d.y).unwrap()[0].abs())
            .fold(f64::INFINITY, f64::min);
        assert!((empirical_min_conic_singular(&e, &sample).unwrap() - direct).abs() < 1e-14);

        let e = sample_gaussian(6, 30, Field::Complex, &mut rng).unwrap();
        let doubled = MeasurementEnsemble::new(
            6,
            Field::Complex,
            1.0,
            e.vectors()
                .iter()
                .map(|a| a.iter().map(|z| z * std::f64::consts::SQRT_2).collect())
                .collect(),
        )
        .unwrap();
        let a = empirical_min_conic_singular(&e, &sample).unwrap();
        let b = empirical_min_conic_singular(&doubled, &sample).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
    }
}
