//! Weighted complex projective t-designs: construction by nonnegative
//! moment matching, certification, perturbation and file interchange.
//!
//! The moment gap Σ p_i (w_i w_i*)^⊗k − P_Sym/D vanishes off the symmetric
//! subspace, so it is evaluated in an orthonormal basis of Sym^k of
//! dimension D = binom(n+k−1, k) rather than on the full n^k-dimensional
//! tensor space.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{schatten_from_eigenvalues, vec_dot, vec_norm, HermitianMatrix};
use crate::nnls::{nnls, ColumnMatrix};
use crate::rng::{complex_gaussian_vector, haar_vector};
use crate::tensor::{factorial, rank_one_tensor_power, sym_dim, sym_projector, TensorOperator};

/// Weights below this are dropped after construction.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

const NORM_TOL: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-12;
const MAX_SYM_DIM: usize = 64;
const MAX_PERTURBATION: f64 = 0.1;

/// A finite set of unit vectors with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDesign {
    n: usize,
    t: usize,
    vectors: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
}

impl WeightedDesign {
    /// Validates unit norms (1e-10), nonnegative weights and Σp = 1 (1e-12).
    pub fn new(n: usize, t: usize, vectors: Vec<Vec<Complex64>>, weights: Vec<f64>) -> Result<Self> {
        if n == 0 || t == 0 {
            return Err(Error::InvalidDesign("dimension and order must be positive".into()));
        }
        if vectors.is_empty() {
            return Err(Error::InvalidDesign("design has no vectors".into()));
        }
        if vectors.len() != weights.len() {
            return Err(Error::InvalidDesign(format!(
                "{} vectors but {} weights",
                vectors.len(),
                weights.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidDesign(format!(
                    "vector {i} has length {}, expected {n}",
                    v.len()
                )));
            }
            let norm = vec_norm(v);
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidDesign(format!("vector {i} has norm {norm}")));
            }
        }
        if let Some(i) = weights.iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDesign(format!("weight {i} is {}", weights[i])));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDesign(format!("weights sum to {total}")));
        }
        Ok(Self {
            n,
            t,
            vectors,
            weights,
        })
    }

    /// Uniform weights over the given vectors.
    pub fn uniform(n: usize, t: usize, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let w = 1.0 / vectors.len().max(1) as f64;
        let weights = vec![w; vectors.len()];
        Self::new(n, t, vectors, weights)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Declared design order.
    pub fn order(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ p_i w_i w_i*.
    pub fn frame_operator(&self) -> HermitianMatrix {
        let mut f = HermitianMatrix::zeros(self.n);
        for (w, &p) in self.vectors.iter().zip(&self.weights) {
            f.add_rank_one(w, p);
        }
        f
    }
}

/// Orthonormal basis of Sym^k(C^n) indexed by occupation numbers α.
///
/// The coordinate of w^⊗k along the basis vector for α is
/// sqrt(k!/Πα_j!)·Π w_j^α_j, so unit w map to unit vectors of length D.
#[derive(Debug, Clone)]
pub struct SymBasis {
    n: usize,
    k: usize,
    occupations: Vec<Vec<usize>>,
    coefficients: Vec<f64>,
}

impl SymBasis {
    pub fn new(n: usize, k: usize) -> Self {
        let mut occupations = Vec::with_capacity(sym_dim(n, k));
        let mut current = vec![0usize; n];
        fill_occupations(&mut current, 0, k, &mut occupations);
        let kf = factorial(k) as f64;
        let coefficients = occupations
            .iter()
            .map(|a| (kf / a.iter().map(|&x| factorial(x) as f64).product::<f64>()).sqrt())
            .collect();
        Self {
            n,
            k,
            occupations,
            coefficients,
        }
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn occupations(&self) -> &[Vec<usize>] {
        &self.occupations
    }

    /// Coordinates of w^⊗k.
    pub fn embed(&self, w: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(w.len(), self.n);
        // powers[j][e] = w_j^e
        let powers: Vec<Vec<Complex64>> = w
            .iter()
            .map(|&z| {
                let mut p = Vec::with_capacity(self.k + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..=self.k {
                    p.push(acc);
                    acc *= z;
                }
                p
            })
            .collect();
        self.occupations
            .iter()
            .zip(&self.coefficients)
            .map(|(alpha, &c)| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| powers[j][e])
                    .product::<Complex64>()
                    * c
            })
            .collect()
    }
}

fn fill_occupations(current: &mut [usize], pos: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.to_vec());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_occupations(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

/// The D×D gap operator Σ p_i v_i v_i* − I/D in Sym-basis coordinates.
fn sym_gap_matrix(d: &WeightedDesign, basis: &SymBasis) -> HermitianMatrix {
    let dd = basis.dim();
    let mut m = HermitianMatrix::zeros(dd);
    for (w, &p) in d.vectors.iter().zip(&d.weights) {
        m.add_rank_one(&basis.embed(w), p);
    }
    let mut data = m.as_slice().to_vec();
    for i in 0..dd {
        data[i * dd + i] -= 1.0 / dd as f64;
    }
    HermitianMatrix::from_raw(dd, data)
}

fn check_order(d: &WeightedDesign, k: usize) -> Result<()> {
    if k == 0 || k > d.t {
        return Err(Error::Domain(format!(
            "moment order must satisfy 1 <= k <= t = {}, got {k}",
            d.t
        )));
    }
    if sym_dim(d.n, k) > MAX_SYM_DIM {
        return Err(Error::GuardExceeded {
            dim: sym_dim(d.n, k),
            limit: MAX_SYM_DIM,
        });
    }
    Ok(())
}

/// θ_p = D·‖Σ p_i (w_i w_i*)^⊗k − P_Sym/D‖_p with D = binom(n+k−1, k),
/// evaluated in the Sym^k basis. `p` is a Schatten index, typically 1 or ∞.
pub fn design_moment_gap(d: &WeightedDesign, k: usize, p: f64) -> Result<f64> {
    check_order(d, k)?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("Schatten norm needs p >= 1, got {p}")));
    }
    let basis = SymBasis::new(d.n, k);
    let gap = sym_gap_matrix(d, &basis);
    Ok(basis.dim() as f64 * schatten_from_eigenvalues(&gap.eigenvalues()?, p))
}

/// The same gap evaluated on explicit n^k-dimensional tensors; subject to
/// the tensor resource guard.
pub fn design_moment_gap_explicit(d: &WeightedDesign, k: usize, p: f64) -> Result<f64> {
    check_order(d, k)?;
    let dd = sym_dim(d.n, k) as f64;
    let mut acc = TensorOperator::zeros(d.n, k)?;
    acc.axpy(-1.0 / dd, &sym_projector(d.n, k)?)?;
    for (w, &pw) in d.vectors.iter().zip(&d.weights) {
        acc.axpy(pw, &rank_one_tensor_power(w, k)?)?;
    }
    Ok(dd * acc.schatten_norm(p)?)
}

/// Accuracy certificate for one moment order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignCertificate {
    pub order_checked: usize,
    pub theta_inf: f64,
    pub theta_1: f64,
    /// ‖Σ p_i w_i w_i* − id/n‖∞
    pub tight_frame_gap: f64,
}

impl DesignCertificate {
    /// θ∞ ≤ θ₁ ≤ n^k θ∞ up to `slack`.
    pub fn norms_ordered(&self, n: usize, slack: f64) -> bool {
        let nk = (n as f64).powi(self.order_checked as i32);
        self.theta_inf <= self.theta_1 + slack && self.theta_1 <= nk * self.theta_inf + slack
    }
}

pub fn certify(d: &WeightedDesign, k: usize) -> Result<DesignCertificate> {
    check_order(d, k)?;
    let basis = SymBasis::new(d.n, k);
    let ev = sym_gap_matrix(d, &basis).eigenvalues()?;
    let dd = basis.dim() as f64;
    let mut frame = d.frame_operator().as_slice().to_vec();
    for i in 0..d.n {
        frame[i * d.n + i] -= 1.0 / d.n as f64;
    }
    let tight_frame_gap = HermitianMatrix::from_raw(d.n, frame).spectral_norm()?;
    Ok(DesignCertificate {
        order_checked: k,
        theta_inf: dd * schatten_from_eigenvalues(&ev, f64::INFINITY),
        theta_1: dd * schatten_from_eigenvalues(&ev, 1.0),
        tight_frame_gap,
    })
}

/// Draws Haar-random candidates and fits nonnegative weights so that the
/// t-th moment matches P_Sym/D, by nonnegative least squares on the real
/// coordinates of the D×D Sym-basis moment operator.
///
/// Weights below [`PRUNE_THRESHOLD`] are dropped and the rest renormalized.
/// The solution is basic, so at most D² + 1 vectors survive. Up to three
/// fresh candidate pools are tried before giving up.
pub fn construct_weighted_design<R: Rng + ?Sized>(
    n: usize,
    t: usize,
    candidates: usize,
    rng: &mut R,
    tol: f64,
) -> Result<WeightedDesign> {
    if n == 0 || t == 0 {
        return Err(Error::Domain("dimension and order must be positive".into()));
    }
    let dd = sym_dim(n, t);
    if dd > MAX_SYM_DIM {
        return Err(Error::GuardExceeded {
            dim: dd,
            limit: MAX_SYM_DIM,
        });
    }
    let cap = dd * dd + 1;
    if candidates < cap {
        return Err(Error::Domain(format!(
            "need at least {cap} candidates for n={n}, t={t}, got {candidates}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let basis = SymBasis::new(n, t);
    let mut target = vec![0.0; cap];
    target[..dd].iter_mut().for_each(|x| *x = 1.0 / dd as f64);
    target[cap - 1] = 1.0;

    let mut best_residual = f64::INFINITY;
    for _attempt in 0..3 {
        let pool: Vec<Vec<Complex64>> = (0..candidates).map(|_| haar_vector(n, rng)).collect();
        let mut a = ColumnMatrix::new(cap);
        for w in &pool {
            a.push(moment_column(&basis.embed(w)));
        }
        let sol = nnls(&a, &target, 50 * cap);
        let (vectors, mut weights): (Vec<_>, Vec<_>) = pool
            .into_iter()
            .zip(sol.x)
            .filter(|(_, p)| *p >= PRUNE_THRESHOLD)
            .unzip();
        if vectors.is_empty() {
            continue;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|p| *p /= total);
        let design = WeightedDesign::new(n, t, vectors, weights)?;
        let theta = design_moment_gap(&design, t, f64::INFINITY)?;
        if theta <= tol {
            return Ok(design);
        }
        best_residual = best_residual.min(theta);
    }
    Err(Error::Construction { best_residual })
}

/// Exact design built from phase orbits, for sizes where the full
/// moment-matching system is too large.
///
/// Averaging (w w*)^⊗t over the phases diag(ω^k), ω = e^{2πi/q} with q > t,
/// removes every off-diagonal Sym-basis entry, so only the D diagonal
/// moments Σ p_i (t!/Πα!)·x_i^α = 1/D remain, where x_i = |w_i|² lies on
/// the probability simplex. Those are fitted by nonnegative least squares
/// over Haar-distributed x, and each surviving x is expanded into its
/// q^{n−1} phase copies (the first coordinate is kept real).
pub fn construct_phase_orbit_design<R: Rng + ?Sized>(
    n: usize,
    t: usize,
    candidates: usize,
    rng: &mut R,
    tol: f64,
) -> Result<WeightedDesign> {
    if n == 0 || t == 0 {
        return Err(Error::Domain("dimension and order must be positive".into()));
    }
    let dd = sym_dim(n, t);
    let q = t + 1;
    let orbit = q.checked_pow((n - 1) as u32).unwrap_or(usize::MAX);
    if dd > MAX_SYM_DIM || orbit > 100_000 {
        return Err(Error::GuardExceeded {
            dim: dd.max(orbit),
            limit: MAX_SYM_DIM,
        });
    }
    if candidates < dd + 1 {
        return Err(Error::Domain(format!(
            "need at least {} candidates for n={n}, t={t}, got {candidates}",
            dd + 1
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let basis = SymBasis::new(n, t);
    let coeff2: Vec<f64> = basis.coefficients.iter().map(|c| c * c).collect();
    let mut target = vec![1.0 / dd as f64; dd + 1];
    target[dd] = 1.0;
    let phases: Vec<Complex64> = (0..q)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / q as f64))
        .collect();

    let mut best_residual = f64::INFINITY;
    for _attempt in 0..3 {
        let pool: Vec<Vec<f64>> = (0..candidates)
            .map(|_| haar_vector(n, rng).iter().map(|z| z.norm_sqr()).collect())
            .collect();
        let mut a = ColumnMatrix::new(dd + 1);
        for x in &pool {
            let mut col: Vec<f64> = basis
                .occupations
                .iter()
                .zip(&coeff2)
                .map(|(alpha, c)| c * alpha.iter().zip(x).map(|(&e, xi)| xi.powi(e as i32)).product::<f64>())
                .collect();
            col.push(1.0);
            a.push(col);
        }
        let sol = nnls(&a, &target, 50 * (dd + 1));
        let kept: Vec<(Vec<f64>, f64)> = pool
            .into_iter()
            .zip(sol.x)
            .filter(|(_, p)| *p >= PRUNE_THRESHOLD)
            .collect();
        if kept.is_empty() {
            continue;
        }
        let total: f64 = kept.iter().map(|(_, p)| p).sum();
        let mut vectors = Vec::with_capacity(kept.len() * orbit);
        let mut weights = Vec::with_capacity(kept.len() * orbit);
        for (x, p) in &kept {
            let moduli: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
            let norm = moduli.iter().map(|v| v * v).sum::<f64>().sqrt();
            for mut idx in 0..orbit {
                let mut w = Vec::with_capacity(n);
                w.push(Complex64::new(moduli[0] / norm, 0.0));
                for &r in &moduli[1..] {
                    w.push(phases[idx % q] * (r / norm));
                    idx /= q;
                }
                vectors.push(w);
                weights.push(p / total / orbit as f64);
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|p| *p /= sum);
        let design = WeightedDesign::new(n, t, vectors, weights)?;
        let theta = design_moment_gap(&design, t, f64::INFINITY)?;
        if theta <= tol {
            return Ok(design);
        }
        best_residual = best_residual.min(theta);
    }
    Err(Error::Construction { best_residual })
}

/// Real coordinates of v v*: diagonal, then √2·Re and √2·Im of the strict
/// upper triangle (an isometry for the Frobenius norm), then a trace row.
fn moment_column(v: &[Complex64]) -> Vec<f64> {
    let dd = v.len();
    let mut col = Vec::with_capacity(dd * dd + 1);
    col.extend(v.iter().map(|z| z.norm_sqr()));
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..dd {
        for j in i + 1..dd {
            let z = v[i] * v[j].conj();
            col.push(s2 * z.re);
            col.push(s2 * z.im);
        }
    }
    col.push(1.0);
    col
}

/// Rescales each vector to squared norm √((n+1)n).
pub fn supernormalize(d: &WeightedDesign) -> Vec<Vec<Complex64>> {
    let n = d.n as f64;
    let s = ((n + 1.0) * n).powf(0.25);
    d.vectors
        .iter()
        .map(|w| w.iter().map(|z| z * s).collect())
        .collect()
}

/// Rotates every vector by a geodesic angle of exactly `eps` toward an
/// independent random direction orthogonal to it. Weights are unchanged.
pub fn perturb_design<R: Rng + ?Sized>(d: &WeightedDesign, eps: f64, rng: &mut R) -> Result<WeightedDesign> {
    if !(0.0..=MAX_PERTURBATION).contains(&eps) {
        return Err(Error::Domain(format!(
            "perturbation size must lie in [0, {MAX_PERTURBATION}], got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(d.clone());
    }
    let (c, s) = (eps.cos(), eps.sin());
    let vectors = d
        .vectors
        .iter()
        .map(|w| {
            let u = loop {
                let mut g = complex_gaussian_vector(d.n, rng);
                let proj = vec_dot(w, &g);
                g.iter_mut().zip(w).for_each(|(gi, wi)| *gi -= proj * wi);
                let norm = vec_norm(&g);
                if norm > 1e-8 {
                    g.iter_mut().for_each(|gi| *gi /= norm);
                    break g;
                }
                if d.n == 1 {
                    // C^1 has no orthogonal direction; only the phase moves
                    break w.clone();
                }
            };
            let mut out: Vec<Complex64> = w.iter().zip(&u).map(|(wi, ui)| wi * c + ui * s).collect();
            let norm = vec_norm(&out);
            out.iter_mut().for_each(|z| *z /= norm);
            out
        })
        .collect();
    WeightedDesign::new(d.n, d.t, vectors, d.weights.clone())
}

/// The qubit state with Bloch vector (x, y, z).
pub fn bloch_state(x: f64, y: f64, z: f64) -> Vec<Complex64> {
    let r = (x * x + y * y + z * z).sqrt();
    let theta = (z / r).clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// The twelve qubit states whose Bloch vectors are the vertices of a
/// regular icosahedron, with uniform weights: an exact 5-design in C².
pub fn qubit_icosahedron() -> WeightedDesign {
    let g = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut pts = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            pts.push((0.0, s1, s2 * g));
            pts.push((s1, s2 * g, 0.0));
            pts.push((s2 * g, 0.0, s1));
        }
    }
    let vectors = pts.into_iter().map(|(x, y, z)| bloch_state(x, y, z)).collect();
    WeightedDesign::uniform(2, 5, vectors).expect("icosahedron states are unit vectors")
}

/// Optional provenance stored alongside a design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub seed: u64,
    pub theta_inf: f64,
}

#[derive(Serialize)]
struct VectorJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize)]
struct DesignJsonOut<'a> {
    n: usize,
    t: usize,
    vectors: Vec<VectorJson>,
    weights: &'a [f64],
    meta: Option<DesignMeta>,
}

/// Serializes to `{"n","t","vectors":[{"re","im"}],"weights","meta"}`.
pub fn design_to_json(d: &WeightedDesign, meta: Option<DesignMeta>) -> Result<String> {
    let out = DesignJsonOut {
        n: d.n,
        t: d.t,
        vectors: d
            .vectors
            .iter()
            .map(|v| VectorJson {
                re: v.iter().map(|z| z.re).collect(),
                im: v.iter().map(|z| z.im).collect(),
            })
            .collect(),
        weights: &d.weights,
        meta,
    };
    Ok(serde_json::to_string_pretty(&out)?)
}

fn parse_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Parse {
        field: field.into(),
        reason: reason.into(),
    }
}

fn get_usize(obj: &Value, field: &str) -> Result<usize> {
    obj.get(field)
        .ok_or_else(|| parse_err(field, "missing"))?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(field, "expected a nonnegative integer"))
}

fn get_floats(v: &Value, field: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| parse_err(field, "expected an array of numbers"))?
        .iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| parse_err(format!("{field}[{i}]"), "expected a number")))
        .collect()
}

/// Parses a design file. Errors name the offending field.
pub fn design_from_json(text: &str) -> Result<(WeightedDesign, Option<DesignMeta>)> {
    let root: Value = serde_json::from_str(text)?;
    if !root.is_object() {
        return Err(parse_err("<root>", "expected an object"));
    }
    let n = get_usize(&root, "n")?;
    let t = get_usize(&root, "t")?;
    let raw_vectors = root
        .get("vectors")
        .ok_or_else(|| parse_err("vectors", "missing"))?
        .as_array()
        .ok_or_else(|| parse_err("vectors", "expected an array"))?;
    let mut vectors = Vec::with_capacity(raw_vectors.len());
    for (i, v) in raw_vectors.iter().enumerate() {
        let part = |name: &str| -> Result<Vec<f64>> {
            let field = format!("vectors[{i}].{name}");
            let xs = get_floats(v.get(name).ok_or_else(|| parse_err(&field, "missing"))?, &field)?;
            if xs.len() != n {
                return Err(parse_err(field, format!("expected {n} entries, found {}", xs.len())));
            }
            Ok(xs)
        };
        let (re, im) = (part("re")?, part("im")?);
        vectors.push(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect());
    }
    let weights = get_floats(root.get("weights").ok_or_else(|| parse_err("weights", "missing"))?, "weights")?;
    if weights.len() != vectors.len() {
        return Err(parse_err(
            "weights",
            format!("expected {} entries, found {}", vectors.len(), weights.len()),
        ));
    }
    let meta = match root.get("meta") {
        None | Some(Value::Null) => None,
        Some(m) => Some(DesignMeta {
            seed: m
                .get("seed")
                .and_then(Value::as_u64)
                .ok_or_else(|| parse_err("meta.seed", "expected a nonnegative integer"))?,
            theta_inf: m
                .get("theta_inf")
                .and_then(Value::as_f64)
                .ok_or_else(|| parse_err("meta.theta_inf", "expected a number"))?,
        }),
    };
    let design = WeightedDesign::new(n, t, vectors, weights)?;
    Ok((design, meta))
}

pub fn write_design(path: &Path, d: &WeightedDesign, meta: Option<DesignMeta>) -> Result<()> {
    std::fs::write(path, design_to_json(d, meta)?)?;
    Ok(())
}

pub fn read_design(path: &Path) -> Result<(WeightedDesign, Option<DesignMeta>)> {
    design_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::tensor::binomial;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn tetrahedron() -> WeightedDesign {
        let s = 1.0 / 3.0_f64.sqrt();
        let pts = [(s, s, s), (s, -s, -s), (-s, s, -s), (-s, -s, s)];
        WeightedDesign::uniform(2, 2, pts.iter().map(|&(x, y, z)| bloch_state(x, y, z)).collect()).unwrap()
    }

    #[test]
    fn sym_basis_dimension_and_isometry() {
        let mut rng = stream(1);
        for (n, k) in [(2, 1), (2, 4), (3, 3), (4, 2)] {
            let b = SymBasis::new(n, k);
            assert_eq!(b.dim() as u128, binomial((n + k - 1) as u64, k as u64));
            let w = haar_vector(n, &mut rng);
            let u = haar_vector(n, &mut rng);
            // ⟨φ(w), φ(u)⟩ = ⟨w, u⟩^k
            let lhs = vec_dot(&b.embed(&w), &b.embed(&u));
            let rhs = vec_dot(&w, &u).powu(k as u32);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn validation_rejects_bad_designs() {
        let e1 = vec![c(1.0), c(0.0)];
        assert!(WeightedDesign::new(2, 1, vec![e1.clone()], vec![1.0]).is_ok());
        assert!(WeightedDesign::new(2, 1, vec![vec![c(1.1), c(0.0)]], vec![1.0]).is_err());
        assert!(WeightedDesign::new(2, 1, vec![e1.clone(), e1.clone()], vec![1.2, -0.2]).is_err());
        assert!(WeightedDesign::new(2, 1, vec![e1.clone()], vec![0.9]).is_err());
        assert!(WeightedDesign::new(2, 1, vec![e1.clone()], vec![1.0, 0.0]).is_err());
        assert!(WeightedDesign::new(3, 1, vec![e1], vec![1.0]).is_err());
    }

    #[test]
    fn gap_examples() {
        let basis = WeightedDesign::uniform(2, 1, vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        assert!(design_moment_gap(&basis, 1, f64::INFINITY).unwrap() < 1e-15);
        let single = WeightedDesign::new(2, 1, vec![vec![c(1.0), c(0.0)]], vec![1.0]).unwrap();
        // 2·‖diag(1/2, −1/2)‖∞
        assert!((design_moment_gap(&single, 1, f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
        assert!((design_moment_gap(&single, 1, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(design_moment_gap(&tetrahedron(), 2, f64::INFINITY).unwrap() < 1e-10);
        assert!(design_moment_gap(&tetrahedron(), 0, 1.0).is_err());
        assert!(design_moment_gap(&tetrahedron(), 3, 1.0).is_err());
    }

    #[test]
    fn tetrahedron_is_not_a_three_design() {
        let mut d = tetrahedron();
        d.t = 3;
        assert!(design_moment_gap(&d, 3, f64::INFINITY).unwrap() > 1e-3);
    }

    #[test]
    fn icosahedron_is_exact_through_order_five() {
        let d = qubit_icosahedron();
        for k in 1..=5 {
            assert!(design_moment_gap(&d, k, f64::INFINITY).unwrap() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn sym_path_matches_explicit_tensors() {
        let mut rng = stream(2);
        for (n, k) in [(2, 1), (2, 3), (2, 4), (3, 2), (3, 3)] {
            let vectors = (0..7).map(|_| haar_vector(n, &mut rng)).collect();
            let mut weights: Vec<f64> = (0..7).map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|p| *p /= total);
            let d = WeightedDesign::new(n, k, vectors, weights).unwrap();
            for p in [1.0, f64::INFINITY] {
                let a = design_moment_gap(&d, k, p).unwrap();
                let b = design_moment_gap_explicit(&d, k, p).unwrap();
                assert!((a - b).abs() < 1e-10 * (1.0 + a), "n={n} k={k} p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constructs_qubit_four_design() {
        let mut rng = stream(3);
        let d = construct_weighted_design(2, 4, 2000, &mut rng, 1e-8).unwrap();
        assert!(d.len() <= 26, "{}", d.len());
        assert!(d.weights().iter().all(|&p| p >= PRUNE_THRESHOLD));
        for k in 1..=4 {
            let cert = certify(&d, k).unwrap();
            assert!(cert.theta_inf <= 1e-8, "k={k}: {cert:?}");
            assert!(cert.norms_ordered(2, 1e-9));
        }
        assert!(certify(&d, 1).unwrap().tight_frame_gap <= 1e-10);
    }

    #[test]
    fn constructs_qutrit_four_design() {
        let mut rng = stream(8);
        let d = construct_weighted_design(3, 4, 10_000, &mut rng, 1e-8).unwrap();
        assert!(d.len() <= 226, "{}", d.len());
        for k in 1..=4 {
            let cert = certify(&d, k).unwrap();
            assert!(cert.theta_inf <= 1e-8, "k={k}: {cert:?}");
            assert!(cert.norms_ordered(3, 1e-9));
        }
    }

    #[test]
    fn phase_orbit_design_is_exact() {
        let mut rng = stream(9);
        for (n, t) in [(2, 4), (3, 4), (4, 4)] {
            let d = construct_phase_orbit_design(n, t, 400, &mut rng, 1e-9).unwrap();
            for k in 1..=t {
                let cert = certify(&d, k).unwrap();
                assert!(cert.theta_inf <= 1e-9, "n={n} k={k}: {cert:?}");
                assert!(cert.norms_ordered(n, 1e-9));
            }
        }
    }

    #[test]
    fn constructs_qubit_one_design_from_few_candidates() {
        let mut rng = stream(4);
        let d = construct_weighted_design(2, 1, 8, &mut rng, 1e-10).unwrap();
        assert!(design_moment_gap(&d, 1, f64::INFINITY).unwrap() <= 1e-10);
    }

    #[test]
    fn construction_rejects_too_few_candidates() {
        let mut rng = stream(5);
        assert!(matches!(
            construct_weighted_design(2, 4, 25, &mut rng, 1e-8),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn supernormalization_scales() {
        let d = qubit_icosahedron();
        let out = supernormalize(&d);
        for (a, w) in out.iter().zip(d.vectors()) {
            let sq = vec_norm(a).powi(2);
            assert!((sq - 6.0_f64.sqrt()).abs() < 1e-12);
            // (aa*)² = ‖a‖² aa*
            let m = HermitianMatrix::rank_one(a, 1.0);
            let m2 = crate::linalg::mat_mul(2, m.as_slice(), m.as_slice());
            for (x, y) in m2.iter().zip(m.as_slice()) {
                assert!((x - y * sq).norm() < 1e-12);
            }
            let back: Vec<Complex64> = a.iter().map(|z| z / sq.sqrt()).collect();
            assert!(back.iter().zip(w).all(|(x, y)| (x - y).norm() < 1e-14));
        }
        let mut rng = stream(6);
        let d3 = WeightedDesign::uniform(3, 1, vec![haar_vector(3, &mut rng)]).unwrap();
        assert!((vec_norm(&supernormalize(&d3)[0]).powi(2) - 12.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perturbation_moves_by_eps_and_gap_shrinks() {
        let d = qubit_icosahedron();
        let mut rng = stream(7);
        assert_eq!(perturb_design(&d, 0.0, &mut rng).unwrap(), d);
        assert!(perturb_design(&d, 0.2, &mut rng).is_err());
        let mut previous = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let p = perturb_design(&d, eps, &mut rng).unwrap();
            for (a, b) in p.vectors().iter().zip(d.vectors()) {
                // the rotation is orthogonal to w, so |⟨w, w'⟩| = cos eps
                assert!((vec_dot(a, b).norm() - eps.cos()).abs() < 1e-12);
            }
            assert_eq!(p.weights(), d.weights());
            let theta = design_moment_gap(&p, 4, f64::INFINITY).unwrap();
            assert!(theta > 0.0 && theta < previous, "eps={eps}: {theta}");
            previous = theta;
        }
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let d = qubit_icosahedron();
        let meta = DesignMeta {
            seed: 42,
            theta_inf: 1e-13,
        };
        let text = design_to_json(&d, Some(meta)).unwrap();
        let (back, m) = design_from_json(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(m, Some(meta));

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["vectors"][3]["im"] = serde_json::json!([0.0]);
        match design_from_json(&v.to_string()) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "vectors[3].im"),
            other => panic!("{other:?}"),
        }
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("weights");
        assert!(matches!(design_from_json(&v.to_string()), Err(Error::Parse { field, .. }) if field == "weights"));
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["n"] = serde_json::json!("two");
        assert!(matches!(design_from_json(&v.to_string()), Err(Error::Parse { field, .. }) if field == "n"));
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["weights"][0] = serde_json::json!(0.5);
        assert!(matches!(design_from_json(&v.to_string()), Err(Error::InvalidDesign(_))));
    }
}
