//! Dense complex Hermitian matrices: norms, a cyclic Jacobi eigensolver,
//! spectral proximal maps and random low-rank test signals.
//!
//! Storage is row-major. Every `HermitianMatrix` is exactly Hermitian: the
//! constructor symmetrizes its input, and internal operations only ever
//! produce matrices through Hermitian-preserving paths.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian_vector, real_gaussian};

/// Eigenvalues with |λ| above this fraction of the spectral norm count toward the rank.
pub const RANK_TOL: f64 = 1e-10;

/// Largest relative anti-Hermitian part accepted by [`HermitianMatrix::new`].
pub const HERMITICITY_TOL: f64 = 1e-8;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product ⟨u, v⟩ = Σ conj(u_i) v_i.
pub fn vec_dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Product of two dense row-major n×n complex matrices.
pub fn mat_mul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == ZERO {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (o, bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// An n×n complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from row-major entries.
    ///
    /// The input is replaced by (Z + Z*)/2. Inputs whose anti-Hermitian part
    /// exceeds [`HERMITICITY_TOL`] relative to the Frobenius norm are rejected.
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("matrix dimension must be positive".into()));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        let fro: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut anti = 0.0;
        for i in 0..n {
            for j in 0..n {
                anti += ((data[i * n + j] - data[j * n + i].conj()) * 0.5).norm_sqr();
            }
        }
        let deviation = if fro > 0.0 { anti.sqrt() / fro } else { 0.0 };
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let mut m = Self { n, data };
        m.symmetrize();
        Ok(m)
    }

    /// Assumes `data` is Hermitian up to rounding and symmetrizes it.
    pub(crate) fn from_raw(n: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        let mut m = Self { n, data };
        m.symmetrize();
        m
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            let d = &mut self.data[i * n + i];
            *d = Complex64::new(d.re, 0.0);
            for j in i + 1..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; n])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Real symmetric matrix from row-major real entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        Self::new(n, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// scale · v v*
    pub fn rank_one(v: &[Complex64], scale: f64) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        m.add_rank_one(v, scale);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Frobenius inner product tr(XY), real for Hermitian arguments.
    pub fn frobenius_inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Self) -> f64 {
        // tr(XY) = Σ_jk X_jk Y_kj = Σ_jk X_jk conj(Y_jk)
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum()
    }

    /// ⟨v, Z v⟩, real.
    pub fn quad_form(&self, v: &[Complex64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let zi: Complex64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += (v[i].conj() * zi).re;
        }
        acc
    }

    /// Matrix-vector product Z v.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// self += scale · v v*
    pub fn add_rank_one(&mut self, v: &[Complex64], scale: f64) {
        let n = self.n;
        for i in 0..n {
            let vi = v[i] * scale;
            let row = &mut self.data[i * n..(i + 1) * n];
            for (o, vj) in row.iter_mut().zip(v) {
                *o += vi * vj.conj();
            }
        }
    }

    /// self += alpha · other
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
    }

    /// alpha · self + beta · other
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * alpha + b * beta)
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    /// Traces tr(Z^k) for k = 1..=kmax by repeated multiplication.
    pub fn power_traces(&self, kmax: usize) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(kmax);
        let mut p = self.data.clone();
        for k in 1..=kmax {
            if k > 1 {
                p = mat_mul(n, &p, &self.data);
            }
            out.push((0..n).map(|i| p[i * n + i].re).sum());
        }
        out
    }

    /// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
    pub fn eigh(&self) -> Result<EigenDecomposition> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![ZERO; n * n];
        for i in 0..n {
            v[i * n + i] = ONE;
        }
        jacobi_in_place(n, &mut a, &mut v)?;
        Ok(EigenDecomposition::from_diagonalized(n, &a, v))
    }

    /// Eigendecomposition started from a unitary guess `basis` (columns),
    /// e.g. the eigenvectors of a nearby matrix. Jacobi then only has to
    /// clean up the small off-diagonal part of basis* Z basis.
    pub fn eigh_warm(&self, basis: &EigenDecomposition) -> Result<EigenDecomposition> {
        let n = self.n;
        if basis.dim() != n {
            return self.eigh();
        }
        let u = &basis.vectors;
        let uh = conj_transpose(n, u);
        let mut a = mat_mul(n, &mat_mul(n, &uh, &self.data), u);
        let mut w = vec![ZERO; n * n];
        for i in 0..n {
            w[i * n + i] = ONE;
        }
        jacobi_in_place(n, &mut a, &mut w)?;
        let v = mat_mul(n, u, &w);
        Ok(EigenDecomposition::from_diagonalized(n, &a, v))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.eigenvalues)
    }

    /// Schatten p-norm for p ≥ 1, including p = ∞.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("Schatten norm needs p >= 1, got {p}")));
        }
        Ok(schatten_from_eigenvalues(&self.eigenvalues()?, p))
    }

    pub fn nuclear_norm(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|l| l.abs()).sum())
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .fold(0.0_f64, |m, l| m.max(l.abs())))
    }

    /// Number of eigenvalues with |λ| > RANK_TOL · ‖Z‖∞.
    pub fn rank(&self) -> Result<usize> {
        Ok(numerical_rank(&self.eigenvalues()?))
    }

    /// Smallest eigenvalue is at least −tol · max(1, ‖Z‖∞).
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let ev = self.eigenvalues()?;
        let scale = ev.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
        Ok(ev.iter().all(|&l| l >= -tol * scale))
    }

    /// Proximal map of τ‖·‖₁: soft-thresholds the eigenvalues.
    pub fn prox_nuclear(&self, tau: f64) -> Result<Self> {
        self.eigh()?.prox_nuclear(tau)
    }

    /// Proximal map of τ·tr(·) restricted to the PSD cone.
    pub fn prox_psd_trace(&self, tau: f64) -> Result<Self> {
        self.eigh()?.prox_psd_trace(tau)
    }
}

fn conj_transpose(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub(crate) fn schatten_from_eigenvalues(ev: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        ev.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
    } else if p == 1.0 {
        ev.iter().map(|l| l.abs()).sum()
    } else {
        // scale by the max modulus to avoid overflow for large p
        let mx = ev.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        if mx == 0.0 {
            return 0.0;
        }
        mx * ev.iter().map(|l| (l.abs() / mx).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub(crate) fn numerical_rank(ev: &[f64]) -> usize {
    let mx = ev.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    if mx == 0.0 {
        return 0;
    }
    ev.iter().filter(|l| l.abs() > RANK_TOL * mx).count()
}

/// Diagonalizes the Hermitian row-major matrix `a` in place and accumulates
/// the rotations into the columns of `v`. Returns the number of sweeps.
pub(crate) fn jacobi_in_place(n: usize, a: &mut [Complex64], v: &mut [Complex64]) -> Result<usize> {
    let fro = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if fro == 0.0 || n == 1 {
        return Ok(0);
    }
    let negligible = 1e-18 * fro;
    for sweep in 0..=JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= JACOBI_OFF_TOL * fro {
            return Ok(sweep);
        }
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps: sweep,
                residual: off / fro,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[p * n + q];
                let ag = g.norm();
                if ag <= negligible {
                    a[p * n + q] = ZERO;
                    a[q * n + p] = ZERO;
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Phase e = g/|g| turns the (p,q) block real, then a real
                // rotation annihilates it: J = [[c, s], [-s ē, c ē]].
                let e = g / ag;
                let theta = (aqq - app) / (2.0 * ag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let se = e * s;
                let ce = e * c;
                let se_c = se.conj();
                let ce_c = ce.conj();
                // A ← A J (columns p, q)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * se_c;
                    a[k * n + q] = akp * s + akq * ce_c;
                }
                // A ← J* A (rows p, q)
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * se;
                    a[q * n + k] = apk * s + aqk * ce;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p] = Complex64::new(app - t * ag, 0.0);
                a[q * n + q] = Complex64::new(aqq + t * ag, 0.0);
                // V ← V J
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * se_c;
                    v[k * n + q] = vkp * s + vkq * ce_c;
                }
            }
        }
    }
    unreachable!("sweep loop returns")
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Row-major n×n; column k is the eigenvector of `eigenvalues[k]`.
    pub vectors: Vec<Complex64>,
}

impl EigenDecomposition {
    fn from_diagonalized(n: usize, a: &[Complex64], v: Vec<Complex64>) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
        let eigenvalues = order.iter().map(|&i| a[i * n + i].re).collect();
        let mut vectors = vec![ZERO; n * n];
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                vectors[k * n + new] = v[k * n + old];
            }
        }
        Self {
            eigenvalues,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector `k` as an owned vector.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.dim();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    /// V f(Λ) V*.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let mut out = HermitianMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fl = f(lambda);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[i * n + k] * fl;
                for j in i..n {
                    out.data[i * n + j] += vi * self.vectors[j * n + k].conj();
                }
            }
        }
        for i in 0..n {
            out.data[i * n + i].im = 0.0;
            for j in i + 1..n {
                out.data[j * n + i] = out.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn prox_nuclear(&self, tau: f64) -> Result<HermitianMatrix> {
        check_tau(tau)?;
        Ok(self.reconstruct_with(|l| l.signum() * (l.abs() - tau).max(0.0)))
    }

    pub fn prox_psd_trace(&self, tau: f64) -> Result<HermitianMatrix> {
        check_tau(tau)?;
        Ok(self.reconstruct_with(|l| (l - tau).max(0.0)))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Domain(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(())
}

/// A random test signal of known rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowRankSignal {
    pub matrix: HermitianMatrix,
    pub rank: usize,
    pub psd: bool,
}

/// Orthonormalizes complex vectors in place by modified Gram–Schmidt.
/// Returns false if the set is numerically dependent.
pub(crate) fn orthonormalize(vs: &mut [Vec<Complex64>]) -> bool {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        for _ in 0..2 {
            for u in done.iter() {
                let proj = vec_dot(u, v);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = vec_norm(v);
        if norm < 1e-10 {
            return false;
        }
        v.iter_mut().for_each(|z| *z /= norm);
    }
    true
}

/// X = Σ_{i≤r} λ_i g_i g_i* with orthonormalized complex Gaussian directions,
/// scaled so that ‖X‖₂ = 1. With `psd` the λ_i are |N(0,1)|, otherwise N(0,1).
pub fn random_low_rank<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    psd: bool,
    rng: &mut R,
) -> Result<LowRankSignal> {
    if r == 0 || r > n {
        return Err(Error::Domain(format!("rank must satisfy 1 <= r <= n, got r={r}, n={n}")));
    }
    let dirs = loop {
        let mut dirs: Vec<_> = (0..r).map(|_| complex_gaussian_vector(n, rng)).collect();
        if orthonormalize(&mut dirs) {
            break dirs;
        }
    };
    let lambdas = loop {
        let ls: Vec<f64> = (0..r)
            .map(|_| {
                let x = real_gaussian(rng);
                if psd {
                    x.abs()
                } else {
                    x
                }
            })
            .collect();
        let mx = ls.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        // keep the rank unambiguous under the RANK_TOL threshold
        if ls.iter().all(|l| l.abs() > 1e-6 * mx) {
            break ls;
        }
    };
    let norm = lambdas.iter().map(|l| l * l).sum::<f64>().sqrt();
    let mut matrix = HermitianMatrix::zeros(n);
    for (l, g) in lambdas.iter().zip(&dirs) {
        matrix.add_rank_one(g, l / norm);
    }
    matrix.symmetrize();
    Ok(LowRankSignal {
        matrix,
        rank: r,
        psd,
    })
}

/// Random Hermitian matrix with i.i.d. complex Gaussian off-diagonal and
/// real Gaussian diagonal entries (unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let g = complex_gaussian_vector(n * n, rng);
    let mut data = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = (g[i * n + j] + g[j * n + i].conj()) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    HermitianMatrix::from_raw(n, data)
}

/// Random Hermitian matrix with unit Frobenius norm.
pub fn random_unit_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let z = random_hermitian(n, rng);
    let f = z.frobenius_norm();
    z.scaled(1.0 / f)
}

/// Matrix exchange format: `{"n": int, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<HermitianMatrix> for MatrixJson {
    fn from(m: HermitianMatrix) -> Self {
        let n = m.n;
        let rows = |f: fn(&Complex64) -> f64| {
            (0..n)
                .map(|i| m.data[i * n..(i + 1) * n].iter().map(f).collect())
                .collect()
        };
        MatrixJson {
            n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let check = |name: &str, rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != j.n || rows.iter().any(|r| r.len() != j.n) {
                return Err(Error::Parse {
                    field: name.into(),
                    reason: format!("expected {n}x{n} rows", n = j.n),
                });
            }
            Ok(())
        };
        check("re", &j.re)?;
        check("im", &j.im)?;
        let data = j
            .re
            .iter()
            .flatten()
            .zip(j.im.iter().flatten())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        HermitianMatrix::new(j.n, data)
    }
}
