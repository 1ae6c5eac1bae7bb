//! Operators on the t-fold tensor power of C^n: the symmetrizer, rank-one
//! tensor powers, partial traces, and the cycle-index moment formula.
//!
//! Basis convention: multi-indices (i_1, …, i_t) are ordered
//! lexicographically, the first factor being the most significant digit,
//! so the flat index is Σ_l i_l · n^(t-1-l).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, HermitianMatrix};

/// Largest tensor dimension n^t for which explicit operators are built.
pub const TENSOR_GUARD: usize = 4096;

/// Largest moment order supported by [`sym_moment`].
pub const MAX_MOMENT_ORDER: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Binomial coefficient C(a, b) in exact integer arithmetic.
pub fn binomial(a: u64, b: u64) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    (0..b as u128).fold(1u128, |acc, i| acc * (a as u128 - i) / (i + 1))
}

/// dim Sym^k(C^n) = C(n+k-1, k).
pub fn sym_dim(n: usize, k: usize) -> usize {
    if n == 0 {
        return 0;
    }
    binomial((n + k - 1) as u64, k as u64) as usize
}

pub fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

fn tensor_dim(n: usize, t: usize) -> Result<usize> {
    let dim = (n as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
    if n == 0 || dim > TENSOR_GUARD as u128 {
        return Err(Error::GuardExceeded {
            dim: dim.min(usize::MAX as u128) as usize,
            limit: TENSOR_GUARD,
        });
    }
    Ok(dim as usize)
}

/// Digits of a flat tensor index, most significant first.
pub(crate) fn digits(mut idx: usize, n: usize, t: usize) -> Vec<usize> {
    let mut out = vec![0; t];
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    out
}

pub(crate) fn flat_index(digits: &[usize], n: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * n + d)
}

/// A dense operator on (C^n)^{⊗t}, stored as an n^t × n^t row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOperator {
    base_dim: usize,
    order: usize,
    data: Vec<Complex64>,
}

impl TensorOperator {
    pub fn zeros(n: usize, t: usize) -> Result<Self> {
        let d = tensor_dim(n, t)?;
        Ok(Self {
            base_dim: n,
            order: t,
            data: vec![ZERO; d * d],
        })
    }

    /// Order-1 operator wrapping a matrix.
    pub fn from_matrix(z: &HermitianMatrix) -> Self {
        Self {
            base_dim: z.dim(),
            order: 1,
            data: z.as_slice().to_vec(),
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// n^t
    pub fn dim(&self) -> usize {
        self.base_dim.pow(self.order as u32)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim() + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// tr(self · other)
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        self.check_same_shape(other)?;
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.data[i * d + j] * other.data[j * d + i];
            }
        }
        Ok(acc)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.base_dim != other.base_dim || self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            base_dim: self.base_dim,
            order: self.order,
            data: crate::linalg::mat_mul(self.dim(), &self.data, &other.data),
        })
    }

    /// alpha · self + beta · other
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            base_dim: self.base_dim,
            order: self.order,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * alpha + b * beta)
                .collect(),
        })
    }

    /// self += alpha · other
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
        Ok(())
    }

    /// Kronecker product self ⊗ other; orders add.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.base_dim != other.base_dim {
            return Err(Error::DimensionMismatch {
                expected: self.base_dim,
                found: other.base_dim,
            });
        }
        let (da, db) = (self.dim(), other.dim());
        let d = tensor_dim(self.base_dim, self.order + other.order)?;
        let mut data = vec![ZERO; d * d];
        for ia in 0..da {
            for ja in 0..da {
                let a = self.data[ia * da + ja];
                if a == ZERO {
                    continue;
                }
                for ib in 0..db {
                    let row = (ia * db + ib) * d + ja * db;
                    for jb in 0..db {
                        data[row + jb] = a * other.data[ib * db + jb];
                    }
                }
            }
        }
        Ok(Self {
            base_dim: self.base_dim,
            order: self.order + other.order,
            data,
        })
    }

    /// Z^{⊗m}
    pub fn tensor_power(z: &HermitianMatrix, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("tensor power order must be positive".into()));
        }
        tensor_dim(z.dim(), m)?;
        let base = Self::from_matrix(z);
        let mut out = base.clone();
        for _ in 1..m {
            out = out.kron(&base)?;
        }
        Ok(out)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// Views the operator as a Hermitian matrix (symmetrizing rounding noise).
    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.dim(), self.data.clone())
    }

    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        self.to_hermitian()?.schatten_norm(p)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }
}

/// The projector onto Sym^t: P e_j = (1/t!) Σ_π e_{π(j)}.
///
/// Entry (i, j) is nonzero exactly when the multi-indices i and j are
/// rearrangements of each other, in which case it equals Π_c α_c! / t!
/// with α the occupation numbers of the common multiset.
pub fn sym_projector(n: usize, t: usize) -> Result<TensorOperator> {
    let d = tensor_dim(n, t)?;
    let mut op = TensorOperator::zeros(n, t)?;
    if t == 0 {
        op.data[0] = Complex64::new(1.0, 0.0);
        return Ok(op);
    }
    let tf = factorial(t) as f64;
    // group flat indices by their sorted multi-index
    let mut classes: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
    for idx in 0..d {
        let mut key = digits(idx, n, t);
        key.sort_unstable();
        classes.entry(key).or_default().push(idx);
    }
    for (key, members) in classes {
        let mut occupation = vec![0usize; n];
        key.iter().for_each(|&c| occupation[c] += 1);
        let weight = occupation.iter().map(|&a| factorial(a) as f64).product::<f64>() / tf;
        for &i in &members {
            for &j in &members {
                op.data[i * d + j] = Complex64::new(weight, 0.0);
            }
        }
    }
    Ok(op)
}

/// (w w*)^{⊗t} for a unit vector w.
pub fn rank_one_tensor_power(w: &[Complex64], t: usize) -> Result<TensorOperator> {
    let norm = vec_norm(w);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let n = w.len();
    let d = tensor_dim(n, t)?;
    let v: Vec<Complex64> = (0..d)
        .map(|idx| digits(idx, n, t).iter().map(|&i| w[i]).product())
        .collect();
    let mut op = TensorOperator::zeros(n, t)?;
    for i in 0..d {
        for j in 0..d {
            op.data[i * d + j] = v[i] * v[j].conj();
        }
    }
    Ok(op)
}

/// Contracts the tensor factors listed in `subsystems` (0-based positions).
pub fn partial_trace(op: &TensorOperator, subsystems: &[usize]) -> Result<TensorOperator> {
    let (n, t) = (op.base_dim, op.order);
    let mut traced = vec![false; t];
    for &s in subsystems {
        if s >= t {
            return Err(Error::InvalidSubsystems(format!(
                "index {s} out of range for order {t}"
            )));
        }
        if traced[s] {
            return Err(Error::InvalidSubsystems(format!("index {s} repeated")));
        }
        traced[s] = true;
    }
    let kept: Vec<usize> = (0..t).filter(|&i| !traced[i]).collect();
    let gone: Vec<usize> = (0..t).filter(|&i| traced[i]).collect();
    if kept.is_empty() {
        // full trace, returned as an order-0 (1×1) operator
        return Ok(TensorOperator {
            base_dim: n,
            order: 0,
            data: vec![op.trace()],
        });
    }
    let d = op.dim();
    let dk = n.pow(kept.len() as u32);
    let dg = n.pow(gone.len() as u32);
    let mut out = TensorOperator {
        base_dim: n,
        order: kept.len(),
        data: vec![ZERO; dk * dk],
    };
    let mut full_i = vec![0usize; t];
    let mut full_j = vec![0usize; t];
    for i in 0..dk {
        let di = digits(i, n, kept.len());
        for (pos, &k) in kept.iter().enumerate() {
            full_i[k] = di[pos];
        }
        for j in 0..dk {
            let dj = digits(j, n, kept.len());
            for (pos, &k) in kept.iter().enumerate() {
                full_j[k] = dj[pos];
            }
            let mut acc = ZERO;
            for g in 0..dg {
                let dgs = digits(g, n, gone.len());
                for (pos, &k) in gone.iter().enumerate() {
                    full_i[k] = dgs[pos];
                    full_j[k] = dgs[pos];
                }
                acc += op.data[flat_index(&full_i, n) * d + flat_index(&full_j, n)];
            }
            out.data[i * dk + j] = acc;
        }
    }
    Ok(out)
}

/// Cycle types of S_m: vectors (j_1, …, j_m) with Σ k·j_k = m, paired with
/// the class size m! / Π (j_k! k^{j_k}).
pub fn cycle_types(m: usize) -> Vec<(Vec<usize>, u128)> {
    fn rec(m: usize, k: usize, remaining: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k > m {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for j in 0..=remaining / k {
            cur[k - 1] = j;
            rec(m, k + 1, remaining - j * k, cur, out);
        }
        cur[k - 1] = 0;
    }
    let mut types = Vec::new();
    rec(m, 1, m, &mut vec![0; m], &mut types);
    let mf = factorial(m);
    types
        .into_iter()
        .map(|j| {
            let denom: u128 = j
                .iter()
                .enumerate()
                .map(|(k, &jk)| factorial(jk) * ((k + 1) as u128).pow(jk as u32))
                .product();
            (j, mf / denom)
        })
        .collect()
}

/// m! · tr(P_Sym^m Z^{⊗m}), evaluated from the power traces tr(Z^k)
/// by summing over cycle types; no tensor is formed.
pub fn sym_moment(z: &HermitianMatrix, m: usize) -> Result<f64> {
    if m == 0 || m > MAX_MOMENT_ORDER {
        return Err(Error::Domain(format!(
            "moment order must be in 1..={MAX_MOMENT_ORDER}, got {m}"
        )));
    }
    let traces = z.power_traces(m);
    Ok(cycle_types(m)
        .iter()
        .map(|(j, coeff)| {
            *coeff as f64
                * j.iter()
                    .enumerate()
                    .map(|(k, &jk)| traces[k].powi(jk as i32))
                    .product::<f64>()
        })
        .sum())
}
