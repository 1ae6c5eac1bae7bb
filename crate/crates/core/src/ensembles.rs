//! Rank-one measurement ensembles: A(Z)_j = s·⟨a_j, Z a_j⟩ with s = 1 for
//! Gaussian vectors and s = √(n(n+1)) for unit vectors drawn from a design.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::designs::WeightedDesign;
use crate::error::{Error, Result};
use crate::linalg::{vec_dot, HermitianMatrix};
use crate::rng::{complex_gaussian_vector, real_gaussian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(Field::Complex),
            "real" => Ok(Field::Real),
            _ => Err(Error::Parse {
                field: "field".into(),
                reason: format!("expected `complex` or `real`, got `{s}`"),
            }),
        }
    }
}

/// The measurement vectors a_1..a_m and the scale s with A_j = s·a_j a_j*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleJson", into = "EnsembleJson")]
pub struct MeasurementEnsemble {
    n: usize,
    field: Field,
    matrix_scale: f64,
    vectors: Vec<Vec<Complex64>>,
}

impl MeasurementEnsemble {
    pub fn new(n: usize, field: Field, matrix_scale: f64, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        if n == 0 || vectors.is_empty() {
            return Err(Error::Domain("ensemble needs n >= 1 and m >= 1".into()));
        }
        if !(matrix_scale > 0.0) || !matrix_scale.is_finite() {
            return Err(Error::Domain(format!("matrix scale must be positive, got {matrix_scale}")));
        }
        for v in &vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            if field == Field::Real && v.iter().any(|z| z.im != 0.0) {
                return Err(Error::Domain("real ensemble has a complex entry".into()));
            }
        }
        Ok(Self {
            n,
            field,
            matrix_scale,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrix_scale(&self) -> f64 {
        self.matrix_scale
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// A_j = s·a_j a_j*.
    pub fn measurement_matrix(&self, j: usize) -> HermitianMatrix {
        HermitianMatrix::rank_one(&self.vectors[j], self.matrix_scale)
    }

    /// A(Z)_j = s·⟨a_j, Z a_j⟩.
    pub fn apply(&self, z: &HermitianMatrix) -> Result<Vec<f64>> {
        if z.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: z.dim(),
            });
        }
        Ok(self
            .vectors
            .iter()
            .map(|a| self.matrix_scale * z.quad_form(a))
            .collect())
    }

    /// A*(y) = s·Σ_j y_j a_j a_j*.
    pub fn adjoint(&self, y: &[f64]) -> Result<HermitianMatrix> {
        if y.len() != self.count() {
            return Err(Error::DimensionMismatch {
                expected: self.count(),
                found: y.len(),
            });
        }
        let mut out = HermitianMatrix::zeros(self.n);
        for (a, &yj) in self.vectors.iter().zip(y) {
            if yj != 0.0 {
                out.add_rank_one(a, self.matrix_scale * yj);
            }
        }
        Ok(out)
    }

    /// Gram matrix of the measurement matrices, ⟨A_i, A_j⟩ = s²|⟨a_i, a_j⟩|²,
    /// row-major m×m.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.count();
        let s2 = self.matrix_scale * self.matrix_scale;
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = s2 * vec_dot(&self.vectors[i], &self.vectors[j]).norm_sqr();
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        g
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Standard Gaussian vectors. Complex entries have independent real and
/// imaginary parts of variance 1/2; real entries have unit variance.
pub fn sample_gaussian<R: Rng + ?Sized>(n: usize, m: usize, field: Field, rng: &mut R) -> Result<MeasurementEnsemble> {
    if n == 0 || m == 0 {
        return Err(Error::Domain("ensemble needs n >= 1 and m >= 1".into()));
    }
    let vectors = (0..m)
        .map(|_| match field {
            Field::Complex => complex_gaussian_vector(n, rng),
            Field::Real => (0..n).map(|_| Complex64::new(real_gaussian(rng), 0.0)).collect(),
        })
        .collect();
    MeasurementEnsemble::new(n, field, 1.0, vectors)
}

/// m independent draws from the design, with matrix scale √(n(n+1)).
pub fn sample_from_design<R: Rng + ?Sized>(d: &WeightedDesign, m: usize, rng: &mut R) -> Result<MeasurementEnsemble> {
    if m == 0 {
        return Err(Error::Domain("ensemble needs m >= 1".into()));
    }
    let index = WeightedIndex::new(d.weights()).map_err(|e| Error::InvalidDesign(e.to_string()))?;
    let vectors = (0..m).map(|_| d.vectors()[index.sample(rng)].clone()).collect();
    let n = d.dim() as f64;
    MeasurementEnsemble::new(d.dim(), Field::Complex, (n * (n + 1.0)).sqrt(), vectors)
}

/// Measurements b = A(X) + ε with ‖ε‖₂ ≤ η.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyMeasurement {
    pub b: Vec<f64>,
    pub eta: f64,
    pub true_noise_norm: f64,
}

/// Adds a uniformly oriented perturbation of norm exactly `eta`.
pub fn add_noise<R: Rng + ?Sized>(b: &[f64], eta: f64, rng: &mut R) -> Result<NoisyMeasurement> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("noise level must be nonnegative, got {eta}")));
    }
    if eta == 0.0 || b.is_empty() {
        return Ok(NoisyMeasurement {
            b: b.to_vec(),
            eta,
            true_noise_norm: 0.0,
        });
    }
    let eps = loop {
        let g: Vec<f64> = (0..b.len()).map(|_| real_gaussian(rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            // shave a few ulps so rounding never pushes the norm above eta
            let f = eta / norm * (1.0 - 4.0 * f64::EPSILON);
            break g.into_iter().map(|x| x * f).collect::<Vec<_>>();
        }
    };
    let true_noise_norm = eps.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(NoisyMeasurement {
        b: b.iter().zip(&eps).map(|(x, e)| x + e).collect(),
        eta,
        true_noise_norm,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VectorJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnsembleJson {
    n: usize,
    field: Field,
    matrix_scale: f64,
    vectors: Vec<VectorJson>,
}

impl From<MeasurementEnsemble> for EnsembleJson {
    fn from(e: MeasurementEnsemble) -> Self {
        EnsembleJson {
            n: e.n,
            field: e.field,
            matrix_scale: e.matrix_scale,
            vectors: e
                .vectors
                .iter()
                .map(|v| VectorJson {
                    re: v.iter().map(|z| z.re).collect(),
                    im: v.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<EnsembleJson> for MeasurementEnsemble {
    type Error = Error;

    fn try_from(j: EnsembleJson) -> Result<Self> {
        let mut vectors = Vec::with_capacity(j.vectors.len());
        for (i, v) in j.vectors.into_iter().enumerate() {
            if v.re.len() != j.n || v.im.len() != j.n {
                return Err(Error::Parse {
                    field: format!("vectors[{i}]"),
                    reason: format!("expected {} entries", j.n),
                });
            }
            vectors.push(v.re.into_iter().zip(v.im).map(|(a, b)| Complex64::new(a, b)).collect());
        }
        MeasurementEnsemble::new(j.n, j.field, j.matrix_scale, vectors)
    }
}
