//! Validated model types: mean vectors, SPD covariance matrices, Gaussian
//! models and evaluation points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest supported dimension. Subset expansion of H is exponential in n.
pub const MAX_DIM: usize = 16;

/// Relative asymmetry tolerated (and symmetrized away) in covariance input.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Smallest accepted Cholesky pivot, relative to the largest diagonal entry.
pub const PIVOT_THRESHOLD: f64 = 1e-10;

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { dim: n });
    }
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_DIM,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector(Vec<f64>);

impl MeanVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_dim(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                field: "mean",
                location: format!("[{i}]"),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A symmetric, strictly positive definite covariance matrix together with
/// its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    entries: Vec<f64>,
    chol: Vec<f64>,
    min_pivot: f64,
}

impl CovarianceMatrix {
    /// Validates a square matrix given as rows.
    ///
    /// Asymmetry up to [`SYMMETRY_TOLERANCE`] relative to the largest entry is
    /// removed by averaging with the transpose; anything larger is rejected.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row: r,
                    cols: row.len(),
                });
            }
        }
        check_dim(n)?;
        let mut a: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(k) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                field: "cov",
                location: format!("[{}][{}]", k / n, k % n),
            });
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (u, l) = (a[i * n + j], a[j * n + i]);
                let asym = if scale > 0.0 {
                    (u - l).abs() / scale
                } else {
                    0.0
                };
                if asym > SYMMETRY_TOLERANCE {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        asymmetry: asym,
                    });
                }
                let avg = 0.5 * (u + l);
                a[i * n + j] = avg;
                a[j * n + i] = avg;
            }
        }
        if let Some(i) = (0..n).find(|&i| !(a[i * n + i] > 0.0)) {
            return Err(Error::NotPositiveDefinite {
                index: i,
                min_pivot: a[i * n + i],
            });
        }
        let (chol, min_pivot) =
            linalg::cholesky(&a, n, PIVOT_THRESHOLD).map_err(|f| Error::NotPositiveDefinite {
                index: f.index,
                min_pivot: f.pivot,
            })?;
        Ok(Self {
            n,
            entries: a,
            chol,
            min_pivot,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        self.variance(i).sqrt()
    }

    /// Pearson correlation ρ_ij = σ_ij / (σ_i σ_j).
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.get(i, j) / (self.std_dev(i) * self.std_dev(j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Row-major lower-triangular factor `L` with `L Lᵀ = Σ`.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// Smallest Cholesky pivot `L_kk²` seen during validation.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// det Σ as the product of the Cholesky pivots.
    pub fn determinant(&self) -> f64 {
        (0..self.n)
            .map(|k| self.chol[k * self.n + k].powi(2))
            .product()
    }

    /// det Σ for the 3 × 3 case by the explicit expansion
    /// `σ11σ22σ33 + 2σ12σ23σ31 − σ11σ23² − σ22σ13² − σ33σ12²`.
    pub fn determinant3(&self) -> Result<f64> {
        if self.n != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: self.n,
            });
        }
        let s = |i, j| self.get(i, j);
        Ok(
            s(0, 0) * s(1, 1) * s(2, 2) + 2.0 * s(0, 1) * s(1, 2) * s(2, 0)
                - s(0, 0) * s(1, 2).powi(2)
                - s(1, 1) * s(0, 2).powi(2)
                - s(2, 2) * s(0, 1).powi(2),
        )
    }
}

/// Shorthand for [`CovarianceMatrix::new`].
pub fn validate_covariance(rows: Vec<Vec<f64>>) -> Result<CovarianceMatrix> {
    CovarianceMatrix::new(rows)
}

/// A point in model space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                field: "point",
                location: format!("[{i}]"),
            });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub(crate) fn expect_dim(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.0.len(),
            });
        }
        Ok(())
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// Serialized form of a Gaussian model: `{"mean": [...], "cov": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// An n-variate normal model N(μ, Σ).
#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub(crate) mean: MeanVector,
    pub(crate) cov: CovarianceMatrix,
    pub(crate) conditional: Vec<crate::gaussian::ConditionalMeanCoeffs>,
}

impl GaussianModel {
    pub fn new(mean: MeanVector, cov: CovarianceMatrix) -> Result<Self> {
        if mean.dim() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                found: mean.dim(),
            });
        }
        let conditional = (0..cov.dim())
            .map(|t| crate::gaussian::ConditionalMeanCoeffs::compute(&mean, &cov, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mean,
            cov,
            conditional,
        })
    }

    /// Builds a model from raw vectors, validating both parts.
    pub fn from_parts(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(MeanVector::new(mean)?, CovarianceMatrix::new(cov)?)
    }

    pub fn standard(n: usize) -> Result<Self> {
        Self::new(MeanVector::zeros(n)?, CovarianceMatrix::identity(n)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelLoadError> {
        let file: ModelFile = serde_json::from_str(text).map_err(ModelLoadError::Parse)?;
        Self::from_parts(file.mean, file.cov).map_err(ModelLoadError::Invalid)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            mean: self.mean.as_slice().to_vec(),
            cov: self.cov.rows(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn mean(&self) -> &MeanVector {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceMatrix {
        &self.cov
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelLoadError {
    #[error("model file: {0}")]
    Parse(#[source] serde_json::Error),
    #[error(transparent)]
    Invalid(Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example_cov() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 0.5, 0.3],
            vec![0.5, 1.0, 0.4],
            vec![0.3, 0.4, 1.0],
        ]
    }

    #[test]
    fn identity_has_zero_correlations() {
        let c = CovarianceMatrix::identity(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(c.correlation(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn example_matrix_correlations() {
        let c = validate_covariance(example_cov()).unwrap();
        assert_eq!(c.correlation(0, 1), 0.5);
        assert_eq!(c.correlation(0, 2), 0.3);
        assert_eq!(c.correlation(1, 2), 0.4);
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let err = validate_covariance(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap_err();
        assert!(
            matches!(err, Error::NotPositiveDefinite { index: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized_large_is_rejected() {
        let c = validate_covariance(vec![vec![1.0, 0.5 + 1e-14], vec![0.5, 1.0]]).unwrap();
        assert_eq!(c.get(0, 1), c.get(1, 0));
        let err = validate_covariance(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { i: 0, j: 1, .. }));
    }

    #[test]
    fn non_finite_and_shape_errors() {
        let err = validate_covariance(vec![vec![1.0, f64::NAN], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteEntry { field: "cov", .. }));
        let err = validate_covariance(vec![vec![1.0, 0.0], vec![0.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
        let err = validate_covariance(vec![vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 0, .. }));
        assert!(matches!(
            MeanVector::new(vec![0.0]),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(matches!(
            CovarianceMatrix::identity(17),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn determinant3_examples() {
        assert_eq!(
            CovarianceMatrix::identity(3)
                .unwrap()
                .determinant3()
                .unwrap(),
            1.0
        );
        let c = validate_covariance(example_cov()).unwrap();
        // 1 + 2(0.5·0.4·0.3) − 0.09 − 0.25 − 0.16
        assert!((c.determinant3().unwrap() - 0.62).abs() < 1e-15);
        assert!((c.determinant() - 0.62).abs() < 1e-14);
        assert!(matches!(
            CovarianceMatrix::identity(2).unwrap().determinant3(),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    /// Cofactor expansion along the first row, independent of both
    /// production routes.
    fn cofactor_det3(m: &[Vec<f64>]) -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[test]
    fn determinant3_matches_cofactor_oracle() {
        let m = vec![
            vec![1.0, 0.8, 0.6],
            vec![0.8, 1.0, 0.4],
            vec![0.6, 0.4, 1.0],
        ];
        let oracle = cofactor_det3(&m);
        let c = validate_covariance(m).unwrap();
        assert!((c.determinant3().unwrap() - oracle).abs() <= 1e-12 * oracle.abs());
        assert!((c.determinant() - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn model_json_roundtrip_and_errors() {
        let m = GaussianModel::from_json(
            r#"{"mean":[0,0,0],"cov":[[1,0.5,0.3],[0.5,1,0.4],[0.3,0.4,1]]}"#,
        )
        .unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.to_file().cov, example_cov());
        assert!(matches!(
            GaussianModel::from_json(r#"{"mean":[0,0],"cov":[[1,0,0],[0,1,0],[0,0,1]]}"#),
            Err(ModelLoadError::Invalid(Error::DimensionMismatch { .. }))
        ));
        assert!(matches!(
            GaussianModel::from_json("{"),
            Err(ModelLoadError::Parse(_))
        ));
    }
}
