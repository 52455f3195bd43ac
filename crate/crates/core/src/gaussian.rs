//! Closed forms for the multivariate normal: density, conditional means by
//! Schur complement, and standardized mixed central moments by Isserlis pairing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CovarianceMatrix, GaussianModel, MeanVector, Point};
use crate::subset::Subset;

/// Affine form of `E(X_t | X_rest = v)`: `offset + weights · v`, with `rest`
/// the remaining indices in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMeanCoeffs {
    pub target_index: usize,
    pub weights: Vec<f64>,
    pub offset: f64,
    target_mean: f64,
    rest_means: Vec<f64>,
}

impl ConditionalMeanCoeffs {
    pub(crate) fn compute(
        mean: &MeanVector,
        cov: &CovarianceMatrix,
        target: usize,
    ) -> Result<Self> {
        let n = cov.dim();
        let rest: Vec<usize> = (0..n).filter(|&i| i != target).collect();
        let m = rest.len();
        let mut block = Vec::with_capacity(m * m);
        for &i in &rest {
            for &j in &rest {
                block.push(cov.get(i, j));
            }
        }
        let (l, _) = linalg::cholesky(&block, m, 0.0)
            .map_err(|_| Error::SingularConditioningBlock { target })?;
        let mut weights: Vec<f64> = rest.iter().map(|&i| cov.get(i, target)).collect();
        linalg::cholesky_solve(&l, m, &mut weights);

        let mu = mean.as_slice();
        let rest_means: Vec<f64> = rest.iter().map(|&i| mu[i]).collect();
        let offset = mu[target] - dot(&weights, &rest_means);
        Ok(Self {
            target_index: target,
            weights,
            offset,
            target_mean: mu[target],
            rest_means,
        })
    }

    /// `μ_t + w · (v − μ_rest)`; exact `μ_t` when `v = μ_rest`.
    pub fn evaluate(&self, given: &[f64]) -> f64 {
        let shift: f64 = self
            .weights
            .iter()
            .zip(given.iter().zip(&self.rest_means))
            .map(|(w, (v, m))| w * (v - m))
            .sum();
        self.target_mean + shift
    }

    /// Same as [`evaluate`](Self::evaluate) but reads the conditioning values
    /// out of a full point, skipping the target coordinate.
    pub(crate) fn evaluate_at(&self, point: &[f64]) -> f64 {
        let t = self.target_index;
        let shift: f64 = point
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != t)
            .zip(self.weights.iter().zip(&self.rest_means))
            .map(|((_, v), (w, m))| w * (v - m))
            .sum();
        self.target_mean + shift
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl GaussianModel {
    /// Joint density at `p`.
    pub fn pdf(&self, p: &Point) -> Result<f64> {
        p.expect_dim(self.dim())?;
        Ok(self.log_pdf_unchecked(p.coords()).exp())
    }

    pub fn log_pdf(&self, p: &Point) -> Result<f64> {
        p.expect_dim(self.dim())?;
        Ok(self.log_pdf_unchecked(p.coords()))
    }

    pub(crate) fn log_pdf_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let l = self.cov.cholesky_factor();
        let mut z: Vec<f64> = x
            .iter()
            .zip(self.mean.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        linalg::forward_substitute(l, n, &mut z);
        let quad: f64 = z.iter().map(|v| v * v).sum();
        let log_det_half: f64 = (0..n).map(|k| l[k * n + k].ln()).sum();
        -0.5 * quad - log_det_half - 0.5 * n as f64 * (2.0 * PI).ln()
    }

    /// Coefficients of the conditional mean of variable `target` given the rest.
    pub fn conditional_mean_coeffs(&self, target: usize) -> Result<&ConditionalMeanCoeffs> {
        self.conditional
            .get(target)
            .ok_or(Error::InvalidSubset(format!(
                "target {target} out of range for dimension {}",
                self.dim()
            )))
    }

    /// `E(X_target | X_rest = given)` with `given` listing the other
    /// coordinates in increasing index order.
    pub fn conditional_mean(&self, target: usize, given: &[f64]) -> Result<f64> {
        let coeffs = self.conditional_mean_coeffs(target)?;
        if given.len() != self.dim() - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim() - 1,
                found: given.len(),
            });
        }
        Ok(coeffs.evaluate(given))
    }

    /// Standardized mixed central moment `E[∏_{i∈S} (X_i − μ_i)/σ_i]` over
    /// distinct indices, `|S| ≥ 2`.
    pub fn mixed_central_moment(&self, subset: &[usize]) -> Result<f64> {
        if subset.len() < 2 {
            return Err(Error::InvalidSubset(format!(
                "need at least two indices, got {}",
                subset.len()
            )));
        }
        let s = Subset::from_indices(subset, self.dim())?;
        let idx: Vec<usize> = s.indices().collect();
        Ok(isserlis(&idx, &|i, j| self.cov.correlation(i, j)))
    }

    /// ρ_S for every subset of `{0..n-1}`, indexed by bit mask. Uses the
    /// pairing recursion memoized over masks, so the whole table costs O(2ⁿ n).
    pub(crate) fn moment_table(&self) -> Vec<f64> {
        let n = self.dim();
        let size = 1usize << n;
        let mut table = vec![0.0; size];
        table[0] = 1.0;
        for mask in 1..size {
            if mask.count_ones() % 2 == 1 {
                continue;
            }
            let first = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << first);
            let mut acc = 0.0;
            let mut bits = rest;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                acc += self.cov.correlation(first, j) * table[rest & !(1 << j)];
            }
            table[mask] = acc;
        }
        table
    }
}

/// Isserlis pairing: 0 for an odd number of factors; otherwise pair the first
/// index with each remaining one and recurse.
fn isserlis(indices: &[usize], corr: &dyn Fn(usize, usize) -> f64) -> f64 {
    match indices.len() {
        0 => 1.0,
        k if k % 2 == 1 => 0.0,
        _ => {
            let first = indices[0];
            let rest = &indices[1..];
            let mut total = 0.0;
            for (pos, &j) in rest.iter().enumerate() {
                let remaining: Vec<usize> = rest
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != pos)
                    .map(|(_, &v)| v)
                    .collect();
                total += corr(first, j) * isserlis(&remaining, corr);
            }
            total
        }
    }
}
