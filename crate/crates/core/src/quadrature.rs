//! Tensor-product Gauss–Legendre integration over a bounded box, used for
//! densities without closed forms and as the oracle for the Gaussian ones.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{GaussianModel, Point};
use crate::subset::Subset;

/// Tensor moments cost `nodes^dim`; above four axes that is no longer practical.
pub const MAX_NUMERIC_DIM: usize = 4;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_order`, found by Newton iteration from the
    /// usual cosine guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss–Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[order - 1 - i] = -x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn scaled(&self, lo: f64, hi: f64) -> ScaledRule {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        ScaledRule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// A Gauss–Legendre rule mapped onto a specific interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type RuleKey = (u64, u64, usize);

fn rule_cache() -> &'static RwLock<HashMap<RuleKey, Arc<ScaledRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Arc<ScaledRule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared rule for `(lo, hi, order)`, computed at most once per key.
pub fn cached_rule(lo: f64, hi: f64, order: usize) -> Arc<ScaledRule> {
    let key = (lo.to_bits(), hi.to_bits(), order);
    if let Some(rule) = rule_cache()
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .get(&key)
    {
        return Arc::clone(rule);
    }
    let rule = Arc::new(GaussLegendre::new(order).scaled(lo, hi));
    let mut cache = rule_cache().write().unwrap_or_else(|e| e.into_inner());
    Arc::clone(cache.entry(key).or_insert(rule))
}

/// Fixed-order tensor rule with one refinement step.
///
/// An estimate at `nodes_per_axis` is compared with one at half the order; if
/// they differ by more than the tolerance, the order is doubled once and the
/// doubled estimate is compared with the original instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureScheme {
    pub nodes_per_axis: usize,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self { nodes_per_axis: 64 }
    }
}

impl QuadratureScheme {
    pub fn new(nodes_per_axis: usize) -> Result<Self> {
        if nodes_per_axis < 8 || !nodes_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidQuadrature(format!(
                "nodes_per_axis must be an even number >= 8, got {nodes_per_axis}"
            )));
        }
        Ok(Self { nodes_per_axis })
    }
}

/// A value with its quadrature error estimate `|refined − coarse|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Estimates within a few ulps of each other carry no information about
/// truncation error, so the reported error never drops below this floor.
fn error_floor(v: f64) -> f64 {
    1e-14 * (1.0 + v.abs())
}

pub type DensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A joint density on a bounded box with integration controls.
pub struct DensityModel {
    dim: usize,
    density: Arc<DensityFn>,
    support: Vec<(f64, f64)>,
    scheme: QuadratureScheme,
    tol: f64,
    mass: f64,
    moments: OnceLock<Result<Vec<(f64, f64)>>>,
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityModel")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("scheme", &self.scheme)
            .field("tol", &self.tol)
            .field("mass", &self.mass)
            .finish_non_exhaustive()
    }
}

impl DensityModel {
    /// Validates the box and checks that the density integrates to one within `tol`.
    pub fn new(
        support: Vec<(f64, f64)>,
        density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        scheme: QuadratureScheme,
        tol: f64,
    ) -> Result<Self> {
        let dim = support.len();
        if dim < 2 {
            return Err(Error::DimensionTooSmall { dim });
        }
        if dim > MAX_NUMERIC_DIM {
            return Err(Error::DimensionTooLarge {
                dim,
                max: MAX_NUMERIC_DIM,
            });
        }
        for (axis, &(lo, hi)) in support.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSupport { axis, lo, hi });
            }
        }
        let scheme = QuadratureScheme::new(scheme.nodes_per_axis)?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidQuadrature(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let mut model = Self {
            dim,
            density: Arc::new(density),
            support,
            scheme,
            tol,
            mass: 1.0,
            moments: OnceLock::new(),
        };
        let raw =
            model.raw_integrals(model.scheme.nodes_per_axis, 1, |_, out| out[0] = 1.0, true)?;
        let mass = raw[0];
        if !((mass - 1.0).abs() <= tol) {
            return Err(Error::DensityNotNormalized { mass, tol });
        }
        model.mass = mass;
        Ok(model)
    }

    /// Wraps a Gaussian as a density truncated to `μ ± half_width·σ` per axis.
    pub fn from_gaussian(
        model: &GaussianModel,
        half_width: f64,
        scheme: QuadratureScheme,
        tol: f64,
    ) -> Result<Self> {
        let support = (0..model.dim())
            .map(|i| {
                let mu = model.mean().as_slice()[i];
                let sd = model.cov().std_dev(i);
                (mu - half_width * sd, mu + half_width * sd)
            })
            .collect();
        let g = model.clone();
        Self::new(support, move |x| g.log_pdf_unchecked(x).exp(), scheme, tol)
    }

    /// Gaussian wrapper with the defaults used throughout the test suites:
    /// `μ ± 8σ`, 64 nodes per axis, tolerance 1e-9.
    pub fn gaussian_default(model: &GaussianModel) -> Result<Self> {
        Self::from_gaussian(model, 8.0, QuadratureScheme::default(), 1e-9)
    }

    /// Same density and box with a different node count.
    pub fn with_scheme(&self, scheme: QuadratureScheme) -> Result<Self> {
        let density = Arc::clone(&self.density);
        Self::new(self.support.clone(), move |x| density(x), scheme, self.tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Integral of the density over the box, as measured at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        (self.density)(x)
    }

    /// `∫ g_k(x) f(x) dx` for each of `k` integrand components on an
    /// `order`-point tensor grid. Sums over the first axis run in parallel but
    /// are reduced in a fixed order.
    fn raw_integrals<G>(
        &self,
        order: usize,
        k: usize,
        g: G,
        check_density: bool,
    ) -> Result<Vec<f64>>
    where
        G: Fn(&[f64], &mut [f64]) + Sync,
    {
        let rules: Vec<Arc<ScaledRule>> = self
            .support
            .iter()
            .map(|&(lo, hi)| cached_rule(lo, hi, order))
            .collect();
        let n = self.dim;
        let slabs: Vec<Result<Vec<f64>>> = (0..order)
            .into_par_iter()
            .map(|i0| {
                let mut acc = vec![0.0; k];
                let mut buf = vec![0.0; k];
                let mut idx = vec![0usize; n];
                idx[0] = i0;
                let mut x = vec![0.0; n];
                loop {
                    let mut w = 1.0;
                    for a in 0..n {
                        x[a] = rules[a].nodes[idx[a]];
                        w *= rules[a].weights[idx[a]];
                    }
                    let f = (self.density)(&x);
                    if check_density && !(f >= 0.0 && f.is_finite()) {
                        return Err(Error::InvalidDensityValue { point: x.clone() });
                    }
                    if f != 0.0 {
                        g(&x, &mut buf);
                        for (a, b) in acc.iter_mut().zip(&buf) {
                            *a += w * f * b;
                        }
                    }
                    // odometer over axes 1..n
                    let mut a = n - 1;
                    loop {
                        if a == 0 {
                            return Ok(acc);
                        }
                        idx[a] += 1;
                        if idx[a] < order {
                            break;
                        }
                        idx[a] = 0;
                        a -= 1;
                    }
                }
            })
            .collect();
        let mut total = vec![0.0; k];
        for slab in slabs {
            for (t, v) in total.iter_mut().zip(slab?) {
                *t += v;
            }
        }
        Ok(total)
    }

    /// Expectations `E[g_k(X)]` (normalized by the box mass), with the
    /// largest component error estimate.
    pub fn expectations<G>(&self, k: usize, g: G) -> Result<(Vec<f64>, f64)>
    where
        G: Fn(&[f64], &mut [f64]) + Sync,
    {
        let at = |order: usize| -> Result<Vec<f64>> {
            let raw = self.raw_integrals(
                order,
                k + 1,
                |x, out| {
                    out[0] = 1.0;
                    g(x, &mut out[1..]);
                },
                false,
            )?;
            let mass = raw[0];
            Ok(raw[1..].iter().map(|v| v / mass).collect())
        };
        self.refine(at)
    }

    fn refine(&self, at: impl Fn(usize) -> Result<Vec<f64>>) -> Result<(Vec<f64>, f64)> {
        let order = self.scheme.nodes_per_axis;
        let coarse = at(order / 2)?;
        let fine = at(order)?;
        let err = max_diff(&coarse, &fine);
        if err <= self.tol {
            return Ok((fine, err));
        }
        let refined = at(2 * order)?;
        let err = max_diff(&fine, &refined);
        if err <= self.tol {
            return Ok((refined, err));
        }
        Err(Error::IntegrationNotConverged {
            estimate: err,
            tol: self.tol,
        })
    }

    /// Marginal means and variances for every axis, computed on first use.
    fn all_marginal_moments(&self) -> Result<&[(f64, f64)]> {
        let cached = self.moments.get_or_init(|| {
            let n = self.dim;
            let (means, _) = self.expectations(n, |x, out| out.copy_from_slice(x))?;
            let (vars, _) = self.expectations(n, |x, out| {
                for i in 0..n {
                    out[i] = (x[i] - means[i]).powi(2);
                }
            })?;
            for (axis, &variance) in vars.iter().enumerate() {
                if !(variance > 0.0) {
                    return Err(Error::NonPositiveVariance { axis, variance });
                }
            }
            Ok(means.into_iter().zip(vars).collect())
        });
        cached.as_deref().map_err(Clone::clone)
    }

    /// Mean and variance of the marginal along `axis`.
    pub fn marginal_moments(&self, axis: usize) -> Result<(f64, f64)> {
        self.check_axis(axis)?;
        Ok(self.all_marginal_moments()?[axis])
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::InvalidSubset(format!(
                "axis {axis} out of range for dimension {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `E(X_target | X_rest = given)` by 1-D quadrature along the target axis.
    /// `given` lists the other coordinates in increasing index order.
    pub fn conditional_mean_numeric(&self, target: usize, given: &[f64]) -> Result<f64> {
        Ok(self.conditional_mean_estimate(target, given)?.value)
    }

    pub fn conditional_mean_estimate(&self, target: usize, given: &[f64]) -> Result<Estimate> {
        self.check_axis(target)?;
        if given.len() != self.dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim - 1,
                found: given.len(),
            });
        }
        let mut point = Vec::with_capacity(self.dim);
        point.extend_from_slice(&given[..target]);
        point.push(0.0);
        point.extend_from_slice(&given[target..]);
        self.conditional_mean_in_place(target, point)
    }

    fn conditional_mean_in_place(&self, target: usize, mut point: Vec<f64>) -> Result<Estimate> {
        let (lo, hi) = self.support[target];
        let mut slice = |order: usize| -> Result<f64> {
            let rule = cached_rule(lo, hi, order);
            let (mut mass, mut first) = (0.0, 0.0);
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                point[target] = x;
                let f = (self.density)(&point);
                mass += w * f;
                first += w * f * x;
            }
            if !(mass > 1e-300) {
                return Err(Error::ZeroDensitySlice { target });
            }
            Ok(first / mass)
        };
        let order = self.scheme.nodes_per_axis;
        let coarse = slice(order / 2)?;
        let fine = slice(order)?;
        let scale = 1.0 + fine.abs();
        let err = (fine - coarse).abs().max(error_floor(fine));
        if err <= self.tol * scale {
            return Ok(Estimate {
                value: fine,
                error: err,
            });
        }
        let refined = slice(2 * order)?;
        let err = (refined - fine).abs().max(error_floor(refined));
        if err <= self.tol * scale {
            return Ok(Estimate {
                value: refined,
                error: err,
            });
        }
        Err(Error::IntegrationNotConverged {
            estimate: err,
            tol: self.tol * scale,
        })
    }

    pub(crate) fn conditional_mean_at(&self, target: usize, point: &[f64]) -> Result<f64> {
        Ok(self
            .conditional_mean_in_place(target, point.to_vec())?
            .value)
    }

    /// Standardized mixed central moment over distinct indices, `|S| ≥ 2`.
    pub fn mixed_central_moment_numeric(&self, subset: &[usize]) -> Result<f64> {
        Ok(self.mixed_central_moment_estimate(subset)?.value)
    }

    pub fn mixed_central_moment_estimate(&self, subset: &[usize]) -> Result<Estimate> {
        if subset.len() < 2 {
            return Err(Error::InvalidSubset(format!(
                "need at least two indices, got {}",
                subset.len()
            )));
        }
        let s = Subset::from_indices(subset, self.dim)?;
        let moments = self.all_marginal_moments()?;
        let idx: Vec<usize> = s.indices().collect();
        let (values, err) = self.expectations(1, |x, out| {
            out[0] = idx
                .iter()
                .map(|&i| (x[i] - moments[i].0) / moments[i].1.sqrt())
                .product();
        })?;
        Ok(Estimate {
            value: values[0],
            error: err.max(error_floor(values[0])),
        })
    }

    pub fn mean_vector(&self) -> Result<Vec<f64>> {
        Ok(self.all_marginal_moments()?.iter().map(|m| m.0).collect())
    }

    /// Checks a point against the model dimension.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        let p = Point::new(coords)?;
        p.expect_dim(self.dim)?;
        Ok(p)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().max(error_floor(*y)))
        .fold(0.0, f64::max)
}
