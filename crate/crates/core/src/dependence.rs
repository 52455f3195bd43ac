//! Local dependence functions.
//!
//! For variables `X_1..X_n` with means `μ_i` and standard deviations `σ_i`,
//! the deviation of each unconditional mean from its best predictor at a
//! point is `ξ_i = μ_i − E(X_i | X_j = x_j, j ≠ i)` and `φ_i = ξ_i / σ_i`.
//! The local dependence function is the standardized expansion
//!
//! ```text
//! H(x) = Σ_{S ⊆ {1..n}, |S| ≠ 1} ρ_S ∏_{i∉S} φ_i  /  ∏_i √(1 + φ_i²)
//! ```
//!
//! with `ρ_∅ = 1` and `ρ_S` the standardized mixed central moment over `S`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{GaussianModel, Point};
use crate::quadrature::{DensityModel, MAX_NUMERIC_DIM};
use crate::subset::Subset;

/// What the dependence functions need from a probability model.
pub trait DependenceModel: Sync {
    fn dim(&self) -> usize;

    /// Largest dimension this backend can evaluate.
    fn max_dim(&self) -> usize;

    fn means(&self) -> Result<Vec<f64>>;

    fn std_devs(&self) -> Result<Vec<f64>>;

    /// `E(X_target | X_j = point_j, j ≠ target)`; `point[target]` is ignored.
    fn conditional_mean_at(&self, target: usize, point: &[f64]) -> Result<f64>;

    /// ρ_S for every subset, indexed by bit mask, with `ρ_∅ = 1` and
    /// singletons 0.
    fn moment_table(&self) -> Result<Vec<f64>>;
}

impl DependenceModel for GaussianModel {
    fn dim(&self) -> usize {
        GaussianModel::dim(self)
    }

    fn max_dim(&self) -> usize {
        crate::model::MAX_DIM
    }

    fn means(&self) -> Result<Vec<f64>> {
        Ok(self.mean().as_slice().to_vec())
    }

    fn std_devs(&self) -> Result<Vec<f64>> {
        Ok((0..self.dim()).map(|i| self.cov().std_dev(i)).collect())
    }

    fn conditional_mean_at(&self, target: usize, point: &[f64]) -> Result<f64> {
        Ok(self.conditional_mean_coeffs(target)?.evaluate_at(point))
    }

    fn moment_table(&self) -> Result<Vec<f64>> {
        Ok(GaussianModel::moment_table(self))
    }
}

impl DependenceModel for DensityModel {
    fn dim(&self) -> usize {
        DensityModel::dim(self)
    }

    fn max_dim(&self) -> usize {
        MAX_NUMERIC_DIM
    }

    fn means(&self) -> Result<Vec<f64>> {
        self.mean_vector()
    }

    fn std_devs(&self) -> Result<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.marginal_moments(i).map(|(_, v)| v.sqrt()))
            .collect()
    }

    fn conditional_mean_at(&self, target: usize, point: &[f64]) -> Result<f64> {
        DensityModel::conditional_mean_at(self, target, point)
    }

    fn moment_table(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut table = vec![0.0; 1 << n];
        table[0] = 1.0;
        for s in Subset::all_with_min_len(n, 2) {
            let idx: Vec<usize> = s.indices().collect();
            table[s.mask() as usize] = self.mixed_central_moment_numeric(&idx)?;
        }
        Ok(table)
    }
}

/// Standardized deviations φ_i and raw deviations ξ_i = σ_i φ_i at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector {
    pub phi: Vec<f64>,
    pub xi: Vec<f64>,
}

/// H at a point together with the pieces it was assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceResult {
    pub h_value: f64,
    /// Standardized B: the expansion numerator.
    pub numerator: f64,
    /// Standardized √Q: `∏ √(1 + φ_i²)`, always ≥ 1.
    pub denominator: f64,
    pub phi: PhiVector,
    /// ρ_S for every subset with `|S| ≥ 2`, in canonical order.
    pub rho_terms: BTreeMap<Subset, f64>,
}

/// Evaluator bound to one model. Means, standard deviations and the full
/// ρ_S table are computed once at construction and shared by every point.
#[derive(Debug, Clone)]
pub struct LocalDependence<'m, M: DependenceModel + ?Sized> {
    model: &'m M,
    means: Vec<f64>,
    std_devs: Vec<f64>,
    moments: Vec<f64>,
}

impl<'m, M: DependenceModel + ?Sized> LocalDependence<'m, M> {
    pub fn new(model: &'m M) -> Result<Self> {
        let n = model.dim();
        if n > model.max_dim() {
            return Err(Error::DimensionTooLarge {
                dim: n,
                max: model.max_dim(),
            });
        }
        Ok(Self {
            model,
            means: model.means()?,
            std_devs: model.std_devs()?,
            moments: model.moment_table()?,
        })
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }

    /// ρ_S; 1 for the empty set and 0 for singletons.
    pub fn rho(&self, s: Subset) -> f64 {
        self.moments[s.mask() as usize]
    }

    /// ρ over the full index set.
    pub fn rho_top(&self) -> f64 {
        self.rho(Subset::full(self.dim()))
    }

    pub fn rho_terms(&self) -> BTreeMap<Subset, f64> {
        Subset::all_with_min_len(self.dim(), 2)
            .into_iter()
            .map(|s| (s, self.rho(s)))
            .collect()
    }

    fn check(&self, p: &Point) -> Result<()> {
        p.expect_dim(self.dim())
    }

    /// Raw deviations ξ_i = μ_i − E(X_i | rest).
    pub fn xi_at(&self, p: &Point) -> Result<Vec<f64>> {
        self.check(p)?;
        (0..self.dim())
            .map(|i| Ok(self.means[i] - self.model.conditional_mean_at(i, p.coords())?))
            .collect()
    }

    pub fn phi_at(&self, p: &Point) -> Result<PhiVector> {
        let xi = self.xi_at(p)?;
        let phi = xi.iter().zip(&self.std_devs).map(|(x, s)| x / s).collect();
        Ok(PhiVector { phi, xi })
    }

    fn denominator(phi: &[f64]) -> f64 {
        phi.iter().map(|f| (1.0 + f * f).sqrt()).product()
    }

    /// Subset-expansion numerator. Zero ρ_S contribute nothing and are skipped.
    fn expansion_numerator(&self, phi: &[f64]) -> f64 {
        expansion_numerator(self.dim(), phi, |s| Some(self.rho(s))).unwrap_or(f64::NAN)
    }

    fn result(&self, phi: PhiVector, numerator: f64) -> DependenceResult {
        let denominator = Self::denominator(&phi.phi);
        DependenceResult {
            h_value: numerator / denominator,
            numerator,
            denominator,
            phi,
            rho_terms: self.rho_terms(),
        }
    }

    /// H for two variables: `(ρ + φ_X φ_Y) / (√(1+φ_Y²) √(1+φ_X²))`.
    pub fn h_bivariate(&self, p: &Point) -> Result<DependenceResult> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        let phi = self.phi_at(p)?;
        let (fx, fy) = (phi.phi[0], phi.phi[1]);
        let numerator = self.rho(Subset::from_mask(0b11)) + fx * fy;
        Ok(self.result(phi, numerator))
    }

    /// H for three variables, written out term by term.
    pub fn h_trivariate(&self, p: &Point) -> Result<DependenceResult> {
        if self.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: self.dim(),
            });
        }
        let phi = self.phi_at(p)?;
        let (fx, fy, fz) = (phi.phi[0], phi.phi[1], phi.phi[2]);
        let r = |mask| self.rho(Subset::from_mask(mask));
        let numerator = r(0b111) + r(0b011) * fz + r(0b110) * fx + r(0b101) * fy + fx * fy * fz;
        Ok(self.result(phi, numerator))
    }

    /// H for any supported n by subset expansion.
    pub fn h_nvariate(&self, p: &Point) -> Result<DependenceResult> {
        let phi = self.phi_at(p)?;
        let numerator = self.expansion_numerator(&phi.phi);
        Ok(self.result(phi, numerator))
    }

    /// H value only, without building the full result.
    pub fn h_value(&self, p: &Point) -> Result<f64> {
        let phi = self.phi_at(p)?.phi;
        Ok(self.expansion_numerator(&phi) / Self::denominator(&phi))
    }
}

fn expansion_numerator(n: usize, phi: &[f64], rho: impl Fn(Subset) -> Option<f64>) -> Option<f64> {
    let mut total = 0.0;
    let mut subsets = Subset::all_with_min_len(n, 2);
    subsets.insert(0, Subset::EMPTY);
    for s in subsets {
        let r = rho(s)?;
        if r == 0.0 {
            continue;
        }
        let prod: f64 = s.complement(n).indices().map(|i| phi[i]).product();
        total += r * prod;
    }
    Some(total)
}

/// Point value of φ for any model.
pub fn phi_at<M: DependenceModel + ?Sized>(model: &M, p: &Point) -> Result<PhiVector> {
    LocalDependence::new(model)?.phi_at(p)
}

pub fn h_bivariate<M: DependenceModel + ?Sized>(model: &M, p: &Point) -> Result<DependenceResult> {
    LocalDependence::new(model)?.h_bivariate(p)
}

pub fn h_trivariate<M: DependenceModel + ?Sized>(model: &M, p: &Point) -> Result<DependenceResult> {
    LocalDependence::new(model)?.h_trivariate(p)
}

pub fn h_nvariate<M: DependenceModel + ?Sized>(model: &M, p: &Point) -> Result<DependenceResult> {
    LocalDependence::new(model)?.h_nvariate(p)
}

/// The surrogate `h` with φ values replaced by free arguments.
///
/// For three variables the arguments follow `(t, s, w)`, where `t` multiplies
/// ρ_{X,Y}, `s` multiplies ρ_{Y,Z} and `w` multiplies ρ_{X,Z}, so that
/// `H(x,y,z) = h(φ_Z, φ_X, φ_Y)`. For two variables `h(t, s)` is symmetric;
/// for n ≥ 4 argument `i` stands in for φ_i.
pub fn h_surrogate(rho_terms: &BTreeMap<Subset, f64>, t_values: &[f64]) -> Result<f64> {
    let n = t_values.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall { dim: n });
    }
    if n > crate::model::MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: crate::model::MAX_DIM,
        });
    }
    let phi: Vec<f64> = if n == 3 {
        vec![t_values[1], t_values[2], t_values[0]]
    } else {
        t_values.to_vec()
    };
    let lookup = |s: Subset| {
        if s.is_empty() {
            Some(1.0)
        } else {
            rho_terms.get(&s).copied()
        }
    };
    let numerator = match expansion_numerator(n, &phi, lookup) {
        Some(v) => v,
        None => {
            let missing = Subset::all_with_min_len(n, 2)
                .into_iter()
                .find(|s| !rho_terms.contains_key(s))
                .map(|s| s.to_string())
                .unwrap_or_default();
            return Err(Error::MissingRhoTerm(missing));
        }
    };
    Ok(numerator / phi.iter().map(|f| (1.0 + f * f).sqrt()).product::<f64>())
}

/// Bivariate surrogate `h(t, s) = (ρ + ts) / (√(1+t²) √(1+s²))`.
pub fn h_bivariate_surrogate(rho: f64, t: f64, s: f64) -> f64 {
    (rho + t * s) / ((1.0 + t * t).sqrt() * (1.0 + s * s).sqrt())
}

/// Holland–Wang local dependence `∂² log f / ∂x ∂y` by central differences.
///
/// With `step = None` each axis uses `1e-4 · (1 + |coordinate|)`.
pub fn holland_wang_h1(
    density: impl Fn(&[f64]) -> f64,
    p: &Point,
    step: Option<f64>,
) -> Result<f64> {
    p.expect_dim(2)?;
    let (x, y) = (p.coords()[0], p.coords()[1]);
    let (hx, hy) = match step {
        Some(h) if h > 0.0 && h.is_finite() => (h, h),
        Some(h) => {
            return Err(Error::InvalidSolverSetting(format!(
                "finite-difference step must be positive, got {h}"
            )))
        }
        None => (1e-4 * (1.0 + x.abs()), 1e-4 * (1.0 + y.abs())),
    };
    let log_f = |a: f64, b: f64| -> Result<f64> {
        let f = density(&[a, b]);
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::NonPositiveDensityInStencil { point: vec![x, y] });
        }
        Ok(f.ln())
    };
    let pp = log_f(x + hx, y + hy)?;
    let pm = log_f(x + hx, y - hy)?;
    let mp = log_f(x - hx, y + hy)?;
    let mm = log_f(x - hx, y - hy)?;
    Ok((pp - pm - mp + mm) / (4.0 * hx * hy))
}

/// Direct-integration B and Q at `p`: the conditional means at `p` are held
/// fixed as constants `c_i` and `B = E[∏(X_i − c_i)]`, `Q = ∏ E[(X_i − c_i)²]`.
/// No moment expansion is involved.
pub fn b_q_direct(model: &DensityModel, p: &Point) -> Result<(f64, f64)> {
    let n = model.dim();
    p.expect_dim(n)?;
    let centers = (0..n)
        .map(|i| DensityModel::conditional_mean_at(model, i, p.coords()))
        .collect::<Result<Vec<f64>>>()?;
    let (values, _) = model.expectations(n + 1, |x, out| {
        let mut prod = 1.0;
        for i in 0..n {
            let d = x[i] - centers[i];
            prod *= d;
            out[i + 1] = d * d;
        }
        out[0] = prod;
    })?;
    Ok((values[0], values[1..].iter().product()))
}

pub fn b_direct(model: &DensityModel, p: &Point) -> Result<f64> {
    b_q_direct(model, p).map(|(b, _)| b)
}

pub fn q_direct(model: &DensityModel, p: &Point) -> Result<f64> {
    b_q_direct(model, p).map(|(_, q)| q)
}
