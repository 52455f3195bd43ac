//! Dependence maps over axis-aligned grids and the reference-point solver.

use rayon::prelude::*;

use crate::dependence::{DependenceModel, LocalDependence};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Point;

/// One swept axis: `count` evenly spaced values from `lo` to `hi`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Fixed coordinates plus swept axes. Nodes are enumerated row-major: the
/// first swept axis varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    fixed: Vec<(usize, f64)>,
    swept: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(dim: usize, mut fixed: Vec<(usize, f64)>, swept: Vec<GridAxis>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut claim = |axis: usize| -> Result<()> {
            if axis >= dim {
                return Err(Error::InvalidGrid(format!(
                    "axis {} out of range for dimension {dim}",
                    axis + 1
                )));
            }
            if std::mem::replace(&mut seen[axis], true) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} given more than once",
                    axis + 1
                )));
            }
            Ok(())
        };
        for &(axis, v) in &fixed {
            claim(axis)?;
            if !v.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "fixed value for axis {} is not finite",
                    axis + 1
                )));
            }
        }
        for a in &swept {
            claim(a.axis)?;
            if a.count < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {} needs at least 2 nodes",
                    a.axis + 1
                )));
            }
            if !(a.lo.is_finite() && a.hi.is_finite() && a.lo < a.hi) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} range {}:{} is empty",
                    a.axis + 1,
                    a.lo,
                    a.hi
                )));
            }
        }
        if let Some(axis) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGrid(format!(
                "axis {} is neither fixed nor swept",
                axis + 1
            )));
        }
        if swept.is_empty() {
            return Err(Error::InvalidGrid("no swept axis".into()));
        }
        fixed.sort_by_key(|&(a, _)| a);
        Ok(Self { dim, fixed, swept })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fixed(&self) -> &[(usize, f64)] {
        &self.fixed
    }

    pub fn swept(&self) -> &[GridAxis] {
        &self.swept
    }

    pub fn node_count(&self) -> usize {
        self.swept.iter().map(|a| a.count).product()
    }

    /// Per-axis indices of node `k`.
    pub fn node_indices(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.swept.len()];
        for (slot, a) in idx.iter_mut().zip(&self.swept).rev() {
            *slot = k % a.count;
            k /= a.count;
        }
        idx
    }

    /// Full model-space coordinates of node `k`.
    pub fn node_point(&self, k: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.dim];
        for &(axis, v) in &self.fixed {
            coords[axis] = v;
        }
        for (a, i) in self.swept.iter().zip(self.node_indices(k)) {
            coords[a.axis] = a.value(i);
        }
        coords
    }

    /// Swept-axis coordinates of node `k`.
    pub fn node_swept_coords(&self, k: usize) -> Vec<f64> {
        self.swept
            .iter()
            .zip(self.node_indices(k))
            .map(|(a, i)| a.value(i))
            .collect()
    }
}

/// H over every node of a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub argmin: usize,
    pub argmax: usize,
}

impl MapResult {
    fn from_values(grid: GridSpec, values: Vec<f64>) -> Self {
        let (mut argmin, mut argmax) = (0, 0);
        for (k, v) in values.iter().enumerate() {
            if *v < values[argmin] {
                argmin = k;
            }
            if *v > values[argmax] {
                argmax = k;
            }
        }
        Self {
            min: values[argmin],
            max: values[argmax],
            argmin,
            argmax,
            grid,
            values,
        }
    }
}

fn evaluate_node<M: DependenceModel + ?Sized>(
    ld: &LocalDependence<'_, M>,
    spec: &GridSpec,
    k: usize,
) -> Result<f64> {
    let wrap = |e: Error| Error::GridNode {
        node: k,
        source: Box::new(e),
    };
    let p = Point::new(spec.node_point(k)).map_err(wrap)?;
    let h = ld.h_value(&p).map_err(wrap)?;
    if !h.is_finite() {
        return Err(wrap(Error::InvalidGrid(format!("non-finite H value {h}"))));
    }
    Ok(h)
}

fn check_spec<M: DependenceModel + ?Sized>(model: &M, spec: &GridSpec) -> Result<()> {
    if spec.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: spec.dim(),
        });
    }
    Ok(())
}

/// Evaluates H at every node in parallel. Each node is computed independently,
/// so the output is bit-identical to [`sweep_serial`].
pub fn sweep<M: DependenceModel + ?Sized>(model: &M, spec: &GridSpec) -> Result<MapResult> {
    check_spec(model, spec)?;
    let ld = LocalDependence::new(model)?;
    let values = (0..spec.node_count())
        .into_par_iter()
        .map(|k| evaluate_node(&ld, spec, k))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MapResult::from_values(spec.clone(), values))
}

pub fn sweep_serial<M: DependenceModel + ?Sized>(model: &M, spec: &GridSpec) -> Result<MapResult> {
    check_spec(model, spec)?;
    let ld = LocalDependence::new(model)?;
    let values = (0..spec.node_count())
        .map(|k| evaluate_node(&ld, spec, k))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MapResult::from_values(spec.clone(), values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Step halvings tried per iteration before giving up.
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub point: Vec<f64>,
    /// `max_i |ξ_i|` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub h_value: f64,
    /// Full-set standardized mixed moment, the value H takes at a reference point.
    pub rho_top: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Finds a point where every conditional mean equals its unconditional mean,
/// i.e. ξ(p) = 0, by damped Newton iteration with a central-difference
/// Jacobian. Steps are halved until the residual norm decreases.
///
/// The system can have several solutions for multimodal densities; the one
/// reached from `start` is returned.
pub fn solve_reference_point<M: DependenceModel + ?Sized>(
    model: &M,
    start: &Point,
    opts: SolverOptions,
) -> Result<ReferencePoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidSolverSetting(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let ld = LocalDependence::new(model)?;
    let n = ld.dim();
    start.expect_dim(n)?;
    let residual = |p: &[f64]| -> Result<Vec<f64>> { ld.xi_at(&Point::new(p.to_vec())?) };

    let mut p = start.coords().to_vec();
    let mut r = residual(&p)?;
    let mut iterations = 0;
    while max_abs(&r) > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                max_iter: opts.max_iter,
                residual: max_abs(&r),
            });
        }
        iterations += 1;
        let jac = jacobian(&residual, &p)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = newton_step(jac, n, rhs).ok_or(Error::SingularJacobian)?;

        let norm = euclid(&r);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = p.iter().zip(&step).map(|(x, d)| x + scale * d).collect();
            let tr = residual(&trial)?;
            if euclid(&tr) < norm {
                accepted = Some((trial, tr));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((np, nr)) => {
                p = np;
                r = nr;
            }
            None => {
                return Err(Error::NoConvergence {
                    max_iter: iterations,
                    residual: max_abs(&r),
                })
            }
        }
    }
    let at = Point::new(p.clone())?;
    Ok(ReferencePoint {
        h_value: ld.h_value(&at)?,
        rho_top: ld.rho_top(),
        point: p,
        residual: max_abs(&r),
        iterations,
    })
}

fn jacobian(residual: &impl Fn(&[f64]) -> Result<Vec<f64>>, p: &[f64]) -> Result<Vec<f64>> {
    let n = p.len();
    let mut jac = vec![0.0; n * n];
    let mut probe = p.to_vec();
    for j in 0..n {
        let h = 1e-6 * (1.0 + p[j].abs());
        probe[j] = p[j] + h;
        let up = residual(&probe)?;
        probe[j] = p[j] - h;
        let down = residual(&probe)?;
        probe[j] = p[j];
        for i in 0..n {
            jac[i * n + j] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Solves `J δ = rhs`. When `J` is rank deficient (some ξ_i identically zero,
/// leaving directions unconstrained) falls back to a lightly regularized
/// least-squares step.
fn newton_step(jac: Vec<f64>, n: usize, rhs: Vec<f64>) -> Option<Vec<f64>> {
    if let Some(step) = linalg::lu_solve(jac.clone(), n, rhs.clone(), 1e-12) {
        return Some(step);
    }
    let scale = jac.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return None;
    }
    let mut normal = vec![0.0; n * n];
    let mut jt_r = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            normal[i * n + j] = (0..n).map(|k| jac[k * n + i] * jac[k * n + j]).sum();
        }
        normal[i * n + i] += 1e-12 * scale * scale;
        jt_r[i] = (0..n).map(|k| jac[k * n + i] * rhs[k]).sum();
    }
    let (l, _) = linalg::cholesky(&normal, n, 0.0).ok()?;
    linalg::cholesky_solve(&l, n, &mut jt_r);
    Some(jt_r)
}
