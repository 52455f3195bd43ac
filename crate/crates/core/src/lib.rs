//! Local dependence functions H for bivariate, trivariate and general
//! n-variate models.
//!
//! Gaussian models are evaluated in closed form. Arbitrary joint densities on
//! a bounded box go through a tensor Gauss–Legendre backend, which also serves
//! as an independent check on the closed forms.
//!
//! ```
//! use localdep::{DensityModel, GaussianModel, LocalDependence, Point};
//!
//! let model = GaussianModel::from_parts(
//!     vec![0.0, 0.0, 0.0],
//!     vec![vec![1.0, 0.5, 0.3], vec![0.5, 1.0, 0.4], vec![0.3, 0.4, 1.0]],
//! )?;
//! let p = Point::new(vec![0.0, 0.0, 1.0])?;
//! let h = LocalDependence::new(&model)?.h_trivariate(&p)?.h_value;
//! assert!((h + 0.1245).abs() < 5e-5);
//!
//! let numeric = DensityModel::gaussian_default(&model)?;
//! let h_numeric = LocalDependence::new(&numeric)?.h_value(&p)?;
//! assert!((h - h_numeric).abs() < 1e-5);
//! # Ok::<(), localdep::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dependence;
pub mod error;
pub mod gaussian;
mod linalg;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod subset;

pub use analysis::{
    solve_reference_point, sweep, sweep_serial, GridAxis, GridSpec, MapResult, ReferencePoint,
    SolverOptions,
};
pub use dependence::{
    h_bivariate_surrogate, h_surrogate, holland_wang_h1, DependenceModel, DependenceResult,
    LocalDependence, PhiVector,
};
pub use error::{Error, ErrorClass, Result};
pub use gaussian::ConditionalMeanCoeffs;
pub use model::{
    validate_covariance, CovarianceMatrix, GaussianModel, MeanVector, ModelFile, Point,
};
pub use quadrature::{DensityModel, GaussLegendre, QuadratureScheme};
pub use subset::Subset;
