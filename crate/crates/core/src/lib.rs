//! Code verification for practically singular Galerkin systems.
//!
//! The crate builds two families of rank-deficient systems (a 1D analogy with
//! kernel `G = 1`, and an RWG discretization of the EFIE with a smooth
//! manufactured Green's function), solves them for the solution closest to
//! the manufactured one, plants controlled coding errors, and measures how
//! truncation- and discretization-error metrics converge under refinement.
//!
//! ```
//! use mms_verify::catalog;
//! use mms_verify::verify::{run_study, Metric, StudyConfig};
//!
//! let case = catalog::find("1d/1b").unwrap();
//! let spec = case.injection(None, None).unwrap();
//! let report = run_study(&case.problem(None), &[32, 64, 128], &spec, &StudyConfig::default()).unwrap();
//! let p = report.headline(Metric::Discretization).unwrap();
//! assert!((p - 1.0).abs() < 0.1);
//! ```

pub mod catalog;
pub mod efie;
pub mod error;
pub mod injection;
pub mod linalg;
pub mod mesh;
pub mod model1d;
pub mod plot;
pub mod quadrature;
pub mod rwg;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{minimal_change_solve, pivoted_qr, DenseMatrix, MinimalChangeSolution, PivotedQr};
