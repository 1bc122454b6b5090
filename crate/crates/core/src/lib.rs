//! Pilot observation-matrix design and Bayesian channel estimation for
//! dense (sub-half-wavelength) antenna arrays.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`kernels`]: prior channel covariances for a uniform planar array and
//!   their deterministic Hermitian eigendecomposition.
//! - [`channel`]: Gaussian and clustered-multipath channel draws, pilot
//!   reception.
//! - [`design`]: observation matrices (water-filling, ice-filling,
//!   majorization-minimization, random, top-Q, DFT) together with the
//!   mutual-information and posterior-kernel machinery they are built on.
//! - [`estimate`]: MMSE, least-squares and OMP channel estimators.
//! - [`analysis`]: closed-form and asymptotic MSE expressions used as
//!   oracles for the simulator.
//! - [`experiment`]: config-driven sweeps and the commands behind the
//!   `icefill` binary.
//!
//! ```
//! use icefill::design::{ice_fill, mutual_information};
//! use icefill::kernels::{evd_hermitian, Kernel, DEFAULT_RANK_TOL};
//!
//! let kernel = Kernel::from_real_diagonal(&[2.0, 1.0]);
//! let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
//! let (w, alloc) = ice_fill(&basis, 1.0, 3).unwrap();
//! assert_eq!(alloc.reuse, vec![2, 1]);
//! let mi = mutual_information(&w, &kernel, 1.0).unwrap();
//! assert!((mi - (5.0f64.ln() + 2.0f64.ln())).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod channel;
pub mod design;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod special;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
