//! Zero finding for sparse systems.

pub mod bivariate;
pub mod mixed;
pub mod poly;
pub mod scaled;
pub mod univariate;
pub mod zeros;

pub use bivariate::roots_bivariate_resultant;
pub use mixed::{bkk_count, expected_mixed_area_mc, mixed_area_i64};
pub use poly::SparsePoly;
pub use univariate::{roots_of_terms, roots_univariate, Precision, SolverConfig};
pub use zeros::{empirical_zero_measure, EmpiricalMeasure, Zero, ZeroSet};
