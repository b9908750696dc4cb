//! Log-domain arithmetic, special functions and the small numerical toolkit
//! everything else is built on.
//!
//! The basis functions of the Gaussian expansion involve factors such as
//! `2^k / k!` and `x^k` that leave the `f64` range once `k` passes a few
//! hundred, while their products stay of order one. All such quantities are
//! carried as [`SignedLogValue`]s and only converted to plain reals at the end.

mod optimize;
mod slv;
mod special;
mod summation;

pub use optimize::{golden_section_max, maximize_on_interval, SupSearch};
pub use slv::{slv_product, slv_sum, SignedLogValue, FLUSH_RELATIVE};
pub use special::{log1pmx, log_factorial, stirling_correction, stirling_main};
pub use summation::CompensatedSum;
