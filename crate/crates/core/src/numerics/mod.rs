//! Dense SPD linear algebra, chi-square/F tails, finite differences and
//! seeded Gaussian sampling.

mod diff;
mod linalg;
mod random;
pub mod special;

pub use diff::{finite_diff_grad, finite_diff_jacobian};
pub use linalg::{quad_form_inv, spd_factor, Matrix, SpdFactor};
pub use random::{
    derive_seed, draw_mvn, draw_std_normal, mix64, normal_stream, GaussianSource, RandomStream,
};
pub use special::{chi2_sf, f_sf};
