//! Joint linear regression of the quantile and the Expected Shortfall.
//!
//! For regressors `X_t` the model is `q_t = X_t' theta_q`,
//! `e_t = X_t' theta_e`, estimated by minimizing the mean of
//! [`fz0_loss`]. Feasibility requires `e_t < 0` on every row.

mod covariance;
mod design;
mod fit;
mod loss;

pub use covariance::{estimate_covariance, sparsity_estimate, SparsityEstimate};
pub use design::Design;
pub use fit::{fit_intercept_only, fit_joint, fit_joint_with, FitOptions, JointFit};
pub use loss::{average_loss, fz0_loss, fz0_loss_de};
