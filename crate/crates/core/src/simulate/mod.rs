//! Return simulators, forecasters and misspecification designs.
//!
//! All simulators draw `Y_t = sigma_t z_t` with `z_t` from an
//! [`InnovationLaw`](crate::InnovationLaw) and are deterministic given the
//! seed.

mod forecasters;
mod misspec;
mod process;

pub use forecasters::{
    forecasts_from_sigma, garch_filter, historical_simulation, oracle_forecasts, HsConvention,
    HsForecasts,
};
pub use misspec::{apply_misspec, MisspecDesign, MisspecKind};
pub use process::{simulate_egarch, simulate_garch, EgarchSpec, GarchSpec, SimPath};
