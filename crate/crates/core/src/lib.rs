//! Coulomb-corrected strong-field ionization amplitudes evaluated on
//! complex-time contours that thread the branch cuts of the Coulomb
//! potential along the quantum orbit.

#[cfg(test)]
#[macro_use]
mod testutil;

pub mod amplitude;
pub mod branchcut;
pub mod classical;
pub mod contour;
pub mod error;
pub mod field;
pub mod orbit;
pub mod quad;
pub mod spectrum;
pub mod tca;
pub mod units;

pub use error::{Result, SlalomError};
pub use field::{ComplexTime, FieldParams, Momentum};
pub use orbit::{Orbit, SaddleSolution};
