//! Grids, Wigner fields, state constructors and the Weyl transforms.

mod density;
mod field;
mod grid;
pub mod io;
mod state;

pub use density::{density_to_wigner, wigner_to_density, DensityMatrix, NEGATIVE_FLOOR};
pub use field::{Moments, WignerField, EDGE_TOLERANCE};
pub use grid::{signed_bin, PhaseSpaceGrid};
pub use state::{make_cat, make_gaussian, GaussianSpec};

/// Moments of a field; free-function form of [`WignerField::moments`].
pub fn moments(w: &WignerField) -> Moments {
    w.moments()
}

/// `2 pi hbar` times the integral of W squared.
pub fn purity(w: &WignerField) -> f64 {
    w.purity()
}
