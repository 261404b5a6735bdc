//! Analytic reference states of the cavity field and the observables used to
//! characterize them.
//!
//! Squeezing convention: `Ŝ(r) = exp[(r/2)(a†² - a²)]`, which squeezes the
//! `X₂ = (a - a†)/2i` quadrature and whose vacuum satisfies
//! `(a - tanh r · a†) Ŝ(r)|0⟩ = 0`, i.e. `(α²a - β²a†)|ξ⟩ = 0` when
//! `tanh r = β²/α²`.

mod cats;
mod observables;
mod squeezed;
mod wigner;

pub use cats::{
    cat_amplitudes, cat_state, odd_cat, odd_cat_alpha_for_mean_n, odd_cat_mean_n, squeezed_coherent_coefficients, CatParity, CatSpec,
};
pub use observables::{observables, observables_pure, squeezing_db_for_r, FieldObservables};
pub use squeezed::{
    cutoff_for_subtracted_squeezed_vacuum, squeeze, squeeze_generator, squeezed_fock_one, squeezed_vacuum,
    squeezed_vacuum_residual, subtract_photon, SqueezeSpec,
};
pub use wigner::{displacement_matrix, wigner, wigner_at, WignerGrid, WignerGridSpec};
