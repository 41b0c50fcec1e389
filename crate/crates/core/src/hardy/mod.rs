//! Square function, `H¹_L` norm, atoms and molecules.

mod atoms;
mod quadrature;
mod square;

pub use atoms::{
    annuli, make_atom, validate_atom, validate_molecule, Atom, BallSpec, ConditionMargin, Molecule, ValidationReport,
    MARGIN_TOL, SUPPORT_TOL,
};
pub use quadrature::{truncation_error_bound, ConeQuadrature};
pub use square::{h1_norm, square_function, SquareFunction};
