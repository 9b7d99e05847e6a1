//! Crane–Yetter and shadow state sums of 4-manifolds.

pub mod scalar;
pub mod zlinalg;
pub mod category;
pub mod simplicial;
pub mod cy;
pub mod shadow;

pub use category::{builtin, CoordinatedCategory, Label, ValidationReport};
pub use cy::{cy_state_sum, CyError, CyOptions, CyResult, Strategy};
pub use scalar::{Backend, CycloField, Cyclo, Scalar, ScalarError};
pub use shadow::{shadow_state_sum, GleamForm, ShadowError, ShadowPolyhedron};
pub use simplicial::{Complex4, ComplexError, Move};
