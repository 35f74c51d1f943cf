//! Gromov-Witten numbers and Welschinger invariants of projective spaces,
//! computed by enumerating marked floor diagrams.

pub mod canon;
pub mod diagram;
pub mod enumerate;
pub mod error;
pub mod invariants;
pub mod marking;
pub mod multiplicity;
pub mod oracles;

pub use canon::{automorphisms, canonical_form, canonicalize, Automorphism, CanonicalKey};
pub use diagram::{DiagramPoint, Edge, FloorDiagram, Head, Violation};
pub use enumerate::{enumerate_floor_diagrams, enumerate_floor_diagrams_with, EnumOptions};
pub use error::{FloorError, Result};
pub use invariants::{Engine, InvariantCache, InvariantKey};
pub use marking::{
    build_constraints, count_marked_by_type, enumerate_markings, enumerate_viable_markings,
    ConstraintSpec, MarkedDiagram, MarkingViolation, TypeCount,
};
pub use multiplicity::{
    complex_multiplicity, floor_constraint_dims, height, nonzero_types, real_multiplicity,
    FloorDims, InvariantOracle, MultiplicityResult, TypeSummary,
};
pub use oracles::{
    codim_two_formula, discriminant_degree, kontsevich_rational, proposition_checks,
};
