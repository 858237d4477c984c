//! Piecewise-linear Reeb functions with prescribed critical levels on
//! triangulated closed manifolds, with the homological checks and numeric
//! smooth-category constructions that go with them.

pub mod complex;
pub mod construct;
pub mod flat;
pub mod homology;
pub mod plmap;
pub mod semialg;
pub mod verify;
