//! Verification engine for the Kapustin–Witten equations on S³ × ℝ⁺ and ℝ³ × ℝ⁺.

pub mod decomposition;
pub mod energy;
pub mod error;
pub mod fault;
pub mod halfspace;
pub mod invariant;
pub mod quadrature;
pub mod reduced;
pub mod suite;
pub mod report;
pub mod scalar;
pub mod spline;
pub mod su2;

pub use error::{KwError, Result};
pub use invariant::{GeometryConventions, InvariantField, InvariantOneForm, InvariantTwoForm};
pub use report::{CheckReport, Provenance, Relation, Status};
pub use su2::{AdRotation, Su2Element};
