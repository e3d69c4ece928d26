//! Finite-truncation numerics for Bott-Dirac operators on boson-fermion Fock
//! spaces, Sobolev-weighted Gaussian measures over torus field configurations,
//! gauge holonomies and fluctuated Hamiltonians.
//!
//! Every operator lives on a truncated space `Nb^n * 2^n`, stored as an
//! [`OperatorMatrix`]. Identities that only hold in the untruncated limit are
//! checked on *interior* states, i.e. states with no weight on the top bosonic
//! level of any mode.

pub mod bott_dirac;
pub mod clifford_fock;
pub mod eigen;
pub mod error;
pub mod field_theory;
pub mod fluctuations;
pub mod gaussian_measure;
pub mod holonomy;
pub mod lie;
pub mod numfmt;
pub mod operator;
pub mod quadrature;
pub mod spectral_basis;

pub use bott_dirac::{FockSpec, GroundState, SquareRoute, StateIndex};
pub use clifford_fock::FermionSpace;
pub use eigen::{Eigenpair, SolverOptions, Spectrum};
pub use error::{Error, Result};
pub use field_theory::{FieldLabel, FieldOperator};
pub use fluctuations::{FluctuationSpec, ThetaRecipe};
pub use gaussian_measure::{Estimate, QuadratureSpec, TestFunction};
pub use holonomy::{Connection, FlowSpec, GaugeField, TrigPolynomial, VectorField};
pub use lie::{GaugeGroup, LieStructure};
pub use operator::{OperatorMatrix, Symmetry, C64};
pub use spectral_basis::{
    FieldConfig, Mode, ModeBasis, SobolevParams, TorusGeometry, Verdict, WeightRule,
};
