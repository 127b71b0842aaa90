//! Desk-scale groups, their convolution algebras and unitary representations,
//! presented as multi-sorted metric structures.

pub mod algebra;
pub mod error;
pub mod group;
pub mod kazhdan;
pub mod linalg;
pub mod optimize;
pub mod representation;
pub mod structure;
pub mod ultraproduct;

pub use algebra::{approx_identity, AlgebraElement};
pub use error::{Error, Result};
pub use group::{Element, Group, GroupKind};
pub use linalg::{CMatrix, CVector, C64};
pub use representation::UnitaryRep;
pub use structure::MetricStructure;
