//! Sheaves of Hochschild complexes on finite ringed spaces.
//!
//! A finite T0 space with a presheaf of finite-dimensional algebras on a basis
//! of opens stands in for a scheme. On top of it the crate builds:
//!
//! * the Hochschild cochain complex of the basis category ([`hochschild`]),
//! * good families of bases and the colimit complexes over them ([`space`], [`colimit`]),
//! * finite-space sheaf machinery and acyclicity checks ([`sheaftools`]),
//! * the local-to-global spectral sequence of the resulting sheaf of complexes ([`spectral`]).
//!
//! All arithmetic is exact, over ℚ or a prime field ([`linalg`]).

pub mod colimit;
pub mod hochschild;
pub mod linalg;
pub mod model;
pub mod ringed;
pub mod sheaftools;
pub mod space;
pub mod spectral;
