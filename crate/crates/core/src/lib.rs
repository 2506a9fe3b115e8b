//! Homogenized micromagnetic energy of thin films with rough, periodic
//! upper and lower surfaces.
//!
//! The numerical modules are generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix them to `f64`, which is what the CLI uses.

pub mod anisotropy;
pub mod cell_solver;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod gamma_validator;
pub mod linalg;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result};

pub type Mat3 = linalg::Mat3<f64>;
pub type Profile = profiles::Profile<f64>;
pub type ProfileKind = profiles::ProfileKind<f64>;
pub type SampledGrid = profiles::SampledGrid<f64>;
pub type Rect = profiles::Rect<f64>;
pub type FilmGeometry = profiles::FilmGeometry<f64>;
pub type PlaneRule = quadrature::PlaneRule<f64>;
pub type AnisotropyTensor = anisotropy::AnisotropyTensor<f64>;
pub type EasyAxis = anisotropy::EasyAxis<f64>;
pub type MeshParams = cell_solver::MeshParams;
pub type CellMesh = cell_solver::CellMesh<f64>;
pub type CellSolution = cell_solver::CellSolution<f64>;
pub type ExchangeTensor = cell_solver::ExchangeTensor<f64>;
pub type EpsSweep = gamma_validator::EpsSweep;
pub type EnergyParams = energy::EnergyParams<f64>;
pub type MagnetizationField = energy::MagnetizationField<f64>;
