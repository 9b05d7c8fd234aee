//! Unsupervised domain adaptation by discriminative, geometry-aware subspace
//! learning.
//!
//! The crate provides the building blocks and the iterative driver for five
//! related methods: TCA (marginal alignment), JDA (marginal + conditional),
//! CDDA (adds a repulsive force between differently-labeled sub-domains),
//! GA-DA (JDA with graph-based label inference) and DGA-DA (both).
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the element type to `f64`.

pub mod data;
pub mod engine;
mod error;
pub mod graph;
pub mod mmd;
mod scalar;
pub mod subspace;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use data::{DomainDataset, JointData, Role, SubdomainIndex};
pub use engine::{AdaptationConfig, AdaptationResult, Method};
pub use graph::{AffinityGraph, LabelMatrix, SigmaRule};
pub use mmd::{CompositeMode, MmdKind, MmdMatrix};
pub use subspace::{KernelSpec, ProjectionResult};

/// Dense `f64` matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Dataset = DomainDataset<f64>;
pub type Dataset32 = DomainDataset<f32>;
pub type Joint = JointData<f64>;
pub type Mmd = MmdMatrix<f64>;
pub type Graph = AffinityGraph<f64>;
pub type Labels = LabelMatrix<f64>;
pub type Projection = ProjectionResult<f64>;
pub type Adaptation = AdaptationResult<f64>;
pub type Adaptation32 = AdaptationResult<f32>;
