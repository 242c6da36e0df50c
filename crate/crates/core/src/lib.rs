//! Sample-Rotate-Project dynamics for the planar rotator model on a
//! discretized circle: heat-bath samplers, the SRP update, an exact
//! quadrature engine for tiny volumes, Dobrushin certificates and Monte
//! Carlo entropy diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod discretization;
pub mod dobrushin;
pub mod entropy_mc;
pub mod error;
pub mod io;
pub mod lattice;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod rotor_model;
pub mod samplers;
pub mod srp;

pub use discretization::{project, DiscreteConfig};
pub use error::{Error, Result};
pub use lattice::{build_torus, TorusLattice};
pub use rng::StreamRng;
pub use rotor_model::{ContinuousConfig, ModelParams};
pub use samplers::{SamplerSettings, Schedule};
