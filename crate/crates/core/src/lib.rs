//! Lattice laboratory for SU(2) Donaldson-Thomas instantons on a flat
//! Kähler 3-torus.

pub mod algebra;
pub mod concentration;
pub mod config;
pub mod energy;
pub mod error;
pub mod field;
pub mod lattice;
pub mod ops;
pub mod par;
pub mod regularity;
pub mod snapshot;
pub mod solver;
pub mod synth;

pub use algebra::Mat2;
pub use error::{Error, Result};
pub use field::{apply_gauge, ConnectionField, FieldState, GaugeTransform, HiggsField};
pub use lattice::{Ball, Lattice, LatticeSpec};
pub use energy::{density, energy, energy_gradient, DensityField, EnergyBreakdown, Power};
pub use solver::{coulomb_fix, minimize, FlowConfig, FlowStatus, FlowTrace};
