//! Component library: each component contributes variables, simulation
//! equations, initial equations, and homotopy simplifications to the flat
//! system.

pub mod combustor;
pub mod common;
pub mod compressor;
pub mod condenser;
pub mod decoupler;
pub mod fuel_cell;
pub mod heat_exchanger;
pub mod intercooler;
pub mod pressure_loss;
pub mod source_sink;
pub mod turbine;

pub use combustor::CombustorParams;
pub use common::{connect, fluid_port, ComponentIo, PortVars, StreamDesign};
pub use compressor::CompressorParams;
pub use condenser::{condenser_split, CondenserParams, CondenserSplit};
pub use decoupler::DecouplerParams;
pub use fuel_cell::{
    activation_loss_explicit, activation_loss_linearized, butler_volmer_residual, FuelCellParams,
};
pub use heat_exchanger::{heat_transfer_coefficient, HxParams};
pub use intercooler::IntercoolerParams;
pub use pressure_loss::{pressure_loss, PressureLossLaw, PressureLossParams};
pub use source_sink::{SinkParams, SourceFlow, SourceParams};
pub use turbine::{turbine_flow, TurbineParams};
