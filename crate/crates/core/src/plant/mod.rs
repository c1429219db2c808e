//! Component graph, directed fluid connections, boundary-block assignment,
//! and flattening to the equation model.

pub mod demo;
pub mod design;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{
    emit_input_block, emit_output_block, validate_balance, BalanceReport, BoundaryError,
    InputBlockSpec, InputBlockVars, OutputBlockSpec, OutputBlockVars, Scenario,
};
use crate::components::{
    connect, CombustorParams, ComponentIo, CompressorParams, CondenserParams, DecouplerParams,
    FuelCellParams, HxParams, IntercoolerParams, PressureLossParams, SinkParams, SourceParams,
    TurbineParams,
};
use crate::eqsys::{Model, Phase, VarRole};
use crate::media::SpeciesTable;

/// One component instance in the plant graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ComponentSpec {
    Source(SourceParams),
    Sink(SinkParams),
    Compressor(CompressorParams),
    Intercooler(IntercoolerParams),
    Condenser(CondenserParams),
    PressureLoss(PressureLossParams),
    HeatExchanger(Box<HxParams>),
    FuelCell(Box<FuelCellParams>),
    Combustor(CombustorParams),
    Decoupler(DecouplerParams),
    Turbine(TurbineParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedComponent {
    pub name: String,
    #[serde(flatten)]
    pub spec: ComponentSpec,
}

/// Directed connection `from` (an outlet, "component.port") to `to`
/// (an inlet).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Connection {
    pub from: String,
    pub to: String,
}

/// Input boundary block plus the actuator signal it drives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputBinding {
    #[serde(flatten)]
    pub block: InputBlockSpec,
    /// "component.signal" the block output drives.
    pub actuator: String,
}

/// Output boundary block plus the sensor signal it reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputBinding {
    #[serde(flatten)]
    pub block: OutputBlockSpec,
    /// "component.signal" the block input senses.
    pub sensor: String,
    /// The off-design value scales with the `--load` factor.
    #[serde(default)]
    pub scale_with_load: bool,
}

/// The plant: components, connections, and boundary-block assignments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantGraph {
    pub species: SpeciesTable,
    pub components: Vec<NamedComponent>,
    pub connections: Vec<Connection>,
    pub inputs: Vec<InputBinding>,
    pub outputs: Vec<OutputBinding>,
}

#[derive(Debug, Error)]
pub enum FlattenError {
    #[error("unknown component `{0}` in `{1}`")]
    UnknownComponent(String, String),
    #[error("component `{component}` has no {kind} port `{port}`")]
    UnknownPort {
        component: String,
        kind: &'static str,
        port: String,
    },
    #[error("component `{component}` has no signal `{signal}`")]
    UnknownSignal { component: String, signal: String },
    #[error("port `{0}` is connected more than once")]
    DuplicateConnection(String),
    #[error("dangling port `{0}`: every port must be connected exactly once")]
    DanglingPort(String),
    #[error("{phase} problem is not square: {equations} equations vs {unknowns} unknowns")]
    NonSquare {
        phase: &'static str,
        equations: usize,
        unknowns: usize,
    },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("malformed reference `{0}`, expected \"component.port\"")]
    BadReference(String),
}

/// The flattened plant: the equation model plus the variable maps needed to
/// interrogate it.
pub struct FlattenedPlant {
    pub model: Arc<Model>,
    pub scenario: Scenario,
    pub table: Arc<SpeciesTable>,
    pub io: BTreeMap<String, ComponentIo>,
    pub input_vars: BTreeMap<String, InputBlockVars>,
    pub output_vars: BTreeMap<String, OutputBlockVars>,
    pub balance: BalanceReport,
}

fn split_ref(s: &str) -> Result<(&str, &str), FlattenError> {
    s.split_once('.')
        .ok_or_else(|| FlattenError::BadReference(s.to_string()))
}

impl ComponentSpec {
    fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        match self {
            ComponentSpec::Source(p) => p.contribute(m, name, table),
            ComponentSpec::Sink(p) => p.contribute(m, name, table),
            ComponentSpec::Compressor(p) => p.contribute(m, name, table),
            ComponentSpec::Intercooler(p) => p.contribute(m, name, table),
            ComponentSpec::Condenser(p) => p.contribute(m, name, table),
            ComponentSpec::PressureLoss(p) => p.contribute(m, name, table),
            ComponentSpec::HeatExchanger(p) => p.contribute(m, name, table),
            ComponentSpec::FuelCell(p) => p.contribute(m, name, table),
            ComponentSpec::Combustor(p) => p.contribute(m, name, table),
            ComponentSpec::Decoupler(p) => p.contribute(m, name, table),
            ComponentSpec::Turbine(p) => p.contribute(m, name, table),
        }
    }
}

/// Flattens the plant for one scenario: concatenates all component
/// contributions, the connection equations, and the boundary blocks, then
/// verifies squareness in both phases.
pub fn flatten(plant: &PlantGraph, scenario: Scenario) -> Result<FlattenedPlant, FlattenError> {
    let table = Arc::new(plant.species.clone());
    let mut model = Model::new();
    let mut io: BTreeMap<String, ComponentIo> = BTreeMap::new();

    for comp in &plant.components {
        let built = comp.spec.contribute(&mut model, &comp.name, &table);
        io.insert(comp.name.clone(), built);
    }

    // connection equations with single-use bookkeeping
    let mut used_outlets: Vec<String> = Vec::new();
    let mut used_inlets: Vec<String> = Vec::new();
    for conn in &plant.connections {
        let (from_comp, from_port) = split_ref(&conn.from)?;
        let (to_comp, to_port) = split_ref(&conn.to)?;
        let from_io = io
            .get(from_comp)
            .ok_or_else(|| FlattenError::UnknownComponent(from_comp.into(), conn.from.clone()))?;
        let from = from_io
            .outlets
            .get(from_port)
            .ok_or_else(|| FlattenError::UnknownPort {
                component: from_comp.into(),
                kind: "outlet",
                port: from_port.into(),
            })?
            .clone();
        let to_io = io
            .get(to_comp)
            .ok_or_else(|| FlattenError::UnknownComponent(to_comp.into(), conn.to.clone()))?;
        let to = to_io
            .inlets
            .get(to_port)
            .ok_or_else(|| FlattenError::UnknownPort {
                component: to_comp.into(),
                kind: "inlet",
                port: to_port.into(),
            })?
            .clone();
        if used_outlets.contains(&conn.from) {
            return Err(FlattenError::DuplicateConnection(conn.from.clone()));
        }
        if used_inlets.contains(&conn.to) {
            return Err(FlattenError::DuplicateConnection(conn.to.clone()));
        }
        used_outlets.push(conn.from.clone());
        used_inlets.push(conn.to.clone());
        connect(
            &mut model,
            &format!("{}->{}", conn.from, conn.to),
            &from,
            &to,
        );
    }
    for (comp, built) in &io {
        for port in built.outlets.keys() {
            let full = format!("{comp}.{port}");
            if !used_outlets.contains(&full) {
                return Err(FlattenError::DanglingPort(full));
            }
        }
        for port in built.inlets.keys() {
            let full = format!("{comp}.{port}");
            if !used_inlets.contains(&full) {
                return Err(FlattenError::DanglingPort(full));
            }
        }
    }

    // boundary blocks
    let input_specs: Vec<InputBlockSpec> = plant.inputs.iter().map(|b| b.block.clone()).collect();
    let output_specs: Vec<OutputBlockSpec> =
        plant.outputs.iter().map(|b| b.block.clone()).collect();
    let balance = validate_balance(&input_specs, &output_specs, scenario)?;
    let resolve_signal = |io: &BTreeMap<String, ComponentIo>, s: &str| {
        let (comp, sig) = split_ref(s)?;
        let built = io
            .get(comp)
            .ok_or_else(|| FlattenError::UnknownComponent(comp.into(), s.to_string()))?;
        built
            .signals
            .get(sig)
            .copied()
            .ok_or_else(|| FlattenError::UnknownSignal {
                component: comp.into(),
                signal: sig.into(),
            })
    };
    let mut input_vars = BTreeMap::new();
    for binding in &plant.inputs {
        let actuator = resolve_signal(&io, &binding.actuator)?;
        let vars = emit_input_block(&mut model, &binding.block, scenario, actuator)?;
        input_vars.insert(binding.block.name.clone(), vars);
    }
    let mut output_vars = BTreeMap::new();
    for binding in &plant.outputs {
        let sensor = resolve_signal(&io, &binding.sensor)?;
        let vars = emit_output_block(&mut model, &binding.block, scenario, sensor)?;
        output_vars.insert(binding.block.name.clone(), vars);
    }

    // squareness per phase
    let unknowns = model
        .variables
        .iter()
        .filter(|v| v.role != VarRole::FixedParameter)
        .count();
    let init_eqs = model
        .equations
        .iter()
        .filter(|e| e.phase != Phase::SimulationOnly)
        .count();
    if init_eqs != unknowns {
        return Err(FlattenError::NonSquare {
            phase: "initialization",
            equations: init_eqs,
            unknowns,
        });
    }
    let sim_unknowns = model
        .variables
        .iter()
        .filter(|v| v.role != VarRole::FixedParameter && v.role != VarRole::UnknownParameter)
        .count();
    let sim_eqs = model
        .equations
        .iter()
        .filter(|e| e.phase != Phase::InitialOnly)
        .count()
        + model.states.len();
    if sim_eqs != sim_unknowns {
        return Err(FlattenError::NonSquare {
            phase: "simulation",
            equations: sim_eqs,
            unknowns: sim_unknowns,
        });
    }

    Ok(FlattenedPlant {
        model: Arc::new(model),
        scenario,
        table,
        io,
        input_vars,
        output_vars,
        balance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{PressureLossLaw, SourceFlow, StreamDesign};

    /// Single-species chain source -> pressure loss -> sink: the two
    /// connections contribute 2 x 4 = 8 equations (p, w, h, X each).
    #[test]
    fn chain_connection_equation_count() {
        let species = SpeciesTable {
            species: vec![crate::media::SpeciesTable::default_set().species[4].clone()],
        };
        let design = StreamDesign {
            p: 2e5,
            t: 400.0,
            w: 1.0,
            x: vec![1.0],
        };
        let plant = PlantGraph {
            species,
            components: vec![
                NamedComponent {
                    name: "src".into(),
                    spec: ComponentSpec::Source(SourceParams {
                        flow: SourceFlow::Fixed(1.0),
                        design: design.clone(),
                    }),
                },
                NamedComponent {
                    name: "loss".into(),
                    spec: ComponentSpec::PressureLoss(PressureLossParams {
                        dp_nom: 1e4,
                        w_nom: 1.0,
                        rho_nom: 2.0,
                        law: PressureLossLaw::QuadraticWithHomotopy,
                        design_in: design.clone(),
                    }),
                },
                NamedComponent {
                    name: "sink".into(),
                    spec: ComponentSpec::Sink(SinkParams {
                        p: 1.9e5,
                        design,
                    }),
                },
            ],
            connections: vec![
                Connection {
                    from: "src.out".into(),
                    to: "loss.in".into(),
                },
                Connection {
                    from: "loss.out".into(),
                    to: "sink.in".into(),
                },
            ],
            inputs: vec![],
            outputs: vec![],
        };
        let flat = flatten(&plant, Scenario::SteadyStateOnDesign).unwrap();
        let n_connect = flat
            .model
            .equations
            .iter()
            .filter(|e| e.name.starts_with("connect:"))
            .count();
        assert_eq!(n_connect, 8);
    }

    #[test]
    fn dangling_port_is_reported() {
        let species = SpeciesTable {
            species: vec![crate::media::SpeciesTable::default_set().species[4].clone()],
        };
        let design = StreamDesign {
            p: 2e5,
            t: 400.0,
            w: 1.0,
            x: vec![1.0],
        };
        let plant = PlantGraph {
            species,
            components: vec![NamedComponent {
                name: "src".into(),
                spec: ComponentSpec::Source(SourceParams {
                    flow: SourceFlow::Fixed(1.0),
                    design,
                }),
            }],
            connections: vec![],
            inputs: vec![],
            outputs: vec![],
        };
        match flatten(&plant, Scenario::SteadyStateOnDesign) {
            Err(FlattenError::DanglingPort(p)) => assert_eq!(p, "src.out"),
            other => panic!("expected dangling port, got {:?}", other.err()),
        }
    }
}
