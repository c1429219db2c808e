//! System boundary initialization blocks: six scenarios times
//! forward/backward modes, with optional input/output normalization.
//!
//! The blocks close the plant's initialization problem by prescribing which
//! steady state to compute, without touching the physical model: forward
//! blocks fix the inputs, backward blocks fix the outputs and let the inputs
//! be computed through the plant equations. All scenarios contribute the
//! same number of initial equations, so the problem stays balanced and its
//! lambda = 0 structure is identical across scenarios.

use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

use crate::eqsys::{
    blend_lazy, EqShape, FreezeRule, Model, Phase, VarId, VarRole, VariableDescriptor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SteadyStateOnDesign,
    SteadyStateOffDesign,
    SmallSignalOnDesign,
    SmallSignalOffDesign,
    SimulationOnDesign,
    SimulationOffDesign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioFamily {
    SteadyState,
    SmallSignal,
    Simulation,
}

impl Scenario {
    pub fn family(self) -> ScenarioFamily {
        match self {
            Scenario::SteadyStateOnDesign | Scenario::SteadyStateOffDesign => {
                ScenarioFamily::SteadyState
            }
            Scenario::SmallSignalOnDesign | Scenario::SmallSignalOffDesign => {
                ScenarioFamily::SmallSignal
            }
            Scenario::SimulationOnDesign | Scenario::SimulationOffDesign => {
                ScenarioFamily::Simulation
            }
        }
    }

    pub fn on_design(self) -> bool {
        matches!(
            self,
            Scenario::SteadyStateOnDesign
                | Scenario::SmallSignalOnDesign
                | Scenario::SimulationOnDesign
        )
    }

    pub const ALL: [Scenario; 6] = [
        Scenario::SteadyStateOnDesign,
        Scenario::SteadyStateOffDesign,
        Scenario::SmallSignalOnDesign,
        Scenario::SmallSignalOffDesign,
        Scenario::SimulationOnDesign,
        Scenario::SimulationOffDesign,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BoundaryMode {
    Fwd,
    Bwd,
}

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("backward input block `{0}` has no paired backward output block")]
    UnpairedBackwardInput(String),
    #[error("backward output block `{0}` is not paired by any backward input block")]
    UnpairedBackwardOutput(String),
    #[error("backward input `{input}` pairs `{output}`, which is {reason}")]
    BadPairing {
        input: String,
        output: String,
        reason: String,
    },
    #[error("warm start has no overlap with the problem's unknowns")]
    EmptyWarmStartOverlap,
    #[error("warm start mapping mismatch; unknowns without a source value: [{0}]")]
    WarmStartOrphans(String),
    #[error("normalization factor of `{0}` must be positive")]
    BadNorm(String),
}

/// Input boundary block settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputBlockSpec {
    pub name: String,
    /// A-priori known on-design value of u_out.
    pub u_des: f64,
    /// De-normalization factor for u_in.
    pub u_norm: f64,
    pub mode: BoundaryMode,
    /// Name of the paired output block (required in BWD mode).
    pub pair: Option<String>,
    /// Apply the normalized-deviation transform in Simulation scenarios.
    pub normalize: bool,
}

/// Output boundary block settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputBlockSpec {
    pub name: String,
    /// Desired on-design value of y_in.
    pub y_des: f64,
    /// Desired off-design value of y_in.
    pub y_offdes: f64,
    pub y_norm: f64,
    pub mode: BoundaryMode,
    pub normalize: bool,
}

/// Variables created for one input block.
#[derive(Debug, Clone)]
pub struct InputBlockVars {
    pub u_in: VarId,
    pub u_out: VarId,
    pub u_des_calc: VarId,
    pub u_offdes_calc: VarId,
}

/// Variables created for one output block.
#[derive(Debug, Clone)]
pub struct OutputBlockVars {
    pub y_in: VarId,
    pub y_out: VarId,
    pub y_des_calc: VarId,
    pub y_offdes_calc: VarId,
}

/// Emits the equations and initial equations of an input block for the given
/// scenario, wiring u_out to the plant actuator variable.
pub fn emit_input_block(
    m: &mut Model,
    spec: &InputBlockSpec,
    scenario: Scenario,
    actuator: VarId,
) -> Result<InputBlockVars, BoundaryError> {
    if spec.u_norm <= 0.0 {
        return Err(BoundaryError::BadNorm(spec.name.clone()));
    }
    let name = &spec.name;
    let nominal = spec.u_des.abs().max(spec.u_norm);
    let mk = |m: &mut Model, tag: &str, role: VarRole, start: f64| {
        m.add_var(
            VariableDescriptor::new(format!("{name}.{tag}"), nominal, start).role(role),
        )
    };
    let u_in = mk(m, "u_in", VarRole::FixedParameter, 0.0);
    let u_out = mk(m, "u_out", VarRole::Algebraic, spec.u_des);
    let u_des_calc = mk(m, "u_des_calc", VarRole::UnknownParameter, spec.u_des);
    let u_offdes_calc = mk(m, "u_offdes_calc", VarRole::UnknownParameter, spec.u_des);
    m.eq_alias(format!("{name}.actuator"), actuator, u_out, Phase::Both);

    // calculated value driving u_out in this scenario
    let u_calc = if scenario.on_design() { u_des_calc } else { u_offdes_calc };

    match scenario.family() {
        ScenarioFamily::SteadyState => {
            m.eq_alias(format!("{name}.eq"), u_out, u_calc, Phase::Both);
        }
        ScenarioFamily::SmallSignal => {
            // u_in = (u_out - u_calc) / u_norm
            m.eq_linear(
                format!("{name}.eq"),
                vec![
                    (u_in, 1.0),
                    (u_out, -1.0 / spec.u_norm),
                    (u_calc, 1.0 / spec.u_norm),
                ],
                0.0,
                Phase::Both,
            );
        }
        ScenarioFamily::Simulation => {
            // u_out = if initial() then u_calc else f(u_in)
            m.eq_alias(format!("{name}.eq_init"), u_out, u_calc, Phase::InitialOnly);
            if spec.normalize {
                m.eq_linear(
                    format!("{name}.eq_sim"),
                    vec![
                        (u_in, 1.0),
                        (u_out, -1.0 / spec.u_norm),
                        (u_calc, 1.0 / spec.u_norm),
                    ],
                    0.0,
                    Phase::SimulationOnly,
                );
                m.sim_input_freeze.push((
                    u_in,
                    FreezeRule::NormalizedDeviation {
                        out: u_out,
                        calc: u_calc,
                        norm: spec.u_norm,
                    },
                ));
            } else {
                m.eq_alias(format!("{name}.eq_sim"), u_out, u_in, Phase::SimulationOnly);
                m.sim_input_freeze.push((u_in, FreezeRule::Copy { source: u_out }));
            }
        }
    }

    // initial equations per Table 1 (shared by all three families)
    match (spec.mode, scenario.on_design()) {
        (BoundaryMode::Fwd, _) => {
            m.eq_fix(format!("{name}.init_des"), u_des_calc, spec.u_des, Phase::InitialOnly);
            m.eq_fix(
                format!("{name}.init_offdes"),
                u_offdes_calc,
                spec.u_des,
                Phase::InitialOnly,
            );
        }
        (BoundaryMode::Bwd, true) => {
            m.eq_fix(
                format!("{name}.init_offdes"),
                u_offdes_calc,
                spec.u_des,
                Phase::InitialOnly,
            );
        }
        (BoundaryMode::Bwd, false) => {
            m.eq_fix(format!("{name}.init_des"), u_des_calc, spec.u_des, Phase::InitialOnly);
        }
    }

    Ok(InputBlockVars {
        u_in,
        u_out,
        u_des_calc,
        u_offdes_calc,
    })
}

/// Emits the equations and initial equations of an output block for the
/// given scenario, wiring y_in to the plant sensor variable.
pub fn emit_output_block(
    m: &mut Model,
    spec: &OutputBlockSpec,
    scenario: Scenario,
    sensor: VarId,
) -> Result<OutputBlockVars, BoundaryError> {
    if spec.y_norm <= 0.0 {
        return Err(BoundaryError::BadNorm(spec.name.clone()));
    }
    let name = &spec.name;
    let nominal = spec.y_des.abs().max(spec.y_norm);
    let mk = |m: &mut Model, tag: &str, role: VarRole, start: f64| {
        m.add_var(
            VariableDescriptor::new(format!("{name}.{tag}"), nominal, start).role(role),
        )
    };
    let y_in = mk(m, "y_in", VarRole::Algebraic, spec.y_des);
    let y_out = mk(m, "y_out", VarRole::Algebraic, 0.0);
    let y_des_calc = mk(m, "y_des_calc", VarRole::UnknownParameter, spec.y_des);
    let y_offdes_calc = mk(m, "y_offdes_calc", VarRole::UnknownParameter, spec.y_offdes);
    m.eq_alias(format!("{name}.sensor"), y_in, sensor, Phase::Both);

    let y_calc = if scenario.on_design() { y_des_calc } else { y_offdes_calc };
    let normalized = matches!(scenario.family(), ScenarioFamily::SmallSignal)
        || (matches!(scenario.family(), ScenarioFamily::Simulation) && spec.normalize);
    if normalized {
        // y_out = (y_in - y_calc) / y_norm
        m.eq_linear(
            format!("{name}.eq"),
            vec![
                (y_out, 1.0),
                (y_in, -1.0 / spec.y_norm),
                (y_calc, 1.0 / spec.y_norm),
            ],
            0.0,
            Phase::Both,
        );
    } else {
        m.eq_alias(format!("{name}.eq"), y_out, y_in, Phase::Both);
    }

    match (spec.mode, scenario.on_design()) {
        (BoundaryMode::Fwd, _) => {
            m.eq_fix(format!("{name}.init_des"), y_des_calc, spec.y_des, Phase::InitialOnly);
            m.eq_fix(
                format!("{name}.init_offdes"),
                y_offdes_calc,
                spec.y_des,
                Phase::InitialOnly,
            );
        }
        (BoundaryMode::Bwd, true) => {
            m.eq_fix(format!("{name}.init_pin"), y_in, spec.y_des, Phase::InitialOnly);
            m.eq_fix(format!("{name}.init_des"), y_des_calc, spec.y_des, Phase::InitialOnly);
            m.eq_fix(
                format!("{name}.init_offdes"),
                y_offdes_calc,
                spec.y_des,
                Phase::InitialOnly,
            );
        }
        (BoundaryMode::Bwd, false) => {
            // y_in = homotopy(y_offdes, y_des): the imposed output moves
            // gradually from the on-design to the off-design value
            let (y_des, y_offdes) = (spec.y_des, spec.y_offdes);
            let yv = y_in;
            m.add_eq(crate::components::common::blended_equation(
                format!("{name}.init_pin"),
                Arc::new(move |ws, lam| {
                    ws[yv.0] - blend_lazy(lam, || y_offdes, || y_des)
                }),
                vec![y_in],
                vec![y_in],
                EqShape::Linear {
                    terms: vec![(y_in, 1.0)],
                    rhs: y_des,
                },
                nominal,
                Phase::InitialOnly,
            ));
            m.eq_fix(format!("{name}.init_des"), y_des_calc, spec.y_des, Phase::InitialOnly);
            m.eq_fix(
                format!("{name}.init_offdes"),
                y_offdes_calc,
                spec.y_offdes,
                Phase::InitialOnly,
            );
        }
    }

    Ok(OutputBlockVars {
        y_in,
        y_out,
        y_des_calc,
        y_offdes_calc,
    })
}

/// Balance diagnostics for a block set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceReport {
    pub initial_equations_inputs: usize,
    pub initial_equations_outputs: usize,
    pub forward_pairs: usize,
    pub backward_pairs: usize,
}

impl BalanceReport {
    pub fn total_initial_equations(&self) -> usize {
        self.initial_equations_inputs + self.initial_equations_outputs
    }
}

/// Checks the forward/backward pairing and tallies the initial equations the
/// block set contributes; the count is scenario-independent by construction
/// of Tables 1-3, which keeps the initialization problem balanced.
pub fn validate_balance(
    inputs: &[InputBlockSpec],
    outputs: &[OutputBlockSpec],
    _scenario: Scenario,
) -> Result<BalanceReport, BoundaryError> {
    let mut paired_outputs: Vec<&str> = Vec::new();
    let mut backward_pairs = 0;
    for input in inputs {
        match input.mode {
            BoundaryMode::Fwd => {}
            BoundaryMode::Bwd => {
                let Some(pair) = &input.pair else {
                    return Err(BoundaryError::UnpairedBackwardInput(input.name.clone()));
                };
                let Some(out) = outputs.iter().find(|o| &o.name == pair) else {
                    return Err(BoundaryError::BadPairing {
                        input: input.name.clone(),
                        output: pair.clone(),
                        reason: "not a declared output block".into(),
                    });
                };
                if out.mode != BoundaryMode::Bwd {
                    return Err(BoundaryError::BadPairing {
                        input: input.name.clone(),
                        output: pair.clone(),
                        reason: "not in BWD mode".into(),
                    });
                }
                if paired_outputs.contains(&pair.as_str()) {
                    return Err(BoundaryError::BadPairing {
                        input: input.name.clone(),
                        output: pair.clone(),
                        reason: "already paired by another backward input".into(),
                    });
                }
                paired_outputs.push(pair);
                backward_pairs += 1;
            }
        }
    }
    for output in outputs {
        if output.mode == BoundaryMode::Bwd && !paired_outputs.contains(&output.name.as_str()) {
            return Err(BoundaryError::UnpairedBackwardOutput(output.name.clone()));
        }
    }
    let initial_equations_inputs: usize = inputs
        .iter()
        .map(|i| match i.mode {
            BoundaryMode::Fwd => 2,
            BoundaryMode::Bwd => 1,
        })
        .sum();
    let initial_equations_outputs: usize = outputs
        .iter()
        .map(|o| match o.mode {
            BoundaryMode::Fwd => 2,
            BoundaryMode::Bwd => 3,
        })
        .sum();
    Ok(BalanceReport {
        initial_equations_inputs,
        initial_equations_outputs,
        forward_pairs: inputs.len().saturating_sub(backward_pairs),
        backward_pairs,
    })
}

/// Copies every matching unknown's converged value from a forward solution
/// into the model's start values, keyed by variable name.
pub fn warm_start_backward(
    model: &mut Model,
    forward: &std::collections::BTreeMap<String, f64>,
) -> Result<usize, BoundaryError> {
    let mut applied = 0;
    let mut orphans: Vec<String> = Vec::new();
    for v in model.variables.iter_mut() {
        if v.role == VarRole::FixedParameter {
            continue;
        }
        match forward.get(&v.name) {
            Some(&value) => {
                v.start = value.clamp(v.min, v.max);
                applied += 1;
            }
            None => orphans.push(v.name.clone()),
        }
    }
    if applied == 0 {
        return Err(BoundaryError::EmptyWarmStartOverlap);
    }
    if !orphans.is_empty() {
        return Err(BoundaryError::WarmStartOrphans(orphans.join(", ")));
    }
    Ok(applied)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(name: &str, mode: BoundaryMode, pair: Option<&str>) -> InputBlockSpec {
        InputBlockSpec {
            name: name.into(),
            u_des: 1.0,
            u_norm: 1.0,
            mode,
            pair: pair.map(String::from),
            normalize: false,
        }
    }

    fn output(name: &str, mode: BoundaryMode) -> OutputBlockSpec {
        OutputBlockSpec {
            name: name.into(),
            y_des: 10.0,
            y_offdes: 8.0,
            y_norm: 1.0,
            mode,
            normalize: false,
        }
    }

    /// Direct tally of Table 1: two forward pairs contribute 4 initial
    /// equations from the input blocks and 4 from the output blocks, in
    /// every scenario.
    #[test]
    fn forward_pair_tally_consistent_across_scenarios() {
        let inputs = vec![input("u1", BoundaryMode::Fwd, None), input("u2", BoundaryMode::Fwd, None)];
        let outputs = vec![output("y1", BoundaryMode::Fwd), output("y2", BoundaryMode::Fwd)];
        let mut counts = Vec::new();
        for scenario in Scenario::ALL {
            let rep = validate_balance(&inputs, &outputs, scenario).unwrap();
            assert_eq!(rep.initial_equations_inputs, 4);
            assert_eq!(rep.initial_equations_outputs, 4);
            counts.push(rep.total_initial_equations());
        }
        assert!(counts.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn unpaired_backward_input_is_error() {
        let inputs = vec![input("u1", BoundaryMode::Bwd, None)];
        let outputs = vec![output("y1", BoundaryMode::Bwd)];
        match validate_balance(&inputs, &outputs, Scenario::SteadyStateOnDesign) {
            Err(BoundaryError::UnpairedBackwardInput(n)) => assert_eq!(n, "u1"),
            other => panic!("expected unpaired error, got {other:?}"),
        }
    }

    #[test]
    fn backward_output_without_pairing_input_is_error() {
        let inputs = vec![input("u1", BoundaryMode::Fwd, None)];
        let outputs = vec![output("y1", BoundaryMode::Bwd)];
        assert!(matches!(
            validate_balance(&inputs, &outputs, Scenario::SteadyStateOnDesign),
            Err(BoundaryError::UnpairedBackwardOutput(_))
        ));
    }

    #[test]
    fn all_forward_means_all_inputs_fixed() {
        // N inputs, N outputs, N_f = N: every u fixed, every y computed
        let inputs: Vec<_> = (0..3)
            .map(|i| input(&format!("u{i}"), BoundaryMode::Fwd, None))
            .collect();
        let outputs: Vec<_> = (0..3)
            .map(|i| output(&format!("y{i}"), BoundaryMode::Fwd))
            .collect();
        let rep = validate_balance(&inputs, &outputs, Scenario::SteadyStateOnDesign).unwrap();
        assert_eq!(rep.forward_pairs, 3);
        assert_eq!(rep.backward_pairs, 0);
        assert_eq!(rep.total_initial_equations(), 12);
    }

    #[test]
    fn warm_start_empty_overlap_is_error() {
        let mut m = Model::new();
        m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        let map = std::collections::BTreeMap::from([("other".to_string(), 1.0)]);
        assert!(matches!(
            warm_start_backward(&mut m, &map),
            Err(BoundaryError::EmptyWarmStartOverlap)
        ));
    }

    #[test]
    fn warm_start_copies_matching_values() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        let y = m.add_var(VariableDescriptor::new("y", 1.0, 0.0));
        let map = std::collections::BTreeMap::from([
            ("x".to_string(), 3.5),
            ("y".to_string(), -2.0),
        ]);
        let n = warm_start_backward(&mut m, &map).unwrap();
        assert_eq!(n, 2);
        assert_eq!(m.variables[x.0].start, 3.5);
        assert_eq!(m.variables[y.0].start, -2.0);
    }
}
