//! Flat representation of the initialization problem.
//!
//! A [`Model`] is a flat list of variables and residual equations collected
//! from component contributions. Equations carry two incidence sets — one
//! for the simplified system at lambda = 0 and one for lambda > 0 — plus an
//! activity phase, so the same model yields both the initialization problem
//! and the simulation problem used for steady-state verification.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Index of a variable in the model's declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of an equation in the model's declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EqId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VarRole {
    State,
    Algebraic,
    FixedParameter,
    UnknownParameter,
}

/// Physical kind tag, used by the tearing preference ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VarKind {
    Pressure,
    Temperature,
    Composition,
    Current,
    MassFlow,
    Enthalpy,
    Derivative,
    Other,
}

/// An unknown or parameter with scaling, start value, and bounds.
#[derive(Debug, Clone)]
pub struct VariableDescriptor {
    pub name: String,
    /// Scaling magnitude, same unit as the variable. Must be positive.
    pub nominal: f64,
    /// Initial guess; for fixed parameters, the value.
    pub start: f64,
    pub min: f64,
    pub max: f64,
    pub role: VarRole,
    pub kind: VarKind,
    pub unit: String,
}

impl VariableDescriptor {
    pub fn new(name: impl Into<String>, nominal: f64, start: f64) -> Self {
        VariableDescriptor {
            name: name.into(),
            nominal,
            start,
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
            role: VarRole::Algebraic,
            kind: VarKind::Other,
            unit: String::new(),
        }
    }

    pub fn bounds(mut self, min: f64, max: f64) -> Self {
        self.min = min;
        self.max = max;
        self
    }

    pub fn role(mut self, role: VarRole) -> Self {
        self.role = role;
        self
    }

    pub fn kind(mut self, kind: VarKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }
}

/// When an equation is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    InitialOnly,
    SimulationOnly,
    Both,
}

/// Which of the two structural regimes an analysis targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LambdaRegime {
    /// lambda = 0: homotopy pairs collapse to their simplified member.
    Simplified,
    /// lambda in (0, 1]: both members referenced.
    Full,
}

/// Residual evaluator: (full variable workspace, lambda) -> residual.
/// Must be pure and re-entrant.
pub type ResidualFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Scalar expression over the workspace, one side of a homotopy pair.
pub type ExprFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Convex blend of Eq.-(1) form: lambda * actual + (1 - lambda) * simplified.
///
/// Endpoints are exact: at lambda = 0 the actual member is not referenced at
/// all (and vice versa), which also protects against evaluating an expression
/// outside its domain on the far side of the homotopy.
pub fn homotopy_combine(actual: f64, simplified: f64, lambda: f64) -> Result<f64, EqError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(EqError::LambdaOutOfRange(lambda));
    }
    Ok(blend_lazy(lambda, || actual, || simplified))
}

/// Internal blend with lazy evaluation of the two members; `lambda` is
/// assumed to be in [0, 1].
#[inline]
pub fn blend_lazy(lambda: f64, actual: impl FnOnce() -> f64, simplified: impl FnOnce() -> f64) -> f64 {
    if lambda == 0.0 {
        simplified()
    } else if lambda == 1.0 {
        actual()
    } else {
        lambda * actual() + (1.0 - lambda) * simplified()
    }
}

/// A pair of expressions blended by the homotopy operator.
#[derive(Clone)]
pub struct HomotopyPair {
    pub actual: ExprFn,
    pub simplified: ExprFn,
}

impl HomotopyPair {
    pub fn eval(&self, x: &[f64], lambda: f64) -> f64 {
        blend_lazy(lambda, || (self.actual)(x), || (self.simplified)(x))
    }
}

/// Structural form of an equation in one regime, used by the symbolic
/// elimination pass. `General` is always safe.
#[derive(Debug, Clone)]
pub enum EqShape {
    General,
    /// sum(coeff_k * var_k) = rhs with constant coefficients.
    Linear { terms: Vec<(VarId, f64)>, rhs: f64 },
    /// output = sum(c_k(x) * input_k) with state-dependent coefficients and
    /// no constant term; implies output = 0 whenever all inputs are 0.
    DefinesFromInputs { output: VarId, inputs: Vec<VarId> },
}

/// A residual equation with dual incidence and activity phase.
#[derive(Clone)]
pub struct EquationDescriptor {
    pub name: String,
    pub residual: ResidualFn,
    /// Variables referenced when lambda > 0.
    pub incidence_full: Vec<VarId>,
    /// Variables referenced when lambda = 0.
    pub incidence_simplified: Vec<VarId>,
    pub phase: Phase,
    /// Positive scaling magnitude for the residual row.
    pub nominal_residual: f64,
    pub shape_full: EqShape,
    pub shape_simplified: EqShape,
}

impl fmt::Debug for EquationDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquationDescriptor")
            .field("name", &self.name)
            .field("phase", &self.phase)
            .field("incidence_full", &self.incidence_full)
            .field("incidence_simplified", &self.incidence_simplified)
            .finish()
    }
}

impl EquationDescriptor {
    pub fn incidence(&self, regime: LambdaRegime) -> &[VarId] {
        match regime {
            LambdaRegime::Simplified => &self.incidence_simplified,
            LambdaRegime::Full => &self.incidence_full,
        }
    }

    pub fn shape(&self, regime: LambdaRegime) -> &EqShape {
        match regime {
            LambdaRegime::Simplified => &self.shape_simplified,
            LambdaRegime::Full => &self.shape_full,
        }
    }
}

#[derive(Debug, Error)]
pub enum EqError {
    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("non-finite residual in equation `{equation}`")]
    NonFiniteResidual { equation: String },
    #[error(
        "structurally singular problem: {unknowns} unknowns vs {equations} equations ({context})"
    )]
    NonSquare {
        unknowns: usize,
        equations: usize,
        context: String,
    },
    #[error("residual vector length {got}, expected {expected}")]
    BadVectorLength { got: usize, expected: usize },
    #[error("invalid variable `{name}`: {reason}")]
    BadVariable { name: String, reason: String },
}

/// How a Simulation-scenario input connector is frozen at the initialized
/// operating point before time integration.
#[derive(Debug, Clone, Copy)]
pub enum FreezeRule {
    /// u_in := value of `source`.
    Copy { source: VarId },
    /// u_in := (out - calc) / norm, the inverse of the normalized-deviation
    /// input equation.
    NormalizedDeviation { out: VarId, calc: VarId, norm: f64 },
}

impl FreezeRule {
    pub fn value(&self, ws: &[f64]) -> f64 {
        match *self {
            FreezeRule::Copy { source } => ws[source.0],
            FreezeRule::NormalizedDeviation { out, calc, norm } => {
                (ws[out.0] - ws[calc.0]) / norm
            }
        }
    }
}

/// Flattened model: every variable and equation of the plant, both phases.
#[derive(Clone, Default)]
pub struct Model {
    pub variables: Vec<VariableDescriptor>,
    pub equations: Vec<EquationDescriptor>,
    /// (state variable, its derivative variable) pairs, declaration order.
    pub states: Vec<(VarId, VarId)>,
    /// Fixed parameters to re-bind from the solution before simulation
    /// (used by Simulation-scenario input blocks).
    pub sim_input_freeze: Vec<(VarId, FreezeRule)>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn add_var(&mut self, desc: VariableDescriptor) -> VarId {
        assert!(
            desc.nominal > 0.0,
            "variable `{}`: nominal must be positive",
            desc.name
        );
        assert!(
            desc.min <= desc.start && desc.start <= desc.max,
            "variable `{}`: start {} outside bounds [{}, {}]",
            desc.name,
            desc.start,
            desc.min,
            desc.max
        );
        let id = VarId(self.variables.len());
        self.variables.push(desc);
        id
    }

    /// Adds a state variable together with its derivative unknown and the
    /// explicit steady-state initial equation der = 0.
    pub fn add_state(&mut self, desc: VariableDescriptor, der_nominal: f64) -> (VarId, VarId) {
        let der_name = format!("der({})", desc.name);
        let unit = if desc.unit.is_empty() {
            String::new()
        } else {
            format!("{}/s", desc.unit)
        };
        let state = self.add_var(desc.role(VarRole::State));
        let der = self.add_var(
            VariableDescriptor::new(der_name.clone(), der_nominal, 0.0)
                .kind(VarKind::Derivative)
                .unit(unit),
        );
        self.states.push((state, der));
        self.eq_fix(format!("initial:{der_name}=0"), der, 0.0, Phase::InitialOnly);
        (state, der)
    }

    pub fn add_eq(&mut self, eq: EquationDescriptor) -> EqId {
        assert!(
            eq.nominal_residual > 0.0,
            "equation `{}`: nominal_residual must be positive",
            eq.name
        );
        let id = EqId(self.equations.len());
        self.equations.push(eq);
        id
    }

    /// var = value.
    pub fn eq_fix(&mut self, name: impl Into<String>, var: VarId, value: f64, phase: Phase) -> EqId {
        self.eq_linear(name, vec![(var, 1.0)], value, phase)
    }

    /// a = b.
    pub fn eq_alias(&mut self, name: impl Into<String>, a: VarId, b: VarId, phase: Phase) -> EqId {
        self.eq_linear(name, vec![(a, 1.0), (b, -1.0)], 0.0, phase)
    }

    /// sum(coeff * var) = rhs with constant coefficients.
    pub fn eq_linear(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        rhs: f64,
        phase: Phase,
    ) -> EqId {
        let nominal = terms
            .iter()
            .map(|&(v, c)| (c * self.variables[v.0].nominal).abs())
            .fold(rhs.abs(), f64::max)
            .max(1e-12);
        let t = terms.clone();
        let residual: ResidualFn = Arc::new(move |x, _| {
            t.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>() - rhs
        });
        let incidence: Vec<VarId> = terms.iter().map(|&(v, _)| v).collect();
        self.add_eq(EquationDescriptor {
            name: name.into(),
            residual,
            incidence_full: incidence.clone(),
            incidence_simplified: incidence,
            phase,
            nominal_residual: nominal,
            shape_full: EqShape::Linear {
                terms: terms.clone(),
                rhs,
            },
            shape_simplified: EqShape::Linear { terms, rhs },
        })
    }

    /// General equation with identical incidence in both regimes.
    pub fn eq_general(
        &mut self,
        name: impl Into<String>,
        incidence: Vec<VarId>,
        nominal_residual: f64,
        phase: Phase,
        residual: ResidualFn,
    ) -> EqId {
        self.add_eq(EquationDescriptor {
            name: name.into(),
            residual,
            incidence_full: incidence.clone(),
            incidence_simplified: incidence,
            phase,
            nominal_residual,
            shape_full: EqShape::General,
            shape_simplified: EqShape::General,
        })
    }

    /// output = sum(c_k(x) * input_k); `coefficient_vars` are the variables
    /// the state-dependent coefficients read.
    pub fn eq_defines_from_inputs(
        &mut self,
        name: impl Into<String>,
        output: VarId,
        inputs: Vec<VarId>,
        coefficient_vars: Vec<VarId>,
        nominal_residual: f64,
        phase: Phase,
        residual: ResidualFn,
    ) -> EqId {
        let mut incidence = vec![output];
        incidence.extend(&inputs);
        incidence.extend(&coefficient_vars);
        dedup_preserve(&mut incidence);
        let shape = EqShape::DefinesFromInputs {
            output,
            inputs: inputs.clone(),
        };
        self.add_eq(EquationDescriptor {
            name: name.into(),
            residual,
            incidence_full: incidence.clone(),
            incidence_simplified: incidence,
            phase,
            nominal_residual,
            shape_full: shape.clone(),
            shape_simplified: shape,
        })
    }

    /// Initial workspace: every variable at its start value.
    pub fn start_workspace(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.start).collect()
    }

    /// Sets the value of a fixed parameter.
    pub fn set_fixed(&mut self, var: VarId, value: f64) {
        let v = &mut self.variables[var.0];
        debug_assert_eq!(v.role, VarRole::FixedParameter, "`{}` not fixed", v.name);
        v.start = value;
        v.min = f64::NEG_INFINITY;
        v.max = f64::INFINITY;
    }

    pub fn var_id_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }
}

fn dedup_preserve(v: &mut Vec<VarId>) {
    let mut seen = std::collections::HashSet::new();
    v.retain(|id| seen.insert(*id));
}

/// Which phase a problem is assembled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemPhase {
    Initialization,
    Simulation,
}

/// A square problem handed to structural analysis and the solver.
///
/// `unknowns` index into the model's variable table; `known` carries the
/// fixed-parameter bindings placed into the evaluation workspace.
#[derive(Clone)]
pub struct FlatProblem {
    pub model: Arc<Model>,
    pub phase: ProblemPhase,
    pub equations: Vec<EquationDescriptor>,
    pub unknowns: Vec<VarId>,
    pub known: Vec<(VarId, f64)>,
}

impl FlatProblem {
    pub fn n(&self) -> usize {
        self.unknowns.len()
    }

    /// Position of a variable in the unknown vector.
    pub fn unknown_position(&self, var: VarId) -> Option<usize> {
        self.unknowns.iter().position(|&v| v == var)
    }

    /// Builds a full evaluation workspace from an unknown vector.
    pub fn workspace(&self, x: &[f64]) -> Vec<f64> {
        let mut ws = self.model.start_workspace();
        self.fill_workspace(x, &mut ws);
        ws
    }

    pub fn fill_workspace(&self, x: &[f64], ws: &mut [f64]) {
        for (&(v, value), _) in self.known.iter().zip(std::iter::repeat(())) {
            ws[v.0] = value;
        }
        for (pos, &v) in self.unknowns.iter().enumerate() {
            ws[v.0] = x[pos];
        }
    }

    /// Raw residual vector over a full workspace; non-finite values pass
    /// through (the solver treats them as a rejected iterate).
    pub fn residuals_raw(&self, ws: &[f64], lambda: f64) -> Vec<f64> {
        self.equations
            .iter()
            .map(|eq| (eq.residual)(ws, lambda))
            .collect()
    }

    /// Component-wise residuals as a pure function of (x, lambda).
    /// Errors identify the first equation producing a non-finite value.
    pub fn residual_eval(&self, x: &[f64], lambda: f64) -> Result<Vec<f64>, EqError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(EqError::LambdaOutOfRange(lambda));
        }
        if x.len() != self.unknowns.len() {
            return Err(EqError::BadVectorLength {
                got: x.len(),
                expected: self.unknowns.len(),
            });
        }
        let ws = self.workspace(x);
        let r = self.residuals_raw(&ws, lambda);
        for (val, eq) in r.iter().zip(&self.equations) {
            if !val.is_finite() {
                return Err(EqError::NonFiniteResidual {
                    equation: eq.name.clone(),
                });
            }
        }
        Ok(r)
    }

    pub fn start_values(&self) -> Vec<f64> {
        self.unknowns
            .iter()
            .map(|&v| self.model.variables[v.0].start)
            .collect()
    }
}

/// Assembles the square initialization problem: all equations active during
/// initialization, all non-fixed variables as unknowns. Derivative unknowns
/// forced to zero are eliminated later by the structural reduction pass.
pub fn assemble_initialization_problem(model: Arc<Model>) -> Result<FlatProblem, EqError> {
    let equations: Vec<EquationDescriptor> = model
        .equations
        .iter()
        .filter(|e| e.phase != Phase::SimulationOnly)
        .cloned()
        .collect();
    let unknowns: Vec<VarId> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.role != VarRole::FixedParameter)
        .map(|(i, _)| VarId(i))
        .collect();
    let known: Vec<(VarId, f64)> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.role == VarRole::FixedParameter)
        .map(|(i, v)| (VarId(i), v.start))
        .collect();
    if equations.len() != unknowns.len() {
        return Err(EqError::NonSquare {
            unknowns: unknowns.len(),
            equations: equations.len(),
            context: "initialization problem".into(),
        });
    }
    Ok(FlatProblem {
        model,
        phase: ProblemPhase::Initialization,
        equations,
        unknowns,
        known,
    })
}

/// Assembles the simulation-phase problem for one implicit-Euler step:
/// simulation equations plus the discretization equation
/// der = (x - x_prev) / dt per state. Unknown parameters are frozen at
/// their initialized values from `frozen`.
pub fn assemble_simulation_step(
    model: Arc<Model>,
    frozen: &[f64],
    x_prev: &[f64],
    dt: f64,
) -> Result<FlatProblem, EqError> {
    let mut equations: Vec<EquationDescriptor> = model
        .equations
        .iter()
        .filter(|e| e.phase != Phase::InitialOnly)
        .cloned()
        .collect();
    for &(state, der) in &model.states {
        let prev = x_prev[state.0];
        let name = format!(
            "euler:{}",
            model.variables[der.0].name.as_str()
        );
        let residual: ResidualFn =
            Arc::new(move |x, _| x[der.0] - (x[state.0] - prev) / dt);
        let terms = vec![(der, 1.0), (state, -1.0 / dt)];
        equations.push(EquationDescriptor {
            name,
            residual,
            incidence_full: vec![der, state],
            incidence_simplified: vec![der, state],
            phase: Phase::SimulationOnly,
            nominal_residual: (model.variables[der.0].nominal).max(1e-12),
            shape_full: EqShape::Linear {
                terms: terms.clone(),
                rhs: -prev / dt,
            },
            shape_simplified: EqShape::Linear {
                terms,
                rhs: -prev / dt,
            },
        });
    }
    let unknowns: Vec<VarId> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.role != VarRole::FixedParameter && v.role != VarRole::UnknownParameter)
        .map(|(i, _)| VarId(i))
        .collect();
    let known: Vec<(VarId, f64)> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.role == VarRole::FixedParameter || v.role == VarRole::UnknownParameter)
        .map(|(i, v)| {
            let value = if v.role == VarRole::UnknownParameter {
                frozen[i]
            } else {
                v.start
            };
            (VarId(i), value)
        })
        .collect();
    if equations.len() != unknowns.len() {
        return Err(EqError::NonSquare {
            unknowns: unknowns.len(),
            equations: equations.len(),
            context: "simulation step problem".into(),
        });
    }
    Ok(FlatProblem {
        model,
        phase: ProblemPhase::Simulation,
        equations,
        unknowns,
        known,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn homotopy_combine_endpoints_and_midpoint() {
        assert_eq!(homotopy_combine(5.0, 3.0, 0.0).unwrap(), 3.0);
        assert_eq!(homotopy_combine(5.0, 3.0, 1.0).unwrap(), 5.0);
        assert_eq!(homotopy_combine(5.0, 3.0, 0.5).unwrap(), 4.0);
        assert!(homotopy_combine(5.0, 3.0, -0.1).is_err());
        assert!(homotopy_combine(5.0, 3.0, 1.1).is_err());
    }

    #[test]
    fn homotopy_endpoint_does_not_evaluate_far_side() {
        // The actual member is poisoned; at lambda = 0 it must not be touched.
        let v = blend_lazy(0.0, || f64::NAN, || 2.0);
        assert_eq!(v, 2.0);
        let v = blend_lazy(1.0, || 7.0, || f64::NAN);
        assert_eq!(v, 7.0);
    }

    #[test]
    fn homotopy_affine_in_lambda() {
        let (f, g) = (11.5, -3.25);
        for i in 0..=10 {
            let lam = i as f64 / 10.0;
            let y = homotopy_combine(f, g, lam).unwrap();
            assert_abs_diff_eq!(y, g + (f - g) * lam, epsilon = 1e-15);
        }
    }

    #[test]
    fn residual_eval_affine_problem() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        m.eq_linear("2x=6", vec![(x, 2.0)], 6.0, Phase::Both);
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        assert_eq!(p.residual_eval(&[3.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(p.residual_eval(&[0.0], 1.0).unwrap(), vec![-6.0]);
    }

    #[test]
    fn residual_eval_is_deterministic() {
        let mut m = Model::new();
        let a = m.add_var(VariableDescriptor::new("a", 1.0, 0.3));
        let b = m.add_var(VariableDescriptor::new("b", 1.0, -0.7));
        m.eq_general(
            "f1",
            vec![a, b],
            1.0,
            Phase::Both,
            Arc::new(move |x, lam| (x[a.0] * 3.7).sin() * x[b.0].exp() + lam * x[a.0].powi(3)),
        );
        m.eq_general(
            "f2",
            vec![a, b],
            1.0,
            Phase::Both,
            Arc::new(move |x, lam| {
                blend_lazy(lam, || x[a.0].sqrt().atan(), || x[b.0] * 0.25) - 0.1
            }),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        for lam in [0.0, 0.33, 1.0] {
            let x = vec![0.8314, -0.577];
            let r1 = p.residual_eval(&x, lam).unwrap();
            let r2 = p.residual_eval(&x, lam).unwrap();
            assert_eq!(r1, r2, "bit-identical repeated evaluation");
        }
    }

    #[test]
    fn residual_eval_reports_nonfinite() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 1.0));
        m.eq_general(
            "sqrt(x)",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| ws[x.0].sqrt() - 1.0),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        match p.residual_eval(&[-1.0], 1.0) {
            Err(EqError::NonFiniteResidual { equation }) => assert_eq!(equation, "sqrt(x)"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn assemble_rejects_non_square() {
        let mut m = Model::new();
        m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        m.add_var(VariableDescriptor::new("y", 1.0, 0.0));
        let x = VarId(0);
        m.eq_fix("only-one", x, 1.0, Phase::Both);
        match assemble_initialization_problem(Arc::new(m)) {
            Err(EqError::NonSquare {
                unknowns: 2,
                equations: 1,
                ..
            }) => {}
            Err(other) => panic!("expected non-square, got {other:?}"),
            Ok(_) => panic!("expected non-square, got a problem"),
        }
    }
}
