//! High-level run orchestration: assemble, structure, continuation, verify,
//! report.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::boundary::{warm_start_backward, BoundaryMode, Scenario};
use crate::config::RunConfig;
use crate::eqsys::{assemble_initialization_problem, EqError, LambdaRegime};
use crate::plant::{flatten, FlattenError, FlattenedPlant};
use crate::report::{BltSummary, RunReport, SolutionRow, REPORT_SCHEMA_VERSION};
use crate::solver::{continuation, verify_steady_state, SolveError};
use crate::structure::{analyze, tear_all, StructureError, DEFAULT_TEARING_PREFERENCES};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("structural singularity: {0}")]
    Singular(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("verification failure: {0}")]
    Verification(String),
}

impl RunError {
    /// Process exit code contract: 2 config, 3 structural, 4 convergence,
    /// 5 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Singular(_) => 3,
            RunError::Convergence(_) => 4,
            RunError::Verification(_) => 5,
        }
    }
}

impl From<FlattenError> for RunError {
    fn from(e: FlattenError) -> Self {
        match e {
            FlattenError::NonSquare { .. } => RunError::Singular(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<StructureError> for RunError {
    fn from(e: StructureError) -> Self {
        RunError::Singular(e.to_string())
    }
}

impl From<EqError> for RunError {
    fn from(e: EqError) -> Self {
        match e {
            EqError::NonSquare { .. } => RunError::Singular(e.to_string()),
            other => RunError::Convergence(other.to_string()),
        }
    }
}

impl From<SolveError> for RunError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Structure(s) => RunError::Singular(s.to_string()),
            SolveError::Verification(v) => RunError::Verification(v),
            other => RunError::Convergence(other.to_string()),
        }
    }
}

/// Per-run overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub scenario: Option<Scenario>,
    /// Forces the mode of every boundary block pair.
    pub mode: Option<BoundaryMode>,
    /// Scales the off-design value of load-scalable output blocks.
    pub load: Option<f64>,
    /// Forward solution used as the initial guess (variable name -> value).
    pub warm_start: Option<BTreeMap<String, f64>>,
    pub lambda_step: Option<f64>,
    pub tol: Option<f64>,
    pub verify_horizon: Option<f64>,
    /// Skip the time-integration check (reported as absent).
    pub skip_verify: bool,
}

/// The outcome of a successful run.
pub struct RunOutcome {
    pub report: RunReport,
    pub flat: FlattenedPlant,
    /// Full workspace at lambda = 1.
    pub workspace: Vec<f64>,
}

/// Applies option overrides to a configuration.
pub fn apply_options(config: &RunConfig, options: &RunOptions) -> RunConfig {
    let mut config = config.clone();
    if let Some(s) = options.scenario {
        config.scenario = s;
    }
    if let Some(mode) = options.mode {
        for input in &mut config.plant.inputs {
            input.block.mode = mode;
        }
        for output in &mut config.plant.outputs {
            output.block.mode = mode;
        }
    }
    if let Some(load) = options.load {
        for output in &mut config.plant.outputs {
            if output.scale_with_load {
                output.block.y_offdes = load * output.block.y_des;
            }
        }
    }
    if let Some(step) = options.lambda_step {
        config.schedule.initial_step = step;
    }
    if let Some(tol) = options.tol {
        config.solver.residual_tol = tol;
    }
    if let Some(h) = options.verify_horizon {
        config.verify.horizon = h;
    }
    config
}

/// Executes assemble, structural analysis, homotopy continuation, and
/// steady-state verification, and builds the report.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunOutcome, RunError> {
    let config = apply_options(config, options);
    let mut flat = flatten(&config.plant, config.scenario)?;
    if let Some(map) = &options.warm_start {
        let mut model = (*flat.model).clone();
        warm_start_backward(&mut model, map).map_err(|e| RunError::Config(e.to_string()))?;
        flat.model = Arc::new(model);
    }
    let problem = assemble_initialization_problem(flat.model.clone())?;

    let result = continuation(&problem, &config.schedule, &config.solver)?;
    // structural summaries from the analyses the continuation actually used
    let mut s0 = result.structure_simplified.clone();
    let mut s1 = result.structure_full.clone();
    tear_all(&mut s0.ordering, &problem, &s0.reduction, &DEFAULT_TEARING_PREFERENCES);
    tear_all(&mut s1.ordering, &problem, &s1.reduction, &DEFAULT_TEARING_PREFERENCES);
    let blt_lambda0 = BltSummary::from_structure(&problem, &s0);
    let blt_lambda1 = BltSummary::from_structure(&problem, &s1);

    let verification = if options.skip_verify {
        None
    } else {
        Some(
            verify_steady_state(
                &flat.model,
                &result.workspace,
                config.verify.horizon,
                config.verify.dt,
                &config.solver,
            )
            .map_err(|e| RunError::Verification(e.to_string()))?,
        )
    };

    let solution: Vec<SolutionRow> = flat
        .model
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| SolutionRow {
            name: v.name.clone(),
            value: result.workspace[i],
            unit: v.unit.clone(),
        })
        .collect();
    let unknown_names: Vec<String> = problem
        .unknowns
        .iter()
        .map(|&v| flat.model.variables[v.0].name.clone())
        .collect();

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario,
        forward_pairs: flat.balance.forward_pairs,
        backward_pairs: flat.balance.backward_pairs,
        blt_lambda0,
        blt_lambda1,
        unknown_names,
        trace: result.trace,
        solution,
        verification,
    };
    Ok(RunOutcome {
        report,
        flat,
        workspace: result.workspace,
    })
}

/// Structure-only analysis used for scenario-equivalence checks: returns
/// (unknown count, equation count, lambda = 0 size multiset).
pub fn structural_signature(
    config: &RunConfig,
    scenario: Scenario,
) -> Result<(usize, usize, Vec<usize>), RunError> {
    let flat = flatten(&config.plant, scenario)?;
    let problem = assemble_initialization_problem(flat.model.clone())?;
    let s0 = analyze(&problem, LambdaRegime::Simplified)?;
    Ok((
        problem.unknowns.len(),
        problem.equations.len(),
        s0.ordering.size_histogram(),
    ))
}
