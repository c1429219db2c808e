//! Scaled damped Newton on strong components, sequential BLT solution,
//! adaptive homotopy continuation, and steady-state verification.
//!
//! Unknowns are scaled by their nominal attribute and residual rows by the
//! larger of their nominal and the Jacobian row infinity-norm at the start
//! vector, so that the solver always iterates on quantities of order unity.
//! Jacobians are forward finite differences with nominal-scaled steps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::eqsys::{assemble_simulation_step, FlatProblem, LambdaRegime, Model};
use crate::structure::{
    analyze, tear_all, AssignValue, Reduction, SolveUnit, Structure, StructureError,
    DEFAULT_TEARING_PREFERENCES,
};

/// Newton solver settings.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Convergence threshold on the scaled residual infinity-norm.
    pub residual_tol: f64,
    /// Convergence threshold on the scaled step infinity-norm.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Line-search contraction factor.
    pub contraction: f64,
    pub max_halvings: usize,
    /// Solve torn components over their tearing variables only.
    pub use_tearing: bool,
    /// Print line-search diagnostics on rejection (debugging aid).
    pub trace_line_search: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-8,
            step_tol: 1e-10,
            max_iterations: 50,
            contraction: 0.5,
            max_halvings: 10,
            use_tearing: true,
            trace_line_search: false,
        }
    }
}

/// Adaptive lambda step schedule for the continuation.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct HomotopySchedule {
    pub initial_step: f64,
    pub growth: f64,
    pub shrink: f64,
    pub min_step: f64,
}

impl Default for HomotopySchedule {
    fn default() -> Self {
        HomotopySchedule {
            initial_step: 0.1,
            growth: 2.0,
            shrink: 0.5,
            min_step: 1e-4,
        }
    }
}

impl HomotopySchedule {
    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= 1.0
            && self.growth > 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0;
        if ok {
            Ok(())
        } else {
            Err(SolveError::BadSchedule(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("structural analysis failed: {0}")]
    Structure(#[from] StructureError),
    #[error("component `{component}` did not converge after {iterations} iterations (best scaled residual {best_residual:.3e}); residual history: {history:?}")]
    Convergence {
        component: String,
        iterations: usize,
        best_residual: f64,
        history: Vec<f64>,
    },
    #[error("singular Jacobian in component `{component}`")]
    SingularJacobian { component: String },
    #[error("non-finite value while evaluating equation `{equation}`{}", .variable.as_ref().map(|v| format!(" (perturbing variable `{v}`)")).unwrap_or_default())]
    Evaluation {
        equation: String,
        variable: Option<String>,
    },
    #[error("homotopy stalled at lambda {lambda} with step {step:.3e} below minimum — possible singularity along the homotopy path")]
    Stalled {
        lambda: f64,
        step: f64,
        trace: HomotopyTrace,
    },
    #[error("steady-state verification failed: {0}")]
    Verification(String),
    #[error("invalid homotopy schedule: {0}")]
    BadSchedule(String),
}

/// Variable and residual scaling factors.
#[derive(Debug, Clone)]
pub struct Scaling {
    /// Per unknown position: the variable nominal.
    pub var_scale: Vec<f64>,
    /// Per equation position: max(nominal residual, Jacobian row norm at x0).
    pub res_scale: Vec<f64>,
    /// Rows whose Jacobian norm was zero or non-finite at x0 and fell back
    /// to the nominal residual.
    pub fallback_rows: Vec<usize>,
}

/// Alias fill list for fast workspace refreshes during iteration.
#[derive(Debug, Clone, Default)]
pub struct AliasFills {
    fills: Vec<(usize, usize)>, // (workspace slot, root workspace slot)
}

impl AliasFills {
    pub fn build(problem: &FlatProblem, reduction: &Reduction) -> Self {
        let mut fills = Vec::new();
        for pos in 0..problem.unknowns.len() {
            if reduction.is_bound(pos) {
                if let crate::structure::Resolved::Free(root) = reduction.resolve(pos) {
                    fills.push((problem.unknowns[pos].0, problem.unknowns[root].0));
                }
            }
        }
        AliasFills { fills }
    }

    #[inline]
    pub fn refresh(&self, ws: &mut [f64]) {
        for &(slot, root) in &self.fills {
            ws[slot] = ws[root];
        }
    }
}

/// Derives the scaling for a problem at the start vector `ws0`, evaluated at
/// the given lambda. A pure change of coordinates: unknowns are divided by
/// their nominal, residual rows by max(nominal_residual, row infinity-norm).
pub fn scale(
    problem: &FlatProblem,
    reduction: &Reduction,
    ws0: &[f64],
    lambda: f64,
) -> Scaling {
    let unknown_pos = crate::structure::unknown_positions(problem);
    let fills = AliasFills::build(problem, reduction);
    let var_scale: Vec<f64> = problem
        .unknowns
        .iter()
        .map(|&v| problem.model.variables[v.0].nominal)
        .collect();
    let mut ws = ws0.to_vec();
    reduction.apply_constants(problem, &mut ws);
    fills.refresh(&mut ws);
    let mut res_scale = Vec::with_capacity(problem.equations.len());
    let mut fallback_rows = Vec::new();
    for (e, eq) in problem.equations.iter().enumerate() {
        let base = (eq.residual)(&ws, lambda);
        let mut row_norm: f64 = 0.0;
        let mut usable = base.is_finite();
        if usable {
            for root in reduction.resolved_incidence(problem, e, &unknown_pos) {
                let slot = problem.unknowns[root].0;
                let save = ws[slot];
                let h = 1e-7 * save.abs().max(var_scale[root]);
                ws[slot] = save + h;
                fills.refresh(&mut ws);
                let pert = (eq.residual)(&ws, lambda);
                ws[slot] = save;
                fills.refresh(&mut ws);
                if !pert.is_finite() {
                    usable = false;
                    break;
                }
                row_norm = row_norm.max(((pert - base) / h * var_scale[root]).abs());
            }
        }
        if !usable || row_norm == 0.0 {
            fallback_rows.push(e);
            res_scale.push(eq.nominal_residual);
        } else {
            res_scale.push(eq.nominal_residual.max(row_norm));
        }
    }
    Scaling {
        var_scale,
        res_scale,
        fallback_rows,
    }
}

/// Forward finite-difference Jacobian of the given equations with respect to
/// the given unknowns, at the current workspace. Unscaled (raw dr/dx);
/// per-variable step 1e-7 * max(|x|, nominal).
pub fn fd_jacobian(
    problem: &FlatProblem,
    fills: &AliasFills,
    eqs: &[usize],
    vars: &[usize],
    ws: &mut Vec<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>, SolveError> {
    let m = eqs.len();
    let n = vars.len();
    fills.refresh(ws);
    let base: Vec<f64> = eqs
        .iter()
        .map(|&e| (problem.equations[e].residual)(ws, lambda))
        .collect();
    for (i, r) in base.iter().enumerate() {
        if !r.is_finite() {
            return Err(SolveError::Evaluation {
                equation: problem.equations[eqs[i]].name.clone(),
                variable: None,
            });
        }
    }
    let mut jac = DMatrix::zeros(m, n);
    for (j, &vpos) in vars.iter().enumerate() {
        let slot = problem.unknowns[vpos].0;
        let nominal = problem.model.variables[problem.unknowns[vpos].0].nominal;
        let save = ws[slot];
        let h = 1e-7 * save.abs().max(nominal);
        ws[slot] = save + h;
        fills.refresh(ws);
        for (i, &e) in eqs.iter().enumerate() {
            let pert = (problem.equations[e].residual)(ws, lambda);
            if !pert.is_finite() {
                ws[slot] = save;
                fills.refresh(ws);
                return Err(SolveError::Evaluation {
                    equation: problem.equations[e].name.clone(),
                    variable: Some(
                        problem.model.variables[problem.unknowns[vpos].0].name.clone(),
                    ),
                });
            }
            jac[(i, j)] = (pert - base[i]) / h;
        }
        ws[slot] = save;
        fills.refresh(ws);
    }
    Ok(jac)
}

/// Per-component solve statistics.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ComponentStats {
    pub size: usize,
    pub iterations: usize,
    pub damping_events: usize,
    pub residual_norm: f64,
}

/// Statistics of a full BLT sequence solve.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct SequenceStats {
    pub components: Vec<ComponentStats>,
    pub total_iterations: usize,
    pub max_component_iterations: usize,
    /// Scaled infinity-norm over all equations after the sequence.
    pub final_residual_norm: f64,
}

struct ComponentContext<'a> {
    problem: &'a FlatProblem,
    scaling: &'a Scaling,
    fills: &'a AliasFills,
    config: &'a SolverConfig,
    lambda: f64,
}

impl<'a> ComponentContext<'a> {
    fn scaled_residuals(&self, eqs: &[usize], ws: &mut Vec<f64>) -> Vec<f64> {
        self.fills.refresh(ws);
        eqs.iter()
            .map(|&e| (self.problem.equations[e].residual)(ws, self.lambda) / self.scaling.res_scale[e])
            .collect()
    }

    fn bounds(&self, vpos: usize) -> (f64, f64) {
        let v = &self.problem.model.variables[self.problem.unknowns[vpos].0];
        (v.min, v.max)
    }

    fn var_name(&self, vpos: usize) -> String {
        self.problem.model.variables[self.problem.unknowns[vpos].0]
            .name
            .clone()
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| {
        if b.is_finite() {
            a.max(b.abs())
        } else {
            f64::INFINITY
        }
    })
}

/// Damped Newton with finite-difference Jacobian and backtracking line
/// search on the scaled residual norm. Newton steps are clipped to the
/// variable bounds; a clip counts as a damping event. Affine systems
/// converge in exactly one iteration.
fn newton_dense(
    ctx: &ComponentContext,
    eqs: &[usize],
    vars: &[usize],
    ws: &mut Vec<f64>,
    label: &str,
) -> Result<ComponentStats, SolveError> {
    let cfg = ctx.config;
    let mut stats = ComponentStats {
        size: eqs.len(),
        ..Default::default()
    };
    let mut r = ctx.scaled_residuals(eqs, ws);
    let mut norm = inf_norm(&r);
    if !norm.is_finite() {
        let bad = r.iter().position(|x| !x.is_finite()).unwrap();
        return Err(SolveError::Evaluation {
            equation: ctx.problem.equations[eqs[bad]].name.clone(),
            variable: None,
        });
    }
    let mut history = vec![norm];
    if norm <= cfg.residual_tol {
        stats.residual_norm = norm;
        return Ok(stats);
    }
    for _ in 0..cfg.max_iterations {
        let mut jac = fd_jacobian(ctx.problem, ctx.fills, eqs, vars, ws, ctx.lambda)?;
        // scale rows and columns
        for (i, &e) in eqs.iter().enumerate() {
            for (j, &v) in vars.iter().enumerate() {
                jac[(i, j)] *= ctx.scaling.var_scale[v] / ctx.scaling.res_scale[e];
            }
        }
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|&x| -x));
        let delta = jac.lu().solve(&rhs).ok_or_else(|| SolveError::SingularJacobian {
            component: label.to_string(),
        })?;
        // backtracking line search with bound clipping
        let saved: Vec<f64> = vars.iter().map(|&v| ws[ctx.problem.unknowns[v].0]).collect();
        let mut alpha = 1.0f64;
        let mut accepted = false;
        let mut step_inf = 0.0f64;
        for _ in 0..=cfg.max_halvings {
            let mut clipped = false;
            step_inf = 0.0;
            for (j, &v) in vars.iter().enumerate() {
                let slot = ctx.problem.unknowns[v].0;
                let (lo, hi) = ctx.bounds(v);
                let raw = saved[j] + alpha * delta[j] * ctx.scaling.var_scale[v];
                let val = raw.clamp(lo, hi);
                if val != raw {
                    clipped = true;
                }
                step_inf = step_inf.max(((val - saved[j]) / ctx.scaling.var_scale[v]).abs());
                ws[slot] = val;
            }
            let r_new = ctx.scaled_residuals(eqs, ws);
            let norm_new = inf_norm(&r_new);
            if norm_new < norm {
                if clipped {
                    stats.damping_events += 1;
                }
                r = r_new;
                norm = norm_new;
                accepted = true;
                break;
            }
            alpha *= cfg.contraction;
            stats.damping_events += 1;
        }
        if !accepted {
            if cfg.trace_line_search {
                // probe the rejected direction for diagnosis
                let mut alpha_dbg = 1.0f64;
                for _ in 0..=cfg.max_halvings {
                    for (j, &v) in vars.iter().enumerate() {
                        let (lo, hi) = ctx.bounds(v);
                        ws[ctx.problem.unknowns[v].0] =
                            (saved[j] + alpha_dbg * delta[j] * ctx.scaling.var_scale[v]).clamp(lo, hi);
                    }
                    let r_dbg = ctx.scaled_residuals(eqs, ws);
                    let worst = r_dbg
                        .iter()
                        .enumerate()
                        .max_by(|a, b| {
                            let av = if a.1.is_finite() { a.1.abs() } else { f64::INFINITY };
                            let bv = if b.1.is_finite() { b.1.abs() } else { f64::INFINITY };
                            av.total_cmp(&bv)
                        })
                        .unwrap();
                    eprintln!(
                        "  [{label}] alpha {alpha_dbg:.3e}: norm {:.6e} (base {norm:.6e}), worst eq {} = {:.3e}",
                        inf_norm(&r_dbg),
                        ctx.problem.equations[eqs[worst.0]].name,
                        worst.1
                    );
                    alpha_dbg *= cfg.contraction;
                }
            }
            // restore the best iterate
            for (j, &v) in vars.iter().enumerate() {
                ws[ctx.problem.unknowns[v].0] = saved[j];
            }
            ctx.fills.refresh(ws);
            return Err(SolveError::Convergence {
                component: label.to_string(),
                iterations: stats.iterations,
                best_residual: norm,
                history,
            });
        }
        stats.iterations += 1;
        history.push(norm);
        if norm <= cfg.residual_tol || step_inf <= cfg.step_tol {
            stats.residual_norm = norm;
            return Ok(stats);
        }
    }
    Err(SolveError::Convergence {
        component: label.to_string(),
        iterations: stats.iterations,
        best_residual: norm,
        history,
    })
}

/// Solves one causalized equation for its assigned variable by scalar
/// Newton iteration.
fn scalar_assign(
    ctx: &ComponentContext,
    eq: usize,
    vpos: usize,
    ws: &mut Vec<f64>,
) -> Result<(), SolveError> {
    let slot = ctx.problem.unknowns[vpos].0;
    let nominal = ctx.scaling.var_scale[vpos];
    let res_scale = ctx.scaling.res_scale[eq];
    let (lo, hi) = ctx.bounds(vpos);
    let residual = &ctx.problem.equations[eq].residual;
    let tol = ctx.config.residual_tol * 1e-2;
    for _ in 0..ctx.config.max_iterations {
        ctx.fills.refresh(ws);
        let r = residual(ws, ctx.lambda);
        if !r.is_finite() {
            return Err(SolveError::Evaluation {
                equation: ctx.problem.equations[eq].name.clone(),
                variable: Some(ctx.var_name(vpos)),
            });
        }
        if (r / res_scale).abs() <= tol {
            return Ok(());
        }
        let save = ws[slot];
        let h = 1e-7 * save.abs().max(nominal);
        ws[slot] = save + h;
        ctx.fills.refresh(ws);
        let rp = residual(ws, ctx.lambda);
        ws[slot] = save;
        if !rp.is_finite() {
            return Err(SolveError::Evaluation {
                equation: ctx.problem.equations[eq].name.clone(),
                variable: Some(ctx.var_name(vpos)),
            });
        }
        let slope = (rp - r) / h;
        if slope == 0.0 || !slope.is_finite() {
            return Err(SolveError::SingularJacobian {
                component: ctx.problem.equations[eq].name.clone(),
            });
        }
        let new = (save - r / slope).clamp(lo, hi);
        let dx = ((new - save) / nominal).abs();
        ws[slot] = new;
        if dx <= 1e-14 {
            ctx.fills.refresh(ws);
            let r = residual(ws, ctx.lambda);
            if (r / res_scale).abs() <= ctx.config.residual_tol {
                return Ok(());
            }
        }
    }
    ctx.fills.refresh(ws);
    let r = residual(ws, ctx.lambda) / res_scale;
    if r.abs() <= ctx.config.residual_tol {
        Ok(())
    } else {
        Err(SolveError::Convergence {
            component: ctx.problem.equations[eq].name.clone(),
            iterations: ctx.config.max_iterations,
            best_residual: r.abs(),
            history: vec![],
        })
    }
}

/// Torn Newton: iterates only over the tearing variables; the causalized
/// assignments are swept before every torn-residual evaluation.
fn newton_torn(
    ctx: &ComponentContext,
    comp: &crate::structure::StrongComponent,
    ws: &mut Vec<f64>,
    label: &str,
) -> Result<ComponentStats, SolveError> {
    let cfg = ctx.config;
    let tearing = &comp.tearing_variables;
    let torn_eqs = &comp.torn_equations;
    let mut stats = ComponentStats {
        size: comp.size(),
        ..Default::default()
    };

    let sweep = |ws: &mut Vec<f64>| -> Result<(), SolveError> {
        for &(eq, var) in &comp.assignments {
            scalar_assign(ctx, eq, var, ws)?;
        }
        Ok(())
    };
    let eval = |ws: &mut Vec<f64>| -> Result<Vec<f64>, SolveError> {
        sweep(ws)?;
        Ok(ctx.scaled_residuals(torn_eqs, ws))
    };

    let mut r = eval(ws)?;
    let mut norm = inf_norm(&r);
    let mut history = vec![norm];
    if norm <= cfg.residual_tol {
        stats.residual_norm = norm;
        return Ok(stats);
    }
    for _ in 0..cfg.max_iterations {
        // FD Jacobian over tearing variables, sweeping per column
        let n = tearing.len();
        let mut jac = DMatrix::zeros(n, n);
        let saved: Vec<f64> = tearing.iter().map(|&v| ws[ctx.problem.unknowns[v].0]).collect();
        let saved_all = ws.clone();
        for (j, &v) in tearing.iter().enumerate() {
            let slot = ctx.problem.unknowns[v].0;
            let h = 1e-7 * saved[j].abs().max(ctx.scaling.var_scale[v]);
            ws[slot] = saved[j] + h;
            let rp = match eval(ws) {
                Ok(rp) => rp,
                Err(e) => {
                    ws.copy_from_slice(&saved_all);
                    return Err(e);
                }
            };
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h * ctx.scaling.var_scale[v];
            }
            ws.copy_from_slice(&saved_all);
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|&x| -x));
        let delta = jac.lu().solve(&rhs).ok_or_else(|| SolveError::SingularJacobian {
            component: label.to_string(),
        })?;
        let mut alpha = 1.0f64;
        let mut accepted = false;
        let mut step_inf = 0.0f64;
        for _ in 0..=cfg.max_halvings {
            step_inf = 0.0;
            let mut clipped = false;
            for (j, &v) in tearing.iter().enumerate() {
                let slot = ctx.problem.unknowns[v].0;
                let (lo, hi) = ctx.bounds(v);
                let raw = saved[j] + alpha * delta[j] * ctx.scaling.var_scale[v];
                let val = raw.clamp(lo, hi);
                if val != raw {
                    clipped = true;
                }
                step_inf = step_inf.max(((val - saved[j]) / ctx.scaling.var_scale[v]).abs());
                ws[slot] = val;
            }
            // a failed inner sweep rejects the trial step
            let norm_new = match eval(ws) {
                Ok(r_new) => {
                    let nn = inf_norm(&r_new);
                    if nn < norm {
                        r = r_new;
                    }
                    nn
                }
                Err(_) => f64::INFINITY,
            };
            if norm_new < norm {
                if clipped {
                    stats.damping_events += 1;
                }
                norm = norm_new;
                accepted = true;
                break;
            }
            alpha *= cfg.contraction;
            stats.damping_events += 1;
        }
        if !accepted {
            ws.copy_from_slice(&saved_all);
            return Err(SolveError::Convergence {
                component: label.to_string(),
                iterations: stats.iterations,
                best_residual: norm,
                history,
            });
        }
        stats.iterations += 1;
        history.push(norm);
        if norm <= cfg.residual_tol || step_inf <= cfg.step_tol {
            // the torn residuals converged; make sure the full component did
            let full = ctx.scaled_residuals(&comp.equations, ws);
            stats.residual_norm = inf_norm(&full);
            return Ok(stats);
        }
    }
    Err(SolveError::Convergence {
        component: label.to_string(),
        iterations: stats.iterations,
        best_residual: norm,
        history,
    })
}

/// Solves the components of a BLT ordering in sequence, substituting solved
/// values downstream. `ws` must hold start values for unknowns and the known
/// parameter values; on success it holds the solution.
pub fn solve_sequence(
    problem: &FlatProblem,
    structure: &Structure,
    scaling: &Scaling,
    ws: &mut Vec<f64>,
    lambda: f64,
    config: &SolverConfig,
) -> Result<SequenceStats, SolveError> {
    let fills = AliasFills::build(problem, &structure.reduction);
    structure.reduction.apply_constants(problem, ws);
    fills.refresh(ws);
    let ctx = ComponentContext {
        problem,
        scaling,
        fills: &fills,
        config,
        lambda,
    };
    let mut stats = SequenceStats::default();
    for (uidx, unit) in structure.ordering.units.iter().enumerate() {
        match unit {
            SolveUnit::Assignment(a) => {
                let slot = problem.unknowns[a.variable].0;
                match a.value {
                    AssignValue::Const(c) => ws[slot] = c,
                    AssignValue::Copy(root) => ws[slot] = ws[problem.unknowns[root].0],
                }
            }
            SolveUnit::Block(comp) => {
                let label = format!(
                    "component #{uidx} [{}]",
                    comp.equations
                        .iter()
                        .take(4)
                        .map(|&e| problem.equations[e].name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                let use_torn = config.use_tearing
                    && !comp.tearing_variables.is_empty()
                    && comp.tearing_variables.len() < comp.size();
                let cs = if use_torn {
                    // a failed torn iteration (for instance a causalized
                    // assignment that runs backward through a homotopy blend)
                    // falls back to a dense solve of the whole block
                    let saved = ws.clone();
                    match newton_torn(&ctx, comp, ws, &label) {
                        Ok(cs) => Ok(cs),
                        Err(_) => {
                            ws.copy_from_slice(&saved);
                            newton_dense(&ctx, &comp.equations, &comp.variables, ws, &label)
                        }
                    }
                } else {
                    newton_dense(&ctx, &comp.equations, &comp.variables, ws, &label)
                }
                .map_err(|e| annotate_component(e, uidx))?;
                stats.total_iterations += cs.iterations;
                stats.max_component_iterations =
                    stats.max_component_iterations.max(cs.iterations);
                stats.components.push(cs);
            }
        }
    }
    fills.refresh(ws);
    let scaled: Vec<f64> = problem
        .equations
        .iter()
        .enumerate()
        .map(|(e, eq)| (eq.residual)(ws, lambda) / scaling.res_scale[e])
        .collect();
    stats.final_residual_norm = inf_norm(&scaled);
    Ok(stats)
}

fn annotate_component(err: SolveError, unit: usize) -> SolveError {
    match err {
        SolveError::Convergence {
            component,
            iterations,
            best_residual,
            history,
        } => SolveError::Convergence {
            component: format!("unit {unit}: {component}"),
            iterations,
            best_residual,
            history,
        },
        other => other,
    }
}

/// One accepted continuation step.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TraceStep {
    pub lambda: f64,
    pub newton_iterations: usize,
    pub max_component_iterations: usize,
    pub scaled_residual_norm: f64,
    /// Solution snapshot over the problem's unknowns.
    pub snapshot: Vec<f64>,
}

/// Sequence of accepted lambda steps with solver statistics.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct HomotopyTrace {
    pub steps: Vec<TraceStep>,
}

impl HomotopyTrace {
    pub fn lambdas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.lambda).collect()
    }
}

/// Result of a continuation run.
pub struct ContinuationResult {
    pub trace: HomotopyTrace,
    /// Full workspace at lambda = 1.
    pub workspace: Vec<f64>,
    pub structure_simplified: Structure,
    pub structure_full: Structure,
}

/// Homotopy continuation: solves the simplified problem at lambda = 0 with
/// the simplified-regime BLT and start values from the variable descriptors,
/// then steps lambda toward 1 on the full-regime BLT, warm-starting each
/// step from the previous solution. Failed steps are halved, fast steps
/// doubled; a step below the schedule minimum reports a stall.
pub fn continuation(
    problem: &FlatProblem,
    schedule: &HomotopySchedule,
    config: &SolverConfig,
) -> Result<ContinuationResult, SolveError> {
    schedule.validate()?;
    let mut trace = HomotopyTrace::default();

    let mut s0 = analyze(problem, LambdaRegime::Simplified)?;
    tear_all(
        &mut s0.ordering,
        problem,
        &s0.reduction,
        &DEFAULT_TEARING_PREFERENCES,
    );
    let mut ws = problem.model.start_workspace();
    problem.fill_workspace(&problem.start_values(), &mut ws);
    let scaling0 = scale(problem, &s0.reduction, &ws, 0.0);
    let stats = solve_sequence(problem, &s0, &scaling0, &mut ws, 0.0, config)?;
    trace.steps.push(TraceStep {
        lambda: 0.0,
        newton_iterations: stats.total_iterations,
        max_component_iterations: stats.max_component_iterations,
        scaled_residual_norm: stats.final_residual_norm,
        snapshot: problem.unknowns.iter().map(|&v| ws[v.0]).collect(),
    });

    let mut s1 = analyze(problem, LambdaRegime::Full)?;
    tear_all(
        &mut s1.ordering,
        problem,
        &s1.reduction,
        &DEFAULT_TEARING_PREFERENCES,
    );
    let scaling1 = scale(problem, &s1.reduction, &ws, 1.0);

    let mut lambda = 0.0f64;
    let mut step = schedule.initial_step;
    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        let mut ws_try = ws.clone();
        match solve_sequence(problem, &s1, &scaling1, &mut ws_try, target, config) {
            Ok(stats) => {
                ws = ws_try;
                trace.steps.push(TraceStep {
                    lambda: target,
                    newton_iterations: stats.total_iterations,
                    max_component_iterations: stats.max_component_iterations,
                    scaled_residual_norm: stats.final_residual_norm,
                    snapshot: problem.unknowns.iter().map(|&v| ws[v.0]).collect(),
                });
                if stats.max_component_iterations * 3 <= config.max_iterations {
                    step *= schedule.growth;
                }
                lambda = target;
            }
            Err(_) => {
                step *= schedule.shrink;
                if step < schedule.min_step {
                    return Err(SolveError::Stalled {
                        lambda,
                        step,
                        trace,
                    });
                }
            }
        }
    }
    Ok(ContinuationResult {
        trace,
        workspace: ws,
        structure_simplified: s0,
        structure_full: s1,
    })
}

/// Verification report from the short implicit-Euler integration.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VerifyReport {
    /// max over states and steps of |x(t) - x(0)| / max(|x(0)|, nominal).
    pub drift: f64,
    pub steps: usize,
    pub horizon: f64,
    pub dt: f64,
}

/// Integrates the simulation-phase equations with implicit Euler over the
/// horizon, with plant inputs frozen at their initialized values, and
/// reports the maximum relative state drift from the initial point.
pub fn verify_steady_state(
    model: &Model,
    solution_ws: &[f64],
    horizon: f64,
    dt: f64,
    config: &SolverConfig,
) -> Result<VerifyReport, SolveError> {
    let mut frozen_model = model.clone();
    for &(fixed, rule) in &model.sim_input_freeze {
        frozen_model.set_fixed(fixed, rule.value(solution_ws));
    }
    let frozen_model = Arc::new(frozen_model);
    let n_steps = (horizon / dt).ceil().max(1.0) as usize;
    let mut ws = solution_ws.to_vec();
    let mut drift: f64 = 0.0;
    for _ in 0..n_steps {
        let x_prev = ws.clone();
        let problem =
            assemble_simulation_step(frozen_model.clone(), solution_ws, &x_prev, dt)
                .map_err(|e| SolveError::Verification(e.to_string()))?;
        let mut s = analyze(&problem, LambdaRegime::Full)?;
        tear_all(
            &mut s.ordering,
            &problem,
            &s.reduction,
            &DEFAULT_TEARING_PREFERENCES,
        );
        let scaling = scale(&problem, &s.reduction, &ws, 1.0);
        solve_sequence(&problem, &s, &scaling, &mut ws, 1.0, config)
            .map_err(|e| SolveError::Verification(e.to_string()))?;
        for &(state, _) in &frozen_model.states {
            let x0 = solution_ws[state.0];
            let nominal = frozen_model.variables[state.0].nominal;
            let d = (ws[state.0] - x0).abs() / x0.abs().max(nominal);
            drift = drift.max(d);
        }
    }
    Ok(VerifyReport {
        drift,
        steps: n_steps,
        horizon,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqsys::{
        assemble_initialization_problem, blend_lazy, Model, Phase, VariableDescriptor,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::sync::Arc;

    fn solve_single(problem: &FlatProblem, lambda: f64, config: &SolverConfig) -> (Vec<f64>, SequenceStats) {
        let mut s = analyze(problem, LambdaRegime::Full).unwrap();
        tear_all(
            &mut s.ordering,
            problem,
            &s.reduction,
            &DEFAULT_TEARING_PREFERENCES,
        );
        let mut ws = problem.model.start_workspace();
        let scaling = scale(problem, &s.reduction, &ws, lambda);
        let stats = solve_sequence(problem, &s, &scaling, &mut ws, lambda, config).unwrap();
        (ws, stats)
    }

    #[test]
    fn affine_converges_in_exactly_one_iteration() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        m.eq_general(
            "2x-6",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| 2.0 * ws[x.0] - 6.0),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let (ws, stats) = solve_single(&p, 1.0, &SolverConfig::default());
        assert_relative_eq!(ws[x.0], 3.0, max_relative = 1e-8);
        assert_eq!(stats.components[0].iterations, 1);
    }

    #[test]
    fn quadratic_root() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 1.0));
        m.eq_general(
            "x^2-4",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| ws[x.0] * ws[x.0] - 4.0),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let (ws, _) = solve_single(&p, 1.0, &SolverConfig::default());
        assert_relative_eq!(ws[x.0], 2.0, max_relative = 1e-9);
    }

    /// Oracle: dense grid search plus polish for {x+y=3, x*y=2} from
    /// (0.5, 0.5); the component-wise smaller root is (1, 2).
    #[test]
    fn coupled_pair_matches_grid_oracle() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.5));
        let y = m.add_var(VariableDescriptor::new("y", 1.0, 0.5));
        m.eq_general(
            "x+y-3",
            vec![x, y],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| ws[x.0] + ws[y.0] - 3.0),
        );
        m.eq_general(
            "xy-2",
            vec![x, y],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| ws[x.0] * ws[y.0] - 2.0),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let (ws, _) = solve_single(&p, 1.0, &SolverConfig::default());

        // grid oracle
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..300 {
            for j in 0..300 {
                let (gx, gy) = (i as f64 * 0.01, j as f64 * 0.01);
                let r = (gx + gy - 3.0).powi(2) + (gx * gy - 2.0).powi(2)
                    + ((gx - 0.5).powi(2) + (gy - 0.5).powi(2)) * 1e-6;
                if r < best.0 {
                    best = (r, gx, gy);
                }
            }
        }
        // polish the oracle point by bisection-free fixed point: x+y=3, xy=2
        // has roots (1,2) and (2,1); nearest to (0.5,0.5) biased grid pick:
        assert_abs_diff_eq!(best.1, 1.0, epsilon = 0.02);
        assert_abs_diff_eq!(best.2, 2.0, epsilon = 0.02);
        assert_relative_eq!(ws[x.0], 1.0, max_relative = 1e-8);
        assert_relative_eq!(ws[y.0], 2.0, max_relative = 1e-8);
    }

    #[test]
    fn scaling_normalizes_variables_and_rows() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1e6, 2e6));
        m.eq_general(
            "1e6*(x/1e6-3)",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| 1e6 * (ws[x.0] / 1e6 - 3.0)),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let red = crate::structure::reduce(&p, LambdaRegime::Full);
        let ws = p.model.start_workspace();
        let s = scale(&p, &red, &ws, 1.0);
        // variable nominal 1e6, value 2e6 -> scaled value 2
        assert_relative_eq!(ws[x.0] / s.var_scale[0], 2.0, max_relative = 1e-12);
        // row norm ~ 1e6 * 1e-6-per-x times nominal 1e6 -> scale ~1e6; scaled
        // row behaves like (x_scaled - 3)
        let r = p.residual_eval(&[2e6], 1.0).unwrap()[0] / s.res_scale[0];
        assert_relative_eq!(r, -1.0, max_relative = 1e-6);
    }

    /// Rescaling all nominals by 1e3 must not move the converged solution by
    /// more than 10x the residual tolerance (scaled).
    #[test]
    fn solution_invariant_under_nominal_rescaling() {
        let build = |nom: f64| {
            let mut m = Model::new();
            let x = m.add_var(VariableDescriptor::new("x", nom, 1.0));
            let y = m.add_var(VariableDescriptor::new("y", nom, 1.0));
            m.eq_general(
                "f1",
                vec![x, y],
                1.0,
                Phase::Both,
                Arc::new(move |ws, _| ws[x.0].powi(2) + ws[y.0] - 7.0),
            );
            m.eq_general(
                "f2",
                vec![x, y],
                1.0,
                Phase::Both,
                Arc::new(move |ws, _| ws[x.0] * ws[y.0] - 6.0),
            );
            assemble_initialization_problem(Arc::new(m)).unwrap()
        };
        let cfg = SolverConfig::default();
        let (ws_a, _) = solve_single(&build(1.0), 1.0, &cfg);
        let (ws_b, _) = solve_single(&build(1e3), 1.0, &cfg);
        for i in 0..2 {
            assert!(
                (ws_a[i] - ws_b[i]).abs() / ws_a[i].abs().max(1.0) <= 10.0 * cfg.residual_tol,
                "solutions differ: {} vs {}",
                ws_a[i],
                ws_b[i]
            );
        }
    }

    #[test]
    fn triangular_sequence_solves_in_scalar_steps() {
        let mut m = Model::new();
        let a = m.add_var(VariableDescriptor::new("a", 1.0, 0.0));
        let b = m.add_var(VariableDescriptor::new("b", 1.0, 0.0));
        let c = m.add_var(VariableDescriptor::new("c", 1.0, 0.0));
        m.eq_general("a=1", vec![a], 1.0, Phase::Both, Arc::new(move |ws, _| ws[a.0] - 1.0));
        m.eq_general(
            "b=a+1",
            vec![a, b],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| ws[b.0] - ws[a.0] - 1.0),
        );
        m.eq_general(
            "c=b+1",
            vec![b, c],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| ws[c.0] - ws[b.0] - 1.0),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let s = analyze(&p, LambdaRegime::Full).unwrap();
        assert!(s.ordering.units.iter().all(|u| u.size() == 1));
        let (ws, _) = solve_single(&p, 1.0, &SolverConfig::default());
        assert_relative_eq!(ws[a.0], 1.0, max_relative = 1e-8);
        assert_relative_eq!(ws[b.0], 2.0, max_relative = 1e-8);
        assert_relative_eq!(ws[c.0], 3.0, max_relative = 1e-8);
    }

    #[test]
    fn diagonal_system_order_independent() {
        // any valid ordering of a decoupled system gives the simultaneous
        // solution
        let mut m = Model::new();
        let vars: Vec<_> = (0..4)
            .map(|i| m.add_var(VariableDescriptor::new(format!("d{i}"), 1.0, 0.1)))
            .collect();
        for (i, &v) in vars.iter().enumerate() {
            let target = (i + 1) as f64;
            m.eq_general(
                format!("d{i}^2"),
                vec![v],
                1.0,
                Phase::Both,
                Arc::new(move |ws, _| ws[v.0] * ws[v.0] - target * target),
            );
        }
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let (ws, _) = solve_single(&p, 1.0, &SolverConfig::default());
        for (i, &v) in vars.iter().enumerate() {
            assert_relative_eq!(ws[v.0], (i + 1) as f64, max_relative = 1e-9);
        }
    }

    #[test]
    fn continuation_identical_pair_two_solves() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        m.eq_general(
            "same",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, lam| blend_lazy(lam, || ws[x.0] - 2.0, || ws[x.0] - 2.0)),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let schedule = HomotopySchedule {
            initial_step: 1.0,
            ..Default::default()
        };
        let r = continuation(&p, &schedule, &SolverConfig::default()).unwrap();
        assert_eq!(r.trace.lambdas(), vec![0.0, 1.0]);
    }

    #[test]
    fn continuation_common_root_stays_put() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        m.eq_general(
            "pair",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, lam| {
                blend_lazy(lam, || ws[x.0] * ws[x.0] - 4.0, || ws[x.0] - 2.0)
            }),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let r = continuation(&p, &HomotopySchedule::default(), &SolverConfig::default()).unwrap();
        for step in &r.trace.steps {
            assert_relative_eq!(step.snapshot[0], 2.0, max_relative = 1e-7);
        }
        assert_eq!(*r.trace.lambdas().last().unwrap(), 1.0);
    }

    /// Analytic path of the linear family f: x-10, g: x-1 is x = 1 + 9 lambda.
    #[test]
    fn continuation_tracks_linear_path() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.0));
        m.eq_general(
            "linear-family",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, lam| blend_lazy(lam, || ws[x.0] - 10.0, || ws[x.0] - 1.0)),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let cfg = SolverConfig::default();
        let r = continuation(&p, &HomotopySchedule::default(), &cfg).unwrap();
        assert!(r.trace.steps.len() > 2);
        let mut prev = -1.0;
        for step in &r.trace.steps {
            assert!(step.lambda > prev, "lambda strictly increasing");
            prev = step.lambda;
            assert!(step.scaled_residual_norm <= cfg.residual_tol);
            assert_relative_eq!(
                step.snapshot[0],
                1.0 + 9.0 * step.lambda,
                max_relative = 1e-7
            );
        }
    }

    /// Turning point: the blended problem loses its real root past
    /// lambda ~ 0.55, so the continuation must stall, not crash.
    #[test]
    fn continuation_stalls_on_turning_point() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 1.0));
        m.eq_general(
            "turning",
            vec![x],
            1.0,
            Phase::Both,
            Arc::new(move |ws, lam| {
                blend_lazy(lam, || ws[x.0] * ws[x.0] + 1.0, || ws[x.0] - 1.0)
            }),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        match continuation(&p, &HomotopySchedule::default(), &SolverConfig::default()) {
            Err(SolveError::Stalled { trace, lambda, .. }) => {
                assert!(lambda < 0.56, "stall at lambda {lambda}");
                assert!(!trace.steps.is_empty());
            }
            Ok(_) => panic!("expected stall"),
            Err(e) => panic!("expected stall, got {e}"),
        }
    }

    #[test]
    fn verify_pure_decay_at_origin_has_zero_drift() {
        let mut m = Model::new();
        let (x, der) = m.add_state(VariableDescriptor::new("x", 1.0, 0.0), 1.0);
        m.eq_linear("dx=-x", vec![(der, 1.0), (x, 1.0)], 0.0, Phase::Both);
        let p = assemble_initialization_problem(Arc::new(m.clone())).unwrap();
        let (ws, _) = {
            let mut s = analyze(&p, LambdaRegime::Full).unwrap();
            tear_all(&mut s.ordering, &p, &s.reduction, &DEFAULT_TEARING_PREFERENCES);
            let mut ws = p.model.start_workspace();
            let scaling = scale(&p, &s.reduction, &ws, 1.0);
            let st = solve_sequence(&p, &s, &scaling, &mut ws, 1.0, &SolverConfig::default()).unwrap();
            (ws, st)
        };
        assert_abs_diff_eq!(ws[x.0], 0.0, epsilon = 1e-12);
        let report =
            verify_steady_state(&m, &ws, 10.0, 1.0, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(report.drift, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn verify_detects_perturbed_state() {
        let mut m = Model::new();
        let (x, der) = m.add_state(VariableDescriptor::new("x", 100.0, 100.0), 1.0);
        // dx/dt = -(x - 100)/tau, equilibrium at 100
        m.eq_linear(
            "relax",
            vec![(der, 1.0), (x, 1.0 / 50.0)],
            2.0,
            Phase::Both,
        );
        let p = assemble_initialization_problem(Arc::new(m.clone())).unwrap();
        let mut s = analyze(&p, LambdaRegime::Full).unwrap();
        tear_all(&mut s.ordering, &p, &s.reduction, &DEFAULT_TEARING_PREFERENCES);
        let mut ws = p.model.start_workspace();
        let scaling = scale(&p, &s.reduction, &ws, 1.0);
        solve_sequence(&p, &s, &scaling, &mut ws, 1.0, &SolverConfig::default()).unwrap();
        // perturb the state by 1 %
        let mut perturbed = ws.clone();
        perturbed[x.0] *= 1.01;
        let report =
            verify_steady_state(&m, &perturbed, 10.0, 1.0, &SolverConfig::default()).unwrap();
        assert!(report.drift > 1e-4, "drift {} too small", report.drift);
    }

    /// Forward finite differences must match central differences at half
    /// step within 1e-5 relative on analytic residuals.
    #[test]
    fn fd_jacobian_matches_central_differences() {
        let mut m = Model::new();
        let x = m.add_var(VariableDescriptor::new("x", 1.0, 0.7));
        let y = m.add_var(VariableDescriptor::new("y", 10.0, 13.0));
        m.eq_general(
            "g1",
            vec![x, y],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| (ws[x.0] * 2.0).sin() + (ws[y.0] / 10.0).powi(3)),
        );
        m.eq_general(
            "g2",
            vec![x, y],
            1.0,
            Phase::Both,
            Arc::new(move |ws, _| (ws[x.0] + 0.3).exp() * ws[y.0] - 5.0),
        );
        let p = assemble_initialization_problem(Arc::new(m)).unwrap();
        let red = crate::structure::reduce(&p, LambdaRegime::Full);
        let fills = AliasFills::build(&p, &red);
        let mut ws = p.model.start_workspace();
        let jac = fd_jacobian(&p, &fills, &[0, 1], &[0, 1], &mut ws, 1.0).unwrap();

        // central differences at half the forward step
        for (j, var) in [(0usize, 0usize), (1, 1)] {
            let slot = var;
            let nominal = p.model.variables[slot].nominal;
            let save = ws[slot];
            let h = 0.5 * 1e-7 * save.abs().max(nominal);
            for i in 0..2 {
                let eval = |ws: &mut Vec<f64>| (p.equations[i].residual)(ws, 1.0);
                ws[slot] = save + h;
                let rp = eval(&mut ws);
                ws[slot] = save - h;
                let rm = eval(&mut ws);
                ws[slot] = save;
                let central = (rp - rm) / (2.0 * h);
                assert_relative_eq!(jac[(i, j)], central, max_relative = 1e-5);
            }
        }
    }
}
