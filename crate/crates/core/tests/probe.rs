//! probe: solve lambda=0, then examine first full-regime step failure
use plantinit::eqsys::{assemble_initialization_problem, LambdaRegime};
use plantinit::boundary::Scenario;
use plantinit::plant::demo::build_demo_plant;
use plantinit::plant::flatten;
use plantinit::solver::*;
use plantinit::structure::{analyze, tear_all, DEFAULT_TEARING_PREFERENCES, SolveUnit};

#[test]
fn probe_first_step() {
    let plant = build_demo_plant();
    let flat = flatten(&plant, Scenario::SteadyStateOnDesign).unwrap();
    let problem = assemble_initialization_problem(flat.model.clone()).unwrap();
    let cfg = SolverConfig::default();
    let mut s0 = analyze(&problem, LambdaRegime::Simplified).unwrap();
    tear_all(&mut s0.ordering, &problem, &s0.reduction, &DEFAULT_TEARING_PREFERENCES);
    let mut ws = problem.model.start_workspace();
    problem.fill_workspace(&problem.start_values(), &mut ws);
    let sc0 = scale(&problem, &s0.reduction, &ws, 0.0);
    let st = solve_sequence(&problem, &s0, &sc0, &mut ws, 0.0, &cfg).expect("lambda=0");
    println!("lambda=0 ok: final residual {:.3e}, iters {}", st.final_residual_norm, st.total_iterations);

    let mut s1 = analyze(&problem, LambdaRegime::Full).unwrap();
    tear_all(&mut s1.ordering, &problem, &s1.reduction, &DEFAULT_TEARING_PREFERENCES);
    // tearing summary of the big block
    for u in &s1.ordering.units {
        if let SolveUnit::Block(c) = u {
            if c.size() > 10 {
                println!("block size {} torn to {} iteration vars", c.size(), c.tearing_variables.len());
            }
        }
    }
    let sc1 = scale(&problem, &s1.reduction, &ws, 1.0);
    // march to 0.79 then probe the stall region
    for lam in [0.1, 0.3, 0.5, 0.65, 0.75, 0.79] {
        match solve_sequence(&problem, &s1, &sc1, &mut ws, lam, &cfg) {
            Ok(st) => println!("march lambda={lam}: OK, {} iters, res {:.3e}", st.total_iterations, st.final_residual_norm),
            Err(e) => { println!("march lambda={lam}: FAIL: {e}"); return; }
        }
    }
    for lam in [0.80, 0.82, 0.85, 0.9, 1.0] {
        let mut ws_try = ws.clone();
        match solve_sequence(&problem, &s1, &sc1, &mut ws_try, lam, &cfg) {
            Ok(st) => { println!("lambda={lam}: OK, {} iters, residual {:.3e}", st.total_iterations, st.final_residual_norm); ws = ws_try; }
            Err(e) => println!("lambda={lam}: FAIL: {e}"),
        }
    }
}
