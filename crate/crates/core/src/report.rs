//! Run reports: structural summaries, homotopy traces, solution tables.
//!
//! Reports are reproducible byte-for-byte for identical inputs and tool
//! version; wall-clock timings are therefore kept out of the report file and
//! printed separately by the front end.

use serde::{Deserialize, Serialize};

use crate::boundary::Scenario;
use crate::eqsys::FlatProblem;
use crate::solver::{HomotopyTrace, VerifyReport};
use crate::structure::{SolveUnit, Structure};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Histogram and tearing summary of one BLT ordering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BltSummary {
    pub component_count: usize,
    pub max_component_size: usize,
    /// (size, count), ascending by size.
    pub size_histogram: Vec<(usize, usize)>,
    /// Tearing selection of every block larger than one equation.
    pub tearing: Vec<TearingSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TearingSummary {
    pub block_size: usize,
    pub tearing_variables: Vec<String>,
}

impl BltSummary {
    pub fn from_structure(problem: &FlatProblem, s: &Structure) -> Self {
        let sizes = s.ordering.size_histogram();
        let mut histogram: Vec<(usize, usize)> = Vec::new();
        for size in sizes {
            match histogram.last_mut() {
                Some((sz, count)) if *sz == size => *count += 1,
                _ => histogram.push((size, 1)),
            }
        }
        let tearing = s
            .ordering
            .units
            .iter()
            .filter_map(|u| match u {
                SolveUnit::Block(c) if c.size() > 1 => Some(TearingSummary {
                    block_size: c.size(),
                    tearing_variables: c
                        .tearing_variables
                        .iter()
                        .map(|&v| {
                            problem.model.variables[problem.unknowns[v].0].name.clone()
                        })
                        .collect(),
                }),
                _ => None,
            })
            .collect();
        BltSummary {
            component_count: s.ordering.units.len(),
            max_component_size: s.ordering.max_size(),
            size_histogram: histogram,
            tearing,
        }
    }
}

/// One row of the solution table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRow {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

/// The full run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: Scenario,
    pub forward_pairs: usize,
    pub backward_pairs: usize,
    pub blt_lambda0: BltSummary,
    pub blt_lambda1: BltSummary,
    /// Names of the unknowns, in the order used by trace snapshots.
    pub unknown_names: Vec<String>,
    pub trace: HomotopyTrace,
    pub solution: Vec<SolutionRow>,
    pub verification: Option<VerifyReport>,
}

impl RunReport {
    /// Solution values keyed by variable name (for warm starting).
    pub fn solution_map(&self) -> std::collections::BTreeMap<String, f64> {
        self.solution
            .iter()
            .map(|row| (row.name.clone(), row.value))
            .collect()
    }

    /// The solution table as CSV.
    pub fn solution_csv(&self) -> String {
        let mut out = String::from("name,value,unit\n");
        for row in &self.solution {
            out.push_str(&format!(
                "{},{:e},{}\n",
                row.name, row.value, row.unit
            ));
        }
        out
    }
}
