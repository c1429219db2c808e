//! Homotopy decoupler: trivial mass and momentum balance; outlet enthalpy
//! and composition pinned to constant design values at lambda = 0 and equal
//! to the inlet values at lambda = 1.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{blend_lazy, EqShape, Model, Phase};
use crate::media::SpeciesTable;

use super::common::{blended_equation, fluid_port, ComponentIo, StreamDesign};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecouplerParams {
    /// Design outlet specific enthalpy, J/kg. Defaults to the design
    /// stream's enthalpy when None.
    pub h_des: Option<f64>,
    /// Design outlet composition. Defaults to the design stream's.
    pub x_des: Option<Vec<f64>>,
    pub design: StreamDesign,
}

impl DecouplerParams {
    pub fn from_design(design: StreamDesign) -> Self {
        DecouplerParams {
            h_des: None,
            x_des: None,
            design,
        }
    }

    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let h_des = self.h_des.unwrap_or_else(|| self.design.enthalpy(table));
        let x_des = self.x_des.clone().unwrap_or_else(|| self.design.x.clone());
        let inlet = fluid_port(m, &format!("{name}.in"), &self.design, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &self.design, table);

        m.eq_alias(format!("{name}.flow"), outlet.w, inlet.w, Phase::Both);
        m.eq_alias(format!("{name}.pressure"), outlet.p, inlet.p, Phase::Both);

        // h_out = homotopy(h_in, h_des)
        {
            let (h_out, h_in) = (outlet.h, inlet.h);
            m.add_eq(blended_equation(
                format!("{name}.enthalpy"),
                Arc::new(move |ws, lam| {
                    ws[h_out.0] - blend_lazy(lam, || ws[h_in.0], || h_des)
                }),
                vec![h_out, h_in],
                vec![h_out],
                EqShape::Linear {
                    terms: vec![(h_out, 1.0)],
                    rhs: h_des,
                },
                h_des.abs().max(1e5),
                Phase::Both,
            ));
        }
        // X_out = homotopy(X_in, X_des), component-wise
        for i in 0..table.len() {
            let (x_out, x_in) = (outlet.x[i], inlet.x[i]);
            let xd = x_des[i];
            m.add_eq(blended_equation(
                format!("{name}.comp[{i}]"),
                Arc::new(move |ws, lam| ws[x_out.0] - blend_lazy(lam, || ws[x_in.0], || xd)),
                vec![x_out, x_in],
                vec![x_out],
                EqShape::Linear {
                    terms: vec![(x_out, 1.0)],
                    rhs: xd,
                },
                1.0,
                Phase::Both,
            ));
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("in".into(), inlet);
        io.outlets.insert("out".into(), outlet);
        io
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqsys::assemble_initialization_problem;
    use approx::assert_relative_eq;
    use std::sync::Arc as StdArc;

    /// Builds a decoupler fed by fixed inlet values and solves it at a given
    /// lambda through the assembled problem.
    fn solve_decoupler(lambda: f64, h_in: f64) -> (f64, Vec<f64>) {
        use crate::solver::{scale, solve_sequence, SolverConfig};
        use crate::structure::analyze;
        let table = StdArc::new(SpeciesTable::default_set());
        let mut m = Model::new();
        let design = StreamDesign {
            p: 1e5,
            t: 500.0,
            w: 1.0,
            x: vec![0.0, 0.0, 0.3, 0.0, 0.7, 0.0, 0.0],
        };
        let params = DecouplerParams {
            h_des: Some(design.enthalpy(&table)),
            x_des: Some(design.x.clone()),
            design: design.clone(),
        };
        let io = params.contribute(&mut m, "dec", &table);
        let inlet = io.inlet("in").clone();
        // pin the inlet
        m.eq_fix("in.p", inlet.p, 1e5, Phase::Both);
        m.eq_fix("in.w", inlet.w, 1.0, Phase::Both);
        m.eq_fix("in.h", inlet.h, h_in, Phase::Both);
        let x_in = vec![0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.0];
        for i in 0..7 {
            m.eq_fix(format!("in.x{i}"), inlet.x[i], x_in[i], Phase::Both);
        }
        let outlet = io.outlet("out").clone();
        let p = assemble_initialization_problem(StdArc::new(m)).unwrap();
        let regime = crate::eqsys::LambdaRegime::Full;
        let s = analyze(&p, regime).unwrap();
        let mut ws = p.model.start_workspace();
        let scaling = scale(&p, &s.reduction, &ws, lambda);
        solve_sequence(&p, &s, &scaling, &mut ws, lambda, &SolverConfig::default()).unwrap();
        (
            ws[outlet.h.0],
            outlet.x.iter().map(|v| ws[v.0]).collect(),
        )
    }

    #[test]
    fn lambda_zero_pins_design_values() {
        let table = SpeciesTable::default_set();
        let design_h = table.enthalpy(500.0, &[0.0, 0.0, 0.3, 0.0, 0.7, 0.0, 0.0]);
        let (h, x) = solve_decoupler(0.0, -1.0e6);
        assert_relative_eq!(h, design_h, max_relative = 1e-10);
        assert_relative_eq!(x[2], 0.3, max_relative = 1e-10);
        assert_relative_eq!(x[4], 0.7, max_relative = 1e-10);
    }

    #[test]
    fn lambda_one_is_pass_through() {
        let (h, x) = solve_decoupler(1.0, -1.0e6);
        assert_relative_eq!(h, -1.0e6, max_relative = 1e-6);
        assert_relative_eq!(x[2], 0.5, max_relative = 1e-7);
        assert_relative_eq!(x[4], 0.5, max_relative = 1e-7);
    }

    #[test]
    fn midpoint_fixed_point_when_inlet_matches_design() {
        let table = SpeciesTable::default_set();
        let design_h = table.enthalpy(500.0, &[0.0, 0.0, 0.3, 0.0, 0.7, 0.0, 0.0]);
        let (h, _) = solve_decoupler(0.5, design_h);
        assert_relative_eq!(h, design_h, max_relative = 1e-10);
    }
}
