//! Pressure loss models: Darcy-Weisbach quadratic law with a linear
//! on-design homotopy simplification, or the linear law alone.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{blend_lazy, EqShape, Model, Phase};
use crate::media::SpeciesTable;

use super::common::{blended_equation, fluid_port, rho_ws, t_from_h_ws, ComponentIo, StreamDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureLossLaw {
    QuadraticWithHomotopy,
    AlwaysLinear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PressureLossParams {
    pub dp_nom: f64,
    pub w_nom: f64,
    pub rho_nom: f64,
    pub law: PressureLossLaw,
    pub design_in: StreamDesign,
}

/// Pressure drop for a mass flow and upstream density.
///
/// Quadratic law: dp_nom (w/w_nom)^2 (rho_nom/rho), blended against the
/// linear on-design relation (dp_nom/w_nom) w; the always-linear law uses
/// the linear relation at every lambda.
pub fn pressure_loss(w: f64, rho: f64, params: &PressureLossParams, lambda: f64) -> f64 {
    let linear = params.dp_nom / params.w_nom * w;
    match params.law {
        PressureLossLaw::AlwaysLinear => linear,
        PressureLossLaw::QuadraticWithHomotopy => blend_lazy(
            lambda,
            || params.dp_nom * (w / params.w_nom).powi(2) * (params.rho_nom / rho),
            || linear,
        ),
    }
}

impl PressureLossParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let d_in = &self.design_in;
        let mut d_out = d_in.clone();
        d_out.p = d_in.p - self.dp_nom;
        let inlet = fluid_port(m, &format!("{name}.in"), d_in, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &d_out, table);

        m.eq_alias(format!("{name}.flow"), outlet.w, inlet.w, Phase::Both);
        m.eq_alias(format!("{name}.enthalpy"), outlet.h, inlet.h, Phase::Both);
        for i in 0..table.len() {
            m.eq_alias(format!("{name}.comp[{i}]"), outlet.x[i], inlet.x[i], Phase::Both);
        }

        let params = self.clone();
        let tab = table.clone();
        let (p_in, p_out, w, h_in) = (inlet.p, outlet.p, inlet.w, inlet.h);
        let x_in = inlet.x.clone();
        let linear_shape = EqShape::Linear {
            terms: vec![
                (p_in, 1.0),
                (p_out, -1.0),
                (w, -self.dp_nom / self.w_nom),
            ],
            rhs: 0.0,
        };
        let mut inc_actual = vec![p_in, p_out, w, h_in];
        inc_actual.extend(x_in.iter().copied());
        let desc = blended_equation(
            format!("{name}.dp"),
            Arc::new(move |ws, lam| {
                let t = t_from_h_ws(&tab, ws, ws[h_in.0], &x_in);
                let rho = rho_ws(&tab, ws, ws[p_in.0], t, &x_in);
                ws[p_in.0] - ws[p_out.0] - pressure_loss(ws[w.0], rho, &params, lam)
            }),
            inc_actual,
            vec![p_in, p_out, w],
            linear_shape.clone(),
            self.dp_nom.max(1.0),
            Phase::Both,
        );
        let mut desc = desc;
        if self.law == PressureLossLaw::AlwaysLinear {
            desc.shape_full = linear_shape;
            desc.incidence_full = desc.incidence_simplified.clone();
        }
        m.add_eq(desc);

        let mut io = ComponentIo::default();
        io.inlets.insert("in".into(), inlet);
        io.outlets.insert("out".into(), outlet);
        io
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(law: PressureLossLaw) -> PressureLossParams {
        PressureLossParams {
            dp_nom: 5000.0,
            w_nom: 2.0,
            rho_nom: 4.0,
            law,
            design_in: StreamDesign {
                p: 3e5,
                t: 400.0,
                w: 2.0,
                x: vec![0.0; 7],
            },
        }
    }

    #[test]
    fn nominal_point_is_fixed_point_of_both_forms() {
        let p = params(PressureLossLaw::QuadraticWithHomotopy);
        for lam in [0.0, 0.25, 0.5, 1.0] {
            assert_relative_eq!(
                pressure_loss(2.0, 4.0, &p, lam),
                5000.0,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn linear_form_at_half_flow() {
        let p = params(PressureLossLaw::QuadraticWithHomotopy);
        assert_relative_eq!(pressure_loss(1.0, 4.0, &p, 0.0), 2500.0, max_relative = 1e-13);
    }

    #[test]
    fn quadratic_form_at_half_flow() {
        // lambda=1, w = 0.5 w_nom, rho = rho_nom -> dp = 0.25 dp_nom
        let p = params(PressureLossLaw::QuadraticWithHomotopy);
        assert_relative_eq!(pressure_loss(1.0, 4.0, &p, 1.0), 1250.0, max_relative = 1e-13);
    }

    #[test]
    fn always_linear_ignores_lambda() {
        let p = params(PressureLossLaw::AlwaysLinear);
        for lam in [0.0, 0.5, 1.0] {
            assert_relative_eq!(pressure_loss(1.0, 9.9, &p, lam), 2500.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn monotone_in_flow() {
        let p = params(PressureLossLaw::QuadraticWithHomotopy);
        for lam in [0.0, 0.5, 1.0] {
            let mut prev = -1.0;
            for i in 0..50 {
                let w = i as f64 * 0.1;
                let dp = pressure_loss(w, 4.0, &p, lam);
                assert!(dp > prev, "not monotone at w={w}, lambda={lam}");
                prev = dp;
            }
        }
    }
}
