//! 0D turbine: Stodola's ellipse law with the linear on-design homotopy
//! simplification, and an isentropic-efficiency power side.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eqsys::{blend_lazy, EqShape, Model, Phase, VariableDescriptor};
use crate::media::SpeciesTable;

use super::common::{
    blended_equation, cp_mix_ws, fluid_port, h_mix_ws, r_mix_ws, rho_ws, t_from_h_ws, ComponentIo,
    StreamDesign,
};

#[derive(Debug, Error)]
pub enum TurbineError {
    #[error("pressure ratio {0} below 1: reverse flow not supported")]
    ReverseFlow(f64),
    #[error("nonpositive inlet state: p_in {p}, rho_in {rho}")]
    BadInletState { p: f64, rho: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurbineParams {
    /// Stodola coefficient, SI, from the design point.
    pub k_t: f64,
    pub eta_is: f64,
    pub w_nom: f64,
    pub p_nom: f64,
    pub design_in: StreamDesign,
    pub design_out: StreamDesign,
}

/// Stodola's ellipse law blended with its linear on-design simplification:
/// w = K_t sqrt(p_in rho_in) sqrt(1 - beta^-2) at lambda = 1,
/// w = (w_nom/p_nom) p_in at lambda = 0.
pub fn turbine_flow(
    p_in: f64,
    rho_in: f64,
    beta: f64,
    params: &TurbineParams,
    lambda: f64,
) -> Result<f64, TurbineError> {
    if beta < 1.0 {
        return Err(TurbineError::ReverseFlow(beta));
    }
    if p_in <= 0.0 || rho_in <= 0.0 {
        return Err(TurbineError::BadInletState { p: p_in, rho: rho_in });
    }
    Ok(blend_lazy(
        lambda,
        || params.k_t * (p_in * rho_in).sqrt() * (1.0 - beta.powi(-2)).sqrt(),
        || params.w_nom / params.p_nom * p_in,
    ))
}

impl TurbineParams {
    /// Derives K_t from a design point.
    pub fn fit_k_t(w: f64, p_in: f64, rho_in: f64, beta: f64) -> f64 {
        w / ((p_in * rho_in).sqrt() * (1.0 - beta.powi(-2)).sqrt())
    }

    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let inlet = fluid_port(m, &format!("{name}.in"), &self.design_in, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &self.design_out, table);
        let h_in_des = self.design_in.enthalpy(table);
        let h_out_des = self.design_out.enthalpy(table);
        let p_des = (self.design_in.w * (h_in_des - h_out_des)).max(1.0);
        let power = m.add_var(
            VariableDescriptor::new(format!("{name}.P"), p_des, p_des)
                .bounds(0.0, 1e10)
                .unit("W"),
        );

        m.eq_alias(format!("{name}.flow"), outlet.w, inlet.w, Phase::Both);
        for i in 0..table.len() {
            m.eq_alias(format!("{name}.comp[{i}]"), outlet.x[i], inlet.x[i], Phase::Both);
        }

        // Stodola homotopy on the inlet flow
        {
            let params = self.clone();
            let tab = table.clone();
            let (w, p_in, h_in, p_out) = (inlet.w, inlet.p, inlet.h, outlet.p);
            let x_in = inlet.x.clone();
            let mut inc_actual = vec![w, p_in, h_in, p_out];
            inc_actual.extend(x_in.iter().copied());
            m.add_eq(blended_equation(
                format!("{name}.stodola"),
                Arc::new(move |ws, lam| {
                    let t_in = t_from_h_ws(&tab, ws, ws[h_in.0], &x_in);
                    let rho = rho_ws(&tab, ws, ws[p_in.0], t_in, &x_in);
                    let beta = ws[p_in.0] / ws[p_out.0];
                    match turbine_flow(ws[p_in.0], rho, beta, &params, lam) {
                        Ok(flow) => ws[w.0] - flow,
                        Err(_) => f64::NAN,
                    }
                }),
                inc_actual,
                vec![w, p_in],
                EqShape::Linear {
                    terms: vec![(w, 1.0), (p_in, -self.w_nom / self.p_nom)],
                    rhs: 0.0,
                },
                self.w_nom,
                Phase::Both,
            ));
        }

        // isentropic expansion: h_out = h_in - eta (h_in - h(T_is, X))
        {
            let tab = table.clone();
            let eta = self.eta_is;
            let (h_in, p_in, p_out, h_out) = (inlet.h, inlet.p, outlet.p, outlet.h);
            let x_in = inlet.x.clone();
            let mut inc = vec![h_out, h_in, p_in, p_out];
            inc.extend(x_in.iter().copied());
            m.eq_general(
                format!("{name}.expansion"),
                inc,
                h_in_des.abs().max(1e5),
                Phase::Both,
                Arc::new(move |ws, _| {
                    let t_in = t_from_h_ws(&tab, ws, ws[h_in.0], &x_in);
                    if t_in <= 0.0 || ws[p_in.0] <= 0.0 || ws[p_out.0] <= 0.0 {
                        return f64::NAN;
                    }
                    let kappa = r_mix_ws(&tab, ws, &x_in) / cp_mix_ws(&tab, ws, &x_in);
                    let t_is = t_in * (ws[p_out.0] / ws[p_in.0]).powf(kappa);
                    let h_is = h_mix_ws(&tab, ws, t_is, &x_in);
                    ws[h_out.0] - (ws[h_in.0] - eta * (ws[h_in.0] - h_is))
                }),
            );
        }

        // shaft power
        {
            let (w, h_in, h_out, p_var) = (inlet.w, inlet.h, outlet.h, power);
            m.eq_general(
                format!("{name}.power"),
                vec![power, w, h_in, h_out],
                p_des,
                Phase::Both,
                Arc::new(move |ws, _| {
                    ws[p_var.0] - ws[w.0] * (ws[h_in.0] - ws[h_out.0])
                }),
            );
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("in".into(), inlet);
        io.outlets.insert("out".into(), outlet);
        io.signals.insert("P".into(), power);
        io
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> TurbineParams {
        let design = StreamDesign {
            p: 8.0,
            t: 1000.0,
            w: 1.0,
            x: vec![0.0; 7],
        };
        TurbineParams {
            k_t: 2.0,
            eta_is: 0.9,
            w_nom: 5.0,
            p_nom: 8.0,
            design_in: design.clone(),
            design_out: design,
        }
    }

    #[test]
    fn zero_flow_at_unit_pressure_ratio() {
        let w = turbine_flow(8.0, 2.0, 1.0, &params(), 1.0).unwrap();
        assert_abs_diff_eq!(w, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nominal_identity_of_simplified_form() {
        // lambda=0, p_in = p_nom -> w = w_nom
        let w = turbine_flow(8.0, 123.0, 3.0, &params(), 0.0).unwrap();
        assert_relative_eq!(w, 5.0, max_relative = 1e-13);
    }

    /// Hand evaluation of Stodola's law: K_t=2, p_in=8, rho_in=2, beta=2
    /// gives w = 2 * 4 * sqrt(0.75) = 6.928203230275509.
    #[test]
    fn hand_evaluated_stodola_point() {
        let w = turbine_flow(8.0, 2.0, 2.0, &params(), 1.0).unwrap();
        assert_relative_eq!(w, 6.928203230275509, max_relative = 1e-14);
    }

    #[test]
    fn reverse_flow_is_domain_error() {
        assert!(turbine_flow(8.0, 2.0, 0.9, &params(), 1.0).is_err());
    }

    #[test]
    fn monotone_in_inlet_pressure() {
        let p = params();
        for lam in [0.0, 0.5, 1.0] {
            let mut prev = -1.0;
            for i in 1..40 {
                let p_in = i as f64;
                // fixed outlet pressure 0.5 => beta grows with p_in
                let beta = p_in / 0.5;
                let w = turbine_flow(p_in, 2.0, beta, &p, lam).unwrap();
                assert!(w > prev, "not monotone at p_in={p_in}, lambda={lam}");
                prev = w;
            }
        }
    }
}
