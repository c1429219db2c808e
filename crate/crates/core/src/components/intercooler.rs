//! Intercooler idealization: 0D volume with a dynamic mass balance, the
//! energy balance replaced by a fixed outlet temperature, and composition
//! pass-through.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{Model, Phase, VariableDescriptor};
use crate::media::SpeciesTable;

use super::common::{fluid_port, h_mix_ws, r_mix_ws, ComponentIo, StreamDesign};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntercoolerParams {
    /// Working-fluid side volume, m3.
    pub volume: f64,
    /// Regulated outlet temperature, K.
    pub t_out: f64,
    pub design_in: StreamDesign,
}

impl IntercoolerParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        assert!(self.t_out > 0.0, "{name}: fixed outlet temperature must be positive");
        let d_in = &self.design_in;
        let mut d_out = d_in.clone();
        d_out.t = self.t_out;
        let inlet = fluid_port(m, &format!("{name}.in"), d_in, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &d_out, table);

        let (p_state, der_p) = m.add_state(
            VariableDescriptor::new(format!("{name}.p"), d_in.p, d_in.p)
                .bounds(1e2, 1e9)
                .kind(crate::eqsys::VarKind::Pressure)
                .unit("Pa"),
            d_in.p / 100.0,
        );
        let rho_des = d_in.p / (table.r_mix(&d_in.x) * self.t_out);
        let m_var = m.add_var(
            VariableDescriptor::new(format!("{name}.M"), (rho_des * self.volume).max(1e-9), rho_des * self.volume)
                .bounds(1e-12, 1e6)
                .unit("kg"),
        );
        let der_m = m.add_var(
            VariableDescriptor::new(format!("{name}.der(M)"), d_in.w.max(1e-6), 0.0)
                .kind(crate::eqsys::VarKind::Derivative)
                .unit("kg/s"),
        );

        m.eq_alias(format!("{name}.p_in"), inlet.p, p_state, Phase::Both);
        m.eq_alias(format!("{name}.p_out"), outlet.p, p_state, Phase::Both);
        for i in 0..table.len() {
            m.eq_alias(format!("{name}.comp[{i}]"), outlet.x[i], inlet.x[i], Phase::Both);
        }
        // mass balance and pressure-driven storage
        m.eq_linear(
            format!("{name}.massBal"),
            vec![(der_m, 1.0), (inlet.w, -1.0), (outlet.w, 1.0)],
            0.0,
            Phase::Both,
        );
        {
            let tab = table.clone();
            let t_out = self.t_out;
            let vol = self.volume;
            let (pv, mv) = (p_state, m_var);
            let x_out = outlet.x.clone();
            let mut inc = vec![m_var, p_state];
            inc.extend(x_out.iter().copied());
            m.eq_general(
                format!("{name}.massDef"),
                inc,
                (rho_des * vol).max(1e-9),
                Phase::Both,
                Arc::new(move |ws, _| {
                    if ws[pv.0] <= 0.0 {
                        return f64::NAN;
                    }
                    ws[mv.0] - vol * ws[pv.0] / (r_mix_ws(&tab, ws, &x_out) * t_out)
                }),
            );
            let tab = table.clone();
            let x_out = outlet.x.clone();
            let (dm, dp) = (der_m, der_p);
            let mut coeffs = vec![p_state];
            coeffs.extend(x_out.iter().copied());
            m.eq_defines_from_inputs(
                format!("{name}.massDer"),
                der_m,
                vec![der_p],
                coeffs,
                d_in.w.max(1e-6),
                Phase::Both,
                Arc::new(move |ws, _| {
                    // dM/dt = V/(R T) dp/dt at fixed T and quasi-steady X
                    let r = r_mix_ws(&tab, ws, &x_out);
                    ws[dm.0] - vol / (r * t_out) * ws[dp.0]
                }),
            );
        }
        // idealized cooling regulation: outlet enthalpy at the fixed T
        {
            let tab = table.clone();
            let t_out = self.t_out;
            let h_out = outlet.h;
            let x_out = outlet.x.clone();
            let mut inc = vec![h_out];
            inc.extend(x_out.iter().copied());
            let h_nom = d_out.enthalpy(table).abs().max(1e5);
            m.eq_general(
                format!("{name}.fixedT"),
                inc,
                h_nom,
                Phase::Both,
                Arc::new(move |ws, _| ws[h_out.0] - h_mix_ws(&tab, ws, t_out, &x_out)),
            );
        }
        // rejected heat, for energy accounting
        let q_des = (d_in.w * (d_in.enthalpy(table) - d_out.enthalpy(table))).abs().max(1.0);
        let q_rej = m.add_var(
            VariableDescriptor::new(format!("{name}.Q_rej"), q_des, q_des)
                .bounds(-1e10, 1e10)
                .unit("W"),
        );
        {
            let (w_in, h_in, w_out, h_out, q) = (inlet.w, inlet.h, outlet.w, outlet.h, q_rej);
            m.eq_general(
                format!("{name}.heatRejected"),
                vec![q_rej, inlet.w, inlet.h, outlet.w, outlet.h],
                q_des,
                Phase::Both,
                Arc::new(move |ws, _| {
                    ws[q.0] - (ws[w_in.0] * ws[h_in.0] - ws[w_out.0] * ws[h_out.0])
                }),
            );
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("in".into(), inlet);
        io.outlets.insert("out".into(), outlet);
        io.signals.insert("Q_rej".into(), q_rej);
        io.signals.insert("M".into(), m_var);
        io
    }
}
