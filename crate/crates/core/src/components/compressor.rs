//! Compressor stand-in: fixed pressure ratio, fixed isentropic efficiency,
//! no storage.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{Model, Phase, VariableDescriptor};
use crate::media::SpeciesTable;

use super::common::{
    cp_mix_ws, fluid_port, h_mix_ws, r_mix_ws, t_from_h_ws, ComponentIo, StreamDesign,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressorParams {
    pub pressure_ratio: f64,
    pub eta_is: f64,
    pub design_in: StreamDesign,
}

impl CompressorParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let d_in = &self.design_in;
        let mut d_out = d_in.clone();
        d_out.p = d_in.p * self.pressure_ratio;
        let kappa = table.r_mix(&d_in.x) / table.cp_mix(&d_in.x);
        d_out.t = d_in.t * (1.0 + (self.pressure_ratio.powf(kappa) - 1.0) / self.eta_is);
        let inlet = fluid_port(m, &format!("{name}.in"), d_in, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &d_out, table);
        let p_des = (d_in.w * (d_out.enthalpy(table) - d_in.enthalpy(table))).max(1.0);
        let power = m.add_var(
            VariableDescriptor::new(format!("{name}.P"), p_des, p_des)
                .bounds(0.0, 1e10)
                .unit("W"),
        );

        m.eq_alias(format!("{name}.flow"), outlet.w, inlet.w, Phase::Both);
        for i in 0..table.len() {
            m.eq_alias(format!("{name}.comp[{i}]"), outlet.x[i], inlet.x[i], Phase::Both);
        }
        m.eq_linear(
            format!("{name}.pressureRise"),
            vec![(outlet.p, 1.0), (inlet.p, -self.pressure_ratio)],
            0.0,
            Phase::Both,
        );
        {
            let tab = table.clone();
            let eta = self.eta_is;
            let pr = self.pressure_ratio;
            let (h_in, h_out) = (inlet.h, outlet.h);
            let x_in = inlet.x.clone();
            let mut inc = vec![h_out, h_in];
            inc.extend(x_in.iter().copied());
            m.eq_general(
                format!("{name}.compression"),
                inc,
                d_in.enthalpy(table).abs().max(1e5),
                Phase::Both,
                Arc::new(move |ws, _| {
                    let t_in = t_from_h_ws(&tab, ws, ws[h_in.0], &x_in);
                    if t_in <= 0.0 {
                        return f64::NAN;
                    }
                    let kappa = r_mix_ws(&tab, ws, &x_in) / cp_mix_ws(&tab, ws, &x_in);
                    let t_is = t_in * pr.powf(kappa);
                    let h_is = h_mix_ws(&tab, ws, t_is, &x_in);
                    ws[h_out.0] - (ws[h_in.0] + (h_is - ws[h_in.0]) / eta)
                }),
            );
        }
        {
            let (w, h_in, h_out, p_var) = (inlet.w, inlet.h, outlet.h, power);
            m.eq_general(
                format!("{name}.power"),
                vec![power, w, h_in, h_out],
                p_des,
                Phase::Both,
                Arc::new(move |ws, _| ws[p_var.0] - ws[w.0] * (ws[h_out.0] - ws[h_in.0])),
            );
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("in".into(), inlet);
        io.outlets.insert("out".into(), outlet);
        io.signals.insert("P".into(), power);
        io
    }
}
