//! Flow sources and pressure sinks at the plant boundary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{Model, Phase, VarKind, VariableDescriptor};
use crate::media::SpeciesTable;

use super::common::{fluid_port, ComponentIo, StreamDesign};

/// How a source's mass flow is prescribed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFlow {
    /// Constant flow rate, kg/s.
    Fixed(f64),
    /// Commanded by a boundary input block; exposes the `w_cmd` signal.
    Signal,
}

/// Flow source: prescribes w (directly or via signal), temperature, and
/// composition. Pressure is determined by the downstream network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceParams {
    pub flow: SourceFlow,
    pub design: StreamDesign,
}

impl SourceParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let outlet = fluid_port(m, &format!("{name}.out"), &self.design, table);
        let h_des = self.design.enthalpy(table);
        m.eq_fix(format!("{name}.h"), outlet.h, h_des, Phase::Both);
        for i in 0..table.len() {
            m.eq_fix(
                format!("{name}.X[{i}]"),
                outlet.x[i],
                self.design.x[i],
                Phase::Both,
            );
        }
        let mut io = ComponentIo::default();
        match &self.flow {
            SourceFlow::Fixed(w) => {
                m.eq_fix(format!("{name}.w"), outlet.w, *w, Phase::Both);
            }
            SourceFlow::Signal => {
                let cmd = m.add_var(
                    VariableDescriptor::new(format!("{name}.w_cmd"), self.design.w.max(1e-6), self.design.w)
                        .bounds(0.0, 1e4)
                        .kind(VarKind::MassFlow)
                        .unit("kg/s"),
                );
                m.eq_alias(format!("{name}.w"), outlet.w, cmd, Phase::Both);
                io.signals.insert("w_cmd".into(), cmd);
            }
        }
        io.signals.insert("w".into(), outlet.w);
        io.signals.insert("h".into(), outlet.h);
        io.outlets.insert("out".into(), outlet);
        io
    }
}

/// Pressure sink: fixes the boundary pressure and absorbs the incoming flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkParams {
    pub p: f64,
    pub design: StreamDesign,
}

impl SinkParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let inlet = fluid_port(m, &format!("{name}.in"), &self.design, table);
        m.eq_fix(format!("{name}.p"), inlet.p, self.p, Phase::Both);
        let mut io = ComponentIo::default();
        io.signals.insert("w".into(), inlet.w);
        io.signals.insert("h".into(), inlet.h);
        io.inlets.insert("in".into(), inlet);
        io
    }
}
