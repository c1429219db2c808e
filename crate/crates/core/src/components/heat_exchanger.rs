//! Finite-volume heat exchanger: series modules of discretization volumes on
//! each side, wall heat storage in between, one pressure state per module
//! with losses lumped at the module boundaries.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{EqShape, Model, Phase, VarId, VarKind, VariableDescriptor};
use crate::media::SpeciesTable;

use super::common::{
    blended_equation, build_volume, fluid_port, rho_ws, t_from_h_ws, ComponentIo, PortVars,
    StreamDesign, VolumeDesign, VolumeInlet, VolumeSpec, VolumeVars,
};

/// Eq.-(9) convective heat transfer coefficient from on-design data:
/// gamma = gamma_nom (w/w_nom)^0.8 (p/p_nom)^0.5.
pub fn heat_transfer_coefficient(gamma_nom: f64, w: f64, w_nom: f64, p: f64, p_nom: f64) -> f64 {
    if w < 0.0 || p < 0.0 {
        return f64::NAN;
    }
    gamma_nom * (w / w_nom).powf(0.8) * (p / p_nom).powf(0.5)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HxSideParams {
    pub modules: usize,
    pub volumes_per_module: usize,
    /// Gas volume per discretization cell, m3.
    pub cell_volume: f64,
    /// Heat transfer surface per cell, m2.
    pub cell_area: f64,
    pub gamma_nom: f64,
    pub w_nom: f64,
    pub p_nom: f64,
    /// Friction loss per module at design, Pa.
    pub dp_nom_per_module: f64,
    pub rho_nom: f64,
    pub design_in: StreamDesign,
    pub design_out: StreamDesign,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HxParams {
    pub hot: HxSideParams,
    pub cold: HxSideParams,
    /// Wall thermal capacitance per cell pair, J/K.
    pub wall_heat_capacity: f64,
}

struct SideBuild {
    inlet: PortVars,
    outlet: PortVars,
    volumes: Vec<VolumeVars>,
    heat: Vec<VarId>,
}

#[allow(clippy::too_many_arguments)]
fn build_side(
    m: &mut Model,
    name: &str,
    params: &HxSideParams,
    table: &Arc<SpeciesTable>,
    wall_for_volume: &[VarId],
) -> SideBuild {
    let n_total = params.modules * params.volumes_per_module;
    let d_in = &params.design_in;
    let d_out = &params.design_out;
    let inlet = fluid_port(m, &format!("{name}.in"), d_in, table);
    let outlet = fluid_port(m, &format!("{name}.out"), d_out, table);

    let t_at = |k: usize| {
        let f = (k as f64 + 0.5) / n_total as f64;
        d_in.t + (d_out.t - d_in.t) * f
    };

    let mut volumes: Vec<VolumeVars> = Vec::with_capacity(n_total);
    let mut heat: Vec<VarId> = Vec::with_capacity(n_total);
    let mut p_modules: Vec<VarId> = Vec::with_capacity(params.modules);

    for mm in 0..params.modules {
        let p_des = d_in.p - params.dp_nom_per_module * (mm as f64 + 1.0);
        let (p_mod, der_p) = m.add_state(
            VariableDescriptor::new(format!("{name}.m{mm}.p"), d_in.p, p_des)
                .bounds(1e2, 1e9)
                .kind(VarKind::Pressure)
                .unit("Pa"),
            d_in.p / 100.0,
        );
        // lumped friction at the module inlet boundary, Eq. (29) blended
        // against the quadratic Darcy-Weisbach law
        let (p_up, w_up, h_up, x_up): (VarId, VarId, VarId, Vec<VarId>) = if mm == 0 {
            (inlet.p, inlet.w, inlet.h, inlet.x.clone())
        } else {
            let prev = &volumes[mm * params.volumes_per_module - 1];
            (p_modules[mm - 1], prev.w_out, prev.h, prev.x.clone())
        };
        {
            let tab = table.clone();
            let (dp_nom, w_nom, rho_nom) =
                (params.dp_nom_per_module, params.w_nom, params.rho_nom);
            let (pm, pu, wu, hu) = (p_mod, p_up, w_up, h_up);
            let xu = x_up.clone();
            let mut inc_actual = vec![p_mod, p_up, w_up, h_up];
            inc_actual.extend(xu.iter().copied());
            m.add_eq(blended_equation(
                format!("{name}.m{mm}.friction"),
                Arc::new(move |ws, lam| {
                    let dp = crate::eqsys::blend_lazy(
                        lam,
                        || {
                            let t = t_from_h_ws(&tab, ws, ws[hu.0], &xu);
                            let rho = rho_ws(&tab, ws, ws[pu.0], t, &xu);
                            dp_nom * (ws[wu.0] / w_nom).powi(2) * (rho_nom / rho)
                        },
                        || dp_nom / w_nom * ws[wu.0],
                    );
                    ws[pm.0] - (ws[pu.0] - dp)
                }),
                inc_actual,
                vec![p_mod, p_up, w_up],
                EqShape::Linear {
                    terms: vec![
                        (p_mod, 1.0),
                        (p_up, -1.0),
                        (w_up, params.dp_nom_per_module / params.w_nom),
                    ],
                    rhs: 0.0,
                },
                params.dp_nom_per_module.max(1.0),
                Phase::Both,
            ));
        }

        for vv in 0..params.volumes_per_module {
            let k = mm * params.volumes_per_module + vv;
            let vol_inlet = if k == 0 {
                VolumeInlet {
                    w: inlet.w,
                    h: inlet.h,
                    x: inlet.x.clone(),
                }
            } else {
                let prev = &volumes[k - 1];
                VolumeInlet {
                    w: prev.w_out,
                    h: prev.h,
                    x: prev.x.clone(),
                }
            };
            let q_des = params.gamma_nom * params.cell_area * 30.0;
            let q = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.Q"), q_des.max(1.0), 0.0)
                    .bounds(-1e9, 1e9)
                    .unit("W"),
            );
            let gamma = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.gamma"), params.gamma_nom, params.gamma_nom)
                    .bounds(0.0, 1e7)
                    .unit("W/(m2.K)"),
            );
            let vol = build_volume(
                m,
                VolumeSpec {
                    name: format!("{name}.v{k}"),
                    volume: params.cell_volume,
                    inlet: vol_inlet.clone(),
                    pressure: p_mod,
                    der_pressure: der_p,
                    design: VolumeDesign {
                        t: t_at(k),
                        x: d_in.x.clone(),
                        w: d_in.w,
                        p: p_des,
                    },
                    reacting: false,
                    heat: Some(q),
                    mass_source: vec![],
                    species_sources: vec![],
                    energy_extra: None,
                    table,
                },
            );
            // Eq. (8): Q = gamma S (T_wall - T)
            {
                let (qv, gv, twall, tv) = (q, gamma, wall_for_volume[k], vol.t);
                let area = params.cell_area;
                m.eq_general(
                    format!("{name}.v{k}.convection"),
                    vec![q, gamma, wall_for_volume[k], vol.t],
                    q_des.max(1.0),
                    Phase::Both,
                    Arc::new(move |ws, _| {
                        ws[qv.0] - ws[gv.0] * area * (ws[twall.0] - ws[tv.0])
                    }),
                );
            }
            // Eq. (9): heat transfer coefficient from on-design data
            {
                let (gv, wv, pv) = (gamma, vol_inlet.w, p_mod);
                let (g_nom, w_nom, p_nom) = (params.gamma_nom, params.w_nom, params.p_nom);
                m.eq_general(
                    format!("{name}.v{k}.heatTransfer"),
                    vec![gamma, vol_inlet.w, p_mod],
                    params.gamma_nom,
                    Phase::Both,
                    Arc::new(move |ws, _| {
                        ws[gv.0] - heat_transfer_coefficient(g_nom, ws[wv.0], w_nom, ws[pv.0], p_nom)
                    }),
                );
            }
            heat.push(q);
            volumes.push(vol);
        }
        p_modules.push(p_mod);
    }

    // outlet port couples to the last volume and the last module pressure
    let last = volumes.last().unwrap();
    m.eq_alias(format!("{name}.out.p_link"), outlet.p, *p_modules.last().unwrap(), Phase::Both);
    m.eq_alias(format!("{name}.out.w_link"), outlet.w, last.w_out, Phase::Both);
    m.eq_alias(format!("{name}.out.h_link"), outlet.h, last.h, Phase::Both);
    for i in 0..table.len() {
        m.eq_alias(format!("{name}.out.x_link[{i}]"), outlet.x[i], last.x[i], Phase::Both);
    }

    SideBuild {
        inlet,
        outlet,
        volumes,
        heat,
    }
}

impl HxParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let n_hot = self.hot.modules * self.hot.volumes_per_module;
        let n_cold = self.cold.modules * self.cold.volumes_per_module;
        assert_eq!(n_hot, n_cold, "{name}: hot and cold sides must have matching volume counts");
        let n = n_hot;

        // wall temperature states, one per counterflow volume pair
        let mut wall_ts = Vec::with_capacity(n);
        for k in 0..n {
            let f = (k as f64 + 0.5) / n as f64;
            let t_hot = self.hot.design_in.t + (self.hot.design_out.t - self.hot.design_in.t) * f;
            let fc = 1.0 - f;
            let t_cold =
                self.cold.design_in.t + (self.cold.design_out.t - self.cold.design_in.t) * fc;
            let t_wall_des = 0.5 * (t_hot + t_cold);
            let (tw, _) = m.add_state(
                VariableDescriptor::new(format!("{name}.wall{k}.T"), t_wall_des, t_wall_des)
                    .bounds(200.0, 3500.0)
                    .kind(VarKind::Temperature)
                    .unit("K"),
                t_wall_des / 100.0,
            );
            wall_ts.push(tw);
        }

        let hot = build_side(m, &format!("{name}.hot"), &self.hot, table, &wall_ts);
        let cold_walls: Vec<VarId> = (0..n).map(|k| wall_ts[n - 1 - k]).collect();
        let cold = build_side(m, &format!("{name}.cold"), &self.cold, table, &cold_walls);

        // wall storage: C dT_wall/dt = -(Q_hot + Q_cold)
        for k in 0..n {
            let der_tw = m
                .states
                .iter()
                .find(|&&(s, _)| s == wall_ts[k])
                .map(|&(_, d)| d)
                .unwrap();
            m.eq_linear(
                format!("{name}.wall{k}.storage"),
                vec![
                    (der_tw, self.wall_heat_capacity),
                    (hot.heat[k], 1.0),
                    (cold.heat[n - 1 - k], 1.0),
                ],
                0.0,
                Phase::Both,
            );
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("hot_in".into(), hot.inlet);
        io.outlets.insert("hot_out".into(), hot.outlet);
        io.inlets.insert("cold_in".into(), cold.inlet);
        io.outlets.insert("cold_out".into(), cold.outlet);
        io.signals
            .insert("T_hot_out".into(), hot.volumes.last().unwrap().t);
        io.signals
            .insert("T_cold_out".into(), cold.volumes.last().unwrap().t);
        io
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_at_nominal_point() {
        assert_relative_eq!(
            heat_transfer_coefficient(250.0, 2.0, 2.0, 3e5, 3e5),
            250.0,
            max_relative = 1e-13
        );
    }

    /// Hand evaluation of Eq. (9): w = 0.5 w_nom at nominal pressure gives
    /// gamma = gamma_nom 0.5^0.8 = 0.5743491774985174 gamma_nom.
    #[test]
    fn gamma_at_half_flow() {
        assert_relative_eq!(
            heat_transfer_coefficient(1.0, 1.0, 2.0, 3e5, 3e5),
            0.5743491774985174,
            max_relative = 1e-13
        );
    }
}
