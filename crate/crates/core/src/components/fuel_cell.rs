//! 1D solid-oxide fuel cell: anode and cathode channels with internal
//! reforming and water-gas shift, a PEN thermal node per volume, and the
//! polarization chain (open-circuit potential, ohmic, concentration, and
//! activation losses) coupling all volumes through the shared cell voltage.
//!
//! At lambda = 0 the polarization collapses to a linear E = a I + b
//! relation, temperatures inside the electrochemical relations are replaced
//! by the nominal value, and triple-phase-boundary and channel partial
//! pressures are held at design constants, decoupling the electrical,
//! chemical, and thermal parts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{blend_lazy, EqShape, Model, Phase, VarId, VarKind, VariableDescriptor};
use crate::media::{
    delta_g, equilibrium_constant, species, ReactionParams, SpeciesTable, FARADAY, R_GAS,
};

use super::common::{
    blended_equation, build_volume, fluid_port, rho_ws, t_from_h_ws, ComponentIo, PortVars,
    StreamDesign, VolumeDesign, VolumeInlet, VolumeSpec, VolumeVars,
};

const P_REF: f64 = 101_325.0;

/// Explicit activation overpotential, the closed form of the Butler-Volmer
/// relation for alpha = 1/2:
/// e = R T/(alpha n F) ln(j/(2 j0) + sqrt((j/(2 j0))^2 + 1)).
pub fn activation_loss_explicit(j: f64, j0: f64, t: f64, alpha: f64, n: f64) -> f64 {
    let r = j / (2.0 * j0);
    R_GAS * t / (alpha * n * FARADAY) * (r + (r * r + 1.0).sqrt()).ln()
}

/// Linearized activation loss at a fixed nominal temperature, tangent to the
/// explicit form at j = 0: e = R T_nom/(alpha n F) j/(2 j0).
pub fn activation_loss_linearized(j: f64, j0: f64, t_nom: f64, alpha: f64, n: f64) -> f64 {
    R_GAS * t_nom / (alpha * n * FARADAY) * j / (2.0 * j0)
}

/// Implicit Butler-Volmer residual in the activation overpotential:
/// j - j0 [exp(alpha n F/(R T) e) - exp(-(1-alpha) n F/(R T) e)].
pub fn butler_volmer_residual(j: f64, j0: f64, e_act: f64, t: f64, alpha: f64, n: f64) -> f64 {
    let a = alpha * n * FARADAY / (R_GAS * t);
    let b = (1.0 - alpha) * n * FARADAY / (R_GAS * t);
    j - j0 * ((a * e_act).exp() - (-b * e_act).exp())
}

/// Exchange current density, Eq.-(23) form:
/// j0 = R T_pen/(n F) k exp(-E_a/(R T_pen)).
pub fn exchange_current(t_pen: f64, k: f64, ea: f64, n: f64) -> f64 {
    R_GAS * t_pen / (n * FARADAY) * k * (-ea / (R_GAS * t_pen)).exp()
}

/// Open-circuit potential, Eq.-(19) form.
pub fn open_circuit_potential(
    t: f64,
    p_h2: f64,
    p_h2o: f64,
    p_o2: f64,
    n: f64,
    dg_hor: f64,
) -> f64 {
    if p_h2 <= 0.0 || p_h2o <= 0.0 || p_o2 <= 0.0 {
        return f64::NAN;
    }
    -dg_hor / (n * FARADAY)
        - R_GAS * t / (n * FARADAY) * (p_h2o / (p_h2 * (p_o2 / P_REF).sqrt())).ln()
}

/// Concentration loss, Eq.-(21) form.
pub fn concentration_loss(
    t: f64,
    p_h2o_tpb: f64,
    p_h2o: f64,
    p_h2: f64,
    p_h2_tpb: f64,
    p_o2: f64,
    p_o2_tpb: f64,
) -> f64 {
    if p_h2o_tpb <= 0.0 || p_h2_tpb <= 0.0 || p_o2_tpb <= 0.0 {
        return f64::NAN;
    }
    R_GAS * t / (2.0 * FARADAY)
        * ((p_h2o_tpb / p_h2o * p_h2 / p_h2_tpb).ln() + 0.5 * (p_o2 / p_o2_tpb).ln())
}

/// Triple-phase-boundary pressure, Eq.-(24) form. `sign` is +1 for reactants
/// (pressure falls with current) and -1 for the product water.
pub fn tpb_pressure(p_el: f64, p_channel: f64, t: f64, lump: f64, j: f64, sign: f64) -> f64 {
    p_el - (p_el - p_channel) * (sign * R_GAS * t * lump / (4.0 * FARADAY) * j).exp()
}

/// Per-volume design data from the plant design calculation, used for start
/// values and the lambda = 0 freeze constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuelCellVolumeDesign {
    pub t_anode: f64,
    pub t_cathode: f64,
    pub t_pen: f64,
    pub x_anode: Vec<f64>,
    pub x_cathode: Vec<f64>,
    /// Design current density, A/m2.
    pub j: f64,
    /// Design reforming / shift rates, mol/s per volume.
    pub r_ref: f64,
    pub r_wgs: f64,
    pub w_anode: f64,
    pub w_cathode: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuelCellParams {
    pub n_volumes: usize,
    /// Electro-active area per volume (all parallel channels), m2.
    pub area_per_volume: f64,
    pub channel_volume_anode: f64,
    pub channel_volume_cathode: f64,
    /// Convective exchange area per volume and side, m2.
    pub pen_area_per_volume: f64,
    /// PEN + interconnect thermal capacitance per volume, J/K.
    pub pen_heat_capacity: f64,
    /// Area-specific ohmic resistance, Ohm m2.
    pub r_ohm: f64,
    pub k_el_anode: f64,
    pub k_el_cathode: f64,
    pub ea_el_anode: f64,
    pub ea_el_cathode: f64,
    pub alpha: f64,
    pub n_electrons: f64,
    /// Electrode diffusion lumps tau/(D_eff p) per species.
    pub diff_lump_h2: f64,
    pub diff_lump_h2o: f64,
    pub diff_lump_o2: f64,
    pub t_nom: f64,
    pub gamma_nom_anode: f64,
    pub gamma_nom_cathode: f64,
    pub dp_nom_anode: f64,
    pub dp_nom_cathode: f64,
    /// Galvanostatic total-current setpoint, A.
    pub i_total: f64,
    /// Simplified polarization E = a I + b; a < 0, b > 0.
    pub polarization_a: f64,
    pub polarization_b: f64,
    pub k0_reforming: f64,
    pub ea_reforming: f64,
    pub k0_shift: f64,
    pub ea_shift: f64,
    pub design_in_anode: StreamDesign,
    pub design_in_cathode: StreamDesign,
    pub volume_design: Vec<FuelCellVolumeDesign>,
}

/// Partial pressure of a species from workspace composition slots.
fn partial_pressure(table: &SpeciesTable, ws: &[f64], x: &[VarId], p: f64, idx: usize) -> f64 {
    let mut n_tot = 0.0;
    for (i, xi) in x.iter().enumerate() {
        n_tot += ws[xi.0] / table.species[i].molar_mass;
    }
    if n_tot <= 0.0 {
        return f64::NAN;
    }
    (ws[x[idx].0] / table.species[idx].molar_mass) / n_tot * p
}

fn partial_pressure_design(table: &SpeciesTable, x: &[f64], p: f64, idx: usize) -> f64 {
    table.mole_fractions(x)[idx] * p
}

impl FuelCellParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        assert!(self.polarization_a < 0.0, "{name}: polarization slope a must be negative");
        assert!(self.polarization_b > 0.0, "{name}: polarization intercept b must be positive");
        assert!(self.alpha > 0.0 && self.alpha < 1.0);
        assert_eq!(self.volume_design.len(), self.n_volumes);
        let nv = self.n_volumes;
        let s = table.len();
        let (n_el, alpha) = (self.n_electrons, self.alpha);

        let reforming = ReactionParams::from_table(
            "reforming",
            table,
            vec![
                (species::CH4, -1.0),
                (species::H2O, -1.0),
                (species::H2, 3.0),
                (species::CO, 1.0),
            ],
            self.k0_reforming,
            self.ea_reforming,
            (species::CH4, species::H2O),
        );
        let shift = ReactionParams::from_table(
            "water-gas-shift",
            table,
            vec![
                (species::CO, -1.0),
                (species::H2O, -1.0),
                (species::H2, 1.0),
                (species::CO2, 1.0),
            ],
            self.k0_shift,
            self.ea_shift,
            (species::CO, species::H2O),
        );
        let hydrogen_ox = ReactionParams::from_table(
            "hydrogen-oxidation",
            table,
            vec![
                (species::H2, -1.0),
                (species::O2, -0.5),
                (species::H2O, 1.0),
            ],
            1.0,
            0.0,
            (species::H2, species::O2),
        );

        let da = &self.design_in_anode;
        let dc = &self.design_in_cathode;
        let a_in = fluid_port(m, &format!("{name}.a_in"), da, table);
        let c_in = fluid_port(m, &format!("{name}.c_in"), dc, table);
        let last_vd = self.volume_design.last().unwrap();
        let a_out_design = StreamDesign {
            p: da.p - self.dp_nom_anode,
            t: last_vd.t_anode,
            w: last_vd.w_anode,
            x: last_vd.x_anode.clone(),
        };
        let c_out_design = StreamDesign {
            p: dc.p - self.dp_nom_cathode,
            t: last_vd.t_cathode,
            w: last_vd.w_cathode,
            x: last_vd.x_cathode.clone(),
        };
        let a_out = fluid_port(m, &format!("{name}.a_out"), &a_out_design, table);
        let c_out = fluid_port(m, &format!("{name}.c_out"), &c_out_design, table);

        // cell-level electrical variables
        let e_des = self.polarization_a * self.i_total + self.polarization_b;
        let e_cell = m.add_var(
            VariableDescriptor::new(format!("{name}.E"), 1.0, e_des)
                .bounds(1e-3, 2.0)
                .unit("V"),
        );
        let i_total = m.add_var(
            VariableDescriptor::new(format!("{name}.I"), self.i_total.max(1.0), self.i_total)
                .bounds(0.0, 1e7)
                .kind(VarKind::Current)
                .unit("A"),
        );
        let i_set = m.add_var(
            VariableDescriptor::new(format!("{name}.I_set"), self.i_total.max(1.0), self.i_total)
                .role(crate::eqsys::VarRole::FixedParameter)
                .unit("A"),
        );
        m.eq_alias(format!("{name}.galvanostatic"), i_total, i_set, Phase::Both);
        let p_el_des = (e_des * self.i_total).max(1.0);
        let p_el = m.add_var(
            VariableDescriptor::new(format!("{name}.P_el"), p_el_des, p_el_des)
                .bounds(0.0, 1e9)
                .unit("W"),
        );
        {
            let (pe, ev, iv) = (p_el, e_cell, i_total);
            m.eq_general(
                format!("{name}.electricPower"),
                vec![p_el, e_cell, i_total],
                p_el_des,
                Phase::Both,
                Arc::new(move |ws, _| ws[pe.0] - ws[ev.0] * ws[iv.0]),
            );
        }

        // channel module pressures with inlet friction
        let module_pressure = |m: &mut Model, side: &str, d: &StreamDesign, dp_nom: f64| {
            let (p_mod, der_p) = m.add_state(
                VariableDescriptor::new(format!("{name}.{side}.p"), d.p, d.p - dp_nom)
                    .bounds(1e2, 1e9)
                    .kind(VarKind::Pressure)
                    .unit("Pa"),
                d.p / 100.0,
            );
            (p_mod, der_p)
        };
        let (p_a, der_p_a) = module_pressure(m, "anode", da, self.dp_nom_anode);
        let (p_c, der_p_c) = module_pressure(m, "cathode", dc, self.dp_nom_cathode);
        let friction = |m: &mut Model, side: &str, port: &PortVars, p_mod: VarId, dp_nom: f64, d: &StreamDesign| {
            let tab = table.clone();
            let (pm, pu, wu, hu) = (p_mod, port.p, port.w, port.h);
            let xu = port.x.clone();
            let w_nom = d.w;
            let rho_nom = d.p / (table.r_mix(&d.x) * d.t);
            let mut inc_actual = vec![p_mod, port.p, port.w, port.h];
            inc_actual.extend(xu.iter().copied());
            m.add_eq(blended_equation(
                format!("{name}.{side}.friction"),
                Arc::new(move |ws, lam| {
                    let dp = blend_lazy(
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
                vec![p_mod, port.p, port.w],
                EqShape::Linear {
                    terms: vec![(p_mod, 1.0), (port.p, -1.0), (port.w, dp_nom / w_nom)],
                    rhs: 0.0,
                },
                dp_nom.max(1.0),
                Phase::Both,
            ));
        };
        friction(m, "anode", &a_in, p_a, self.dp_nom_anode, da);
        friction(m, "cathode", &c_in, p_c, self.dp_nom_cathode, dc);

        let ot_mass = table.species[species::H2O].molar_mass - table.species[species::H2].molar_mass;
        let c_el = self.area_per_volume / (2.0 * FARADAY); // mol H2 per (A/m2)
        let m_of = |i: usize| table.species[i].molar_mass;

        let mut anode_vols: Vec<VolumeVars> = Vec::with_capacity(nv);
        let mut cathode_vols: Vec<VolumeVars> = Vec::with_capacity(nv);
        let mut j_vars: Vec<VarId> = Vec::with_capacity(nv);

        for k in 0..nv {
            let vd = &self.volume_design[k];
            // PEN thermal node
            let (t_pen, der_t_pen) = m.add_state(
                VariableDescriptor::new(format!("{name}.v{k}.T_pen"), vd.t_pen, vd.t_pen)
                    .bounds(200.0, 3500.0)
                    .kind(VarKind::Temperature)
                    .unit("K"),
                vd.t_pen / 100.0,
            );
            let q_des = (self.gamma_nom_anode * self.pen_area_per_volume * 30.0).max(1.0);
            let q_a = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.Q_a"), q_des, 0.0)
                    .bounds(-1e9, 1e9)
                    .unit("W"),
            );
            let q_c = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.Q_c"), q_des, 0.0)
                    .bounds(-1e9, 1e9)
                    .unit("W"),
            );
            let gamma_a = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.gamma_a"), self.gamma_nom_anode, self.gamma_nom_anode)
                    .bounds(0.0, 1e7)
                    .unit("W/(m2.K)"),
            );
            let gamma_c = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.gamma_c"), self.gamma_nom_cathode, self.gamma_nom_cathode)
                    .bounds(0.0, 1e7)
                    .unit("W/(m2.K)"),
            );
            // reaction rates and current density
            let r_ref = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.r_ref"), vd.r_ref.abs().max(1e-4), vd.r_ref)
                    .bounds(-1e3, 1e3)
                    .unit("mol/s"),
            );
            let r_wgs = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.r_wgs"), vd.r_wgs.abs().max(1e-4), vd.r_wgs)
                    .bounds(-1e3, 1e3)
                    .unit("mol/s"),
            );
            let j = m.add_var(
                VariableDescriptor::new(format!("{name}.v{k}.j"), vd.j.abs().max(1.0), vd.j)
                    .bounds(0.0, 1e6)
                    .kind(VarKind::Current)
                    .unit("A/m2"),
            );
            j_vars.push(j);

            // anode channel volume with reforming, shift, and electro-oxidation
            let anode_inlet = if k == 0 {
                VolumeInlet { w: a_in.w, h: a_in.h, x: a_in.x.clone() }
            } else {
                let prev = &anode_vols[k - 1];
                VolumeInlet { w: prev.w_out, h: prev.h, x: prev.x.clone() }
            };
            let mut species_src: Vec<Vec<(VarId, f64)>> = vec![vec![]; s - 1];
            species_src[species::CH4] = vec![(r_ref, -m_of(species::CH4))];
            species_src[species::H2] = vec![
                (r_ref, 3.0 * m_of(species::H2)),
                (r_wgs, m_of(species::H2)),
                (j, -m_of(species::H2) * c_el),
            ];
            species_src[species::H2O] = vec![
                (r_ref, -m_of(species::H2O)),
                (r_wgs, -m_of(species::H2O)),
                (j, m_of(species::H2O) * c_el),
            ];
            species_src[species::CO] = vec![(r_ref, m_of(species::CO)), (r_wgs, -m_of(species::CO))];
            species_src[species::CO2] = vec![(r_wgs, m_of(species::CO2))];
            let energy_extra_a: (Vec<VarId>, crate::eqsys::ExprFn) = {
                let tab = table.clone();
                let (jv, tp, ev) = (j, t_pen, e_cell);
                let area = self.area_per_volume;
                (
                    vec![j, t_pen, e_cell],
                    Arc::new(move |ws: &[f64]| {
                        let sp = &tab.species[species::O2];
                        let h_o2 = sp.h_form + sp.cp * (ws[tp.0] - crate::media::T_REF);
                        ot_mass * c_el * ws[jv.0] * h_o2 - ws[ev.0] * area * ws[jv.0]
                    }),
                )
            };
            let vol_a = build_volume(
                m,
                VolumeSpec {
                    name: format!("{name}.v{k}.anode"),
                    volume: self.channel_volume_anode,
                    inlet: anode_inlet.clone(),
                    pressure: p_a,
                    der_pressure: der_p_a,
                    design: VolumeDesign {
                        t: vd.t_anode,
                        x: vd.x_anode.clone(),
                        w: vd.w_anode,
                        p: da.p - self.dp_nom_anode,
                    },
                    reacting: true,
                    heat: Some(q_a),
                    mass_source: vec![(j, ot_mass * c_el)],
                    species_sources: species_src,
                    energy_extra: Some(energy_extra_a),
                    table,
                },
            );

            // cathode channel volume: oxygen sink
            let cathode_inlet = if k == 0 {
                VolumeInlet { w: c_in.w, h: c_in.h, x: c_in.x.clone() }
            } else {
                let prev = &cathode_vols[k - 1];
                VolumeInlet { w: prev.w_out, h: prev.h, x: prev.x.clone() }
            };
            let mut species_src_c: Vec<Vec<(VarId, f64)>> = vec![vec![]; s - 1];
            species_src_c[species::O2] = vec![(j, -ot_mass * c_el)];
            let energy_extra_c: (Vec<VarId>, crate::eqsys::ExprFn) = {
                let tab = table.clone();
                let (jv, tp) = (j, t_pen);
                (
                    vec![j, t_pen],
                    Arc::new(move |ws: &[f64]| {
                        let sp = &tab.species[species::O2];
                        let h_o2 = sp.h_form + sp.cp * (ws[tp.0] - crate::media::T_REF);
                        -ot_mass * c_el * ws[jv.0] * h_o2
                    }),
                )
            };
            let vol_c = build_volume(
                m,
                VolumeSpec {
                    name: format!("{name}.v{k}.cathode"),
                    volume: self.channel_volume_cathode,
                    inlet: cathode_inlet.clone(),
                    pressure: p_c,
                    der_pressure: der_p_c,
                    design: VolumeDesign {
                        t: vd.t_cathode,
                        x: vd.x_cathode.clone(),
                        w: vd.w_cathode,
                        p: dc.p - self.dp_nom_cathode,
                    },
                    reacting: true,
                    heat: Some(q_c),
                    mass_source: vec![(j, -ot_mass * c_el)],
                    species_sources: species_src_c,
                    energy_extra: Some(energy_extra_c),
                    table,
                },
            );

            // convection and PEN storage
            for (side, q, gamma, vol_t, area, g_nom, w_ref, w_nom, p_mod, p_nom) in [
                (
                    "a", q_a, gamma_a, vol_a.t, self.pen_area_per_volume,
                    self.gamma_nom_anode, anode_inlet.w, da.w, p_a, da.p,
                ),
                (
                    "c", q_c, gamma_c, vol_c.t, self.pen_area_per_volume,
                    self.gamma_nom_cathode, cathode_inlet.w, dc.w, p_c, dc.p,
                ),
            ] {
                let (qv, gv, tp, tv) = (q, gamma, t_pen, vol_t);
                m.eq_general(
                    format!("{name}.v{k}.convection_{side}"),
                    vec![q, gamma, t_pen, vol_t],
                    q_des,
                    Phase::Both,
                    Arc::new(move |ws, _| ws[qv.0] - ws[gv.0] * area * (ws[tp.0] - ws[tv.0])),
                );
                let (gv, wv, pv) = (gamma, w_ref, p_mod);
                m.eq_general(
                    format!("{name}.v{k}.heatTransfer_{side}"),
                    vec![gamma, w_ref, p_mod],
                    g_nom,
                    Phase::Both,
                    Arc::new(move |ws, _| {
                        ws[gv.0]
                            - super::heat_exchanger::heat_transfer_coefficient(
                                g_nom, ws[wv.0], w_nom, ws[pv.0], p_nom,
                            )
                    }),
                );
            }
            m.eq_linear(
                format!("{name}.v{k}.penStorage"),
                vec![(der_t_pen, self.pen_heat_capacity), (q_a, 1.0), (q_c, 1.0)],
                0.0,
                Phase::Both,
            );

            // ---- electrochemistry ----
            let p_a_des = da.p - self.dp_nom_anode;
            let p_c_des = dc.p - self.dp_nom_cathode;
            let ph2_des = partial_pressure_design(table, &vd.x_anode, p_a_des, species::H2);
            let ph2o_des = partial_pressure_design(table, &vd.x_anode, p_a_des, species::H2O);
            let po2_des = partial_pressure_design(table, &vd.x_cathode, p_c_des, species::O2);

            let j0_a_des = exchange_current(self.t_nom, self.k_el_anode, self.ea_el_anode, n_el);
            let j0_c_des = exchange_current(self.t_nom, self.k_el_cathode, self.ea_el_cathode, n_el);
            let tpb_h2_des = tpb_pressure(p_a_des, ph2_des, self.t_nom, self.diff_lump_h2, vd.j, 1.0);
            let tpb_h2o_des =
                tpb_pressure(p_a_des, ph2o_des, self.t_nom, self.diff_lump_h2o, vd.j, -1.0);
            let tpb_o2_des = tpb_pressure(p_c_des, po2_des, self.t_nom, self.diff_lump_o2, vd.j, 1.0);

            let mkvar = |m: &mut Model, tag: &str, nominal: f64, start: f64, lo: f64, hi: f64, unit: &str| {
                m.add_var(
                    VariableDescriptor::new(format!("{name}.v{k}.{tag}"), nominal, start)
                        .bounds(lo, hi)
                        .unit(unit),
                )
            };
            let e_ocp_des = open_circuit_potential(
                self.t_nom, ph2_des, ph2o_des, po2_des, n_el, delta_g(&hydrogen_ox, self.t_nom),
            );
            let e_ocp = mkvar(m, "E_ocp", 1.0, e_ocp_des, 0.0, 2.0, "V");
            let e_ohm = mkvar(m, "e_ohm", 0.1, self.r_ohm * vd.j, 0.0, 1.0, "V");
            let e_conc_des = concentration_loss(
                self.t_nom, tpb_h2o_des, ph2o_des, ph2_des, tpb_h2_des, po2_des, tpb_o2_des,
            );
            let e_conc = mkvar(m, "e_conc", 0.1, e_conc_des, -0.5, 1.0, "V");
            let e_act_a_des = activation_loss_explicit(vd.j, j0_a_des, self.t_nom, alpha, n_el);
            let e_act_c_des = activation_loss_explicit(vd.j, j0_c_des, self.t_nom, alpha, n_el);
            let e_act_a = mkvar(m, "e_act_a", 0.1, e_act_a_des, 0.0, 1.0, "V");
            let e_act_c = mkvar(m, "e_act_c", 0.1, e_act_c_des, 0.0, 1.0, "V");
            let j0_a = mkvar(m, "j0_a", j0_a_des.max(1.0), j0_a_des, 1e-9, 1e8, "A/m2");
            let j0_c = mkvar(m, "j0_c", j0_c_des.max(1.0), j0_c_des, 1e-9, 1e8, "A/m2");
            let p_tpb_h2 = mkvar(m, "p_tpb_H2", p_a_des, tpb_h2_des, 1e-6, 1e9, "Pa");
            let p_tpb_h2o = mkvar(m, "p_tpb_H2O", p_a_des, tpb_h2o_des, 1e-6, 1e9, "Pa");
            let p_tpb_o2 = mkvar(m, "p_tpb_O2", p_c_des, tpb_o2_des, 1e-6, 1e9, "Pa");

            // Eq. (23): exchange currents, T_pen frozen at T_nom at lambda = 0
            for (tag, var, kf, ea, des) in [
                ("j0_a", j0_a, self.k_el_anode, self.ea_el_anode, j0_a_des),
                ("j0_c", j0_c, self.k_el_cathode, self.ea_el_cathode, j0_c_des),
            ] {
                let (v, tp) = (var, t_pen);
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.{tag}"),
                    Arc::new(move |ws, lam| {
                        ws[v.0]
                            - blend_lazy(
                                lam,
                                || exchange_current(ws[tp.0], kf, ea, n_el),
                                || des,
                            )
                    }),
                    vec![var, t_pen],
                    vec![var],
                    EqShape::Linear { terms: vec![(var, 1.0)], rhs: des },
                    des.max(1.0),
                    Phase::Both,
                ));
            }

            // Eq. (24): TPB pressures, frozen at design at lambda = 0
            for (tag, var, lump, sign, p_mod, x_side, sp_idx, des, t_side) in [
                ("tpb_H2", p_tpb_h2, self.diff_lump_h2, 1.0, p_a, vol_a.x.clone(), species::H2, tpb_h2_des, vol_a.t),
                ("tpb_H2O", p_tpb_h2o, self.diff_lump_h2o, -1.0, p_a, vol_a.x.clone(), species::H2O, tpb_h2o_des, vol_a.t),
                ("tpb_O2", p_tpb_o2, self.diff_lump_o2, 1.0, p_c, vol_c.x.clone(), species::O2, tpb_o2_des, vol_c.t),
            ] {
                let tab = table.clone();
                let (v, jv, pm, tv) = (var, j, p_mod, t_side);
                let xs = x_side.clone();
                let mut inc = vec![var, j, p_mod, t_side];
                inc.extend(xs.iter().copied());
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.{tag}"),
                    Arc::new(move |ws, lam| {
                        ws[v.0]
                            - blend_lazy(
                                lam,
                                || {
                                    let p_ch = partial_pressure(&tab, ws, &xs, ws[pm.0], sp_idx);
                                    let val = tpb_pressure(
                                        ws[pm.0], p_ch, ws[tv.0], lump, ws[jv.0], sign,
                                    );
                                    if val <= 0.0 {
                                        // infeasible iterate: reactant starved
                                        f64::NAN
                                    } else {
                                        val
                                    }
                                },
                                || des,
                            )
                    }),
                    inc,
                    vec![var],
                    EqShape::Linear { terms: vec![(var, 1.0)], rhs: des },
                    des.abs().max(1e3),
                    Phase::Both,
                ));
            }

            // Eq. (19): open-circuit potential
            {
                let tab = table.clone();
                let hor = hydrogen_ox.clone();
                let (v, ta, pa_v, pc_v) = (e_ocp, vol_a.t, p_a, p_c);
                let xa = vol_a.x.clone();
                let xc = vol_c.x.clone();
                let mut inc = vec![e_ocp, vol_a.t, p_a, p_c];
                inc.extend(xa.iter().copied());
                inc.extend(xc.iter().copied());
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.ocp"),
                    Arc::new(move |ws, lam| {
                        ws[v.0]
                            - blend_lazy(
                                lam,
                                || {
                                    let ph2 = partial_pressure(&tab, ws, &xa, ws[pa_v.0], species::H2);
                                    let ph2o = partial_pressure(&tab, ws, &xa, ws[pa_v.0], species::H2O);
                                    let po2 = partial_pressure(&tab, ws, &xc, ws[pc_v.0], species::O2);
                                    let t = ws[ta.0];
                                    open_circuit_potential(t, ph2, ph2o, po2, n_el, delta_g(&hor, t))
                                },
                                || e_ocp_des,
                            )
                    }),
                    inc,
                    vec![e_ocp],
                    EqShape::Linear { terms: vec![(e_ocp, 1.0)], rhs: e_ocp_des },
                    1.0,
                    Phase::Both,
                ));
            }

            // Eq. (20): ohmic loss, linear at every lambda
            m.eq_linear(
                format!("{name}.v{k}.ohmic"),
                vec![(e_ohm, 1.0), (j, -self.r_ohm)],
                0.0,
                Phase::Both,
            );

            // Eq. (21): concentration loss
            {
                let (v, ta) = (e_conc, vol_a.t);
                let tab = table.clone();
                let (th2o, th2, to2) = (p_tpb_h2o, p_tpb_h2, p_tpb_o2);
                let (pa_v, pc_v) = (p_a, p_c);
                let xa = vol_a.x.clone();
                let xc = vol_c.x.clone();
                let mut inc = vec![e_conc, vol_a.t, p_tpb_h2o, p_tpb_h2, p_tpb_o2, p_a, p_c];
                inc.extend(xa.iter().copied());
                inc.extend(xc.iter().copied());
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.concentration"),
                    Arc::new(move |ws, lam| {
                        ws[v.0]
                            - blend_lazy(
                                lam,
                                || {
                                    let ph2 = partial_pressure(&tab, ws, &xa, ws[pa_v.0], species::H2);
                                    let ph2o = partial_pressure(&tab, ws, &xa, ws[pa_v.0], species::H2O);
                                    let po2 = partial_pressure(&tab, ws, &xc, ws[pc_v.0], species::O2);
                                    concentration_loss(
                                        ws[ta.0], ws[th2o.0], ph2o, ph2, ws[th2.0], po2, ws[to2.0],
                                    )
                                },
                                || e_conc_des,
                            )
                    }),
                    inc,
                    vec![e_conc],
                    EqShape::Linear { terms: vec![(e_conc, 1.0)], rhs: e_conc_des },
                    1.0,
                    Phase::Both,
                ));
            }

            // Eq. (22) blended with the linearized Eq.-(27) form at lambda = 0
            for (tag, var, j0v, j0_des) in
                [("act_a", e_act_a, j0_a, j0_a_des), ("act_c", e_act_c, j0_c, j0_c_des)]
            {
                let (v, jv, tp) = (var, j, t_pen);
                let t_nom = self.t_nom;
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.{tag}"),
                    Arc::new(move |ws, lam| {
                        ws[v.0]
                            - blend_lazy(
                                lam,
                                || activation_loss_explicit(ws[jv.0], ws[j0v.0], ws[tp.0], alpha, n_el),
                                || activation_loss_linearized(ws[jv.0], j0_des, t_nom, alpha, n_el),
                            )
                    }),
                    vec![var, j, j0v, t_pen],
                    vec![var, j],
                    EqShape::Linear {
                        terms: vec![
                            (var, 1.0),
                            (j, -R_GAS * t_nom / (alpha * n_el * FARADAY) / (2.0 * j0_des)),
                        ],
                        rhs: 0.0,
                    },
                    0.1,
                    Phase::Both,
                ));
            }

            // Eq. (18): cell voltage, linear polarization E = a I + b at
            // lambda = 0 with uniform current distribution
            {
                let (ev, jv) = (e_cell, j);
                let (ocp, ohm, conc, aa, ac) = (e_ocp, e_ohm, e_conc, e_act_a, e_act_c);
                let a_lin = self.polarization_a * nv as f64 * self.area_per_volume;
                let b_lin = self.polarization_b;
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.voltage"),
                    Arc::new(move |ws, lam| {
                        ws[ev.0]
                            - blend_lazy(
                                lam,
                                || ws[ocp.0] - ws[ohm.0] - ws[conc.0] - ws[aa.0] - ws[ac.0],
                                || a_lin * ws[jv.0] + b_lin,
                            )
                    }),
                    vec![e_cell, e_ocp, e_ohm, e_conc, e_act_a, e_act_c, j],
                    vec![e_cell, j],
                    EqShape::Linear {
                        terms: vec![(e_cell, 1.0), (j, -a_lin)],
                        rhs: b_lin,
                    },
                    1.0,
                    Phase::Both,
                ));
            }

            // Eq. (28): reaction rates, frozen at design at lambda = 0.
            // Written product-form so vanishing reactants stay regular:
            // r = k exp(-Ea/RT) [(p1 p2) - (products)/K_eq] / p_ref^2.
            for (tag, var, reaction, des) in [
                ("reforming", r_ref, reforming.clone(), vd.r_ref),
                ("shift", r_wgs, shift.clone(), vd.r_wgs),
            ] {
                let tab = table.clone();
                let (v, ta, pa_v) = (var, vol_a.t, p_a);
                let xa = vol_a.x.clone();
                let is_ref = tag == "reforming";
                let mut inc = vec![var, vol_a.t, p_a];
                inc.extend(xa.iter().copied());
                m.add_eq(blended_equation(
                    format!("{name}.v{k}.rate_{tag}"),
                    Arc::new(move |ws, lam| {
                        ws[v.0]
                            - blend_lazy(
                                lam,
                                || {
                                    let t = ws[ta.0];
                                    if t <= 0.0 {
                                        return f64::NAN;
                                    }
                                    let p = |idx: usize| {
                                        partial_pressure(&tab, ws, &xa, ws[pa_v.0], idx) / P_REF
                                    };
                                    let keq = equilibrium_constant(&reaction, t);
                                    let arr = reaction.k0 * (-reaction.ea / (R_GAS * t)).exp();
                                    if is_ref {
                                        arr * (p(species::CH4) * p(species::H2O)
                                            - p(species::H2).powi(3) * p(species::CO) / keq)
                                    } else {
                                        arr * (p(species::CO) * p(species::H2O)
                                            - p(species::CO2) * p(species::H2) / keq)
                                    }
                                },
                                || des,
                            )
                    }),
                    inc,
                    vec![var],
                    EqShape::Linear { terms: vec![(var, 1.0)], rhs: des },
                    des.abs().max(1e-4),
                    Phase::Both,
                ));
            }

            anode_vols.push(vol_a);
            cathode_vols.push(vol_c);
        }

        // total current: I = sum(A j_k)
        {
            let mut terms = vec![(i_total, 1.0)];
            for &jv in &j_vars {
                terms.push((jv, -self.area_per_volume));
            }
            m.eq_linear(format!("{name}.currentSum"), terms, 0.0, Phase::Both);
        }

        // outlet ports
        let last_a = anode_vols.last().unwrap();
        let last_c = cathode_vols.last().unwrap();
        m.eq_alias(format!("{name}.a_out.p_link"), a_out.p, p_a, Phase::Both);
        m.eq_alias(format!("{name}.a_out.w_link"), a_out.w, last_a.w_out, Phase::Both);
        m.eq_alias(format!("{name}.a_out.h_link"), a_out.h, last_a.h, Phase::Both);
        m.eq_alias(format!("{name}.c_out.p_link"), c_out.p, p_c, Phase::Both);
        m.eq_alias(format!("{name}.c_out.w_link"), c_out.w, last_c.w_out, Phase::Both);
        m.eq_alias(format!("{name}.c_out.h_link"), c_out.h, last_c.h, Phase::Both);
        for i in 0..s {
            m.eq_alias(format!("{name}.a_out.x_link[{i}]"), a_out.x[i], last_a.x[i], Phase::Both);
            m.eq_alias(format!("{name}.c_out.x_link[{i}]"), c_out.x[i], last_c.x[i], Phase::Both);
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("a_in".into(), a_in);
        io.inlets.insert("c_in".into(), c_in);
        io.outlets.insert("a_out".into(), a_out);
        io.outlets.insert("c_out".into(), c_out);
        io.signals.insert("E".into(), e_cell);
        io.signals.insert("I".into(), i_total);
        io.signals.insert("I_set".into(), i_set);
        io.signals.insert("P_el".into(), p_el);
        for (k, &jv) in j_vars.iter().enumerate() {
            io.signals.insert(format!("j{k}"), jv);
        }
        io
    }
}
