//! Shared building blocks: fluid ports, stream design points, connection
//! equations, and the finite-volume equation set used by every storage
//! component (heat-exchanger volumes, fuel-cell channels, combustor,
//! intercooler, condenser).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{
    EqShape, EquationDescriptor, ExprFn, Model, Phase, VarId, VarKind, VariableDescriptor,
};
use crate::media::{SpeciesTable, T_REF};

/// Design-point values of a fluid stream, used for start values, nominal
/// attributes, and homotopy freeze constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamDesign {
    pub p: f64,
    pub t: f64,
    pub w: f64,
    pub x: Vec<f64>,
}

impl StreamDesign {
    pub fn enthalpy(&self, table: &SpeciesTable) -> f64 {
        table.enthalpy(self.t, &self.x)
    }
}

/// Variable ids of one directed fluid port.
#[derive(Debug, Clone)]
pub struct PortVars {
    pub p: VarId,
    pub w: VarId,
    pub h: VarId,
    pub x: Vec<VarId>,
}

/// What a component exposes to the plant graph.
#[derive(Debug, Clone, Default)]
pub struct ComponentIo {
    pub inlets: BTreeMap<String, PortVars>,
    pub outlets: BTreeMap<String, PortVars>,
    /// Scalar signal taps (power outputs, flow commands, sensed values).
    pub signals: BTreeMap<String, VarId>,
}

impl ComponentIo {
    pub fn inlet(&self, name: &str) -> &PortVars {
        &self.inlets[name]
    }
    pub fn outlet(&self, name: &str) -> &PortVars {
        &self.outlets[name]
    }
    pub fn signal(&self, name: &str) -> VarId {
        self.signals[name]
    }
}

/// Creates the p/w/h/X variables of a fluid port around a design point.
pub fn fluid_port(
    m: &mut Model,
    name: &str,
    design: &StreamDesign,
    table: &SpeciesTable,
) -> PortVars {
    let h_des = design.enthalpy(table);
    let p = m.add_var(
        VariableDescriptor::new(format!("{name}.p"), design.p, design.p)
            .bounds(1e2, 1e9)
            .kind(VarKind::Pressure)
            .unit("Pa"),
    );
    let w = m.add_var(
        VariableDescriptor::new(format!("{name}.w"), design.w.max(1e-6), design.w)
            .bounds(0.0, 1e4)
            .kind(VarKind::MassFlow)
            .unit("kg/s"),
    );
    let h = m.add_var(
        VariableDescriptor::new(format!("{name}.h"), h_des.abs().max(1e5), h_des)
            .bounds(-5e7, 5e7)
            .kind(VarKind::Enthalpy)
            .unit("J/kg"),
    );
    let x = (0..table.len())
        .map(|i| {
            m.add_var(
                VariableDescriptor::new(format!("{name}.X[{}]", table.species[i].name), 1.0, design.x[i])
                    .bounds(0.0, 1.0)
                    .kind(VarKind::Composition)
                    .unit("kg/kg"),
            )
        })
        .collect();
    PortVars { p, w, h, x }
}

/// Connection equations between an outlet and an inlet: pressure equality,
/// mass-flow equality, downstream convection of h and X.
pub fn connect(m: &mut Model, label: &str, from: &PortVars, to: &PortVars) {
    m.eq_alias(format!("connect:{label}.p"), to.p, from.p, Phase::Both);
    m.eq_alias(format!("connect:{label}.w"), to.w, from.w, Phase::Both);
    m.eq_alias(format!("connect:{label}.h"), to.h, from.h, Phase::Both);
    for i in 0..from.x.len() {
        m.eq_alias(format!("connect:{label}.X[{i}]"), to.x[i], from.x[i], Phase::Both);
    }
}

/// Upstream references feeding a finite volume.
#[derive(Debug, Clone)]
pub struct VolumeInlet {
    pub w: VarId,
    pub h: VarId,
    pub x: Vec<VarId>,
}

/// Per-volume design values.
#[derive(Debug, Clone)]
pub struct VolumeDesign {
    pub t: f64,
    pub x: Vec<f64>,
    pub w: f64,
    pub p: f64,
}

/// Variables created for one finite volume.
#[derive(Debug, Clone)]
pub struct VolumeVars {
    pub t: VarId,
    pub der_t: VarId,
    /// All S mass fractions; the first S-1 are states.
    pub x: Vec<VarId>,
    pub der_x: Vec<VarId>,
    pub m: VarId,
    pub der_m: VarId,
    pub der_u: VarId,
    /// Outlet (upwind) specific enthalpy of the volume.
    pub h: VarId,
    pub w_out: VarId,
}

/// Specification of one finite volume's balance equations.
pub struct VolumeSpec<'a> {
    pub name: String,
    pub volume: f64,
    pub inlet: VolumeInlet,
    pub pressure: VarId,
    pub der_pressure: VarId,
    pub design: VolumeDesign,
    /// Reacting volumes keep their species balances active during
    /// initialization; non-reacting ones use the explicit composition
    /// initial equation X_out = X_in instead.
    pub reacting: bool,
    /// Convective heat input variable, if any.
    pub heat: Option<VarId>,
    /// Net mass source as a linear combination of variables, kg/s.
    pub mass_source: Vec<(VarId, f64)>,
    /// Per-species mass sources as linear combinations, kg/s.
    pub species_sources: Vec<Vec<(VarId, f64)>>,
    /// Extra terms added to the energy balance (enthalpy fluxes, extracted
    /// power): (dependencies, evaluator).
    pub energy_extra: Option<(Vec<VarId>, ExprFn)>,
    pub table: &'a Arc<SpeciesTable>,
}

/// Emits the balance equations of one finite volume: total mass balance,
/// energy balance, the state-derivative reformulations for dM/dt and dU/dt,
/// property definitions, the composition sum, and the species balances with
/// their initialization treatment.
pub fn build_volume(m: &mut Model, spec: VolumeSpec) -> VolumeVars {
    let s = spec.table.len();
    let name = &spec.name;
    let tab = spec.table.clone();
    let d = &spec.design;
    let h_des = tab.enthalpy(d.t, &d.x);
    let rho_des = d.p / (tab.r_mix(&d.x) * d.t);

    let (t, der_t) = m.add_state(
        VariableDescriptor::new(format!("{name}.T"), d.t, d.t)
            .bounds(200.0, 3500.0)
            .kind(VarKind::Temperature)
            .unit("K"),
        d.t / 100.0,
    );
    let mut x = Vec::with_capacity(s);
    let mut der_x = Vec::with_capacity(s - 1);
    for i in 0..s - 1 {
        let (xi, dxi) = m.add_state(
            VariableDescriptor::new(
                format!("{name}.X[{}]", tab.species[i].name),
                1.0,
                d.x[i],
            )
            .bounds(0.0, 1.0)
            .kind(VarKind::Composition)
            .unit("kg/kg"),
            0.01,
        );
        x.push(xi);
        der_x.push(dxi);
    }
    x.push(m.add_var(
        VariableDescriptor::new(
            format!("{name}.X[{}]", tab.species[s - 1].name),
            1.0,
            d.x[s - 1],
        )
        .bounds(0.0, 1.0)
        .kind(VarKind::Composition)
        .unit("kg/kg"),
    ));
    let m_var = m.add_var(
        VariableDescriptor::new(format!("{name}.M"), (rho_des * spec.volume).max(1e-9), rho_des * spec.volume)
            .bounds(1e-12, 1e6)
            .unit("kg"),
    );
    let der_m = m.add_var(
        VariableDescriptor::new(format!("{name}.der(M)"), d.w.max(1e-6), 0.0)
            .kind(VarKind::Derivative)
            .unit("kg/s"),
    );
    let der_u = m.add_var(
        VariableDescriptor::new(
            format!("{name}.der(U)"),
            (d.w * h_des.abs()).max(1.0),
            0.0,
        )
        .kind(VarKind::Derivative)
        .unit("W"),
    );
    let h = m.add_var(
        VariableDescriptor::new(format!("{name}.h"), h_des.abs().max(1e5), h_des)
            .bounds(-5e7, 5e7)
            .kind(VarKind::Enthalpy)
            .unit("J/kg"),
    );
    let w_out = m.add_var(
        VariableDescriptor::new(format!("{name}.w_out"), d.w.max(1e-6), d.w)
            .bounds(0.0, 1e4)
            .kind(VarKind::MassFlow)
            .unit("kg/s"),
    );

    // Eq. (5): dM/dt = w_in - w_out + sources
    let mut mass_terms = vec![(der_m, 1.0), (spec.inlet.w, -1.0), (w_out, 1.0)];
    for &(v, c) in &spec.mass_source {
        mass_terms.push((v, -c));
    }
    m.eq_linear(format!("{name}.massBal"), mass_terms, 0.0, Phase::Both);

    // Eq. (7): dU/dt = w_in h_in - w_out h_out + Q + extras
    {
        let (win, hin, wo, hv, duv) = (spec.inlet.w, spec.inlet.h, w_out, h, der_u);
        let q = spec.heat;
        let extra = spec.energy_extra.clone();
        let mut inc = vec![der_u, win, hin, wo, hv];
        if let Some(qv) = q {
            inc.push(qv);
        }
        if let Some((deps, _)) = &extra {
            inc.extend(deps.iter().copied());
        }
        let nominal = (d.w * h_des.abs()).max(1e3);
        m.eq_general(
            format!("{name}.energyBal"),
            inc,
            nominal,
            Phase::Both,
            Arc::new(move |ws, lam| {
                let mut rhs = ws[win.0] * ws[hin.0] - ws[wo.0] * ws[hv.0];
                if let Some(qv) = q {
                    rhs += ws[qv.0];
                }
                if let Some((_, f)) = &extra {
                    rhs += eval_extra(f, ws, lam);
                }
                ws[duv.0] - rhs
            }),
        );
    }

    // Eq. (10): dM/dt expressed through state derivatives.
    {
        let tab = tab.clone();
        let (tv, pv, mv_der) = (t, spec.pressure, der_m);
        let xs = x.clone();
        let (dt_, dp_, dxs) = (der_t, spec.der_pressure, der_x.clone());
        let vol = spec.volume;
        let mut inputs = vec![der_t, spec.der_pressure];
        inputs.extend(dxs.iter().copied());
        let mut coeffs = vec![t, spec.pressure];
        coeffs.extend(xs.iter().copied());
        m.eq_defines_from_inputs(
            format!("{name}.massDer"),
            der_m,
            inputs,
            coeffs,
            d.w.max(1e-6),
            Phase::Both,
            Arc::new(move |ws, _| {
                let Some(rec) = props(&tab, ws, pv, tv, &xs) else {
                    return f64::NAN;
                };
                let s = xs.len();
                let mut sum = rec.dv_dt * ws[dt_.0] + rec.dv_dp * ws[dp_.0];
                for i in 0..s - 1 {
                    sum += (rec.dv_dx[i] - rec.dv_dx[s - 1]) * ws[dxs[i].0];
                }
                ws[mv_der.0] + vol * rec.rho * rec.rho * sum
            }),
        );
    }

    // Eq. (11): dU/dt through state derivatives and dM/dt.
    {
        let tab = tab.clone();
        let (tv, pv, mv, duv, dmv) = (t, spec.pressure, m_var, der_u, der_m);
        let xs = x.clone();
        let (dt_, dp_, dxs) = (der_t, spec.der_pressure, der_x.clone());
        let mut inputs = vec![der_t, spec.der_pressure];
        inputs.extend(dxs.iter().copied());
        inputs.push(der_m);
        let mut coeffs = vec![t, spec.pressure, m_var];
        coeffs.extend(xs.iter().copied());
        m.eq_defines_from_inputs(
            format!("{name}.energyDer"),
            der_u,
            inputs,
            coeffs,
            (d.w * h_des.abs()).max(1e3),
            Phase::Both,
            Arc::new(move |ws, _| {
                let Some(rec) = props(&tab, ws, pv, tv, &xs) else {
                    return f64::NAN;
                };
                let s = xs.len();
                let mut sum = rec.du_dt * ws[dt_.0] + rec.du_dp * ws[dp_.0];
                for i in 0..s - 1 {
                    sum += (rec.du_dx[i] - rec.du_dx[s - 1]) * ws[dxs[i].0];
                }
                ws[duv.0] - (ws[mv.0] * sum + ws[dmv.0] * rec.u)
            }),
        );
    }

    // M = V rho(p, T, X)
    {
        let tab = tab.clone();
        let (tv, pv, mv) = (t, spec.pressure, m_var);
        let xs = x.clone();
        let vol = spec.volume;
        let mut inc = vec![m_var, spec.pressure, t];
        inc.extend(xs.iter().copied());
        m.eq_general(
            format!("{name}.massDef"),
            inc,
            (rho_des * vol).max(1e-9),
            Phase::Both,
            Arc::new(move |ws, _| {
                let r = r_mix_ws(&tab, ws, &xs);
                if ws[pv.0] <= 0.0 || ws[tv.0] <= 0.0 {
                    return f64::NAN;
                }
                ws[mv.0] - vol * ws[pv.0] / (r * ws[tv.0])
            }),
        );
    }

    // h = h_mix(T, X)
    {
        let tab = tab.clone();
        let (tv, hv) = (t, h);
        let xs = x.clone();
        let mut inc = vec![h, t];
        inc.extend(xs.iter().copied());
        m.eq_general(
            format!("{name}.enthalpyDef"),
            inc,
            h_des.abs().max(1e5),
            Phase::Both,
            Arc::new(move |ws, _| ws[hv.0] - h_mix_ws(&tab, ws, ws[tv.0], &xs)),
        );
    }

    // sum(X) = 1
    m.eq_linear(
        format!("{name}.sumX"),
        x.iter().map(|&xi| (xi, 1.0)).collect(),
        1.0,
        Phase::Both,
    );

    // Species balances, Eq. (12) with source terms. Non-reacting volumes get
    // the explicit composition initial equation Eq. (14) and keep the dynamic
    // balance for simulation only; reacting volumes get the steady balance
    // (without the dead M dX/dt term) during initialization instead, so the
    // compositions decouple from the storage bookkeeping (Eq. (15) pattern).
    for i in 0..s - 1 {
        let src = spec
            .species_sources
            .get(i)
            .cloned()
            .unwrap_or_default();
        let gamma = spec.mass_source.clone();
        let (mv, dxi, win, xin_i, xi) = (m_var, der_x[i], spec.inlet.w, spec.inlet.x[i], x[i]);
        let mut inc_steady = vec![spec.inlet.w, spec.inlet.x[i], x[i]];
        for &(v, _) in src.iter().chain(gamma.iter()) {
            if !inc_steady.contains(&v) {
                inc_steady.push(v);
            }
        }
        let mut inc_dynamic = vec![m_var, der_x[i]];
        inc_dynamic.extend(inc_steady.iter().copied());
        let steady_rhs = {
            let src = src.clone();
            let gamma = gamma.clone();
            move |ws: &[f64]| -> f64 {
                let src_val: f64 = src.iter().map(|&(v, c)| c * ws[v.0]).sum();
                let gamma_val: f64 = gamma.iter().map(|&(v, c)| c * ws[v.0]).sum();
                ws[win.0] * (ws[xin_i.0] - ws[xi.0]) + src_val - ws[xi.0] * gamma_val
            }
        };
        let nominal = d.w.max(1e-6) * 0.1;
        {
            let rhs = steady_rhs.clone();
            m.eq_general(
                format!("{name}.speciesBalDyn[{}]", tab.species[i].name),
                inc_dynamic,
                nominal,
                Phase::SimulationOnly,
                Arc::new(move |ws, _| ws[mv.0] * ws[dxi.0] - rhs(ws)),
            );
        }
        if spec.reacting {
            let rhs = steady_rhs;
            m.eq_general(
                format!("{name}.speciesBalInit[{}]", tab.species[i].name),
                inc_steady,
                nominal,
                Phase::InitialOnly,
                Arc::new(move |ws, _| -rhs(ws)),
            );
        } else {
            m.eq_alias(
                format!("{name}.initComp[{}]", tab.species[i].name),
                x[i],
                spec.inlet.x[i],
                Phase::InitialOnly,
            );
        }
    }

    VolumeVars {
        t,
        der_t,
        x,
        der_x,
        m: m_var,
        der_m,
        der_u,
        h,
        w_out,
    }
}

#[inline]
fn eval_extra(f: &ExprFn, ws: &[f64], _lam: f64) -> f64 {
    f(ws)
}

/// Mixture gas constant read directly from workspace slots, no allocation.
pub fn r_mix_ws(table: &SpeciesTable, ws: &[f64], x: &[VarId]) -> f64 {
    let mut sum = 0.0;
    for (i, xi) in x.iter().enumerate() {
        sum += ws[xi.0] / table.species[i].molar_mass;
    }
    crate::media::R_GAS * sum
}

/// Mixture enthalpy read directly from workspace slots.
pub fn h_mix_ws(table: &SpeciesTable, ws: &[f64], t: f64, x: &[VarId]) -> f64 {
    let mut h = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let sp = &table.species[i];
        h += ws[xi.0] * (sp.h_form + sp.cp * (t - T_REF));
    }
    h
}

/// Mixture heat capacity from workspace slots.
pub fn cp_mix_ws(table: &SpeciesTable, ws: &[f64], x: &[VarId]) -> f64 {
    let mut cp = 0.0;
    for (i, xi) in x.iter().enumerate() {
        cp += ws[xi.0] * table.species[i].cp;
    }
    cp
}

/// Temperature from enthalpy and workspace composition.
pub fn t_from_h_ws(table: &SpeciesTable, ws: &[f64], h: f64, x: &[VarId]) -> f64 {
    let mut href = 0.0;
    let mut cp = 0.0;
    for (i, xi) in x.iter().enumerate() {
        href += ws[xi.0] * table.species[i].h_form;
        cp += ws[xi.0] * table.species[i].cp;
    }
    T_REF + (h - href) / cp
}

/// Density from workspace slots; NaN outside the ideal-gas domain.
pub fn rho_ws(table: &SpeciesTable, ws: &[f64], p: f64, t: f64, x: &[VarId]) -> f64 {
    if p <= 0.0 || t <= 0.0 {
        return f64::NAN;
    }
    p / (r_mix_ws(table, ws, x) * t)
}

fn props(
    table: &SpeciesTable,
    ws: &[f64],
    p: VarId,
    t: VarId,
    x: &[VarId],
) -> Option<crate::media::PropertyRecord> {
    let xs: Vec<f64> = x.iter().map(|xi| ws[xi.0]).collect();
    let state = crate::media::MixtureState {
        p: ws[p.0],
        t: ws[t.0],
        x: xs,
    };
    crate::media::properties(&state, table).ok()
}

/// Builds an equation descriptor with distinct full/simplified incidence for
/// homotopy-blended residuals.
#[allow(clippy::too_many_arguments)]
pub fn blended_equation(
    name: String,
    residual: crate::eqsys::ResidualFn,
    incidence_actual: Vec<VarId>,
    incidence_simplified: Vec<VarId>,
    shape_simplified: EqShape,
    nominal_residual: f64,
    phase: Phase,
) -> EquationDescriptor {
    let mut incidence_full = incidence_actual;
    for v in &incidence_simplified {
        if !incidence_full.contains(v) {
            incidence_full.push(*v);
        }
    }
    EquationDescriptor {
        name,
        residual,
        incidence_full,
        incidence_simplified,
        phase,
        nominal_residual,
        shape_full: EqShape::General,
        shape_simplified,
    }
}
