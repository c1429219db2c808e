//! 0D flash condenser: ideal phase split by saturation pressure at a fixed
//! (cooling-regulated) temperature. At lambda = 0 the condensed water is
//! neglected in the total mass balance, decoupling the flow-rate chain from
//! the thermal-chemical condensation phenomena.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eqsys::{EqShape, Model, Phase, VariableDescriptor};
use crate::media::{p_sat, species, MediaError, SaturationPoly, SpeciesTable};

use super::common::{blended_equation, fluid_port, h_mix_ws, r_mix_ws, ComponentIo, StreamDesign};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondenserParams {
    /// Gas-side volume, m3.
    pub volume: f64,
    /// Saturation polynomial coefficients (water by default).
    pub saturation: SaturationPoly,
    /// Fixed outlet temperature, K (idealized cooling side).
    pub t_out: f64,
    pub design_in: StreamDesign,
}

/// Result of the ideal vapour/liquid split.
#[derive(Debug, Clone, PartialEq)]
pub struct CondenserSplit {
    pub w_gas: f64,
    pub w_liquid: f64,
    pub x_out: Vec<f64>,
}

/// Ideal flash split: if the water partial pressure exceeds p_sat(T), the
/// outlet gas is saturated (Raoult: Y_v p = p_sat) and the excess water
/// leaves as liquid; otherwise the stream passes unchanged.
pub fn condenser_split(
    p: f64,
    t: f64,
    x_in: &[f64],
    w_in: f64,
    table: &SpeciesTable,
    poly: &SaturationPoly,
) -> Result<CondenserSplit, MediaError> {
    let psat = p_sat(t, poly)?;
    let no_split = |w: f64| CondenserSplit {
        w_gas: w,
        w_liquid: 0.0,
        x_out: x_in.to_vec(),
    };
    if w_in <= 0.0 {
        return Ok(no_split(w_in.max(0.0)));
    }
    let y_sat = psat / p;
    if y_sat >= 1.0 {
        return Ok(no_split(w_in));
    }
    // molar flows
    let n: Vec<f64> = x_in
        .iter()
        .zip(&table.species)
        .map(|(xi, sp)| w_in * xi / sp.molar_mass)
        .collect();
    let n_h2o = n[species::H2O];
    let n_dry: f64 = n.iter().sum::<f64>() - n_h2o;
    let n_tot = n_h2o + n_dry;
    if n_tot <= 0.0 || n_h2o / n_tot <= y_sat {
        return Ok(no_split(w_in));
    }
    let n_vap = y_sat / (1.0 - y_sat) * n_dry;
    let n_liq = n_h2o - n_vap;
    let mut mass: Vec<f64> = n
        .iter()
        .zip(&table.species)
        .map(|(ni, sp)| ni * sp.molar_mass)
        .collect();
    mass[species::H2O] = n_vap * table.species[species::H2O].molar_mass;
    let w_gas: f64 = mass.iter().sum();
    let x_out = mass.iter().map(|m| m / w_gas).collect();
    Ok(CondenserSplit {
        w_gas,
        w_liquid: n_liq * table.species[species::H2O].molar_mass,
        x_out,
    })
}

impl CondenserParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let d_in = &self.design_in;
        let design_split = condenser_split(
            d_in.p,
            self.t_out,
            &d_in.x,
            d_in.w,
            table,
            &self.saturation,
        )
        .expect("design split");
        let mut d_out = d_in.clone();
        d_out.t = self.t_out;
        d_out.w = design_split.w_gas;
        d_out.x = design_split.x_out.clone();
        let inlet = fluid_port(m, &format!("{name}.in"), d_in, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &d_out, table);

        let (p_state, der_p) = m.add_state(
            VariableDescriptor::new(format!("{name}.p"), d_in.p, d_in.p)
                .bounds(1e2, 1e9)
                .kind(crate::eqsys::VarKind::Pressure)
                .unit("Pa"),
            d_in.p / 100.0,
        );
        let rho_des = d_in.p / (table.r_mix(&d_out.x) * self.t_out);
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
        let w_liq = m.add_var(
            VariableDescriptor::new(
                format!("{name}.w_liquid"),
                design_split.w_liquid.max(1e-6),
                design_split.w_liquid,
            )
            .bounds(0.0, 1e4)
            .kind(crate::eqsys::VarKind::MassFlow)
            .unit("kg/s"),
        );
        let q_des = 1.0f64.max(d_in.w * 1e4);
        let q_rej = m.add_var(
            VariableDescriptor::new(format!("{name}.Q_rej"), q_des, 0.0)
                .bounds(-1e10, 1e10)
                .unit("W"),
        );

        m.eq_alias(format!("{name}.p_in"), inlet.p, p_state, Phase::Both);
        m.eq_alias(format!("{name}.p_out"), outlet.p, p_state, Phase::Both);

        // total mass balance with the liquid term multiplied by lambda
        {
            let (dm, win, wout, wl) = (der_m, inlet.w, outlet.w, w_liq);
            m.add_eq(blended_equation(
                format!("{name}.massBal"),
                Arc::new(move |ws, lam| {
                    ws[dm.0] - (ws[win.0] - ws[wout.0] - lam * ws[wl.0])
                }),
                vec![der_m, inlet.w, outlet.w, w_liq],
                vec![der_m, inlet.w, outlet.w],
                EqShape::Linear {
                    terms: vec![(der_m, 1.0), (inlet.w, -1.0), (outlet.w, 1.0)],
                    rhs: 0.0,
                },
                d_in.w.max(1e-6),
                Phase::Both,
            ));
        }

        // split equations: liquid flow and outlet composition
        let split_inputs = {
            let mut v = vec![p_state, inlet.w];
            v.extend(inlet.x.iter().copied());
            v
        };
        {
            let tab = table.clone();
            let poly = self.saturation;
            let t_out = self.t_out;
            let (pv, wv, wl) = (p_state, inlet.w, w_liq);
            let x_in = inlet.x.clone();
            let mut inc = vec![w_liq];
            inc.extend(split_inputs.iter().copied());
            m.eq_general(
                format!("{name}.liquidSplit"),
                inc,
                d_in.w.max(1e-6) * 0.1,
                Phase::Both,
                Arc::new(move |ws, _| {
                    let x: Vec<f64> = x_in.iter().map(|v| ws[v.0]).collect();
                    match condenser_split(ws[pv.0], t_out, &x, ws[wv.0], &tab, &poly) {
                        Ok(s) => ws[wl.0] - s.w_liquid,
                        Err(_) => f64::NAN,
                    }
                }),
            );
        }
        for i in 0..table.len() {
            let tab = table.clone();
            let poly = self.saturation;
            let t_out = self.t_out;
            let (pv, wv, xo) = (p_state, inlet.w, outlet.x[i]);
            let x_in = inlet.x.clone();
            let mut inc = vec![outlet.x[i]];
            inc.extend(split_inputs.iter().copied());
            m.eq_general(
                format!("{name}.outComp[{i}]"),
                inc,
                1.0,
                Phase::Both,
                Arc::new(move |ws, _| {
                    let x: Vec<f64> = x_in.iter().map(|v| ws[v.0]).collect();
                    match condenser_split(ws[pv.0], t_out, &x, ws[wv.0], &tab, &poly) {
                        Ok(s) => ws[xo.0] - s.x_out[i],
                        Err(_) => f64::NAN,
                    }
                }),
            );
        }

        // storage and outlet state at the fixed temperature
        {
            let tab = table.clone();
            let (pv, mv) = (p_state, m_var);
            let x_out = outlet.x.clone();
            let vol = self.volume;
            let t_out = self.t_out;
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
                    let r = r_mix_ws(&tab, ws, &x_out);
                    ws[dm.0] - vol / (r * t_out) * ws[dp.0]
                }),
            );
        }
        {
            let tab = table.clone();
            let t_out = self.t_out;
            let h_out = outlet.h;
            let x_out = outlet.x.clone();
            let mut inc = vec![h_out];
            inc.extend(x_out.iter().copied());
            m.eq_general(
                format!("{name}.fixedT"),
                inc,
                d_out.enthalpy(table).abs().max(1e5),
                Phase::Both,
                Arc::new(move |ws, _| ws[h_out.0] - h_mix_ws(&tab, ws, t_out, &x_out)),
            );
        }
        // heat rejected to the idealized cooling side
        {
            let tab = table.clone();
            let t_out = self.t_out;
            let (win, hin, wout, hout, wl, q) =
                (inlet.w, inlet.h, outlet.w, outlet.h, w_liq, q_rej);
            m.add_eq(blended_equation(
                format!("{name}.heatRejected"),
                Arc::new(move |ws, lam| {
                    let h_liq = liquid_water_enthalpy(&tab, t_out);
                    ws[q.0]
                        - (ws[win.0] * ws[hin.0]
                            - ws[wout.0] * ws[hout.0]
                            - lam * ws[wl.0] * h_liq)
                }),
                vec![q_rej, inlet.w, inlet.h, outlet.w, outlet.h, w_liq],
                vec![q_rej, inlet.w, inlet.h, outlet.w, outlet.h],
                EqShape::General,
                q_des,
                Phase::Both,
            ));
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("in".into(), inlet);
        io.outlets.insert("out".into(), outlet);
        io.signals.insert("w_liquid".into(), w_liq);
        io.signals.insert("Q_rej".into(), q_rej);
        io
    }
}

/// Saturated liquid water enthalpy on the formation-enthalpy basis:
/// h_f(gas) - evaporation enthalpy at T_REF plus sensible heat.
pub fn liquid_water_enthalpy(table: &SpeciesTable, t: f64) -> f64 {
    const DH_VAP_TREF: f64 = 44_000.0 / 0.018_015; // J/kg at 298.15 K
    const CP_LIQ: f64 = 4186.0;
    let sp = &table.species[species::H2O];
    sp.h_form - DH_VAP_TREF + CP_LIQ * (t - crate::media::T_REF)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::WATER_SATURATION;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table() -> SpeciesTable {
        SpeciesTable::default_set()
    }

    #[test]
    fn dry_inlet_passes_unchanged() {
        let tab = table();
        let x = vec![0.0, 0.0, 0.001, 0.0, 0.899, 0.1, 0.0];
        let s = condenser_split(1e5, 320.0, &x, 1.0, &tab, &WATER_SATURATION).unwrap();
        assert_eq!(s.w_liquid, 0.0);
        assert_eq!(s.x_out, x);
        assert_eq!(s.w_gas, 1.0);
    }

    /// Bisection on the vapour molar flow is the independent oracle for the
    /// saturated split.
    #[test]
    fn wet_split_matches_bisection_oracle() {
        let tab = table();
        let x = vec![0.0, 0.0, 0.08, 0.0, 0.75, 0.17, 0.0];
        let (p, t, w_in) = (3e5, 305.0, 0.75);
        let s = condenser_split(p, t, &x, w_in, &tab, &WATER_SATURATION).unwrap();
        assert!(s.w_liquid > 0.0);

        // oracle: find n_vap such that n_vap/(n_dry+n_vap) = p_sat/p
        let n: Vec<f64> = x
            .iter()
            .zip(&tab.species)
            .map(|(xi, sp)| w_in * xi / sp.molar_mass)
            .collect();
        let n_h2o = n[species::H2O];
        let n_dry: f64 = n.iter().sum::<f64>() - n_h2o;
        let y_sat = p_sat(t, &WATER_SATURATION).unwrap() / p;
        let f = |n_vap: f64| n_vap / (n_dry + n_vap) - y_sat;
        let (mut lo, mut hi) = (0.0, n_h2o);
        assert!(f(lo) < 0.0 && f(hi) > 0.0, "inlet must be supersaturated");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let n_vap_oracle = 0.5 * (lo + hi);
        let w_liq_oracle = (n_h2o - n_vap_oracle) * tab.species[species::H2O].molar_mass;
        assert_abs_diff_eq!(s.w_liquid, w_liq_oracle, epsilon = 1e-10);
        // saturation invariant at the outlet
        let y_out = tab.mole_fractions(&s.x_out)[species::H2O];
        assert!(y_out * p <= p_sat(t, &WATER_SATURATION).unwrap() + 1e-9 * p);
        // mass closure
        assert_relative_eq!(s.w_gas + s.w_liquid, w_in, max_relative = 1e-13);
        assert_abs_diff_eq!(s.x_out.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn split_rejects_temperature_outside_fit() {
        let tab = table();
        let x = vec![0.0, 0.0, 0.1, 0.0, 0.9, 0.0, 0.0];
        assert!(condenser_split(1e5, 600.0, &x, 1.0, &tab, &WATER_SATURATION).is_err());
    }
}
