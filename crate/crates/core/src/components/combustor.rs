//! 0D oxy-combustor: complete combustion of CH4, H2, and CO by simple
//! stoichiometric balances, feeding a dynamic storage volume.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eqsys::{Model, Phase, VariableDescriptor};
use crate::media::{species, SpeciesTable};

use super::common::{
    build_volume, fluid_port, ComponentIo, StreamDesign, VolumeDesign, VolumeInlet, VolumeSpec,
};

#[derive(Debug, Error)]
pub enum CombustorError {
    #[error("sub-stoichiometric oxygen: O2 deficit {0} mol/s with complete combustion assumed")]
    OxygenDeficit(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombustorParams {
    pub volume: f64,
    pub design_fuel: StreamDesign,
    pub design_oxidant: StreamDesign,
}

/// Complete-combustion mixing: CH4 -> CO2 + 2 H2O, H2 -> H2O, CO -> CO2.
/// Returns (total flow, burnt mass fractions); errors when the available
/// oxygen cannot burn all fuel.
pub fn burn(
    w_fuel: f64,
    x_fuel: &[f64],
    w_ox: f64,
    x_ox: &[f64],
    table: &SpeciesTable,
) -> Result<(f64, Vec<f64>), CombustorError> {
    let mut n: Vec<f64> = (0..table.len())
        .map(|i| {
            (w_fuel * x_fuel[i] + w_ox * x_ox[i]) / table.species[i].molar_mass
        })
        .collect();
    let (ch4, h2, co) = (n[species::CH4], n[species::H2], n[species::CO]);
    let o2_needed = 2.0 * ch4 + 0.5 * h2 + 0.5 * co;
    let o2_left = n[species::O2] - o2_needed;
    if o2_left < 0.0 {
        return Err(CombustorError::OxygenDeficit(-o2_left));
    }
    n[species::CO2] += ch4 + co;
    n[species::H2O] += 2.0 * ch4 + h2;
    n[species::O2] = o2_left;
    n[species::CH4] = 0.0;
    n[species::H2] = 0.0;
    n[species::CO] = 0.0;
    let mass: Vec<f64> = n
        .iter()
        .zip(&table.species)
        .map(|(ni, sp)| ni * sp.molar_mass)
        .collect();
    let total: f64 = mass.iter().sum();
    Ok((total, mass.iter().map(|m| m / total).collect()))
}

impl CombustorParams {
    pub fn contribute(&self, m: &mut Model, name: &str, table: &Arc<SpeciesTable>) -> ComponentIo {
        let df = &self.design_fuel;
        let dox = &self.design_oxidant;
        let (w_mix_des, x_burnt_des) = burn(df.w, &df.x, dox.w, &dox.x, table)
            .expect("design point must have excess oxygen");
        let h_mix_des =
            (df.w * df.enthalpy(table) + dox.w * dox.enthalpy(table)) / w_mix_des;
        let t_out_des = table.temperature_from_enthalpy(h_mix_des, &x_burnt_des);
        let d_out = StreamDesign {
            p: dox.p,
            t: t_out_des,
            w: w_mix_des,
            x: x_burnt_des.clone(),
        };

        let fuel_in = fluid_port(m, &format!("{name}.fuel_in"), df, table);
        let ox_in = fluid_port(m, &format!("{name}.ox_in"), dox, table);
        let outlet = fluid_port(m, &format!("{name}.out"), &d_out, table);

        let (p_state, der_p) = m.add_state(
            VariableDescriptor::new(format!("{name}.p"), dox.p, dox.p)
                .bounds(1e2, 1e9)
                .kind(crate::eqsys::VarKind::Pressure)
                .unit("Pa"),
            dox.p / 100.0,
        );

        // virtual burnt inflow: total flow, mixed enthalpy, burnt composition
        let w_mix = m.add_var(
            VariableDescriptor::new(format!("{name}.w_mix"), w_mix_des.max(1e-6), w_mix_des)
                .bounds(0.0, 1e4)
                .kind(crate::eqsys::VarKind::MassFlow)
                .unit("kg/s"),
        );
        let h_mix = m.add_var(
            VariableDescriptor::new(format!("{name}.h_mix"), h_mix_des.abs().max(1e5), h_mix_des)
                .bounds(-5e7, 5e7)
                .kind(crate::eqsys::VarKind::Enthalpy)
                .unit("J/kg"),
        );
        let x_burnt: Vec<_> = (0..table.len())
            .map(|i| {
                m.add_var(
                    VariableDescriptor::new(
                        format!("{name}.X_burnt[{}]", table.species[i].name),
                        1.0,
                        x_burnt_des[i],
                    )
                    .bounds(0.0, 1.0)
                    .kind(crate::eqsys::VarKind::Composition)
                    .unit("kg/kg"),
                )
            })
            .collect();

        m.eq_linear(
            format!("{name}.totalFlow"),
            vec![(w_mix, 1.0), (fuel_in.w, -1.0), (ox_in.w, -1.0)],
            0.0,
            Phase::Both,
        );
        {
            let (wm, hm, wf, hf, wo, ho) =
                (w_mix, h_mix, fuel_in.w, fuel_in.h, ox_in.w, ox_in.h);
            m.eq_general(
                format!("{name}.mixedEnthalpy"),
                vec![h_mix, w_mix, fuel_in.w, fuel_in.h, ox_in.w, ox_in.h],
                h_mix_des.abs().max(1e5),
                Phase::Both,
                Arc::new(move |ws, _| {
                    if ws[wm.0] <= 0.0 {
                        return f64::NAN;
                    }
                    ws[hm.0] - (ws[wf.0] * ws[hf.0] + ws[wo.0] * ws[ho.0]) / ws[wm.0]
                }),
            );
        }
        let burn_inputs: Vec<_> = {
            let mut v = vec![fuel_in.w, ox_in.w];
            v.extend(fuel_in.x.iter().copied());
            v.extend(ox_in.x.iter().copied());
            v
        };
        for i in 0..table.len() {
            let tab = table.clone();
            let (wf, wo, xb) = (fuel_in.w, ox_in.w, x_burnt[i]);
            let xf = fuel_in.x.clone();
            let xo = ox_in.x.clone();
            let mut inc = vec![x_burnt[i]];
            inc.extend(burn_inputs.iter().copied());
            m.eq_general(
                format!("{name}.burnt[{}]", table.species[i].name),
                inc,
                1.0,
                Phase::Both,
                Arc::new(move |ws, _| {
                    let x_f: Vec<f64> = xf.iter().map(|v| ws[v.0]).collect();
                    let x_o: Vec<f64> = xo.iter().map(|v| ws[v.0]).collect();
                    match burn(ws[wf.0], &x_f, ws[wo.0], &x_o, &tab) {
                        Ok((_, xb_val)) => ws[xb.0] - xb_val[i],
                        Err(_) => f64::NAN,
                    }
                }),
            );
        }

        // storage volume fed by the burnt stream
        let vol = build_volume(
            m,
            VolumeSpec {
                name: format!("{name}.vol"),
                volume: self.volume,
                inlet: VolumeInlet {
                    w: w_mix,
                    h: h_mix,
                    x: x_burnt.clone(),
                },
                pressure: p_state,
                der_pressure: der_p,
                design: VolumeDesign {
                    t: t_out_des,
                    x: x_burnt_des.clone(),
                    w: w_mix_des,
                    p: dox.p,
                },
                reacting: false,
                heat: None,
                mass_source: vec![],
                species_sources: vec![],
                energy_extra: None,
                table,
            },
        );

        // port couplings
        m.eq_alias(format!("{name}.p_fuel"), fuel_in.p, p_state, Phase::Both);
        m.eq_alias(format!("{name}.p_ox"), ox_in.p, p_state, Phase::Both);
        m.eq_alias(format!("{name}.p_out"), outlet.p, p_state, Phase::Both);
        m.eq_alias(format!("{name}.w_out"), outlet.w, vol.w_out, Phase::Both);
        m.eq_alias(format!("{name}.h_out"), outlet.h, vol.h, Phase::Both);
        for i in 0..table.len() {
            m.eq_alias(format!("{name}.x_out[{i}]"), outlet.x[i], vol.x[i], Phase::Both);
        }

        let mut io = ComponentIo::default();
        io.inlets.insert("fuel_in".into(), fuel_in);
        io.inlets.insert("ox_in".into(), ox_in);
        io.outlets.insert("out".into(), outlet);
        io.signals.insert("T".into(), vol.t);
        io
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table() -> SpeciesTable {
        SpeciesTable::default_set()
    }

    #[test]
    fn pure_methane_with_exact_oxygen() {
        let tab = table();
        let mut x_fuel = vec![0.0; 7];
        x_fuel[species::CH4] = 1.0;
        let mut x_ox = vec![0.0; 7];
        x_ox[species::O2] = 1.0;
        // 1 mol CH4 + 2 mol O2, no excess
        let w_fuel = tab.species[species::CH4].molar_mass;
        let w_ox = 2.0 * tab.species[species::O2].molar_mass;
        let (w, x) = burn(w_fuel, &x_fuel, w_ox, &x_ox, &tab).unwrap();
        assert_relative_eq!(w, w_fuel + w_ox, max_relative = 1e-13);
        // outlet CO2 : H2O in 1 : 2 molar ratio, nothing else
        let y = tab.mole_fractions(&x);
        assert_relative_eq!(y[species::H2O] / y[species::CO2], 2.0, max_relative = 1e-12);
        assert_abs_diff_eq!(y[species::O2], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y[species::CH4], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pure_hydrogen_gives_water_plus_carrier() {
        let tab = table();
        let mut x_fuel = vec![0.0; 7];
        x_fuel[species::H2] = 1.0;
        let mut x_ox = vec![0.0; 7];
        x_ox[species::O2] = 0.3;
        x_ox[species::CO2] = 0.7;
        let (_, x) = burn(0.01, &x_fuel, 1.0, &x_ox, &tab).unwrap();
        assert!(x[species::H2O] > 0.0);
        assert_eq!(x[species::H2], 0.0);
        assert!(x[species::CO2] > 0.0, "carrier passes through");
        assert_abs_diff_eq!(x.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn sub_stoichiometric_oxygen_is_model_error() {
        let tab = table();
        let mut x_fuel = vec![0.0; 7];
        x_fuel[species::CH4] = 1.0;
        let mut x_ox = vec![0.0; 7];
        x_ox[species::O2] = 0.05;
        x_ox[species::CO2] = 0.95;
        assert!(burn(1.0, &x_fuel, 1.0, &x_ox, &tab).is_err());
    }

    /// Element balance oracle: C, H, O, N atom flows are conserved across
    /// the burn for random feeds.
    #[test]
    fn atom_flows_conserved() {
        let tab = table();
        // atoms per molecule, indexed [C, H, O, N] per species
        let atoms = [
            [1.0, 4.0, 0.0, 0.0], // CH4
            [0.0, 2.0, 0.0, 0.0], // H2
            [0.0, 2.0, 1.0, 0.0], // H2O
            [1.0, 0.0, 1.0, 0.0], // CO
            [1.0, 0.0, 2.0, 0.0], // CO2
            [0.0, 0.0, 2.0, 0.0], // O2
            [0.0, 0.0, 0.0, 2.0], // N2
        ];
        let atom_flow = |w: f64, x: &[f64]| -> [f64; 4] {
            let mut out = [0.0; 4];
            for i in 0..7 {
                let n = w * x[i] / tab.species[i].molar_mass;
                for a in 0..4 {
                    out[a] += n * atoms[i][a];
                }
            }
            out
        };
        let mut seed = 0xabcdef12345u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % 1000) as f64 / 1000.0
        };
        for _ in 0..50 {
            let mut x_fuel = vec![next(), next(), next(), next() * 0.2, 0.0, 0.0, next() * 0.1];
            let sf: f64 = x_fuel.iter().sum();
            x_fuel.iter_mut().for_each(|v| *v /= sf);
            let mut x_ox = vec![0.0, 0.0, next() * 0.1, 0.0, next(), 4.0 + next(), next() * 0.3];
            let so: f64 = x_ox.iter().sum();
            x_ox.iter_mut().for_each(|v| *v /= so);
            let (w_fuel, w_ox) = (0.01 + next() * 0.05, 1.0 + next());
            let Ok((w_out, x_out)) = burn(w_fuel, &x_fuel, w_ox, &x_ox, &tab) else {
                continue;
            };
            let a_in = atom_flow(w_fuel, &x_fuel);
            let a_in_ox = atom_flow(w_ox, &x_ox);
            let a_out = atom_flow(w_out, &x_out);
            for a in 0..4 {
                let total_in = a_in[a] + a_in_ox[a];
                let scale = total_in.abs().max(1e-30);
                assert!(
                    ((total_in - a_out[a]) / scale).abs() <= 1e-12,
                    "atom {a} drift: {total_in} vs {}",
                    a_out[a]
                );
            }
        }
    }
}
