//! Standalone design calculation for the demo plant: a deterministic
//! sequential march through the cycle producing self-consistent desk-scale
//! design values. These seed start values, nominal attributes, homotopy
//! freeze constants, and the decoupler design states.

use crate::components::common::StreamDesign;
use crate::components::condenser::condenser_split;
use crate::components::fuel_cell::{open_circuit_potential, FuelCellVolumeDesign};
use crate::components::turbine::TurbineParams;
use crate::media::{delta_g, species, ReactionParams, SpeciesTable, FARADAY, R_GAS, WATER_SATURATION};

pub struct DemoDesign {
    pub table: SpeciesTable,
    // boundary values
    pub p_sink: f64,
    pub w_mod: f64,
    pub w_fuel: f64,
    pub turbine_power: f64,
    pub comb_t: f64,
    // stations
    pub mod_src: StreamDesign,
    pub comp_out: StreamDesign,
    pub ic_out: StreamDesign,
    pub cond_out: StreamDesign,
    pub recup_cold_out: StreamDesign,
    pub fuel_src: StreamDesign,
    pub anode_out: StreamDesign,
    pub cathode_out: StreamDesign,
    pub comb_out: StreamDesign,
    pub turb_out: StreamDesign,
    pub recup_hot_out: StreamDesign,
    // pressure-loss data
    pub dp_recup_module: f64,
    pub dp_sofc: f64,
    // compressor / turbine
    pub pressure_ratio: f64,
    pub eta_compressor: f64,
    pub eta_turbine: f64,
    pub k_t: f64,
    // intercooler / condenser
    pub t_intercooler: f64,
    pub t_condenser: f64,
    // recuperator sizing
    pub recup_modules: usize,
    pub recup_volumes_per_module: usize,
    pub recup_cell_volume: f64,
    pub recup_cell_area: f64,
    pub recup_gamma_nom: f64,
    pub recup_wall_capacity: f64,
    // fuel cell
    pub sofc_n_volumes: usize,
    pub sofc_area_per_volume: f64,
    pub sofc_channel_volume: f64,
    pub sofc_pen_area: f64,
    pub sofc_pen_capacity: f64,
    pub sofc_gamma_nom: f64,
    pub sofc_t_nom: f64,
    pub i_set: f64,
    pub polarization_a: f64,
    pub polarization_b: f64,
    pub r_ohm: f64,
    pub k_el_anode: f64,
    pub k_el_cathode: f64,
    pub ea_el: f64,
    pub alpha: f64,
    pub n_electrons: f64,
    pub diff_lump_h2: f64,
    pub diff_lump_h2o: f64,
    pub diff_lump_o2: f64,
    pub k0_reforming: f64,
    pub ea_reforming: f64,
    pub k0_shift: f64,
    pub ea_shift: f64,
    pub sofc_volumes: Vec<FuelCellVolumeDesign>,
    pub combustor_volume: f64,
}

fn mass_from_molar(table: &SpeciesTable, n: &[f64]) -> (f64, Vec<f64>) {
    let mass: Vec<f64> = n
        .iter()
        .zip(&table.species)
        .map(|(ni, sp)| ni * sp.molar_mass)
        .collect();
    let total: f64 = mass.iter().sum();
    (total, mass.iter().map(|m| m / total).collect())
}

/// Runs the design march. Pure and deterministic.
pub fn design_demo() -> DemoDesign {
    let table = SpeciesTable::default_set();
    let s = table.len();

    // fixed design choices
    let p_sink = 1.05e5;
    let dp_recup_module = 1500.0;
    let dp_sofc = 1000.0;
    let p_comb = 3.0e5;
    let pressure_ratio = 3.0;
    let (eta_compressor, eta_turbine) = (0.85, 0.88);
    let (t_intercooler, t_condenser) = (310.0, 305.0);
    let t_cathode_in = 950.0;
    let t_fuel = 900.0;
    let sofc_t_nom = 980.0;
    let (n_vol, area) = (5usize, 1.5f64);
    let fuel_utilization = 0.60;
    let e_des = 0.75;
    let (alpha, n_electrons) = (0.5, 2.0);

    let w_mod = 0.10;
    let w_fuel = 0.004;

    // pressure levels
    let p_turb_out = p_sink + 2.0 * dp_recup_module;
    let p_sofc_in = p_comb + dp_sofc;
    let p_recup_cold_in = p_sofc_in + 2.0 * dp_recup_module;
    let p_loop = p_recup_cold_in; // condenser / intercooler / compressor outlet
    let p_mod_src = p_loop / pressure_ratio;

    // moderator composition [CH4, H2, H2O, CO, CO2, O2, N2]
    let mut x_mod = vec![0.0; s];
    x_mod[species::H2O] = 0.03;
    x_mod[species::CO2] = 0.82;
    x_mod[species::O2] = 0.15;
    let mod_src = StreamDesign {
        p: p_mod_src,
        t: 310.0,
        w: w_mod,
        x: x_mod.clone(),
    };

    // compressor
    let kappa = table.r_mix(&x_mod) / table.cp_mix(&x_mod);
    let t_comp_out = 310.0 * (1.0 + (pressure_ratio.powf(kappa) - 1.0) / eta_compressor);
    let comp_out = StreamDesign {
        p: p_loop,
        t: t_comp_out,
        w: w_mod,
        x: x_mod.clone(),
    };
    let ic_out = StreamDesign {
        p: p_loop,
        t: t_intercooler,
        w: w_mod,
        x: x_mod.clone(),
    };

    // condenser split
    let split = condenser_split(p_loop, t_condenser, &x_mod, w_mod, &table, &WATER_SATURATION)
        .expect("design condenser split");
    let w_loop = split.w_gas;
    let x_loop = split.x_out.clone();
    let cond_out = StreamDesign {
        p: p_loop,
        t: t_condenser,
        w: w_loop,
        x: x_loop.clone(),
    };
    let recup_cold_out = StreamDesign {
        p: p_sofc_in,
        t: t_cathode_in,
        w: w_loop,
        x: x_loop.clone(),
    };

    // fuel: CH4 + 2 H2O (steam/carbon = 2), partially pre-reformed upstream
    // so the first stack volume sees a healthy hydrogen partial pressure
    let pre_reform = 0.6;
    let pre_shift = 0.5;
    let n0 = 1.0;
    let reformed = pre_reform * n0;
    let shifted = pre_shift * reformed;
    let mut n_fuel = vec![0.0; s];
    n_fuel[species::CH4] = n0 - reformed;
    n_fuel[species::H2O] = 2.0 * n0 - reformed - shifted;
    n_fuel[species::H2] = 3.0 * reformed + shifted;
    n_fuel[species::CO] = reformed - shifted;
    n_fuel[species::CO2] = shifted;
    let (_, x_fuel) = mass_from_molar(&table, &n_fuel);
    let fuel_src = StreamDesign {
        p: p_sofc_in,
        t: t_fuel,
        w: w_fuel,
        x: x_fuel.clone(),
    };

    // fuel cell operating point: hydrogen-equivalent of the whole feed
    let n_fuel_flow: Vec<f64> = x_fuel
        .iter()
        .zip(&table.species)
        .map(|(xi, sp)| w_fuel * xi / sp.molar_mass)
        .collect();
    let h2_equiv = 4.0 * n_fuel_flow[species::CH4]
        + n_fuel_flow[species::H2]
        + n_fuel_flow[species::CO];
    let i_set = fuel_utilization * h2_equiv * 2.0 * FARADAY;
    let j_des = i_set / (n_vol as f64 * area);
    let r_el_vol = i_set / (2.0 * FARADAY) / n_vol as f64;

    // channel marches
    let mut n_a: Vec<f64> = x_fuel
        .iter()
        .zip(&table.species)
        .map(|(xi, sp)| w_fuel * xi / sp.molar_mass)
        .collect();
    let mut n_c: Vec<f64> = x_loop
        .iter()
        .zip(&table.species)
        .map(|(xi, sp)| w_loop * xi / sp.molar_mass)
        .collect();
    let mut sofc_volumes = Vec::with_capacity(n_vol);
    let t_a_in_profile = 905.0;
    let t_a_out_profile = 960.0;
    let t_c_out_profile = 985.0;
    for k in 0..n_vol {
        let r_ref = 0.35 * n_a[species::CH4];
        let r_wgs = 0.30 * (n_a[species::CO] + r_ref);
        n_a[species::CH4] -= r_ref;
        n_a[species::H2] += 3.0 * r_ref + r_wgs - r_el_vol;
        n_a[species::H2O] += -r_ref - r_wgs + r_el_vol;
        n_a[species::CO] += r_ref - r_wgs;
        n_a[species::CO2] += r_wgs;
        assert!(n_a[species::H2] > 0.0, "design march starves hydrogen");
        n_c[species::O2] -= 0.5 * r_el_vol;
        assert!(n_c[species::O2] > 0.0, "design march starves oxygen");
        let (w_a, x_a) = mass_from_molar(&table, &n_a);
        let (w_c, x_c) = mass_from_molar(&table, &n_c);
        let f = (k as f64 + 0.5) / n_vol as f64;
        let t_a = t_a_in_profile + (t_a_out_profile - t_a_in_profile) * f;
        let t_c = t_cathode_in + (t_c_out_profile - t_cathode_in) * f;
        sofc_volumes.push(FuelCellVolumeDesign {
            t_anode: t_a,
            t_cathode: t_c,
            t_pen: 0.5 * (t_a + t_c) + 15.0,
            x_anode: x_a,
            x_cathode: x_c,
            j: j_des,
            r_ref,
            r_wgs,
            w_anode: w_a,
            w_cathode: w_c,
        });
    }
    let last = sofc_volumes.last().unwrap();
    let anode_out = StreamDesign {
        p: p_comb,
        t: last.t_anode,
        w: last.w_anode,
        x: last.x_anode.clone(),
    };
    let cathode_out = StreamDesign {
        p: p_comb,
        t: last.t_cathode,
        w: last.w_cathode,
        x: last.x_cathode.clone(),
    };
    debug_assert!((anode_out.w + cathode_out.w - (w_fuel + w_loop)).abs() < 1e-12);

    // combustor: complete combustion, adiabatic mixing temperature
    let (w_comb, x_comb) =
        crate::components::combustor::burn(anode_out.w, &anode_out.x, cathode_out.w, &cathode_out.x, &table)
            .expect("design combustion has excess oxygen");
    let h_comb = (anode_out.w * anode_out.enthalpy(&table)
        + cathode_out.w * cathode_out.enthalpy(&table))
        / w_comb;
    let comb_t = table.temperature_from_enthalpy(h_comb, &x_comb);
    let comb_out = StreamDesign {
        p: p_comb,
        t: comb_t,
        w: w_comb,
        x: x_comb.clone(),
    };

    // turbine
    let beta = p_comb / p_turb_out;
    let t_is = table.isentropic_temperature(comb_t, p_comb, p_turb_out, &x_comb);
    let h_in = comb_out.enthalpy(&table);
    let h_is = table.enthalpy(t_is, &x_comb);
    let h_turb_out = h_in - eta_turbine * (h_in - h_is);
    let t_turb_out = table.temperature_from_enthalpy(h_turb_out, &x_comb);
    let turbine_power = w_comb * (h_in - h_turb_out);
    let rho_in = p_comb / (table.r_mix(&x_comb) * comb_t);
    let k_t = TurbineParams::fit_k_t(w_comb, p_comb, rho_in, beta);
    let turb_out = StreamDesign {
        p: p_turb_out,
        t: t_turb_out,
        w: w_comb,
        x: x_comb.clone(),
    };

    // recuperator duty and sizing
    let recup_modules = 2usize;
    let recup_volumes_per_module = 3usize;
    let n_cells = recup_modules * recup_volumes_per_module;
    let q_duty = w_loop * (table.enthalpy(t_cathode_in, &x_loop) - table.enthalpy(t_condenser, &x_loop));
    let h_hot_out = h_turb_out - q_duty / w_comb;
    let t_hot_out = table.temperature_from_enthalpy(h_hot_out, &x_comb);
    assert!(
        t_hot_out > t_condenser + 20.0,
        "recuperator design pinch violated: hot outlet {t_hot_out} K"
    );
    let recup_hot_out = StreamDesign {
        p: p_sink,
        t: t_hot_out,
        w: w_comb,
        x: x_comb.clone(),
    };
    let recup_cell_area = 2.0;
    let mut dt_mean = 0.0;
    for k in 0..n_cells {
        let f = (k as f64 + 0.5) / n_cells as f64;
        let th = t_turb_out + (t_hot_out - t_turb_out) * f;
        let tc = t_cathode_in + (t_condenser - t_cathode_in) * f;
        dt_mean += (th - tc) / n_cells as f64;
    }
    let recup_gamma_nom = q_duty / (n_cells as f64 * recup_cell_area * dt_mean);

    // electrochemical parameters sized from a loss budget at the design point
    let hor = ReactionParams::from_table(
        "hydrogen-oxidation",
        &table,
        vec![
            (species::H2, -1.0),
            (species::O2, -0.5),
            (species::H2O, 1.0),
        ],
        1.0,
        0.0,
        (species::H2, species::O2),
    );
    let mid = &sofc_volumes[n_vol / 2];
    let y_a = table.mole_fractions(&mid.x_anode);
    let y_c = table.mole_fractions(&mid.x_cathode);
    let b = open_circuit_potential(
        sofc_t_nom,
        y_a[species::H2] * p_comb,
        y_a[species::H2O] * p_comb,
        y_c[species::O2] * p_comb,
        n_electrons,
        delta_g(&hor, sofc_t_nom),
    );
    let polarization_a = (e_des - b) / i_set;
    let loss_budget = b - e_des;
    let r_ohm = 0.4 * loss_budget / j_des;
    let e_act_budget = 0.2 * loss_budget;
    let c_act = R_GAS * sofc_t_nom / (alpha * n_electrons * FARADAY);
    let j0_target = j_des / (2.0 * (e_act_budget / c_act).sinh());
    let ea_el = 1.1e5;
    let k_el = |j0: f64| j0 / (R_GAS * sofc_t_nom / (n_electrons * FARADAY))
        / (-ea_el / (R_GAS * sofc_t_nom)).exp();
    let k_el_anode = k_el(j0_target);
    let k_el_cathode = k_el(j0_target * 0.8);
    // diffusion lumps chosen for a mild design exponent
    let lump = |target_exp: f64| target_exp * 4.0 * FARADAY / (R_GAS * sofc_t_nom * j_des);
    let diff_lump_h2 = lump(0.08);
    let diff_lump_h2o = lump(0.08);
    let diff_lump_o2 = lump(0.05);

    // reaction kinetics sized to reproduce the design rates mid-stack
    let (ea_reforming, ea_shift) = (1.2e5, 0.8e5);
    let reforming = ReactionParams::from_table(
        "reforming",
        &table,
        vec![
            (species::CH4, -1.0),
            (species::H2O, -1.0),
            (species::H2, 3.0),
            (species::CO, 1.0),
        ],
        1.0,
        ea_reforming,
        (species::CH4, species::H2O),
    );
    let shift = ReactionParams::from_table(
        "water-gas-shift",
        &table,
        vec![
            (species::CO, -1.0),
            (species::H2O, -1.0),
            (species::H2, 1.0),
            (species::CO2, 1.0),
        ],
        1.0,
        ea_shift,
        (species::CO, species::H2O),
    );
    let pref = 101_325.0;
    let p_of = |y: &[f64], i: usize| y[i] * p_comb / pref;
    let t_mid = mid.t_anode;
    let keq_ref = crate::media::equilibrium_constant(&reforming, t_mid);
    let driving_ref = p_of(&y_a, species::CH4) * p_of(&y_a, species::H2O)
        - p_of(&y_a, species::H2).powi(3) * p_of(&y_a, species::CO) / keq_ref;
    let arr_ref = (-ea_reforming / (R_GAS * t_mid)).exp();
    let k0_reforming = (mid.r_ref / (arr_ref * driving_ref)).abs();
    let keq_wgs = crate::media::equilibrium_constant(&shift, t_mid);
    let driving_wgs = p_of(&y_a, species::CO) * p_of(&y_a, species::H2O)
        - p_of(&y_a, species::CO2) * p_of(&y_a, species::H2) / keq_wgs;
    let arr_wgs = (-ea_shift / (R_GAS * t_mid)).exp();
    let k0_shift = (mid.r_wgs / (arr_wgs * driving_wgs)).abs();

    DemoDesign {
        table,
        p_sink,
        w_mod,
        w_fuel,
        turbine_power,
        comb_t,
        mod_src,
        comp_out,
        ic_out,
        cond_out,
        recup_cold_out,
        fuel_src,
        anode_out,
        cathode_out,
        comb_out,
        turb_out,
        recup_hot_out,
        dp_recup_module,
        dp_sofc,
        pressure_ratio,
        eta_compressor,
        eta_turbine,
        k_t,
        t_intercooler,
        t_condenser,
        recup_modules,
        recup_volumes_per_module,
        recup_cell_volume: 0.015,
        recup_cell_area,
        recup_gamma_nom,
        recup_wall_capacity: 5e4,
        sofc_n_volumes: n_vol,
        sofc_area_per_volume: area,
        sofc_channel_volume: 0.004,
        sofc_pen_area: 1.5,
        sofc_pen_capacity: 2e4,
        sofc_gamma_nom: 70.0,
        sofc_t_nom,
        i_set,
        polarization_a,
        polarization_b: b,
        r_ohm,
        k_el_anode,
        k_el_cathode,
        ea_el,
        alpha,
        n_electrons,
        diff_lump_h2,
        diff_lump_h2o,
        diff_lump_o2,
        k0_reforming,
        ea_reforming,
        k0_shift,
        ea_shift,
        sofc_volumes,
        combustor_volume: 0.02,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_march_is_feasible() {
        let d = design_demo();
        assert!(d.polarization_a < 0.0, "a = {}", d.polarization_a);
        assert!(d.polarization_b > 0.0);
        assert!(d.turbine_power > 1e4, "P = {}", d.turbine_power);
        assert!(d.comb_t > 1000.0 && d.comb_t < 1600.0, "T_comb = {}", d.comb_t);
        assert!(d.k_t > 0.0);
        assert!(d.recup_gamma_nom > 5.0 && d.recup_gamma_nom < 5000.0);
        // every volume design composition sums to one and stays positive
        for vd in &d.sofc_volumes {
            for x in vd.x_anode.iter().chain(vd.x_cathode.iter()) {
                assert!(*x >= 0.0);
            }
            let sa: f64 = vd.x_anode.iter().sum();
            let sc: f64 = vd.x_cathode.iter().sum();
            assert!((sa - 1.0).abs() < 1e-12 && (sc - 1.0).abs() < 1e-12);
        }
        // condensation actually happens at the design point
        assert!(d.cond_out.w < d.w_mod);
        // kinetics sized with positive rate constants
        assert!(d.k0_reforming > 0.0 && d.k0_shift > 0.0);
    }
}
