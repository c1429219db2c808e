//! Built-in demo plant: a miniature recuperated oxy-cycle with moderator
//! compression, condensation, recuperation, an internal-reforming SOFC, an
//! oxy-combustor, and a turbine, with homotopy decouplers at the component
//! inlets and boundary blocks on the fuel flow, the moderator flow, the
//! turbine power, and the combustor temperature.

use crate::boundary::{BoundaryMode, InputBlockSpec, OutputBlockSpec};
use crate::components::{
    CombustorParams, CompressorParams, CondenserParams, DecouplerParams, FuelCellParams,
    HxParams, IntercoolerParams, SinkParams, SourceFlow, SourceParams, TurbineParams,
};
use crate::components::heat_exchanger::HxSideParams;
use crate::media::WATER_SATURATION;

use super::design::{design_demo, DemoDesign};
use super::{ComponentSpec, Connection, InputBinding, NamedComponent, OutputBinding, PlantGraph};

/// Builds the demo plant graph from the design calculation.
pub fn build_demo_plant() -> PlantGraph {
    let d = design_demo();
    build_from_design(&d)
}

pub fn build_from_design(d: &DemoDesign) -> PlantGraph {
    let dec = |design: &crate::components::StreamDesign| {
        ComponentSpec::Decoupler(DecouplerParams::from_design(design.clone()))
    };
    let comp = |name: &str, spec: ComponentSpec| NamedComponent {
        name: name.into(),
        spec,
    };

    let components = vec![
        comp(
            "mod_src",
            ComponentSpec::Source(SourceParams {
                flow: SourceFlow::Signal,
                design: d.mod_src.clone(),
            }),
        ),
        comp(
            "comp",
            ComponentSpec::Compressor(CompressorParams {
                pressure_ratio: d.pressure_ratio,
                eta_is: d.eta_compressor,
                design_in: d.mod_src.clone(),
            }),
        ),
        comp("dec_ic", dec(&d.comp_out)),
        comp(
            "ic",
            ComponentSpec::Intercooler(IntercoolerParams {
                volume: 0.02,
                t_out: d.t_intercooler,
                design_in: d.comp_out.clone(),
            }),
        ),
        comp(
            "cond",
            ComponentSpec::Condenser(CondenserParams {
                volume: 0.02,
                saturation: WATER_SATURATION,
                t_out: d.t_condenser,
                design_in: d.ic_out.clone(),
            }),
        ),
        comp("dec_rc", dec(&d.cond_out)),
        comp(
            "recup",
            ComponentSpec::HeatExchanger(Box::new(HxParams {
                hot: HxSideParams {
                    modules: d.recup_modules,
                    volumes_per_module: d.recup_volumes_per_module,
                    cell_volume: d.recup_cell_volume,
                    cell_area: d.recup_cell_area,
                    gamma_nom: d.recup_gamma_nom,
                    w_nom: d.turb_out.w,
                    p_nom: d.turb_out.p,
                    dp_nom_per_module: d.dp_recup_module,
                    rho_nom: d.turb_out.p
                        / (d.table.r_mix(&d.turb_out.x) * d.turb_out.t),
                    design_in: d.turb_out.clone(),
                    design_out: d.recup_hot_out.clone(),
                },
                cold: HxSideParams {
                    modules: d.recup_modules,
                    volumes_per_module: d.recup_volumes_per_module,
                    cell_volume: d.recup_cell_volume,
                    cell_area: d.recup_cell_area,
                    gamma_nom: d.recup_gamma_nom,
                    w_nom: d.cond_out.w,
                    p_nom: d.cond_out.p,
                    dp_nom_per_module: d.dp_recup_module,
                    rho_nom: d.cond_out.p
                        / (d.table.r_mix(&d.cond_out.x) * d.cond_out.t),
                    design_in: d.cond_out.clone(),
                    design_out: d.recup_cold_out.clone(),
                },
                wall_heat_capacity: d.recup_wall_capacity,
            })),
        ),
        comp("dec_sc", dec(&d.recup_cold_out)),
        comp(
            "fuel_src",
            ComponentSpec::Source(SourceParams {
                flow: SourceFlow::Signal,
                design: d.fuel_src.clone(),
            }),
        ),
        comp("dec_sa", dec(&d.fuel_src)),
        comp(
            "sofc",
            ComponentSpec::FuelCell(Box::new(FuelCellParams {
                n_volumes: d.sofc_n_volumes,
                area_per_volume: d.sofc_area_per_volume,
                channel_volume_anode: d.sofc_channel_volume,
                channel_volume_cathode: d.sofc_channel_volume,
                pen_area_per_volume: d.sofc_pen_area,
                pen_heat_capacity: d.sofc_pen_capacity,
                r_ohm: d.r_ohm,
                k_el_anode: d.k_el_anode,
                k_el_cathode: d.k_el_cathode,
                ea_el_anode: d.ea_el,
                ea_el_cathode: d.ea_el,
                alpha: d.alpha,
                n_electrons: d.n_electrons,
                diff_lump_h2: d.diff_lump_h2,
                diff_lump_h2o: d.diff_lump_h2o,
                diff_lump_o2: d.diff_lump_o2,
                t_nom: d.sofc_t_nom,
                gamma_nom_anode: d.sofc_gamma_nom,
                gamma_nom_cathode: d.sofc_gamma_nom,
                dp_nom_anode: d.dp_sofc,
                dp_nom_cathode: d.dp_sofc,
                i_total: d.i_set,
                polarization_a: d.polarization_a,
                polarization_b: d.polarization_b,
                k0_reforming: d.k0_reforming,
                ea_reforming: d.ea_reforming,
                k0_shift: d.k0_shift,
                ea_shift: d.ea_shift,
                design_in_anode: d.fuel_src.clone(),
                design_in_cathode: d.recup_cold_out.clone(),
                volume_design: d.sofc_volumes.clone(),
            })),
        ),
        comp("dec_cf", dec(&d.anode_out)),
        comp("dec_co", dec(&d.cathode_out)),
        comp(
            "comb",
            ComponentSpec::Combustor(CombustorParams {
                volume: d.combustor_volume,
                design_fuel: d.anode_out.clone(),
                design_oxidant: d.cathode_out.clone(),
            }),
        ),
        comp("dec_t", dec(&d.comb_out)),
        comp(
            "turb",
            ComponentSpec::Turbine(TurbineParams {
                k_t: d.k_t,
                eta_is: d.eta_turbine,
                w_nom: d.comb_out.w,
                p_nom: d.comb_out.p,
                design_in: d.comb_out.clone(),
                design_out: d.turb_out.clone(),
            }),
        ),
        comp("dec_rh", dec(&d.turb_out)),
        comp(
            "sink",
            ComponentSpec::Sink(SinkParams {
                p: d.p_sink,
                design: d.recup_hot_out.clone(),
            }),
        ),
    ];

    let conn = |from: &str, to: &str| Connection {
        from: from.into(),
        to: to.into(),
    };
    let connections = vec![
        conn("mod_src.out", "comp.in"),
        conn("comp.out", "dec_ic.in"),
        conn("dec_ic.out", "ic.in"),
        conn("ic.out", "cond.in"),
        conn("cond.out", "dec_rc.in"),
        conn("dec_rc.out", "recup.cold_in"),
        conn("recup.cold_out", "dec_sc.in"),
        conn("dec_sc.out", "sofc.c_in"),
        conn("fuel_src.out", "dec_sa.in"),
        conn("dec_sa.out", "sofc.a_in"),
        conn("sofc.a_out", "dec_cf.in"),
        conn("dec_cf.out", "comb.fuel_in"),
        conn("sofc.c_out", "dec_co.in"),
        conn("dec_co.out", "comb.ox_in"),
        conn("comb.out", "dec_t.in"),
        conn("dec_t.out", "turb.in"),
        conn("turb.out", "dec_rh.in"),
        conn("dec_rh.out", "recup.hot_in"),
        conn("recup.hot_out", "sink.in"),
    ];

    let inputs = vec![
        InputBinding {
            block: InputBlockSpec {
                name: "u_fuel".into(),
                u_des: d.w_fuel,
                u_norm: d.w_fuel,
                mode: BoundaryMode::Fwd,
                pair: Some("y_power".into()),
                normalize: false,
            },
            actuator: "fuel_src.w_cmd".into(),
        },
        InputBinding {
            block: InputBlockSpec {
                name: "u_mod".into(),
                u_des: d.w_mod,
                u_norm: d.w_mod,
                mode: BoundaryMode::Fwd,
                pair: Some("y_temp".into()),
                normalize: false,
            },
            actuator: "mod_src.w_cmd".into(),
        },
    ];
    let outputs = vec![
        OutputBinding {
            block: OutputBlockSpec {
                name: "y_power".into(),
                y_des: d.turbine_power,
                y_offdes: 0.8 * d.turbine_power,
                y_norm: d.turbine_power,
                mode: BoundaryMode::Fwd,
                normalize: false,
            },
            sensor: "turb.P".into(),
            scale_with_load: true,
        },
        OutputBinding {
            block: OutputBlockSpec {
                name: "y_temp".into(),
                y_des: d.comb_t,
                y_offdes: d.comb_t,
                y_norm: d.comb_t,
                mode: BoundaryMode::Fwd,
                normalize: false,
            },
            sensor: "comb.T".into(),
            scale_with_load: false,
        },
    ];

    PlantGraph {
        species: d.table.clone(),
        components,
        connections,
        inputs,
        outputs,
    }
}
