//! Small reference instances.
//!
//! The demand row is measured data for arc (10,11) of a residential street
//! network. All physical and price parameters are synthetic.

use super::*;

/// Demand row of arc (10,11): yearly and peak loads per technology.
pub fn table_demand() -> ArcDemand {
    ArcDemand {
        sel: 14771.0,
        shl: 66116.0,
        mel: 4.6,
        mhl: 47.6,
        cb: TechLoads { sel: 14771.0, mel: 4.6, sgl: 73478.0, mgl: 52.9 },
        chp: TechLoads { sel: 5573.0, mel: 4.3, sgl: 83588.0, mgl: 55.8 },
        hp: TechLoads { sel: 36836.0, mel: 18.9, sgl: 0.0, mgl: 0.0 },
    }
}

/// Two nodes joined by one arc carrying the (10,11) demand row.
pub fn table_one_arc() -> Instance {
    Instance {
        network: Network { node_count: 2, arcs: vec![NetArc { from: 0, to: 1, length_m: 100.0 }] },
        arcs: vec![ArcParams { demand: table_demand(), r_e: Some(1.0), r_g: Some(0.1), zeta_g: Some(500.0) }],
        physical: PhysicalParams {
            u_max: 400.0,
            u_min: 300.0,
            a_e: 1.0,
            p_max: 60.0,
            p_min: 10.0,
            a_g: 1.0,
            q_max: 100.0,
        },
        costs: CostParams {
            alpha_p_e: 0.3,
            alpha_p_g: 0.08,
            beta_e: 0.02,
            beta_g: 0.006,
            t_adv: 0.4,
            alpha_a_e: 40.0,
            alpha_a_g: 10.0,
            gamma: [600.0, 1500.0, 1200.0],
            nu1: 0.02,
            nu2: 0.05,
            kappa_e: 0.4,
            kappa_g: 0.2,
            e_target: 1e9,
            mu1: 0.3,
            mu2: 0.15,
        },
        cable_catalog: None,
        pipe_catalog: None,
        options: ModelOptions::default(),
        meta: InstanceMeta {
            synthetic: true,
            description: "arc (10,11) demand row; synthetic physical and price parameters".into(),
        },
    }
}
