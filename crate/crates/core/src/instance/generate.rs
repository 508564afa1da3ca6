//! Seeded synthetic instances for tests and benchmarks.
//!
//! Every parameter produced here is synthetic and the document is marked as
//! such. Demand tables are built from a random heat and plain-electricity
//! demand per arc, then converted per technology with efficiency factors
//! drawn so that the ordering invariants of [`ArcDemand`] hold by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    ArcDemand, ArcParams, CostParams, Instance, InstanceMeta, ModelOptions, NetArc, Network, PhysicalParams, TechLoads,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Tree,
    Ring,
    Grid,
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(Topology::Tree),
            "ring" => Ok(Topology::Ring),
            "grid" => Ok(Topology::Grid),
            other => Err(format!("unsupported topology '{other}' (expected tree, ring or grid)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Number of nodes including the source.
    pub nodes: usize,
    pub topology: Topology,
    pub seed: u64,
    /// Multiplies every yearly and peak demand.
    pub demand_scale: f64,
    /// Probability that an arc has no heat demand.
    pub no_heat_probability: f64,
}

impl GeneratorSpec {
    pub fn new(nodes: usize, topology: Topology, seed: u64) -> Self {
        Self { nodes, topology, seed, demand_scale: 1.0, no_heat_probability: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("ring topology needs at least 3 nodes, got {0}")]
    RingTooSmall(usize),
    #[error("demand_scale must be finite and > 0")]
    BadScale,
}

pub fn generate_instance(spec: &GeneratorSpec) -> Result<Instance, GenerateError> {
    let n = spec.nodes;
    if n < 2 {
        return Err(GenerateError::TooFewNodes(n));
    }
    if !(spec.demand_scale > 0.0 && spec.demand_scale.is_finite()) {
        return Err(GenerateError::BadScale);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs = match spec.topology {
        Topology::Tree => (1..n).map(|k| (rng.gen_range(0..k), k)).collect::<Vec<_>>(),
        Topology::Ring => {
            if n < 3 {
                return Err(GenerateError::RingTooSmall(n));
            }
            let mut p: Vec<_> = (0..n - 1).map(|k| (k, k + 1)).collect();
            p.push((n - 1, 0));
            p
        }
        Topology::Grid => grid_pairs(n),
    };

    let mut arcs = Vec::with_capacity(pairs.len());
    let mut params = Vec::with_capacity(pairs.len());
    for (from, to) in pairs {
        let length_m: f64 = round_to(rng.gen_range(50.0..150.0), 1.0);
        let heat = rng.gen::<f64>() >= spec.no_heat_probability;
        let demand = draw_demand(&mut rng, spec.demand_scale, heat);
        arcs.push(NetArc { from, to, length_m });
        params.push(ArcParams {
            demand,
            r_e: Some(round_to(2e-4 * length_m, 1e-6)),
            r_g: Some(round_to(2e-4 * length_m, 1e-6)),
            zeta_g: Some(round_to(8.0 * length_m, 1.0)),
        });
    }

    let mut inst = Instance {
        network: Network { node_count: n, arcs },
        arcs: params,
        physical: PhysicalParams {
            u_max: 400.0,
            u_min: 360.0,
            a_e: 0.00173,
            p_max: 60.0,
            p_min: 20.0,
            a_g: 10.0,
            q_max: 100.0,
        },
        costs: CostParams {
            alpha_p_e: 0.30,
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
            e_target: 0.0,
            mu1: 0.3,
            mu2: 0.15,
        },
        cable_catalog: None,
        pipe_catalog: None,
        options: ModelOptions::default(),
        meta: InstanceMeta {
            synthetic: true,
            description: format!(
                "generated: {:?} n={} seed={} demand_scale={}",
                spec.topology, n, spec.seed, spec.demand_scale
            ),
        },
    };
    // Loose cap: twice the largest possible emission.
    let worst: f64 = inst
        .arcs
        .iter()
        .map(|a| {
            let d = &a.demand;
            [&d.cb, &d.chp, &d.hp]
                .iter()
                .map(|l| inst.costs.kappa_e * l.sel.max(d.sel) + inst.costs.kappa_g * l.sgl)
                .fold(inst.costs.kappa_e * d.sel, f64::max)
        })
        .sum();
    inst.costs.e_target = round_to(2.0 * worst, 1.0);
    Ok(inst)
}

fn grid_pairs(n: usize) -> Vec<(usize, usize)> {
    let cols = (n as f64).sqrt().ceil() as usize;
    let mut pairs = Vec::new();
    for v in 0..n {
        let (r, c) = (v / cols, v % cols);
        if c + 1 < cols && v + 1 < n {
            pairs.push((v, v + 1));
        }
        let below = (r + 1) * cols + c;
        if below < n {
            pairs.push((v, below));
        }
    }
    pairs
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

fn draw_demand(rng: &mut ChaCha8Rng, scale: f64, heat: bool) -> ArcDemand {
    let sel = round_to(scale * rng.gen_range(8000.0..20000.0), 1.0);
    let mel = round_to(sel / rng.gen_range(2800.0..3600.0), 0.1);
    if !heat {
        let plain = TechLoads { sel, mel, sgl: 0.0, mgl: 0.0 };
        return ArcDemand { sel, shl: 0.0, mel, mhl: 0.0, cb: plain, chp: plain, hp: plain };
    }
    let shl = round_to(scale * rng.gen_range(30000.0..90000.0), 1.0);
    let mhl = round_to(shl / rng.gen_range(1200.0..1600.0), 0.1);

    // Boiler efficiency below one: gas loads exceed heat loads.
    let eta = rng.gen_range(0.86..0.94);
    let cb = TechLoads { sel, mel, sgl: round_up(shl / eta), mgl: round_up_tenth(mhl / eta) };

    // CHP trades part of the plain electricity demand for extra gas.
    let self_gen = (shl * rng.gen_range(0.10..0.16)).min(sel);
    let chp_sel = round_to(sel - self_gen, 1.0).max(0.0).min(sel);
    let chp_mel = round_to(mel * rng.gen_range(0.90..0.97), 0.1).min(mel);
    let chp_sgl = round_up(cb.sgl + self_gen * rng.gen_range(1.0..1.2));
    let chp_mgl = round_up_tenth(cb.mgl * rng.gen_range(1.03..1.10));
    let chp = TechLoads { sel: chp_sel, mel: chp_mel, sgl: chp_sgl, mgl: chp_mgl };

    let cop = rng.gen_range(2.8..3.4);
    let hp = TechLoads {
        sel: round_to(sel + shl / cop, 1.0),
        mel: round_to(mel + mhl / cop, 0.1).max(mel),
        sgl: 0.0,
        mgl: 0.0,
    };
    ArcDemand { sel, shl, mel, mhl, cb, chp, hp }
}

fn round_up(v: f64) -> f64 {
    v.ceil()
}

fn round_up_tenth(v: f64) -> f64 {
    (v * 10.0).ceil() / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_tree_is_valid() {
        let inst = generate_instance(&GeneratorSpec::new(2, Topology::Tree, 1)).unwrap();
        assert_eq!(inst.arc_count(), 1);
        assert!(inst.validate().is_valid(), "{}", inst.validate());
        assert!(inst.meta.synthetic);
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = GeneratorSpec::new(8, Topology::Tree, 7);
        assert_eq!(generate_instance(&spec).unwrap(), generate_instance(&spec).unwrap());
        let other = GeneratorSpec { seed: 8, ..spec };
        assert_ne!(generate_instance(&spec).unwrap(), generate_instance(&other).unwrap());
    }

    #[test]
    fn grid_has_cycles() {
        let inst = generate_instance(&GeneratorSpec::new(8, Topology::Grid, 7)).unwrap();
        // 3 columns, rows [0,1,2] [3,4,5] [6,7]: 5 horizontal + 5 vertical arcs.
        assert!(inst.arc_count() > inst.node_count() - 1);
        assert_eq!(inst.arc_count(), 10);
        assert!(!inst.is_tree());
        assert!(inst.validate().is_valid(), "{}", inst.validate());
    }

    #[test]
    fn ring_and_errors() {
        let inst = generate_instance(&GeneratorSpec::new(5, Topology::Ring, 3)).unwrap();
        assert_eq!(inst.arc_count(), 5);
        assert!(inst.validate().is_valid());
        assert_eq!(
            generate_instance(&GeneratorSpec::new(1, Topology::Tree, 3)).unwrap_err(),
            GenerateError::TooFewNodes(1)
        );
        assert!("hexagon".parse::<Topology>().is_err());
    }

    #[test]
    fn no_heat_arcs() {
        let spec = GeneratorSpec { no_heat_probability: 1.0, ..GeneratorSpec::new(4, Topology::Tree, 2) };
        let inst = generate_instance(&spec).unwrap();
        assert_eq!(inst.heat_arcs().count(), 0);
        assert!(inst.validate().is_valid(), "{}", inst.validate());
    }
}
