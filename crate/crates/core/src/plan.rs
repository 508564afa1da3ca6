//! Concrete network plans: the discrete choices and renovation levels of
//! every arc, and the loads they induce.

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Tech};

/// Decisions on one arc.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcDecision {
    /// Installed technology; `None` on arcs without heat demand.
    #[serde(default)]
    pub tech: Option<Tech>,
    /// First-stage renovation progress in `[0, 1]`.
    #[serde(default)]
    pub reno1: f64,
    /// Second-stage renovation progress in `[0, 1]`; positive only after a
    /// completed first stage.
    #[serde(default)]
    pub reno2: f64,
    /// Gas pipe built on the arc.
    #[serde(default)]
    pub pipe: bool,
    /// Cable catalog index when cables are sized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cable_type: Option<usize>,
    /// Pipe catalog index when pipes are sized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipe_type: Option<usize>,
}

impl ArcDecision {
    /// Second stage started, which requires the first stage to be complete.
    pub fn second_stage_started(&self) -> bool {
        self.reno2 > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanDecisions {
    pub arcs: Vec<ArcDecision>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecisionError {
    #[error("decisions cover {got} arcs, instance has {expected}")]
    ArcCount { expected: usize, got: usize },
    #[error("arc ({i},{j}): heat demand requires exactly one technology")]
    MissingTech { i: usize, j: usize },
    #[error("arc ({i},{j}): technology on an arc without heat demand")]
    TechWithoutHeat { i: usize, j: usize },
    #[error("arc ({i},{j}): renovation levels must satisfy 0 ≤ reno2 ≤ reno1 ≤ 1")]
    RenovationOrder { i: usize, j: usize },
    #[error("arc ({i},{j}): second-stage renovation before first stage is complete")]
    RenovationCompletion { i: usize, j: usize },
    #[error("arc ({i},{j}): renovation without a technology")]
    RenovationWithoutTech { i: usize, j: usize },
    #[error("arc ({i},{j}): pipe linkage violated ({tech} needs a gas pipe)")]
    PipeLinkage { i: usize, j: usize, tech: Tech },
    #[error("arc ({i},{j}): cable type {k:?} does not match the cable options")]
    CableType { i: usize, j: usize, k: Option<usize> },
    #[error("arc ({i},{j}): pipe type {k:?} does not match the pipe options")]
    PipeType { i: usize, j: usize, k: Option<usize> },
}

impl PlanDecisions {
    /// Every heat arc gets `tech`, no renovation, pipes exactly where gas is used.
    pub fn uniform(inst: &Instance, tech: Tech) -> Self {
        let arcs = (0..inst.arc_count())
            .map(|k| {
                let heat = inst.demand(k).has_heat();
                ArcDecision { tech: heat.then_some(tech), pipe: heat && tech.uses_gas(), ..Default::default() }
            })
            .collect();
        Self { arcs }
    }

    /// Checks the structural rules on decisions. Pipe linkage is checked
    /// here as well, since it is independent of any flow computation.
    pub fn check(&self, inst: &Instance) -> Result<(), DecisionError> {
        if self.arcs.len() != inst.arc_count() {
            return Err(DecisionError::ArcCount { expected: inst.arc_count(), got: self.arcs.len() });
        }
        for (k, d) in self.arcs.iter().enumerate() {
            let (i, j) = inst.endpoints(k);
            let heat = inst.demand(k).has_heat();
            match (heat, d.tech) {
                (true, None) => return Err(DecisionError::MissingTech { i, j }),
                (false, Some(_)) => return Err(DecisionError::TechWithoutHeat { i, j }),
                _ => {}
            }
            if d.tech.is_none() && (d.reno1 != 0.0 || d.reno2 != 0.0) {
                return Err(DecisionError::RenovationWithoutTech { i, j });
            }
            if !(0.0 <= d.reno2 && d.reno2 <= d.reno1 && d.reno1 <= 1.0) {
                return Err(DecisionError::RenovationOrder { i, j });
            }
            if d.reno2 > 0.0 && d.reno1 < 1.0 {
                return Err(DecisionError::RenovationCompletion { i, j });
            }
            if let Some(t) = d.tech {
                if t.uses_gas() && !d.pipe {
                    return Err(DecisionError::PipeLinkage { i, j, tech: t });
                }
            }
            let cables = inst.cable_catalog.as_ref().map_or(0, |c| c.types.len());
            let cable_ok = match d.cable_type {
                None => inst.arcs[k].r_e.is_some(),
                Some(c) => c < cables,
            };
            if !cable_ok {
                return Err(DecisionError::CableType { i, j, k: d.cable_type });
            }
            let pipes = inst.pipe_catalog.as_ref().map_or(0, |c| c.types.len());
            let pipe_ok = match (d.pipe, d.pipe_type) {
                (_, None) => !d.pipe || inst.arcs[k].r_g.is_some(),
                (true, Some(p)) => p < pipes,
                (false, Some(_)) => false,
            };
            if !pipe_ok {
                return Err(DecisionError::PipeType { i, j, k: d.pipe_type });
            }
        }
        Ok(())
    }
}

/// Supply requirements of one arc under a decision.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArcLoads {
    pub esum: f64,
    pub emax: f64,
    pub gsum: f64,
    pub gmax: f64,
    /// Electricity produced locally by a CHP unit on this arc, kWh/a.
    pub chp_esum: f64,
}

/// Renovation-discounted loads: the technology's full load minus the
/// heating share saved by renovation.
pub fn arc_loads(inst: &Instance, arc: usize, d: &ArcDecision) -> ArcLoads {
    let dem = inst.demand(arc);
    let Some(t) = d.tech.filter(|_| dem.has_heat()) else {
        return ArcLoads { esum: dem.sel, emax: dem.mel, ..Default::default() };
    };
    let (mu1, mu2) = (inst.costs.mu1, inst.costs.mu2);
    let l = dem.tech(t);
    // Same coefficient layout as the coupling rows: c·x − c·μ₁·x¹ − c·μ₂·x².
    let reduced = |full: f64, heating: f64| full - heating * mu1 * d.reno1 - heating * mu2 * d.reno2;
    let mut loads = ArcLoads {
        esum: reduced(l.sel, l.sel - dem.sel),
        emax: reduced(l.mel, l.mel - dem.mel),
        gsum: 0.0,
        gmax: 0.0,
        chp_esum: 0.0,
    };
    if t.uses_gas() {
        loads.gsum = reduced(l.sgl, l.sgl);
        loads.gmax = reduced(l.mgl, l.mgl);
    }
    if t == Tech::Chp {
        let gap = dem.sel - dem.chp.sel;
        loads.chp_esum = reduced(gap, gap);
    }
    loads
}

/// Node peak demands: half of every incident arc peak.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodePeaks {
    pub electric: Vec<f64>,
    pub gas: Vec<f64>,
}

pub fn node_peaks(inst: &Instance, decisions: &PlanDecisions) -> (Vec<ArcLoads>, NodePeaks) {
    let loads: Vec<ArcLoads> = decisions.arcs.iter().enumerate().map(|(k, d)| arc_loads(inst, k, d)).collect();
    let n = inst.node_count();
    let mut peaks = NodePeaks { electric: vec![0.0; n], gas: vec![0.0; n] };
    for node in 0..n {
        let incident = inst.network.incoming(node).chain(inst.network.outgoing(node));
        let (mut e, mut g) = (0.0, 0.0);
        for k in incident {
            e += loads[k].emax;
            g += loads[k].gmax;
        }
        peaks.electric[node] = 0.5 * e;
        peaks.gas[node] = 0.5 * g;
    }
    (loads, peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::one_arc;

    #[test]
    fn table_loads_per_technology() {
        let inst = one_arc();
        let expect = [
            (Tech::Cb, (73478.0, 52.9, 14771.0, 4.6)),
            (Tech::Chp, (83588.0, 55.8, 5573.0, 4.3)),
            (Tech::Hp, (0.0, 0.0, 36836.0, 18.9)),
        ];
        for (t, (gs, gm, es, em)) in expect {
            let d = PlanDecisions::uniform(&inst, t);
            let l = arc_loads(&inst, 0, &d.arcs[0]);
            assert_eq!((l.gsum, l.gmax, l.esum, l.emax), (gs, gm, es, em), "{t}");
        }
    }

    #[test]
    fn renovation_discount() {
        let inst = one_arc();
        let mut d = PlanDecisions::uniform(&inst, Tech::Cb);
        d.arcs[0].reno1 = 1.0;
        let l = arc_loads(&inst, 0, &d.arcs[0]);
        assert!((l.gsum - 51434.6).abs() < 1e-9);
        assert!((l.gmax - 37.03).abs() < 1e-12);

        let mut d = PlanDecisions::uniform(&inst, Tech::Hp);
        d.arcs[0].reno1 = 1.0;
        let l = arc_loads(&inst, 0, &d.arcs[0]);
        assert!((l.esum - 30216.5).abs() < 1e-9);
    }

    #[test]
    fn node_peaks_halve_arc_peaks() {
        let inst = one_arc();
        let (_, p) = node_peaks(&inst, &PlanDecisions::uniform(&inst, Tech::Cb));
        assert_eq!(p.gas, vec![26.45, 26.45]);
        let (_, p) = node_peaks(&inst, &PlanDecisions::uniform(&inst, Tech::Hp));
        assert_eq!(p.gas, vec![0.0, 0.0]);
        let mut d = PlanDecisions::uniform(&inst, Tech::Cb);
        d.arcs[0].reno1 = 1.0;
        let (_, p) = node_peaks(&inst, &d);
        assert!((p.gas[1] - 18.515).abs() < 1e-12);
    }

    #[test]
    fn decision_rules() {
        let inst = one_arc();
        let mut d = PlanDecisions::uniform(&inst, Tech::Cb);
        assert!(d.check(&inst).is_ok());
        d.arcs[0].pipe = false;
        assert!(matches!(d.check(&inst), Err(DecisionError::PipeLinkage { .. })));
        let mut d = PlanDecisions::uniform(&inst, Tech::Hp);
        d.arcs[0].reno1 = 0.5;
        d.arcs[0].reno2 = 0.2;
        assert!(matches!(d.check(&inst), Err(DecisionError::RenovationCompletion { .. })));
        d.arcs[0].reno1 = 0.1;
        assert!(matches!(d.check(&inst), Err(DecisionError::RenovationOrder { .. })));
        d.arcs[0].tech = None;
        assert!(matches!(d.check(&inst), Err(DecisionError::MissingTech { .. })));
    }
}
