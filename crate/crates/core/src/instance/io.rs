//! JSON instance documents.
//!
//! Top-level keys: `nodes`, `arcs`, `physical`, `costs`, and optionally
//! `cable_catalog`, `pipe_catalog`, `options`, `meta`. Unknown keys are
//! rejected at every level. See `docs/formats.md` for the field list.

use serde::{Deserialize, Serialize};

use super::{
    ArcDemand, ArcParams, CableCatalog, CableType, CostParams, Instance, InstanceMeta, ModelOptions, NetArc, Network,
    PhysicalParams, PipeCatalog, PipeType, TechLoads, ValidationReport, DEFAULT_GAS_DENSITY, DEFAULT_GAS_VELOCITY,
};

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid document: {0}")]
    Structure(String),
    #[error("validation failed: {0}")]
    Invalid(ValidationReport),
}

impl InstanceError {
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            InstanceError::Invalid(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    #[serde(default, skip_serializing_if = "is_default_meta")]
    pub meta: InstanceMeta,
    /// Node ids, must be exactly `0..n`.
    pub nodes: Vec<usize>,
    pub arcs: Vec<ArcDoc>,
    pub physical: PhysicalDoc,
    pub costs: CostsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cable_catalog: Option<Vec<CableType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipe_catalog: Option<PipeCatalogDoc>,
    #[serde(default)]
    pub options: ModelOptions,
}

fn is_default_meta(m: &InstanceMeta) -> bool {
    *m == InstanceMeta::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcDoc {
    pub i: usize,
    pub j: usize,
    pub length_m: f64,
    pub demand: DemandDoc,
    #[serde(rename = "R_e", default, skip_serializing_if = "Option::is_none")]
    pub r_e: Option<f64>,
    #[serde(rename = "R_g", default, skip_serializing_if = "Option::is_none")]
    pub r_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DemandDoc {
    pub SEL: f64,
    pub SHL: f64,
    pub MEL: f64,
    pub MHL: f64,
    pub SEL_CB: f64,
    pub MEL_CB: f64,
    pub SGL_CB: f64,
    pub MGL_CB: f64,
    pub SEL_CHP: f64,
    pub MEL_CHP: f64,
    pub SGL_CHP: f64,
    pub MGL_CHP: f64,
    pub SEL_HP: f64,
    pub MEL_HP: f64,
    pub SGL_HP: f64,
    pub MGL_HP: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalDoc {
    pub u_max: f64,
    pub u_min: f64,
    pub a_e: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub a_g: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsDoc {
    pub alpha_p_e: f64,
    pub alpha_p_g: f64,
    pub beta_e: f64,
    pub beta_g: f64,
    pub t_adv: f64,
    pub alpha_a_e: f64,
    pub alpha_a_g: f64,
    pub gamma_cb: f64,
    pub gamma_chp: f64,
    pub gamma_hp: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub kappa_e: f64,
    pub kappa_g: f64,
    pub e_target: f64,
    pub mu1: f64,
    pub mu2: f64,
}

fn default_density() -> f64 {
    DEFAULT_GAS_DENSITY
}

fn default_velocity() -> f64 {
    DEFAULT_GAS_VELOCITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeCatalogDoc {
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_velocity")]
    pub velocity: f64,
    pub types: Vec<PipeType>,
}

impl From<DemandDoc> for ArcDemand {
    fn from(d: DemandDoc) -> Self {
        ArcDemand {
            sel: d.SEL,
            shl: d.SHL,
            mel: d.MEL,
            mhl: d.MHL,
            cb: TechLoads { sel: d.SEL_CB, mel: d.MEL_CB, sgl: d.SGL_CB, mgl: d.MGL_CB },
            chp: TechLoads { sel: d.SEL_CHP, mel: d.MEL_CHP, sgl: d.SGL_CHP, mgl: d.MGL_CHP },
            hp: TechLoads { sel: d.SEL_HP, mel: d.MEL_HP, sgl: d.SGL_HP, mgl: d.MGL_HP },
        }
    }
}

impl From<&ArcDemand> for DemandDoc {
    fn from(d: &ArcDemand) -> Self {
        DemandDoc {
            SEL: d.sel,
            SHL: d.shl,
            MEL: d.mel,
            MHL: d.mhl,
            SEL_CB: d.cb.sel,
            MEL_CB: d.cb.mel,
            SGL_CB: d.cb.sgl,
            MGL_CB: d.cb.mgl,
            SEL_CHP: d.chp.sel,
            MEL_CHP: d.chp.mel,
            SGL_CHP: d.chp.sgl,
            MGL_CHP: d.chp.mgl,
            SEL_HP: d.hp.sel,
            MEL_HP: d.hp.mel,
            SGL_HP: d.hp.sgl,
            MGL_HP: d.hp.mgl,
        }
    }
}

impl InstanceDocument {
    /// Converts to the data model without running validation.
    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        if self.nodes.iter().enumerate().any(|(k, &id)| k != id) {
            return Err(InstanceError::Structure("nodes must be listed as 0, 1, ..., n in order".into()));
        }
        let node_count = self.nodes.len();
        let mut network = Network { node_count, arcs: Vec::with_capacity(self.arcs.len()) };
        let mut params = Vec::with_capacity(self.arcs.len());
        for a in self.arcs {
            network.arcs.push(NetArc { from: a.i, to: a.j, length_m: a.length_m });
            params.push(ArcParams { demand: a.demand.into(), r_e: a.r_e, r_g: a.r_g, zeta_g: a.zeta_g });
        }
        let p = self.physical;
        let c = self.costs;
        Ok(Instance {
            network,
            arcs: params,
            physical: PhysicalParams {
                u_max: p.u_max,
                u_min: p.u_min,
                a_e: p.a_e,
                p_max: p.p_max,
                p_min: p.p_min,
                a_g: p.a_g,
                q_max: p.q_max,
            },
            costs: CostParams {
                alpha_p_e: c.alpha_p_e,
                alpha_p_g: c.alpha_p_g,
                beta_e: c.beta_e,
                beta_g: c.beta_g,
                t_adv: c.t_adv,
                alpha_a_e: c.alpha_a_e,
                alpha_a_g: c.alpha_a_g,
                gamma: [c.gamma_cb, c.gamma_chp, c.gamma_hp],
                nu1: c.nu1,
                nu2: c.nu2,
                kappa_e: c.kappa_e,
                kappa_g: c.kappa_g,
                e_target: c.e_target,
                mu1: c.mu1,
                mu2: c.mu2,
            },
            cable_catalog: self.cable_catalog.map(|types| CableCatalog { types }),
            pipe_catalog: self.pipe_catalog.map(|d| PipeCatalog {
                density: d.density,
                velocity: d.velocity,
                types: d.types,
            }),
            options: self.options,
            meta: self.meta,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let p = &inst.physical;
        let c = &inst.costs;
        InstanceDocument {
            meta: inst.meta.clone(),
            nodes: (0..inst.network.node_count).collect(),
            arcs: inst
                .network
                .arcs
                .iter()
                .zip(&inst.arcs)
                .map(|(a, prm)| ArcDoc {
                    i: a.from,
                    j: a.to,
                    length_m: a.length_m,
                    demand: (&prm.demand).into(),
                    r_e: prm.r_e,
                    r_g: prm.r_g,
                    zeta_g: prm.zeta_g,
                })
                .collect(),
            physical: PhysicalDoc {
                u_max: p.u_max,
                u_min: p.u_min,
                a_e: p.a_e,
                p_max: p.p_max,
                p_min: p.p_min,
                a_g: p.a_g,
                q_max: p.q_max,
            },
            costs: CostsDoc {
                alpha_p_e: c.alpha_p_e,
                alpha_p_g: c.alpha_p_g,
                beta_e: c.beta_e,
                beta_g: c.beta_g,
                t_adv: c.t_adv,
                alpha_a_e: c.alpha_a_e,
                alpha_a_g: c.alpha_a_g,
                gamma_cb: c.gamma[0],
                gamma_chp: c.gamma[1],
                gamma_hp: c.gamma[2],
                nu1: c.nu1,
                nu2: c.nu2,
                kappa_e: c.kappa_e,
                kappa_g: c.kappa_g,
                e_target: c.e_target,
                mu1: c.mu1,
                mu2: c.mu2,
            },
            cable_catalog: inst.cable_catalog.as_ref().map(|c| c.types.clone()),
            pipe_catalog: inst.pipe_catalog.as_ref().map(|c| PipeCatalogDoc {
                density: c.density,
                velocity: c.velocity,
                types: c.types.clone(),
            }),
            options: inst.options,
        }
    }
}

/// Parses and validates an instance document.
pub fn load_instance(text: &str) -> Result<Instance, InstanceError> {
    let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| InstanceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let inst = doc.into_instance()?;
    let report = inst.validate();
    if report.is_valid() {
        Ok(inst)
    } else {
        Err(InstanceError::Invalid(report))
    }
}

/// Pretty-printed JSON document; `load_instance` inverts it.
pub fn save_instance(inst: &Instance) -> String {
    let mut s =
        serde_json::to_string_pretty(&InstanceDocument::from_instance(inst)).expect("instance document serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::super::tests::one_arc;
    use super::*;

    #[test]
    fn round_trip_table_instance() {
        let inst = one_arc();
        let text = save_instance(&inst);
        let back = load_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.demand(0).cb.sgl, 73478.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let inst = one_arc();
        let mut v: serde_json::Value = serde_json::from_str(&save_instance(&inst)).unwrap();
        v["physical"]["bogus"] = serde_json::json!(1.0);
        let err = load_instance(&v.to_string()).unwrap_err();
        assert!(matches!(err, InstanceError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn hp_gas_error_names_invariant() {
        let mut inst = one_arc();
        inst.arcs[0].demand.hp.sgl = 5.0;
        let err = load_instance(&save_instance(&inst)).unwrap_err();
        assert!(err.to_string().contains("SGL_HP must be 0"), "{err}");
    }

    #[test]
    fn mu_error_names_invariant() {
        let mut inst = one_arc();
        inst.costs.mu1 = 0.2;
        inst.costs.mu2 = 0.3;
        let err = load_instance(&save_instance(&inst)).unwrap_err();
        assert!(err.to_string().contains("μ₁ > μ₂ violated"), "{err}");
    }

    #[test]
    fn parse_error_has_position() {
        let err = load_instance("{\n  \"nodes\": [0, 1],\n  \"arcs\": oops\n}").unwrap_err();
        match err {
            InstanceError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn node_ids_must_be_dense() {
        let inst = one_arc();
        let mut v: serde_json::Value = serde_json::from_str(&save_instance(&inst)).unwrap();
        v["nodes"] = serde_json::json!([0, 2]);
        assert!(matches!(load_instance(&v.to_string()), Err(InstanceError::Structure(_))));
    }
}
