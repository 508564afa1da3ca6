use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn desnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_desnet")).args(args).output().expect("desnet runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stdout(o)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_instances_validate() {
    for name in ["one_arc.json", "tree5.json", "tree5_tight.json", "ring6.json", "tree4_sized.json"] {
        let o = desnet(&["validate", path(&data(name))]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains("valid"));
    }
}

#[test]
fn broken_instance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst: Value = serde_json::from_str(&std::fs::read_to_string(data("one_arc.json")).unwrap()).unwrap();
    inst["physical"]["u_min"] = 500.0.into();
    inst["arcs"][0]["length_m"] = (-1.0).into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, inst.to_string()).unwrap();

    let o = desnet(&["validate", path(&bad), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["valid"], false);
    assert!(v["violations"].as_array().unwrap().len() >= 2, "{v}");

    let o = desnet(&["solve", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let o = desnet(&["validate", path(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_is_reproducible_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = desnet(&["gen", "--nodes", "6", "--topology", "ring", "--seed", "3", "-o", path(p)]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_str(&ta).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 6);
    assert_eq!(v["arcs"].as_array().unwrap().len(), 6);
    assert!(v["meta"]["description"].as_str().unwrap().contains("\"seed\":3"));
    assert_eq!(desnet(&["validate", path(&a)]).status.code(), Some(0));

    let o = desnet(&["gen", "--nodes", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn formulate_exports_both_formats() {
    let o = desnet(&["formulate", path(&data("one_arc.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("ohmic"), "{text}");

    let o = desnet(&["formulate", path(&data("one_arc.json")), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["variables"].as_array().is_some_and(|v| !v.is_empty()));

    // Sizing needs catalogs.
    let o = desnet(&["formulate", path(&data("one_arc.json")), "--cable-sizing"]);
    assert_eq!(o.status.code(), Some(1));
    let o = desnet(&["formulate", path(&data("tree4_sized.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("cabletype") && text.contains("pipetype"), "{text}");
}

#[test]
fn sized_instance_matches_the_oracle() {
    let inst = data("tree4_sized.json");
    let o = desnet(&["solve", path(&inst), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let res = json(&o);
    assert_eq!(res["options"]["cable_sizing"], true);
    let exact = json(&desnet(&["oracle", path(&inst), "--json"]));
    let (a, b) = (res["objective"].as_f64().unwrap(), exact["objective"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
}

#[test]
fn solve_writes_a_result_that_simulates_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("result.json");
    let plan = dir.path().join("plan.json");
    let inst = data("tree5.json");
    let o = desnet(&["solve", path(&inst), "-o", path(&result), "--plan", path(&plan), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let res = json(&o);
    assert_eq!(res["status"], "optimal");
    let obj = res["objective"].as_f64().unwrap();
    assert!(res["gap"].as_f64().unwrap() <= 1e-6);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(saved, res);

    // The oracle agrees with the search on a tree.
    let o = desnet(&["oracle", path(&inst), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let exact = json(&o)["objective"].as_f64().unwrap();
    assert!((obj - exact).abs() <= 1e-6 * exact.abs(), "{obj} vs {exact}");

    // Simulating the plan, alone or inside the result, reproduces the cost.
    for src in [&plan, &result] {
        let o = desnet(&["simulate", path(&inst), path(src), "--json"]);
        assert_eq!(o.status.code(), Some(0));
        let sim = json(&o);
        assert_eq!(sim["feasible"], true);
        let total = sim["costs"]["total"].as_f64().unwrap();
        assert!((total - obj).abs() <= 1e-6 * obj, "{total} vs {obj}");
    }

    let o = desnet(&["report", path(&result), "--instance", path(&inst)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("optimal") && text.contains("E_target"), "{text}");
}

#[test]
fn tight_cap_changes_the_plan() {
    let loose = json(&desnet(&["solve", path(&data("tree5.json")), "--json"]));
    let o = desnet(&["solve", path(&data("tree5_tight.json")), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let tight = json(&o);
    assert!(tight["objective"].as_f64().unwrap() > loose["objective"].as_f64().unwrap());
    assert!(tight["costs"]["E_carbon"].as_f64().unwrap() <= 50_000.0 * (1.0 + 1e-9));
}

#[test]
fn zero_emission_target_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst: Value = serde_json::from_str(&std::fs::read_to_string(data("one_arc.json")).unwrap()).unwrap();
    inst["costs"]["e_target"] = 0.0.into();
    let p = dir.path().join("zero.json");
    std::fs::write(&p, inst.to_string()).unwrap();
    let out = dir.path().join("result.json");
    let o = desnet(&["solve", path(&p), "--json", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let res = json(&o);
    assert_eq!(res["status"], "emission-infeasible");
    assert_eq!(res["lower_bound"], "inf");
    let o = desnet(&["report", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("emission-infeasible"));
}

#[test]
fn node_limit_exits_with_limit_code() {
    let o = desnet(&["solve", path(&data("ring6.json")), "--node-limit", "1", "--json"]);
    let res = json(&o);
    match res["status"].as_str().unwrap() {
        "node-limit" => assert_eq!(o.status.code(), Some(3)),
        "feasible" | "optimal" => assert_eq!(o.status.code(), Some(0)),
        s => panic!("unexpected status {s}"),
    }
    assert!(res["nodes"].as_u64().unwrap() <= 1);
}

#[test]
fn oracle_refuses_rings_and_bad_grids() {
    let o = desnet(&["oracle", path(&data("ring6.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = desnet(&["oracle", path(&data("one_arc.json")), "--grid", "0.5,1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = desnet(&["oracle", path(&data("one_arc.json")), "--grid", "0,0.5,1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["nodes"], 15);
}

#[test]
fn bad_config_is_rejected() {
    let o = desnet(&["solve", path(&data("one_arc.json")), "--threads", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = desnet(&["solve", path(&data("one_arc.json")), "--renovation-grid", "0.5,1"]);
    assert_eq!(o.status.code(), Some(1));
}

/// Structural check of a document against one of the bundled schemas:
/// property names, required keys, enums and JSON types. Enough to catch the
/// schemas drifting from what the tools write.
fn conforms(doc: &Value, schema: &Value, file: &str) -> Result<(), String> {
    let root = |name: &str| -> Value {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
        serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
    };
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let (name, frag) = r.split_once('#').unwrap_or((r, ""));
        let file = if name.is_empty() { file } else { name };
        let mut target = root(file);
        for part in frag.split('/').filter(|p| !p.is_empty()) {
            target = target[part].clone();
        }
        return conforms(doc, &target, file);
    }
    if let Some(alts) = schema.get("oneOf").and_then(Value::as_array) {
        let errs: Vec<String> = alts.iter().filter_map(|a| conforms(doc, a, file).err()).collect();
        return if errs.len() < alts.len() { Ok(()) } else { Err(errs.join(" | ")) };
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        return if e.contains(doc) { Ok(()) } else { Err(format!("{doc} not in {e:?}")) };
    }
    let type_ok = |t: &str| match t {
        "object" => doc.is_object(),
        "array" => doc.is_array(),
        "number" => doc.is_number(),
        "integer" => doc.is_u64() || doc.is_i64(),
        "boolean" => doc.is_boolean(),
        "string" => doc.is_string(),
        "null" => doc.is_null(),
        _ => false,
    };
    match &schema["type"] {
        Value::String(t) if !type_ok(t) => return Err(format!("{doc} is not {t}")),
        Value::Array(ts) if !ts.iter().any(|t| type_ok(t.as_str().unwrap())) => {
            return Err(format!("{doc} is none of {ts:?}"))
        }
        _ => {}
    }
    if let Some(obj) = doc.as_object() {
        let props = schema["properties"].as_object();
        for key in schema["required"].as_array().into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                return Err(format!("missing {key}"));
            }
        }
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => conforms(v, s, file).map_err(|e| format!("{k}: {e}"))?,
                None if schema["additionalProperties"] == false => return Err(format!("undeclared key {k}")),
                None => {
                    if let Some(s) = schema.get("additionalProperties").filter(|s| s.is_object()) {
                        conforms(v, s, file).map_err(|e| format!("{k}: {e}"))?;
                    }
                }
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), doc.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            conforms(v, items, file).map_err(|e| format!("[{i}]: {e}"))?;
        }
    }
    Ok(())
}

fn check_schema(doc: &Value, file: &str) {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(file);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    if let Err(e) = conforms(doc, &schema, file) {
        panic!("document does not match {file}: {e}");
    }
}

#[test]
fn outputs_match_the_schemas() {
    for name in ["one_arc.json", "tree5.json", "tree5_tight.json", "ring6.json", "tree4_sized.json"] {
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(data(name)).unwrap()).unwrap();
        check_schema(&doc, "instance.schema.json");
    }
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let res = json(&desnet(&["solve", path(&data("tree4_sized.json")), "--json", "--plan", path(&plan)]));
    check_schema(&res, "solve-result.schema.json");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    check_schema(&doc, "decisions.schema.json");
    check_schema(&json(&desnet(&["oracle", path(&data("one_arc.json")), "--json"])), "solve-result.schema.json");
    let limited = json(&desnet(&["solve", path(&data("ring6.json")), "--node-limit", "1", "--json"]));
    check_schema(&limited, "solve-result.schema.json");

    // The checker itself rejects drift.
    let mut bad = res.clone();
    bad["costs"]["C_bogus"] = 1.0.into();
    assert!(conforms(&bad, &serde_json::json!({ "$ref": "solve-result.schema.json" }), "").is_err());
    let mut bad = res;
    bad["decisions"]["arcs"][0]["tech"] = "coal".into();
    assert!(conforms(&bad, &serde_json::json!({ "$ref": "solve-result.schema.json" }), "").is_err());
}
