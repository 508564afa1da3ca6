//! Human-readable plan reports.

use std::fmt::Write;

use desnet::costing::CostBreakdown;
use desnet::instance::Instance;
use desnet::physics::FlowState;
use desnet::plan::PlanDecisions;
use desnet::solver::SolveResult;

fn arc_label(inst: Option<&Instance>, k: usize) -> String {
    match inst {
        Some(i) if k < i.arc_count() => {
            let (a, b) = i.endpoints(k);
            format!("({a},{b})")
        }
        _ => format!("#{k}"),
    }
}

pub fn plan_table(inst: Option<&Instance>, d: &PlanDecisions) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:<5} {:>8} {:>8} {:<5} {:>6} {:>6}",
        "arc", "tech", "reno1%", "reno2%", "pipe", "cable", "ptype"
    );
    for (k, a) in d.arcs.iter().enumerate() {
        let tech = a.tech.map_or("-", |t| t.upper());
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(
            out,
            "{:<10} {:<5} {:>8.1} {:>8.1} {:<5} {:>6} {:>6}",
            arc_label(inst, k),
            tech,
            100.0 * a.reno1,
            100.0 * a.reno2,
            if a.pipe { "yes" } else { "no" },
            opt(a.cable_type),
            opt(a.pipe_type)
        );
    }
    out
}

pub fn flow_table(flow: &FlowState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:>12} {:>12}", "node", "u [V]", "p [mbar]");
    for (i, (u, p)) in flow.u.iter().zip(&flow.p).enumerate() {
        let _ = writeln!(out, "{i:<6} {u:>12.4} {p:>12.4}");
    }
    let _ = writeln!(out, "electric losses {:.4} kW", flow.electric_losses());
    out
}

fn costs_block(costs: &CostBreakdown, e_target: Option<f64>) -> String {
    let mut out = costs.table();
    if let Some(t) = e_target {
        let _ = writeln!(out, "{:<14} {:>16.2} kg/a", "E_target", t);
    }
    out
}

pub fn solve_report(inst: Option<&Instance>, res: &SolveResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status       {}", res.status.label());
    if let Some(obj) = res.objective {
        let _ = writeln!(out, "objective    {obj:.6}");
    }
    let _ = writeln!(out, "lower bound  {:.6}", res.lower_bound);
    if let Some(g) = res.gap {
        let _ = writeln!(out, "gap          {g:.3e}");
    }
    let _ = writeln!(out, "nodes        {}", res.nodes);
    let _ = writeln!(out, "time         {:.3} s", res.wall_time_s);
    if let Some(d) = &res.decisions {
        out.push('\n');
        out.push_str(&plan_table(inst, d));
    }
    if let Some(c) = &res.costs {
        out.push('\n');
        out.push_str(&costs_block(c, inst.map(|i| i.costs.e_target)));
    }
    out
}
