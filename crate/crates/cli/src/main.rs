use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use desnet::costing::plan_costs;
use desnet::formulation::{build_formulation, export_json, export_text};
use desnet::instance::{
    generate_instance, load_instance, save_instance, GeneratorSpec, Instance, InstanceError, ModelOptions, Topology,
};
use desnet::physics::{check_feasibility, PhysicsOptions};
use desnet::plan::PlanDecisions;
use desnet::solver::{enumerate_exact, solve, OracleError, SolveConfig, SolveResult, SolveStatus};
use serde::Serialize;

mod report;

/// Exit codes.
const OK: u8 = 0;
const INVALID: u8 = 1;
const INFEASIBLE: u8 = 2;
const LIMIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "desnet", version, about = "Design of decentralized energy supply networks")]
struct Cli {
    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an instance file against every invariant.
    Validate {
        instance: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Export the model of an instance.
    Formulate {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve an instance by branch-and-bound.
    Solve(SolveArgs),
    /// Run the flow physics for a plan.
    Simulate {
        instance: PathBuf,
        /// Plan decisions (JSON), or a solve result containing them.
        decisions: PathBuf,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Enumerate every plan of a small tree instance.
    Oracle {
        instance: PathBuf,
        /// Renovation levels, comma separated; must include 0.
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        grid: Vec<f64>,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Render a solve result as tables.
    Report {
        result: PathBuf,
        /// Instance used for arc labels and the emission target.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone, Copy)]
struct ModelFlags {
    /// Choose cable types from the instance catalog.
    #[arg(long)]
    cable_sizing: bool,
    /// Choose pipe types from the instance catalog.
    #[arg(long)]
    pipe_sizing: bool,
}

impl ModelFlags {
    /// Instance options with the flags switched on in addition.
    fn apply(self, inst: &Instance) -> ModelOptions {
        ModelOptions {
            cable_sizing: inst.options.cable_sizing || self.cable_sizing,
            pipe_sizing: inst.options.pipe_sizing || self.pipe_sizing,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value = "tree")]
    topology: Topology,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    demand_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    no_heat_probability: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Restrict renovation levels to these points (comma separated).
    #[arg(long, value_delimiter = ',')]
    renovation_grid: Option<Vec<f64>>,
    /// Tangent refinement rounds per node.
    #[arg(long, default_value_t = 3)]
    tangent_rounds: usize,
    #[command(flatten)]
    model: ModelFlags,
    /// Write the result JSON here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the plan decisions JSON here.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Print the result JSON instead of the report.
    #[arg(long)]
    json: bool,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: INVALID, error: e.into() }
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: INVALID, error: e.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(invalid)
}

fn load(path: &Path) -> Result<Instance, Failure> {
    load_instance(&read(path)?).with_context(|| format!("loading {}", path.display())).map_err(invalid)
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(invalid),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal | SolveStatus::Feasible => OK,
        SolveStatus::Infeasible | SolveStatus::EmissionInfeasible => INFEASIBLE,
        SolveStatus::NodeLimit => LIMIT,
    }
}

fn validate(path: &Path, json: bool) -> Result<u8, Failure> {
    let text = read(path)?;
    match load_instance(&text) {
        Ok(inst) => {
            if json {
                print!("{}", to_json(&serde_json::json!({ "valid": true, "violations": [] })));
            } else {
                println!(
                    "{}: valid ({} nodes, {} arcs, {} with heat demand)",
                    path.display(),
                    inst.node_count(),
                    inst.arc_count(),
                    inst.heat_arcs().count()
                );
            }
            Ok(OK)
        }
        Err(InstanceError::Invalid(report)) => {
            if json {
                let v: Vec<_> = report
                    .violations
                    .iter()
                    .map(|v| serde_json::json!({ "scope": v.scope, "message": v.message }))
                    .collect();
                print!("{}", to_json(&serde_json::json!({ "valid": false, "violations": v })));
            } else {
                println!("{}: invalid", path.display());
                for v in &report.violations {
                    println!("  {v}");
                }
            }
            Ok(INVALID)
        }
        Err(e) => Err(invalid(anyhow!(e).context(format!("loading {}", path.display())))),
    }
}

fn gen(args: &GenArgs) -> Result<u8, Failure> {
    let spec = GeneratorSpec {
        nodes: args.nodes,
        topology: args.topology,
        seed: args.seed,
        demand_scale: args.demand_scale,
        no_heat_probability: args.no_heat_probability,
    };
    let mut inst = generate_instance(&spec).map_err(invalid)?;
    let spec_json = serde_json::to_string(&spec).expect("spec serializes");
    inst.meta.description = format!("generated: {spec_json}");
    log::info!("gen: {spec_json}");
    write_or_print(args.output.as_deref(), &save_instance(&inst))?;
    Ok(OK)
}

fn formulate(path: &Path, format: Format, model: ModelFlags, output: Option<&Path>) -> Result<u8, Failure> {
    let inst = load(path)?;
    let f = build_formulation(&inst, model.apply(&inst)).map_err(invalid)?;
    let text = match format {
        Format::Text => export_text(&f),
        Format::Json => export_json(&f),
    };
    write_or_print(output, &text)?;
    Ok(OK)
}

fn run_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let inst = load(&args.instance)?;
    let options = args.model.apply(&inst);
    let config = SolveConfig {
        gap_tol: args.gap,
        node_limit: args.node_limit,
        time_limit_s: args.time_limit,
        threads: args.threads,
        renovation_grid: args.renovation_grid.clone(),
        tangent_rounds: args.tangent_rounds,
        ..SolveConfig::default()
    };
    log::info!("solve: config {}", serde_json::to_string(&config).expect("config serializes"));
    let res = solve(&inst, options, &config).map_err(invalid)?;
    if let Some(p) = &args.output {
        write_or_print(Some(p), &to_json(&res))?;
    }
    if let (Some(p), Some(d)) = (&args.plan, &res.decisions) {
        write_or_print(Some(p), &to_json(d))?;
    }
    if args.json {
        print!("{}", to_json(&res));
    } else {
        print!("{}", report::solve_report(Some(&inst), &res));
    }
    Ok(status_code(res.status))
}

/// Reads plan decisions, accepting a bare decisions document or a solve
/// result that carries one.
fn load_decisions(path: &Path) -> Result<PlanDecisions, Failure> {
    let text = read(path)?;
    if let Ok(d) = serde_json::from_str::<PlanDecisions>(&text) {
        return Ok(d);
    }
    let res: SolveResult = serde_json::from_str(&text)
        .with_context(|| format!("{} is neither decisions nor a solve result", path.display()))?;
    res.decisions.ok_or_else(|| invalid(anyhow!("{} holds no plan (status {})", path.display(), res.status.label())))
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    decisions: &'a PlanDecisions,
    feasible: bool,
    problems: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flow: Option<&'a desnet::physics::FlowState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    costs: Option<desnet::costing::CostBreakdown>,
}

fn simulate(instance: &Path, decisions: &Path, json: bool, model: ModelFlags) -> Result<u8, Failure> {
    let inst = load(instance)?;
    let d = load_decisions(decisions)?;
    d.check(&inst).map_err(invalid)?;
    let rep = check_feasibility(&inst, &d, &PhysicsOptions::default());
    let options = model.apply(&inst);
    let costs = rep.state.as_ref().map(|s| plan_costs(&inst, options, &d, s));
    let out = SimulateOutput {
        decisions: &d,
        feasible: rep.is_feasible(),
        problems: rep.problems(),
        flow: rep.state.as_ref(),
        costs,
    };
    if json {
        print!("{}", to_json(&out));
    } else {
        println!("{}", if out.feasible { "operable" } else { "not operable" });
        for p in &out.problems {
            println!("  {p}");
        }
        print!("\n{}", report::plan_table(Some(&inst), &d));
        if let Some(f) = out.flow {
            print!("\n{}", report::flow_table(f));
        }
        if let Some(c) = &out.costs {
            print!("\n{}", c.table());
        }
    }
    Ok(if out.feasible { OK } else { INFEASIBLE })
}

fn oracle(instance: &Path, grid: &[f64], model: ModelFlags, output: Option<&Path>, json: bool) -> Result<u8, Failure> {
    let inst = load(instance)?;
    let rep = match enumerate_exact(&inst, model.apply(&inst), grid) {
        Ok(r) => r,
        Err(e @ OracleError::TooLarge { .. }) => return Err(Failure { code: LIMIT, error: e.into() }),
        Err(e) => return Err(invalid(e)),
    };
    log::info!("oracle: {} plans, {} feasible", rep.candidates, rep.feasible);
    let res = rep.into_result();
    if let Some(p) = output {
        write_or_print(Some(p), &to_json(&res))?;
    }
    if json {
        print!("{}", to_json(&res));
    } else {
        print!("{}", report::solve_report(Some(&inst), &res));
    }
    Ok(status_code(res.status))
}

fn report_cmd(result: &Path, instance: Option<&Path>) -> Result<u8, Failure> {
    let res: SolveResult =
        serde_json::from_str(&read(result)?).with_context(|| format!("parsing {}", result.display()))?;
    let inst = instance.map(load).transpose()?;
    print!("{}", report::solve_report(inst.as_ref(), &res));
    if let Some(f) = &res.flow {
        print!("\n{}", report::flow_table(f));
    }
    Ok(OK)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { instance, json } => validate(&instance, json),
        Command::Gen(args) => gen(&args),
        Command::Formulate { instance, format, model, output } => {
            formulate(&instance, format, model, output.as_deref())
        }
        Command::Solve(args) => run_solve(&args),
        Command::Simulate { instance, decisions, json, model } => simulate(&instance, &decisions, json, model),
        Command::Oracle { instance, grid, model, output, json } => {
            oracle(&instance, &grid, model, output.as_deref(), json)
        }
        Command::Report { result, instance } => report_cmd(&result, instance.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
