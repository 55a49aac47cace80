//! `atlas`: run scenarios, sweep parameters, solve allocation problems and
//! print preset scenarios.

mod axis;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use atlas_core::allocation::{
    fill_rounds, is_lex_max_min, is_weighted_lex_max_min, solve_max_min, solve_weighted_max_min,
    AllocationProblem,
};
use atlas_core::react::network::AuctionNetwork;
use atlas_core::react::EngineConfig;
use atlas_metrics::MetricsReport;
use atlas_sim::presets::{self, Configuration, Load};
use atlas_sim::{run_scenario, DemandChangeKind, RateRange, RunOutput, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use axis::Axis;
use output::{comment_header, prefixed_csv, scenario_line, to_json, write, Replicate, VERSION};

#[derive(Parser)]
#[command(
    name = "atlas",
    version,
    about = "Slotted MAC channel allocation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file, optionally replicated over consecutive seeds.
    Run(RunArgs),
    /// Run the cross product of parameter axes over a base scenario.
    Sweep(SweepArgs),
    /// Solve an allocation problem file centrally and optionally with the auction.
    Oracle(OracleArgs),
    /// Print a preset scenario as TOML.
    Presets(PresetArgs),
}

#[derive(Args)]
struct Common {
    /// Overrides the scenario seed; replicate k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    /// Directory for CSV, summary and trace files; JSON goes to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Write a per-slot trace for every replicate (needs --out).
    #[arg(long)]
    trace: bool,
    /// Record every node's claim once per frame.
    #[arg(long)]
    claims: bool,
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    /// `name=v1,v2,..` for p_default, t_lost_nbr, speed or width; repeatable.
    #[arg(long = "axis", required = true)]
    axes: Vec<Axis>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleArgs {
    /// TOML with `[[resource]]` and `[[demand]]` tables.
    problem: PathBuf,
    /// Use demand weights; values are per fragment.
    #[arg(long)]
    weighted: bool,
    /// Also run the distributed auction with 8-bit messages.
    #[arg(long)]
    engine: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest message delay, in ticks, for --engine.
    #[arg(long, default_value_t = 10)]
    max_delay: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    InitConvergence,
    DemandChange,
    TopologyChange,
    Scaling,
    Mobility,
    Fig2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfigArg {
    Nominal,
    Lazy,
    Physical,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadArg {
    Small20,
    Small80,
    Large20,
    Large80,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChangeArg {
    Add,
    Remove,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Small,
    Large,
}

#[derive(Args)]
struct PresetArgs {
    family: Family,
    #[arg(long, value_enum, default_value = "nominal")]
    config: ConfigArg,
    #[arg(long, value_enum, default_value = "large80")]
    load: LoadArg,
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Demand change: a source starts or stops; topology change: a link appears or disappears.
    #[arg(long, value_enum, default_value = "add")]
    change: ChangeArg,
    /// Rate class of the changing source.
    #[arg(long, value_enum, default_value = "large")]
    class: ClassArg,
    /// Network width in metres for the scaling family.
    #[arg(long, default_value_t = 1500.0)]
    width: f64,
    /// Node speed in m/s for the mobility family.
    #[arg(long, default_value_t = 30.0)]
    speed: f64,
    /// Use the full 50-node networks instead of the desk-scale node count.
    #[arg(long)]
    full: bool,
    /// Write the scenario here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A run finished but broke a simulator invariant.
struct Violation;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Presets(a) => cmd_presets(a),
    };
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Violation)) => {
            eprintln!("error: invariant violation, see violations in the summary");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

type Outcome = anyhow::Result<Result<(), Violation>>;

fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_toml(&text).with_context(|| format!("in {}", path.display()))
}

fn pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

fn replicate_seeds(base: u64, count: u64) -> Vec<u64> {
    (0..count).map(|k| base.wrapping_add(k)).collect()
}

fn broken(out: &RunOutput) -> bool {
    !out.report.conservation_ok || !out.violations.is_empty()
}

fn status_line(label: &str, r: &MetricsReport) -> String {
    let event = r
        .event_convergence_s
        .map(|t| format!(" event {t}"))
        .unwrap_or_default();
    format!(
        "{label} seed {}: init {}{event}, max error {:.2}/255, lex max-min {}",
        r.seed,
        r.init_convergence_s,
        r.final_max_claim_error * 255.0,
        r.final_lex_max_min
    )
}

fn cmd_run(a: RunArgs) -> Outcome {
    let mut base = load_scenario(&a.scenario)?;
    if let Some(seed) = a.common.seed {
        base.seed = seed;
    }
    base.trace |= a.trace;
    base.record_claims |= a.claims;
    if base.trace && a.common.out.is_none() {
        bail!("--trace needs --out");
    }
    let seeds = replicate_seeds(base.seed, a.common.replicates);
    let scenarios: Vec<Scenario> = seeds
        .iter()
        .map(|&seed| Scenario {
            seed,
            ..base.clone()
        })
        .collect();
    let outputs: Vec<RunOutput> = pool(a.common.jobs)?.install(|| {
        scenarios
            .par_iter()
            .map(run_scenario)
            .collect::<Result<_, _>>()
    })?;
    for o in &outputs {
        eprintln!("{}", status_line(&base.name, &o.report));
    }

    let replicates: Vec<Replicate> = seeds
        .iter()
        .zip(&outputs)
        .map(|(&seed, o)| Replicate::new(seed, o))
        .collect();
    let summary = json!({
        "version": VERSION,
        "command": "run",
        "scenario": base,
        "replicate_seeds": seeds,
        "replicates": replicates,
    });
    match &a.common.out {
        None => print!("{}", to_json(&summary)),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let header = comment_header(&scenario_line(&base));
            let reports: Vec<MetricsReport> = outputs.iter().map(|o| o.report.clone()).collect();
            write(
                dir,
                "results.csv",
                &(header.clone() + &MetricsReport::to_csv(&reports)?),
            )?;
            write(dir, "summary.json", &to_json(&summary))?;
            if base.trace {
                for (s, o) in scenarios.iter().zip(&outputs) {
                    let body = o.trace.join("\n");
                    write(
                        dir,
                        &format!("trace-{}.txt", s.seed),
                        &(comment_header(&scenario_line(s)) + &body + "\n"),
                    )?;
                }
            }
        }
    }
    Ok(if outputs.iter().any(broken) {
        Err(Violation)
    } else {
        Ok(())
    })
}

#[derive(Serialize)]
struct SweepPoint<'a> {
    values: &'a [f64],
    scenario: &'a Scenario,
    replicates: Vec<&'a MetricsReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<&'a String>,
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let mut base = load_scenario(&a.scenario)?;
    if let Some(seed) = a.common.seed {
        base.seed = seed;
    }
    let seeds = replicate_seeds(base.seed, a.common.replicates);
    let points = axis::grid(&a.axes);
    let mut scenarios = Vec::with_capacity(points.len());
    for values in &points {
        let mut s = base.clone();
        for (axis, &v) in a.axes.iter().zip(values) {
            axis.parameter.apply(&base, &mut s, v);
        }
        s.validate()
            .with_context(|| format!("sweep point {values:?}"))?;
        scenarios.push(s);
    }
    let jobs: Vec<Scenario> = scenarios
        .iter()
        .flat_map(|s| {
            seeds
                .iter()
                .map(move |&seed| Scenario { seed, ..s.clone() })
        })
        .collect();
    let outputs: Vec<RunOutput> = pool(a.common.jobs)?
        .install(|| jobs.par_iter().map(run_scenario).collect::<Result<_, _>>())?;

    let per_point = seeds.len();
    let names: Vec<&str> = a.axes.iter().map(|x| x.parameter.name()).collect();
    let mut rows = Vec::new();
    let mut summary_points = Vec::new();
    for (k, (values, scenario)) in points.iter().zip(&scenarios).enumerate() {
        let chunk = &outputs[k * per_point..(k + 1) * per_point];
        let label: Vec<String> = values.iter().map(f64::to_string).collect();
        for o in chunk {
            eprintln!(
                "{}",
                status_line(&format!("[{}]", label.join(", ")), &o.report)
            );
            rows.push((label.clone(), &o.report));
        }
        summary_points.push(SweepPoint {
            values,
            scenario,
            replicates: chunk.iter().map(|o| &o.report).collect(),
            violations: chunk.iter().flat_map(|o| &o.violations).collect(),
        });
    }
    let axes_text: Vec<String> = a.axes.iter().map(Axis::to_string).collect();
    let summary = json!({
        "version": VERSION,
        "command": "sweep",
        "scenario": base,
        "axes": axes_text,
        "replicate_seeds": seeds,
        "points": summary_points,
    });
    match &a.common.out {
        None => print!("{}", to_json(&summary)),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let resolved = format!("{} axes {}", scenario_line(&base), axes_text.join(" "));
            write(
                dir,
                "sweep.csv",
                &(comment_header(&resolved) + &prefixed_csv(&names, &rows)?),
            )?;
            write(dir, "summary.json", &to_json(&summary))?;
        }
    }
    Ok(if outputs.iter().any(broken) {
        Err(Violation)
    } else {
        Ok(())
    })
}

fn cmd_oracle(a: OracleArgs) -> Outcome {
    let text = fs::read_to_string(&a.problem)
        .with_context(|| format!("reading {}", a.problem.display()))?;
    let problem: AllocationProblem =
        toml::from_str(&text).with_context(|| format!("in {}", a.problem.display()))?;
    let (allocation, audit) = if a.weighted {
        let u = solve_weighted_max_min(&problem);
        let ok = is_weighted_lex_max_min(&problem, &u, 1e-9)?;
        (u, ok)
    } else {
        let s = solve_max_min(&problem);
        let ok = is_lex_max_min(&problem, &s, 1e-9)?;
        (s, ok)
    };
    let mut summary = json!({
        "version": VERSION,
        "command": "oracle",
        "problem": problem,
        "weighted": a.weighted,
        "allocation": allocation,
        "lex_max_min": audit,
        "fill_rounds": fill_rounds(&problem),
    });
    if a.weighted {
        summary["totals"] = json!(problem.fragment_totals(&allocation));
    }
    if a.engine {
        let config = EngineConfig {
            weighted: a.weighted,
            ..EngineConfig::default()
        };
        let mut net = AuctionNetwork::new(&problem, config, a.seed, a.max_delay);
        let budget = 100 * (problem.num_demands() * problem.num_resources()).max(100) as u64;
        let outcome = net.run(budget);
        let claims = net.emitted_claims();
        summary["engine"] = json!({
            "seed": a.seed,
            "max_delay": a.max_delay,
            "fixed_point": outcome.quiescent,
            "deliveries": outcome.deliveries,
            "claims": claims,
            "max_abs_diff": claims.max_abs_diff(&allocation),
        });
    }
    print!("{}", to_json(&summary));
    Ok(Ok(()))
}

fn cmd_presets(a: PresetArgs) -> Outcome {
    let config = match a.config {
        ConfigArg::Nominal => Configuration::Nominal,
        ConfigArg::Lazy => Configuration::Lazy,
        ConfigArg::Physical => Configuration::Physical,
        ConfigArg::Weighted => Configuration::Weighted,
    };
    let load = match a.load {
        LoadArg::Small20 => Load::SmallLight,
        LoadArg::Small80 => Load::SmallHeavy,
        LoadArg::Large20 => Load::LargeLight,
        LoadArg::Large80 => Load::LargeHeavy,
    };
    let class = match a.class {
        ClassArg::Small => RateRange::SMALL,
        ClassArg::Large => RateRange::LARGE,
    };
    let add = matches!(a.change, ChangeArg::Add);
    let nodes = if a.full { 50 } else { a.nodes };
    let s = match a.family {
        Family::InitConvergence => presets::init_convergence(config, load, nodes, a.seed),
        Family::DemandChange => {
            let change = if add {
                DemandChangeKind::Add
            } else {
                DemandChangeKind::Remove
            };
            presets::demand_change(config, load, change, class, nodes, a.seed)
        }
        Family::TopologyChange => presets::topology_change(config, load, add, nodes, a.seed),
        Family::Scaling => presets::scaling(load, a.width, a.seed),
        Family::Mobility => presets::mobility(load, a.speed, nodes, a.seed),
        Family::Fig2 => presets::fig2(),
    };
    s.validate()?;
    let text = format!("# {VERSION}\n{}", s.to_toml());
    match a.out {
        Some(path) => {
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(Ok(()))
}
