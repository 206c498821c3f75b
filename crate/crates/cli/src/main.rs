use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use compactfd::compactness::{is_compact, is_compact_allocation, is_strongly_compact};
use compactfd::fairness::utilitarian_welfare;
use compactfd::generators::{
    gen_from_club, gen_from_partition, gen_from_xac, ClubSource, ClubVariant, PartitionSource, Reduction, XacSource,
    XacVariant,
};
use compactfd::treewidth::{greedy_decompose, parse_td, validate_td};
use compactfd::{maximin_share, solve, CompactnessSpec, Error, FairnessGoal, Graph, Instance, Method, SolveOptions};

/// Fair division of graph items into compact bundles.
#[derive(Parser)]
#[command(name = "compactfd", version)]
struct Cli {
    /// Worker threads for the parallel solvers (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SpecArgs {
    /// Number of balls (or groups) per bundle.
    #[arg(long)]
    alpha: usize,
    /// Ball radius (or group diameter).
    #[arg(long)]
    beta: usize,
    /// Require strong compactness: groups with bounded pairwise distances.
    #[arg(long)]
    strong: bool,
}

impl SpecArgs {
    fn spec(self) -> compactfd::Result<CompactnessSpec> {
        CompactnessSpec::new(self.alpha, self.beta, self.strong)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the instance's item graph is compact.
    Recognize {
        instance: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Look for a compact allocation meeting a fairness goal.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        /// prop, ef-complete, ef-po, mms or welfare.
        #[arg(long)]
        goal: FairnessGoal,
        /// auto, oracle, enum, matching, path-dp or tw-dp.
        #[arg(long, default_value = "auto")]
        method: Method,
        /// Tree decomposition of the item graph (PACE .td) for tw-dp.
        #[arg(long)]
        td: Option<PathBuf>,
        /// Largest number of item assignments the oracle may scan.
        #[arg(long)]
        oracle_budget: Option<u64>,
    },
    /// Maximin share of one agent (or of all agents).
    Mms {
        instance: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        agent: Option<usize>,
        #[arg(long, default_value = "auto")]
        method: Method,
        #[arg(long)]
        td: Option<PathBuf>,
        #[arg(long)]
        oracle_budget: Option<u64>,
    },
    /// Generate an instance from a source problem.
    Gen {
        #[command(subcommand)]
        source: GenCommand,
    },
    /// Compute a tree decomposition of the item graph (min-fill heuristic).
    Decompose {
        instance: PathBuf,
        /// Write the decomposition here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum XacKind {
    Prop,
    Cef,
    Poef,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClubKind {
    Prop,
    Cef,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Two identical agents on a clique; fair iff the numbers split evenly.
    Partition { numbers: Vec<u64> },
    /// Exact cover by α-sets over the universe 0..universe.
    Xac {
        #[arg(long, default_value_t = 3)]
        alpha: usize,
        #[arg(long)]
        universe: usize,
        /// Sets separated by `;`, elements by `,`, e.g. "0,1,2;3,4,5".
        #[arg(long)]
        sets: String,
        #[arg(long, value_enum, default_value = "prop")]
        variant: XacKind,
        #[arg(long, default_value_t = 0)]
        beta: usize,
        #[arg(long)]
        strong: bool,
    },
    /// β-club of size exactly k in a graph on `vertices` vertices.
    Club {
        #[arg(long)]
        vertices: usize,
        /// Edges as "u-v" pairs separated by `,`.
        #[arg(long, default_value = "")]
        edges: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: usize,
        #[arg(long, default_value_t = 1)]
        alpha: usize,
        #[arg(long, value_enum, default_value = "prop")]
        variant: ClubKind,
    },
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn options(instance: &Instance, td: Option<&Path>, oracle_budget: Option<u64>) -> anyhow::Result<SolveOptions> {
    let mut opts = SolveOptions::default();
    if let Some(path) = td {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let td = parse_td(&text).with_context(|| format!("parsing {}", path.display()))?;
        validate_td(instance.graph(), &td).map_err(Error::Decomposition)?;
        opts.tw.decomposition = Some(td);
    }
    if let Some(b) = oracle_budget {
        opts.oracle_budget.max_allocations = b;
        opts.tw.oracle_budget.max_allocations = b;
    }
    Ok(opts)
}

fn spec_json(spec: &CompactnessSpec) -> Value {
    json!({ "alpha": spec.alpha, "beta": spec.beta, "strong": spec.strong })
}

fn recognize(instance: &Instance, spec: &CompactnessSpec) -> Value {
    let graph = instance.graph();
    let witness = if spec.strong {
        is_strongly_compact(graph, spec.alpha, spec.beta).map(|groups| json!({ "groups": groups }))
    } else {
        is_compact(graph, spec.alpha, spec.beta).map(|w| json!({ "centers": w.centers }))
    };
    match witness {
        Some(w) => json!({ "result": "compact", "spec": spec_json(spec), "witness": w }),
        None => json!({ "result": "not compact", "spec": spec_json(spec) }),
    }
}

fn run_solve(
    instance: &Instance,
    spec: &CompactnessSpec,
    goal: FairnessGoal,
    method: Method,
    opts: &SolveOptions,
) -> anyhow::Result<Value> {
    let solution = solve(instance, spec, goal, method, opts)?;
    let mut out = json!({
        "goal": goal.cli_name(),
        "method": solution.method.cli_name(),
        "spec": spec_json(spec),
    });
    let Some(allocation) = &solution.allocation else {
        out["answer"] = json!("no");
        return Ok(out);
    };
    if !is_compact_allocation(instance, allocation, spec) {
        bail!(Error::Internal("solver returned a non-compact allocation".into()));
    }
    out["answer"] = json!("yes");
    out["bundles"] = json!(allocation.to_vecs());
    out["values"] = json!(allocation.value_matrix(instance));
    let totals: Vec<u64> = (0..instance.agent_count()).map(|i| instance.total_value(i)).collect::<Result<_, _>>()?;
    out["totals"] = json!(totals);
    match goal {
        FairnessGoal::Maximin => {
            let share_method = if solution.method == Method::PathDp { Method::Auto } else { solution.method };
            let shares = (0..instance.agent_count())
                .map(|i| maximin_share(instance, spec, i, share_method, opts).map(|(_, s)| s))
                .collect::<Result<Vec<_>, _>>()?;
            out["mms"] = json!(shares);
        }
        FairnessGoal::MaxWelfare => out["welfare"] = json!(utilitarian_welfare(instance, allocation)),
        _ => {}
    }
    Ok(out)
}

fn parse_sets(text: &str) -> anyhow::Result<Vec<Vec<usize>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|set| {
            set.split(',')
                .map(|x| x.trim().parse::<usize>().with_context(|| format!("bad element `{x}` in set `{set}`")))
                .collect()
        })
        .collect()
}

fn parse_edges(text: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|e| {
            let (u, v) = e.split_once('-').with_context(|| format!("edge `{e}` is not of the form u-v"))?;
            Ok((u.trim().parse()?, v.trim().parse()?))
        })
        .collect()
}

fn report_reduction(red: &Reduction, source_answer: bool) {
    eprintln!(
        "encodes goal {} with {}; source answer: {}",
        red.goal,
        red.spec,
        if source_answer { "yes" } else { "no" }
    );
}

fn generate(source: GenCommand) -> anyhow::Result<Instance> {
    match source {
        GenCommand::Partition { numbers } => {
            let src = PartitionSource::new(numbers)?;
            eprintln!("source answer: {}", if src.has_solution() { "yes" } else { "no" });
            Ok(gen_from_partition(&src)?)
        }
        GenCommand::Xac { alpha, universe, sets, variant, beta, strong } => {
            let src = XacSource::new(alpha, universe, parse_sets(&sets)?)?;
            let variant = match variant {
                XacKind::Prop => XacVariant::Proportional,
                XacKind::Cef => XacVariant::EnvyFreeComplete,
                XacKind::Poef => XacVariant::EnvyFreeParetoOptimal,
            };
            let red = gen_from_xac(&src, variant, beta, strong)?;
            report_reduction(&red, src.has_exact_cover());
            Ok(red.instance)
        }
        GenCommand::Club { vertices, edges, k, beta, alpha, variant } => {
            let graph = Graph::from_edges(vertices, &parse_edges(&edges)?)?;
            let src = ClubSource::new(graph, k, beta)?;
            let variant = match variant {
                ClubKind::Prop => ClubVariant::Proportional,
                ClubKind::Cef => ClubVariant::EnvyFreeComplete,
            };
            let red = gen_from_club(&src, alpha, variant)?;
            report_reduction(&red, src.has_solution());
            Ok(red.instance)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
    }
    let out = match cli.command {
        Command::Recognize { instance, spec } => recognize(&load(&instance)?, &spec.spec()?),
        Command::Solve { instance, spec, goal, method, td, oracle_budget } => {
            let instance = load(&instance)?;
            let opts = options(&instance, td.as_deref(), oracle_budget)?;
            run_solve(&instance, &spec.spec()?, goal, method, &opts)?
        }
        Command::Mms { instance, spec, agent, method, td, oracle_budget } => {
            let instance = load(&instance)?;
            let opts = options(&instance, td.as_deref(), oracle_budget)?;
            let spec = spec.spec()?;
            match agent {
                Some(i) => {
                    let (used, share) = maximin_share(&instance, &spec, i, method, &opts)?;
                    json!({ "agent": i, "mms": share, "method": used.cli_name() })
                }
                None => {
                    let mut shares = Vec::new();
                    let mut used = method;
                    for i in 0..instance.agent_count() {
                        let (m, s) = maximin_share(&instance, &spec, i, method, &opts)?;
                        used = m;
                        shares.push(s);
                    }
                    json!({ "mms": shares, "method": used.cli_name() })
                }
            }
        }
        Command::Gen { source } => {
            println!("{}", generate(source)?.to_json());
            return Ok(());
        }
        Command::Decompose { instance, out } => {
            let instance = load(&instance)?;
            let td = greedy_decompose(instance.graph());
            validate_td(instance.graph(), &td).map_err(Error::Internal)?;
            let text = td.to_pace(instance.item_count());
            eprintln!("width {}", td.width());
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            return Ok(());
        }
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

/// Budget and internal failures exit with 1; everything else is bad input.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded(_) | Error::Internal(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
