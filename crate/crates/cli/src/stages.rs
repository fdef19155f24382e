use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use archclust::cut_clustering::worker;
use archclust::metrics::{stats_tsv, stats_xml};
use archclust::search::{init_search, run_search};
use archclust::{
    export_h3, export_text, export_treeviz, export_xml, load_relations, merge_relation_kinds, normalize, perfectize,
    ubiquity_stats, Budget, ClientPrefixes, ClusterTree, KindWeights, Leverage, LiftOrder, NormalizationConfig,
    PerfectizeConfig, RelationKind, RootHeuristic, SearchConfig, SearchState, TextStyle, UndirectedGraph,
};

use crate::exit::InvalidArgument;
use crate::{
    Command, ExportArgs, LeverageArg, LiftOrderArg, NormalizeArgs, PerfectizeArgs, RootHeuristicArg, SearchArgs,
};

pub const GRAPH_FILE: &str = "graph.txt";
pub const SEARCH_FILE: &str = "search.json";
pub const TREE_FILE: &str = "tree.json";
pub const PERFECT_TREE_FILE: &str = "perf_tree.json";
pub const STATS_FILE: &str = "stats.tsv";
pub const LOG_FILE: &str = "run.log";
pub const STOP_FILE: &str = "shutdown.sig";

/// Appends stage headers and counters to `run.log` in the output directory.
struct RunLog {
    path: PathBuf,
}

impl RunLog {
    fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(RunLog {
            path: dir.join(LOG_FILE),
        })
    }

    fn line(&self, text: &str) -> Result<()> {
        log::info!("{text}");
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{text}")?;
        Ok(())
    }

    fn stage(&self, name: &str) -> Result<()> {
        self.line(&format!("== {name} =="))
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Normalize { input, out, norm } => {
            let log = RunLog::open(parent_dir(&out))?;
            normalize_stage(&input, &out, &norm, &log)
        }
        Command::Cluster {
            graph,
            out,
            resume,
            search,
        } => match resume {
            Some(dir) => {
                let log = RunLog::open(&dir)?;
                cluster_stage(&dir.join(GRAPH_FILE), &dir, &search, true, &log).map(|_| ())
            }
            None => {
                let (graph, out) = (graph.expect("required by clap"), out.expect("required by clap"));
                let log = RunLog::open(&out)?;
                let local = out.join(GRAPH_FILE);
                if !same_file(&graph, &local) {
                    fs::copy(&graph, &local).with_context(|| format!("copying {}", graph.display()))?;
                }
                cluster_stage(&local, &out, &search, false, &log).map(|_| ())
            }
        },
        Command::Perfectize { tree, graph, out, perf } => {
            let log = RunLog::open(parent_dir(&out))?;
            perfectize_stage(&tree, &graph, &out, &perf, &log)
        }
        Command::Export { tree, out, export } => {
            let log = RunLog::open(&out)?;
            export_stage(&tree, &out, &export, &log)
        }
        Command::Stats { tree, out, xml } => {
            let log = RunLog::open(parent_dir(&out))?;
            stats_stage(&tree, &out, xml.as_deref(), &log)
        }
        Command::Pipeline {
            input,
            out,
            norm,
            search,
            perf,
            export,
        } => {
            search_config(&search, &out)?;
            kind_weights(&norm.kind_weights)?;
            if perf.child_threshold < 3 {
                return Err(InvalidArgument("--child-threshold must be at least 3".into()).into());
            }
            let log = RunLog::open(&out)?;
            let graph = out.join(GRAPH_FILE);
            normalize_stage(&input, &graph, &norm, &log)?;
            let stopped = cluster_stage(&graph, &out, &search, false, &log)?;
            if stopped {
                log.line("search stopped early; later stages use the partial tree")?;
            }
            perfectize_stage(&out.join(TREE_FILE), &graph, &out.join(PERFECT_TREE_FILE), &perf, &log)?;
            export_stage(&out.join(PERFECT_TREE_FILE), &out, &export, &log)?;
            stats_stage(&out.join(PERFECT_TREE_FILE), &out.join(STATS_FILE), None, &log)
        }
        Command::ProbeWorker { dir } => {
            let found = worker::run_task(&dir)?;
            log::info!(
                "{} clusters, {} flow calls, {} re-marks",
                found.clusters.len(),
                found.stats.flow_calls,
                found.stats.remarks
            );
            Ok(())
        }
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    matches!((a.canonicalize(), b.canonicalize()), (Ok(x), Ok(y)) if x == y)
}

fn kind_weights(specs: &[String]) -> Result<KindWeights> {
    let mut weights = KindWeights::default();
    for spec in specs {
        let (kind, value) = spec
            .split_once('=')
            .ok_or_else(|| InvalidArgument(format!("--kind-weight expects KIND=REAL, got `{spec}`")))?;
        let kind: RelationKind = kind.trim().to_ascii_uppercase().parse().map_err(InvalidArgument)?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| InvalidArgument(format!("--kind-weight value `{value}` is not a number")))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(InvalidArgument(format!("--kind-weight {kind} must be a non-negative number")).into());
        }
        weights.set(kind, value)?;
    }
    Ok(weights)
}

fn normalize_stage(input: &Path, out: &Path, args: &NormalizeArgs, log: &RunLog) -> Result<()> {
    log.stage("normalize")?;
    let weights = kind_weights(&args.kind_weights)?;
    if !(args.log_clamp.is_finite() && args.log_clamp > 0.0) {
        return Err(InvalidArgument("--log-clamp must be positive".into()).into());
    }
    let relations = load_relations(input).with_context(|| format!("reading {}", input.display()))?;
    let merged = merge_relation_kinds(&relations, &weights)?;
    let cfg = NormalizationConfig {
        leverage: match args.leverage {
            LeverageArg::None => Leverage::None,
            LeverageArg::Log => Leverage::Log,
        },
        lift_order: match args.lift_order {
            LiftOrderArg::Pre => LiftOrder::LiftThenNormalize,
            LiftOrderArg::Post => LiftOrder::NormalizeThenLift,
        },
        log_clamp: args.log_clamp,
    };
    let graph = normalize(&merged, &cfg)?;
    fs::write(out, graph.to_text()).with_context(|| format!("writing {}", out.display()))?;
    log.line(&format!(
        "{} artifacts, {} arcs -> {} classes, {} edges",
        relations.artifacts.len(),
        relations.arcs.len(),
        graph.vertex_count(),
        graph.edges().len()
    ))?;
    Ok(())
}

fn search_config(args: &SearchArgs, out: &Path) -> Result<SearchConfig> {
    if args.budget <= 0 {
        return Err(InvalidArgument(format!("--budget must be positive, got {}", args.budget)).into());
    }
    let budget = match args.wall_secs {
        Some(s) if s <= 0 => return Err(InvalidArgument(format!("--wall-secs must be positive, got {s}")).into()),
        Some(s) => Budget::WallTime(Duration::from_secs(s as u64)),
        None => Budget::Probes(args.budget as u64),
    };
    let workers = match args.workers {
        Some(0) => return Err(InvalidArgument("--workers must be positive".into()).into()),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if args.alpha_fanout < 2 {
        return Err(InvalidArgument("--alpha-fanout must be at least 2".into()).into());
    }
    if args.alpha_min_target == 0 {
        return Err(InvalidArgument("--alpha-min-target must be positive".into()).into());
    }
    Ok(SearchConfig {
        min_target: args.alpha_min_target,
        fanout: args.alpha_fanout,
        workers,
        budget,
        snapshot_path: Some(out.join(SEARCH_FILE)),
        snapshot_every: Duration::from_secs(args.snapshot_secs),
        stop_file: Some(args.stop_file.clone().unwrap_or_else(|| out.join(STOP_FILE))),
        verify_bounds: args.verify_bounds,
        ..SearchConfig::default()
    })
}

/// Returns whether the search was stopped before its queue ran dry.
fn cluster_stage(graph_path: &Path, out: &Path, args: &SearchArgs, resume: bool, log: &RunLog) -> Result<bool> {
    log.stage(if resume { "cluster (resume)" } else { "cluster" })?;
    let cfg = search_config(args, out)?;
    let graph = UndirectedGraph::load(graph_path).with_context(|| format!("reading {}", graph_path.display()))?;
    if let Some(stop) = &cfg.stop_file {
        if stop.exists() {
            fs::remove_file(stop)?;
            log.line(&format!("removed stale stop file {}", stop.display()))?;
        }
    }
    let started = Instant::now();
    let state = if resume {
        let path = out.join(SEARCH_FILE);
        SearchState::load(&path).with_context(|| format!("reading {}", path.display()))?
    } else {
        init_search(&graph, &cfg)?
    };
    let outcome = run_search(&graph, state, &cfg)?;
    outcome.tree.save(out.join(TREE_FILE))?;
    let stats = &outcome.state.stats;
    log.line(&format!(
        "{} vertices in {} components; {} workers",
        graph.vertex_count(),
        outcome.state.components.len(),
        cfg.workers
    ))?;
    log.line(&format!(
        "probes {}, flow calls {}, re-marks {}, dropped edges {}, retries {}",
        stats.probes, stats.flow_calls, stats.remarks, stats.dropped_edges, stats.retries
    ))?;
    log.line(&format!(
        "tree nodes {}, open intervals {}, stopped {}, {:.2}s",
        outcome.tree.node_count(),
        outcome.state.frontier.len(),
        outcome.state.stopped,
        started.elapsed().as_secs_f64()
    ))?;
    Ok(outcome.state.stopped)
}

fn perfectize_stage(
    tree_path: &Path,
    graph_path: &Path,
    out: &Path,
    args: &PerfectizeArgs,
    log: &RunLog,
) -> Result<()> {
    log.stage("perfectize")?;
    if args.child_threshold < 3 {
        return Err(InvalidArgument("--child-threshold must be at least 3".into()).into());
    }
    let mut tree = ClusterTree::load(tree_path).with_context(|| format!("reading {}", tree_path.display()))?;
    let graph = UndirectedGraph::load(graph_path).with_context(|| format!("reading {}", graph_path.display()))?;
    if graph.vertex_count() != tree.leaf_count() {
        return Err(InvalidArgument(format!(
            "tree has {} leaves but graph has {} vertices",
            tree.leaf_count(),
            graph.vertex_count()
        ))
        .into());
    }
    let cfg = PerfectizeConfig {
        child_threshold: args.child_threshold,
        root_heuristic: match args.root_heuristic {
            RootHeuristicArg::Cycles => RootHeuristic::HeavyCyclesDeep,
            RootHeuristicArg::Central => RootHeuristic::CentralPrioritizedBfs,
        },
    };
    let stats = perfectize(&mut tree, &graph, &cfg)?;
    tree.save(out)?;
    log.line(&format!(
        "rebuilt {} nodes, added {} synthetic nodes",
        stats.nodes_rebuilt, stats.synthetic_nodes
    ))?;
    Ok(())
}

fn export_stage(tree_path: &Path, out: &Path, args: &ExportArgs, log: &RunLog) -> Result<()> {
    log.stage("export")?;
    let tree = ClusterTree::load(tree_path).with_context(|| format!("reading {}", tree_path.display()))?;
    let prefixes = ClientPrefixes(args.client_prefixes.clone());
    let files = [
        ("tree_depth.txt", export_text(&tree, TextStyle::DepthIndent)),
        ("tree_height.txt", export_text(&tree, TextStyle::HeightIndent)),
        ("tree_bracketed.txt", export_text(&tree, TextStyle::Bracketed)),
        ("tree.xml", export_xml(&tree)),
        ("treeviz.xml", export_treeviz(&tree, &prefixes)),
        ("tree.h3", export_h3(&tree, &prefixes)),
    ];
    for (name, body) in files {
        fs::write(out.join(name), body).with_context(|| format!("writing {name}"))?;
    }
    log.line(&format!(
        "{} leaves, {} nodes exported",
        tree.leaf_count(),
        tree.node_count() - 1
    ))?;
    Ok(())
}

fn stats_stage(tree_path: &Path, out: &Path, xml: Option<&Path>, log: &RunLog) -> Result<()> {
    log.stage("stats")?;
    let tree = ClusterTree::load(tree_path).with_context(|| format!("reading {}", tree_path.display()))?;
    let stats = ubiquity_stats(&tree);
    fs::write(out, stats_tsv(&stats))?;
    if let Some(path) = xml {
        fs::write(path, stats_xml(&stats))?;
    }
    log.line(&format!("{} prefixes ranked", stats.len()))?;
    Ok(())
}
