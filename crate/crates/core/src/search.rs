//! Prioritized search over alpha.
//!
//! Each connected component gets an interval `[alpha_min, alpha_max]` whose
//! endpoints give (close to) one cluster and (close to) all singletons. A
//! popped interval is probed at interior points; every probe's partition is
//! merged into the shared cluster tree and the sub-intervals whose cluster
//! counts still differ go back into one global priority queue. Probes run
//! on a pool of worker threads; queue and tree updates happen under a lock.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cut_clustering::{
    check_bounds, cut_cluster_probe, scale_to_integer, BoundViolation, ClusterError, Partition, ProbeStats,
};
use crate::graph::UndirectedGraph;
use crate::tree::{ClusterTree, TreeError};

pub const SEARCH_FORMAT: &str = "archclust-search";
pub const SEARCH_VERSION: u32 = 1;

/// Intervals narrower than this are not split further.
pub const MIN_INTERVAL_WIDTH: f64 = 1e-12;
const MAX_ENDPOINT_STEPS: usize = 64;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("probe at alpha {alpha} violates a quality bound: {violation}")]
    Bound { alpha: f64, violation: BoundViolation },
    #[error("component {component}: no {which} alpha found after {MAX_ENDPOINT_STEPS} steps")]
    NoConvergence { component: usize, which: &'static str },
    #[error("search state does not match the graph: {0}")]
    StateMismatch(String),
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Number of probes to dispatch; a split in progress may overshoot it.
    Probes(u64),
    WallTime(Duration),
    Unlimited,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// `alpha_min` is halved until the cluster count is at most this.
    pub min_target: usize,
    /// `alpha_max` is doubled until the cluster count reaches this share of the component.
    pub max_target_fraction: f64,
    /// Number of sub-intervals per split (one probe per interior point).
    pub fanout: usize,
    pub workers: usize,
    pub budget: Budget,
    pub snapshot_path: Option<PathBuf>,
    pub snapshot_every: Duration,
    pub stop_file: Option<PathBuf>,
    /// When set, every probe is checked against both quality bounds; the
    /// inner bound is enumerated for clusters up to this size.
    pub verify_bounds: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            min_target: 1,
            max_target_fraction: 0.9,
            fanout: 2,
            workers: 1,
            budget: Budget::Probes(50),
            snapshot_path: None,
            snapshot_every: Duration::from_secs(60),
            stop_file: None,
            verify_bounds: None,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), SearchError> {
        if self.fanout < 2 {
            return Err(SearchError::Config("fan-out must be at least 2".into()));
        }
        if self.workers == 0 {
            return Err(SearchError::Config("need at least one worker".into()));
        }
        if self.min_target == 0 {
            return Err(SearchError::Config("minimum cluster target must be positive".into()));
        }
        if !(self.max_target_fraction > 0.0 && self.max_target_fraction <= 1.0) {
            return Err(SearchError::Config("maximum target fraction must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Priority of the left sub-interval `[alpha_l, alpha_m]` of a split
/// `alpha_l < alpha_m < alpha_r`; larger is probed first.
pub fn priority(alpha_l: f64, alpha_m: f64, alpha_r: f64, k_l: usize, k_m: usize, k_r: usize) -> f64 {
    let _ = alpha_r;
    let left = k_m.saturating_sub(k_l);
    let right = k_r.saturating_sub(k_m);
    interval_priority(alpha_l, alpha_m, left, left.min(right))
}

fn interval_priority(lo: f64, hi: f64, dk: usize, sibling_min: usize) -> f64 {
    let dk = dk as f64;
    (dk * dk).ln() + (hi - lo).ln() + sibling_min as f64 + 1.0 / ((lo + hi) / 2.0).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentState {
    pub vertices: Vec<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProbeRecord {
    pub component: usize,
    pub alpha: f64,
    /// Global vertex ids.
    pub clusters: Vec<Vec<usize>>,
    pub heads: Vec<Vec<usize>>,
    pub stats: ProbeStats,
}

impl ProbeRecord {
    pub fn partition(&self) -> Partition {
        Partition {
            alpha: self.alpha,
            clusters: self.clusters.clone(),
            heads: self.heads.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Interval {
    pub component: usize,
    pub lo: f64,
    pub hi: f64,
    pub k_lo: usize,
    pub k_hi: usize,
    pub priority: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct SearchStats {
    pub probes: u64,
    pub flow_calls: u64,
    pub remarks: u64,
    pub dropped_edges: u64,
    pub retries: u64,
}

impl SearchStats {
    fn add(&mut self, p: &ProbeStats) {
        self.probes += 1;
        self.flow_calls += p.flow_calls;
        self.remarks += p.remarks;
        self.dropped_edges += p.dropped_edges;
    }
}

/// Everything needed to rebuild the tree and continue the search.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SearchState {
    pub format: String,
    pub version: u32,
    pub vertex_count: usize,
    pub fanout: usize,
    pub components: Vec<ComponentState>,
    pub probes: Vec<ProbeRecord>,
    /// Intervals still to be split, including those that were in flight.
    pub frontier: Vec<Interval>,
    pub stats: SearchStats,
    pub stopped: bool,
}

impl SearchState {
    fn empty(g: &UndirectedGraph, fanout: usize) -> Self {
        SearchState {
            format: SEARCH_FORMAT.into(),
            version: SEARCH_VERSION,
            vertex_count: g.vertex_count(),
            fanout,
            components: g
                .components()
                .into_iter()
                .map(|vertices| ComponentState {
                    vertices,
                    alpha_min: None,
                    alpha_max: None,
                })
                .collect(),
            probes: Vec::new(),
            frontier: Vec::new(),
            stats: SearchStats::default(),
            stopped: false,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let state: SearchState = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if state.format != SEARCH_FORMAT || state.version != SEARCH_VERSION {
            return Err(SearchError::StateMismatch(format!(
                "unsupported format {} v{}",
                state.format, state.version
            )));
        }
        Ok(state)
    }

    /// Writes through a temporary file so a crash never leaves a torn snapshot.
    pub fn save(&self, path: &Path) -> Result<(), SearchError> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    /// Initial tree plus every recorded probe.
    pub fn rebuild_tree(&self, g: &UndirectedGraph) -> Result<ClusterTree, SearchError> {
        self.check_matches(g)?;
        let mut tree = initial_tree(g, &self.components);
        for record in &self.probes {
            tree.merge_partition(&record.partition())?;
        }
        Ok(tree)
    }

    fn check_matches(&self, g: &UndirectedGraph) -> Result<(), SearchError> {
        if self.vertex_count != g.vertex_count() {
            return Err(SearchError::StateMismatch(format!(
                "state has {} vertices, graph has {}",
                self.vertex_count,
                g.vertex_count()
            )));
        }
        let comps = g.components();
        if comps.len() != self.components.len() || comps.iter().zip(&self.components).any(|(a, b)| a != &b.vertices) {
            return Err(SearchError::StateMismatch("component structure differs".into()));
        }
        Ok(())
    }
}

pub fn initial_tree(g: &UndirectedGraph, components: &[ComponentState]) -> ClusterTree {
    let mut of = vec![0; g.vertex_count()];
    for (c, comp) in components.iter().enumerate() {
        for &v in &comp.vertices {
            of[v] = c;
        }
    }
    ClusterTree::new(g.labels().to_vec(), &of)
}

/// Probe function: graph of one component (local ids) and alpha.
pub type ProbeFn<'a> = dyn Fn(&UndirectedGraph, f64) -> Result<(Partition, ProbeStats), ClusterError> + Sync + 'a;

fn default_probe(g: &UndirectedGraph, alpha: f64) -> Result<(Partition, ProbeStats), ClusterError> {
    cut_cluster_probe(g, alpha)
}

pub struct SearchOutcome {
    pub tree: ClusterTree,
    pub state: SearchState,
}

/// Finds the endpoints of every component and queues the root intervals.
pub fn init_search(g: &UndirectedGraph, cfg: &SearchConfig) -> Result<SearchState, SearchError> {
    init_search_with(g, cfg, &default_probe)
}

pub fn init_search_with(
    g: &UndirectedGraph,
    cfg: &SearchConfig,
    probe: &ProbeFn<'_>,
) -> Result<SearchState, SearchError> {
    cfg.validate()?;
    let mut state = SearchState::empty(g, cfg.fanout);
    for c in 0..state.components.len() {
        let vertices = state.components[c].vertices.clone();
        if vertices.len() < 2 {
            continue;
        }
        let sub = g.subgraph(&vertices);
        let run = |alpha: f64, state: &mut SearchState| -> Result<usize, SearchError> {
            let record = run_probe(&sub, &vertices, c, alpha, probe, cfg.verify_bounds)?;
            let k = record.clusters.len();
            state.stats.add(&record.stats);
            state.probes.push(record);
            Ok(k)
        };

        let mut lo = 1.0;
        let mut k_lo = run(lo, &mut state)?;
        let mut steps = 0;
        while k_lo > cfg.min_target {
            steps += 1;
            if steps > MAX_ENDPOINT_STEPS {
                return Err(SearchError::NoConvergence {
                    component: c,
                    which: "minimum",
                });
            }
            lo /= 2.0;
            k_lo = run(lo, &mut state)?;
        }

        let target = ((cfg.max_target_fraction * vertices.len() as f64).ceil() as usize).max(1);
        let mut hi = if lo < 1.0 { 1.0 } else { lo * 2.0 };
        let mut k_hi = match state.probes.iter().rev().find(|r| r.component == c && r.alpha == hi) {
            Some(r) => r.clusters.len(),
            None => run(hi, &mut state)?,
        };
        steps = 0;
        while k_hi < target {
            steps += 1;
            if steps > MAX_ENDPOINT_STEPS {
                return Err(SearchError::NoConvergence {
                    component: c,
                    which: "maximum",
                });
            }
            hi *= 2.0;
            k_hi = run(hi, &mut state)?;
        }

        state.components[c].alpha_min = Some(lo);
        state.components[c].alpha_max = Some(hi);
        if k_hi > k_lo {
            state.frontier.push(Interval {
                component: c,
                lo,
                hi,
                k_lo,
                k_hi,
                priority: f64::MAX,
            });
        }
        log::info!(
            "component {c}: {} vertices, alpha in [{lo}, {hi}], clusters {k_lo}..{k_hi}",
            vertices.len()
        );
    }
    Ok(state)
}

fn run_probe(
    sub: &UndirectedGraph,
    vertices: &[usize],
    component: usize,
    alpha: f64,
    probe: &ProbeFn<'_>,
    verify: Option<usize>,
) -> Result<ProbeRecord, SearchError> {
    let (local, stats) = probe(sub, alpha)?;
    if let Some(limit) = verify {
        let scaled = scale_to_integer(sub, alpha)?;
        check_bounds(sub, &scaled, &local, limit).map_err(|violation| SearchError::Bound { alpha, violation })?;
    }
    let to_global = |rows: Vec<Vec<usize>>| -> Vec<Vec<usize>> {
        rows.into_iter()
            .map(|row| row.into_iter().map(|v| vertices[v]).collect())
            .collect()
    };
    Ok(ProbeRecord {
        component,
        alpha,
        clusters: to_global(local.clusters),
        heads: to_global(local.heads),
        stats,
    })
}

/// Initializes and runs a search; a zero probe budget returns the initial tree.
pub fn search(g: &UndirectedGraph, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    if cfg.budget == Budget::Probes(0) {
        cfg.validate()?;
        let state = SearchState::empty(g, cfg.fanout);
        return Ok(SearchOutcome {
            tree: initial_tree(g, &state.components),
            state,
        });
    }
    let state = init_search(g, cfg)?;
    run_search(g, state, cfg)
}

pub fn run_search(g: &UndirectedGraph, state: SearchState, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    run_search_with(g, state, cfg, &default_probe)
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    seq: u64,
    interval: Interval,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.interval
            .priority
            .total_cmp(&other.interval.priority)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Split {
    interval: Interval,
    alphas: Vec<f64>,
    counts: Vec<Option<usize>>,
    remaining: usize,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    split: u64,
    slot: usize,
    component: usize,
    alpha: f64,
    attempts: u32,
}

struct Shared {
    queue: BinaryHeap<QueueEntry>,
    splits: HashMap<u64, Split>,
    jobs: VecDeque<Job>,
    tree: ClusterTree,
    state: SearchState,
    next_seq: u64,
    dispatched: u64,
    in_flight: usize,
    halted: bool,
    failure: Option<SearchError>,
    last_snapshot: Instant,
}

impl Shared {
    fn push(&mut self, interval: Interval) {
        self.next_seq += 1;
        self.queue.push(QueueEntry {
            seq: self.next_seq,
            interval,
        });
    }

    fn frontier(&self) -> Vec<Interval> {
        let mut open: Vec<QueueEntry> = self.queue.iter().copied().collect();
        open.sort_by(|a, b| b.cmp(a));
        let mut splits: Vec<(&u64, &Split)> = self.splits.iter().collect();
        splits.sort_by_key(|(id, _)| **id);
        splits
            .into_iter()
            .map(|(_, s)| s.interval)
            .chain(open.into_iter().map(|e| e.interval))
            .collect()
    }

    fn snapshot(&mut self) -> SearchState {
        let mut s = self.state.clone();
        s.frontier = self.frontier();
        s
    }

    fn expand(&mut self, entry: QueueEntry, fanout: usize) {
        let iv = entry.interval;
        let alphas: Vec<f64> = (1..fanout)
            .map(|i| iv.lo + (iv.hi - iv.lo) * i as f64 / fanout as f64)
            .collect();
        self.next_seq += 1;
        let id = self.next_seq;
        for (slot, &alpha) in alphas.iter().enumerate() {
            self.jobs.push_back(Job {
                split: id,
                slot,
                component: iv.component,
                alpha,
                attempts: 0,
            });
        }
        self.dispatched += alphas.len() as u64;
        self.splits.insert(
            id,
            Split {
                interval: iv,
                counts: vec![None; alphas.len()],
                remaining: alphas.len(),
                alphas,
            },
        );
    }

    fn complete(&mut self, job: Job, result: Result<ProbeRecord, SearchError>) {
        let record = match result {
            Ok(r) => r,
            Err(e) if job.attempts == 0 => {
                log::warn!("probe at alpha {} failed ({e}), retrying once", job.alpha);
                self.state.stats.retries += 1;
                self.jobs.push_front(Job { attempts: 1, ..job });
                return;
            }
            Err(e) => {
                self.failure = Some(e);
                self.halted = true;
                return;
            }
        };
        if let Err(e) = self.tree.merge_partition(&record.partition()) {
            self.failure = Some(e.into());
            self.halted = true;
            return;
        }
        let k = record.clusters.len();
        self.state.stats.add(&record.stats);
        self.state.probes.push(record);
        log::debug!("probe alpha={} k={k}", job.alpha);

        let split = self.splits.get_mut(&job.split).expect("unknown split");
        split.counts[job.slot] = Some(k);
        split.remaining -= 1;
        if split.remaining > 0 {
            return;
        }
        let split = self.splits.remove(&job.split).unwrap();
        let iv = split.interval;
        let mut points = vec![(iv.lo, iv.k_lo)];
        points.extend(split.alphas.iter().zip(&split.counts).map(|(&a, k)| (a, k.unwrap())));
        points.push((iv.hi, iv.k_hi));
        let deltas: Vec<usize> = points.windows(2).map(|w| w[1].1.saturating_sub(w[0].1)).collect();
        let sibling_min = deltas.iter().copied().min().unwrap_or(0);
        for (w, &dk) in points.windows(2).zip(&deltas) {
            let ((lo, k_lo), (hi, k_hi)) = (w[0], w[1]);
            if dk == 0 || hi - lo < MIN_INTERVAL_WIDTH {
                continue;
            }
            self.push(Interval {
                component: iv.component,
                lo,
                hi,
                k_lo,
                k_hi,
                priority: interval_priority(lo, hi, dk, sibling_min),
            });
        }
    }
}

pub fn run_search_with(
    g: &UndirectedGraph,
    state: SearchState,
    cfg: &SearchConfig,
    probe: &ProbeFn<'_>,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let tree = state.rebuild_tree(g)?;
    let subgraphs: Vec<UndirectedGraph> = state.components.iter().map(|c| g.subgraph(&c.vertices)).collect();
    let vertex_lists: Vec<Vec<usize>> = state.components.iter().map(|c| c.vertices.clone()).collect();
    let mut shared = Shared {
        queue: BinaryHeap::new(),
        splits: HashMap::new(),
        jobs: VecDeque::new(),
        tree,
        state,
        next_seq: 0,
        dispatched: 0,
        in_flight: 0,
        halted: false,
        failure: None,
        last_snapshot: Instant::now(),
    };
    shared.state.stopped = false;
    for iv in std::mem::take(&mut shared.state.frontier) {
        shared.push(iv);
    }

    let started = Instant::now();
    let lock = Mutex::new(shared);
    let wake = Condvar::new();
    let worker = || {
        let mut guard = lock.lock().unwrap();
        loop {
            if !guard.halted {
                if let Some(stop) = &cfg.stop_file {
                    if stop.exists() {
                        log::info!("stop file {} found, draining", stop.display());
                        guard.halted = true;
                        guard.state.stopped = true;
                    }
                }
                if let Budget::WallTime(limit) = cfg.budget {
                    if started.elapsed() >= limit {
                        guard.halted = true;
                        guard.state.stopped = true;
                    }
                }
            }
            if !guard.halted {
                if let Some(job) = guard.jobs.pop_front() {
                    guard.in_flight += 1;
                    drop(guard);
                    let c = job.component;
                    let result = run_probe(&subgraphs[c], &vertex_lists[c], c, job.alpha, probe, cfg.verify_bounds);
                    guard = lock.lock().unwrap();
                    guard.in_flight -= 1;
                    guard.complete(job, result);
                    if let Some(path) = &cfg.snapshot_path {
                        if guard.last_snapshot.elapsed() >= cfg.snapshot_every {
                            let snap = guard.snapshot();
                            if let Err(e) = snap.save(path) {
                                log::warn!("snapshot failed: {e}");
                            }
                            guard.last_snapshot = Instant::now();
                        }
                    }
                    wake.notify_all();
                    continue;
                }
                let within_budget = match cfg.budget {
                    Budget::Probes(n) => guard.dispatched < n,
                    _ => true,
                };
                if within_budget {
                    if let Some(entry) = guard.queue.pop() {
                        guard.expand(entry, cfg.fanout);
                        wake.notify_all();
                        continue;
                    }
                }
            }
            if guard.in_flight == 0 {
                wake.notify_all();
                break;
            }
            guard = wake.wait(guard).unwrap();
        }
    };
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers {
            scope.spawn(worker);
        }
    });

    let mut shared = lock.into_inner().unwrap();
    if let Some(e) = shared.failure.take() {
        return Err(e);
    }
    let final_state = shared.snapshot();
    if let Some(path) = &cfg.snapshot_path {
        final_state.save(path)?;
    }
    log::info!(
        "search finished: {} probes, {} flow calls, {} re-marks, {} open intervals",
        final_state.stats.probes,
        final_state.stats.flow_calls,
        final_state.stats.remarks,
        final_state.frontier.len()
    );
    Ok(SearchOutcome {
        tree: shared.tree,
        state: final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

    fn triangle_bridge() -> UndirectedGraph {
        UndirectedGraph::from_edges(
            6,
            [
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (3, 5, 1.0),
                (4, 5, 1.0),
                (2, 3, 0.2),
            ],
        )
    }

    fn unlimited() -> SearchConfig {
        SearchConfig {
            budget: Budget::Unlimited,
            ..Default::default()
        }
    }

    #[test]
    fn priority_example() {
        let p = priority(0.1, 0.2, 0.3, 10, 100, 150);
        let expected = 8100f64.ln() + 0.1f64.ln() + 50.0 + 1.0 / 0.15f64.sqrt();
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 59.279).abs() < 1e-3);
    }

    #[test]
    fn doubling_delta_k_adds_ln4() {
        let a = interval_priority(0.1, 0.2, 90, 50);
        let b = interval_priority(0.1, 0.2, 180, 50);
        assert!((b - a - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn endpoints_on_triangle_bridge() {
        let state = init_search(&triangle_bridge(), &SearchConfig::default()).unwrap();
        let c = &state.components[0];
        assert_eq!(c.alpha_min, Some(0.0625));
        assert_eq!(c.alpha_max, Some(1.0));
        let k = |a: f64| state.probes.iter().find(|r| r.alpha == a).unwrap().clusters.len();
        assert_eq!(k(0.0625), 1);
        assert_eq!(k(0.5), 2);
        assert_eq!(k(1.0), 6);
        assert_eq!(state.frontier.len(), 1);
    }

    #[test]
    fn singleton_components_are_not_searched() {
        let g = UndirectedGraph::from_edges(3, [(0, 1, 1.0)]);
        let state = init_search(&g, &SearchConfig::default()).unwrap();
        assert_eq!(state.components.len(), 2);
        assert_eq!(state.components[1].alpha_min, None);
        assert!(state.probes.iter().all(|r| r.component == 0));
    }

    #[test]
    fn zero_budget_returns_initial_tree() {
        let cfg = SearchConfig {
            budget: Budget::Probes(0),
            ..Default::default()
        };
        let out = search(&triangle_bridge(), &cfg).unwrap();
        assert_eq!(out.tree.node_count(), 7);
        assert_eq!(out.tree.roots().len(), 6);
        assert!(out.state.probes.is_empty());
    }

    #[test]
    fn full_search_finds_both_triangles() {
        let out = search(&triangle_bridge(), &unlimited()).unwrap();
        out.tree.validate().unwrap();
        let sets: Vec<Vec<usize>> = out.tree.canonical().into_iter().map(|(s, _)| s).collect();
        assert!(sets.contains(&vec![0, 1, 2]));
        assert!(sets.contains(&vec![3, 4, 5]));
        assert!(sets.contains(&vec![0, 1, 2, 3, 4, 5]));
        assert!(out.state.is_complete());
    }

    #[test]
    fn worker_count_does_not_change_the_tree() {
        let g = UndirectedGraph::from_edges(
            8,
            [
                (0, 1, 3.0),
                (1, 2, 2.0),
                (2, 0, 1.0),
                (2, 3, 0.5),
                (3, 4, 2.0),
                (4, 5, 1.5),
                (5, 3, 1.0),
                (5, 6, 0.25),
                (6, 7, 4.0),
            ],
        );
        let one = search(&g, &unlimited()).unwrap();
        let four = search(
            &g,
            &SearchConfig {
                workers: 4,
                ..unlimited()
            },
        )
        .unwrap();
        assert_eq!(one.tree.canonical(), four.tree.canonical());
        let three_way = search(
            &g,
            &SearchConfig {
                fanout: 3,
                ..unlimited()
            },
        )
        .unwrap();
        assert_eq!(one.tree.canonical().len(), three_way.tree.canonical().len());
    }

    #[test]
    fn failing_probe_is_retried_once() {
        let g = triangle_bridge();
        let state = init_search(&g, &SearchConfig::default()).unwrap();
        let calls = AtomicUsize::new(0);
        let flaky = |sub: &UndirectedGraph, alpha: f64| {
            if calls.fetch_add(1, AtomicOrdering::SeqCst) == 0 {
                Err(ClusterError::BadOrder)
            } else {
                cut_cluster_probe(sub, alpha)
            }
        };
        let out = run_search_with(&g, state, &unlimited(), &flaky).unwrap();
        assert_eq!(out.state.stats.retries, 1);
        assert!(out.state.is_complete());
    }

    #[test]
    fn persistent_failure_surfaces() {
        let g = triangle_bridge();
        let state = init_search(&g, &SearchConfig::default()).unwrap();
        let broken = |_: &UndirectedGraph, _: f64| Err(ClusterError::BadOrder);
        let err = run_search_with(&g, state, &unlimited(), &broken).err().unwrap();
        assert!(matches!(err, SearchError::Cluster(ClusterError::BadOrder)));
    }

    #[test]
    fn stop_file_then_resume() {
        let g = triangle_bridge();
        let dir = tempfile::tempdir().unwrap();
        let stop = dir.path().join("shutdown.sig");
        let snap = dir.path().join("search.json");
        std::fs::write(&stop, "").unwrap();
        let cfg = SearchConfig {
            stop_file: Some(stop.clone()),
            snapshot_path: Some(snap.clone()),
            ..unlimited()
        };
        let stopped = search(&g, &cfg).unwrap();
        assert!(stopped.state.stopped);
        assert!(!stopped.state.is_complete());

        std::fs::remove_file(&stop).unwrap();
        let saved = SearchState::load(&snap).unwrap();
        assert_eq!(saved, stopped.state);
        let resumed = run_search(&g, saved, &cfg).unwrap();
        let direct = search(&g, &unlimited()).unwrap();
        assert!(resumed.state.is_complete());
        assert_eq!(resumed.tree.canonical(), direct.tree.canonical());
    }

    #[test]
    fn probe_budget_limits_work() {
        let g = triangle_bridge();
        let init = init_search(&g, &SearchConfig::default()).unwrap();
        let before = init.stats.probes;
        let out = run_search(
            &g,
            init,
            &SearchConfig {
                budget: Budget::Probes(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.state.stats.probes, before + 1);
    }

    #[test]
    fn state_mismatch_detected() {
        let state = init_search(&triangle_bridge(), &SearchConfig::default()).unwrap();
        let other = UndirectedGraph::from_edges(3, [(0, 1, 1.0)]);
        assert!(matches!(state.rebuild_tree(&other), Err(SearchError::StateMismatch(_))));
    }
}
