use std::collections::VecDeque;

use super::{Capacity, FlowError, FlowNetwork, MinCut, CAPACITY_HEADROOM};

/// Operation counters accumulated over every `solve` call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowStats {
    pub solves: u64,
    pub pushes: u64,
    pub relabels: u64,
    pub gaps: u64,
    pub global_relabels: u64,
}

/// Highest-label push-relabel solver with the gap heuristic and periodic
/// global relabeling.
///
/// The topology is frozen in compressed adjacency form at construction; each
/// [`solve`](Self::solve) restores the original capacities, so one instance
/// can answer many source/sink queries on the same network.
pub struct FlowSolver {
    n: usize,
    start: Vec<usize>,
    head: Vec<usize>,
    rev: Vec<usize>,
    base: Vec<Capacity>,
    cap: Vec<Capacity>,
    excess: Vec<Capacity>,
    label: Vec<usize>,
    current: Vec<usize>,
    buckets: Vec<Vec<usize>>,
    highest: usize,
    label_count: Vec<usize>,
    queue: VecDeque<usize>,
    stats: FlowStats,
}

impl FlowSolver {
    pub fn new(net: &FlowNetwork) -> Result<Self, FlowError> {
        let n = net.vertex_count();
        let mut degree = vec![0usize; n + 1];
        for a in net.arcs() {
            if a.capacity < 0 || a.reverse_capacity < 0 {
                return Err(FlowError::NegativeCapacity {
                    tail: a.tail,
                    head: a.head,
                });
            }
            if a.capacity.checked_add(a.reverse_capacity).is_none() {
                return Err(FlowError::Overflow { vertex: a.tail });
            }
            degree[a.tail] += 1;
            degree[a.head] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for v in 0..n {
            start[v + 1] = start[v] + degree[v];
        }
        let m = start[n];
        let mut fill = start.clone();
        let mut head = vec![0; m];
        let mut rev = vec![0; m];
        let mut base = vec![0; m];
        for a in net.arcs() {
            let fwd = fill[a.tail];
            fill[a.tail] += 1;
            let bwd = fill[a.head];
            fill[a.head] += 1;
            head[fwd] = a.head;
            head[bwd] = a.tail;
            rev[fwd] = bwd;
            rev[bwd] = fwd;
            base[fwd] = a.capacity;
            base[bwd] = a.reverse_capacity;
        }
        Ok(FlowSolver {
            n,
            start,
            head,
            rev,
            cap: base.clone(),
            base,
            excess: vec![0; n],
            label: vec![0; n],
            current: vec![0; n],
            buckets: vec![Vec::new(); n + 1],
            highest: 0,
            label_count: vec![0; n + 1],
            queue: VecDeque::new(),
            stats: FlowStats::default(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> FlowStats {
        self.stats
    }

    /// Maximum `s`-`t` flow value and the minimal source side of a minimum cut.
    pub fn solve(&mut self, s: usize, t: usize) -> Result<MinCut, FlowError> {
        for v in [s, t] {
            if v >= self.n {
                return Err(FlowError::VertexOutOfRange { vertex: v, n: self.n });
            }
        }
        if s == t {
            return Err(FlowError::SameTerminals(s));
        }
        let out = self
            .arcs(s)
            .try_fold(0 as Capacity, |acc, a| acc.checked_add(self.base[a]));
        if !matches!(out, Some(total) if total <= CAPACITY_HEADROOM) {
            return Err(FlowError::Overflow { vertex: s });
        }

        self.stats.solves += 1;
        self.cap.copy_from_slice(&self.base);
        self.excess.fill(0);
        self.maximum_preflow(s, t);
        let value = self.excess[t];
        self.return_excess(s, t)?;
        #[cfg(debug_assertions)]
        self.check_flow(s, t, value);

        let source_side = self.residual_reach(s);
        debug_assert!(!source_side[t]);
        Ok(MinCut { value, source_side })
    }

    fn arcs(&self, v: usize) -> std::ops::Range<usize> {
        self.start[v]..self.start[v + 1]
    }

    fn push(&mut self, a: usize, u: usize, amount: Capacity) -> usize {
        let v = self.head[a];
        self.cap[a] -= amount;
        self.cap[self.rev[a]] += amount;
        self.excess[u] -= amount;
        self.excess[v] += amount;
        self.stats.pushes += 1;
        v
    }

    /// Exact distances to `t` in the residual graph; unreachable vertices
    /// and `s` get label `n`.
    fn global_relabel(&mut self, s: usize, t: usize) {
        let n = self.n;
        self.stats.global_relabels += 1;
        self.label.fill(n);
        self.label_count.fill(0);
        self.label[t] = 0;
        self.queue.clear();
        self.queue.push_back(t);
        while let Some(v) = self.queue.pop_front() {
            self.label_count[self.label[v]] += 1;
            for a in self.arcs(v) {
                let u = self.head[a];
                if u != s && self.label[u] == n && self.cap[self.rev[a]] > 0 {
                    self.label[u] = self.label[v] + 1;
                    self.queue.push_back(u);
                }
            }
        }
        for v in 0..n {
            self.current[v] = self.start[v];
        }
        for b in &mut self.buckets {
            b.clear();
        }
        self.highest = 0;
        for v in 0..n {
            if v != s && v != t && self.excess[v] > 0 && self.label[v] < n {
                self.activate(v);
            }
        }
    }

    fn activate(&mut self, v: usize) {
        let l = self.label[v];
        self.buckets[l].push(v);
        self.highest = self.highest.max(l);
    }

    fn maximum_preflow(&mut self, s: usize, t: usize) {
        let n = self.n;
        let m = self.head.len();
        self.global_relabel(s, t);
        for a in self.arcs(s) {
            let c = self.cap[a];
            if c > 0 {
                let v = self.push(a, s, c);
                if v != t && self.excess[v] == c && self.label[v] < n {
                    self.activate(v);
                }
            }
        }

        let relabel_budget = 6 * n + m / 2;
        let mut work = 0usize;
        loop {
            while self.highest > 0 && self.buckets[self.highest].is_empty() {
                self.highest -= 1;
            }
            let Some(u) = self.buckets[self.highest].pop() else {
                break;
            };
            if self.label[u] != self.highest {
                continue;
            }
            work += self.discharge(u);
            if work > relabel_budget {
                work = 0;
                self.global_relabel(s, t);
            }
        }
    }

    /// Pushes excess out of `u` until it is zero or `u` is cut off from the
    /// sink. Returns the relabel work spent.
    fn discharge(&mut self, u: usize) -> usize {
        let n = self.n;
        let mut work = 0;
        while self.excess[u] > 0 {
            let end = self.start[u + 1];
            while self.current[u] < end && self.excess[u] > 0 {
                let a = self.current[u];
                let v = self.head[a];
                if self.cap[a] > 0 && self.label[u] == self.label[v] + 1 {
                    let amount = self.excess[u].min(self.cap[a]);
                    let was_idle = self.excess[v] == 0;
                    self.push(a, u, amount);
                    if was_idle && self.label[v] > 0 && self.label[v] < n {
                        self.activate(v);
                    }
                } else {
                    self.current[u] += 1;
                }
            }
            if self.excess[u] == 0 {
                break;
            }
            work += self.relabel(u);
            if self.label[u] >= n {
                break;
            }
        }
        work
    }

    fn relabel(&mut self, u: usize) -> usize {
        let n = self.n;
        self.stats.relabels += 1;
        let old = self.label[u];
        let mut lowest = n;
        for a in self.arcs(u) {
            if self.cap[a] > 0 {
                lowest = lowest.min(self.label[self.head[a]] + 1);
            }
        }
        self.label_count[old] -= 1;
        if self.label_count[old] == 0 {
            // nothing at `old` any more, so nothing above it can reach the sink
            self.stats.gaps += 1;
            for v in 0..n {
                if self.label[v] > old && self.label[v] < n {
                    self.label_count[self.label[v]] -= 1;
                    self.label[v] = n;
                }
            }
            self.label[u] = n;
        } else {
            self.label[u] = lowest;
            if lowest < n {
                self.label_count[lowest] += 1;
            }
        }
        self.current[u] = self.start[u];
        self.start[u + 1] - self.start[u] + 12
    }

    /// Sends the excess stranded on the source side back to `s`, turning the
    /// maximum preflow into a maximum flow.
    fn return_excess(&mut self, s: usize, t: usize) -> Result<(), FlowError> {
        let n = self.n;
        let unreached = usize::MAX;
        self.label.fill(unreached);
        self.label[s] = 0;
        self.queue.clear();
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            for a in self.arcs(v) {
                let u = self.head[a];
                if u != t && self.label[u] == unreached && self.cap[self.rev[a]] > 0 {
                    self.label[u] = self.label[v] + 1;
                    self.queue.push_back(u);
                }
            }
        }
        self.queue.clear();
        for v in 0..n {
            self.current[v] = self.start[v];
            if v != s && v != t && self.excess[v] > 0 {
                self.queue.push_back(v);
            }
        }
        while let Some(u) = self.queue.pop_front() {
            while self.excess[u] > 0 {
                let end = self.start[u + 1];
                while self.current[u] < end && self.excess[u] > 0 {
                    let a = self.current[u];
                    let v = self.head[a];
                    if v != t && self.cap[a] > 0 && self.label[v] != unreached && self.label[u] == self.label[v] + 1 {
                        let amount = self.excess[u].min(self.cap[a]);
                        let was_idle = self.excess[v] == 0;
                        self.push(a, u, amount);
                        if was_idle && v != s {
                            self.queue.push_back(v);
                        }
                    } else {
                        self.current[u] += 1;
                    }
                }
                if self.excess[u] == 0 {
                    break;
                }
                let lowest = self
                    .arcs(u)
                    .filter(|&a| self.cap[a] > 0 && self.head[a] != t && self.label[self.head[a]] != unreached)
                    .map(|a| self.label[self.head[a]] + 1)
                    .min();
                match lowest {
                    Some(l) if l <= 2 * n => {
                        self.stats.relabels += 1;
                        self.label[u] = l;
                        self.current[u] = self.start[u];
                    }
                    _ => return Err(FlowError::Internal),
                }
            }
        }
        Ok(())
    }

    fn residual_reach(&mut self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        seen[s] = true;
        self.queue.clear();
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            for a in self.arcs(v) {
                let u = self.head[a];
                if !seen[u] && self.cap[a] > 0 {
                    seen[u] = true;
                    self.queue.push_back(u);
                }
            }
        }
        seen
    }

    #[cfg(debug_assertions)]
    fn check_flow(&self, s: usize, t: usize, value: Capacity) {
        for a in 0..self.head.len() {
            let r = self.rev[a];
            assert!(self.cap[a] >= 0, "negative residual capacity");
            assert_eq!(
                self.cap[a] + self.cap[r],
                self.base[a] + self.base[r],
                "capacity pair drifted"
            );
        }
        for v in 0..self.n {
            let net: Capacity = self.arcs(v).map(|a| self.base[a] - self.cap[a]).sum();
            let expected = if v == s {
                value
            } else if v == t {
                -value
            } else {
                0
            };
            assert_eq!(net, expected, "flow conservation violated at {v}");
            assert_eq!(self.excess[v], -expected);
        }
    }
}
