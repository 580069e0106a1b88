//! Network simplex for the dense bipartite transportation problem.
//!
//! Spanning-tree representation (parent/thread indices) with a block-search
//! pivot rule, after the structure of the LEMON network simplex. Specialized
//! here to uncapacitated transportation instances with f64 supplies, so only
//! the balanced-supply initialization and the lower/tree arc states are
//! needed. Transport arcs are implicit: arc `e < m*n` runs from source `e / n`
//! to sink `m + e % n`.

use super::{CostMatrix, TransportPlan};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
/// Relative tolerance for accepting an entering arc; scaled by the local
/// magnitude of potentials and costs.
const PIVOT_EPS: f64 = 1e-14;
/// Absolute tolerance on residual artificial flow in the final basis.
const FEAS_EPS: f64 = 1e-9;

const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
/// Arc directed from node to parent.
const DIR_UP: i8 = 1;
/// Arc directed from parent to node.
const DIR_DOWN: i8 = -1;

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a CostMatrix,
    /// Cost of each artificial arc (indexed by node).
    art_cost: Vec<f64>,
    supply: Vec<f64>,

    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,

    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,

    root: usize,
    block_size: usize,
    next_arc: usize,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

impl<'a> Simplex<'a> {
    fn new(cost: &'a CostMatrix, wx: &[f64], wy: &[f64]) -> Self {
        let m = cost.rows();
        let n = cost.cols();
        let node_num = m + n;
        let arc_num = m * n;

        let mut supply = Vec::with_capacity(node_num);
        supply.extend_from_slice(wx);
        supply.extend(wy.iter().map(|w| -w));

        let block_size = ((arc_num as f64).sqrt() as usize).max(10);

        Simplex {
            m,
            n,
            cost,
            art_cost: vec![0.0; node_num],
            supply,
            flow: vec![0.0; arc_num + node_num],
            state: vec![STATE_LOWER; arc_num + node_num],
            pi: vec![0.0; node_num + 1],
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            pred_dir: vec![DIR_UP; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![0; node_num + 1],
            last_succ: vec![0; node_num + 1],
            dirty_revs: Vec::new(),
            root: node_num,
            block_size,
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
        }
    }

    #[inline]
    fn arc_num(&self) -> usize {
        self.m * self.n
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        let arcs = self.arc_num();
        if e < arcs {
            e / self.n
        } else {
            let u = e - arcs;
            if self.supply[u] >= 0.0 { u } else { self.root }
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        let arcs = self.arc_num();
        if e < arcs {
            self.m + e % self.n
        } else {
            let u = e - arcs;
            if self.supply[u] >= 0.0 { self.root } else { u }
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        let arcs = self.arc_num();
        if e < arcs {
            self.cost.entries()[e]
        } else {
            self.art_cost[e - arcs]
        }
    }

    /// Initial basis: every node hangs off an artificial root through its
    /// artificial arc, carrying the node's full supply or demand.
    fn initialize(&mut self) {
        let node_num = self.m + self.n;
        let arcs = self.arc_num();

        let max_cost = self
            .cost
            .entries()
            .iter()
            .cloned()
            .fold(0.0_f64, f64::max);
        let art = (max_cost + 1.0) * (node_num as f64 + 1.0);

        self.parent[self.root] = NONE;
        self.pred[self.root] = NONE;
        self.thread[self.root] = 0;
        self.rev_thread[0] = self.root;
        self.succ_num[self.root] = node_num + 1;
        self.last_succ[self.root] = node_num - 1;
        self.pi[self.root] = 0.0;

        for u in 0..node_num {
            self.parent[u] = self.root;
            self.pred[u] = arcs + u;
            self.thread[u] = u + 1;
            self.rev_thread[u + 1] = u;
            self.succ_num[u] = 1;
            self.last_succ[u] = u;
            self.state[arcs + u] = STATE_TREE;
            if self.supply[u] >= 0.0 {
                // Arc u -> root at zero cost.
                self.pred_dir[u] = DIR_UP;
                self.pi[u] = 0.0;
                self.flow[arcs + u] = self.supply[u];
                self.art_cost[u] = 0.0;
            } else {
                // Arc root -> u at a cost dominating any transport arc.
                self.pred_dir[u] = DIR_DOWN;
                self.pi[u] = art;
                self.flow[arcs + u] = -self.supply[u];
                self.art_cost[u] = art;
            }
        }
    }

    /// Block-search pivot rule over the transport arcs.
    fn find_entering_arc(&mut self) -> bool {
        let search = self.arc_num();
        let mut min_cost = 0.0_f64;
        let mut count = self.block_size;
        let mut found_at = NONE;

        let scan = |this: &mut Self,
                        range: std::ops::Range<usize>,
                        min_cost: &mut f64,
                        count: &mut usize,
                        found_at: &mut usize|
         -> bool {
            for e in range {
                if this.state[e] == STATE_LOWER {
                    let c = this.cost.entries()[e] + this.pi[e / this.n]
                        - this.pi[this.m + e % this.n];
                    if c < *min_cost {
                        *min_cost = c;
                        this.in_arc = e;
                    }
                }
                *count -= 1;
                if *count == 0 {
                    if this.accepts(*min_cost) {
                        *found_at = e;
                        return true;
                    }
                    *count = this.block_size;
                }
            }
            false
        };

        if scan(self, self.next_arc..search, &mut min_cost, &mut count, &mut found_at)
            || scan(self, 0..self.next_arc, &mut min_cost, &mut count, &mut found_at)
        {
            self.next_arc = (found_at + 1) % search;
            return true;
        }
        self.accepts(min_cost)
    }

    /// Entering-arc acceptance with magnitude-relative tolerance, so that
    /// rounding noise in the potentials cannot drive endless pivots.
    #[inline]
    fn accepts(&self, min_cost: f64) -> bool {
        if min_cost >= 0.0 {
            return false;
        }
        let e = self.in_arc;
        let a = self.pi[self.source(e)]
            .abs()
            .max(self.pi[self.target(e)].abs())
            .max(self.arc_cost(e).abs())
            .max(1.0);
        min_cost < -a * PIVOT_EPS
    }

    /// Deepest common ancestor of the entering arc's endpoints.
    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Smallest flow on a cycle arc oriented against the entering direction.
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);

        self.delta = f64::INFINITY;
        let mut found = false;
        let mut result_first = true;

        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    found = true;
                    result_first = true;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    found = true;
                    result_first = false;
                }
            }
            u = self.parent[u];
        }
        if result_first {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        found
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            self.flow[self.in_arc] += self.delta;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] as f64 * self.delta;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] as f64 * self.delta;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out_arc = self.pred[self.u_out];
        self.state[out_arc] = STATE_LOWER;
        self.flow[out_arc] = 0.0;
    }

    fn update_tree_structure(&mut self) {
        let old_rev_thread = self.rev_thread[self.u_out];
        let old_succ_num = self.succ_num[self.u_out];
        let old_last_succ = self.last_succ[self.u_out];
        let v_out = self.parent[self.u_out];

        if self.u_in == self.u_out {
            self.parent[self.u_in] = self.v_in;
            self.pred[self.u_in] = self.in_arc;
            self.pred_dir[self.u_in] = if self.u_in == self.source(self.in_arc) {
                DIR_UP
            } else {
                DIR_DOWN
            };

            if self.thread[self.v_in] != self.u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[self.v_in];
                self.thread[self.v_in] = self.u_out;
                self.rev_thread[self.u_out] = self.v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == self.v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[self.v_in]
            };

            // Reroot the subtree between u_in and u_out while restitching the
            // thread list.
            let mut stem = self.u_in;
            let mut stem_parent = self.v_in;
            let mut last = self.last_succ[self.u_in];
            let mut after = self.thread[last];
            self.thread[self.v_in] = self.u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(self.v_in);
            while stem != self.u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = stem_parent;
                stem_parent = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[stem_parent] {
                    self.rev_thread[stem_parent]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[self.u_out] = stem_parent;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[self.u_out] = last;

            if old_rev_thread != self.v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                self.rev_thread[self.thread[u]] = u;
            }

            // Walk back from u_out to u_in fixing predecessors and counts.
            let mut temp_succ_num = 0;
            let temp_last_succ = self.last_succ[self.u_out];
            let mut u = self.u_out;
            let mut p = self.parent[u];
            while u != self.u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                temp_succ_num += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = temp_succ_num;
                self.last_succ[p] = temp_last_succ;
                u = p;
                p = self.parent[u];
            }
            self.pred[self.u_in] = self.in_arc;
            self.pred_dir[self.u_in] = if self.u_in == self.source(self.in_arc) {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[self.u_in] = old_succ_num;
        }

        // Update last_succ from v_in and v_out towards the root.
        let up_limit_out = if self.last_succ[self.join] == self.v_in {
            self.join
        } else {
            NONE
        };
        let last_succ_out = self.last_succ[self.u_out];
        let mut u = self.v_in;
        while u != NONE && self.last_succ[u] == self.v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if self.join != old_rev_thread && self.v_in != old_rev_thread {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = self.v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in] - self.pi[self.u_in]
            - self.pred_dir[self.u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self) -> Result<()> {
        self.initialize();
        let max_pivots = 1000 + 200 * (self.m + self.n) + self.arc_num();
        let mut pivots = 0usize;
        while self.find_entering_arc() {
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::NumericalFailure("pivot limit exceeded"));
            }
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::NumericalFailure("unbounded transportation instance"));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }

        let arcs = self.arc_num();
        for u in 0..(self.m + self.n) {
            if self.flow[arcs + u] > FEAS_EPS {
                return Err(Error::NumericalFailure("residual flow on artificial arcs"));
            }
        }
        Ok(())
    }
}

pub(super) fn solve(cost: &CostMatrix, wx: &[f64], wy: &[f64]) -> Result<TransportPlan> {
    let mut s = Simplex::new(cost, wx, wy);
    s.run()?;

    let arcs = s.arc_num();
    let mut plan = Vec::with_capacity(arcs);
    let mut value = 0.0;
    for e in 0..arcs {
        let f = s.flow[e].max(0.0);
        plan.push(f);
        value += f * cost.entries()[e];
    }
    Ok(TransportPlan { plan, rows: cost.rows(), cols: cost.cols(), value: value.max(0.0) })
}
