//! Adversarial schedules that keep a writer queued on `access` forever.
//!
//! With loops unbounded the reachable state space is still finite, so an
//! infinite starving execution exists exactly when some strongly connected
//! set of states, all with the writer queued on `access`, contains a reader
//! `ENTER_READ` move. The search builds the whole graph, restricts it to
//! writer-blocked states, and looks for such a component. The returned
//! schedule is a shortest prefix into the component followed by a closed
//! walk through the reader entry, repeated up to the horizon.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::bypass::bypass_count;
use super::state::SystemState;
use super::store::StateStore;
use super::trace::ExecutionTrace;
use super::{enabled_moves, step, ExploreError, DEFAULT_STATE_BUDGET};
use crate::program::{build_system, ConfigError, Role, StepLabel, System, SystemConfig};
use crate::sem::{Pid, SemId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarvationSchedule {
    pub writer: Pid,
    pub trace: ExecutionTrace,
    /// Steps before the writer-blocked cycle is entered.
    pub prefix_len: usize,
    pub cycle_len: usize,
    /// Reader entries during the writer's final, never-closing window.
    pub bypass: u64,
}

const UNSEEN: u32 = u32::MAX;

struct Graph {
    states: Vec<SystemState>,
    edges: Vec<Vec<(Pid, u32)>>,
    depth: Vec<u32>,
    parent: Vec<(u32, Pid)>,
}

fn build_graph(system: &System, budget: usize) -> Result<Graph, ExploreError> {
    let mut store = StateStore::new();
    let mut g = Graph { states: Vec::new(), edges: Vec::new(), depth: Vec::new(), parent: Vec::new() };
    store.insert(system.initial());
    g.states.push(system.initial().clone());
    g.depth.push(0);
    g.parent.push((UNSEEN, Pid(0)));
    let mut queue = VecDeque::from([0u32]);
    while let Some(u) = queue.pop_front() {
        let state = g.states[u as usize].clone();
        let mut out = Vec::new();
        for pid in enabled_moves(system, &state) {
            let succ = step(system, &state, pid)?;
            let (v, fresh) = store.insert(&succ);
            if fresh {
                if store.len() > budget {
                    return Err(ExploreError::BudgetExceeded { budget });
                }
                g.states.push(succ);
                g.depth.push(g.depth[u as usize] + 1);
                g.parent.push((u, pid));
                queue.push_back(v);
            }
            out.push((pid, v));
        }
        g.edges.push(out);
    }
    Ok(g)
}

impl Graph {
    fn path_from_root(&self, mut idx: u32) -> Vec<Pid> {
        let mut pids = Vec::new();
        while let Some(&(parent, via)) = self.parent.get(idx as usize) {
            if parent == UNSEEN {
                break;
            }
            pids.push(via);
            idx = parent;
        }
        pids.reverse();
        pids
    }

    /// Shortest path from `from` to `to` using only states in `inside`.
    fn path_within(&self, from: u32, to: u32, inside: &[bool]) -> Option<Vec<Pid>> {
        let mut prev = vec![(UNSEEN, Pid(0)); self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[from as usize] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut pids = Vec::new();
                let mut cur = to;
                while cur != from {
                    let (p, via) = prev[cur as usize];
                    pids.push(via);
                    cur = p;
                }
                pids.reverse();
                return Some(pids);
            }
            for &(pid, v) in &self.edges[u as usize] {
                if inside[v as usize] && !seen[v as usize] {
                    seen[v as usize] = true;
                    prev[v as usize] = (u, pid);
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

fn writer_blocked_on_access(system: &System, state: &SystemState, writer: Pid) -> bool {
    let pc = state.proc(writer).pc as usize;
    system.program(writer).step_at(pc) == StepLabel::P(SemId::ACCESS) && state.is_blocked(system, writer)
}

/// Searches for a schedule of at least `horizon` steps in which a writer
/// stays queued on `access` while readers keep entering.
pub fn find_starvation_schedule(
    config: SystemConfig,
    horizon: usize,
) -> Result<Option<StarvationSchedule>, ExploreError> {
    if config.n == 0 {
        return Err(ConfigError::new("n", "starvation search needs at least one writer").into());
    }
    if horizon == 0 {
        return Err(ConfigError::new("horizon", "must be at least 1").into());
    }
    let system = build_system(config)?.unbounded();
    starvation_in(&system, horizon, DEFAULT_STATE_BUDGET)
}

fn starvation_in(system: &System, horizon: usize, budget: usize) -> Result<Option<StarvationSchedule>, ExploreError> {
    let graph = build_graph(system, budget)?;
    for writer in system.writers() {
        let region: Vec<bool> = graph.states.iter().map(|s| writer_blocked_on_access(system, s, writer)).collect();
        let mut sub: DiGraph<u32, ()> = DiGraph::new();
        let mut node_of = vec![NodeIndex::end(); graph.states.len()];
        for (i, _) in region.iter().enumerate().filter(|(_, &r)| r) {
            node_of[i] = sub.add_node(i as u32);
        }
        for (u, _) in region.iter().enumerate().filter(|(_, &r)| r) {
            for &(_, v) in &graph.edges[u] {
                if region[v as usize] {
                    sub.add_edge(node_of[u], node_of[v as usize], ());
                }
            }
        }

        let mut best: Option<(u32, u32, Pid, u32, Vec<bool>)> = None;
        for component in tarjan_scc(&sub) {
            let mut inside = vec![false; graph.states.len()];
            for &node in &component {
                inside[sub[node] as usize] = true;
            }
            let min_idx = component.iter().map(|&n| sub[n]).min().expect("nonempty component");
            if best.as_ref().is_some_and(|b| b.0 <= min_idx) {
                continue;
            }
            let mut entry_edge: Option<(u32, Pid, u32)> = None;
            let mut members: Vec<u32> = component.iter().map(|&n| sub[n]).collect();
            members.sort_unstable();
            'find: for &u in &members {
                let state = &graph.states[u as usize];
                for &(pid, v) in &graph.edges[u as usize] {
                    let program = system.program(pid);
                    if inside[v as usize]
                        && program.role() == Role::Reader
                        && program.step_at(state.proc(pid).pc as usize) == StepLabel::EnterRead
                    {
                        entry_edge = Some((u, pid, v));
                        break 'find;
                    }
                }
            }
            if let Some((u, pid, v)) = entry_edge {
                best = Some((min_idx, u, pid, v, inside));
            }
        }
        let Some((_, u, pid, v, inside)) = best else {
            continue;
        };

        let anchor = (0..graph.states.len() as u32)
            .filter(|&i| inside[i as usize])
            .min_by_key(|&i| (graph.depth[i as usize], i))
            .expect("component has an anchor");
        let prefix = graph.path_from_root(anchor);
        let mut cycle = graph.path_within(anchor, u, &inside).expect("strongly connected");
        cycle.push(pid);
        cycle.extend(graph.path_within(v, anchor, &inside).expect("strongly connected"));

        let mut schedule = prefix.clone();
        for (pushed, &p) in cycle.iter().cycle().enumerate() {
            if schedule.len() >= horizon && pushed >= cycle.len() {
                break;
            }
            schedule.push(p);
        }
        let (trace, _) = ExecutionTrace::from_schedule(system, &schedule)
            .map_err(|e| ExploreError::Invariant(format!("starvation schedule does not replay: {e}")))?;
        let bypass = bypass_count(&trace, writer).last().copied().unwrap_or(0);
        return Ok(Some(StarvationSchedule {
            writer,
            trace,
            prefix_len: prefix.len(),
            cycle_len: cycle.len(),
            bypass,
        }));
    }
    Ok(None)
}
