//! Reference interpreter for the two reader-writer algorithms.
//!
//! Written from the algorithm listings alone: it has its own state type,
//! its own step semantics and no dependency on the library. Reachable
//! states are collected into a `BTreeSet` by plain structural comparison,
//! and [`path_tree`] walks every interleaving without merging anything.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Standard,
    Fair,
    FairNoMutex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Instance {
    pub algo: Algo,
    pub readers: usize,
    pub writers: usize,
    pub rounds: u32,
    pub fifo: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sem {
    Mutex,
    Access,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Wait(Sem),
    Signal(Sem),
    Bump(i64),
    /// Fall through when `num == k`, otherwise jump over the next line.
    IfNum(i64),
    BeginRead,
    EndRead,
    BeginWrite,
    EndWrite,
    Idle,
    Repeat,
}

fn reader_line(algo: Algo, line: usize) -> Option<Op> {
    use Op::*;
    use Sem::*;
    let listing: &[Op] = match algo {
        Algo::Standard => &[
            Wait(Mutex),
            Bump(1),
            IfNum(1),
            Wait(Access),
            Signal(Mutex),
            BeginRead,
            Idle,
            EndRead,
            Wait(Mutex),
            Bump(-1),
            IfNum(0),
            Signal(Access),
            Signal(Mutex),
            Idle,
            Repeat,
        ],
        Algo::Fair | Algo::FairNoMutex => &[Wait(Access), BeginRead, Idle, EndRead, Signal(Access), Idle, Repeat],
    };
    listing.get(line).copied()
}

fn writer_line(algo: Algo, m: usize, line: usize) -> Option<Op> {
    use Op::*;
    use Sem::*;
    let mut listing = Vec::new();
    match algo {
        Algo::Standard => listing.extend([Wait(Access), BeginWrite, Idle, EndWrite, Signal(Access)]),
        Algo::Fair | Algo::FairNoMutex => {
            let guarded = algo == Algo::Fair;
            if guarded {
                listing.push(Wait(Mutex));
            }
            for _ in 0..m {
                listing.push(Wait(Access));
            }
            listing.extend([BeginWrite, Idle, EndWrite]);
            for _ in 0..m {
                listing.push(Signal(Access));
            }
            if guarded {
                listing.push(Signal(Mutex));
            }
        }
    }
    listing.extend([Idle, Repeat]);
    listing.get(line).copied()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct World {
    pub line: Vec<usize>,
    pub left: Vec<u32>,
    pub done: Vec<bool>,
    pub mutex: u32,
    pub access: u32,
    pub mutex_queue: Vec<usize>,
    pub access_queue: Vec<usize>,
    pub num: i64,
}

impl Instance {
    pub fn procs(&self) -> usize {
        self.readers + self.writers
    }

    fn is_reader(&self, p: usize) -> bool {
        p < self.readers
    }

    fn op(&self, p: usize, line: usize) -> Option<Op> {
        if self.is_reader(p) {
            reader_line(self.algo, line)
        } else {
            writer_line(self.algo, self.readers, line)
        }
    }

    pub fn start(&self) -> World {
        let k = self.procs();
        World {
            line: vec![0; k],
            left: vec![self.rounds; k],
            done: vec![false; k],
            mutex: 1,
            access: if self.algo == Algo::Standard { 1 } else { self.readers as u32 },
            mutex_queue: Vec::new(),
            access_queue: Vec::new(),
            num: 0,
        }
    }

    /// Whether `p` is between its begin and end markers in `w`.
    fn inside(&self, w: &World, p: usize) -> Option<bool> {
        let mut state = None;
        for line in 0..w.line[p] {
            match self.op(p, line) {
                Some(Op::BeginRead) => state = Some(true),
                Some(Op::BeginWrite) => state = Some(false),
                Some(Op::EndRead | Op::EndWrite) => state = None,
                _ => {}
            }
        }
        state
    }

    pub fn active_readers(&self, w: &World) -> usize {
        (0..self.procs()).filter(|&p| !w.done[p] && self.inside(w, p) == Some(true)).count()
    }

    pub fn active_writers(&self, w: &World) -> usize {
        (0..self.procs()).filter(|&p| !w.done[p] && self.inside(w, p) == Some(false)).count()
    }

    pub fn exclusion_broken(&self, w: &World) -> bool {
        let writers = self.active_writers(w);
        writers > 1 || (writers == 1 && self.active_readers(w) > 0)
    }

    /// Every successor of `w`, one per process that can move, by process.
    pub fn successors(&self, w: &World) -> Vec<(usize, World)> {
        let mut out = Vec::new();
        for p in 0..self.procs() {
            if let Some(next) = self.advance(w, p) {
                out.push((p, next));
            }
        }
        out
    }

    fn advance(&self, w: &World, p: usize) -> Option<World> {
        if w.done[p] {
            return None;
        }
        let mut n = w.clone();
        let Some(op) = self.op(p, w.line[p]) else {
            // Past the last line: the halt step.
            n.done[p] = true;
            return Some(n);
        };
        match op {
            Op::Wait(s) => {
                let fifo = self.fifo;
                let (count, queue) = match s {
                    Sem::Mutex => (&mut n.mutex, &mut n.mutex_queue),
                    Sem::Access => (&mut n.access, &mut n.access_queue),
                };
                let queued = queue.contains(&p);
                if queued {
                    if fifo || *count == 0 {
                        return None;
                    }
                    queue.retain(|&q| q != p);
                    *count -= 1;
                    n.line[p] += 1;
                } else if *count > 0 {
                    *count -= 1;
                    n.line[p] += 1;
                } else {
                    queue.push(p);
                }
            }
            Op::Signal(s) => {
                let (count, queue) = match s {
                    Sem::Mutex => (&mut n.mutex, &mut n.mutex_queue),
                    Sem::Access => (&mut n.access, &mut n.access_queue),
                };
                if self.fifo && !queue.is_empty() {
                    let head = queue.remove(0);
                    n.line[head] += 1;
                } else {
                    *count += 1;
                }
                n.line[p] += 1;
            }
            Op::Bump(d) => {
                n.num += d;
                n.line[p] += 1;
            }
            Op::IfNum(k) => n.line[p] += if w.num == k { 1 } else { 2 },
            Op::Repeat => {
                n.left[p] -= 1;
                n.line[p] = if n.left[p] > 0 { 0 } else { w.line[p] + 1 };
            }
            Op::BeginRead | Op::EndRead | Op::BeginWrite | Op::EndWrite | Op::Idle => n.line[p] += 1,
        }
        Some(n)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub states: u64,
    pub transitions: u64,
    pub exclusion_states: u64,
    pub deadlocks: u64,
    pub all_terminate: bool,
    pub max_active_readers: usize,
}

/// Breadth-first fixpoint over the reachable worlds.
pub fn reachable(inst: &Instance) -> Summary {
    let start = inst.start();
    let mut index: BTreeMap<World, usize> = BTreeMap::new();
    let mut worlds = vec![start.clone()];
    index.insert(start, 0);
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut s = Summary::default();
    while let Some(u) = queue.pop_front() {
        let w = worlds[u].clone();
        if inst.exclusion_broken(&w) {
            s.exclusion_states += 1;
        }
        s.max_active_readers = s.max_active_readers.max(inst.active_readers(&w));
        let succ = inst.successors(&w);
        if succ.is_empty() && w.done.iter().any(|d| !d) {
            s.deadlocks += 1;
        }
        let mut out = Vec::new();
        for (_, next) in succ {
            s.transitions += 1;
            let v = match index.get(&next) {
                Some(&v) => v,
                None => {
                    let v = worlds.len();
                    index.insert(next.clone(), v);
                    worlds.push(next);
                    queue.push_back(v);
                    v
                }
            };
            out.push(v);
        }
        while edges.len() <= u {
            edges.push(Vec::new());
        }
        edges[u] = out;
    }
    edges.resize(worlds.len(), Vec::new());
    s.states = worlds.len() as u64;
    s.all_terminate = s.deadlocks == 0 && acyclic(&edges);
    s
}

fn acyclic(edges: &[Vec<usize>]) -> bool {
    let mut indegree = vec![0usize; edges.len()];
    for out in edges {
        for &v in out {
            indegree[v] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..edges.len()).filter(|&v| indegree[v] == 0).collect();
    let mut removed = 0;
    while let Some(u) = ready.pop() {
        removed += 1;
        for &v in &edges[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(v);
            }
        }
    }
    removed == edges.len()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathTree {
    /// Maximal interleavings.
    pub paths: u64,
    /// Nodes of the unfolded tree, root included.
    pub nodes: u64,
    pub exclusion_nodes: u64,
    /// Maximal paths that stop with some process not halted.
    pub stuck_paths: u64,
    /// Distinct worlds met along the way, for cross-checking the fixpoint.
    pub distinct: u64,
}

/// Unfolds every interleaving. Exponential; only for tiny instances. Gives
/// up (returns `None`) after `limit` tree nodes.
pub fn path_tree(inst: &Instance, limit: u64) -> Option<PathTree> {
    let mut t = PathTree::default();
    let mut seen = BTreeSet::new();
    let mut stack = vec![inst.start()];
    while let Some(w) = stack.pop() {
        t.nodes += 1;
        if t.nodes > limit {
            return None;
        }
        if inst.exclusion_broken(&w) {
            t.exclusion_nodes += 1;
        }
        let succ = inst.successors(&w);
        if succ.is_empty() {
            t.paths += 1;
            if w.done.iter().any(|d| !d) {
                t.stuck_paths += 1;
            }
        }
        seen.insert(w);
        stack.extend(succ.into_iter().map(|(_, n)| n));
    }
    t.distinct = seen.len() as u64;
    Some(t)
}
