//! Jumping-edge transcripts and their recursive refinement through an
//! M-way store of precomputed answers.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, VertexId};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::plan::{RandomnessPlan, TaskId, FRESH_SLOT_BIT};

use super::context::WalkContext;
use super::end_table;
use super::transcript::{CallKey, Step, StepKind};
use super::{CacheMode, JumpStrategy};

/// Replacement attempts before a splice is declared unresolvable.
const MAX_REPLACEMENTS: u32 = 1000;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnravelStats {
    /// Jumping-edge calls evaluated.
    pub calls: u64,
    /// Walk steps drawn across those calls.
    pub walk_steps: u64,
    /// Stored answers spliced into a parent transcript.
    pub splices: u64,
    /// Stored answers served from the per-sample store instead of recomputed.
    pub store_hits: u64,
    /// Splices redirected to a fresh slot because the picked answer reused a call.
    pub replacements: u64,
}

#[derive(Debug)]
pub(crate) struct Answer {
    pub steps: Vec<Step>,
    /// Every call whose randomness went into this answer.
    pub deps: Vec<u32>,
    /// Some call appears twice among the deps.
    pub internal_dup: bool,
    pub truncated: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct StoreKey {
    node: NodeId,
    start: VertexId,
    exit: EdgeId,
    level: u32,
    slot: u64,
}

/// Identifies a refinement pass; picks are drawn per (pass, position).
#[derive(Clone, Copy)]
struct PassKey {
    node: NodeId,
    start: VertexId,
    exit: Option<EdgeId>,
    level: u32,
    slot: u64,
}

pub(crate) fn level_cap(h: &Hierarchy, node: NodeId) -> u32 {
    h.node(node).height.max(1).next_power_of_two()
}

pub(crate) struct Unraveler<'a> {
    ctx: &'a WalkContext,
    plan: RandomnessPlan,
    sample: u64,
    round: u32,
    budget: usize,
    cache: u64,
    mode: CacheMode,
    strategy: JumpStrategy,
    calls: Vec<CallKey>,
    call_ids: HashMap<CallKey, u32>,
    store: HashMap<StoreKey, Rc<Answer>>,
    pub stats: UnravelStats,
}

impl<'a> Unraveler<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ctx: &'a WalkContext,
        plan: RandomnessPlan,
        sample: u64,
        round: u32,
        budget: usize,
        cache: u64,
        mode: CacheMode,
        strategy: JumpStrategy,
    ) -> Self {
        Self {
            ctx,
            plan,
            sample,
            round,
            budget,
            cache,
            mode,
            strategy,
            calls: Vec::new(),
            call_ids: HashMap::new(),
            store: HashMap::new(),
            stats: UnravelStats::default(),
        }
    }

    pub fn calls(&self) -> &[CallKey] {
        &self.calls
    }

    fn intern(&mut self, key: CallKey) -> u32 {
        if let Some(&id) = self.call_ids.get(&key) {
            return id;
        }
        let id = self.calls.len() as u32;
        self.calls.push(key);
        self.call_ids.insert(key, id);
        id
    }

    /// Child-exit edges of a walk in `node` from `start`, conditioned on
    /// leaving through `exit`, cut after `budget` edges or at `horizon`.
    pub fn jumping_edges(
        &mut self,
        node: NodeId,
        start: VertexId,
        exit: Option<EdgeId>,
        slot: u64,
        horizon: usize,
    ) -> Result<Answer> {
        let ctx = self.ctx;
        let g = ctx.graph();
        if ctx.hierarchy().node(node).is_leaf() {
            // A single vertex leaves by its conditioning edge at once.
            if let Some(e) = exit {
                if g.edge(e).src != start || g.edge(e).dst == start {
                    return Err(Error::InvalidArgument(format!("edge {e} does not leave vertex {start}")));
                }
            }
            let call = self.intern(CallKey { node, start, exit, slot });
            self.stats.calls += 1;
            let steps = vec![Step { node, edge: exit, kind: StepKind::Leaf, call }];
            return Ok(Answer { steps, deps: vec![call], internal_dup: false, truncated: false });
        }
        let h = ctx.hierarchy();
        let table = ctx.exit_table(node, exit)?;
        let call = self.intern(CallKey { node, start, exit, slot });
        let task = TaskId::Jump { sample: self.sample, round: self.round, node, start, exit, slot };
        let limit = horizon.min(self.budget);
        let edges = match self.strategy {
            JumpStrategy::Sequential => {
                let mut stream = self.plan.stream(&task);
                let mut edges = Vec::new();
                let mut u = start;
                for t in 0..limit {
                    let f = table.next_edge(u, &stream.variate(t as u64))?;
                    edges.push(f);
                    u = g.edge(f).dst;
                    if Some(f) == exit || !h.contains(node, u) {
                        break;
                    }
                }
                edges
            }
            JumpStrategy::Doubling => {
                end_table::walk_by_doubling(g, &table, &self.plan, &task, start, exit, limit)?
            }
        };
        self.stats.calls += 1;
        self.stats.walk_steps += edges.len() as u64;
        let ended = edges.last().is_some_and(|&f| !h.contains(node, g.edge(f).dst));
        let mut steps = Vec::with_capacity(edges.len() + 1);
        let mut u = start;
        for &f in &edges {
            let child = ctx.child_of(node, u);
            steps.push(Step { node: child, edge: Some(f), kind: ctx.kind_of(child), call });
            u = g.edge(f).dst;
        }
        let truncated = !ended && limit < self.budget;
        if truncated {
            let child = ctx.child_of(node, u);
            steps.push(Step { node: child, edge: None, kind: ctx.kind_of(child), call });
        } else if !ended {
            steps.push(Step { node, edge: exit, kind: StepKind::Collapsed, call });
        }
        Ok(Answer { steps, deps: vec![call], internal_dup: false, truncated })
    }

    /// The stored answer for `(node, start, exit, level, slot)`: the walk in
    /// `node` refined through `level` levels of descendants.
    fn stored(
        &mut self,
        node: NodeId,
        start: VertexId,
        exit: EdgeId,
        level: u32,
        slot: u64,
    ) -> Result<Rc<Answer>> {
        let level = level.min(level_cap(self.ctx.hierarchy(), node)).max(1);
        let key = StoreKey { node, start, exit, level, slot };
        if let Some(a) = self.store.get(&key) {
            self.stats.store_hits += 1;
            return Ok(a.clone());
        }
        let answer = if level == 1 {
            self.jumping_edges(node, start, Some(exit), slot, usize::MAX)?
        } else {
            let base = self.stored(node, start, exit, level / 2, slot)?;
            let pass = PassKey { node, start, exit: Some(exit), level, slot };
            let mut a = self.refine(pass, &base, level / 2, None)?;
            let mut sorted = a.deps.clone();
            sorted.sort_unstable();
            sorted.dedup();
            a.internal_dup |= sorted.len() != a.deps.len();
            a
        };
        let answer = Rc::new(answer);
        self.store.insert(key, answer.clone());
        Ok(answer)
    }

    /// Walk in `node` from `start` refined to `depth` levels (rounded up to a
    /// power of two); repeated use of a call is replaced by fresh slots.
    pub fn unravel(
        &mut self,
        node: NodeId,
        start: VertexId,
        exit: Option<EdgeId>,
        depth: u32,
        horizon: usize,
    ) -> Result<Answer> {
        let cap = level_cap(self.ctx.hierarchy(), node)
            .min(depth.max(1).checked_next_power_of_two().unwrap_or(u32::MAX));
        let mut current = self.jumping_edges(node, start, exit, 0, horizon)?;
        let mut used: HashSet<u32> = current.deps.iter().copied().collect();
        let mut level = 1;
        while level < cap {
            let pass = PassKey { node, start, exit, level: 2 * level, slot: 0 };
            current = self.refine(pass, &current, level, Some(&mut used))?;
            level *= 2;
        }
        Ok(current)
    }

    /// One splice-and-trim pass over `base`: every open element not already
    /// over budget is replaced by a stored answer `half` levels deep, and the
    /// result is trimmed to at most `budget` jumping edges per node.
    fn refine(
        &mut self,
        pass: PassKey,
        base: &Answer,
        half: u32,
        mut used: Option<&mut HashSet<u32>>,
    ) -> Result<Answer> {
        let ctx = self.ctx;
        let h = ctx.hierarchy();
        let g = ctx.graph();
        let mut trim = Trim::new(ctx, pass.node, self.budget as u64);
        let mut deps = base.deps.clone();
        let mut internal_dup = base.internal_dup;
        let mut entry = pass.start;
        for (position, step) in base.steps.iter().enumerate() {
            let splice = match (step.kind, step.edge) {
                (StepKind::Open, Some(e)) if trim.passes_through(step.node) => Some(e),
                _ => None,
            };
            match splice {
                Some(e) => {
                    let child =
                        self.pick(pass, position as u64, step.node, entry, e, half, used.as_deref_mut())?;
                    self.stats.splices += 1;
                    deps.extend_from_slice(&child.deps);
                    internal_dup |= child.internal_dup;
                    for s in &child.steps {
                        trim.feed(*s);
                    }
                }
                None => trim.feed(*step),
            }
            if let Some(e) = step.edge {
                entry = g.edge(e).dst;
            }
        }
        debug_assert!(h.contains(pass.node, pass.start));
        Ok(Answer { steps: trim.out, deps, internal_dup, truncated: base.truncated })
    }

    /// Chooses the stored answer for one splice position.
    #[allow(clippy::too_many_arguments)]
    fn pick(
        &mut self,
        pass: PassKey,
        position: u64,
        node: NodeId,
        entry: VertexId,
        exit: EdgeId,
        half: u32,
        used: Option<&mut HashSet<u32>>,
    ) -> Result<Rc<Answer>> {
        let (sample, round) = (self.sample, self.round);
        let fresh = move |attempt: u32| TaskId::Fresh {
            sample,
            round,
            node: pass.node,
            start: pass.start,
            exit: pass.exit,
            level: pass.level,
            slot: pass.slot,
            position,
            attempt,
        };
        // Inside a fresh answer every sub-answer is fresh too, so a
        // replacement shares nothing with the cached store.
        let cached = self.mode == CacheMode::Cached && pass.slot & FRESH_SLOT_BIT == 0;
        let slot = match cached {
            true => self.plan.pick(
                &TaskId::Pick {
                    sample: self.sample,
                    round: self.round,
                    node: pass.node,
                    start: pass.start,
                    exit: pass.exit,
                    level: pass.level,
                    slot: pass.slot,
                    position,
                },
                self.cache,
            ),
            false => self.plan.fresh_slot(&fresh(0)),
        };
        let mut answer = self.stored(node, entry, exit, half, slot)?;
        let Some(used) = used else {
            return Ok(answer);
        };
        let mut attempt = 0;
        while answer.internal_dup || answer.deps.iter().any(|d| used.contains(d)) {
            attempt += 1;
            if attempt > MAX_REPLACEMENTS {
                return Err(Error::InvalidArgument(
                    "answer store too small: replacements keep colliding".into(),
                ));
            }
            self.stats.replacements += 1;
            let slot = self.plan.fresh_slot(&fresh(attempt));
            answer = self.stored(node, entry, exit, half, slot)?;
        }
        used.extend(answer.deps.iter().copied());
        Ok(answer)
    }
}

/// Streaming budget trim within the transcript of one context node.
struct Trim<'c> {
    ctx: &'c WalkContext,
    context: NodeId,
    budget: u64,
    counts: Vec<u64>,
    collapsing: Option<NodeId>,
    out: Vec<Step>,
}

impl<'c> Trim<'c> {
    fn new(ctx: &'c WalkContext, context: NodeId, budget: u64) -> Self {
        Self {
            ctx,
            context,
            budget,
            counts: vec![0; ctx.hierarchy().len()],
            collapsing: None,
            out: Vec::new(),
        }
    }

    /// Highest node from `node` up to the context that has used its budget.
    fn saturated(&self, node: NodeId) -> Option<NodeId> {
        let mut top = None;
        for x in self.ctx.hierarchy().ancestors(node) {
            if self.counts[x] >= self.budget {
                top = Some(x);
            }
            if x == self.context {
                break;
            }
        }
        top
    }

    /// Whether an element in `node` would be emitted as is.
    fn passes_through(&self, node: NodeId) -> bool {
        self.collapsing.is_none() && self.saturated(node).is_none()
    }

    fn leaves(&self, x: NodeId, edge: Option<EdgeId>) -> bool {
        match edge {
            None => true,
            Some(e) => !self.ctx.hierarchy().contains(x, self.ctx.graph().edge(e).dst),
        }
    }

    fn count(&mut self, edge: Option<EdgeId>) {
        if let Some(e) = edge {
            let h = self.ctx.hierarchy();
            if h.contains(self.context, self.ctx.graph().edge(e).dst) {
                self.counts[h.jumping_node(e)] += 1;
            }
        }
    }

    fn feed(&mut self, step: Step) {
        let target = match self.collapsing {
            Some(x) => Some(x),
            None => self.saturated(step.node),
        };
        match target {
            None => {
                self.out.push(step);
                self.count(step.edge);
            }
            Some(x) => {
                if self.leaves(x, step.edge) {
                    self.out.push(Step {
                        node: x,
                        edge: step.edge,
                        kind: StepKind::Collapsed,
                        call: step.call,
                    });
                    self.collapsing = None;
                    self.count(step.edge);
                } else {
                    self.collapsing = Some(x);
                }
            }
        }
    }
}
