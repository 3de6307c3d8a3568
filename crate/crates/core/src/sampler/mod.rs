//! Arborescence sampling by hierarchical walk shortcutting.
//!
//! For a root `r`, the graph is reduced to an Eulerian graph with the same
//! `r`-rooted arborescence law, and the walk runs on its edge flip. The walk
//! is produced coarse-to-fine: a transcript of the edges jumping between the
//! children of the top cluster, refined level by level by splicing in
//! transcripts of the children drawn from a per-sample store of `M` answers
//! per (cluster, entry vertex, exit edge). The first-visit edges of the refined
//! walk, flipped back, form the arborescence.

mod budget;
mod context;
mod end_table;
mod sequential;
mod transcript;
mod unravel;

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Arborescence, EdgeId, VertexId, WeightedDigraph};
use crate::hierarchy::NodeId;
use crate::plan::{RandomnessPlan, TaskId};
use crate::reduction::root_law;
use crate::walk::StationaryDistribution;

pub use budget::{choose_budget, default_cache, jumps_before_cover, DEFAULT_BUDGET_FACTOR};
pub use context::{RootContext, WalkContext};
pub use end_table::{EndTable, WalkState};
pub use sequential::{sequential_aldous_broder, SequentialOutcome, SequentialSampler};
pub use transcript::{extract_first_visits, CallKey, Step, StepKind, Transcript};
pub use unravel::UnravelStats;

use transcript::Coverage;
use unravel::Unraveler;

/// How splice positions obtain their stored answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CacheMode {
    /// Uniform picks among `M` slots per key, with reuse replaced by fresh slots.
    #[default]
    Cached,
    /// A fresh slot for every splice; nothing is ever shared.
    Fresh,
}

/// How the edges of a single jumping-edge call are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpStrategy {
    #[default]
    Sequential,
    /// Pointer doubling over end tables; identical output.
    Doubling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    /// Sample arborescences rooted here instead of drawing the root.
    pub root: Option<VertexId>,
    /// Fixed first-round budget; otherwise `c n^2 m^2` of the walk graph.
    pub budget: Option<u64>,
    pub budget_factor: u64,
    /// Store size; defaults to `max(64, 4L)` for the round's budget.
    pub cache: Option<u64>,
    pub mode: CacheMode,
    pub strategy: JumpStrategy,
    /// Budget doublings tried before giving up on coverage.
    pub max_rounds: u32,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            root: None,
            budget: None,
            budget_factor: DEFAULT_BUDGET_FACTOR,
            cache: None,
            mode: CacheMode::Cached,
            strategy: JumpStrategy::Sequential,
            max_rounds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutcome {
    pub arborescence: Arborescence,
    /// Rounds run, including the successful one.
    pub rounds: u32,
    /// Budget of the successful round.
    pub budget: u64,
    /// Elements of the final refined transcript.
    pub transcript_len: usize,
    /// Extra visits served by an already used call in the final transcript.
    pub duplicate_uses: usize,
    pub stats: UnravelStats,
}

/// Draws weight-proportional arborescences of a fixed graph.
pub struct HierarchicalSampler {
    g: WeightedDigraph,
    opts: SamplerOptions,
    law: Option<StationaryDistribution>,
    contexts: Vec<OnceLock<Result<Arc<RootContext>>>>,
}

impl HierarchicalSampler {
    pub fn new(g: &WeightedDigraph, opts: SamplerOptions) -> Result<Self> {
        let law = match opts.root {
            Some(r) => {
                if r >= g.n() {
                    return Err(Error::InvalidArgument(format!("root {r} outside 0..{}", g.n())));
                }
                crate::reduction::patch(g, r)?;
                None
            }
            None => Some(root_law(g)?),
        };
        if opts.budget == Some(0) || opts.cache == Some(0) || opts.budget_factor == 0 {
            return Err(Error::InvalidArgument("budget and cache must be positive".into()));
        }
        Ok(Self { g: g.clone(), opts, law, contexts: (0..g.n()).map(|_| OnceLock::new()).collect() })
    }

    pub fn graph(&self) -> &WeightedDigraph {
        &self.g
    }

    pub fn options(&self) -> &SamplerOptions {
        &self.opts
    }

    pub fn context(&self, r: VertexId) -> Result<Arc<RootContext>> {
        self.contexts[r].get_or_init(|| RootContext::new(&self.g, r).map(Arc::new)).clone()
    }

    pub fn root_for(&self, seed: u64, sample: u64) -> VertexId {
        match (self.opts.root, &self.law) {
            (Some(r), _) => r,
            (None, Some(law)) => {
                law.sample(&RandomnessPlan::new(seed).stream(&TaskId::Root { sample }).variate(0))
            }
            (None, None) => unreachable!("a root law exists whenever no root is fixed"),
        }
    }

    /// Base budget for walks toward `r`.
    pub fn budget_for(&self, ctx: &RootContext) -> u64 {
        let g = ctx.walk.graph();
        self.opts.budget.unwrap_or_else(|| choose_budget(g.n(), g.m(), self.opts.budget_factor))
    }

    pub fn sample(&self, seed: u64, sample: u64) -> Result<SampleOutcome> {
        let r = self.root_for(seed, sample);
        if self.g.n() == 1 {
            return Ok(SampleOutcome {
                arborescence: Arborescence { root: r, parent_edge: vec![None] },
                rounds: 1,
                budget: 0,
                transcript_len: 0,
                duplicate_uses: 0,
                stats: UnravelStats::default(),
            });
        }
        let ctx = self.context(r)?;
        let plan = RandomnessPlan::new(seed);
        let walk = &ctx.walk;
        let h = walk.hierarchy();
        let n = self.g.n();
        let base = self.budget_for(&ctx);
        for round in 0..self.opts.max_rounds {
            let budget = base.saturating_mul(1u64 << round.min(63));
            let cache = self.opts.cache.unwrap_or_else(|| default_cache(budget));
            let limit = usize::try_from(budget).unwrap_or(usize::MAX);
            let mut un =
                Unraveler::new(walk, plan, sample, round, limit, cache, self.opts.mode, self.opts.strategy);
            let mut horizon = (4 * n).min(limit);
            loop {
                let answer = un.unravel(h.root(), r, None, u32::MAX, horizon)?;
                match transcript::cover(walk.graph(), h, &answer.steps, r, answer.truncated) {
                    Coverage::Covered(first) => {
                        let parent_edge = self.map_back(&ctx, &first)?;
                        let duplicate_uses =
                            transcript::duplicate_call_uses(walk.graph(), h, un.calls(), &answer.steps, r);
                        return Ok(SampleOutcome {
                            arborescence: Arborescence { root: r, parent_edge },
                            rounds: round + 1,
                            budget,
                            transcript_len: answer.steps.len(),
                            duplicate_uses,
                            stats: un.stats.clone(),
                        });
                    }
                    Coverage::NeedHorizon if horizon < limit => {
                        horizon = horizon.saturating_mul(4).min(limit);
                    }
                    _ => break,
                }
            }
        }
        Err(Error::CoverageFailure { rounds: self.opts.max_rounds })
    }

    fn map_back(&self, ctx: &RootContext, first: &[Option<EdgeId>]) -> Result<Vec<Option<EdgeId>>> {
        let m = self.g.m();
        first
            .iter()
            .map(|e| match *e {
                Some(e) if e >= m => Err(Error::InvalidArgument(format!(
                    "walk entered a vertex through added edge {e} (root {})",
                    ctx.reduction.root
                ))),
                other => Ok(other),
            })
            .collect()
    }

    /// Samples `0..count` in parallel; the result is independent of scheduling.
    pub fn sample_many(&self, seed: u64, count: u64) -> Result<Vec<SampleOutcome>> {
        (0..count).into_par_iter().map(|i| self.sample(seed, i)).collect()
    }
}

/// Jumping-edge transcript of one call, as the sampler would draw it for
/// sample 0, round 0.
#[allow(clippy::too_many_arguments)]
pub fn jumping_edges(
    ctx: &WalkContext,
    node: NodeId,
    start: VertexId,
    exit: Option<EdgeId>,
    budget: usize,
    plan: &RandomnessPlan,
    slot: u64,
    strategy: JumpStrategy,
) -> Result<Transcript> {
    let mut un = Unraveler::new(ctx, *plan, 0, 0, budget, 1, CacheMode::Cached, strategy);
    let a = un.jumping_edges(node, start, exit, slot, usize::MAX)?;
    Ok(Transcript { node, start, exit, steps: a.steps, truncated: a.truncated })
}

/// Walk in `node` refined through `depth` levels of descendants (rounded up to
/// a power of two), with its own answer store.
#[allow(clippy::too_many_arguments)]
pub fn all_edges(
    ctx: &WalkContext,
    node: NodeId,
    start: VertexId,
    exit: Option<EdgeId>,
    budget: usize,
    depth: u32,
    plan: &RandomnessPlan,
    cache: u64,
    mode: CacheMode,
) -> Result<Transcript> {
    let mut un = Unraveler::new(ctx, *plan, 0, 0, budget, cache, mode, JumpStrategy::Sequential);
    let a = un.unravel(node, start, exit, depth, usize::MAX)?;
    Ok(Transcript { node, start, exit, steps: a.steps, truncated: a.truncated })
}

/// One weight-proportional arborescence of `g`.
pub fn sample_arborescence(g: &WeightedDigraph, seed: u64) -> Result<Arborescence> {
    Ok(HierarchicalSampler::new(g, SamplerOptions::default())?.sample(seed, 0)?.arborescence)
}
