//! Jumping-edge walks by pointer doubling: `End(x, t, l)` is the state after
//! the `l` steps driven by variates `t..t+l` starting from state `x`, and
//! `End(x, t, 2l) = End(End(x, t, l), t + l, l)`.

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{EdgeId, VertexId, WeightedDigraph};
use crate::plan::{RandomnessPlan, TaskId};
use crate::walk::ExitTable;

/// Steps per table; longer walks are covered block by block.
const BLOCK: usize = 4096;
const DEAD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkState {
    /// At a vertex before the first step.
    Vertex(VertexId),
    /// Just crossed an edge; the walk continues from its head.
    Edge(EdgeId),
}

/// Doubling table over one block of variates.
pub struct EndTable {
    states: Vec<WalkState>,
    vertex_index: Vec<u32>,
    edge_index: Vec<u32>,
    /// `levels[k][j * states + x]` = `End(x, offset + j 2^k, 2^k)`.
    levels: Vec<Vec<u32>>,
    offset: u64,
}

impl EndTable {
    /// Table for `len` steps starting at variate `offset`; `exit` is absorbing.
    pub fn build(
        g: &WeightedDigraph,
        table: &ExitTable,
        plan: &RandomnessPlan,
        task: &TaskId,
        exit: Option<EdgeId>,
        offset: u64,
        len: usize,
    ) -> Result<Self> {
        let mut states: Vec<WalkState> = table.members().iter().map(|&v| WalkState::Vertex(v)).collect();
        let mut vertex_index = vec![DEAD; g.n()];
        for (i, &v) in table.members().iter().enumerate() {
            vertex_index[v] = i as u32;
        }
        let mut edge_index = vec![DEAD; g.m()];
        let mut add_edge = |e: EdgeId, states: &mut Vec<WalkState>| {
            if edge_index[e] == DEAD {
                edge_index[e] = states.len() as u32;
                states.push(WalkState::Edge(e));
            }
        };
        for &v in table.members() {
            if let Ok(row) = table.distribution(v) {
                for (e, _) in row {
                    add_edge(e, &mut states);
                }
            }
        }
        if let Some(e) = exit {
            add_edge(e, &mut states);
        }
        let s = states.len();
        let span = len.max(1).next_power_of_two();
        // Edges leaving the cluster are absorbing.
        let at = |state: WalkState| -> Option<VertexId> {
            match state {
                WalkState::Vertex(v) => Some(v),
                WalkState::Edge(e) if vertex_index[g.edge(e).dst] == DEAD => None,
                WalkState::Edge(e) => Some(g.edge(e).dst),
            }
        };
        let base: Vec<u32> = (0..span)
            .into_par_iter()
            .flat_map_iter(|j| {
                let x = plan.stream(task).variate(offset + j as u64);
                let states = &states;
                let edge_index = &edge_index;
                (0..s).map(move |i| match at(states[i]) {
                    None => i as u32,
                    Some(v) => match table.next_edge(v, &x) {
                        Ok(e) => edge_index[e],
                        Err(_) => DEAD,
                    },
                })
            })
            .collect();
        let mut levels = vec![base];
        while levels.last().unwrap().len() > s {
            let prev = levels.last().unwrap();
            let count = prev.len() / s / 2;
            let next: Vec<u32> = (0..count)
                .into_par_iter()
                .flat_map_iter(|j| {
                    let first = &prev[2 * j * s..(2 * j + 1) * s];
                    let second = &prev[(2 * j + 1) * s..(2 * j + 2) * s];
                    first.iter().map(move |&y| if y == DEAD { DEAD } else { second[y as usize] })
                })
                .collect();
            levels.push(next);
        }
        Ok(Self { states, vertex_index, edge_index, levels, offset })
    }

    fn state_index(&self, state: WalkState) -> u32 {
        match state {
            WalkState::Vertex(v) => self.vertex_index[v],
            WalkState::Edge(e) => self.edge_index[e],
        }
    }

    /// `End(x, offset + j 2^k, 2^k)`, if the walk from `x` can take those steps.
    pub fn entry(&self, k: usize, j: usize, x: WalkState) -> Option<WalkState> {
        let i = self.state_index(x);
        if i == DEAD {
            return None;
        }
        let y = self.levels[k][j * self.states.len() + i as usize];
        (y != DEAD).then(|| self.states[y as usize])
    }

    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Number of aligned entries per state at level `k`.
    pub fn width(&self, k: usize) -> usize {
        self.levels[k].len() / self.states.len()
    }

    pub fn states(&self) -> &[WalkState] {
        &self.states
    }

    /// State after the first `k` steps from `x`, composed from aligned powers of two.
    fn after(&self, x: u32, k: usize) -> u32 {
        let mut state = x;
        let mut t = 0usize;
        for b in (0..self.levels.len()).rev() {
            if k >> b & 1 == 1 && state != DEAD {
                state = self.levels[b][(t >> b) * self.states.len() + state as usize];
                t += 1 << b;
            }
        }
        state
    }

    /// The edges crossed by the first `len` steps from `start`, computed independently per step.
    fn path(&self, start: WalkState, len: usize) -> Vec<Option<EdgeId>> {
        let x = self.state_index(start);
        (1..=len)
            .into_par_iter()
            .map(|k| match self.after(x, k) {
                DEAD => None,
                y => match self.states[y as usize] {
                    WalkState::Edge(e) => Some(e),
                    WalkState::Vertex(_) => None,
                },
            })
            .collect()
    }
}

/// Same edge sequence as stepping the walk one variate at a time.
pub(crate) fn walk_by_doubling(
    g: &WeightedDigraph,
    table: &ExitTable,
    plan: &RandomnessPlan,
    task: &TaskId,
    start: VertexId,
    exit: Option<EdgeId>,
    limit: usize,
) -> Result<Vec<EdgeId>> {
    let mut out = Vec::new();
    let mut state = WalkState::Vertex(start);
    let mut offset = 0usize;
    while offset < limit {
        let len = BLOCK.min(limit - offset);
        let end = EndTable::build(g, table, plan, task, exit, offset as u64, len)?;
        for e in end.path(state, len) {
            let Some(e) = e else {
                // Only reachable from a vertex the conditioned walk cannot occupy.
                let v = match state {
                    WalkState::Vertex(v) => v,
                    WalkState::Edge(f) => g.edge(f).dst,
                };
                table.distribution(v)?;
                return Err(crate::Error::ZeroConditioning { vertex: v });
            };
            out.push(e);
            if Some(e) == exit || !table.members().contains(&g.edge(e).dst) {
                return Ok(out);
            }
        }
        state = WalkState::Edge(*out.last().unwrap());
        offset += len;
    }
    Ok(out)
}
