//! Counter-based randomness: every random choice is a pure function of the
//! master seed and a structured task id, so results do not depend on
//! evaluation order, laziness or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeId, VertexId};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Slots at or above this bit are fresh (never drawn by cache picks).
pub const FRESH_SLOT_BIT: u64 = 1 << 63;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fold(h: u64, x: u64) -> u64 {
    splitmix64(h ^ splitmix64(x))
}

fn opt(e: Option<EdgeId>) -> u64 {
    e.map_or(0, |e| e as u64 + 1)
}

/// Identifies one independent stream of variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskId {
    /// Root selection for a sample.
    Root { sample: u64 },
    /// The walk driving one jumping-edge call.
    Jump { sample: u64, round: u32, node: usize, start: VertexId, exit: Option<EdgeId>, slot: u64 },
    /// Which cached answer a splice position uses.
    Pick {
        sample: u64,
        round: u32,
        node: usize,
        start: VertexId,
        exit: Option<EdgeId>,
        level: u32,
        slot: u64,
        position: u64,
    },
    /// Replacement slot for a splice whose cached answer would be reused.
    Fresh {
        sample: u64,
        round: u32,
        node: usize,
        start: VertexId,
        exit: Option<EdgeId>,
        level: u32,
        slot: u64,
        position: u64,
        attempt: u32,
    },
    /// The sequential Aldous-Broder walk of a sample.
    Baseline { sample: u64 },
}

impl TaskId {
    /// Stable 64-bit identifier; independent of platform and std hasher seeds.
    pub fn stream_id(&self) -> u64 {
        match *self {
            TaskId::Root { sample } => fold(1, sample),
            TaskId::Jump { sample, round, node, start, exit, slot } => {
                [sample, round as u64, node as u64, start as u64, opt(exit), slot].into_iter().fold(2, fold)
            }
            TaskId::Pick { sample, round, node, start, exit, level, slot, position } => {
                [sample, round as u64, node as u64, start as u64, opt(exit), level as u64, slot, position]
                    .into_iter()
                    .fold(3, fold)
            }
            TaskId::Fresh { sample, round, node, start, exit, level, slot, position, attempt } => [
                sample,
                round as u64,
                node as u64,
                start as u64,
                opt(exit),
                level as u64,
                slot,
                position,
                attempt as u64,
            ]
            .into_iter()
            .fold(4, fold),
            TaskId::Baseline { sample } => fold(5, sample),
        }
    }
}

/// Master seed expanded into a stream cipher key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomnessPlan {
    seed: u64,
    key: [u8; 32],
}

impl RandomnessPlan {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, task: &TaskId) -> VariateStream {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(task.stream_id());
        VariateStream { rng, next: 0 }
    }

    /// A uniform slot in `0..m` for a pick task.
    pub fn pick(&self, task: &TaskId, m: u64) -> u64 {
        let x = self.stream(task).variate(0).hi;
        ((x as u128 * m as u128) >> 64) as u64
    }

    /// A slot outside the pick range, unique to the task with overwhelming probability.
    pub fn fresh_slot(&self, task: &TaskId) -> u64 {
        FRESH_SLOT_BIT | (fold(self.seed, task.stream_id()) & !FRESH_SLOT_BIT)
    }
}

/// Random-access sequence of variates; variate `t` is the same however it is reached.
pub struct VariateStream {
    rng: ChaCha8Rng,
    next: u64,
}

impl VariateStream {
    pub fn variate(&mut self, t: u64) -> Variate {
        if t != self.next {
            self.rng.set_word_pos(4 * t as u128);
        }
        let hi = self.rng.next_u64();
        let lo = self.rng.next_u64();
        self.next = t + 1;
        Variate { hi, lo }
    }
}

/// A uniform real in [0, 1) carried to 128 bits. Comparisons consult the low
/// word only when the high word ties, so thresholds are resolved far beyond
/// double precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variate {
    pub hi: u64,
    pub lo: u64,
}

const TWO_64: f64 = 18_446_744_073_709_551_616.0;

impl Variate {
    /// Whether the variate is strictly below `p`.
    pub fn below(&self, p: f64) -> bool {
        if p.is_nan() || p <= 0.0 {
            return false;
        }
        if p >= 1.0 {
            return true;
        }
        // Scaling by a power of two and splitting off the integer part are exact.
        let scaled = p * TWO_64;
        let whole = scaled.floor();
        let w = whole as u64;
        if self.hi != w {
            return self.hi < w;
        }
        let scaled = (scaled - whole) * TWO_64;
        let whole2 = scaled.floor();
        let w2 = whole2 as u64;
        if self.lo != w2 {
            return self.lo < w2;
        }
        scaled > whole2
    }

    pub fn to_f64(&self) -> f64 {
        (self.hi >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index of the bucket of a cumulative table containing this variate.
    /// `cumulative` is increasing; its last entry is treated as exactly 1.
    pub fn bucket(&self, cumulative: &[f64]) -> usize {
        let last = cumulative.len() - 1;
        let (mut lo, mut hi) = (0, last);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.below(cumulative[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}
