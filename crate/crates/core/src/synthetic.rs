//! Seeded synthetic event streams for benchmarks and tests.
//!
//! Normal behaviour mimics a long test script: a hidden state walks a main
//! loop (state `s` usually goes to `s + 1`), occasionally detouring to a
//! seed-chosen state. Each state emits one event, and several states share an
//! event, so a longer context disambiguates where in the script the run is.
//! Anomalous stretches are drawn uniformly from the vocabulary instead.

use std::ops::Range;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::event::{EventId, EventSequence, Label};

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovSource {
    pub vocab: u32,
    /// Hidden states in the main loop; more states than events means aliasing.
    pub states: u32,
    /// Successors per state, the main-loop successor included.
    pub branching: usize,
    /// Probability of following the main loop.
    pub stickiness: f64,
    pub seed: u64,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // FNV-1a over the three words.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in [seed, a, b] {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl MarkovSource {
    pub fn new(vocab: u32, states: u32, branching: usize, stickiness: f64, seed: u64) -> Self {
        assert!(vocab >= 1 && states >= 1 && branching >= 1);
        assert!((0.0..=1.0).contains(&stickiness));
        Self {
            vocab,
            states,
            branching,
            stickiness,
            seed,
        }
    }

    /// Event emitted in `state`.
    pub fn emission(&self, state: u32) -> EventId {
        EventId::new((mix(self.seed, 0, state as u64) % self.vocab as u64) as u32)
    }

    /// Successor states of `state` and their weights; the first is the
    /// main-loop successor.
    pub fn successors(&self, state: u32) -> Vec<(u32, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, 1, state as u64));
        let main = (state + 1) % self.states;
        let mut out = vec![(main, self.stickiness)];
        let detours = self.branching.min(self.states as usize) - 1;
        let mut share = 1.0 - self.stickiness;
        while out.len() <= detours {
            let s = rng.gen_range(0..self.states);
            if out.iter().all(|&(x, _)| x != s) {
                // Later detours are rarer; the last one takes the remainder.
                let w = if out.len() == detours {
                    share
                } else {
                    share / 2.0
                };
                share -= w;
                out.push((s, w));
            }
        }
        out
    }

    /// Draws `len` events, starting from state 0.
    pub fn generate(&self, len: usize, rng: &mut impl Rng) -> Vec<EventId> {
        self.generate_with_anomaly(len, None, rng)
    }

    /// Like [`MarkovSource::generate`], but events inside `anomaly` are
    /// drawn uniformly from the vocabulary; the hidden walk continues
    /// underneath.
    pub fn generate_with_anomaly(
        &self,
        len: usize,
        anomaly: Option<Range<usize>>,
        rng: &mut impl Rng,
    ) -> Vec<EventId> {
        let table: Vec<(Vec<u32>, WeightedIndex<f64>)> = (0..self.states)
            .map(|s| {
                let succ = self.successors(s);
                let dist =
                    WeightedIndex::new(succ.iter().map(|&(_, w)| w)).expect("positive weights");
                (succ.into_iter().map(|(s, _)| s).collect(), dist)
            })
            .collect();
        let mut state = 0;
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            if anomaly.as_ref().is_some_and(|r| r.contains(&i)) {
                out.push(EventId::new(rng.gen_range(0..self.vocab)));
            } else {
                out.push(self.emission(state));
            }
            let (next, dist) = &table[state as usize];
            state = next[dist.sample(rng)];
        }
        out
    }
}

/// Shape of a generated corpus of normal sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub source: MarkovSource,
    pub sequences: usize,
    pub mean_len: usize,
    /// Lengths are uniform in `mean_len ± jitter`.
    pub jitter: usize,
    pub seed: u64,
}

impl SyntheticCorpus {
    /// 100 long runs of about 10,000 events each.
    pub fn long_runs(seed: u64) -> Self {
        Self {
            source: MarkovSource::new(200, 400, 3, 0.9, seed),
            sequences: 100,
            mean_len: 10_000,
            jitter: 1_000,
            seed,
        }
    }

    pub fn generate(&self) -> Vec<EventSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        (0..self.sequences)
            .map(|i| {
                let len = if self.jitter == 0 {
                    self.mean_len
                } else {
                    rng.gen_range(
                        self.mean_len.saturating_sub(self.jitter)..=self.mean_len + self.jitter,
                    )
                };
                EventSequence::new(
                    format!("run{i:04}"),
                    Label::Normal,
                    self.source.generate(len, &mut rng),
                )
            })
            .collect()
    }
}

/// A single anomalous run: normal behaviour with a uniformly random stretch
/// over `anomaly`.
pub fn anomaly_sequence(
    source: &MarkovSource,
    len: usize,
    anomaly: Range<usize>,
    seed: u64,
) -> EventSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EventSequence::new(
        "anomaly",
        Label::Anomaly,
        source.generate_with_anomaly(len, Some(anomaly), &mut rng),
    )
}
