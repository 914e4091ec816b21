//! Padded N-gram next-event models and per-event anomaly scores.
//!
//! A sequence `e1 .. eL` is padded to `SoS^(n-1) e1 .. eL EoS`; every
//! window of `n` consecutive events contributes one count to
//! `table[window[..n-1]][window[n-1]]`. Scores come straight from those
//! counts:
//!
//! * occurrence: how often the event followed the context in training
//! * probability: occurrence divided by the context's total count
//!
//! Low values of either mark an event as unlikely in its context.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{EventId, EventSequence};

/// Sliding-window size `n`; the context holds `n - 1` events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowSize(usize);

impl WindowSize {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::argument(format!(
                "window size must be at least 2, got {n}"
            )));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn context_len(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for WindowSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `n - 1` leading SoS events, the sequence, then a single EoS.
pub fn pad(events: &[EventId], n: WindowSize) -> Vec<EventId> {
    let mut out = Vec::with_capacity(events.len() + n.get());
    out.resize(n.context_len(), EventId::SOS);
    out.extend_from_slice(events);
    out.push(EventId::EOS);
    out
}

/// Successor counts of one context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContextCounts {
    total: u64,
    /// Sorted by event id.
    next: Vec<(EventId, u64)>,
}

impl ContextCounts {
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `(event, count)` pairs sorted by event id.
    pub fn successors(&self) -> &[(EventId, u64)] {
        &self.next
    }

    pub fn count(&self, event: EventId) -> u64 {
        match self.next.binary_search_by_key(&event, |&(e, _)| e) {
            Ok(i) => self.next[i].1,
            Err(_) => 0,
        }
    }

    fn add(&mut self, event: EventId, count: u64) {
        self.total += count;
        match self.next.binary_search_by_key(&event, |&(e, _)| e) {
            Ok(i) => self.next[i].1 += count,
            Err(i) => self.next.insert(i, (event, count)),
        }
    }

    /// Highest count, smallest id on ties.
    fn argmax(&self) -> Option<EventId> {
        let mut best: Option<(EventId, u64)> = None;
        for &(e, c) in &self.next {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((e, c));
            }
        }
        best.map(|(e, _)| e)
    }

    /// 1-based rank of `event` (count descending, id ascending), or `None`
    /// if it never followed this context.
    pub fn rank_of(&self, event: EventId) -> Option<usize> {
        let c = self.count(event);
        if c == 0 {
            return None;
        }
        let ahead = self
            .next
            .iter()
            .filter(|&&(e, ec)| ec > c || (ec == c && e < event))
            .count();
        Some(ahead + 1)
    }

    fn ranking(&self) -> Vec<(EventId, u64)> {
        let mut r = self.next.clone();
        r.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        r
    }
}

/// Per-event anomaly metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnomalyScore {
    pub occurrence: u64,
    pub probability: f64,
}

/// Next-event prediction for one context.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub predicted: EventId,
    /// Set when the context never occurred in training and the prediction
    /// falls back to the globally most frequent event.
    pub is_fallback: bool,
    /// Candidates ordered by count descending, id ascending.
    ranking: Vec<(EventId, u64)>,
}

impl Prediction {
    /// 1-based rank of `event` among the candidates, `None` if absent.
    pub fn rank_of(&self, event: EventId) -> Option<usize> {
        self.ranking
            .iter()
            .position(|&(e, _)| e == event)
            .map(|p| p + 1)
    }

    pub fn ranking(&self) -> &[(EventId, u64)] {
        &self.ranking
    }
}

/// Counting N-gram model.
///
/// Immutable after training; `predict` and `score` take `&self` and can be
/// called from many threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NGramModel {
    n: WindowSize,
    contexts: HashMap<Box<[EventId]>, ContextCounts>,
    global: BTreeMap<EventId, u64>,
    trained_events: u64,
}

impl NGramModel {
    pub fn empty(n: WindowSize) -> Self {
        Self {
            n,
            contexts: HashMap::new(),
            global: BTreeMap::new(),
            trained_events: 0,
        }
    }

    /// Counts every padded window of every sequence.
    pub fn train<'a>(
        sequences: impl IntoIterator<Item = &'a EventSequence>,
        n: WindowSize,
    ) -> Self {
        let mut model = Self::empty(n);
        for seq in sequences {
            model.add_sequence(&seq.events);
        }
        model
    }

    /// Like [`NGramModel::train`], sharded over threads and merged.
    pub fn train_parallel(sequences: &[EventSequence], n: WindowSize) -> Self {
        use rayon::prelude::*;
        let chunk = sequences
            .len()
            .div_ceil(rayon::current_num_threads().max(1))
            .max(1);
        sequences
            .par_chunks(chunk)
            .map(|part| Self::train(part, n))
            .reduce(
                || Self::empty(n),
                |a, b| a.merge(&b).expect("same window size"),
            )
    }

    pub fn add_sequence(&mut self, events: &[EventId]) {
        debug_assert!(events.iter().all(|e| !e.is_sentinel()), "sentinel in input");
        let padded = pad(events, self.n);
        for window in padded.windows(self.n.get()) {
            let (context, next) = window.split_at(self.n.context_len());
            self.add_count(context, next[0], 1);
        }
    }

    fn add_count(&mut self, context: &[EventId], next: EventId, count: u64) {
        match self.contexts.get_mut(context) {
            Some(c) => c.add(next, count),
            None => {
                let mut c = ContextCounts::default();
                c.add(next, count);
                self.contexts.insert(context.into(), c);
            }
        }
        *self.global.entry(next).or_insert(0) += count;
        self.trained_events += count;
    }

    pub fn window(&self) -> WindowSize {
        self.n
    }

    /// Total number of counted positions.
    pub fn trained_events(&self) -> u64 {
        self.trained_events
    }

    /// Count of each event over all training positions.
    pub fn global_counts(&self) -> &BTreeMap<EventId, u64> {
        &self.global
    }

    /// Events ever observed as a successor, EoS included.
    pub fn vocab(&self) -> impl Iterator<Item = EventId> + '_ {
        self.global.keys().copied()
    }

    pub fn vocab_len(&self) -> usize {
        self.global.len()
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    /// Number of distinct (context, next) pairs.
    pub fn unique_ngrams(&self) -> usize {
        self.contexts.values().map(|c| c.next.len()).sum()
    }

    pub fn context(&self, context: &[EventId]) -> Option<&ContextCounts> {
        self.contexts.get(context)
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&[EventId], &ContextCounts)> {
        self.contexts.iter().map(|(k, v)| (&**k, v))
    }

    /// Most frequent event over all training positions, smallest id on ties.
    pub fn most_frequent(&self) -> Option<EventId> {
        let mut best: Option<(EventId, u64)> = None;
        for (&e, &c) in &self.global {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((e, c));
            }
        }
        best.map(|(e, _)| e)
    }

    fn check_context(&self, context: &[EventId]) -> Result<()> {
        if context.len() != self.n.context_len() {
            return Err(Error::argument(format!(
                "context length {} does not match window size {}",
                context.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Most frequent successor of `context`, or the global most frequent
    /// event when the context is unseen.
    pub fn predict(&self, context: &[EventId]) -> Result<Prediction> {
        self.check_context(context)?;
        if let Some(c) = self.contexts.get(context) {
            let ranking = c.ranking();
            return Ok(Prediction {
                predicted: ranking[0].0,
                is_fallback: false,
                ranking,
            });
        }
        let mut ranking: Vec<(EventId, u64)> = self.global.iter().map(|(&e, &c)| (e, c)).collect();
        ranking.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        match ranking.first() {
            Some(&(predicted, _)) => Ok(Prediction {
                predicted,
                is_fallback: true,
                ranking,
            }),
            None => Err(Error::UntrainedModel),
        }
    }

    /// Just the predicted event; no ranking is materialized.
    pub fn predict_event(&self, context: &[EventId]) -> Result<EventId> {
        self.check_context(context)?;
        self.contexts
            .get(context)
            .and_then(ContextCounts::argmax)
            .or_else(|| self.most_frequent())
            .ok_or(Error::UntrainedModel)
    }

    /// Occurrence count and conditional probability of `event` after
    /// `context`; both zero for an unseen context.
    pub fn score(&self, context: &[EventId], event: EventId) -> Result<AnomalyScore> {
        self.check_context(context)?;
        Ok(match self.contexts.get(context) {
            Some(c) => {
                let occurrence = c.count(event);
                AnomalyScore {
                    occurrence,
                    probability: occurrence as f64 / c.total as f64,
                }
            }
            None => AnomalyScore {
                occurrence: 0,
                probability: 0.0,
            },
        })
    }

    /// True if `event` ranks within the top `k` successors of `context`.
    pub fn is_normal_topk(&self, context: &[EventId], event: EventId, k: usize) -> Result<bool> {
        self.check_context(context)?;
        if k == 0 {
            return Err(Error::argument("k must be at least 1"));
        }
        Ok(self
            .contexts
            .get(context)
            .and_then(|c| c.rank_of(event))
            .is_some_and(|r| r <= k))
    }

    /// Scores every real event and the final EoS. Positions are 1-based
    /// over the unpadded sequence; EoS sits at `len + 1`.
    pub fn score_sequence(&self, events: &[EventId]) -> Result<Vec<ScoredEvent>> {
        let padded = pad(events, self.n);
        padded
            .windows(self.n.get())
            .enumerate()
            .map(|(i, window)| {
                let (context, next) = window.split_at(self.n.context_len());
                Ok(ScoredEvent {
                    position: i + 1,
                    event: next[0],
                    score: self.score(context, next[0])?,
                    prediction: self.predict(context)?,
                })
            })
            .collect()
    }

    /// Pointwise sum of two models' counts.
    pub fn merge(&self, other: &NGramModel) -> Result<NGramModel> {
        if self.n != other.n {
            return Err(Error::argument(format!(
                "cannot merge window sizes {} and {}",
                self.n, other.n
            )));
        }
        let (mut out, small) = if self.contexts.len() >= other.contexts.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (ctx, counts) in &small.contexts {
            let entry = out.contexts.entry(ctx.clone()).or_default();
            for &(e, c) in &counts.next {
                entry.add(e, c);
            }
        }
        for (&e, &c) in &small.global {
            *out.global.entry(e).or_insert(0) += c;
        }
        out.trained_events += small.trained_events;
        Ok(out)
    }

    /// Serializes to the binary model format (see [`MODEL_MAGIC`]).
    ///
    /// Layout, little-endian:
    ///
    /// ```text
    /// magic "NGRM" | version u32 | n u32 | vocab_len u32
    /// trained_events u64
    /// vocab_len x (event u32, global count u64)        ascending id
    /// context_count u64
    /// context_count x (n-1 x event u32,                 ascending context
    ///                  successors u32,
    ///                  successors x (event u32, count u64))
    /// ```
    pub fn write_to(&self, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&(self.n.get() as u32).to_le_bytes())?;
        w.write_all(&(self.global.len() as u32).to_le_bytes())?;
        w.write_all(&self.trained_events.to_le_bytes())?;
        for (&e, &c) in &self.global {
            w.write_all(&e.value().to_le_bytes())?;
            w.write_all(&c.to_le_bytes())?;
        }
        let mut keys: Vec<&Box<[EventId]>> = self.contexts.keys().collect();
        keys.sort();
        w.write_all(&(keys.len() as u64).to_le_bytes())?;
        for key in keys {
            for e in key.iter() {
                w.write_all(&e.value().to_le_bytes())?;
            }
            let counts = &self.contexts[key];
            w.write_all(&(counts.next.len() as u32).to_le_bytes())?;
            for &(e, c) in &counts.next {
                w.write_all(&e.value().to_le_bytes())?;
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Parses the binary model format, checking every count invariant.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::format("not a model file"));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::format(format!(
                "unsupported model version {version}"
            )));
        }
        let n = WindowSize::new(r.u32()? as usize).map_err(|e| Error::format(e.to_string()))?;
        let vocab_len = r.u32()? as usize;
        let trained_events = r.u64()?;
        let mut global = BTreeMap::new();
        let mut last = None;
        for _ in 0..vocab_len {
            let e = r.event()?;
            let c = r.u64()?;
            if last.is_some_and(|l| l >= e) || c == 0 {
                return Err(Error::format("global counts not strictly ordered or zero"));
            }
            last = Some(e);
            global.insert(e, c);
        }
        let context_count = r.u64()?;
        let mut contexts = HashMap::new();
        let mut sums: BTreeMap<EventId, u64> = BTreeMap::new();
        let mut total = 0u64;
        let mut last_key: Option<Box<[EventId]>> = None;
        for _ in 0..context_count {
            let key: Box<[EventId]> = (0..n.context_len())
                .map(|_| r.event())
                .collect::<Result<Vec<_>>>()?
                .into();
            if last_key.as_ref().is_some_and(|l| *l >= key) {
                return Err(Error::format("contexts not strictly ordered"));
            }
            let succ = r.u32()? as usize;
            if succ == 0 {
                return Err(Error::format("context without successors"));
            }
            let mut counts = ContextCounts::default();
            let mut last_e = None;
            for _ in 0..succ {
                let e = r.event()?;
                let c = r.u64()?;
                if last_e.is_some_and(|l| l >= e) || c == 0 {
                    return Err(Error::format("successors not strictly ordered or zero"));
                }
                last_e = Some(e);
                counts.next.push((e, c));
                counts.total += c;
                *sums.entry(e).or_insert(0) += c;
            }
            total += counts.total;
            last_key = Some(key.clone());
            contexts.insert(key, counts);
        }
        if r.pos != bytes.len() {
            return Err(Error::format("trailing bytes after model"));
        }
        if sums != global || total != trained_events {
            return Err(Error::format("model counts are inconsistent"));
        }
        Ok(Self {
            n,
            contexts,
            global,
            trained_events,
        })
    }
}

/// Magic bytes opening a serialized model.
pub const MODEL_MAGIC: &[u8; 4] = b"NGRM";
pub const MODEL_VERSION: u32 = 1;

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("model file truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn event(&mut self) -> Result<EventId> {
        let v = self.u32()?;
        Ok(match v {
            _ if v == EventId::SOS.value() => EventId::SOS,
            _ if v == EventId::EOS.value() => EventId::EOS,
            _ if v == EventId::OVERFLOW.value() => EventId::OVERFLOW,
            _ => EventId::new(v),
        })
    }
}

/// One scored position of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredEvent {
    pub position: usize,
    pub event: EventId,
    pub score: AnomalyScore,
    pub prediction: Prediction,
}
