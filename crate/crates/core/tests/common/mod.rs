//! Brute-force reference computations. Every query rescans the padded
//! training data from scratch; nothing here shares code with the model.

#![allow(dead_code)]

use logngram::{EventId, EventSequence};

pub fn padded(seq: &[EventId], n: usize) -> Vec<EventId> {
    let mut out = Vec::new();
    for _ in 0..n - 1 {
        out.push(EventId::SOS);
    }
    out.extend(seq.iter().copied());
    out.push(EventId::EOS);
    out
}

/// Every (context, next) window of the training data, in scan order.
pub fn windows(train: &[EventSequence], n: usize) -> Vec<(Vec<EventId>, EventId)> {
    let mut out = Vec::new();
    for s in train {
        let p = padded(&s.events, n);
        let mut i = 0;
        while i + n <= p.len() {
            out.push((p[i..i + n - 1].to_vec(), p[i + n - 1]));
            i += 1;
        }
    }
    out
}

pub fn occurrence(train: &[EventSequence], n: usize, ctx: &[EventId], e: EventId) -> u64 {
    windows(train, n)
        .iter()
        .filter(|(c, x)| c.as_slice() == ctx && *x == e)
        .count() as u64
}

pub fn context_total(train: &[EventSequence], n: usize, ctx: &[EventId]) -> u64 {
    windows(train, n)
        .iter()
        .filter(|(c, _)| c.as_slice() == ctx)
        .count() as u64
}

pub fn probability(train: &[EventSequence], n: usize, ctx: &[EventId], e: EventId) -> f64 {
    let total = context_total(train, n, ctx);
    if total == 0 {
        0.0
    } else {
        occurrence(train, n, ctx, e) as f64 / total as f64
    }
}

/// All events that appear as a prediction target anywhere.
pub fn targets(train: &[EventSequence], n: usize) -> Vec<EventId> {
    let mut v: Vec<EventId> = windows(train, n).into_iter().map(|(_, e)| e).collect();
    v.sort();
    v.dedup();
    v
}

/// Highest count, smallest id on ties; unseen contexts fall back to the
/// globally most frequent target. `None` only for empty training data.
pub fn predict(train: &[EventSequence], n: usize, ctx: &[EventId]) -> Option<EventId> {
    let cands = targets(train, n);
    let seen = context_total(train, n, ctx) > 0;
    let mut best: Option<(EventId, u64)> = None;
    for e in cands {
        let c = if seen {
            occurrence(train, n, ctx, e)
        } else {
            windows(train, n).iter().filter(|(_, x)| *x == e).count() as u64
        };
        match best {
            Some((_, bc)) if bc >= c => {}
            _ => best = Some((e, c)),
        }
    }
    best.map(|(e, _)| e)
}

/// (correct, total) over all scored positions of `test`.
pub fn accuracy(train: &[EventSequence], test: &[EventSequence], n: usize) -> (u64, u64) {
    let mut correct = 0;
    let mut total = 0;
    for s in test {
        let p = padded(&s.events, n);
        for i in 0..=p.len() - n {
            let ctx = &p[i..i + n - 1];
            if predict(train, n, ctx) == Some(p[i + n - 1]) {
                correct += 1;
            }
            total += 1;
        }
    }
    (correct, total)
}

pub fn unique_ngrams(train: &[EventSequence], n: usize) -> usize {
    let mut w = windows(train, n);
    w.sort();
    w.dedup();
    w.len()
}
