//! Next-event accuracy, the most-frequent-event baseline, per-sequence
//! win/tie comparison, window-size sweeps and wall-clock timing.

use std::cmp::Ordering;
use std::io::Write;
use std::ops::RangeInclusive;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{EventId, EventSequence};
use crate::ngram::{pad, NGramModel, WindowSize};

/// Anything that predicts the next event from the preceding `n - 1`.
pub trait NextEventPredictor: Sync {
    fn name(&self) -> &str;
    fn window(&self) -> WindowSize;
    fn predict_next(&self, context: &[EventId]) -> Result<EventId>;

    /// False for predictors that ignore the context entirely.
    fn uses_context(&self) -> bool {
        true
    }
}

impl NextEventPredictor for NGramModel {
    fn name(&self) -> &str {
        "ngram"
    }

    fn window(&self) -> WindowSize {
        NGramModel::window(self)
    }

    fn predict_next(&self, context: &[EventId]) -> Result<EventId> {
        self.predict_event(context)
    }
}

/// Always predicts the most frequent event of the training data, EoS
/// included as a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DummyPredictor {
    pub event: EventId,
}

impl DummyPredictor {
    pub fn fit(train: &[EventSequence]) -> Result<Self> {
        let mut counts: std::collections::BTreeMap<EventId, u64> = Default::default();
        for seq in train {
            for &e in &seq.events {
                *counts.entry(e).or_insert(0) += 1;
            }
            *counts.entry(EventId::EOS).or_insert(0) += 1;
        }
        let mut best: Option<(EventId, u64)> = None;
        for (e, c) in counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((e, c));
            }
        }
        best.map(|(event, _)| Self { event })
            .ok_or(Error::UntrainedModel)
    }

    /// Same choice as [`DummyPredictor::fit`], read off a model's global
    /// counts.
    pub fn from_model(model: &NGramModel) -> Result<Self> {
        model
            .most_frequent()
            .map(|event| Self { event })
            .ok_or(Error::UntrainedModel)
    }
}

impl NextEventPredictor for DummyPredictor {
    fn name(&self) -> &str {
        "dummy"
    }

    fn window(&self) -> WindowSize {
        WindowSize::new(2).expect("2 is a valid window")
    }

    fn predict_next(&self, _context: &[EventId]) -> Result<EventId> {
        Ok(self.event)
    }

    fn uses_context(&self) -> bool {
        false
    }
}

/// Correct predictions out of all scored positions of one sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceAccuracy {
    pub session_id: String,
    pub correct: u64,
    pub total: u64,
}

impl SequenceAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    /// Exact comparison of `correct / total` ratios.
    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        let lhs = self.correct as u128 * other.total as u128;
        let rhs = other.correct as u128 * self.total as u128;
        lhs.cmp(&rhs)
    }
}

/// One cell of an evaluation table.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset_id: String,
    pub model_name: String,
    /// `None` for predictors that ignore context.
    pub n: Option<WindowSize>,
    pub accuracy: f64,
    pub correct: u64,
    pub total_predictions: u64,
    pub unique_ngrams: u64,
    pub train_seconds: f64,
    pub infer_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: EvalReport,
    pub per_sequence: Vec<SequenceAccuracy>,
}

/// Scores one sequence: real events plus the final EoS.
pub fn sequence_accuracy<P: NextEventPredictor + ?Sized>(
    predictor: &P,
    seq: &EventSequence,
) -> Result<SequenceAccuracy> {
    let n = predictor.window();
    let padded = pad(&seq.events, n);
    let mut correct = 0;
    let mut total = 0;
    for window in padded.windows(n.get()) {
        let (context, actual) = window.split_at(n.context_len());
        if predictor.predict_next(context)? == actual[0] {
            correct += 1;
        }
        total += 1;
    }
    Ok(SequenceAccuracy {
        session_id: seq.session_id.clone(),
        correct,
        total,
    })
}

/// Aggregate and per-sequence accuracy over `test`. Sequences are scored
/// in parallel; results keep input order.
pub fn accuracy<P: NextEventPredictor + ?Sized>(
    predictor: &P,
    test: &[EventSequence],
    dataset_id: &str,
) -> Result<Evaluation> {
    let timed = time_it(Phase::Infer, || {
        test.par_iter()
            .map(|seq| sequence_accuracy(predictor, seq))
            .collect::<Result<Vec<_>>>()
    });
    let per_sequence = timed.value?;
    let correct: u64 = per_sequence.iter().map(|s| s.correct).sum();
    let total: u64 = per_sequence.iter().map(|s| s.total).sum();
    if total == 0 {
        return Err(Error::NoPredictions);
    }
    Ok(Evaluation {
        report: EvalReport {
            dataset_id: dataset_id.to_string(),
            model_name: predictor.name().to_string(),
            n: predictor.uses_context().then(|| predictor.window()),
            accuracy: correct as f64 / total as f64,
            correct,
            total_predictions: total,
            unique_ngrams: 0,
            train_seconds: 0.0,
            infer_seconds: timed.seconds,
        },
        per_sequence,
    })
}

/// Trains the constant baseline on `train` and evaluates it on `test`.
pub fn dummy_accuracy(
    train: &[EventSequence],
    test: &[EventSequence],
    dataset_id: &str,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::NoPredictions);
    }
    let fitted = time_it(Phase::Train, || DummyPredictor::fit(train));
    let dummy = fitted.value?;
    let mut eval = accuracy(&dummy, test, dataset_id)?;
    eval.report.train_seconds = fitted.seconds;
    Ok(eval)
}

/// One row of a prediction dump: what was expected and what a predictor
/// said at each scored position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionRow {
    pub session_id: String,
    pub position: usize,
    pub actual: EventId,
    pub predicted: EventId,
}

pub fn predictions<P: NextEventPredictor + ?Sized>(
    predictor: &P,
    test: &[EventSequence],
) -> Result<Vec<PredictionRow>> {
    let n = predictor.window();
    let mut rows = Vec::new();
    for seq in test {
        let padded = pad(&seq.events, n);
        for (i, window) in padded.windows(n.get()).enumerate() {
            let (context, actual) = window.split_at(n.context_len());
            rows.push(PredictionRow {
                session_id: seq.session_id.clone(),
                position: i + 1,
                actual: actual[0],
                predicted: predictor.predict_next(context)?,
            });
        }
    }
    Ok(rows)
}

/// Groups prediction rows into per-sequence accuracies, in order of first
/// appearance.
pub fn accuracies_from_predictions(rows: &[PredictionRow]) -> Vec<SequenceAccuracy> {
    let mut out: Vec<SequenceAccuracy> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for row in rows {
        let i = *index.entry(row.session_id.as_str()).or_insert_with(|| {
            out.push(SequenceAccuracy {
                session_id: row.session_id.clone(),
                correct: 0,
                total: 0,
            });
            out.len() - 1
        });
        out[i].total += 1;
        if row.actual == row.predicted {
            out[i].correct += 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    WinA,
    WinB,
    Tie,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::WinA => "a",
            Outcome::WinB => "b",
            Outcome::Tie => "tie",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceComparison {
    pub session_id: String,
    pub a: SequenceAccuracy,
    pub b: SequenceAccuracy,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ComparisonReport {
    pub per_sequence: Vec<SequenceComparison>,
    pub wins_a: u64,
    pub wins_b: u64,
    pub ties: u64,
}

impl ComparisonReport {
    /// `session_id,acc_a,acc_b,outcome` with a header row.
    pub fn write_csv(&self, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        writeln!(w, "session_id,acc_a,acc_b,outcome")?;
        for row in &self.per_sequence {
            writeln!(
                w,
                "{},{:.6},{:.6},{}",
                row.session_id,
                row.a.accuracy(),
                row.b.accuracy(),
                row.outcome.as_str()
            )?;
        }
        Ok(())
    }
}

/// Per-sequence head-to-head of two predictors over the same test set.
/// Strictly higher exact accuracy wins; equality is a tie.
pub fn compare(a: &[SequenceAccuracy], b: &[SequenceAccuracy]) -> Result<ComparisonReport> {
    if a.len() != b.len() {
        return Err(Error::argument(format!(
            "test sets differ in size: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut report = ComparisonReport::default();
    for (x, y) in a.iter().zip(b) {
        if x.session_id != y.session_id || x.total != y.total {
            return Err(Error::argument(format!(
                "test sets differ at session {:?} / {:?}",
                x.session_id, y.session_id
            )));
        }
        let outcome = match x.cmp_exact(y) {
            Ordering::Greater => {
                report.wins_a += 1;
                Outcome::WinA
            }
            Ordering::Less => {
                report.wins_b += 1;
                Outcome::WinB
            }
            Ordering::Equal => {
                report.ties += 1;
                Outcome::Tie
            }
        };
        report.per_sequence.push(SequenceComparison {
            session_id: x.session_id.clone(),
            a: x.clone(),
            b: y.clone(),
            outcome,
        });
    }
    Ok(report)
}

/// Wins across several predictors: a sequence is won by the predictor
/// with the strictly highest exact accuracy, and tied when the best
/// accuracy is shared. Returns (wins per predictor, ties).
pub fn multi_wins(per_predictor: &[Vec<SequenceAccuracy>]) -> Result<(Vec<u64>, u64)> {
    let mut wins = vec![0u64; per_predictor.len()];
    let mut ties = 0;
    let Some(first) = per_predictor.first() else {
        return Ok((wins, ties));
    };
    if per_predictor.iter().any(|p| p.len() != first.len()) {
        return Err(Error::argument("predictors scored different test sets"));
    }
    for i in 0..first.len() {
        let mut best = 0;
        let mut shared = false;
        for p in 1..per_predictor.len() {
            match per_predictor[p][i].cmp_exact(&per_predictor[best][i]) {
                Ordering::Greater => {
                    best = p;
                    shared = false;
                }
                Ordering::Equal => shared = true,
                Ordering::Less => {}
            }
        }
        if shared {
            ties += 1;
        } else {
            wins[best] += 1;
        }
    }
    Ok((wins, ties))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Train,
    Infer,
}

#[derive(Clone, Debug)]
pub struct Timed<T> {
    pub value: T,
    pub seconds: f64,
}

/// Runs `thunk` and measures its monotonic wall-clock duration.
pub fn time_it<T>(phase: Phase, thunk: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = thunk();
    let seconds = start.elapsed().as_secs_f64();
    log::debug!("{phase:?} took {seconds:.3}s");
    Timed { value, seconds }
}

/// Output of a window-size sweep.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub reports: Vec<EvalReport>,
    pub per_sequence: Vec<Vec<SequenceAccuracy>>,
    /// Sequences on which each window size alone reached the best accuracy.
    pub wins: Vec<u64>,
    /// Sequences whose best accuracy was shared by several window sizes.
    pub ties: u64,
}

/// Trains and evaluates one model per window size in `n_range`.
pub fn sweep(
    train: &[EventSequence],
    test: &[EventSequence],
    n_range: RangeInclusive<usize>,
    dataset_id: &str,
) -> Result<SweepResult> {
    if n_range.is_empty() {
        return Err(Error::argument("empty window-size range"));
    }
    let mut reports = Vec::new();
    let mut per_sequence = Vec::new();
    for n in n_range {
        let n = WindowSize::new(n)?;
        let trained = time_it(Phase::Train, || NGramModel::train_parallel(train, n));
        let model = trained.value;
        let mut eval = accuracy(&model, test, dataset_id)?;
        eval.report.train_seconds = trained.seconds;
        eval.report.unique_ngrams = model.unique_ngrams() as u64;
        log::info!(
            "n={n}: accuracy {:.4}, {} unique n-grams",
            eval.report.accuracy,
            eval.report.unique_ngrams
        );
        reports.push(eval.report);
        per_sequence.push(eval.per_sequence);
    }
    let (wins, ties) = multi_wins(&per_sequence)?;
    Ok(SweepResult {
        reports,
        per_sequence,
        wins,
        ties,
    })
}

pub const REPORT_HEADER: &str =
    "dataset,model,n,accuracy,correct,total,unique_ngrams,train_s,infer_s";

/// One CSV row per report under [`REPORT_HEADER`].
pub fn write_report_csv(
    reports: &[EvalReport],
    w: &mut (impl Write + ?Sized),
) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{:.6},{},{},{},{:.3},{:.3}",
            r.dataset_id,
            r.model_name,
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.accuracy,
            r.correct,
            r.total_predictions,
            r.unique_ngrams,
            r.train_seconds,
            r.infer_seconds
        )?;
    }
    Ok(())
}

/// Transposed table: one column per window size, one row per metric.
pub fn render_sweep_table(result: &SweepResult) -> String {
    let mut rows: Vec<(String, Vec<String>)> = vec![
        (
            "sliding window size n".into(),
            result
                .reports
                .iter()
                .map(|r| r.n.map(|n| n.to_string()).unwrap_or_default())
                .collect(),
        ),
        (
            "N-Gram accuracy in test".into(),
            result
                .reports
                .iter()
                .map(|r| format!("{:.3}", r.accuracy))
                .collect(),
        ),
        (
            format!("Wins in test data (tie = {})", result.ties),
            result.wins.iter().map(|w| w.to_string()).collect(),
        ),
        (
            "Training time (s)".into(),
            result
                .reports
                .iter()
                .map(|r| format!("{:.2}", r.train_seconds))
                .collect(),
        ),
        (
            "Inference time (s)".into(),
            result
                .reports
                .iter()
                .map(|r| format!("{:.2}", r.infer_seconds))
                .collect(),
        ),
        (
            "n-grams (unique)".into(),
            result
                .reports
                .iter()
                .map(|r| r.unique_ngrams.to_string())
                .collect(),
        ),
    ];
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let cols = result.reports.len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|(_, v)| v[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (label, values) in rows.iter_mut() {
        out.push_str(&format!("{label:<label_width$}"));
        for (v, w) in values.iter().zip(&widths) {
            out.push_str(&format!(" | {v:>w$}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(id: &str, ids: &[u32]) -> EventSequence {
        EventSequence::normal(id, ids)
    }

    fn w(n: usize) -> WindowSize {
        WindowSize::new(n).unwrap()
    }

    #[test]
    fn perfect_accuracy_on_memorized_sequence() {
        let data = vec![seq("a", &[0, 1])];
        let m = NGramModel::train(&data, w(2));
        let eval = accuracy(&m, &data, "t").unwrap();
        assert_eq!(eval.report.total_predictions, 3);
        assert_eq!(eval.report.accuracy, 1.0);
    }

    #[test]
    fn empty_test_set_has_no_predictions() {
        let m = NGramModel::train(&[seq("a", &[0])], w(2));
        assert!(matches!(accuracy(&m, &[], "t"), Err(Error::NoPredictions)));
        assert!(matches!(
            dummy_accuracy(&[seq("a", &[0])], &[], "t"),
            Err(Error::NoPredictions)
        ));
    }

    #[test]
    fn dummy_baseline() {
        let train = vec![seq("a", &[0]), seq("b", &[0])];
        // Counts: event 0 twice, EoS twice; tie goes to the smaller id.
        let dummy = DummyPredictor::fit(&train).unwrap();
        assert_eq!(dummy.event, EventId::new(0));
        let eval = dummy_accuracy(&train, &[seq("t", &[0])], "t").unwrap();
        assert_eq!(eval.report.accuracy, 0.5);
        assert_eq!(eval.report.n, None);

        let m = NGramModel::train(&train, w(3));
        assert_eq!(DummyPredictor::from_model(&m).unwrap(), dummy);
        assert!(DummyPredictor::fit(&[]).is_err());
    }

    #[test]
    fn dummy_counts_eos_as_candidate() {
        let train = vec![seq("a", &[]), seq("b", &[]), seq("c", &[1])];
        assert_eq!(DummyPredictor::fit(&train).unwrap().event, EventId::EOS);
    }

    #[test]
    fn comparison_outcomes() {
        let acc = |id: &str, c, t| SequenceAccuracy {
            session_id: id.into(),
            correct: c,
            total: t,
        };
        let a = vec![acc("x", 2, 4), acc("y", 3, 4), acc("z", 1, 4)];
        let b = vec![acc("x", 2, 4), acc("y", 1, 4), acc("z", 2, 4)];
        let r = compare(&a, &b).unwrap();
        assert_eq!((r.wins_a, r.wins_b, r.ties), (1, 1, 1));
        let swapped = compare(&b, &a).unwrap();
        assert_eq!((swapped.wins_a, swapped.wins_b, swapped.ties), (1, 1, 1));
        assert_eq!(swapped.per_sequence[1].outcome, Outcome::WinB);

        let same = compare(&a, &a).unwrap();
        assert_eq!(same.ties, 3);

        assert!(compare(&a, &b[..2]).is_err());
        let renamed = vec![acc("q", 2, 4), acc("y", 1, 4), acc("z", 2, 4)];
        assert!(compare(&a, &renamed).is_err());

        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "session_id,acc_a,acc_b,outcome\nx,0.500000,0.500000,tie\ny,0.750000,0.250000,a\nz,0.250000,0.500000,b\n"
        );
    }

    #[test]
    fn exact_ratio_ties() {
        let a = SequenceAccuracy {
            session_id: "s".into(),
            correct: 1,
            total: 3,
        };
        let b = SequenceAccuracy {
            session_id: "s".into(),
            correct: 2,
            total: 6,
        };
        assert_eq!(a.cmp_exact(&b), Ordering::Equal);
    }

    #[test]
    fn multi_way_wins() {
        let acc = |c| SequenceAccuracy {
            session_id: "s".into(),
            correct: c,
            total: 10,
        };
        let per = vec![
            vec![acc(5), acc(9)],
            vec![acc(7), acc(9)],
            vec![acc(6), acc(1)],
        ];
        let (wins, ties) = multi_wins(&per).unwrap();
        assert_eq!(wins, vec![0, 1, 0]);
        assert_eq!(ties, 1);
    }

    #[test]
    fn predictions_and_regrouping() {
        let data = vec![seq("a", &[0, 1]), seq("b", &[1])];
        let m = NGramModel::train(&data, w(2));
        let rows = predictions(&m, &data).unwrap();
        assert_eq!(rows.len(), 5);
        let regrouped = accuracies_from_predictions(&rows);
        let direct = accuracy(&m, &data, "t").unwrap().per_sequence;
        assert_eq!(regrouped, direct);
    }

    #[test]
    fn sweep_on_identical_sequences() {
        let data: Vec<_> = (0..6)
            .map(|i| seq(&format!("s{i}"), &[3, 1, 4, 0, 5, 9, 2, 6]))
            .collect();
        let result = sweep(&data, &data, 2..=8, "t").unwrap();
        assert_eq!(result.reports.len(), 7);
        for r in &result.reports {
            assert_eq!(r.accuracy, 1.0);
        }
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(sweep(&data, &data, empty, "t").is_err());
        let table = render_sweep_table(&result);
        assert!(table.contains("Wins in test data (tie = 6)"));
    }

    #[test]
    fn report_csv_layout() {
        let data = vec![seq("a", &[0, 1])];
        let result = sweep(&data, &data, 2..=2, "toy").unwrap();
        let mut out = Vec::new();
        write_report_csv(&result.reports, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert!(lines
            .next()
            .unwrap()
            .starts_with("toy,ngram,2,1.000000,3,3,3,"));
    }

    #[test]
    fn time_it_measures_something() {
        let t = time_it(Phase::Train, || (0..1000u64).sum::<u64>());
        assert_eq!(t.value, 499_500);
        assert!(t.seconds >= 0.0 && t.seconds < 1.0);
    }
}
