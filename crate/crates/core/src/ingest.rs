//! Loading raw log corpora into labelled sessions, filtering and splitting.
//!
//! Two layouts are supported: the public HDFS corpus, where sessions are
//! keyed by the first block id (`blk_<digits>` or `blk_-<digits>`) found on
//! each line and labels come from a `BlockId,Label` table, and
//! one-run-per-file directories where every file is one session.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::Label;

/// One line of a raw log file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawLogRecord {
    /// 1-based line number within the source file.
    pub line_no: u64,
    /// Line text without its terminator, lossily decoded as UTF-8.
    pub text: String,
    /// Session token found by the loader, if any.
    pub session_hint: Option<String>,
}

/// A session: the records of one test run, in log order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub session_id: String,
    pub records: Vec<RawLogRecord>,
    pub label: Label,
}

impl Session {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Counters collected while loading and filtering.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Lines read from all sources.
    pub lines_read: u64,
    /// Lines discarded because no session key was found.
    pub lines_without_session: u64,
    /// Sessions whose key was missing from the label table.
    pub unlabeled_sessions: u64,
    /// Sessions removed by `filter_min_length`.
    pub dropped_short: u64,
    /// Files that could not be read, with the error message.
    pub file_errors: Vec<(PathBuf, String)>,
}

/// Sessions plus provenance. Immutable once built.
#[derive(Clone, Debug, Default)]
pub struct LabeledCorpus {
    dataset: String,
    files: Vec<PathBuf>,
    sessions: Vec<Session>,
    stats: IngestStats,
}

impl LabeledCorpus {
    /// Builds a corpus, rejecting duplicate session ids.
    pub fn new(dataset: impl Into<String>, sessions: Vec<Session>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sessions.len());
        for s in &sessions {
            if !seen.insert(s.session_id.as_str()) {
                return Err(Error::argument(format!(
                    "duplicate session id {:?}",
                    s.session_id
                )));
            }
        }
        Ok(Self {
            dataset: dataset.into(),
            files: Vec::new(),
            sessions,
            stats: IngestStats::default(),
        })
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn into_sessions(self) -> Vec<Session> {
        self.sessions
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.sessions.iter().filter(|s| s.label == label).count()
    }

    pub fn normal_count(&self) -> usize {
        self.count_label(Label::Normal)
    }

    pub fn total_records(&self) -> u64 {
        self.sessions.iter().map(|s| s.records.len() as u64).sum()
    }

    /// Keeps only sessions with the given label.
    pub fn with_label(&self, label: Label) -> LabeledCorpus {
        self.derive(
            self.sessions
                .iter()
                .filter(|s| s.label == label)
                .cloned()
                .collect(),
        )
    }

    fn derive(&self, sessions: Vec<Session>) -> LabeledCorpus {
        LabeledCorpus {
            dataset: self.dataset.clone(),
            files: self.files.clone(),
            sessions,
            stats: self.stats.clone(),
        }
    }
}

/// Returns the first block id on the line: `blk_`, an optional `-`, then
/// one or more digits.
pub fn find_block_id(line: &str) -> Option<&str> {
    let bytes = line.as_bytes();
    let mut from = 0;
    while let Some(off) = line[from..].find("blk_") {
        let start = from + off;
        let mut end = start + 4;
        if bytes.get(end) == Some(&b'-') {
            end += 1;
        }
        let digits_start = end;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end > digits_start {
            return Some(&line[start..end]);
        }
        from = start + 4;
    }
    None
}

/// Reads `path` line by line, lossily decoding each line and stripping the
/// terminator. The callback receives the 1-based line number.
pub fn for_each_line(path: &Path, mut f: impl FnMut(u64, &str)) -> Result<u64> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut buf = Vec::with_capacity(512);
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        f(line_no, &String::from_utf8_lossy(&buf));
    }
    Ok(line_no)
}

/// Parses an HDFS label table (`BlockId,Label` header, case-insensitive
/// `Normal` / `Anomaly` values).
pub fn load_hdfs_labels(path: &Path) -> Result<HashMap<String, Label>> {
    let mut labels = HashMap::new();
    let mut bad = None;
    for_each_line(path, |line_no, line| {
        if bad.is_some() || line.trim().is_empty() {
            return;
        }
        if line_no == 1
            && line
                .trim_start()
                .to_ascii_lowercase()
                .starts_with("blockid")
        {
            return;
        }
        match line.split_once(',') {
            Some((block, label)) => match label.parse::<Label>() {
                Ok(l) => {
                    labels.insert(block.trim().to_string(), l);
                }
                Err(e) => bad = Some(format!("{}:{line_no}: {e}", path.display())),
            },
            None => {
                bad = Some(format!(
                    "{}:{line_no}: expected BlockId,Label",
                    path.display()
                ))
            }
        }
    })?;
    match bad {
        Some(msg) => Err(Error::format(msg)),
        None => Ok(labels),
    }
}

/// Sessions grouped from an HDFS log, keyed by first block id, in order of
/// first appearance. Each item is produced by `map` from the line number and
/// text.
#[derive(Debug)]
pub struct GroupedSessions<T> {
    pub sessions: Vec<(String, Vec<T>)>,
    pub lines_read: u64,
    pub lines_without_session: u64,
}

pub fn group_hdfs_lines<T>(
    log_path: &Path,
    mut map: impl FnMut(u64, &str, &str) -> T,
) -> Result<GroupedSessions<T>> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut sessions: Vec<(String, Vec<T>)> = Vec::new();
    let mut without = 0u64;
    let lines_read = for_each_line(log_path, |line_no, line| {
        let Some(block) = find_block_id(line) else {
            without += 1;
            return;
        };
        let item = map(line_no, block, line);
        match index.get(block) {
            Some(&i) => sessions[i].1.push(item),
            None => {
                index.insert(block.to_string(), sessions.len());
                sessions.push((block.to_string(), vec![item]));
            }
        }
    })?;
    Ok(GroupedSessions {
        sessions,
        lines_read,
        lines_without_session: without,
    })
}

/// Loads the public HDFS corpus: sessions by block id, labels joined from
/// the label table. Blocks missing from the table become `Unlabeled`.
pub fn load_hdfs(log_path: &Path, label_path: &Path) -> Result<LabeledCorpus> {
    let labels = load_hdfs_labels(label_path)?;
    let grouped = group_hdfs_lines(log_path, |line_no, block, text| RawLogRecord {
        line_no,
        text: text.to_string(),
        session_hint: Some(block.to_string()),
    })?;
    let mut unlabeled = 0u64;
    let sessions = grouped
        .sessions
        .into_iter()
        .map(|(session_id, records)| {
            let label = labels.get(&session_id).copied().unwrap_or_else(|| {
                unlabeled += 1;
                Label::Unlabeled
            });
            Session {
                session_id,
                records,
                label,
            }
        })
        .collect();
    if unlabeled > 0 {
        log::warn!("{unlabeled} HDFS blocks have no entry in the label table");
    }
    Ok(LabeledCorpus {
        dataset: "HDFS".to_string(),
        files: vec![log_path.to_path_buf(), label_path.to_path_buf()],
        sessions,
        stats: IngestStats {
            lines_read: grouped.lines_read,
            lines_without_session: grouped.lines_without_session,
            unlabeled_sessions: unlabeled,
            ..IngestStats::default()
        },
    })
}

/// Loads a directory where each regular file is one session. Files are
/// visited in name order; `label_fn` maps a file name to its label.
/// Unreadable files are recorded in the stats and skipped.
pub fn load_per_file(dir: &Path, label_fn: impl Fn(&str) -> Label + Sync) -> Result<LabeledCorpus> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();

    let loaded: Vec<(PathBuf, std::result::Result<Vec<RawLogRecord>, String>)> = paths
        .par_iter()
        .map(|path| (path.clone(), read_records(path)))
        .collect();

    let mut stats = IngestStats::default();
    let mut sessions = Vec::with_capacity(loaded.len());
    let mut files = Vec::with_capacity(loaded.len());
    for (path, result) in loaded {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match result {
            Ok(records) => {
                stats.lines_read += records.len() as u64;
                sessions.push(Session {
                    label: label_fn(&name),
                    session_id: name,
                    records,
                });
                files.push(path);
            }
            Err(msg) => {
                log::warn!("skipping {}: {msg}", path.display());
                stats.file_errors.push((path, msg));
            }
        }
    }
    Ok(LabeledCorpus {
        dataset: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
        files,
        sessions,
        stats,
    })
}

fn read_records(path: &Path) -> std::result::Result<Vec<RawLogRecord>, String> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| e.to_string())?;
    let mut records = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = raw.strip_suffix(b"\r").unwrap_or(raw);
        records.push(RawLogRecord {
            line_no: i as u64 + 1,
            text: String::from_utf8_lossy(line).into_owned(),
            session_hint: None,
        });
    }
    // A trailing newline does not start another line.
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        records.pop();
    }
    Ok(records)
}

/// Keeps sessions with at least `min_events` records.
pub fn filter_min_length(corpus: &LabeledCorpus, min_events: usize) -> LabeledCorpus {
    let kept: Vec<Session> = corpus
        .sessions
        .iter()
        .filter(|s| s.records.len() >= min_events)
        .cloned()
        .collect();
    let dropped = (corpus.sessions.len() - kept.len()) as u64;
    let mut out = corpus.derive(kept);
    out.stats.dropped_short += dropped;
    out
}

/// Sequence-level train/test split parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    /// Fraction of sequences assigned to training, in (0, 1).
    pub ratio: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::argument(format!(
                "split ratio must be in (0, 1), got {ratio}"
            )));
        }
        Ok(Self { ratio, seed })
    }

    /// Number of training items out of `n`.
    pub fn train_len(&self, n: usize) -> usize {
        (self.ratio * n as f64).round() as usize
    }

    /// Seeded Fisher-Yates shuffle of `0..n`, cut into (train, test)
    /// index lists. Each side is returned in ascending order.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        Self::new(self.ratio, self.seed)?;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        order.shuffle(&mut rng);
        let mut test = order.split_off(self.train_len(n));
        order.sort_unstable();
        test.sort_unstable();
        Ok((order, test))
    }

    /// Partitions `items` into (train, test), keeping their relative order.
    pub fn partition<T>(&self, items: Vec<T>) -> Result<(Vec<T>, Vec<T>)> {
        let (train_idx, _) = self.indices(items.len())?;
        let mut is_train = vec![false; items.len()];
        for i in train_idx {
            is_train[i] = true;
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (item, t) in items.into_iter().zip(is_train) {
            if t {
                train.push(item);
            } else {
                test.push(item);
            }
        }
        Ok((train, test))
    }
}

/// Splits a corpus of normal sessions into (train, test).
pub fn split(corpus: &LabeledCorpus, spec: SplitSpec) -> Result<(LabeledCorpus, LabeledCorpus)> {
    if let Some(s) = corpus.sessions.iter().find(|s| s.label != Label::Normal) {
        return Err(Error::argument(format!(
            "split expects only Normal sessions, {:?} is {}",
            s.session_id, s.label
        )));
    }
    let (train, test) = spec.partition(corpus.sessions.clone())?;
    Ok((corpus.derive(train), corpus.derive(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn session(id: &str, len: usize, label: Label) -> Session {
        Session {
            session_id: id.to_string(),
            records: (0..len)
                .map(|i| RawLogRecord {
                    line_no: i as u64 + 1,
                    text: format!("line {i}"),
                    session_hint: None,
                })
                .collect(),
            label,
        }
    }

    fn write(dir: &Path, name: &str, contents: &[u8]) -> PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(contents).unwrap();
        p
    }

    #[test]
    fn block_id_extraction() {
        assert_eq!(
            find_block_id("Receiving block blk_-1608999687919862906 src"),
            Some("blk_-1608999687919862906")
        );
        assert_eq!(find_block_id("blk_7 and blk_8"), Some("blk_7"));
        assert_eq!(find_block_id("blk_x blk_- blk_12"), Some("blk_12"));
        assert_eq!(find_block_id("no block here"), None);
        assert_eq!(find_block_id("trailing blk_"), None);
    }

    #[test]
    fn hdfs_single_session() {
        let dir = tempfile::tempdir().unwrap();
        let log = write(dir.path(), "log", b"a blk_1 x\nb blk_1 y\n");
        let labels = write(dir.path(), "labels.csv", b"BlockId,Label\nblk_1,Anomaly\n");
        let corpus = load_hdfs(&log, &labels).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.sessions()[0].records.len(), 2);
        assert_eq!(corpus.sessions()[0].label, Label::Anomaly);
    }

    #[test]
    fn hdfs_first_block_id_wins_and_unmatched_lines_are_dropped() {
        // Hand-enumerated assignment:
        //   1 -> blk_5, 2 -> blk_-3 (first of two), 3 -> dropped,
        //   4 -> blk_5 (first of two), 5 -> blk_9
        let dir = tempfile::tempdir().unwrap();
        let log = write(
            dir.path(),
            "log",
            b"open blk_5\nmove blk_-3 to blk_5\nheartbeat\nack blk_5 blk_9\nclose blk_9\n",
        );
        let labels = write(
            dir.path(),
            "labels.csv",
            b"BlockId,Label\nblk_5,normal\nblk_-3,ANOMALY\n",
        );
        let corpus = load_hdfs(&log, &labels).unwrap();
        let got: Vec<(&str, Vec<u64>, Label)> = corpus
            .sessions()
            .iter()
            .map(|s| {
                (
                    s.session_id.as_str(),
                    s.records.iter().map(|r| r.line_no).collect(),
                    s.label,
                )
            })
            .collect();
        assert_eq!(
            got,
            vec![
                ("blk_5", vec![1, 4], Label::Normal),
                ("blk_-3", vec![2], Label::Anomaly),
                ("blk_9", vec![5], Label::Unlabeled),
            ]
        );
        assert_eq!(corpus.stats().lines_without_session, 1);
        assert_eq!(corpus.stats().unlabeled_sessions, 1);
        assert_eq!(corpus.stats().lines_read, 5);
    }

    #[test]
    fn hdfs_missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write(dir.path(), "labels.csv", b"BlockId,Label\n");
        let err = load_hdfs(&dir.path().join("nope"), &labels).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        let err = load_hdfs(&labels, &dir.path().join("nope")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let log = write(dir.path(), "log", b"bad \xff byte blk_1\r\n");
        let labels = write(dir.path(), "labels.csv", b"BlockId,Label\nblk_1,Normal\n");
        let corpus = load_hdfs(&log, &labels).unwrap();
        let text = &corpus.sessions()[0].records[0].text;
        assert!(text.contains('\u{FFFD}'));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn per_file_loading() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.log", b"one\ntwo\nthree\n");
        write(dir.path(), "b.log", b"");
        let corpus = load_per_file(dir.path(), |_| Label::Normal).unwrap();
        let lens: Vec<usize> = corpus.sessions().iter().map(Session::len).collect();
        assert_eq!(lens, vec![3, 0]);
        assert_eq!(corpus.sessions()[0].session_id, "a.log");
        assert_eq!(corpus.normal_count(), 2);
    }

    #[test]
    fn per_file_without_trailing_newline() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.log", b"one\ntwo");
        let corpus = load_per_file(dir.path(), |_| Label::Normal).unwrap();
        assert_eq!(corpus.sessions()[0].len(), 2);
    }

    #[test]
    fn per_file_empty_dir_and_label_rule() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_per_file(dir.path(), |_| Label::Normal)
            .unwrap()
            .is_empty());

        for i in 0..275 {
            let name = if i == 17 || i == 201 {
                format!("run{i:03}_FAIL.log")
            } else {
                format!("run{i:03}.log")
            };
            write(dir.path(), &name, b"x\n");
        }
        let corpus = load_per_file(dir.path(), |name| {
            if name.contains("FAIL") {
                Label::Anomaly
            } else {
                Label::Normal
            }
        })
        .unwrap();
        assert_eq!(corpus.len(), 275);
        assert_eq!(corpus.count_label(Label::Anomaly), 2);
    }

    #[test]
    fn min_length_filter() {
        let corpus = LabeledCorpus::new(
            "t",
            vec![
                session("a", 5, Label::Normal),
                session("b", 10, Label::Normal),
                session("c", 12, Label::Normal),
            ],
        )
        .unwrap();
        let kept = filter_min_length(&corpus, 10);
        let lens: Vec<usize> = kept.sessions().iter().map(Session::len).collect();
        assert_eq!(lens, vec![10, 12]);
        assert_eq!(kept.stats().dropped_short, 1);
        assert_eq!(filter_min_length(&corpus, 0).len(), 3);
        assert_eq!(filter_min_length(&kept, 10).sessions(), kept.sessions());
    }

    #[test]
    fn duplicate_session_ids_rejected() {
        let err = LabeledCorpus::new(
            "t",
            vec![
                session("a", 1, Label::Normal),
                session("a", 2, Label::Normal),
            ],
        );
        assert!(err.is_err());
    }

    #[test]
    fn split_partitions_deterministically() {
        let corpus = LabeledCorpus::new(
            "t",
            (0..4)
                .map(|i| session(&format!("s{i}"), i, Label::Normal))
                .collect(),
        )
        .unwrap();
        let spec = SplitSpec::new(0.5, 7).unwrap();
        let (train, test) = split(&corpus, spec).unwrap();
        assert_eq!((train.len(), test.len()), (2, 2));
        let mut all: Vec<&str> = train
            .sessions()
            .iter()
            .chain(test.sessions())
            .map(|s| s.session_id.as_str())
            .collect();
        all.sort();
        assert_eq!(all, vec!["s0", "s1", "s2", "s3"]);

        let (train2, test2) = split(&corpus, spec).unwrap();
        assert_eq!(train.sessions(), train2.sessions());
        assert_eq!(test.sessions(), test2.sessions());
    }

    #[test]
    fn split_hundred_in_half() {
        let (train, test) = SplitSpec::new(0.5, 1)
            .unwrap()
            .partition((0..100).collect::<Vec<_>>())
            .unwrap();
        assert_eq!((train.len(), test.len()), (50, 50));
    }

    #[test]
    fn split_rejects_bad_ratio_and_non_normal() {
        assert!(SplitSpec::new(0.0, 1).is_err());
        assert!(SplitSpec::new(1.0, 1).is_err());
        assert!(SplitSpec::new(f64::NAN, 1).is_err());
        let bad = SplitSpec {
            ratio: 1.5,
            seed: 0,
        };
        assert!(bad.partition(vec![1, 2]).is_err());

        let corpus = LabeledCorpus::new("t", vec![session("a", 1, Label::Anomaly)]).unwrap();
        assert!(split(&corpus, SplitSpec::new(0.5, 0).unwrap()).is_err());
    }
}
