//! Line-oriented interchange files.
//!
//! Sequence file (`#seqfile v1 vocab=<k>` header, then one sequence per
//! line):
//!
//! ```text
//! #seqfile v1 vocab=3
//! blk_1<TAB>Normal<TAB>0 1 1 2
//! blk_2<TAB>Anomaly<TAB>0 2
//! ```
//!
//! Every id is a template id below `k`; padding sentinels never appear.
//!
//! Prediction file (`session_id,position,actual,predicted` header), one
//! row per scored position, EoS written as `EoS`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::PredictionRow;
use crate::event::{EventId, EventSequence, Label};

pub const SEQFILE_MAGIC: &str = "#seqfile";
pub const SEQFILE_VERSION: &str = "v1";
pub const PREDICTION_HEADER: &str = "session_id,position,actual,predicted";

/// Contents of a sequence file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceFile {
    /// Number of template ids; every event id is below this.
    pub vocab: u32,
    pub sequences: Vec<EventSequence>,
}

impl SequenceFile {
    /// Uses one past the largest id present as the vocabulary size.
    pub fn from_sequences(sequences: Vec<EventSequence>) -> Self {
        let vocab = sequences
            .iter()
            .flat_map(|s| s.events.iter())
            .map(|e| e.value() + 1)
            .max()
            .unwrap_or(0);
        Self { vocab, sequences }
    }

    pub fn write_to(&self, w: &mut (impl Write + ?Sized)) -> Result<()> {
        let io = |e| Error::io("<sequence file>", e);
        writeln!(w, "{SEQFILE_MAGIC} {SEQFILE_VERSION} vocab={}", self.vocab).map_err(io)?;
        for seq in &self.sequences {
            check_session_id(&seq.session_id, &['\t'])?;
            write!(w, "{}\t{}\t", seq.session_id, seq.label).map_err(io)?;
            for (i, e) in seq.events.iter().enumerate() {
                if !e.is_template() || e.value() >= self.vocab {
                    return Err(Error::format(format!(
                        "event {e} in {:?} is outside vocab {}",
                        seq.session_id, self.vocab
                    )));
                }
                if i > 0 {
                    w.write_all(b" ").map_err(io)?;
                }
                write!(w, "{}", e.value()).map_err(io)?;
            }
            w.write_all(b"\n").map_err(io)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io("<sequence file>", e))?
            .ok_or_else(|| Error::format("empty sequence file"))?;
        let vocab = parse_seqfile_header(&header)?;
        let mut sequences = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<sequence file>", e))?;
            if line.is_empty() {
                continue;
            }
            let line_no = i + 2;
            let mut parts = line.splitn(3, '\t');
            let (Some(id), Some(label), Some(events)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::format(format!(
                    "line {line_no}: expected 3 tab-separated fields"
                )));
            };
            let label: Label = label
                .parse()
                .map_err(|e| Error::format(format!("line {line_no}: {e}")))?;
            let events = events
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    let v: u32 = t.parse().map_err(|_| {
                        Error::format(format!("line {line_no}: bad event id {t:?}"))
                    })?;
                    if v >= vocab {
                        return Err(Error::format(format!(
                            "line {line_no}: event id {v} outside vocab {vocab}"
                        )));
                    }
                    Ok(EventId::new(v))
                })
                .collect::<Result<Vec<_>>>()?;
            if !seen.insert(id.to_string()) {
                return Err(Error::format(format!(
                    "line {line_no}: duplicate session {id:?}"
                )));
            }
            sequences.push(EventSequence::new(id, label, events));
        }
        Ok(Self { vocab, sequences })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}

fn parse_seqfile_header(header: &str) -> Result<u32> {
    let mut fields = header.split(' ');
    if fields.next() != Some(SEQFILE_MAGIC) {
        return Err(Error::format("not a sequence file"));
    }
    match fields.next() {
        Some(SEQFILE_VERSION) => {}
        other => {
            return Err(Error::format(format!(
                "unsupported sequence file version {other:?}"
            )))
        }
    }
    let vocab = fields
        .next()
        .and_then(|f| f.strip_prefix("vocab="))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::format("sequence file header lacks vocab=<k>"))?;
    if vocab > EventId::MAX_TEMPLATE {
        return Err(Error::format("vocab too large"));
    }
    if fields.next().is_some() {
        return Err(Error::format("unexpected fields in sequence file header"));
    }
    Ok(vocab)
}

fn check_session_id(id: &str, forbidden: &[char]) -> Result<()> {
    if id.is_empty() || id.contains(['\n', '\r']) || id.contains(forbidden) {
        return Err(Error::format(format!(
            "session id {id:?} cannot be written"
        )));
    }
    Ok(())
}

pub fn write_predictions(rows: &[PredictionRow], w: &mut (impl Write + ?Sized)) -> Result<()> {
    let io = |e| Error::io("<prediction file>", e);
    writeln!(w, "{PREDICTION_HEADER}").map_err(io)?;
    for row in rows {
        check_session_id(&row.session_id, &[','])?;
        writeln!(
            w,
            "{},{},{},{}",
            row.session_id, row.position, row.actual, row.predicted
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn save_predictions(rows: &[PredictionRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_predictions(rows, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(r: impl BufRead) -> Result<Vec<PredictionRow>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("<prediction file>", e))?
        .ok_or_else(|| Error::format("empty prediction file"))?;
    if header.trim_end() != PREDICTION_HEADER {
        return Err(Error::format(format!("bad prediction header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("<prediction file>", e))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        let [session_id, position, actual, predicted] = fields[..] else {
            return Err(Error::format(format!("line {line_no}: expected 4 fields")));
        };
        let position: usize =
            position.parse().ok().filter(|&p| p >= 1).ok_or_else(|| {
                Error::format(format!("line {line_no}: bad position {position:?}"))
            })?;
        let parse = |s: &str| -> Result<EventId> {
            let e: EventId = s
                .parse()
                .map_err(|e| Error::format(format!("line {line_no}: {e}")))?;
            if e == EventId::SOS {
                return Err(Error::format(format!(
                    "line {line_no}: SoS is never predicted"
                )));
            }
            Ok(e)
        };
        rows.push(PredictionRow {
            session_id: session_id.to_string(),
            position,
            actual: parse(actual)?,
            predicted: parse(predicted)?,
        });
    }
    Ok(rows)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(BufReader::new(file))
}

/// Checks that two prediction dumps cover the same positions with the same
/// ground truth.
pub fn check_same_targets(a: &[PredictionRow], b: &[PredictionRow]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::argument(format!(
            "prediction files differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.iter().zip(b) {
        if x.session_id != y.session_id || x.position != y.position || x.actual != y.actual {
            return Err(Error::argument(format!(
                "prediction files disagree at {}:{} vs {}:{}",
                x.session_id, x.position, y.session_id, y.position
            )));
        }
    }
    Ok(())
}
