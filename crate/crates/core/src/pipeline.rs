//! End-to-end helpers: raw HDFS logs straight to event sequences without
//! keeping line text in memory, and corpus summary statistics.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::Result;
use crate::event::{EventId, EventSequence, Label};
use crate::ingest::{group_hdfs_lines, load_hdfs_labels};
use crate::miner::{MinerConfig, TemplateMiner};

/// HDFS sessions mined into event sequences.
#[derive(Debug)]
pub struct ParsedHdfs {
    /// All sessions in order of first appearance, labelled.
    pub sequences: Vec<EventSequence>,
    pub miner: TemplateMiner,
    pub lines_read: u64,
    pub lines_without_session: u64,
    pub unlabeled_sessions: u64,
}

/// Streams the HDFS log once: groups lines by first block id and mines
/// each line as it is read.
pub fn parse_hdfs(log_path: &Path, label_path: &Path, config: MinerConfig) -> Result<ParsedHdfs> {
    let labels = load_hdfs_labels(label_path)?;
    let mut miner = TemplateMiner::new(config)?;
    let mut failure = None;
    let grouped = group_hdfs_lines(log_path, |_, _, text| match miner.parse_line(text) {
        Ok(id) => id,
        Err(e) => {
            failure.get_or_insert(e);
            EventId::OVERFLOW
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut unlabeled = 0;
    let sequences = grouped
        .sessions
        .into_iter()
        .map(|(block, events)| {
            let label = labels.get(&block).copied().unwrap_or_else(|| {
                unlabeled += 1;
                Label::Unlabeled
            });
            EventSequence::new(block, label, events)
        })
        .collect();
    Ok(ParsedHdfs {
        sequences,
        miner,
        lines_read: grouped.lines_read,
        lines_without_session: grouped.lines_without_session,
        unlabeled_sessions: unlabeled,
    })
}

/// Size summary of a set of sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusStats {
    pub sequences: u64,
    pub total_events: u64,
    /// Distinct event ids that occur at least once.
    pub unique_events: u64,
}

impl CorpusStats {
    pub fn of<'a>(sequences: impl IntoIterator<Item = &'a EventSequence>) -> Self {
        let mut count = 0;
        let mut total = 0;
        let mut unique = BTreeSet::new();
        for s in sequences {
            count += 1;
            total += s.events.len() as u64;
            unique.extend(s.events.iter().copied());
        }
        Self {
            sequences: count,
            total_events: total,
            unique_events: unique.len() as u64,
        }
    }

    pub fn mean_length(&self) -> f64 {
        if self.sequences == 0 {
            0.0
        } else {
            self.total_events as f64 / self.sequences as f64
        }
    }
}

/// Sequences carrying `label`.
pub fn with_label(sequences: &[EventSequence], label: Label) -> Vec<EventSequence> {
    sequences
        .iter()
        .filter(|s| s.label == label)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_small_hdfs_log() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("HDFS.log");
        std::fs::write(
            &log,
            "081109 203518 143 INFO dfs.DataNode$DataXceiver: Receiving block blk_-1608 src: /10.250.19.102:54106 dest: /10.250.19.102:50010\n\
             081109 203518 35 INFO dfs.FSNamesystem: BLOCK* NameSystem.allocateBlock: /mnt/hadoop/job.jar. blk_-1608\n\
             081109 203519 143 INFO dfs.DataNode$DataXceiver: Receiving block blk_77 src: /10.250.10.6:40524 dest: /10.250.10.6:50010\n\
             081109 203520 1 INFO dfs.Heartbeat: alive\n\
             081109 203521 145 INFO dfs.DataNode$PacketResponder: PacketResponder 1 for block blk_77 terminating\n",
        )
        .unwrap();
        let labels = dir.path().join("anomaly_label.csv");
        std::fs::write(&labels, "BlockId,Label\nblk_-1608,Normal\nblk_77,Anomaly\n").unwrap();
        let parsed = parse_hdfs(&log, &labels, MinerConfig::hdfs()).unwrap();
        assert_eq!(parsed.sequences.len(), 2);
        assert_eq!(parsed.lines_read, 5);
        assert_eq!(parsed.lines_without_session, 1);
        assert_eq!(parsed.sequences[0].events[0], parsed.sequences[1].events[0]);
        assert_eq!(parsed.miner.len(), 3);

        let normal = with_label(&parsed.sequences, Label::Normal);
        let stats = CorpusStats::of(&normal);
        assert_eq!(
            stats,
            CorpusStats {
                sequences: 1,
                total_events: 2,
                unique_events: 2
            }
        );
        assert_eq!(stats.mean_length(), 2.0);
    }
}
