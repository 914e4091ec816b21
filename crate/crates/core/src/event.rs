//! Event identifiers and labelled event sequences.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Identifier of a mined log template.
///
/// Template ids are dense, starting at 0. The top of the `u32` range is
/// reserved for the padding sentinels and the overflow template used by
/// frozen miners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(u32);

impl EventId {
    /// Start-of-sequence padding event.
    pub const SOS: EventId = EventId(u32::MAX);
    /// End-of-sequence padding event.
    pub const EOS: EventId = EventId(u32::MAX - 1);
    /// Catch-all id handed out by a frozen miner for unseen lines.
    pub const OVERFLOW: EventId = EventId(u32::MAX - 2);

    /// Largest value usable as a template id.
    pub const MAX_TEMPLATE: u32 = u32::MAX - 3;

    pub fn new(value: u32) -> Self {
        debug_assert!(value <= Self::MAX_TEMPLATE, "template id in reserved range");
        EventId(value)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_sentinel(self) -> bool {
        self == Self::SOS || self == Self::EOS
    }

    pub fn is_template(self) -> bool {
        self.0 <= Self::MAX_TEMPLATE
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EventId::SOS => f.write_str("SoS"),
            EventId::EOS => f.write_str("EoS"),
            EventId::OVERFLOW => f.write_str("Overflow"),
            EventId(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for EventId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SoS" => Ok(EventId::SOS),
            "EoS" => Ok(EventId::EOS),
            "Overflow" => Ok(EventId::OVERFLOW),
            _ => {
                let v: u32 = s
                    .parse()
                    .map_err(|_| Error::format(format!("bad event id {s:?}")))?;
                if v > EventId::MAX_TEMPLATE {
                    return Err(Error::format(format!("event id {v} is reserved")));
                }
                Ok(EventId(v))
            }
        }
    }
}

/// Ground-truth label attached to a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Label {
    Normal,
    Anomaly,
    #[default]
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "Normal",
            Label::Anomaly => "Anomaly",
            Label::Unlabeled => "Unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("normal") {
            Ok(Label::Normal)
        } else if s.eq_ignore_ascii_case("anomaly") {
            Ok(Label::Anomaly)
        } else if s.eq_ignore_ascii_case("unlabeled") {
            Ok(Label::Unlabeled)
        } else {
            Err(Error::format(format!("unknown label {s:?}")))
        }
    }
}

/// The parsed events of one test run or session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSequence {
    pub session_id: String,
    pub label: Label,
    pub events: Vec<EventId>,
}

impl EventSequence {
    pub fn new(session_id: impl Into<String>, label: Label, events: Vec<EventId>) -> Self {
        Self {
            session_id: session_id.into(),
            label,
            events,
        }
    }

    /// Shorthand for a normal sequence built from raw template ids.
    pub fn normal(session_id: impl Into<String>, ids: &[u32]) -> Self {
        Self::new(
            session_id,
            Label::Normal,
            ids.iter().copied().map(EventId::new).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
