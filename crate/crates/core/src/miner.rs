//! Online log template mining with a fixed-depth parse tree.
//!
//! Lines are masked, split on whitespace and routed through the tree:
//! first by token count, then by up to `tree_depth - 3` leading tokens.
//! Tokens containing digits route to the wildcard child, as does any token
//! arriving at a node that already holds `max_children` children. At the
//! leaf the line is compared with each candidate template; the most similar
//! one wins if its similarity reaches `similarity_threshold`, otherwise a
//! new template is created.
//!
//! ```text
//!            root
//!             |
//!          len = 3
//!          /      \
//!      "open"     <*>
//!        |         |
//!  [open camera <*>]  [<*> started ok]
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use regex::Regex;

use crate::error::{Error, Result};
use crate::event::{EventId, EventSequence};
use crate::ingest::LabeledCorpus;

const WILDCARD: &str = "<*>";
const CATALOG_MAGIC: &str = "#catalog";
const CATALOG_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Literal(String),
    Wildcard,
}

impl Token {
    fn as_str(&self) -> &str {
        match self {
            Token::Literal(s) => s,
            Token::Wildcard => WILDCARD,
        }
    }

    fn parse(s: &str) -> Token {
        if s == WILDCARD {
            Token::Wildcard
        } else {
            Token::Literal(s.to_string())
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A mined template. Lines that are empty after masking share one
/// template whose token list is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub id: EventId,
    pub tokens: Vec<Token>,
    pub match_count: u64,
}

impl Template {
    /// Tokens joined by single spaces, wildcards as `<*>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t.as_str());
        }
        out
    }

    fn similarity(&self, tokens: &[&str]) -> f64 {
        if tokens.is_empty() {
            return 1.0;
        }
        let same = self
            .tokens
            .iter()
            .zip(tokens)
            .filter(|(t, s)| match t {
                Token::Wildcard => true,
                Token::Literal(l) => l == *s,
            })
            .count();
        same as f64 / tokens.len() as f64
    }

    fn absorb(&mut self, tokens: &[&str]) {
        for (t, s) in self.tokens.iter_mut().zip(tokens) {
            if let Token::Literal(l) = t {
                if l != s {
                    *t = Token::Wildcard;
                }
            }
        }
        self.match_count += 1;
    }
}

/// Regex replacement applied to a line before tokenization.
#[derive(Clone, Debug)]
pub struct Mask {
    pattern: Regex,
    replacement: String,
}

impl Mask {
    pub fn new(pattern: &str, replacement: &str) -> Result<Self> {
        let pattern = Regex::new(pattern)
            .map_err(|e| Error::argument(format!("bad mask pattern {pattern:?}: {e}")))?;
        Ok(Self {
            pattern,
            replacement: replacement.to_string(),
        })
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn replacement(&self) -> &str {
        &self.replacement
    }
}

impl PartialEq for Mask {
    fn eq(&self, other: &Self) -> bool {
        self.pattern.as_str() == other.pattern.as_str() && self.replacement == other.replacement
    }
}

/// What a frozen miner does with a line no template matches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UnknownLinePolicy {
    /// Map to [`EventId::OVERFLOW`].
    #[default]
    Overflow,
    /// Return [`Error::UnknownLine`].
    Reject,
}

impl UnknownLinePolicy {
    fn as_str(self) -> &'static str {
        match self {
            UnknownLinePolicy::Overflow => "overflow",
            UnknownLinePolicy::Reject => "reject",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinerConfig {
    /// Tree depth counting the root and leaf levels; at least 3.
    pub tree_depth: usize,
    /// Minimum similarity in (0, 1] for a line to join a template.
    pub similarity_threshold: f64,
    /// Maximum children per inner node; at least 2.
    pub max_children: usize,
    /// Applied in order before tokenization.
    pub masks: Vec<Mask>,
    pub unknown_lines: UnknownLinePolicy,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            tree_depth: 4,
            similarity_threshold: 0.4,
            max_children: 100,
            masks: Vec::new(),
            unknown_lines: UnknownLinePolicy::default(),
        }
    }
}

impl MinerConfig {
    /// Defaults plus masks for HDFS block ids, IPv4 addresses (with
    /// optional port) and bare integers.
    pub fn hdfs() -> Self {
        Self {
            masks: vec![
                Mask::new(r"blk_-?\d+", "<BLK>").expect("static pattern"),
                Mask::new(r"/?(?:\d{1,3}\.){3}\d{1,3}(?::\d+)?", "<IP>").expect("static pattern"),
                Mask::new(r"\b\d+\b", "<NUM>").expect("static pattern"),
            ],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tree_depth < 3 {
            return Err(Error::argument("tree_depth must be at least 3"));
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(Error::argument("similarity_threshold must be in (0, 1]"));
        }
        if self.max_children < 2 {
            return Err(Error::argument("max_children must be at least 2"));
        }
        Ok(())
    }

    fn token_layers(&self) -> usize {
        self.tree_depth - 3
    }
}

#[derive(Clone, Debug, Default)]
struct Node {
    children: HashMap<String, Node>,
    /// Template indices, in creation order.
    templates: Vec<usize>,
}

/// Fixed-depth parse-tree template miner.
///
/// `parse_line` mutates the tree and needs exclusive access. A frozen
/// miner never creates or updates templates; use [`TemplateMiner::lookup`]
/// from any number of threads.
#[derive(Clone, Debug)]
pub struct TemplateMiner {
    config: MinerConfig,
    templates: Vec<Template>,
    by_length: HashMap<usize, Node>,
    frozen: bool,
}

impl TemplateMiner {
    pub fn new(config: MinerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            templates: Vec::new(),
            by_length: HashMap::new(),
            frozen: false,
        })
    }

    pub fn config(&self) -> &MinerConfig {
        &self.config
    }

    /// Templates in id order.
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Stops template creation; `parse_line` then behaves like `lookup`.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    fn mask<'a>(&self, text: &'a str) -> std::borrow::Cow<'a, str> {
        let mut line = std::borrow::Cow::Borrowed(text);
        for m in &self.config.masks {
            if let std::borrow::Cow::Owned(s) = m.pattern.replace_all(&line, m.replacement.as_str())
            {
                line = std::borrow::Cow::Owned(s);
            }
        }
        line
    }

    /// Maps a raw line to its template id, creating or generalizing
    /// templates as needed.
    pub fn parse_line(&mut self, text: &str) -> Result<EventId> {
        if self.frozen {
            return self.lookup(text);
        }
        let masked = self.mask(text);
        let tokens: Vec<&str> = masked.split_whitespace().collect();
        if let Some(idx) = self.best_match(&tokens) {
            self.templates[idx].absorb(&tokens);
            return Ok(self.templates[idx].id);
        }
        let tokens: Vec<Token> = tokens
            .iter()
            .map(|t| Token::Literal(t.to_string()))
            .collect();
        Ok(self.add_template(tokens, 1))
    }

    /// Read-only parse: the matching template id, or the unknown-line
    /// policy's outcome.
    pub fn lookup(&self, text: &str) -> Result<EventId> {
        let masked = self.mask(text);
        let tokens: Vec<&str> = masked.split_whitespace().collect();
        match self.best_match(&tokens) {
            Some(idx) => Ok(self.templates[idx].id),
            None => match self.config.unknown_lines {
                UnknownLinePolicy::Overflow => Ok(EventId::OVERFLOW),
                UnknownLinePolicy::Reject => Err(Error::UnknownLine(text.to_string())),
            },
        }
    }

    fn leaf(&self, tokens: &[&str]) -> Option<&Node> {
        let mut node = self.by_length.get(&tokens.len())?;
        for token in tokens.iter().take(self.config.token_layers()) {
            node = node
                .children
                .get(*token)
                .or_else(|| node.children.get(WILDCARD))?;
        }
        Some(node)
    }

    fn best_match(&self, tokens: &[&str]) -> Option<usize> {
        let leaf = self.leaf(tokens)?;
        let mut best: Option<(usize, f64)> = None;
        for &idx in &leaf.templates {
            let sim = self.templates[idx].similarity(tokens);
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((idx, sim));
            }
        }
        best.filter(|&(_, sim)| sim >= self.config.similarity_threshold)
            .map(|(idx, _)| idx)
    }

    fn add_template(&mut self, tokens: Vec<Token>, match_count: u64) -> EventId {
        let idx = self.templates.len();
        let id = EventId::new(u32::try_from(idx).expect("template count exceeds u32"));
        let layers = self.config.token_layers();
        let max_children = self.config.max_children;
        let mut node = self.by_length.entry(tokens.len()).or_default();
        for token in tokens.iter().take(layers) {
            let key = route_key(node, token, max_children);
            node = node.children.entry(key).or_default();
        }
        node.templates.push(idx);
        self.templates.push(Template {
            id,
            tokens,
            match_count,
        });
        id
    }

    /// Writes the catalog: a header with version and configuration, one
    /// `#mask` line per mask, then `id<TAB>match_count<TAB>tokens` per
    /// template.
    pub fn save_catalog(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_catalog(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn write_catalog(&self, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(
            w,
            "{CATALOG_MAGIC} {CATALOG_VERSION} tree_depth={} similarity_threshold={} max_children={} unknown_lines={} masks={} templates={}",
            c.tree_depth,
            c.similarity_threshold,
            c.max_children,
            c.unknown_lines.as_str(),
            c.masks.len(),
            self.templates.len()
        )?;
        for m in &c.masks {
            if [m.pattern(), m.replacement()]
                .iter()
                .any(|s| s.contains(['\t', '\n', '\r']))
            {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    "mask contains a tab or line break",
                ));
            }
            writeln!(w, "#mask\t{}\t{}", m.pattern(), m.replacement())?;
        }
        for t in &self.templates {
            writeln!(w, "{}\t{}\t{}", t.id, t.match_count, t.render())?;
        }
        Ok(())
    }

    pub fn load_catalog(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        Self::read_catalog(&text)
    }

    pub fn read_catalog(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format("empty catalog"))?;
        let mut fields = header.split(' ');
        if fields.next() != Some(CATALOG_MAGIC) {
            return Err(Error::format("not a template catalog"));
        }
        match fields.next() {
            Some(CATALOG_VERSION) => {}
            other => {
                return Err(Error::format(format!(
                    "unsupported catalog version {other:?}"
                )))
            }
        }
        let mut config = MinerConfig::default();
        let mut mask_count = 0usize;
        let mut template_count = None;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::format(format!("bad header field {field:?}")))?;
            let bad = || Error::format(format!("bad value for {key}: {value:?}"));
            match key {
                "tree_depth" => config.tree_depth = value.parse().map_err(|_| bad())?,
                "similarity_threshold" => {
                    config.similarity_threshold = value.parse().map_err(|_| bad())?
                }
                "max_children" => config.max_children = value.parse().map_err(|_| bad())?,
                "unknown_lines" => {
                    config.unknown_lines = match value {
                        "overflow" => UnknownLinePolicy::Overflow,
                        "reject" => UnknownLinePolicy::Reject,
                        _ => return Err(bad()),
                    }
                }
                "masks" => mask_count = value.parse().map_err(|_| bad())?,
                "templates" => template_count = Some(value.parse::<usize>().map_err(|_| bad())?),
                _ => return Err(Error::format(format!("unknown header field {key:?}"))),
            }
        }
        let template_count =
            template_count.ok_or_else(|| Error::format("catalog header lacks templates="))?;

        for _ in 0..mask_count {
            let line = lines
                .next()
                .ok_or_else(|| Error::format("catalog truncated in masks"))?;
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some("#mask"), Some(p), Some(r), None) => config
                    .masks
                    .push(Mask::new(p, r).map_err(|e| Error::format(e.to_string()))?),
                _ => return Err(Error::format(format!("bad mask line {line:?}"))),
            }
        }
        config
            .validate()
            .map_err(|e| Error::format(e.to_string()))?;

        let mut miner = TemplateMiner::new(config)?;
        for (expected, line) in (0..template_count).zip(lines.by_ref()) {
            let mut parts = line.splitn(3, '\t');
            let (Some(id), Some(count), Some(tokens)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::format(format!("bad template line {line:?}")));
            };
            let id: u32 = id
                .parse()
                .map_err(|_| Error::format(format!("bad template id {id:?}")))?;
            if id as usize != expected {
                return Err(Error::format(format!(
                    "template ids must be dense: expected {expected}, got {id}"
                )));
            }
            let count: u64 = count
                .parse()
                .map_err(|_| Error::format(format!("bad match count {count:?}")))?;
            let tokens: Vec<Token> = if tokens.is_empty() {
                Vec::new()
            } else {
                tokens.split(' ').map(Token::parse).collect()
            };
            miner.add_template(tokens, count);
        }
        if miner.len() != template_count {
            return Err(Error::format("catalog truncated in templates"));
        }
        if lines.any(|l| !l.is_empty()) {
            return Err(Error::format("trailing data after templates"));
        }
        Ok(miner)
    }
}

/// Child key for `token` when inserting below `node`. Tokens with digits
/// and tokens arriving at a full node go to the wildcard child.
fn route_key(node: &Node, token: &Token, max_children: usize) -> String {
    let literal = match token {
        Token::Wildcard => return WILDCARD.to_string(),
        Token::Literal(s) => s,
    };
    if node.children.contains_key(literal.as_str()) {
        return literal.clone();
    }
    if literal.bytes().any(|b| b.is_ascii_digit()) {
        return WILDCARD.to_string();
    }
    let n = node.children.len();
    let has_wildcard = node.children.contains_key(WILDCARD);
    if has_wildcard {
        if n < max_children {
            literal.clone()
        } else {
            WILDCARD.to_string()
        }
    } else if n + 1 < max_children {
        literal.clone()
    } else {
        WILDCARD.to_string()
    }
}

/// Result of mining a whole corpus.
#[derive(Clone, Debug)]
pub struct ParsedCorpus {
    pub sequences: Vec<EventSequence>,
    pub catalog: Vec<Template>,
}

impl ParsedCorpus {
    pub fn unique_events(&self) -> usize {
        self.catalog.len()
    }

    pub fn total_events(&self) -> u64 {
        self.sequences.iter().map(|s| s.events.len() as u64).sum()
    }
}

/// Mines every record of `corpus` in input order.
pub fn parse_corpus(
    corpus: &LabeledCorpus,
    config: MinerConfig,
) -> Result<(ParsedCorpus, TemplateMiner)> {
    let mut miner = TemplateMiner::new(config)?;
    let mut sequences = Vec::with_capacity(corpus.len());
    for session in corpus.sessions() {
        let events = session
            .records
            .iter()
            .map(|r| miner.parse_line(&r.text))
            .collect::<Result<Vec<_>>>()?;
        sequences.push(EventSequence::new(
            session.session_id.clone(),
            session.label,
            events,
        ));
    }
    Ok((
        ParsedCorpus {
            sequences,
            catalog: miner.templates().to_vec(),
        },
        miner,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Label;
    use crate::ingest::{RawLogRecord, Session};

    fn miner(threshold: f64) -> TemplateMiner {
        TemplateMiner::new(MinerConfig {
            similarity_threshold: threshold,
            ..MinerConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn similar_lines_share_a_template() {
        let mut m = miner(0.5);
        let a = m.parse_line("open camera 1").unwrap();
        let b = m.parse_line("open camera 2").unwrap();
        assert_eq!(a, b);
        assert_eq!(m.templates()[0].render(), "open camera <*>");
        assert_eq!(m.templates()[0].match_count, 2);
    }

    #[test]
    fn below_threshold_creates_new_template() {
        let mut m = miner(0.9);
        let a = m.parse_line("open camera 1").unwrap();
        let b = m.parse_line("open camera 2").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn identical_lines_same_id() {
        let mut m = miner(0.4);
        let a = m.parse_line("service started ok").unwrap();
        let b = m.parse_line("service started ok").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, EventId::new(0));
    }

    #[test]
    fn length_is_a_hard_partition() {
        let mut m = miner(0.1);
        let a = m.parse_line("a b c").unwrap();
        let b = m.parse_line("a b c d").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn empty_lines_get_their_own_template() {
        let mut m = TemplateMiner::new(MinerConfig {
            masks: vec![Mask::new(r"^noise$", "").unwrap()],
            ..MinerConfig::default()
        })
        .unwrap();
        let a = m.parse_line("").unwrap();
        let b = m.parse_line("   ").unwrap();
        let c = m.parse_line("noise").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(m.templates()[0].tokens.is_empty());
        assert_eq!(m.templates()[0].match_count, 3);
    }

    #[test]
    fn masks_apply_in_order() {
        let mut m = TemplateMiner::new(MinerConfig::hdfs()).unwrap();
        let a = m
            .parse_line(
                "Receiving block blk_-160899 src: /10.250.19.102:54106 dest: /10.250.19.102:50010",
            )
            .unwrap();
        let b = m
            .parse_line("Receiving block blk_77 src: /10.0.0.1:1 dest: /10.0.0.2:2")
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(
            m.templates()[0].render(),
            "Receiving block <BLK> src: <IP> dest: <IP>"
        );
    }

    #[test]
    fn digit_tokens_route_to_wildcard_child() {
        let mut m = TemplateMiner::new(MinerConfig {
            similarity_threshold: 0.5,
            ..MinerConfig::default()
        })
        .unwrap();
        let a = m.parse_line("123 started ok").unwrap();
        let b = m.parse_line("456 started ok").unwrap();
        assert_eq!(a, b);
        assert_eq!(m.templates()[0].render(), "<*> started ok");
    }

    #[test]
    fn max_children_overflow_goes_to_wildcard() {
        let mut m = TemplateMiner::new(MinerConfig {
            max_children: 2,
            similarity_threshold: 0.3,
            ..MinerConfig::default()
        })
        .unwrap();
        m.parse_line("alpha x y").unwrap();
        let b = m.parse_line("beta x y").unwrap();
        let c = m.parse_line("gamma x y").unwrap();
        // "beta" fills the node, so both later first tokens share the
        // wildcard branch and its template.
        assert_eq!(b, c);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn frozen_policies() {
        let mut m = miner(0.5);
        m.parse_line("known line here").unwrap();
        m.freeze();
        assert_eq!(m.parse_line("known line there").unwrap(), EventId::new(0));
        assert_eq!(
            m.parse_line("completely other thing").unwrap(),
            EventId::OVERFLOW
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m.templates()[0].match_count, 1);

        let mut strict = TemplateMiner::new(MinerConfig {
            unknown_lines: UnknownLinePolicy::Reject,
            ..MinerConfig::default()
        })
        .unwrap();
        strict.freeze();
        assert!(matches!(strict.lookup("x"), Err(Error::UnknownLine(_))));
    }

    #[test]
    fn config_validation() {
        for bad in [
            MinerConfig {
                tree_depth: 2,
                ..MinerConfig::default()
            },
            MinerConfig {
                similarity_threshold: 0.0,
                ..MinerConfig::default()
            },
            MinerConfig {
                similarity_threshold: 1.1,
                ..MinerConfig::default()
            },
            MinerConfig {
                max_children: 1,
                ..MinerConfig::default()
            },
        ] {
            assert!(TemplateMiner::new(bad).is_err());
        }
        assert!(Mask::new("(", "x").is_err());
    }

    #[test]
    fn catalog_round_trip() {
        let mut m = TemplateMiner::new(MinerConfig::hdfs()).unwrap();
        for line in [
            "open camera 1",
            "open camera 2",
            "",
            "close blk_3 now",
            "x y",
        ] {
            m.parse_line(line).unwrap();
        }
        let mut bytes = Vec::new();
        m.write_catalog(&mut bytes).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let mut loaded = TemplateMiner::read_catalog(&text).unwrap();
        assert_eq!(loaded.templates(), m.templates());
        assert_eq!(loaded.config(), m.config());
        let mut again = Vec::new();
        loaded.write_catalog(&mut again).unwrap();
        assert_eq!(again, bytes);
        assert_eq!(loaded.parse_line("open camera 9").unwrap(), EventId::new(0));
    }

    #[test]
    fn empty_catalog_round_trip() {
        let m = miner(0.4);
        let mut bytes = Vec::new();
        m.write_catalog(&mut bytes).unwrap();
        let mut loaded = TemplateMiner::read_catalog(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(loaded.parse_line("first").unwrap(), EventId::new(0));
    }

    #[test]
    fn catalog_format_errors() {
        assert!(TemplateMiner::read_catalog("").is_err());
        assert!(TemplateMiner::read_catalog("#catalog v9 templates=0").is_err());
        assert!(TemplateMiner::read_catalog("#seqfile v1").is_err());
        assert!(TemplateMiner::read_catalog("#catalog v1 templates=2\n0\t1\ta\n").is_err());
        assert!(TemplateMiner::read_catalog("#catalog v1 templates=1\n3\t1\ta\n").is_err());
        assert!(TemplateMiner::read_catalog("#catalog v1 templates=1\n0\tx\ta\n").is_err());
        assert!(TemplateMiner::read_catalog("#catalog v1 bogus=1 templates=0").is_err());
        assert!(TemplateMiner::read_catalog("#catalog v1 tree_depth=1 templates=0").is_err());
    }

    #[test]
    fn parse_corpus_maps_every_record() {
        let session = |id: &str, lines: &[&str]| Session {
            session_id: id.to_string(),
            records: lines
                .iter()
                .enumerate()
                .map(|(i, t)| RawLogRecord {
                    line_no: i as u64 + 1,
                    text: t.to_string(),
                    session_hint: None,
                })
                .collect(),
            label: Label::Normal,
        };
        let corpus = LabeledCorpus::new(
            "t",
            vec![
                session("a", &["start 1", "work", "stop 1"]),
                session("b", &["start 2", "stop 2"]),
            ],
        )
        .unwrap();
        let (parsed, _) = parse_corpus(&corpus, MinerConfig::default()).unwrap();
        assert_eq!(parsed.total_events(), 5);
        assert_eq!(parsed.unique_events(), 3);
        assert_eq!(
            parsed.sequences[1].events,
            parsed.sequences[0].events[..1]
                .iter()
                .chain(&parsed.sequences[0].events[2..])
                .copied()
                .collect::<Vec<_>>()
        );

        let (empty, _) = parse_corpus(&LabeledCorpus::default(), MinerConfig::default()).unwrap();
        assert!(empty.sequences.is_empty() && empty.catalog.is_empty());
    }
}
