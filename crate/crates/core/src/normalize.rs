//! Tweet normalization cascade.
//!
//! Raw tweet text goes through a fixed sequence of rewrites before it reaches
//! a classifier: entity stripping, hashtag unwrapping, four table-driven
//! rewrites (emoticons, emoji, slang, contractions) and a final noise pass
//! that leaves only lowercase alphanumeric tokens separated by single spaces.
//!
//! Rewrite tables are data, loaded from tab-separated files (see
//! [`RewriteTable::parse`]). A [`RewriteTables`] set is cross-validated so that
//! running the cascade on already-normalized text is a no-op.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanTweet {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub tokens: Vec<String>,
}

impl CleanTweet {
    /// True when nothing survived the cascade. Such tweets are kept and flagged.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewriteKind {
    Emoticon,
    Emoji,
    Slang,
    Contraction,
}

impl RewriteKind {
    pub const ALL: [RewriteKind; 4] = [
        RewriteKind::Emoticon,
        RewriteKind::Emoji,
        RewriteKind::Slang,
        RewriteKind::Contraction,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            RewriteKind::Emoticon => "emoticons.tsv",
            RewriteKind::Emoji => "emoji.tsv",
            RewriteKind::Slang => "slang.tsv",
            RewriteKind::Contraction => "contractions.tsv",
        }
    }

    /// Slang and contractions are words and match regardless of case.
    fn is_word_table(self) -> bool {
        matches!(self, RewriteKind::Slang | RewriteKind::Contraction)
    }

    /// Emoji sequences are matched anywhere, even glued to a word.
    fn needs_boundaries(self) -> bool {
        !matches!(self, RewriteKind::Emoji)
    }
}

impl fmt::Display for RewriteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RewriteKind::Emoticon => "emoticon",
            RewriteKind::Emoji => "emoji",
            RewriteKind::Slang => "slang",
            RewriteKind::Contraction => "contraction",
        };
        f.write_str(name)
    }
}

/// An ordered pattern → phrase table with a longest-match-first index.
#[derive(Debug, Clone)]
pub struct RewriteTable {
    kind: RewriteKind,
    entries: Vec<(String, String)>,
    // Folded pattern characters, parallel to `entries`.
    folded: Vec<Vec<char>>,
    // First folded char → entry indices, longest pattern first.
    index: HashMap<char, Vec<usize>>,
}

impl RewriteTable {
    pub fn new(kind: RewriteKind, entries: Vec<(String, String)>) -> Result<Self> {
        Self::build(kind, entries, &kind.to_string())
    }

    /// Parses the TSV table format: one `pattern<TAB>replacement` per line,
    /// blank lines and `#` comment lines ignored. Emoji patterns may be
    /// written literally or as space-separated `U+XXXX` code points.
    pub fn parse(kind: RewriteKind, source: &str, origin: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in source.lines().enumerate() {
            let line_no = n + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern, replacement) = line.split_once('\t').ok_or_else(|| {
                Error::parse(origin, line_no, "expected pattern<TAB>replacement")
            })?;
            if replacement.contains('\t') {
                return Err(Error::parse(origin, line_no, "more than one tab"));
            }
            let pattern = decode_codepoints(pattern)
                .map_err(|msg| Error::parse(origin, line_no, msg))?;
            entries.push((pattern, replacement.trim().to_string()));
        }
        Self::build(kind, entries, origin)
    }

    pub fn load(kind: RewriteKind, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(kind, &source, &path.display().to_string())
    }

    fn build(kind: RewriteKind, entries: Vec<(String, String)>, origin: &str) -> Result<Self> {
        let invalid = |message: String| Error::InvalidTable {
            origin: origin.to_string(),
            message,
        };
        let mut seen = HashSet::new();
        let mut folded = Vec::with_capacity(entries.len());
        for (pattern, replacement) in &entries {
            if pattern.is_empty() || pattern.chars().any(char::is_whitespace) {
                return Err(invalid(format!("pattern {pattern:?} must be a single non-empty token")));
            }
            if !kind.is_word_table() && pattern.chars().all(char::is_alphanumeric) {
                return Err(invalid(format!(
                    "{kind} pattern {pattern:?} must contain a symbol character"
                )));
            }
            if replacement.is_empty()
                || !replacement.chars().all(|c| c == ' ' || c.is_alphanumeric())
            {
                return Err(invalid(format!(
                    "replacement {replacement:?} for {pattern:?} may only hold letters, digits and spaces"
                )));
            }
            let key: Vec<char> = pattern.chars().map(|c| fold(kind, c)).collect();
            if !seen.insert(key.clone()) {
                return Err(invalid(format!("duplicate pattern {pattern:?}")));
            }
            folded.push(key);
        }

        let mut index: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, key) in folded.iter().enumerate() {
            index.entry(key[0]).or_default().push(i);
        }
        for bucket in index.values_mut() {
            bucket.sort_by(|&a, &b| folded[b].len().cmp(&folded[a].len()).then(a.cmp(&b)));
        }

        Ok(Self {
            kind,
            entries,
            folded,
            index,
        })
    }

    pub fn kind(&self) -> RewriteKind {
        self.kind
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn match_at(&self, text: &[char], at: usize) -> Option<usize> {
        let first = fold(self.kind, text[at]);
        let candidates = self.index.get(&first)?;
        candidates.iter().copied().find(|&idx| {
            let pattern = &self.folded[idx];
            let end = at + pattern.len();
            if end > text.len() {
                return false;
            }
            let same = text[at..end]
                .iter()
                .zip(pattern)
                .all(|(&c, &p)| fold(self.kind, c) == p);
            if !same {
                return false;
            }
            if self.kind.needs_boundaries() {
                let starts_word = pattern[0].is_alphanumeric();
                let ends_word = pattern[pattern.len() - 1].is_alphanumeric();
                if starts_word && at > 0 && text[at - 1].is_alphanumeric() {
                    return false;
                }
                if ends_word && end < text.len() && text[end].is_alphanumeric() {
                    return false;
                }
            }
            true
        })
    }
}

fn fold(kind: RewriteKind, c: char) -> char {
    if !kind.is_word_table() {
        return c;
    }
    let c = if c == '\u{2019}' { '\'' } else { c };
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn decode_codepoints(field: &str) -> std::result::Result<String, String> {
    let field = field.trim();
    let parts: Vec<&str> = field.split_whitespace().collect();
    let is_notation = !parts.is_empty()
        && parts
            .iter()
            .all(|p| p.len() > 2 && (p.starts_with("U+") || p.starts_with("u+")));
    if !is_notation {
        return Ok(field.to_string());
    }
    parts
        .iter()
        .map(|p| {
            u32::from_str_radix(&p[2..], 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| format!("bad code point {p:?}"))
        })
        .collect()
}

/// The four tables the cascade needs, validated against each other.
#[derive(Debug, Clone)]
pub struct RewriteTables {
    pub emoticon: RewriteTable,
    pub emoji: RewriteTable,
    pub slang: RewriteTable,
    pub contraction: RewriteTable,
}

impl RewriteTables {
    pub fn new(
        emoticon: RewriteTable,
        emoji: RewriteTable,
        slang: RewriteTable,
        contraction: RewriteTable,
    ) -> Result<Self> {
        let tables = Self {
            emoticon,
            emoji,
            slang,
            contraction,
        };
        for (expected, table) in RewriteKind::ALL.iter().zip(tables.in_order()) {
            if table.kind != *expected {
                return Err(Error::InvalidTable {
                    origin: table.kind.to_string(),
                    message: format!("expected a {expected} table"),
                });
            }
        }
        tables.check_closure()?;
        Ok(tables)
    }

    /// Loads `emoticons.tsv`, `emoji.tsv`, `slang.tsv` and `contractions.tsv`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let load = |kind: RewriteKind| RewriteTable::load(kind, dir.join(kind.file_name()));
        Self::new(
            load(RewriteKind::Emoticon)?,
            load(RewriteKind::Emoji)?,
            load(RewriteKind::Slang)?,
            load(RewriteKind::Contraction)?,
        )
    }

    pub fn in_order(&self) -> [&RewriteTable; 4] {
        [&self.emoticon, &self.emoji, &self.slang, &self.contraction]
    }

    // A phrase word that is itself a word pattern would be rewritten again on
    // a second pass, breaking idempotence.
    fn check_closure(&self) -> Result<()> {
        let word_patterns: HashSet<String> = [&self.slang, &self.contraction]
            .iter()
            .flat_map(|t| t.folded.iter().map(|p| p.iter().collect::<String>()))
            .collect();
        for table in self.in_order() {
            for (pattern, replacement) in &table.entries {
                for word in replacement.split_whitespace() {
                    let key: String = word.chars().map(|c| fold(RewriteKind::Slang, c)).collect();
                    if word_patterns.contains(&key) {
                        return Err(Error::InvalidTable {
                            origin: table.kind.to_string(),
                            message: format!(
                                "replacement for {pattern:?} contains {word:?}, which is itself a rewrite pattern"
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Drops `@mentions`, URLs and standalone `RT` markers.
pub fn strip_entities(text: &str) -> String {
    join_tokens(text.split_whitespace().filter(|t| !is_entity(t)))
}

fn is_entity(token: &str) -> bool {
    if token.starts_with('@') || token == "RT" {
        return true;
    }
    let core = token.trim_start_matches(['(', '[', '<', '"', '\'', '\u{201c}']);
    let lower = core.to_ascii_lowercase();
    ["http://", "https://", "www.", "t.co/"]
        .iter()
        .any(|prefix| lower.starts_with(prefix))
}

/// `#word` becomes `word`; a bare `#` disappears.
pub fn dehash(text: &str) -> String {
    join_tokens(
        text.split_whitespace()
            .map(|t| t.trim_start_matches('#'))
            .filter(|t| !t.is_empty()),
    )
}

fn join_tokens<'a>(tokens: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for token in tokens {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Single left-to-right pass replacing every table match, longest pattern
/// first. Replacement phrases are kept apart from neighbouring text by a
/// space; they are never rescanned.
pub fn rewrite_tokens(text: &str, table: &RewriteTable) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        match table.match_at(&chars, i) {
            Some(idx) => {
                let len = table.folded[idx].len();
                if out.chars().next_back().is_some_and(|c| !c.is_whitespace()) {
                    out.push(' ');
                }
                out.push_str(&table.entries[idx].1);
                if chars.get(i + len).is_some_and(|c| !c.is_whitespace()) {
                    out.push(' ');
                }
                i += len;
            }
            None => {
                out.push(chars[i]);
                i += 1;
            }
        }
    }
    out
}

/// Lowercases, turns every character that is neither a letter nor a digit
/// into a separator, and collapses separators to single spaces.
pub fn strip_noise(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Runs the whole cascade on bare text.
pub fn normalize_text(text: &str, tables: &RewriteTables) -> String {
    let mut text = dehash(&strip_entities(text));
    for table in tables.in_order() {
        text = rewrite_tokens(&text, table);
    }
    strip_noise(&text)
}

pub fn normalize(raw: &RawTweet, tables: &RewriteTables) -> CleanTweet {
    let text = normalize_text(&raw.text, tables);
    let tokens = text.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect();
    CleanTweet {
        id: raw.id.clone(),
        created_at: raw.created_at,
        text,
        tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(kind: RewriteKind, pairs: &[(&str, &str)]) -> RewriteTable {
        RewriteTable::new(
            kind,
            pairs.iter().map(|(p, r)| (p.to_string(), r.to_string())).collect(),
        )
        .unwrap()
    }

    fn small_tables() -> RewriteTables {
        RewriteTables::new(
            table(RewriteKind::Emoticon, &[(":-)", "happy face"), (":)", "happy face"), (":-(", "sad face")]),
            table(RewriteKind::Emoji, &[("\u{1F637}", "face with medical mask"), ("\u{2764}\u{FE0F}", "red heart")]),
            table(RewriteKind::Slang, &[("CUL8R", "see you later"), ("u", "you"), ("b4", "before")]),
            table(RewriteKind::Contraction, &[("can't", "cannot"), ("it's", "it is")]),
        )
        .unwrap()
    }

    #[test]
    fn entities_are_removed() {
        assert_eq!(strip_entities("RT @user: stay safe https://t.co/x"), "stay safe");
        assert_eq!(strip_entities(""), "");
        assert_eq!(strip_entities("no entities here"), "no entities here");
        assert_eq!(strip_entities("see www.example.com and t.co/abc now"), "see and now");
        assert_eq!(strip_entities("(https://x.y) ok"), "ok");
    }

    #[test]
    fn rt_is_case_sensitive_and_standalone() {
        assert_eq!(strip_entities("art RT rt RTs"), "art rt RTs");
    }

    #[test]
    fn hashtags_lose_their_marker() {
        assert_eq!(dehash("#StayHome"), "StayHome");
        assert_eq!(dehash("a #b #c"), "a b c");
        assert_eq!(dehash("plain"), "plain");
        assert_eq!(dehash("lone # sign ##double"), "lone sign double");
    }

    #[test]
    fn slang_rewrite_matches_case_insensitively() {
        let tables = small_tables();
        assert_eq!(rewrite_tokens("CUL8R", &tables.slang), "see you later");
        assert_eq!(rewrite_tokens("cul8r!", &tables.slang), "see you later !");
        // Word boundaries: "u" inside "but" is not slang.
        assert_eq!(rewrite_tokens("but u", &tables.slang), "but you");
    }

    #[test]
    fn emoticon_and_contraction_rewrites() {
        let tables = small_tables();
        assert_eq!(rewrite_tokens(":-) hello", &tables.emoticon), "happy face hello");
        assert_eq!(rewrite_tokens("can't", &tables.contraction), "cannot");
        assert_eq!(rewrite_tokens("Can\u{2019}t stop", &tables.contraction), "cannot stop");
    }

    #[test]
    fn longest_pattern_wins() {
        let tables = small_tables();
        // ":-)" must not be read as ":" followed by "-)" or as ":)".
        assert_eq!(rewrite_tokens("ok:-)", &tables.emoticon), "ok happy face");
    }

    #[test]
    fn emoji_glued_to_words_is_separated() {
        let tables = small_tables();
        assert_eq!(
            rewrite_tokens("stay\u{1F637}safe", &tables.emoji),
            "stay face with medical mask safe"
        );
    }

    #[test]
    fn noise_is_stripped() {
        assert_eq!(strip_noise("Hello,\n\tWorld!!"), "hello world");
        assert_eq!(strip_noise("   "), "");
        assert_eq!(strip_noise("ok"), "ok");
        assert_eq!(strip_noise("Café  naïve—stay-safe"), "café naïve stay safe");
    }

    #[test]
    fn full_cascade() {
        let tables = small_tables();
        let raw = RawTweet {
            id: "1".into(),
            created_at: DateTime::parse_from_rfc3339("2020-03-01T00:00:00Z").unwrap().into(),
            text: "RT @pm: #StayHome CUL8R :-)".into(),
        };
        let clean = normalize(&raw, &tables);
        assert_eq!(clean.tokens, ["stayhome", "see", "you", "later", "happy", "face"]);
        assert_eq!(clean.id, "1");

        let empty = normalize(&RawTweet { text: String::new(), ..raw.clone() }, &tables);
        assert!(empty.tokens.is_empty() && empty.is_empty());

        let plain = normalize(&RawTweet { text: "doctors are heroes".into(), ..raw }, &tables);
        assert_eq!(plain.tokens, ["doctors", "are", "heroes"]);
    }

    #[test]
    fn tsv_parsing() {
        let src = "# comment\n:-)\thappy face\n\nU+1F637\tface with medical mask\n";
        let t = RewriteTable::parse(RewriteKind::Emoji, src, "t.tsv").unwrap();
        assert_eq!(t.entries()[1].0, "\u{1F637}");

        let err = RewriteTable::parse(RewriteKind::Slang, "no tab here\n", "s.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn table_validation() {
        let dup = RewriteTable::new(
            RewriteKind::Slang,
            vec![("LOL".into(), "laughing".into()), ("lol".into(), "laughing".into())],
        );
        assert!(matches!(dup, Err(Error::InvalidTable { .. })));

        let punct = RewriteTable::new(RewriteKind::Slang, vec![("gr8".into(), "great!".into())]);
        assert!(punct.is_err());

        let alnum_emoticon = RewriteTable::new(RewriteKind::Emoticon, vec![("XD".into(), "laughing".into())]);
        assert!(alnum_emoticon.is_err());

        // "you" as a replacement word and a slang pattern would rewrite twice.
        let looping = RewriteTables::new(
            table(RewriteKind::Emoticon, &[(":)", "happy")]),
            table(RewriteKind::Emoji, &[("\u{1F600}", "grin")]),
            table(RewriteKind::Slang, &[("u", "you"), ("you", "thou")]),
            table(RewriteKind::Contraction, &[("can't", "cannot")]),
        );
        assert!(looping.is_err());
    }
}
