//! Plain-text documents split into hash-identified paragraphs.
//!
//! Every newline terminates a paragraph (word-processor semantics) and
//! whitespace-only lines are dropped. All offsets and ranges count Unicode
//! scalar values, not bytes, so a browser client and the engine agree on
//! positions without any re-encoding.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("document has no paragraphs")]
    Empty,
    #[error("offset {offset} is beyond the end of the document ({len} characters)")]
    OffsetOutOfRange { offset: usize, len: usize },
}

/// Half-open interval `[start, end)` of character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    /// Distance from a caret position to the nearest caret position that
    /// touches this range. Carets at `start..=end` are all "in" the range.
    pub fn caret_distance(&self, offset: usize) -> usize {
        if offset < self.start {
            self.start - offset
        } else {
            offset.saturating_sub(self.end)
        }
    }
}

/// SHA-256 of a paragraph's normalized (edge-trimmed) text.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentHash([u8; 32]);

impl ContentHash {
    pub fn of(text: &str) -> Self {
        let digest = Sha256::digest(normalize(text).as_bytes());
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&digest);
        Self(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(s, &mut bytes).ok()?;
        Some(Self(bytes))
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ContentHash {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ContentHash::from_hex(&s).ok_or_else(|| serde::de::Error::custom("invalid content hash"))
    }
}

/// Hashing normalization: edge whitespace is cosmetic, everything else is meaning.
pub fn normalize(text: &str) -> &str {
    text.trim()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub range: CharRange,
    pub text: String,
    pub content_hash: ContentHash,
}

fn is_newline(c: char) -> bool {
    c == '\n' || c == '\r'
}

/// Splits `text` into paragraphs. Ranges index into `text` by character.
pub fn segment(text: &str) -> Vec<Paragraph> {
    let mut paragraphs = Vec::new();
    let mut line = String::new();
    let mut line_start = 0;
    let mut pos = 0;

    let mut flush = |line: &mut String, start: usize, end: usize| {
        if !line.trim().is_empty() {
            paragraphs.push(Paragraph {
                index: paragraphs.len(),
                range: CharRange::new(start, end),
                content_hash: ContentHash::of(line),
                text: std::mem::take(line),
            });
        } else {
            line.clear();
        }
    };

    for c in text.chars() {
        if is_newline(c) {
            flush(&mut line, line_start, pos);
            line_start = pos + 1;
        } else {
            line.push(c);
        }
        pos += 1;
    }
    flush(&mut line, line_start, pos);
    paragraphs
}

/// The paragraph under revision plus its reading-order neighbours.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CursorScope {
    pub paragraph_index: usize,
    /// Preceding, current and succeeding indices, clipped at the document edges.
    pub neighborhood: Vec<usize>,
}

impl CursorScope {
    pub fn centered_on(paragraph_index: usize, paragraph_count: usize) -> Self {
        let first = paragraph_index.saturating_sub(1);
        let last = (paragraph_index + 1).min(paragraph_count.saturating_sub(1));
        Self {
            paragraph_index,
            neighborhood: (first..=last).collect(),
        }
    }

    pub fn preceding(&self) -> Option<usize> {
        self.neighborhood.first().copied().filter(|&i| i < self.paragraph_index)
    }

    pub fn succeeding(&self) -> Option<usize> {
        self.neighborhood.last().copied().filter(|&i| i > self.paragraph_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    text: String,
    char_len: usize,
    paragraphs: Vec<Paragraph>,
    version: u64,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            char_len: text.chars().count(),
            paragraphs: segment(&text),
            text,
            version: 0,
        }
    }

    /// Replaces the whole text, producing the next version of this document.
    pub fn with_text(&self, text: impl Into<String>) -> Self {
        let mut next = Document::new(self.id.clone(), text);
        next.version = self.version + 1;
        next
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn char_len(&self) -> usize {
        self.char_len
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn paragraph(&self, index: usize) -> Option<&Paragraph> {
        self.paragraphs.get(index)
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    /// Maps a caret offset to the paragraph that will be sent to the model.
    ///
    /// Offsets inside a paragraph pick that paragraph. Offsets in a separator
    /// run (or at end of text) pick the paragraph with the smallest caret
    /// distance; ties go to the preceding paragraph.
    pub fn snap(&self, offset: usize) -> Result<CursorScope, DocumentError> {
        if offset > self.char_len {
            return Err(DocumentError::OffsetOutOfRange {
                offset,
                len: self.char_len,
            });
        }
        if self.paragraphs.is_empty() {
            return Err(DocumentError::Empty);
        }

        // First paragraph whose range ends after the offset.
        let next = self.paragraphs.partition_point(|p| p.range.end <= offset);
        let index = match (next.checked_sub(1), self.paragraphs.get(next)) {
            (_, Some(p)) if p.range.contains(offset) => next,
            (Some(prev), Some(p)) => {
                let before = self.paragraphs[prev].range.caret_distance(offset);
                if before <= p.range.caret_distance(offset) {
                    prev
                } else {
                    next
                }
            }
            (Some(prev), None) => prev,
            (None, Some(_)) => next,
            (None, None) => unreachable!("non-empty paragraph list"),
        };
        Ok(CursorScope::centered_on(index, self.paragraphs.len()))
    }
}

/// Paragraph-level difference between two versions of a document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentDiff {
    /// New-document indices whose text replaced an old paragraph in place.
    pub changed: Vec<usize>,
    /// New-document indices with no counterpart in the old document.
    pub inserted: Vec<usize>,
    /// Old-document indices that no longer exist.
    pub deleted: Vec<usize>,
}

impl DocumentDiff {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.inserted.is_empty() && self.deleted.is_empty()
    }

    /// New-document indices whose views must be regenerated.
    pub fn touched(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.changed.iter().chain(&self.inserted).copied().collect();
        out.sort_unstable();
        out
    }

    /// Hashes of old paragraphs that were edited away or deleted and do not
    /// survive anywhere in the new document.
    pub fn vanished_hashes(&self, old: &Document, new: &Document) -> Vec<ContentHash> {
        let alive: HashSet<ContentHash> = new.paragraphs.iter().map(|p| p.content_hash).collect();
        let replaced = self.replaced_old_indices(old, new);
        let mut out: Vec<ContentHash> = replaced
            .into_iter()
            .chain(self.deleted.iter().copied())
            .map(|i| old.paragraphs[i].content_hash)
            .filter(|h| !alive.contains(h))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn replaced_old_indices(&self, old: &Document, new: &Document) -> Vec<usize> {
        let matched = align(&hashes(old), &hashes(new));
        let mut out = Vec::new();
        for_each_gap(&matched, old.paragraphs.len(), new.paragraphs.len(), |olds, news| {
            let paired = olds.len().min(news.len());
            out.extend(olds.clone().take(paired));
        });
        out
    }
}

fn hashes(doc: &Document) -> Vec<ContentHash> {
    doc.paragraphs.iter().map(|p| p.content_hash).collect()
}

/// Longest common subsequence of two hash sequences as (old, new) index pairs.
/// Common prefix and suffix are peeled first so typical single-paragraph edits
/// only run the quadratic step on a tiny window.
fn align(old: &[ContentHash], new: &[ContentHash]) -> Vec<(usize, usize)> {
    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    let suffix = old[prefix..]
        .iter()
        .rev()
        .zip(new[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let a = &old[prefix..old.len() - suffix];
    let b = &new[prefix..new.len() - suffix];

    let mut table = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            table[i][j] = if a[i] == b[j] {
                table[i + 1][j + 1] + 1
            } else {
                table[i + 1][j].max(table[i][j + 1])
            };
        }
    }

    let mut pairs: Vec<(usize, usize)> = (0..prefix).map(|i| (i, i)).collect();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            pairs.push((prefix + i, prefix + j));
            i += 1;
            j += 1;
        } else if table[i + 1][j] >= table[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs.extend((0..suffix).map(|k| (old.len() - suffix + k, new.len() - suffix + k)));
    pairs
}

/// Calls `f` with the unmatched old and new index runs between alignment anchors.
fn for_each_gap(
    matched: &[(usize, usize)],
    old_len: usize,
    new_len: usize,
    mut f: impl FnMut(std::ops::Range<usize>, std::ops::Range<usize>),
) {
    let (mut oi, mut ni) = (0, 0);
    for &(o, n) in matched.iter().chain(std::iter::once(&(old_len, new_len))) {
        if o > oi || n > ni {
            f(oi..o, ni..n);
        }
        oi = o + 1;
        ni = n + 1;
    }
}

/// Aligns paragraphs by content hash. Unmatched runs sitting between the same
/// anchors pair up positionally as edits; leftovers are insertions or deletions.
pub fn diff_paragraphs(old: &Document, new: &Document) -> DocumentDiff {
    let matched = align(&hashes(old), &hashes(new));
    let mut diff = DocumentDiff::default();
    for_each_gap(&matched, old.paragraphs.len(), new.paragraphs.len(), |olds, news| {
        let paired = olds.len().min(news.len());
        diff.changed.extend(news.clone().take(paired));
        diff.inserted.extend(news.skip(paired));
        diff.deleted.extend(olds.skip(paired));
    });
    diff
}
