//! A deliberately small Markdown subset for rendering view cards.
//!
//! Recognized: `- ` / `* ` bullets, `1. ` numbered items, `**bold**` and
//! `*emphasis*`. Anything else is paragraph text. A line that is not a list
//! item ends the current list, so model output such as a trailing remark
//! after a list is never glued onto the last item.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "style", content = "text", rename_all = "snake_case")]
pub enum Span {
    Text(String),
    Bold(String),
    Emphasis(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    Paragraph { spans: Vec<Span> },
    UnorderedList { items: Vec<Vec<Span>> },
    OrderedList { start: u64, items: Vec<Vec<Span>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineKind<'a> {
    Blank,
    Bullet(char, &'a str),
    Numbered(u64, &'a str),
    Text(&'a str),
}

fn classify(line: &str) -> LineKind<'_> {
    let line = line.trim();
    if line.is_empty() {
        return LineKind::Blank;
    }
    for bullet in ['-', '*'] {
        if let Some(rest) = line.strip_prefix(bullet) {
            if rest.starts_with([' ', '\t']) && !rest.trim().is_empty() {
                return LineKind::Bullet(bullet, rest.trim());
            }
        }
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if (1..=9).contains(&digits) {
        if let Some(rest) = line[digits..].strip_prefix('.') {
            if rest.starts_with([' ', '\t']) && !rest.trim().is_empty() {
                let n = line[..digits].parse().unwrap_or(0);
                return LineKind::Numbered(n, rest.trim());
            }
        }
    }
    LineKind::Text(line)
}

enum Open {
    None,
    Paragraph(Vec<String>),
    Bullets(char, Vec<Vec<Span>>),
    Numbers(u64, Vec<Vec<Span>>),
}

impl Open {
    fn close(self, out: &mut Vec<Block>) {
        match self {
            Open::None => {}
            Open::Paragraph(lines) => out.push(Block::Paragraph {
                spans: parse_inline(&lines.join(" ")),
            }),
            Open::Bullets(_, items) => out.push(Block::UnorderedList { items }),
            Open::Numbers(start, items) => out.push(Block::OrderedList { start, items }),
        }
    }
}

/// Parses display text into blocks. Total: every input yields a result.
pub fn parse_display(display: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut open = Open::None;

    for line in display.lines() {
        open = match (classify(line), open) {
            (LineKind::Blank, prev) => {
                prev.close(&mut blocks);
                Open::None
            }
            (LineKind::Bullet(b, item), Open::Bullets(cur, mut items)) if b == cur => {
                items.push(parse_inline(item));
                Open::Bullets(cur, items)
            }
            (LineKind::Bullet(b, item), prev) => {
                prev.close(&mut blocks);
                Open::Bullets(b, vec![parse_inline(item)])
            }
            (LineKind::Numbered(_, item), Open::Numbers(start, mut items)) => {
                items.push(parse_inline(item));
                Open::Numbers(start, items)
            }
            (LineKind::Numbered(n, item), prev) => {
                prev.close(&mut blocks);
                Open::Numbers(n, vec![parse_inline(item)])
            }
            (LineKind::Text(text), Open::Paragraph(mut lines)) => {
                lines.push(text.to_string());
                Open::Paragraph(lines)
            }
            (LineKind::Text(text), prev) => {
                prev.close(&mut blocks);
                Open::Paragraph(vec![text.to_string()])
            }
        };
    }
    open.close(&mut blocks);
    blocks
}

fn valid_inner(inner: &[char]) -> bool {
    match (inner.first(), inner.last()) {
        (Some(a), Some(b)) => !a.is_whitespace() && !b.is_whitespace(),
        _ => false,
    }
}

/// Splits a line into plain, bold and emphasis spans. Unmatched or
/// whitespace-flanked markers stay literal.
pub fn parse_inline(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut plain = String::new();
    let mut i = 0;

    let emit = |spans: &mut Vec<Span>, plain: &mut String, span: Span| {
        if !plain.is_empty() {
            spans.push(Span::Text(std::mem::take(plain)));
        }
        spans.push(span);
    };

    while i < chars.len() {
        if chars[i] != '*' {
            plain.push(chars[i]);
            i += 1;
            continue;
        }
        let strong = chars.get(i + 1) == Some(&'*');
        if strong {
            let close = (i + 2..chars.len().saturating_sub(1))
                .find(|&j| chars[j] == '*' && chars[j + 1] == '*');
            if let Some(j) = close.filter(|&j| valid_inner(&chars[i + 2..j])) {
                let inner = chars[i + 2..j].iter().collect();
                emit(&mut spans, &mut plain, Span::Bold(inner));
                i = j + 2;
                continue;
            }
            plain.push_str("**");
            i += 2;
        } else {
            let close = (i + 1..chars.len()).find(|&j| chars[j] == '*');
            let single = |j: usize| chars.get(j + 1) != Some(&'*');
            if let Some(j) = close.filter(|&j| single(j) && valid_inner(&chars[i + 1..j])) {
                let inner = chars[i + 1..j].iter().collect();
                emit(&mut spans, &mut plain, Span::Emphasis(inner));
                i = j + 1;
                continue;
            }
            plain.push('*');
            i += 1;
        }
    }
    if !plain.is_empty() {
        spans.push(Span::Text(plain));
    }
    spans
}

/// Plain-text rendering of blocks, used for Markdown reports and logs.
pub fn to_markdown(blocks: &[Block]) -> String {
    fn spans(out: &mut String, spans: &[Span]) {
        for span in spans {
            match span {
                Span::Text(t) => out.push_str(t),
                Span::Bold(t) => {
                    out.push_str("**");
                    out.push_str(t);
                    out.push_str("**");
                }
                Span::Emphasis(t) => {
                    out.push('*');
                    out.push_str(t);
                    out.push('*');
                }
            }
        }
    }

    let mut out = String::new();
    for (n, block) in blocks.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        match block {
            Block::Paragraph { spans: s } => {
                spans(&mut out, s);
                out.push('\n');
            }
            Block::UnorderedList { items } => {
                for item in items {
                    out.push_str("- ");
                    spans(&mut out, item);
                    out.push('\n');
                }
            }
            Block::OrderedList { start, items } => {
                for (k, item) in items.iter().enumerate() {
                    out.push_str(&format!("{}. ", start + k as u64));
                    spans(&mut out, item);
                    out.push('\n');
                }
            }
        }
    }
    out
}
