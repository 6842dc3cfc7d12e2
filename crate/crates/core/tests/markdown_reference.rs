//! Golden comparison against a CommonMark parser on inputs where the subset
//! and CommonMark agree (blocks separated by blank lines, tight lists, flat
//! inline markup).

use marginalia_core::markdown::{parse_display, Block, Span};
use pulldown_cmark::{Event, Parser, Tag, TagEnd};

fn reference(input: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut items: Vec<Vec<Span>> = Vec::new();
    let mut spans: Vec<Span> = Vec::new();
    let mut list_start: Option<Option<u64>> = None;
    let mut style: Option<&str> = None;

    let push_text = |spans: &mut Vec<Span>, style: Option<&str>, text: &str| {
        let span = match style {
            Some("bold") => Span::Bold(text.into()),
            Some("em") => Span::Emphasis(text.into()),
            _ => Span::Text(text.into()),
        };
        match (spans.last_mut(), &span) {
            (Some(Span::Text(prev)), Span::Text(t)) => prev.push_str(t),
            _ => spans.push(span),
        }
    };

    for event in Parser::new(input) {
        match event {
            Event::Start(Tag::List(start)) => list_start = Some(start),
            Event::End(TagEnd::List(_)) => {
                let items = std::mem::take(&mut items);
                blocks.push(match list_start.take().unwrap() {
                    None => Block::UnorderedList { items },
                    Some(start) => Block::OrderedList { start, items },
                });
            }
            Event::End(TagEnd::Item) => items.push(std::mem::take(&mut spans)),
            Event::End(TagEnd::Paragraph) if list_start.is_none() => {
                blocks.push(Block::Paragraph { spans: std::mem::take(&mut spans) })
            }
            Event::Start(Tag::Strong) => style = Some("bold"),
            Event::Start(Tag::Emphasis) => style = Some("em"),
            Event::End(TagEnd::Strong | TagEnd::Emphasis) => style = None,
            Event::Text(t) => push_text(&mut spans, style, &t),
            Event::SoftBreak => push_text(&mut spans, style, " "),
            _ => {}
        }
    }
    blocks
}

const GOLDEN: &[&str] = &[
    "plain",
    "- a\n- b",
    "* one\n* two\n* three",
    "1. x\n2. y",
    "3. third\n4. fourth",
    "Intro line\ncontinues here.\n\n- item **bold** end\n- *em* item",
    "A **strong** claim and an *aside*.",
    "2 * 3 * 4",
    "**unclosed bold",
    "Before.\n\n1. First point\n2. Second point\n\nAfter the list.",
    "- Tagging the creator\n- Audience trust\n- Weekly cadence",
    "Questions:\n\n1. What is *meant* by logical?\n2. Who is the **reader**?",
];

#[test]
fn subset_matches_commonmark_on_shared_inputs() {
    for input in GOLDEN {
        assert_eq!(parse_display(input), reference(input), "input: {input:?}");
    }
}

#[test]
fn trailing_line_after_list_is_a_paragraph() {
    // CommonMark would treat `tail` as a lazy continuation of the last item;
    // cards show it as its own paragraph.
    let ours = parse_display("1. x\n2. y\ntail");
    assert_eq!(ours.len(), 2);
    assert!(matches!(&ours[1], Block::Paragraph { spans } if spans == &[Span::Text("tail".into())]));
    assert_eq!(reference("1. x\n2. y\ntail").len(), 1);
}
