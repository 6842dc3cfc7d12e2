//! Input generators shared by the benchmarks.

/// A document of `paragraphs` paragraphs with `words` words each, separated
/// by blank lines. Deterministic for a given size.
pub fn sample_document(paragraphs: usize, words: usize) -> String {
    const VOCAB: &[&str] = &[
        "river", "delta", "sediment", "argument", "claim", "evidence", "reader", "café", "because", "therefore",
    ];
    (0..paragraphs)
        .map(|p| {
            (0..words)
                .map(|w| VOCAB[(p * 7 + w * 3) % VOCAB.len()])
                .collect::<Vec<_>>()
                .join(" ")
                + &format!(" ({p}).")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Model-style output with reasoning, a marker and a Markdown list.
pub fn sample_response(items: usize) -> String {
    let mut out = String::from("Step 1: the paragraph argues several things at length. ");
    out.push_str("FINAL OUTPUT:\nA **short** summary with *emphasis*.\n");
    for i in 0..items {
        out.push_str(&format!("- point {i} about **term {i}**\n"));
    }
    out
}
