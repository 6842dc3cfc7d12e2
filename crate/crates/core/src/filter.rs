//! Chain-of-thought scrubbing for prompts that ask the model to announce its
//! final answer with a marker.

/// Case-sensitive marker the summary prompts ask the model to emit.
pub const FINAL_OUTPUT_MARKER: &str = "FINAL OUTPUT";

fn is_marker_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}' | '\u{2010}'..='\u{2015}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}'
                | '\u{3001}' | '\u{3002}' | '\u{FF01}' | '\u{FF0C}' | '\u{FF0E}' | '\u{FF1A}' | '\u{FF1B}'
        )
}

/// Returns the text the user should see for a model response.
///
/// With filtering enabled and the marker present, everything up to and
/// including the last marker is dropped, along with the punctuation and
/// whitespace trailing the marker. Punctuation is only stripped on the
/// marker's own line so a list that starts on the next line keeps its
/// bullet. Otherwise the raw text is returned unchanged.
pub fn filter_final_output(raw: &str, enabled: bool) -> &str {
    if !enabled {
        return raw;
    }
    let Some(pos) = raw.rfind(FINAL_OUTPUT_MARKER) else {
        return raw;
    };
    let rest = &raw[pos + FINAL_OUTPUT_MARKER.len()..];
    let mut crossed_line = false;
    let start = rest
        .char_indices()
        .find(|&(_, c)| {
            if c == '\n' || c == '\r' {
                crossed_line = true;
                false
            } else if c.is_whitespace() {
                false
            } else {
                crossed_line || !is_marker_punctuation(c)
            }
        })
        .map_or(rest.len(), |(i, _)| i);
    &rest[start..]
}
