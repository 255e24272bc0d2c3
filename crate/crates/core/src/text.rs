//! Shared text primitives.
//!
//! Every component that needs tokens (chunker, BM25, metrics, diversity
//! statistics) goes through [`tokenize`] so token counts agree across the
//! whole pipeline. A token is a maximal run of alphanumeric characters,
//! lowercased; punctuation and symbols act as separators.

/// Abbreviations whose trailing period does not end a sentence.
///
/// Stored lowercase; matching is case-insensitive and ignores leading
/// punctuation such as an opening parenthesis.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "cf.", "vs.", "al.", "fig.", "no.", "dr.", "mr.", "mrs.", "ms.",
    "prof.", "st.", "jr.", "sr.", "u.s.", "u.n.", "u.k.", "e.u.", "approx.",
];

/// Lowercased alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            for lc in c.to_lowercase() {
                cur.push(lc);
            }
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Byte ranges of the tokens of `text`, in the original casing.
///
/// The ranges line up one-to-one with [`tokenize`] output (modulo case
/// folding), which is what lets the chunker hard-split long sentences on
/// exact token boundaries.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push((s, i));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Number of tokens in `text` without allocating them.
pub fn count_tokens(text: &str) -> usize {
    let mut n = 0;
    let mut in_token = false;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if !in_token {
                n += 1;
                in_token = true;
            }
        } else {
            in_token = false;
        }
    }
    n
}

/// Canonicalize raw document text: `\r\n` and `\r` become `\n`, and control
/// characters other than newline and tab are dropped. Everything else,
/// including non-ASCII punctuation, passes through untouched.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                out.push('\n');
            }
            '\n' | '\t' => out.push(c),
            c if c.is_control() => {}
            c => out.push(c),
        }
    }
    out
}

/// Byte ranges of blank-line-separated paragraphs, trimmed of surrounding
/// whitespace. A line counts as blank when it is empty after trimming.
pub fn paragraph_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut para_start: Option<usize> = None;
    let mut content_end = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(s) = para_start.take() {
                spans.push((s, content_end));
            }
        } else {
            if para_start.is_none() {
                let lead = line.len() - line.trim_start().len();
                para_start = Some(offset + lead);
            }
            content_end = offset + line.trim_end().len();
        }
        offset += line.len();
    }
    if let Some(s) = para_start {
        spans.push((s, content_end));
    }
    spans
}

/// Paragraphs of `text` as trimmed slices.
pub fn split_paragraphs(text: &str) -> Vec<&str> {
    paragraph_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

/// Byte ranges of the sentences of `text`, using [`DEFAULT_ABBREVIATIONS`].
///
/// A sentence ends at `.`, `!`, or `?` when the next character is whitespace
/// (or the text ends), except when the period terminates a listed
/// abbreviation. A trailing fragment without terminal punctuation counts as
/// one sentence. Each range starts at the sentence's first non-whitespace
/// character and ends just past its terminator (or at the last
/// non-whitespace character for a fragment).
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    sentence_spans_with(text, DEFAULT_ABBREVIATIONS)
}

/// [`sentence_spans`] with a caller-provided abbreviation list.
pub fn sentence_spans_with(text: &str, abbreviations: &[&str]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if start.is_none() && !c.is_whitespace() {
            start = Some(i);
        }
        if start.is_some() && matches!(c, '.' | '!' | '?') {
            let followed_by_break = match iter.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if followed_by_break && !(c == '.' && ends_abbreviation(text, i, abbreviations)) {
                spans.push((start.take().unwrap(), i + c.len_utf8()));
            }
        }
    }
    if let Some(s) = start {
        let end = s + text[s..].trim_end().len();
        if end > s {
            spans.push((s, end));
        }
    }
    spans
}

/// Sentences of `text` as slices.
pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

/// Whether the period at byte `dot_idx` closes a word from the abbreviation
/// list. The word runs from the previous whitespace through the period;
/// leading punctuation (quotes, parentheses) is ignored.
fn ends_abbreviation(text: &str, dot_idx: usize, abbreviations: &[&str]) -> bool {
    let head = &text[..dot_idx];
    let word_start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let word = text[word_start..dot_idx + 1].trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() {
        return false;
    }
    let lowered = word.to_lowercase();
    abbreviations.iter().any(|a| *a == lowered)
}
