//! Prompt templates and rendering for the summarize and generate steps.
//!
//! The templates are fixed strings; placeholders are substituted verbatim
//! with no escaping, and the hash of the fully rendered prompt is recorded
//! next to each output so any row can be re-derived from its inputs.

use crate::hashing::sha256_hex;
use crate::text::sentence_spans;

pub const SUMMARIZATION_TEMPLATE: &str = "Summarize this paragraph {paragraph_text} into exactly 2 sentences, without truncating the last sentence:\n\nSummary:";

pub const CS_NO_RAG_TEMPLATE: &str = "Hateful message: {hateful_message}\nGenerate a counter-speech that is concise, respectful, persuasive, self-contained, and suitable for social media.\nKeep it short (maximum 2 sentences). Do NOT truncate the last sentence.\n\nCounter-speech:";

pub const CS_RAG_TEMPLATE: &str = "Here are three evidence summaries you MUST use to inform your response: {context}.\n\nTask: Respond to the hateful message below by writing a short counter-speech that is respectful, persuasive, self-contained, and suitable for social media (maximum 2 sentences). Ground your response in the evidence above and do NOT truncate the last sentence.\n\nHateful message: {hateful_message}\n\nCounter-speech:";

pub fn render_summarization(paragraph_text: &str) -> String {
    SUMMARIZATION_TEMPLATE.replace("{paragraph_text}", paragraph_text)
}

pub fn render_cs_no_rag(hateful_message: &str) -> String {
    CS_NO_RAG_TEMPLATE.replace("{hateful_message}", hateful_message)
}

pub fn render_cs_rag(context: &str, hateful_message: &str) -> String {
    CS_RAG_TEMPLATE
        .replace("{context}", context)
        .replace("{hateful_message}", hateful_message)
}

/// Join evidence summaries, already in rank order, into the `{context}`
/// block of the generation prompt.
pub fn build_context(summaries: &[&str]) -> String {
    summaries.join("\n")
}

/// Hex SHA-256 of a fully rendered prompt, stored with each output.
pub fn prompt_hash(rendered_prompt: &str) -> String {
    sha256_hex(rendered_prompt)
}

/// Truncate a completion to its first two sentences. Text with two or fewer
/// sentences is returned unchanged, so a missing terminator never produces
/// a dangling fragment: it already counts as the final sentence.
pub fn enforce_two_sentences(text: &str) -> String {
    let spans = sentence_spans(text);
    if spans.len() <= 2 {
        return text.to_string();
    }
    text[..spans[1].1].to_string()
}
