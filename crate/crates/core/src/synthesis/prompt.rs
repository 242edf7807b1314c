//! Prompt templates and passage truncation.

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Single-document rephrasing baseline; the document follows after a blank line.
pub const SINGLE_DOC_TEMPLATE: &str = "Convert the following paragraph into a conversational format with multiple tags of \"Question:\" followed by \"Answer:\".

{text}";

pub const CROSS_DOC_TEMPLATE: &str = "You are an expert data generator for language model pretraining.

Below are two related Wikipedia passages:

[Passage A]
{text_a}

[Passage B]
{text_b}

Task:
1) Generate high-quality synthetic QA pairs that REQUIRE information from BOTH Passage A and Passage B to answer.
2) The Answer MUST begin with a step-by-step reasoning process. This reasoning must explicitly bridge facts from both passages.
3) Do not use external knowledge.
4) CRITICAL CONSTRAINT: The generated QA pair will be used to train a model WITHOUT these passages provided as context. Therefore, you MUST act as an omniscient AI stating absolute facts from your own inherent knowledge.
   - DO NOT use any attribution phrases like 'According to Passage A', 'Passage B mentions', 'As stated in the text', or 'Based on the provided documents'.
   - State the facts directly and confidently.

Output format (strict):
Question: [Insert a complex question that bridges facts from both passages]
Answer: [Acting as an omniscient AI, directly state all necessary factual premises from both passages, and logically synthesize them to derive the conclusion.]
Therefore, [State the final, concise answer.]";

/// Cross-document template extended with the shared hub page as Passage C.
pub const THREE_DOC_TEMPLATE: &str = "You are an expert data generator for language model pretraining.

Below are three related Wikipedia passages. Passage A and Passage B both reference the topic of Passage C:

[Passage A]
{text_a}

[Passage B]
{text_b}

[Passage C]
{text_c}

Task:
1) Generate high-quality synthetic QA pairs that REQUIRE information from BOTH Passage A and Passage B, together with Passage C, to answer. Every answer must rely on facts from all three passages.
2) The Answer MUST begin with a step-by-step reasoning process. This reasoning must explicitly bridge facts from all three passages.
3) Do not use external knowledge.
4) CRITICAL CONSTRAINT: The generated QA pair will be used to train a model WITHOUT these passages provided as context. Therefore, you MUST act as an omniscient AI stating absolute facts from your own inherent knowledge.
   - DO NOT use any attribution phrases like 'According to Passage A', 'Passage B mentions', 'As stated in the text', or 'Based on the provided documents'.
   - State the facts directly and confidently.

Output format (strict):
Question: [Insert a complex question that bridges facts from all three passages]
Answer: [Acting as an omniscient AI, directly state all necessary factual premises from all three passages, and logically synthesize them to derive the conclusion.]
Therefore, [State the final, concise answer.]";

const BOUNDARY_WINDOW: usize = 200;

/// Keeps at most `limit` characters, backing up to the last whitespace inside
/// the final 200 characters of the cut when there is one.
pub fn truncate_passage(text: &str, limit: usize) -> &str {
    assert!(limit > 0, "passage limit must be positive");
    let Some((cut, _)) = text.char_indices().nth(limit) else {
        return text;
    };
    let prefix = &text[..cut];
    let window_start = prefix
        .char_indices()
        .rev()
        .nth(BOUNDARY_WINDOW - 1)
        .map_or(0, |(i, _)| i);
    match prefix[window_start..].rfind(char::is_whitespace) {
        Some(ws) if window_start + ws > 0 => &prefix[..window_start + ws],
        _ => prefix,
    }
}

/// Substitutes `{name}` placeholders in one pass over the template, so text
/// inside substituted passages is never re-scanned.
fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let extra: usize = values.iter().map(|(_, v)| v.len()).sum();
    let mut out = String::with_capacity(template.len() + extra);
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in values {
            let token_len = name.len() + 2;
            if tail.len() >= token_len
                && tail.as_bytes()[token_len - 1] == b'}'
                && &tail[1..token_len - 1] == *name
            {
                out.push_str(value);
                rest = &tail[token_len..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

fn non_empty<'a>(doc: &'a Document, role: &str) -> Result<&'a str> {
    if doc.text.trim().is_empty() {
        Err(Error::precondition(format!(
            "{role} document {:?} has no text",
            doc.title
        )))
    } else {
        Ok(&doc.text)
    }
}

pub fn render_cross_doc_prompt(doc_a: &Document, doc_b: &Document, limit: usize) -> Result<String> {
    let a = truncate_passage(non_empty(doc_a, "first")?, limit);
    let b = truncate_passage(non_empty(doc_b, "second")?, limit);
    Ok(fill(CROSS_DOC_TEMPLATE, &[("text_a", a), ("text_b", b)]))
}

pub fn render_single_doc_prompt(doc: &Document, limit: usize) -> Result<String> {
    let text = truncate_passage(non_empty(doc, "source")?, limit);
    Ok(fill(SINGLE_DOC_TEMPLATE, &[("text", text)]))
}

pub fn render_three_doc_prompt(
    doc_a: &Document,
    doc_b: &Document,
    doc_hub: Option<&Document>,
    limit: usize,
) -> Result<String> {
    let hub = doc_hub.ok_or_else(|| Error::precondition("three-document prompt needs a hub"))?;
    let a = truncate_passage(non_empty(doc_a, "first")?, limit);
    let b = truncate_passage(non_empty(doc_b, "second")?, limit);
    let c = truncate_passage(non_empty(hub, "hub")?, limit);
    Ok(fill(
        THREE_DOC_TEMPLATE,
        &[("text_a", a), ("text_b", b), ("text_c", c)],
    ))
}
