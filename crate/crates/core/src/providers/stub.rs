//! Deterministic offline providers.
//!
//! The stubs let the whole pipeline, including tests and the acceptance
//! suite, run with zero network access while still producing *content-aware*
//! output: the chat stub recognizes the pipeline's prompt shapes and echoes
//! tokens from the embedded payload, embeddings are a seeded bag-of-words
//! hash, and moderation is a keyword table. Same seed, same inputs, same
//! bytes out.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::hashing::seed_bytes;
use crate::providers::{
    ChatProvider, ChatRequest, EmbeddingProvider, ModerationProvider, ModerationScores,
};
use crate::text;

pub const STUB_EMBED_DIM: usize = 64;

/// Filler vocabulary the chat stub mixes with payload tokens.
const LEXICON: &[&str] = &[
    "evidence", "rights", "research", "community", "dignity", "facts", "reports", "equality",
    "respect", "together", "support", "data", "records", "history", "progress", "justice",
    "truth", "voices", "policy", "inclusion", "studies", "context", "people", "society",
];

#[derive(Debug, Clone)]
pub struct StubProviders {
    pub chat: StubChat,
    pub embedding: StubEmbedding,
    pub moderation: StubModeration,
}

/// All three stubs wired to one seed.
pub fn make_stub_providers(seed: u64) -> StubProviders {
    StubProviders {
        chat: StubChat::new(seed),
        embedding: StubEmbedding::new(seed),
        moderation: StubModeration::with_default_table(),
    }
}

/// Chat stub. Output is a pure function of (seed, model id, prompt): the
/// prompt is classified by the pipeline's template markers, payload tokens
/// are extracted, and a two-sentence reply is composed from them. Judge
/// prompts instead get a parseable `SCORES: <a> <b>` line where each score is
/// the response's token count plus its digit count.
#[derive(Debug, Clone)]
pub struct StubChat {
    seed: u64,
}

impl StubChat {
    pub fn new(seed: u64) -> Self {
        StubChat { seed }
    }

    fn rng_for(&self, model_id: &str, prompt: &str) -> ChaCha8Rng {
        let seed = seed_bytes(&[
            &self.seed.to_le_bytes(),
            b"chat",
            model_id.as_bytes(),
            prompt.as_bytes(),
        ]);
        ChaCha8Rng::from_seed(seed)
    }

    fn two_sentences(&self, rng: &mut ChaCha8Rng, payload: &str) -> String {
        let tokens: Vec<String> = text::tokenize(payload).into_iter().filter(|t| t.len() > 2).collect();
        let word = |rng: &mut ChaCha8Rng| -> String {
            if !tokens.is_empty() && rng.random_range(0..10) < 5 {
                tokens[rng.random_range(0..tokens.len())].clone()
            } else {
                LEXICON[rng.random_range(0..LEXICON.len())].to_string()
            }
        };
        let sentence = |rng: &mut ChaCha8Rng| -> String {
            let n = rng.random_range(6..=9);
            let mut words: Vec<String> = (0..n).map(|_| word(rng)).collect();
            if let Some(first) = words.first_mut() {
                let mut chars = first.chars();
                if let Some(c) = chars.next() {
                    *first = c.to_uppercase().collect::<String>() + chars.as_str();
                }
            }
            words.join(" ") + "."
        };
        let a = sentence(rng);
        let b = sentence(rng);
        format!("{a} {b}")
    }

    fn judge_reply(&self, prompt: &str) -> Option<String> {
        let a_text = between(prompt, "Response A:\n", "\n\nResponse B:\n")?;
        let b_text = between(prompt, "\n\nResponse B:\n", "\n\nEnd your reply")?;
        let score = |t: &str| -> usize {
            text::count_tokens(t) + t.chars().filter(|c| c.is_ascii_digit()).count()
        };
        Some(format!(
            "Comparing factual grounding and tone of both responses.\nSCORES: {} {}",
            score(a_text),
            score(b_text)
        ))
    }
}

fn between<'a>(haystack: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let s = haystack.find(start)? + start.len();
    let e = haystack[s..].find(end)? + s;
    Some(&haystack[s..e])
}

impl ChatProvider for StubChat {
    fn chat(&self, request: &ChatRequest) -> Result<String, CoreError> {
        request.validate()?;
        let prompt = request.prompt.as_str();
        let mut rng = self.rng_for(&request.model_id, prompt);

        if prompt.contains("SCORES:") && prompt.contains("Response A:") {
            if let Some(reply) = self.judge_reply(prompt) {
                return Ok(reply);
            }
        }
        let payload = if let Some(p) = between(prompt, "Summarize this paragraph ", " into exactly 2 sentences") {
            p
        } else if let Some(p) = between(prompt, "Hateful message: ", "\nGenerate a counter-speech") {
            p
        } else if let Some(p) = between(prompt, "Hateful message: ", "\n\nCounter-speech:") {
            p
        } else {
            prompt
        };
        Ok(self.two_sentences(&mut rng, payload))
    }
}

/// Seeded bag-of-words embeddings: each token hashes to a fixed pseudorandom
/// direction, the text embeds as the normalized token sum. Texts sharing
/// vocabulary therefore land near each other, which gives dense retrieval
/// tests real structure to assert against.
#[derive(Debug, Clone)]
pub struct StubEmbedding {
    seed: u64,
    model_id: String,
}

impl StubEmbedding {
    pub fn new(seed: u64) -> Self {
        StubEmbedding { seed, model_id: format!("stub-embed-{STUB_EMBED_DIM}d-s{seed}") }
    }

    /// Same construction, distinct model id: lets one seed serve several
    /// "different" embedding models (the two dense retrieval arms).
    pub fn with_model_id(seed: u64, model_id: impl Into<String>) -> Self {
        StubEmbedding { seed, model_id: model_id.into() }
    }

    fn token_direction(&self, token: &str) -> Vec<f64> {
        let seed = seed_bytes(&[
            &self.seed.to_le_bytes(),
            b"embed",
            self.model_id.as_bytes(),
            token.as_bytes(),
        ]);
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..STUB_EMBED_DIM).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

impl EmbeddingProvider for StubEmbedding {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, CoreError> {
        if texts.is_empty() {
            return Err(CoreError::validation("embed: no texts given"));
        }
        Ok(texts
            .iter()
            .map(|t| {
                let mut tokens = text::tokenize(t);
                if tokens.is_empty() {
                    tokens.push("<empty>".to_string());
                }
                let mut acc = vec![0.0_f64; STUB_EMBED_DIM];
                for tok in &tokens {
                    for (a, d) in acc.iter_mut().zip(self.token_direction(tok)) {
                        *a += d;
                    }
                }
                let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    acc[0] = 1.0;
                } else {
                    for x in &mut acc {
                        *x /= norm;
                    }
                }
                acc
            })
            .collect())
    }
}

/// Keyword-table moderation. Every category always appears in the result;
/// a trigger token raises its category to the table score.
#[derive(Debug, Clone)]
pub struct StubModeration {
    triggers: BTreeMap<String, (String, f64)>,
}

pub(crate) const MODERATION_CATEGORIES: &[&str] =
    &["harassment", "hate", "self-harm", "sexual", "violence"];

impl StubModeration {
    pub fn with_default_table() -> Self {
        let mut triggers = BTreeMap::new();
        triggers.insert("hatetrigger".into(), ("hate".into(), 0.9));
        triggers.insert("harasstrigger".into(), ("harassment".into(), 0.7));
        triggers.insert("violencetrigger".into(), ("violence".into(), 0.8));
        StubModeration { triggers }
    }

    pub fn with_table(triggers: BTreeMap<String, (String, f64)>) -> Self {
        StubModeration { triggers }
    }
}

impl ModerationProvider for StubModeration {
    fn moderate(&self, text_in: &str) -> Result<ModerationScores, CoreError> {
        if text_in.trim().is_empty() {
            return Err(CoreError::validation("moderate: empty text"));
        }
        let mut scores = ModerationScores::default();
        for cat in MODERATION_CATEGORIES {
            scores.scores.insert((*cat).to_string(), 0.0);
        }
        for token in text::tokenize(text_in) {
            if let Some((cat, v)) = self.triggers.get(&token) {
                let entry = scores.scores.entry(cat.clone()).or_insert(0.0);
                if *v > *entry {
                    *entry = *v;
                }
            }
        }
        Ok(scores)
    }
}
