//! Offline stub providers driven through the real pipeline templates: the
//! replies must be deterministic, stay within the two-sentence contract, and
//! produce judge output the verdict parser can read.

use csrag_core::corpus::{HateSpeechInstance, TargetGroup};
use csrag_core::index::RetrieverId;
use csrag_core::judge::{build_pairs, judge_pair, JudgeTemplate, SwapPolicy, Winner};
use csrag_core::pipeline::{
    build_context, render_cs_no_rag, render_cs_rag, render_summarization, CounterSpeech,
};
use csrag_core::providers::{
    make_stub_providers, ChatProvider, ChatRequest, EmbeddingProvider, ModerationProvider,
    StubChat, StubEmbedding,
};
use csrag_core::text::split_sentences;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MESSAGE_WORDS: &[&str] = &[
    "they", "always", "never", "ruin", "take", "our", "jobs", "streets", "country", "people",
    "them", "everywhere", "problem", "city", "cannot", "trust", "those", "groups", "refuse",
    "belong", "12", "99", "2020", "etc.", "Dr.", "e.g.",
];

fn random_message(rng: &mut ChaCha8Rng) -> String {
    let sentences = rng.random_range(1..=3);
    let mut out = Vec::new();
    for _ in 0..sentences {
        let n = rng.random_range(3..=12);
        let mut words: Vec<&str> =
            (0..n).map(|_| MESSAGE_WORDS[rng.random_range(0..MESSAGE_WORDS.len())]).collect();
        if let Some(first) = words.first_mut() {
            *first = "They";
        }
        let terminator = [".", "!", "?"][rng.random_range(0..3)];
        out.push(format!("{}{terminator}", words.join(" ")));
    }
    out.join(" ")
}

#[test]
fn stub_replies_are_identical_across_fresh_instances() {
    let prompts = [
        render_cs_no_rag("They are all criminals."),
        render_summarization("Migration studies from 2019 show steady integration outcomes."),
        render_cs_rag(
            &build_context(&["Crime rates fell.", "Employment rose.", "Reports agree."]),
            "They are all criminals.",
        ),
    ];
    for prompt in &prompts {
        let request = ChatRequest::new("model-x", prompt.clone());
        let first = StubChat::new(11).chat(&request).unwrap();
        let second = StubChat::new(11).chat(&request).unwrap();
        assert_eq!(first, second);
        let other_seed = StubChat::new(12).chat(&request).unwrap();
        assert_ne!(first, other_seed);
    }
}

#[test]
fn rendered_generation_prompts_never_exceed_two_sentences() {
    let chat = StubChat::new(4242);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..300 {
        let message = random_message(&mut rng);
        let prompt = if i % 3 == 0 {
            render_cs_no_rag(&message)
        } else if i % 3 == 1 {
            let summaries = [
                random_message(&mut rng),
                random_message(&mut rng),
                random_message(&mut rng),
            ];
            let refs: Vec<&str> = summaries.iter().map(String::as_str).collect();
            render_cs_rag(&build_context(&refs), &message)
        } else {
            render_summarization(&message)
        };
        let model = format!("model-{}", i % 4);
        let reply = chat.chat(&ChatRequest::new(model, prompt)).unwrap();
        let sentences = split_sentences(&reply);
        assert!(
            sentences.len() <= 2,
            "iteration {i}: {} sentences in {reply:?}",
            sentences.len()
        );
        assert!(!reply.trim().is_empty());
        assert!(reply.trim_end().ends_with('.'));
    }
}

#[test]
fn summarization_replies_echo_paragraph_vocabulary() {
    let chat = StubChat::new(7);
    let paragraph = "Longitudinal surveys measured neighborhood cohesion alongside \
                     employment trajectories for resettled families across provinces.";
    let reply = chat.chat(&ChatRequest::new("m", render_summarization(paragraph))).unwrap();
    let reply_tokens = csrag_core::text::tokenize(&reply);
    let paragraph_tokens = csrag_core::text::tokenize(paragraph);
    let echoed = reply_tokens.iter().filter(|t| paragraph_tokens.contains(t)).count();
    assert!(echoed > 0, "no paragraph vocabulary in {reply:?}");
}

#[test]
fn judge_replies_parse_with_token_and_digit_scores() {
    let hs = HateSpeechInstance {
        hs_id: "hs-1".to_string(),
        text: "They never belong here.".to_string(),
        target: TargetGroup::Migrants,
        reference_cs: None,
    };
    let cs = |retriever: RetrieverId, model: &str, text: &str| CounterSpeech {
        hs_id: "hs-1".to_string(),
        retriever,
        model_id: model.to_string(),
        text: text.to_string(),
        evidence: vec![],
        prompt_hash: "0".repeat(64),
    };
    let set_a = vec![cs(RetrieverId::Bm25, "m1", "Numbers 12 and 34 matter.")];
    let set_b = vec![cs(RetrieverId::None, "m1", "Short reply.")];
    let pairs = build_pairs(
        &[hs],
        &set_a,
        &set_b,
        JudgeTemplate::RagVsNoRag,
        SwapPolicy::Both,
    )
    .unwrap();
    assert_eq!(pairs.len(), 2);

    let chat = StubChat::new(1);
    let orig = judge_pair(&chat, "judge-model", &pairs[0]);
    assert_eq!(orig.winner, Winner::A);
    assert_eq!(orig.raw_scores, Some((9.0, 2.0)), "5 tokens + 4 digits vs 2 tokens");
    assert!(!orig.parse_failed);
    assert!(!orig.failed);

    let swapped = judge_pair(&chat, "judge-model", &pairs[1]);
    assert_eq!(swapped.winner, Winner::B);
    assert_eq!(swapped.raw_scores, Some((2.0, 9.0)), "scores follow the texts when swapped");
}

#[test]
fn embedding_arms_with_distinct_model_ids_disagree() {
    let arm_a = StubEmbedding::with_model_id(5, "stub-dense-a");
    let arm_b = StubEmbedding::with_model_id(5, "stub-dense-b");
    assert_eq!(arm_a.model_id(), "stub-dense-a");
    assert_eq!(arm_b.model_id(), "stub-dense-b");

    let text = vec!["equality and dignity for everyone".to_string()];
    let va = arm_a.embed(&text).unwrap();
    let vb = arm_b.embed(&text).unwrap();
    assert_ne!(va, vb, "distinct model ids must hash tokens differently");

    let va_again = StubEmbedding::with_model_id(5, "stub-dense-a").embed(&text).unwrap();
    assert_eq!(va, va_again);
}

#[test]
fn one_seed_wires_all_three_providers() {
    let providers = make_stub_providers(21);
    let reply = providers
        .chat
        .chat(&ChatRequest::new("m", render_cs_no_rag("They spread lies.")))
        .unwrap();
    assert!(split_sentences(&reply).len() <= 2);

    assert_eq!(providers.embedding.model_id(), "stub-embed-64d-s21");
    let vectors = providers.embedding.embed(&["calm words".to_string()]).unwrap();
    assert_eq!(vectors[0].len(), csrag_core::providers::STUB_EMBED_DIM);

    let scores = providers.moderation.moderate("mentions hatetrigger once").unwrap();
    assert_eq!(scores.scores["hate"], 0.9);
    assert_eq!(scores.max_score(), 0.9);
}
