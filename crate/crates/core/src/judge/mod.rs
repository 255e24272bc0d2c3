//! Pairwise LLM-as-judge harness.
//!
//! Two systems' outputs for the same hate-speech instances are paired,
//! rendered into one of two fixed comparison prompts, and sent to a judge
//! model that replies with a final `SCORES: <a> <b>` line. Verdicts are
//! tallied into win counts overall and per target group. Position bias is
//! controlled by emitting each pair twice with the presentation order
//! swapped; the swapped halves land in separate tally rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{HateSpeechInstance, TargetGroup};
use crate::error::CoreError;
use crate::pipeline::CounterSpeech;
use crate::providers::{ChatProvider, ChatRequest};
use crate::stats::round_half_up;

const RAG_VS_NORAG_TEXT: &str = include_str!("../../assets/judge/rag_vs_norag.v1.txt");
const METHOD_COMPARISON_TEXT: &str = include_str!("../../assets/judge/method_comparison.v1.txt");

/// The two comparison prompts. `RagVsNoRag` weighs factual grounding;
/// `MethodComparison` weighs tone and brevity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeTemplate {
    RagVsNoRag,
    MethodComparison,
}

impl JudgeTemplate {
    pub fn text(self) -> &'static str {
        match self {
            JudgeTemplate::RagVsNoRag => RAG_VS_NORAG_TEXT.trim_end(),
            JudgeTemplate::MethodComparison => METHOD_COMPARISON_TEXT.trim_end(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JudgeTemplate::RagVsNoRag => "rag_vs_norag",
            JudgeTemplate::MethodComparison => "method_comparison",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s.trim().to_lowercase().as_str() {
            "rag_vs_norag" => Ok(JudgeTemplate::RagVsNoRag),
            "method_comparison" => Ok(JudgeTemplate::MethodComparison),
            other => Err(CoreError::validation(format!("unknown judge template {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapPolicy {
    /// Judge each pair once, in the given order.
    None,
    /// Judge each pair twice, once per presentation order.
    Both,
}

impl SwapPolicy {
    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s.trim().to_lowercase().as_str() {
            "none" => Ok(SwapPolicy::None),
            "both" => Ok(SwapPolicy::Both),
            other => Err(CoreError::validation(format!("unknown swap policy {other:?}"))),
        }
    }
}

/// Grid-cell identity of an output, used as the system name in tallies.
pub fn system_label(cs: &CounterSpeech) -> String {
    format!("{}@{}", cs.model_id, cs.retriever)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgePair {
    pub pair_id: String,
    pub hs: HateSpeechInstance,
    /// Output presented first (slot A). Its system wins when the verdict
    /// says A, regardless of which input set it came from.
    pub cs_a: CounterSpeech,
    pub cs_b: CounterSpeech,
    pub template: JudgeTemplate,
    pub order_swapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub pair_id: String,
    pub winner: Winner,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_scores: Option<(f64, f64)>,
    pub raw_response: String,
    /// The reply had no readable scores line; counted as a tie.
    #[serde(default)]
    pub parse_failed: bool,
    /// The judge call itself failed; excluded from tallies.
    #[serde(default)]
    pub failed: bool,
}

/// Pair two systems' outputs over their shared hate-speech instances.
/// `hs_set` supplies the instance texts; both output sets must contain at
/// most one row per hs_id, and the shared ids must overlap. Pairs come back
/// sorted by hs_id, and with `SwapPolicy::Both` each is followed by its
/// order-swapped twin.
pub fn build_pairs(
    hs_set: &[HateSpeechInstance],
    set_a: &[CounterSpeech],
    set_b: &[CounterSpeech],
    template: JudgeTemplate,
    swap: SwapPolicy,
) -> Result<Vec<JudgePair>, CoreError> {
    let hs_by_id: BTreeMap<&str, &HateSpeechInstance> =
        hs_set.iter().map(|h| (h.hs_id.as_str(), h)).collect();
    let a_by_id = key_by_hs("first", set_a)?;
    let b_by_id = key_by_hs("second", set_b)?;

    let mut pairs = Vec::new();
    for (hs_id, cs_a) in &a_by_id {
        let Some(cs_b) = b_by_id.get(hs_id) else { continue };
        let hs = hs_by_id.get(hs_id).ok_or_else(|| {
            CoreError::validation(format!("no hate-speech instance with id {hs_id:?}"))
        })?;
        pairs.push(make_pair(hs, cs_a, cs_b, template, false));
        if swap == SwapPolicy::Both {
            pairs.push(make_pair(hs, cs_b, cs_a, template, true));
        }
    }
    if pairs.is_empty() {
        return Err(CoreError::validation(
            "the two output sets share no hate-speech instances",
        ));
    }
    Ok(pairs)
}

fn key_by_hs<'a>(
    which: &str,
    set: &'a [CounterSpeech],
) -> Result<BTreeMap<&'a str, &'a CounterSpeech>, CoreError> {
    let mut map = BTreeMap::new();
    for cs in set {
        if map.insert(cs.hs_id.as_str(), cs).is_some() {
            return Err(CoreError::validation(format!(
                "{which} output set has more than one row for hs id {:?}",
                cs.hs_id
            )));
        }
    }
    Ok(map)
}

fn make_pair(
    hs: &HateSpeechInstance,
    cs_a: &CounterSpeech,
    cs_b: &CounterSpeech,
    template: JudgeTemplate,
    order_swapped: bool,
) -> JudgePair {
    let tag = if order_swapped { "swap" } else { "orig" };
    JudgePair {
        pair_id: format!("{}|{}|{}|{tag}", hs.hs_id, system_label(cs_a), system_label(cs_b)),
        hs: hs.clone(),
        cs_a: cs_a.clone(),
        cs_b: cs_b.clone(),
        template,
        order_swapped,
    }
}

/// Full prompt sent to the judge: the selected template with the hate
/// speech substituted, both responses, and the reply-format instruction.
pub fn render_judge_prompt(pair: &JudgePair) -> String {
    let body = pair.template.text().replace("{hs}", &pair.hs.text);
    format!(
        "{body}\n\nResponse A:\n{}\n\nResponse B:\n{}\n\nEnd your reply with a final line of the form:\nSCORES: <score for A> <score for B>",
        pair.cs_a.text, pair.cs_b.text
    )
}

/// Ask the judge model to compare one pair. Provider failures become a
/// verdict marked `failed` rather than an error, so a long judging run can
/// report them in bulk.
pub fn judge_pair(
    chat: &dyn ChatProvider,
    judge_model_id: &str,
    pair: &JudgePair,
) -> JudgeVerdict {
    let prompt = render_judge_prompt(pair);
    match chat.chat(&ChatRequest::new(judge_model_id, prompt)) {
        Ok(response) => parse_verdict(&pair.pair_id, &response),
        Err(e) => JudgeVerdict {
            pair_id: pair.pair_id.clone(),
            winner: Winner::Tie,
            raw_scores: None,
            raw_response: format!("provider error: {e}"),
            parse_failed: false,
            failed: true,
        },
    }
}

/// Read a judge reply. The last `SCORES: <a> <b>` line decides; a bare
/// final `A`, `B`, or `TIE` token is accepted as a fallback; anything else
/// is a tie flagged as a parse failure.
pub fn parse_verdict(pair_id: &str, response: &str) -> JudgeVerdict {
    let mut verdict = JudgeVerdict {
        pair_id: pair_id.to_string(),
        winner: Winner::Tie,
        raw_scores: None,
        raw_response: response.to_string(),
        parse_failed: false,
        failed: false,
    };
    if let Some(rest) = response
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix("SCORES:"))
    {
        let nums: Vec<f64> =
            rest.split_whitespace().filter_map(|w| w.parse::<f64>().ok()).collect();
        if nums.len() == 2 && nums.iter().all(|n| n.is_finite()) {
            verdict.raw_scores = Some((nums[0], nums[1]));
            verdict.winner = match nums[0].partial_cmp(&nums[1]).unwrap() {
                std::cmp::Ordering::Greater => Winner::A,
                std::cmp::Ordering::Less => Winner::B,
                std::cmp::Ordering::Equal => Winner::Tie,
            };
            return verdict;
        }
    }
    if let Some(token) = response.lines().rev().find(|l| !l.trim().is_empty()) {
        match token.trim().to_uppercase().as_str() {
            "A" => {
                verdict.winner = Winner::A;
                return verdict;
            }
            "B" => {
                verdict.winner = Winner::B;
                return verdict;
            }
            "TIE" => return verdict,
            _ => {}
        }
    }
    verdict.parse_failed = true;
    verdict
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyCounts {
    pub total: usize,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

impl TallyCounts {
    fn add(&mut self, winner: Winner) {
        self.total += 1;
        match winner {
            Winner::A => self.wins_a += 1,
            Winner::B => self.wins_b += 1,
            Winner::Tie => self.ties += 1,
        }
    }

    /// Share of wins for slot A, percent, one decimal, half-up.
    pub fn pct_a(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        round_half_up(100.0 * self.wins_a as f64 / self.total as f64, 1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TallyRow {
    pub system_a: String,
    pub system_b: String,
    pub overall: TallyCounts,
    pub per_target: BTreeMap<TargetGroup, TallyCounts>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TallyTable {
    /// Keyed `{system_a}|{system_b}`; the two swap halves of a comparison
    /// are separate rows.
    pub rows: BTreeMap<String, TallyRow>,
    /// Verdicts whose judge call failed, excluded from every row.
    pub failed: usize,
    /// Unreadable replies, included as ties.
    pub parse_failures: usize,
}

/// Fold verdicts into win counts per system pair, overall and per target
/// group. Every verdict must reference a pair from `pairs`, at most once.
pub fn tally(pairs: &[JudgePair], verdicts: &[JudgeVerdict]) -> Result<TallyTable, CoreError> {
    let by_id: BTreeMap<&str, &JudgePair> =
        pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    if by_id.len() != pairs.len() {
        return Err(CoreError::validation("duplicate pair id in pair list"));
    }
    let mut table = TallyTable { rows: BTreeMap::new(), failed: 0, parse_failures: 0 };
    let mut seen = std::collections::BTreeSet::new();
    for verdict in verdicts {
        let pair = by_id.get(verdict.pair_id.as_str()).ok_or_else(|| {
            CoreError::validation(format!("verdict references unknown pair {:?}", verdict.pair_id))
        })?;
        if !seen.insert(verdict.pair_id.as_str()) {
            return Err(CoreError::validation(format!(
                "more than one verdict for pair {:?}",
                verdict.pair_id
            )));
        }
        if verdict.failed {
            table.failed += 1;
            continue;
        }
        if verdict.parse_failed {
            table.parse_failures += 1;
        }
        let (system_a, system_b) = (system_label(&pair.cs_a), system_label(&pair.cs_b));
        let row = table
            .rows
            .entry(format!("{system_a}|{system_b}"))
            .or_insert_with(|| TallyRow {
                system_a,
                system_b,
                overall: TallyCounts::default(),
                per_target: BTreeMap::new(),
            });
        row.overall.add(verdict.winner);
        row.per_target.entry(pair.hs.target).or_default().add(verdict.winner);
    }
    Ok(table)
}

/// Render a tally as CSV with one overall line (target `ALL`) plus one line
/// per target group for every system pair.
pub fn tally_csv(table: &TallyTable) -> Result<String, CoreError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let context = "tally csv";
    writer
        .write_record(["system_a", "system_b", "target", "total", "wins_a", "pct_a"])
        .map_err(|e| CoreError::csv(context, e))?;
    for row in table.rows.values() {
        let mut emit = |target: &str, counts: &TallyCounts| {
            writer.write_record([
                row.system_a.as_str(),
                row.system_b.as_str(),
                target,
                &counts.total.to_string(),
                &counts.wins_a.to_string(),
                &format!("{:.1}", counts.pct_a()),
            ])
        };
        emit("ALL", &row.overall).map_err(|e| CoreError::csv(context, e))?;
        for (target, counts) in &row.per_target {
            emit(target.as_str(), counts).map_err(|e| CoreError::csv(context, e))?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CoreError::validation(format!("{context}: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CoreError::validation(format!("{context}: {e}")))
}

pub fn write_verdicts_jsonl(
    path: &std::path::Path,
    verdicts: &[JudgeVerdict],
) -> Result<(), CoreError> {
    let mut body = String::new();
    for v in verdicts {
        body.push_str(
            &serde_json::to_string(v).map_err(|e| CoreError::json("verdicts jsonl", e))?,
        );
        body.push('\n');
    }
    std::fs::write(path, body).map_err(|e| CoreError::io(path.to_path_buf(), e))
}

pub fn load_verdicts_jsonl(path: &std::path::Path) -> Result<Vec<JudgeVerdict>, CoreError> {
    let body =
        std::fs::read_to_string(path).map_err(|e| CoreError::io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: JudgeVerdict = serde_json::from_str(line)
            .map_err(|e| CoreError::json(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(v);
    }
    Ok(out)
}
