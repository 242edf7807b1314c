//! Parse raw completions into QA instances and apply the mechanical checks:
//! no attribution to source passages, an explicit "Therefore," conclusion,
//! and length sanity bounds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motif::Relation;
use crate::synthesis::{RawCompletion, SynthesisRecord};

pub const DEFAULT_ATTRIBUTION_BLACKLIST: &[&str] = &[
    "according to passage",
    "passage a",
    "passage b",
    "passage c",
    "the passage",
    "as stated in the text",
    "based on the provided",
    "the provided documents",
    "mentioned in the text",
];

pub const CHAIN_MARKER: &str = "Therefore,";

/// Titles of the documents an instance was synthesized from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePair {
    pub a: String,
    pub b: String,
    pub hub: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaInstance {
    pub question: String,
    /// Reasoning chain followed by the "Therefore," conclusion.
    pub answer: String,
    pub relation: Relation,
    pub pair: SourcePair,
    pub source_pair_key: String,
    pub flags: Vec<String>,
    /// Position of the originating completion in the raw-completions stream.
    pub completion_index: usize,
}

/// One line of the final dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub question: String,
    pub answer: String,
    pub relation: Relation,
    pub pair: SourcePair,
    pub flags: Vec<String>,
}

impl From<&QaInstance> for DatasetRecord {
    fn from(qa: &QaInstance) -> Self {
        Self {
            question: qa.question.clone(),
            answer: qa.answer.clone(),
            relation: qa.relation,
            pair: qa.pair.clone(),
            flags: qa.flags.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnViolation {
    #[default]
    Reject,
    Flag,
}

impl std::str::FromStr for OnViolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(OnViolation::Reject),
            "flag" => Ok(OnViolation::Flag),
            other => Err(Error::Config(format!("unknown violation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationPolicy {
    pub attribution_blacklist: Vec<String>,
    pub require_therefore: bool,
    pub min_answer_chars: usize,
    pub max_answer_chars: usize,
    pub min_question_chars: usize,
    pub max_question_chars: usize,
    pub on_violation: OnViolation,
    /// Instances kept per completion; later valid blocks are dropped or flagged.
    pub qa_per_pair: usize,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self {
            attribution_blacklist: DEFAULT_ATTRIBUTION_BLACKLIST
                .iter()
                .map(|s| s.to_string())
                .collect(),
            require_therefore: true,
            min_answer_chars: 200,
            max_answer_chars: 10_000,
            min_question_chars: 45,
            max_question_chars: 1_000,
            on_violation: OnViolation::Reject,
            qa_per_pair: 1,
        }
    }
}

impl ValidationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_answer_chars >= self.max_answer_chars {
            return Err(Error::Config(
                "min_answer_chars must be < max_answer_chars".into(),
            ));
        }
        if self.min_question_chars >= self.max_question_chars {
            return Err(Error::Config(
                "min_question_chars must be < max_question_chars".into(),
            ));
        }
        if self.qa_per_pair == 0 {
            return Err(Error::Config("qa_per_pair must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let policy: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io_path("cannot read", path, e))?;
        Self::from_toml_str(&text)
    }
}

/// Instances parsed from one completion plus the blocks that could not be used.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCompletion {
    pub instances: Vec<QaInstance>,
    pub malformed_blocks: u64,
}

fn strip_question_tag(line: &str) -> Option<&str> {
    line.trim_start().strip_prefix("Question:")
}

/// Splits a completion on lines starting with `Question:`; each block's text
/// before the first `Answer:` is the question and the rest is the answer.
pub fn parse_qa(completion: &RawCompletion) -> ParsedCompletion {
    parse_qa_text(&completion.completion_text, completion, 0)
}

fn parse_qa_text(text: &str, completion: &RawCompletion, index: usize) -> ParsedCompletion {
    let mut blocks: Vec<String> = Vec::new();
    let mut preamble = String::new();
    for line in text.lines() {
        if let Some(rest) = strip_question_tag(line) {
            blocks.push(rest.to_string());
        } else if let Some(current) = blocks.last_mut() {
            current.push('\n');
            current.push_str(line);
        } else {
            preamble.push_str(line);
            preamble.push('\n');
        }
    }

    let mut parsed = ParsedCompletion::default();
    if preamble.contains("Answer:") {
        // An answer with no question in front of it.
        parsed.malformed_blocks += 1;
    }
    let meta = &completion.pair;
    for block in blocks {
        let Some((q, a)) = block.split_once("Answer:") else {
            parsed.malformed_blocks += 1;
            continue;
        };
        let (question, answer) = (q.trim(), a.trim());
        if question.is_empty() || answer.is_empty() {
            parsed.malformed_blocks += 1;
            continue;
        }
        parsed.instances.push(QaInstance {
            question: question.to_string(),
            answer: answer.to_string(),
            relation: meta.relation,
            pair: SourcePair {
                a: meta.a_title.clone(),
                b: meta.b_title.clone(),
                hub: meta.hub_title.clone(),
            },
            source_pair_key: meta.key().to_string(),
            flags: Vec::new(),
            completion_index: index,
        });
    }
    parsed
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Leftmost-longest, non-overlapping, case-insensitive scan for blacklisted
/// phrases; a match must not start or end inside a word.
pub fn find_attribution(text: &str, blacklist: &[String]) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut phrases: Vec<String> = blacklist
        .iter()
        .map(|p| p.to_lowercase())
        .filter(|p| !p.is_empty())
        .collect();
    phrases.sort_by(|x, y| y.len().cmp(&x.len()).then_with(|| x.cmp(y)));

    let mut found: Vec<String> = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        let rest = &lower[i..];
        let prev = lower[..i].chars().next_back();
        let hit = if is_word_char(prev) {
            None
        } else {
            phrases.iter().find(|p| {
                rest.starts_with(p.as_str()) && !is_word_char(rest[p.len()..].chars().next())
            })
        };
        match hit {
            Some(p) => {
                if !found.contains(p) {
                    found.push(p.clone());
                }
                i += p.len();
            }
            None => i += rest.chars().next().map_or(1, char::len_utf8),
        }
    }
    found
}

pub fn check_omniscience(qa: &QaInstance, policy: &ValidationPolicy) -> Vec<String> {
    let text = format!("{}\n{}", qa.question, qa.answer);
    find_attribution(&text, &policy.attribution_blacklist)
}

pub fn check_chain(qa: &QaInstance, policy: &ValidationPolicy) -> bool {
    !policy.require_therefore || qa.answer.contains(CHAIN_MARKER)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Attribution,
    MissingTherefore,
    QuestionLength,
    AnswerLength,
    ExcessPerPair,
}

impl Violation {
    pub fn label(self) -> &'static str {
        match self {
            Violation::Attribution => "attribution",
            Violation::MissingTherefore => "missing_therefore",
            Violation::QuestionLength => "question_length",
            Violation::AnswerLength => "answer_length",
            Violation::ExcessPerPair => "excess_per_pair",
        }
    }
}

/// Counts per stage. Each rejected instance is attributed to its first failing
/// check, in the order attribution, chain, question length, answer length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub completions: u64,
    pub failed_completions: u64,
    pub empty_completions: u64,
    pub malformed_blocks: u64,
    pub instances: u64,
    pub accepted: u64,
    pub flagged: u64,
    pub attribution: u64,
    pub missing_therefore: u64,
    pub question_length: u64,
    pub answer_length: u64,
    pub excess_per_pair: u64,
}

impl ValidationReport {
    fn count(&mut self, v: Violation) {
        match v {
            Violation::Attribution => self.attribution += 1,
            Violation::MissingTherefore => self.missing_therefore += 1,
            Violation::QuestionLength => self.question_length += 1,
            Violation::AnswerLength => self.answer_length += 1,
            Violation::ExcessPerPair => self.excess_per_pair += 1,
        }
    }

    pub fn rejected(&self) -> u64 {
        self.attribution
            + self.missing_therefore
            + self.question_length
            + self.answer_length
            + self.excess_per_pair
    }
}

/// All violations of one instance, in reporting priority order.
pub fn violations(qa: &QaInstance, policy: &ValidationPolicy) -> (Vec<Violation>, Vec<String>) {
    let mut out = Vec::new();
    let phrases = check_omniscience(qa, policy);
    if !phrases.is_empty() {
        out.push(Violation::Attribution);
    }
    if !check_chain(qa, policy) {
        out.push(Violation::MissingTherefore);
    }
    let q = qa.question.chars().count();
    if q < policy.min_question_chars || q > policy.max_question_chars {
        out.push(Violation::QuestionLength);
    }
    let a = qa.answer.chars().count();
    if a < policy.min_answer_chars || a > policy.max_answer_chars {
        out.push(Violation::AnswerLength);
    }
    (out, phrases)
}

/// Applies every check. Reject mode drops violating instances; flag mode keeps
/// them with `flags` populated.
pub fn validate(
    instances: Vec<QaInstance>,
    policy: &ValidationPolicy,
) -> (Vec<QaInstance>, ValidationReport) {
    let mut report = ValidationReport {
        instances: instances.len() as u64,
        ..ValidationReport::default()
    };
    let mut accepted = Vec::with_capacity(instances.len());
    let mut kept_for: Option<(usize, usize)> = None;
    for mut qa in instances {
        let (mut found, phrases) = violations(&qa, policy);
        if found.is_empty() {
            let kept = match kept_for {
                Some((idx, n)) if idx == qa.completion_index => n,
                _ => 0,
            };
            if kept >= policy.qa_per_pair {
                found.push(Violation::ExcessPerPair);
            } else {
                kept_for = Some((qa.completion_index, kept + 1));
            }
        }
        if found.is_empty() {
            accepted.push(qa);
            continue;
        }
        match policy.on_violation {
            OnViolation::Reject => report.count(found[0]),
            OnViolation::Flag => {
                for v in &found {
                    report.count(*v);
                }
                report.flagged += 1;
                qa.flags = found.iter().map(|v| v.label().to_string()).collect();
                qa.flags
                    .extend(phrases.into_iter().map(|p| format!("attribution:{p}")));
                accepted.push(qa);
            }
        }
    }
    report.accepted = accepted.len() as u64;
    (accepted, report)
}

/// Parses every successful completion and validates the resulting instances.
pub fn validate_completions(
    records: &[SynthesisRecord],
    policy: &ValidationPolicy,
) -> (Vec<QaInstance>, ValidationReport) {
    let mut instances = Vec::new();
    let mut malformed = 0;
    let mut empty = 0;
    let mut failed = 0;
    for (idx, record) in records.iter().enumerate() {
        let completion = match record {
            SynthesisRecord::Ok(c) => c,
            SynthesisRecord::Failed(_) => {
                failed += 1;
                continue;
            }
        };
        let parsed = parse_qa_text(&completion.completion_text, completion, idx);
        malformed += parsed.malformed_blocks;
        if parsed.instances.is_empty() {
            empty += 1;
        }
        instances.extend(parsed.instances);
    }
    let (accepted, mut report) = validate(instances, policy);
    report.completions = records.len() as u64;
    report.failed_completions = failed;
    report.empty_completions = empty;
    report.malformed_blocks = malformed;
    (accepted, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::PairMeta;

    fn completion(text: &str) -> RawCompletion {
        RawCompletion {
            pair: PairMeta {
                a: 0,
                b: 1,
                relation: Relation::CoMention,
                hub: Some(2),
                a_title: "A".into(),
                b_title: "B".into(),
                hub_title: Some("E".into()),
            },
            prompt_chars: 10,
            completion_text: text.into(),
            latency_ms: 1,
            attempt: 1,
            endpoint_finish_reason: "stop".into(),
        }
    }

    fn qa(question: &str, answer: &str) -> QaInstance {
        QaInstance {
            question: question.into(),
            answer: answer.into(),
            relation: Relation::DualLink,
            pair: SourcePair {
                a: "A".into(),
                b: "B".into(),
                hub: None,
            },
            source_pair_key: "0-1".into(),
            flags: vec![],
            completion_index: 0,
        }
    }

    const LONG_Q: &str =
        "Which composer scored both a Nolan film and a film that won Best Picture?";

    fn long_answer(body: &str) -> String {
        format!(
            "{body} {}",
            "Further factual premises follow in order. ".repeat(6)
        )
    }

    #[test]
    fn parse_single_block() {
        let parsed = parse_qa(&completion("Question: Q1\nAnswer: A1. Therefore, X."));
        assert_eq!(parsed.instances.len(), 1);
        assert_eq!(parsed.instances[0].question, "Q1");
        assert_eq!(parsed.instances[0].answer, "A1. Therefore, X.");
        assert_eq!(parsed.instances[0].pair.hub.as_deref(), Some("E"));
        assert_eq!(parsed.instances[0].source_pair_key, "0-1");
    }

    #[test]
    fn parse_two_blocks_in_order() {
        let text = "Intro line\nQuestion: Q1\nAnswer: A1\nmore A1\n\nQuestion: Q2\nAnswer: A2";
        let parsed = parse_qa(&completion(text));
        let qs: Vec<_> = parsed
            .instances
            .iter()
            .map(|i| i.question.as_str())
            .collect();
        assert_eq!(qs, vec!["Q1", "Q2"]);
        assert_eq!(parsed.instances[0].answer, "A1\nmore A1");
        assert_eq!(parsed.malformed_blocks, 0);
    }

    #[test]
    fn parse_malformed() {
        let parsed = parse_qa(&completion("Answer: orphan"));
        assert!(parsed.instances.is_empty());
        assert_eq!(parsed.malformed_blocks, 1);
        let parsed = parse_qa(&completion(
            "Question: no answer here\nQuestion: Q\nAnswer: A",
        ));
        assert_eq!(parsed.instances.len(), 1);
        assert_eq!(parsed.malformed_blocks, 1);
        let parsed = parse_qa(&completion("Question:\nAnswer: A"));
        assert!(parsed.instances.is_empty());
        assert!(parse_qa(&completion("")).instances.is_empty());
    }

    #[test]
    fn omniscience_examples() {
        let policy = ValidationPolicy::default();
        let v = check_omniscience(&qa("Q?", "According to Passage A, the film won."), &policy);
        assert_eq!(v, vec!["according to passage"]);
        assert!(check_omniscience(&qa("Q?", "The film won two awards."), &policy).is_empty());
        let v = check_omniscience(&qa("Q?", "Based on the provided documents, yes."), &policy);
        assert!(!v.is_empty());
    }

    #[test]
    fn attribution_requires_word_boundaries() {
        let bl = ValidationPolicy::default().attribution_blacklist;
        assert!(find_attribution("A passage across the Alps.", &bl).is_empty());
        assert!(find_attribution("The passages were long.", &bl).is_empty());
        assert_eq!(
            find_attribution("as noted in passage b.", &bl),
            vec!["passage b"]
        );
        assert_eq!(
            find_attribution("Per THE PASSAGE, no.", &bl),
            vec!["the passage"]
        );
    }

    #[test]
    fn chain_examples() {
        let policy = ValidationPolicy::default();
        assert!(check_chain(
            &qa(
                "Q",
                "Zimmer scored Dune. Therefore, the answer is Dune and Oppenheimer."
            ),
            &policy
        ));
        assert!(!check_chain(&qa("Q", "therefore the answer"), &policy));
        assert!(!check_chain(&qa("Q", "Therefore the answer"), &policy));
        let lax = ValidationPolicy {
            require_therefore: false,
            ..policy
        };
        assert!(check_chain(&qa("Q", "no marker"), &lax));
    }

    #[test]
    fn validate_modes() {
        let clean = qa(
            LONG_Q,
            &long_answer("Göransson scored Oppenheimer. Therefore, Oppenheimer."),
        );
        let dirty = QaInstance {
            completion_index: 1,
            ..qa(
                LONG_Q,
                &long_answer("According to Passage A it did. Therefore, yes."),
            )
        };
        let input = vec![clean.clone(), dirty.clone()];

        let (accepted, report) = validate(vec![clean.clone()], &ValidationPolicy::default());
        assert_eq!(accepted, vec![clean.clone()]);
        assert_eq!(report.rejected(), 0);

        let (accepted, report) = validate(input.clone(), &ValidationPolicy::default());
        assert_eq!(accepted.len(), 1);
        assert_eq!(report.attribution, 1);
        assert_eq!(report.rejected(), report.instances - report.accepted);

        let flag = ValidationPolicy {
            on_violation: OnViolation::Flag,
            ..ValidationPolicy::default()
        };
        let (accepted, report) = validate(input, &flag);
        assert_eq!(accepted.len(), 2);
        assert_eq!(report.flagged, 1);
        assert_eq!(
            accepted[1].flags,
            vec!["attribution", "attribution:according to passage"]
        );
    }

    #[test]
    fn only_first_valid_block_per_completion_is_kept() {
        let a = qa(LONG_Q, &long_answer("First. Therefore, one."));
        let b = qa(LONG_Q, &long_answer("Second. Therefore, two."));
        let (accepted, report) = validate(vec![a.clone(), b.clone()], &ValidationPolicy::default());
        assert_eq!(accepted, vec![a.clone()]);
        assert_eq!(report.excess_per_pair, 1);
        let two = ValidationPolicy {
            qa_per_pair: 2,
            ..ValidationPolicy::default()
        };
        assert_eq!(validate(vec![a, b], &two).0.len(), 2);
    }

    #[test]
    fn length_bounds() {
        let policy = ValidationPolicy::default();
        let (_, report) = validate(
            vec![qa("Short?", &long_answer("x. Therefore, y."))],
            &policy,
        );
        assert_eq!(report.question_length, 1);
        let (_, report) = validate(vec![qa(LONG_Q, "Tiny. Therefore, tiny.")], &policy);
        assert_eq!(report.answer_length, 1);
    }

    #[test]
    fn policy_from_toml() {
        let p = ValidationPolicy::from_toml_str(
            "attribution_blacklist = [\"per the source\"]\non_violation = \"flag\"\nmin_answer_chars = 10\n",
        )
        .unwrap();
        assert_eq!(p.attribution_blacklist, vec!["per the source"]);
        assert_eq!(p.on_violation, OnViolation::Flag);
        assert_eq!(p.max_answer_chars, 10_000);
        assert!(ValidationPolicy::from_toml_str("min_question_chars = 5000").is_err());
    }

    #[test]
    fn dataset_record_round_trip() {
        let qa = qa("Q \"quoted\"\nline", "A with ünïcode. Therefore, done.");
        let line = serde_json::to_string(&DatasetRecord::from(&qa)).unwrap();
        let back: DatasetRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.question, qa.question);
        assert_eq!(back.answer, qa.answer);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            vec!["answer", "flags", "pair", "question", "relation"]
        );
    }
}
