//! Turns raw completions into correctness booleans and accuracies.
//!
//! Extraction is heuristic by necessity: classification looks for the first
//! known label on the first output line, numeric grading takes the last
//! number-like token (preferring one after a `####` / "answer is" marker),
//! and exact grading compares whitespace-normalized final lines. Output that
//! defeats extraction scores as incorrect, never as an error, so accuracy
//! stays a total function over all completions.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    LabelMatch,
    ExactMatch,
    NumericTolerance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scorer {
    pub kind: ScorerKind,
    /// Relative tolerance for numeric grading, with an absolute floor of 1
    /// in the denominator so gold = 0 still grades sensibly.
    pub relative_tolerance: f64,
    pub label_set: Option<Vec<String>>,
}

impl Scorer {
    pub fn label_match(label_set: Vec<String>) -> Self {
        Scorer {
            kind: ScorerKind::LabelMatch,
            relative_tolerance: DEFAULT_RELATIVE_TOLERANCE,
            label_set: Some(label_set),
        }
    }

    pub fn exact_match() -> Self {
        Scorer {
            kind: ScorerKind::ExactMatch,
            relative_tolerance: DEFAULT_RELATIVE_TOLERANCE,
            label_set: None,
        }
    }

    pub fn numeric(relative_tolerance: f64) -> Self {
        assert!(
            relative_tolerance > 0.0,
            "numeric tolerance must be positive"
        );
        Scorer {
            kind: ScorerKind::NumericTolerance,
            relative_tolerance,
            label_set: None,
        }
    }
}

pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchReason {
    Matched,
    Mismatched,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub correct: bool,
    /// What was actually compared against the gold target.
    pub extracted: String,
    pub reason: MatchReason,
}

impl ScoreResult {
    fn unparseable(extracted: impl Into<String>) -> Self {
        ScoreResult {
            correct: false,
            extracted: extracted.into(),
            reason: MatchReason::Unparseable,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoringError {
    #[error("accuracy of an empty result list is undefined")]
    EmptyResults,
}

static NUMBER_RE: Lazy<Regex> = Lazy::new(|| {
    // Simple fractions first so "1/3" is one token, then decimals with
    // optional $ and thousands separators.
    Regex::new(r"-?\d+\s*/\s*\d+|-?\$?\d[\d,]*(?:\.\d+)?").expect("static regex")
});

const ANSWER_MARKERS: [&str; 2] = ["####", "answer is"];

/// Pulls the comparable answer out of raw model output. `None` means the
/// output defeated extraction and will score as unparseable.
pub fn extract_answer(output: &str, task_kind: TaskKind, scorer: &Scorer) -> Option<String> {
    match (task_kind, scorer.kind) {
        (TaskKind::Classification, _) | (_, ScorerKind::LabelMatch) => {
            let first_line = output.lines().next().unwrap_or("").trim();
            if let Some(labels) = &scorer.label_set {
                if let Some(label) = first_label_in(first_line, labels) {
                    return Some(label);
                }
            }
            Some(first_line.to_string())
        }
        (TaskKind::Generation, ScorerKind::NumericTolerance) => {
            let lowered = output.to_lowercase();
            let after_marker = ANSWER_MARKERS
                .iter()
                .filter_map(|m| lowered.rfind(m).map(|at| at + m.len()))
                .max()
                .map(|at| &output[at..]);
            if let Some(tail) = after_marker {
                if let Some(m) = NUMBER_RE.find(tail) {
                    return Some(m.as_str().trim().to_string());
                }
            }
            NUMBER_RE
                .find_iter(output)
                .last()
                .map(|m| m.as_str().trim().to_string())
        }
        (TaskKind::Generation, ScorerKind::ExactMatch) => output
            .lines()
            .rev()
            .map(str::trim)
            .find(|line| !line.is_empty())
            .map(String::from),
    }
}

/// Earliest label occurrence wins; at equal positions the longer label wins
/// so that e.g. "Sports" beats "Sport". Matches are case-insensitive and
/// must sit on word boundaries.
fn first_label_in(line: &str, labels: &[String]) -> Option<String> {
    let haystack = line.to_lowercase();
    let mut best: Option<(usize, usize, &String)> = None;
    for label in labels {
        let needle = label.to_lowercase();
        if needle.is_empty() {
            continue;
        }
        let mut from = 0;
        while let Some(relative) = haystack[from..].find(&needle) {
            let at = from + relative;
            if on_word_boundary(&haystack, at, needle.len()) {
                let candidate = (at, needle.len(), label);
                best = match best {
                    None => Some(candidate),
                    Some(current)
                        if at < current.0 || (at == current.0 && needle.len() > current.1) =>
                    {
                        Some(candidate)
                    }
                    keep => keep,
                };
                break;
            }
            // Advance past the whole first char of the failed match so the
            // next slice stays on a UTF-8 boundary.
            from = at + haystack[at..].chars().next().map_or(1, char::len_utf8);
        }
    }
    best.map(|(_, _, label)| label.clone())
}

fn on_word_boundary(haystack: &str, at: usize, len: usize) -> bool {
    let before = haystack[..at].chars().next_back();
    let after = haystack[at + len..].chars().next();
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric());
    !is_word(before) && !is_word(after)
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_numeric(s: &str) -> Option<f64> {
    let cleaned: String = s
        .trim()
        .chars()
        .filter(|c| *c != '$' && *c != ',')
        .collect();
    if let Some((numerator, denominator)) = cleaned.split_once('/') {
        let n: f64 = numerator.trim().parse().ok()?;
        let d: f64 = denominator.trim().parse().ok()?;
        if d == 0.0 {
            return None;
        }
        return Some(n / d);
    }
    cleaned.parse().ok()
}

/// Compares an extracted answer against the gold target.
pub fn score(extracted: &str, gold: &str, scorer: &Scorer) -> ScoreResult {
    let (correct, reason) = match scorer.kind {
        ScorerKind::LabelMatch => {
            let matched = extracted.trim().to_lowercase() == gold.trim().to_lowercase();
            (
                matched,
                if matched {
                    MatchReason::Matched
                } else {
                    MatchReason::Mismatched
                },
            )
        }
        ScorerKind::ExactMatch => {
            let matched = normalize_whitespace(extracted) == normalize_whitespace(gold);
            (
                matched,
                if matched {
                    MatchReason::Matched
                } else {
                    MatchReason::Mismatched
                },
            )
        }
        ScorerKind::NumericTolerance => {
            let (Some(predicted), Some(target)) = (parse_numeric(extracted), parse_numeric(gold))
            else {
                return ScoreResult::unparseable(extracted);
            };
            let matched =
                (predicted - target).abs() <= scorer.relative_tolerance * target.abs().max(1.0);
            (
                matched,
                if matched {
                    MatchReason::Matched
                } else {
                    MatchReason::Mismatched
                },
            )
        }
    };
    ScoreResult {
        correct,
        extracted: extracted.to_string(),
        reason,
    }
}

/// Extraction plus scoring in one step; extraction failure becomes an
/// unparseable (incorrect) result.
pub fn score_output(output: &str, gold: &str, task_kind: TaskKind, scorer: &Scorer) -> ScoreResult {
    match extract_answer(output, task_kind, scorer) {
        Some(extracted) => score(&extracted, gold, scorer),
        None => ScoreResult::unparseable(""),
    }
}

/// Fraction of correct results: exact count divided once at the end.
pub fn accuracy(results: &[ScoreResult]) -> Result<f64, ScoringError> {
    if results.is_empty() {
        return Err(ScoringError::EmptyResults);
    }
    let correct = results.iter().filter(|r| r.correct).count();
    Ok(correct as f64 / results.len() as f64)
}
