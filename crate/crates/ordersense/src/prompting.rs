//! Canonical default ordering, permutation sampling, and deterministic
//! prompt rendering.
//!
//! The default ordering is the reference frame that makes permutations
//! comparable across demonstration sets: classification examples are grouped
//! by label (labels in codepoint order) and sorted by input text within each
//! group; generation examples are sorted by input text. "Alphabetically"
//! means raw Unicode codepoint order with no locale or case folding, ties
//! broken by id, so the order is bit-reproducible across platforms.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, TaskKind};
use crate::util::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error(
        "requested {requested} permutations but only {available}! = {limit} exist for k = {k}"
    )]
    TooManyPermutations {
        requested: usize,
        available: usize,
        limit: u64,
        k: usize,
    },
    #[error("permutation length {got} does not match demonstration count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("indices {0:?} are not a bijection on 0..k")]
    NotABijection(Vec<usize>),
    #[error("template error: {0}")]
    Template(String),
}

/// A demonstration set held in its canonical default order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemonstrationSet {
    pub set_index: usize,
    pub examples: Vec<Example>,
    pub task_kind: TaskKind,
}

impl DemonstrationSet {
    /// Builds a set from raw sampled examples, applying the default order.
    pub fn new(set_index: usize, examples: Vec<Example>, task_kind: TaskKind) -> Self {
        DemonstrationSet {
            set_index,
            examples: default_order(examples, task_kind),
            task_kind,
        }
    }

    pub fn k(&self) -> usize {
        self.examples.len()
    }

    pub fn example_ids(&self) -> Vec<String> {
        self.examples.iter().map(|e| e.id.clone()).collect()
    }
}

/// A bijection on demonstration positions 0..k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    pub perm_index: usize,
    pub indices: Vec<usize>,
}

impl Permutation {
    pub fn new(perm_index: usize, indices: Vec<usize>) -> Result<Self, PromptError> {
        if !is_bijection(&indices) {
            return Err(PromptError::NotABijection(indices));
        }
        Ok(Permutation {
            perm_index,
            indices,
        })
    }

    pub fn identity(k: usize) -> Self {
        Permutation {
            perm_index: 0,
            indices: (0..k).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn is_identity(&self) -> bool {
        self.indices.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.indices.len()];
        for (position, &source) in self.indices.iter().enumerate() {
            inv[source] = position;
        }
        Permutation {
            perm_index: self.perm_index,
            indices: inv,
        }
    }
}

fn is_bijection(indices: &[usize]) -> bool {
    let mut seen = vec![false; indices.len()];
    for &i in indices {
        if i >= indices.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Canonical deterministic arrangement of examples; idempotent and invariant
/// under shuffles of the input.
pub fn default_order(mut examples: Vec<Example>, task_kind: TaskKind) -> Vec<Example> {
    match task_kind {
        TaskKind::Classification => examples.sort_by(|a, b| {
            (a.label.as_deref(), a.input_text.as_str(), a.id.as_str()).cmp(&(
                b.label.as_deref(),
                b.input_text.as_str(),
                b.id.as_str(),
            ))
        }),
        TaskKind::Generation => examples.sort_by(|a, b| {
            (a.input_text.as_str(), a.id.as_str()).cmp(&(b.input_text.as_str(), b.id.as_str()))
        }),
    }
    examples
}

fn factorial_capped(k: usize) -> Option<u64> {
    // Exact comparison is only attempted up to 20!, which still fits in u64.
    if k > 20 {
        return None;
    }
    Some((2..=k as u64).product())
}

/// P distinct permutations exist only when P <= k!; beyond k = 20 the
/// budget is assumed feasible.
pub fn check_permutation_budget(k: usize, p: usize) -> Result<(), PromptError> {
    if let Some(limit) = factorial_capped(k) {
        if p as u64 > limit {
            return Err(PromptError::TooManyPermutations {
                requested: p,
                available: k,
                limit,
                k,
            });
        }
    }
    Ok(())
}

/// Draws `p` distinct permutations of 0..k uniformly without replacement
/// (rejection on duplicates). With `include_identity`, the first permutation
/// is the identity and the remaining draws are distinct non-identity ones.
pub fn sample_permutations(
    k: usize,
    p: usize,
    seed: u64,
    include_identity: bool,
) -> Result<Vec<Permutation>, PromptError> {
    check_permutation_budget(k, p)?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["perms"]));
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut permutations = Vec::with_capacity(p);

    if include_identity && p > 0 {
        let identity: Vec<usize> = (0..k).collect();
        seen.insert(identity.clone());
        permutations.push(Permutation {
            perm_index: 0,
            indices: identity,
        });
    }

    let mut scratch: Vec<usize> = (0..k).collect();
    while permutations.len() < p {
        scratch.shuffle(&mut rng);
        if seen.insert(scratch.clone()) {
            permutations.push(Permutation {
                perm_index: permutations.len(),
                indices: scratch.clone(),
            });
        }
    }
    Ok(permutations)
}

/// Applies a permutation to a default-ordered set: output[t] = examples[indices[t]].
pub fn apply_permutation(
    set: &DemonstrationSet,
    perm: &Permutation,
) -> Result<Vec<Example>, PromptError> {
    if perm.k() != set.k() {
        return Err(PromptError::LengthMismatch {
            expected: set.k(),
            got: perm.k(),
        });
    }
    Ok(perm
        .indices
        .iter()
        .map(|&i| set.examples[i].clone())
        .collect())
}

/// Kendall-tau distance: the number of pairwise order disagreements between
/// two permutations of the same length. O(k^2), which is fine at prompt sizes.
pub fn kendall_tau_distance(a: &[usize], b: &[usize]) -> Result<usize, PromptError> {
    if a.len() != b.len() {
        return Err(PromptError::LengthMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    if !is_bijection(a) {
        return Err(PromptError::NotABijection(a.to_vec()));
    }
    if !is_bijection(b) {
        return Err(PromptError::NotABijection(b.to_vec()));
    }
    // Position of each element under b, then count inversions of a seen
    // through those positions.
    let mut position = vec![0; b.len()];
    for (rank, &element) in b.iter().enumerate() {
        position[element] = rank;
    }
    let ranks: Vec<usize> = a.iter().map(|&element| position[element]).collect();
    let mut distance = 0;
    for i in 0..ranks.len() {
        for j in i + 1..ranks.len() {
            if ranks[i] > ranks[j] {
                distance += 1;
            }
        }
    }
    Ok(distance)
}

/// Maximum Kendall-tau distance for length k: k(k-1)/2.
pub fn kendall_tau_max(k: usize) -> usize {
    k * (k.saturating_sub(1)) / 2
}

const INPUT_PLACEHOLDER: &str = "{input}";
const TARGET_PLACEHOLDERS: [&str; 3] = ["{label}", "{answer}", "{label_or_answer}"];

/// Prompt layout: a per-demonstration block, a query block, and the separator
/// joining them. The demo block must mention `{input}` once and exactly one
/// of `{label}`, `{answer}` or `{label_or_answer}`; the query block mentions
/// `{input}` once and no target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub demo_block: String,
    pub query_block: String,
    pub separator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_preamble: Option<String>,
}

impl PromptTemplate {
    pub fn defaults_for(task_kind: TaskKind) -> Self {
        match task_kind {
            TaskKind::Classification => PromptTemplate {
                demo_block: "{input}\nLabel: {label}".into(),
                query_block: "{input}\nLabel:".into(),
                separator: "\n\n".into(),
                system_preamble: None,
            },
            TaskKind::Generation => PromptTemplate {
                demo_block: "Question: {input}\nAnswer: {answer}".into(),
                query_block: "Question: {input}\nAnswer:".into(),
                separator: "\n\n".into(),
                system_preamble: None,
            },
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let count = |haystack: &str, needle: &str| haystack.matches(needle).count();
        if count(&self.demo_block, INPUT_PLACEHOLDER) != 1 {
            return Err(PromptError::Template(format!(
                "demo_block must contain {INPUT_PLACEHOLDER} exactly once"
            )));
        }
        let targets: usize = TARGET_PLACEHOLDERS
            .iter()
            .map(|p| count(&self.demo_block, p))
            .sum();
        if targets != 1 {
            return Err(PromptError::Template(
                "demo_block must contain exactly one of {label}, {answer} or {label_or_answer}"
                    .into(),
            ));
        }
        if count(&self.query_block, INPUT_PLACEHOLDER) != 1 {
            return Err(PromptError::Template(format!(
                "query_block must contain {INPUT_PLACEHOLDER} exactly once"
            )));
        }
        if TARGET_PLACEHOLDERS
            .iter()
            .any(|p| self.query_block.contains(p))
        {
            return Err(PromptError::Template(
                "query_block must not contain a target placeholder".into(),
            ));
        }
        Ok(())
    }
}

/// A rendered prompt; the text is byte-deterministic in its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
}

/// Single-pass placeholder substitution. Values are never re-scanned, so an
/// input text containing a placeholder string cannot corrupt the render.
fn substitute(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    loop {
        let hit = pairs
            .iter()
            .filter_map(|(key, value)| rest.find(key).map(|at| (at, *key, *value)))
            .min_by_key(|(at, ..)| *at);
        match hit {
            Some((at, key, value)) => {
                out.push_str(&rest[..at]);
                out.push_str(value);
                rest = &rest[at + key.len()..];
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

/// Everything before the query block: optional preamble plus the rendered
/// demonstration blocks, each followed by one separator. Empty for a
/// zero-shot prompt without preamble. Precomputing this once per
/// demonstration arrangement keeps large evaluation grids cheap.
pub fn render_demo_prefix(
    demos: &[Example],
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    template.validate()?;
    let mut prefix = String::new();
    if let Some(preamble) = &template.system_preamble {
        prefix.push_str(preamble);
        prefix.push_str(&template.separator);
    }
    for demo in demos {
        let gold = demo.gold();
        prefix.push_str(&substitute(
            &template.demo_block,
            &[
                (INPUT_PLACEHOLDER, demo.input_text.as_str()),
                ("{label}", gold),
                ("{answer}", gold),
                ("{label_or_answer}", gold),
            ],
        ));
        prefix.push_str(&template.separator);
    }
    Ok(prefix)
}

/// The query block with its input filled in.
pub fn render_query_block(
    query: &Example,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    template.validate()?;
    Ok(substitute(
        &template.query_block,
        &[(INPUT_PLACEHOLDER, query.input_text.as_str())],
    ))
}

/// Renders demonstrations (in the given order) followed by the query.
/// Exactly one separator sits between consecutive blocks; zero-shot prompts
/// are just the query block.
pub fn render_prompt(
    demos: &[Example],
    query: &Example,
    template: &PromptTemplate,
) -> Result<RenderedPrompt, PromptError> {
    let mut text = render_demo_prefix(demos, template)?;
    text.push_str(&render_query_block(query, template)?);
    Ok(RenderedPrompt { text })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn example(id: &str, text: &str, label: Option<&str>) -> Example {
        Example {
            id: id.into(),
            input_text: text.into(),
            label: label.map(String::from),
            answer: if label.is_none() {
                Some("42".into())
            } else {
                None
            },
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn classification_default_order_groups_then_sorts() {
        let input = vec![
            example("1", "z", Some("B")),
            example("2", "a", Some("B")),
            example("3", "m", Some("A")),
        ];
        let ordered = default_order(input, TaskKind::Classification);
        let texts: Vec<&str> = ordered.iter().map(|e| e.input_text.as_str()).collect();
        assert_eq!(texts, vec!["m", "a", "z"]);
    }

    #[test]
    fn generation_default_order_is_lexicographic() {
        let input = vec![
            example("1", "b", None),
            example("2", "a", None),
            example("3", "c", None),
        ];
        let ordered = default_order(input, TaskKind::Generation);
        let texts: Vec<&str> = ordered.iter().map(|e| e.input_text.as_str()).collect();
        assert_eq!(texts, vec!["a", "b", "c"]);
    }

    #[test]
    fn identical_text_ties_break_by_id() {
        // Oracle: the documented comparator is a total order, so sorting any
        // shuffle of the same multiset must produce one fixed output.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base: Vec<Example> = (0..12)
            .map(|i| {
                example(
                    &format!("id{i:02}"),
                    if i % 3 == 0 { "same" } else { "other" },
                    Some(if i % 2 == 0 { "A" } else { "B" }),
                )
            })
            .collect();
        let reference = default_order(base.clone(), TaskKind::Classification);
        for _ in 0..50 {
            let mut shuffled = base.clone();
            shuffled.shuffle(&mut rng);
            assert_eq!(default_order(shuffled, TaskKind::Classification), reference);
        }
        // Ties on (label, text) are ordered by ascending id.
        let pair = default_order(
            vec![
                example("b", "same", Some("A")),
                example("a", "same", Some("A")),
            ],
            TaskKind::Classification,
        );
        assert_eq!(pair[0].id, "a");
        assert_eq!(pair[1].id, "b");
    }

    #[test]
    fn default_order_is_idempotent() {
        let input: Vec<Example> = (0..20)
            .map(|i| example(&format!("e{i}"), &format!("t{}", 19 - i), Some("A")))
            .collect();
        let once = default_order(input, TaskKind::Classification);
        let twice = default_order(once.clone(), TaskKind::Classification);
        assert_eq!(once, twice);
    }

    #[test]
    fn demonstration_set_construction_applies_default_order() {
        let set = DemonstrationSet::new(
            0,
            vec![example("1", "b", None), example("2", "a", None)],
            TaskKind::Generation,
        );
        assert_eq!(set.examples[0].input_text, "a");
        assert_eq!(set.example_ids(), vec!["2", "1"]);
    }

    #[test]
    fn sampling_k3_p6_exhausts_all_permutations() {
        let perms = sample_permutations(3, 6, 0, false).unwrap();
        assert_eq!(perms.len(), 6);
        let unique: HashSet<Vec<usize>> = perms.iter().map(|p| p.indices.clone()).collect();
        assert_eq!(unique.len(), 6);
        for (j, perm) in perms.iter().enumerate() {
            assert_eq!(perm.perm_index, j);
            assert!(is_bijection(&perm.indices));
        }
    }

    #[test]
    fn sampling_more_than_factorial_fails() {
        assert!(matches!(
            sample_permutations(2, 3, 0, false),
            Err(PromptError::TooManyPermutations { .. })
        ));
    }

    #[test]
    fn sampling_k8_p128_is_distinct_and_deterministic() {
        let first = sample_permutations(8, 128, 41, false).unwrap();
        let second = sample_permutations(8, 128, 41, false).unwrap();
        assert_eq!(first, second);
        let unique: HashSet<Vec<usize>> = first.iter().map(|p| p.indices.clone()).collect();
        assert_eq!(unique.len(), 128);
    }

    #[test]
    fn include_identity_pins_first_permutation() {
        let perms = sample_permutations(4, 10, 3, true).unwrap();
        assert!(perms[0].is_identity());
        assert!(perms[1..].iter().all(|p| !p.is_identity()));
    }

    #[test]
    fn large_k_skips_factorial_check() {
        let perms = sample_permutations(25, 4, 9, false).unwrap();
        assert_eq!(perms.len(), 4);
    }

    #[test]
    fn apply_identity_keeps_default_order() {
        let set = DemonstrationSet::new(
            0,
            vec![example("1", "a", None), example("2", "b", None)],
            TaskKind::Generation,
        );
        let out = apply_permutation(&set, &Permutation::identity(2)).unwrap();
        assert_eq!(out, set.examples);
    }

    #[test]
    fn apply_swap_and_length_mismatch() {
        let set = DemonstrationSet::new(
            0,
            vec![example("1", "a", None), example("2", "b", None)],
            TaskKind::Generation,
        );
        let swapped = apply_permutation(&set, &Permutation::new(0, vec![1, 0]).unwrap()).unwrap();
        assert_eq!(swapped[0].input_text, "b");
        assert!(matches!(
            apply_permutation(&set, &Permutation::identity(3)),
            Err(PromptError::LengthMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn permutation_then_inverse_restores_default_order() {
        // Oracle: group inverse over random permutations.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let k = rng.gen_range(1..9);
            let set = DemonstrationSet::new(
                0,
                (0..k)
                    .map(|i| example(&format!("e{i}"), &format!("t{i}"), None))
                    .collect(),
                TaskKind::Generation,
            );
            let perm = &sample_permutations(k, 1, rng.gen(), false).unwrap()[0];
            let once = apply_permutation(&set, perm).unwrap();
            let shuffled_set = DemonstrationSet {
                set_index: 0,
                examples: once,
                task_kind: TaskKind::Generation,
            };
            let back = apply_permutation(&shuffled_set, &perm.inverse()).unwrap();
            assert_eq!(back, set.examples);
        }
    }

    #[test]
    fn apply_permutation_preserves_multiset() {
        let set = DemonstrationSet::new(
            0,
            (0..6)
                .map(|i| example(&format!("e{i}"), &format!("t{i}"), None))
                .collect(),
            TaskKind::Generation,
        );
        for perm in sample_permutations(6, 24, 8, false).unwrap() {
            let out = apply_permutation(&set, &perm).unwrap();
            let mut ids: Vec<&str> = out.iter().map(|e| e.id.as_str()).collect();
            ids.sort();
            let mut expected: Vec<&str> = set.examples.iter().map(|e| e.id.as_str()).collect();
            expected.sort();
            assert_eq!(ids, expected);
        }
    }

    #[test]
    fn kendall_distance_basics() {
        assert_eq!(
            kendall_tau_distance(&[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap(),
            0
        );
        assert_eq!(
            kendall_tau_distance(&[3, 2, 1, 0], &[0, 1, 2, 3]).unwrap(),
            6
        );
        assert_eq!(
            kendall_tau_distance(&[1, 2, 3, 0], &[0, 1, 2, 3]).unwrap(),
            3
        );
        assert_eq!(kendall_tau_max(4), 6);
        assert_eq!(kendall_tau_max(1), 0);
        assert!(kendall_tau_distance(&[0, 1], &[0, 1, 2]).is_err());
    }

    #[test]
    fn kendall_distance_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let k = rng.gen_range(2..10);
            let a = &sample_permutations(k, 1, rng.gen(), false).unwrap()[0].indices;
            let b = &sample_permutations(k, 1, rng.gen(), false).unwrap()[0].indices;
            let d = kendall_tau_distance(a, b).unwrap();
            assert_eq!(d, kendall_tau_distance(b, a).unwrap());
            assert!(d <= kendall_tau_max(k));
            assert_eq!(kendall_tau_distance(a, a).unwrap(), 0);
        }
    }

    #[test]
    fn zero_shot_render_is_just_the_query_block() {
        let template = PromptTemplate {
            demo_block: "{input}\nLabel: {label}".into(),
            query_block: "Q: {input}\nA:".into(),
            separator: "\n\n".into(),
            system_preamble: None,
        };
        let query = example("q", "Q", Some("A"));
        let rendered = render_prompt(&[], &query, &template).unwrap();
        assert_eq!(rendered.text, "Q: Q\nA:");
    }

    #[test]
    fn render_places_exactly_one_separator_between_blocks() {
        // Oracle: manual string concatenation.
        let template = PromptTemplate::defaults_for(TaskKind::Generation);
        let demos = vec![example("1", "one", None), example("2", "two", None)];
        let query = example("q", "three", None);
        let rendered = render_prompt(&demos, &query, &template).unwrap();
        let expected = "Question: one\nAnswer: 42\n\nQuestion: two\nAnswer: 42\n\n\
                        Question: three\nAnswer:";
        assert_eq!(rendered.text, expected);
    }

    #[test]
    fn render_includes_preamble_and_is_deterministic() {
        let mut template = PromptTemplate::defaults_for(TaskKind::Classification);
        template.system_preamble = Some("Classify the text.".into());
        let demos = vec![example("1", "alpha", Some("A"))];
        let query = example("q", "beta", Some("B"));
        let first = render_prompt(&demos, &query, &template).unwrap();
        let second = render_prompt(&demos, &query, &template).unwrap();
        assert_eq!(first, second);
        assert_eq!(
            first.text,
            "Classify the text.\n\nalpha\nLabel: A\n\nbeta\nLabel:"
        );
    }

    #[test]
    fn render_depends_on_demo_order() {
        let template = PromptTemplate::defaults_for(TaskKind::Generation);
        let set = DemonstrationSet::new(
            0,
            (0..4)
                .map(|i| example(&format!("e{i}"), &format!("t{i}"), None))
                .collect(),
            TaskKind::Generation,
        );
        let query = example("q", "qq", None);
        let base = render_prompt(&set.examples, &query, &template).unwrap();
        for perm in sample_permutations(4, 24, 3, false).unwrap() {
            if perm.is_identity() {
                continue;
            }
            let reordered = apply_permutation(&set, &perm).unwrap();
            let rendered = render_prompt(&reordered, &query, &template).unwrap();
            assert_ne!(rendered.text, base.text);
        }
    }

    #[test]
    fn placeholder_text_inside_inputs_is_not_reexpanded() {
        let template = PromptTemplate::defaults_for(TaskKind::Classification);
        let demos = vec![example("1", "contains {label} literally", Some("A"))];
        let query = example("q", "x", Some("A"));
        let rendered = render_prompt(&demos, &query, &template).unwrap();
        assert!(rendered.text.contains("contains {label} literally"));
    }

    #[test]
    fn template_validation_rejects_bad_placeholders() {
        let missing_target = PromptTemplate {
            demo_block: "{input}".into(),
            query_block: "{input}".into(),
            separator: "\n".into(),
            system_preamble: None,
        };
        assert!(missing_target.validate().is_err());
        let doubled_input = PromptTemplate {
            demo_block: "{input} {input} {label}".into(),
            query_block: "{input}".into(),
            separator: "\n".into(),
            system_preamble: None,
        };
        assert!(doubled_input.validate().is_err());
        let target_in_query = PromptTemplate {
            demo_block: "{input} {label}".into(),
            query_block: "{input} {label}".into(),
            separator: "\n".into(),
            system_preamble: None,
        };
        assert!(target_in_query.validate().is_err());
    }

    #[test]
    fn permutation_sampling_is_empirically_uniform() {
        // k=3, P=6 over 10,000 seeds: each permutation lands in position 1
        // with frequency 1/6 within ±0.02.
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let trials = 10_000;
        for seed in 0..trials {
            let perms = sample_permutations(3, 6, seed, false).unwrap();
            *counts.entry(perms[0].indices.clone()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (perm, count) in counts {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.02,
                "permutation {perm:?} appeared with frequency {freq}"
            );
        }
    }
}
