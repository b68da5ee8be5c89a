//! Task corpora: line-delimited ingestion, class-balanced dev/test splits,
//! and demonstration-set sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::util::derive_seed;

/// Separator between an original id and the counter appended to oversampled
/// duplicates, e.g. `rec-12~dup1`.
const DUP_SEPARATOR: &str = "~dup";

/// Total failed draws tolerated while hunting for distinct demonstration sets.
const DISTINCT_SET_RETRY_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Generation,
}

/// One labeled (classification) or answered (generation) task instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub input_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Example {
    /// The gold target: label for classification, answer for generation.
    pub fn gold(&self) -> &str {
        self.label
            .as_deref()
            .or(self.answer.as_deref())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub task_kind: TaskKind,
    /// Sorted set of observed class labels; empty for generation tasks.
    pub label_set: Vec<String>,
    pub examples: Vec<Example>,
}

/// Disjoint dev/test/pool partition of a corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Split {
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
    pub pool: Vec<Example>,
    pub seed: u64,
}

/// Field names used when ingesting line-delimited records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadSpec {
    pub id_field: String,
    pub text_field: String,
    pub label_field: String,
    pub answer_field: String,
}

impl Default for LoadSpec {
    fn default() -> Self {
        LoadSpec {
            id_field: "id".into(),
            text_field: "text".into(),
            label_field: "label".into(),
            answer_field: "answer".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line} is missing required field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("duplicate example id `{id}`")]
    DuplicateId { id: String },
    #[error("corpus `{name}` contains no examples")]
    Empty { name: String },
    #[error("classification corpus needs at least 2 labels, found {found}")]
    TooFewLabels { found: usize },
    #[error("label `{label}` has no examples to oversample from")]
    EmptyLabel { label: String },
    #[error("example `{id}` carries label `{label}` outside the label set")]
    UnknownLabel { id: String, label: String },
    #[error("need {needed} examples for the requested split, corpus has {available}")]
    InsufficientExamples { needed: usize, available: usize },
    #[error("pool too small: {message}")]
    PoolTooSmall { message: String },
    #[error(
        "could not sample {wanted} distinct demonstration sets (found {found}) \
         within the retry budget"
    )]
    DistinctSetsExhausted { wanted: usize, found: usize },
    #[error("classification requires k = 2*|labels| = {expected}, got k = {got}")]
    BadShotCount { expected: usize, got: usize },
    #[error("split manifest references unknown example id `{id}`")]
    ManifestUnknownId { id: String },
}

/// Loads a corpus from a line-delimited file of JSON records.
///
/// Records missing the id field get `rec-<lineno>` assigned. Fields other
/// than id/text/label/answer are kept as string metadata.
pub fn load_corpus(
    path: &Path,
    name: &str,
    task_kind: TaskKind,
    spec: &LoadSpec,
) -> Result<Corpus, CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;

    let mut examples = Vec::new();
    let mut seen_ids = HashSet::new();
    for (index, line) in raw.lines().enumerate() {
        let lineno = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedLine {
                line: lineno,
                message: e.to_string(),
            })?;

        let field_string = |field: &str| -> Option<String> {
            record.get(field).map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
        };

        let id = field_string(&spec.id_field).unwrap_or_else(|| format!("rec-{lineno}"));
        let input_text =
            field_string(&spec.text_field).ok_or_else(|| CorpusError::MissingField {
                line: lineno,
                field: spec.text_field.clone(),
            })?;

        let (label, answer) = match task_kind {
            TaskKind::Classification => {
                let label =
                    field_string(&spec.label_field).ok_or_else(|| CorpusError::MissingField {
                        line: lineno,
                        field: spec.label_field.clone(),
                    })?;
                (Some(label), None)
            }
            TaskKind::Generation => {
                let answer =
                    field_string(&spec.answer_field).ok_or_else(|| CorpusError::MissingField {
                        line: lineno,
                        field: spec.answer_field.clone(),
                    })?;
                (None, Some(answer))
            }
        };

        if !seen_ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id });
        }

        let mut metadata = BTreeMap::new();
        for (key, value) in &record {
            if key != &spec.id_field
                && key != &spec.text_field
                && key != &spec.label_field
                && key != &spec.answer_field
            {
                metadata.insert(
                    key.clone(),
                    match value {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    },
                );
            }
        }

        examples.push(Example {
            id,
            input_text,
            label,
            answer,
            metadata,
        });
    }

    if examples.is_empty() {
        return Err(CorpusError::Empty { name: name.into() });
    }

    let label_set = match task_kind {
        TaskKind::Classification => {
            let labels: BTreeSet<String> =
                examples.iter().filter_map(|e| e.label.clone()).collect();
            if labels.len() < 2 {
                return Err(CorpusError::TooFewLabels {
                    found: labels.len(),
                });
            }
            labels.into_iter().collect()
        }
        TaskKind::Generation => Vec::new(),
    };

    Ok(Corpus {
        name: name.into(),
        task_kind,
        label_set,
        examples,
    })
}

/// Duplicates minority-class examples (with replacement, seeded) until every
/// class count equals the pre-balance maximum. Added duplicates keep the
/// original content and get a `~dupN` id suffix; originals are all retained
/// in their input order, duplicates appended grouped by label.
pub fn balance_by_oversampling(
    examples: &[Example],
    label_set: &[String],
    seed: u64,
) -> Result<Vec<Example>, CorpusError> {
    let mut by_label: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, example) in examples.iter().enumerate() {
        let label = example
            .label
            .as_deref()
            .ok_or_else(|| CorpusError::UnknownLabel {
                id: example.id.clone(),
                label: String::new(),
            })?;
        if !label_set.iter().any(|l| l == label) {
            return Err(CorpusError::UnknownLabel {
                id: example.id.clone(),
                label: label.to_string(),
            });
        }
        by_label.entry(label).or_default().push(i);
    }
    for label in label_set {
        if !by_label.contains_key(label.as_str()) {
            return Err(CorpusError::EmptyLabel {
                label: label.clone(),
            });
        }
    }

    let max_count = by_label.values().map(Vec::len).max().unwrap_or(0);
    let mut balanced = examples.to_vec();
    let mut dup_counters: HashMap<String, usize> = HashMap::new();
    for label in label_set {
        let members = &by_label[label.as_str()];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["balance", label]));
        for _ in members.len()..max_count {
            let pick = members[rng.gen_range(0..members.len())];
            let original = &examples[pick];
            let counter = dup_counters.entry(original.id.clone()).or_insert(0);
            *counter += 1;
            let mut duplicate = original.clone();
            duplicate.id = format!("{}{DUP_SEPARATOR}{}", original.id, counter);
            balanced.push(duplicate);
        }
    }
    Ok(balanced)
}

/// Samples disjoint dev/test/pool partitions without replacement, then
/// class-balances dev and test (classification only). The pool is left in
/// its natural distribution; demonstration sampling stratifies explicitly.
pub fn make_splits(
    corpus: &Corpus,
    n_dev: usize,
    n_test: usize,
    seed: u64,
) -> Result<Split, CorpusError> {
    let total = corpus.examples.len();
    if total < n_dev + n_test {
        return Err(CorpusError::InsufficientExamples {
            needed: n_dev + n_test,
            available: total,
        });
    }

    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["split"]));
    // Fisher-Yates via rand's shuffle keeps the partition a pure function of
    // (corpus order, seed).
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);

    let pick = |range: std::ops::Range<usize>| -> Vec<Example> {
        order[range]
            .iter()
            .map(|&i| corpus.examples[i].clone())
            .collect()
    };
    let mut dev = pick(0..n_dev);
    let mut test = pick(n_dev..n_dev + n_test);
    let pool = pick(n_dev + n_test..total);

    if corpus.task_kind == TaskKind::Classification {
        if !dev.is_empty() {
            dev = balance_by_oversampling(&dev, &corpus.label_set, derive_seed(seed, &["dev"]))?;
        }
        if !test.is_empty() {
            test = balance_by_oversampling(&test, &corpus.label_set, derive_seed(seed, &["test"]))?;
        }
    }

    Ok(Split {
        dev,
        test,
        pool,
        seed,
    })
}

/// Samples `m` mutually distinct demonstration sets of `k` examples each.
///
/// Classification sets are stratified: exactly two examples per class, which
/// is what makes the k = 2*|labels| convention meaningful. Distinctness is
/// judged on id multisets; sampling is without replacement within a set.
pub fn sample_demonstration_sets(
    pool: &[Example],
    m: usize,
    k: usize,
    task_kind: TaskKind,
    label_set: &[String],
    seed: u64,
) -> Result<Vec<Vec<Example>>, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["demos"]));
    let mut sets: Vec<Vec<Example>> = Vec::with_capacity(m);
    let mut signatures: BTreeSet<Vec<String>> = BTreeSet::new();

    let per_label: HashMap<&str, Vec<usize>> = match task_kind {
        TaskKind::Classification => {
            if k != 2 * label_set.len() {
                return Err(CorpusError::BadShotCount {
                    expected: 2 * label_set.len(),
                    got: k,
                });
            }
            let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, example) in pool.iter().enumerate() {
                if let Some(label) = example.label.as_deref() {
                    map.entry(label).or_default().push(i);
                }
            }
            for label in label_set {
                let have = map.get(label.as_str()).map_or(0, Vec::len);
                if have < 2 {
                    return Err(CorpusError::PoolTooSmall {
                        message: format!("label `{label}` has {have} pool examples, need 2"),
                    });
                }
            }
            map
        }
        TaskKind::Generation => {
            if pool.len() < k {
                return Err(CorpusError::PoolTooSmall {
                    message: format!("pool has {} examples, need {k}", pool.len()),
                });
            }
            HashMap::new()
        }
    };

    let mut failed_draws = 0;
    while sets.len() < m {
        let candidate: Vec<Example> = match task_kind {
            TaskKind::Classification => {
                let mut picked = Vec::with_capacity(k);
                for label in label_set {
                    let members = &per_label[label.as_str()];
                    for index in sample_indices(&mut rng, members.len(), 2).into_iter() {
                        picked.push(pool[members[index]].clone());
                    }
                }
                picked
            }
            TaskKind::Generation => sample_indices(&mut rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i].clone())
                .collect(),
        };

        let mut signature: Vec<String> = candidate.iter().map(|e| e.id.clone()).collect();
        signature.sort();
        if signatures.insert(signature) {
            sets.push(candidate);
        } else {
            failed_draws += 1;
            if failed_draws >= DISTINCT_SET_RETRY_BUDGET {
                return Err(CorpusError::DistinctSetsExhausted {
                    wanted: m,
                    found: sets.len(),
                });
            }
        }
    }
    Ok(sets)
}

/// Id-level manifest from which a split can be reconstructed byte-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub dev: Vec<String>,
    pub test: Vec<String>,
    pub pool: Vec<String>,
}

impl SplitManifest {
    pub fn from_split(split: &Split) -> Self {
        let ids = |xs: &[Example]| xs.iter().map(|e| e.id.clone()).collect();
        SplitManifest {
            seed: split.seed,
            dev: ids(&split.dev),
            test: ids(&split.test),
            pool: ids(&split.pool),
        }
    }

    /// Rebuilds the split against a corpus, resolving `~dupN` ids back to
    /// their originals.
    pub fn reconstruct(&self, corpus: &Corpus) -> Result<Split, CorpusError> {
        let by_id: HashMap<&str, &Example> =
            corpus.examples.iter().map(|e| (e.id.as_str(), e)).collect();
        let resolve = |ids: &[String]| -> Result<Vec<Example>, CorpusError> {
            ids.iter()
                .map(|id| {
                    if let Some(example) = by_id.get(id.as_str()) {
                        return Ok((*example).clone());
                    }
                    if let Some(pos) = id.rfind(DUP_SEPARATOR) {
                        if let Some(example) = by_id.get(&id[..pos]) {
                            let mut clone = (*example).clone();
                            clone.id = id.clone();
                            return Ok(clone);
                        }
                    }
                    Err(CorpusError::ManifestUnknownId { id: id.clone() })
                })
                .collect()
        };
        Ok(Split {
            dev: resolve(&self.dev)?,
            test: resolve(&self.test)?,
            pool: resolve(&self.pool)?,
            seed: self.seed,
        })
    }
}
