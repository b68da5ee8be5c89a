#![allow(dead_code)]

pub mod published;
pub mod stub;

use std::collections::BTreeMap;
use std::path::Path;

use ordersense::corpus::{Example, TaskKind};
use ordersense::gateway::{DevTestCorrelation, Gateway, PlantedMockConfig};
use ordersense::prompting::DemonstrationSet;

pub fn gen_example(id: &str, text: &str, answer: &str) -> Example {
    Example {
        id: id.into(),
        input_text: text.into(),
        label: None,
        answer: Some(answer.into()),
        metadata: BTreeMap::new(),
    }
}

/// Synthetic generation queries; golds are the query index as a string.
pub fn queries(prefix: &str, n: usize) -> Vec<Example> {
    (0..n)
        .map(|i| {
            gen_example(
                &format!("{prefix}-{i}"),
                &format!("{prefix} question {i}"),
                &i.to_string(),
            )
        })
        .collect()
}

/// Synthetic distinct generation demonstration sets of k examples each.
pub fn demo_sets(m: usize, k: usize) -> Vec<DemonstrationSet> {
    (0..m)
        .map(|i| {
            DemonstrationSet::new(
                i,
                (0..k)
                    .map(|j| gen_example(&format!("s{i}d{j}"), &format!("demo {i} {j}"), "0"))
                    .collect(),
                TaskKind::Generation,
            )
        })
        .collect()
}

pub struct MockSpec {
    pub seed: u64,
    pub planted: Vec<usize>,
    pub p0: f64,
    pub gain: f64,
    pub correlation: DevTestCorrelation,
    pub query_deterministic: bool,
}

pub fn mock_gateway(spec: MockSpec) -> Gateway {
    Gateway::for_mock(PlantedMockConfig {
        seed: spec.seed,
        planted_permutation: spec.planted,
        base_accuracy: spec.p0,
        gain: spec.gain,
        dev_test_correlation: spec.correlation,
        query_deterministic: spec.query_deterministic,
    })
    .expect("valid mock config")
}

/// Writes a small generation corpus (ids g0.., numeric answers) as JSONL.
pub fn write_generation_corpus(path: &Path, n: usize) {
    let mut lines = String::new();
    for i in 0..n {
        lines.push_str(&format!(
            "{{\"id\": \"g{i:03}\", \"text\": \"question number {i}\", \"answer\": \"{}\"}}\n",
            i % 10
        ));
    }
    std::fs::write(path, lines).expect("write corpus");
}

/// Writes a small two-class classification corpus as JSONL.
pub fn write_classification_corpus(path: &Path, n: usize) {
    let mut lines = String::new();
    for i in 0..n {
        let label = if i % 2 == 0 { "Sports" } else { "Business" };
        lines.push_str(&format!(
            "{{\"id\": \"c{i:03}\", \"text\": \"article number {i}\", \"label\": \"{label}\"}}\n"
        ));
    }
    std::fs::write(path, lines).expect("write corpus");
}
