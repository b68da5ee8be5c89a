//! The M x P accuracy matrix and the grouped standard-deviation statistics
//! computed over it.
//!
//! Order sensitivity is the mean over demonstration sets of the accuracy
//! standard deviation across permutations (row-wise); selection sensitivity
//! is the column-wise counterpart; their ratio r compares the two sources of
//! variation. Selection sensitivity is literally order sensitivity of the
//! transposed grid, so transpose duality holds exactly, not approximately.

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::corpus::{Example, TaskKind};
use crate::gateway::{CallContext, Gateway, GatewayError};
use crate::prompting::{
    apply_permutation, DemonstrationSet, Permutation, PromptError, PromptTemplate, RenderedPrompt,
};
use crate::scoring::{score_output, Scorer};
use crate::util::{mean, Bitmap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Sample standard deviation (divisor n-1); the default convention.
    #[default]
    Sample,
    /// Population standard deviation (divisor n).
    Population,
}

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("order sensitivity undefined for P<2 (got P={0})")]
    TooFewPermutations(usize),
    #[error("selection sensitivity undefined for M<2 (got M={0})")]
    TooFewSets(usize),
    #[error("incomplete or malformed accuracy grid: {0}")]
    Incomplete(String),
    #[error("duplicate (model, dataset) pair `{model}`/`{dataset}`")]
    DuplicatePair { model: String, dataset: String },
    #[error("cannot aggregate an empty report list")]
    EmptyAggregate,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("evaluation failed at set {set}, permutation {perm}, query `{query_id}`: {source}")]
    Cell {
        set: usize,
        perm: usize,
        query_id: String,
        #[source]
        source: GatewayError,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("shape error: {0}")]
    Shape(String),
}

/// The M x P grid a[i][j] = Acc(set i under permutation j | eval split).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    pub model_id: String,
    pub dataset: String,
    pub eval_split: EvalSplit,
    pub sets: Vec<DemonstrationSet>,
    pub perms: Vec<Permutation>,
    pub grid: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn p(&self) -> usize {
        self.perms.len()
    }

    /// Statistics refuse matrices that are not fully populated.
    pub fn validate_complete(&self) -> Result<(), StatsError> {
        if self.grid.len() != self.m() {
            return Err(StatsError::Incomplete(format!(
                "grid has {} rows for {} sets",
                self.grid.len(),
                self.m()
            )));
        }
        for (i, row) in self.grid.iter().enumerate() {
            if row.len() != self.p() {
                return Err(StatsError::Incomplete(format!(
                    "row {i} has {} cells for {} permutations",
                    row.len(),
                    self.p()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if !cell.is_finite() || !(0.0..=1.0).contains(cell) {
                    return Err(StatsError::Incomplete(format!(
                        "cell ({i}, {j}) = {cell} is not an accuracy"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Per-row (per demonstration set) accuracy standard deviations.
    pub fn row_stds(&self, mode: StdMode) -> Result<Vec<f64>, StatsError> {
        self.validate_complete()?;
        if self.p() < 2 {
            return Err(StatsError::TooFewPermutations(self.p()));
        }
        Ok(self.grid.iter().map(|row| std_dev(row, mode)).collect())
    }

    /// Per-column (per permutation) accuracy standard deviations.
    pub fn col_stds(&self, mode: StdMode) -> Result<Vec<f64>, StatsError> {
        self.validate_complete()?;
        if self.m() < 2 {
            return Err(StatsError::TooFewSets(self.m()));
        }
        Ok(transpose(&self.grid)
            .iter()
            .map(|col| std_dev(col, mode))
            .collect())
    }

    /// Mean over rows of the per-row std.
    pub fn order_sensitivity(&self, mode: StdMode) -> Result<f64, StatsError> {
        Ok(mean(&self.row_stds(mode)?))
    }

    /// Mean over columns of the per-column std; exactly the order
    /// sensitivity of the transposed grid.
    pub fn selection_sensitivity(&self, mode: StdMode) -> Result<f64, StatsError> {
        Ok(mean(&self.col_stds(mode)?))
    }
}

pub fn transpose(grid: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if grid.is_empty() {
        return Vec::new();
    }
    (0..grid[0].len())
        .map(|j| grid.iter().map(|row| row[j]).collect())
        .collect()
}

/// Welford's streaming variance.
pub fn std_dev(values: &[f64], mode: StdMode) -> f64 {
    let mut count = 0.0f64;
    let mut running_mean = 0.0f64;
    let mut m2 = 0.0f64;
    for &x in values {
        count += 1.0;
        let delta = x - running_mean;
        running_mean += delta / count;
        m2 += delta * (x - running_mean);
    }
    let denominator = match mode {
        StdMode::Sample => count - 1.0,
        StdMode::Population => count,
    };
    if denominator <= 0.0 {
        return 0.0;
    }
    (m2 / denominator).sqrt()
}

/// r = selection / order; undefined (None) when order sensitivity is zero,
/// never infinity.
pub fn sensitivity_ratio(order_sensitivity: f64, selection_sensitivity: f64) -> Option<f64> {
    if order_sensitivity > 0.0 {
        Some(selection_sensitivity / order_sensitivity)
    } else {
        None
    }
}

/// The two grouped statistics plus the raw per-row / per-column stds that
/// feed violin plots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub order_sensitivity: f64,
    pub selection_sensitivity: f64,
    pub ratio: Option<f64>,
    pub row_stds: Vec<f64>,
    pub col_stds: Vec<f64>,
    pub std_mode: StdMode,
}

impl SensitivityReport {
    pub fn compute(matrix: &AccuracyMatrix, mode: StdMode) -> Result<Self, StatsError> {
        let row_stds = matrix.row_stds(mode)?;
        let col_stds = matrix.col_stds(mode)?;
        let order_sensitivity = mean(&row_stds);
        let selection_sensitivity = mean(&col_stds);
        Ok(SensitivityReport {
            order_sensitivity,
            selection_sensitivity,
            ratio: sensitivity_ratio(order_sensitivity, selection_sensitivity),
            row_stds,
            col_stds,
            std_mode: mode,
        })
    }
}

/// One (model, dataset) sensitivity pair fed into [`aggregate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportEntry {
    pub model_id: String,
    pub dataset: String,
    pub order_sensitivity: f64,
    pub selection_sensitivity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Model,
    Dataset,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub key: String,
    pub group_size: usize,
    pub order_sensitivity: f64,
    pub selection_sensitivity: f64,
    pub ratio: Option<f64>,
}

/// Unweighted mean of each group's sensitivities; the group ratio is the
/// ratio of the group means. Rows come back sorted by group key.
pub fn aggregate(
    entries: &[ReportEntry],
    group_by: GroupBy,
) -> Result<Vec<AggregateRow>, StatsError> {
    if entries.is_empty() {
        return Err(StatsError::EmptyAggregate);
    }
    let mut seen = std::collections::HashSet::new();
    for entry in entries {
        if !seen.insert((entry.model_id.clone(), entry.dataset.clone())) {
            return Err(StatsError::DuplicatePair {
                model: entry.model_id.clone(),
                dataset: entry.dataset.clone(),
            });
        }
    }
    let mut groups: BTreeMap<&str, Vec<&ReportEntry>> = BTreeMap::new();
    for entry in entries {
        let key = match group_by {
            GroupBy::Model => entry.model_id.as_str(),
            GroupBy::Dataset => entry.dataset.as_str(),
        };
        groups.entry(key).or_default().push(entry);
    }
    Ok(groups
        .into_iter()
        .map(|(key, members)| {
            let order: Vec<f64> = members.iter().map(|e| e.order_sensitivity).collect();
            let selection: Vec<f64> = members.iter().map(|e| e.selection_sensitivity).collect();
            let order_sensitivity = mean(&order);
            let selection_sensitivity = mean(&selection);
            AggregateRow {
                key: key.to_string(),
                group_size: members.len(),
                order_sensitivity,
                selection_sensitivity,
                ratio: sensitivity_ratio(order_sensitivity, selection_sensitivity),
            }
        })
        .collect())
}

/// One (set, permutation) arrangement to evaluate over a query list.
pub(crate) struct EvalUnit {
    pub set_index: usize,
    pub perm_index: usize,
    pub perm_indices: Vec<usize>,
    pub demos: Vec<Example>,
}

/// Evaluates every unit against every query, returning one correctness
/// bitmap per unit. Completion calls fan out up to the gateway's in-flight
/// budget; the fold is a plain per-bit write, so scheduling order cannot
/// change the result. Demo prefixes and query blocks render once, not once
/// per cell.
pub(crate) async fn evaluate_units(
    units: &[EvalUnit],
    queries: &[Example],
    task_kind: TaskKind,
    gateway: &Gateway,
    scorer: &Scorer,
    template: &PromptTemplate,
) -> Result<Vec<Bitmap>, EvalError> {
    template.validate()?;
    let prefixes: Vec<String> = units
        .iter()
        .map(|unit| crate::prompting::render_demo_prefix(&unit.demos, template))
        .collect::<Result<_, _>>()?;
    let query_blocks: Vec<String> = queries
        .iter()
        .map(|query| crate::prompting::render_query_block(query, template))
        .collect::<Result<_, _>>()?;
    let prefixes = &prefixes;
    let query_blocks = &query_blocks;

    let mut bitmaps: Vec<Bitmap> = units.iter().map(|_| Bitmap::zeros(queries.len())).collect();
    let calls = units.iter().enumerate().flat_map(|(u, unit)| {
        queries
            .iter()
            .enumerate()
            .map(move |(q, query)| (u, unit, q, query))
    });
    let mut stream = futures::stream::iter(calls.map(|(u, unit, q, query)| async move {
        let prompt = RenderedPrompt {
            text: format!("{}{}", prefixes[u], query_blocks[q]),
        };
        let ctx = CallContext {
            permutation: &unit.perm_indices,
            query_id: &query.id,
            query_ordinal: q,
            gold: query.gold(),
        };
        let completion =
            gateway
                .complete(&prompt, &ctx)
                .await
                .map_err(|source| EvalError::Cell {
                    set: unit.set_index,
                    perm: unit.perm_index,
                    query_id: query.id.clone(),
                    source,
                })?;
        let result = score_output(&completion.output_text, query.gold(), task_kind, scorer);
        Ok::<(usize, usize, bool), EvalError>((u, q, result.correct))
    }))
    .buffer_unordered(gateway.parallelism().max(1));
    while let Some(item) = stream.next().await {
        let (u, q, correct) = item?;
        bitmaps[u].set(q, correct);
    }
    Ok(bitmaps)
}

/// Builds the full M x P accuracy matrix: every (set, permutation, query)
/// triple is evaluated exactly once and failures name the exact cell.
#[allow(clippy::too_many_arguments)]
pub async fn evaluate_matrix(
    sets: &[DemonstrationSet],
    perms: &[Permutation],
    eval_examples: &[Example],
    gateway: &Gateway,
    scorer: &Scorer,
    template: &PromptTemplate,
    dataset: &str,
    eval_split: EvalSplit,
) -> Result<AccuracyMatrix, EvalError> {
    if sets.is_empty() || perms.is_empty() {
        return Err(EvalError::Shape(
            "need at least one set and one permutation".into(),
        ));
    }
    if eval_examples.is_empty() {
        return Err(EvalError::Shape("evaluation split is empty".into()));
    }
    let k = sets[0].k();
    if let Some(bad) = sets.iter().find(|s| s.k() != k) {
        return Err(EvalError::Shape(format!(
            "set {} has k={}, expected {k}",
            bad.set_index,
            bad.k()
        )));
    }
    if let Some(bad) = perms.iter().find(|p| p.k() != k) {
        return Err(EvalError::Shape(format!(
            "permutation {} has length {}, expected {k}",
            bad.perm_index,
            bad.k()
        )));
    }

    let task_kind = sets[0].task_kind;
    let mut units = Vec::with_capacity(sets.len() * perms.len());
    for set in sets {
        for perm in perms {
            units.push(EvalUnit {
                set_index: set.set_index,
                perm_index: perm.perm_index,
                perm_indices: perm.indices.clone(),
                demos: apply_permutation(set, perm)?,
            });
        }
    }
    let bitmaps =
        evaluate_units(&units, eval_examples, task_kind, gateway, scorer, template).await?;
    let grid: Vec<Vec<f64>> = (0..sets.len())
        .map(|i| {
            (0..perms.len())
                .map(|j| bitmaps[i * perms.len() + j].fraction_ones())
                .collect()
        })
        .collect();
    Ok(AccuracyMatrix {
        model_id: gateway.model_id().to_string(),
        dataset: dataset.to_string(),
        eval_split,
        sets: sets.to_vec(),
        perms: perms.to_vec(),
        grid,
    })
}
