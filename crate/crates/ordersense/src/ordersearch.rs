//! Development-selected prompt ordering, the permutation-budget and dev-size
//! sweeps over its cached evaluations, and cross-dataset ordering transfer.
//!
//! The search evaluates P sampled permutations of each demonstration set on
//! the dev split, picks the dev-argmax, and reports its test accuracy next
//! to the per-set test average and the oracle test max. Per-query
//! correctness bitmaps are retained so both sweeps are pure post-processing:
//! after `find_order`, only `transfer_evaluate` may talk to the model again.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::gateway::Gateway;
use crate::prompting::{apply_permutation, DemonstrationSet, Permutation, PromptTemplate};
use crate::scoring::Scorer;
use crate::sensitivity::{evaluate_units, EvalError, EvalUnit};
use crate::util::{argmax, derive_seed, mean, Bitmap};

/// Which dev accuracies drive the argmax: each set selects its own
/// permutation, or one permutation is selected on dev accuracy pooled
/// across sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    #[default]
    PerSet,
    Pooled,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("budget {budget} exceeds the {p} evaluated permutations")]
    BudgetTooLarge { budget: usize, p: usize },
    #[error("dev subsample size {size} exceeds the {n_dev} cached dev queries")]
    SizeTooLarge { size: usize, n_dev: usize },
    #[error("sweep needs at least one trial")]
    NoTrials,
    #[error("sweep needs at least one budget/size value")]
    NoValues,
    #[error("demonstration k mismatch: {a} vs {b}")]
    KMismatch { a: usize, b: usize },
    #[error("order search result carries no per-set data")]
    EmptyResult,
}

/// Search record for one demonstration set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerSetSearch {
    pub set_index: usize,
    pub example_ids: Vec<String>,
    /// The P sampled permutations, as index lists over the default order.
    pub perms: Vec<Vec<usize>>,
    pub dev_acc: Vec<f64>,
    pub test_acc: Vec<f64>,
    /// Per-permutation, per-dev-query correctness; feeds the dev-size sweep.
    pub dev_correct: Vec<Bitmap>,
    pub test_correct: Vec<Bitmap>,
    /// pi*: dev-argmax, ties broken by the lowest permutation index.
    pub selected_perm_index: usize,
    /// a*: test accuracy of pi*.
    pub test_acc_selected: f64,
    /// a_max: oracle test accuracy over all P permutations.
    pub test_acc_max: f64,
    pub test_acc_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchAggregate {
    pub average: f64,
    pub highest_dev: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderSearchResult {
    pub model_id: String,
    pub dataset: String,
    pub k: usize,
    pub p: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub selection_scope: SelectionScope,
    pub perm_seed: u64,
    pub per_set: Vec<PerSetSearch>,
    pub aggregate: SearchAggregate,
}

/// Inputs for [`find_order`].
pub struct FindOrderRequest<'a> {
    pub sets: &'a [DemonstrationSet],
    pub dev: &'a [Example],
    pub test: &'a [Example],
    pub p: usize,
    pub seed: u64,
    pub scope: SelectionScope,
    pub dataset: &'a str,
}

/// For every demonstration set, samples P permutations, evaluates each on
/// dev and test, selects the dev-argmax and reports its test accuracy next
/// to the per-set average and max.
pub async fn find_order(
    request: FindOrderRequest<'_>,
    gateway: &Gateway,
    scorer: &Scorer,
    template: &PromptTemplate,
) -> Result<OrderSearchResult, EvalError> {
    let FindOrderRequest {
        sets,
        dev,
        test,
        p,
        seed,
        scope,
        dataset,
    } = request;
    if sets.is_empty() {
        return Err(EvalError::Shape(
            "need at least one demonstration set".into(),
        ));
    }
    if p < 1 {
        return Err(EvalError::Shape("need at least one permutation".into()));
    }
    if dev.is_empty() || test.is_empty() {
        return Err(EvalError::Shape(
            "dev and test splits must be non-empty".into(),
        ));
    }
    let k = sets[0].k();
    if let Some(bad) = sets.iter().find(|s| s.k() != k) {
        return Err(EvalError::Shape(format!(
            "set {} has k={}, expected {k}",
            bad.set_index,
            bad.k()
        )));
    }

    let task_kind = sets[0].task_kind;
    let pooled_perms = match scope {
        SelectionScope::Pooled => Some(sample_permutations_for(k, p, seed, "pooled")?),
        SelectionScope::PerSet => None,
    };
    let mut set_perms: Vec<Vec<Permutation>> = Vec::with_capacity(sets.len());
    for set in sets {
        set_perms.push(match &pooled_perms {
            Some(shared) => shared.clone(),
            None => sample_permutations_for(k, p, seed, &format!("set-{}", set.set_index))?,
        });
    }

    let mut units = Vec::with_capacity(sets.len() * p);
    for (i, set) in sets.iter().enumerate() {
        for perm in &set_perms[i] {
            units.push(EvalUnit {
                set_index: set.set_index,
                perm_index: perm.perm_index,
                perm_indices: perm.indices.clone(),
                demos: apply_permutation(set, perm)?,
            });
        }
    }
    let dev_bitmaps = evaluate_units(&units, dev, task_kind, gateway, scorer, template).await?;
    let test_bitmaps = evaluate_units(&units, test, task_kind, gateway, scorer, template).await?;

    let dev_acc_of = |i: usize| -> Vec<f64> {
        (0..p)
            .map(|j| dev_bitmaps[i * p + j].fraction_ones())
            .collect()
    };
    let test_acc_of = |i: usize| -> Vec<f64> {
        (0..p)
            .map(|j| test_bitmaps[i * p + j].fraction_ones())
            .collect()
    };

    let pooled_selected = match scope {
        SelectionScope::Pooled => {
            let pooled_dev: Vec<f64> = (0..p)
                .map(|j| {
                    mean(
                        &(0..sets.len())
                            .map(|i| dev_bitmaps[i * p + j].fraction_ones())
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            Some(argmax(&pooled_dev))
        }
        SelectionScope::PerSet => None,
    };

    let mut per_set = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let dev_acc = dev_acc_of(i);
        let test_acc = test_acc_of(i);
        let selected = pooled_selected.unwrap_or_else(|| argmax(&dev_acc));
        let test_acc_max = test_acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        per_set.push(PerSetSearch {
            set_index: set.set_index,
            example_ids: set.example_ids(),
            perms: set_perms[i]
                .iter()
                .map(|perm| perm.indices.clone())
                .collect(),
            dev_correct: (0..p).map(|j| dev_bitmaps[i * p + j].clone()).collect(),
            test_correct: (0..p).map(|j| test_bitmaps[i * p + j].clone()).collect(),
            selected_perm_index: selected,
            test_acc_selected: test_acc[selected],
            test_acc_max,
            test_acc_mean: mean(&test_acc),
            dev_acc,
            test_acc,
        });
    }

    let aggregate = aggregate_over_sets(&per_set, scope);
    Ok(OrderSearchResult {
        model_id: gateway.model_id().to_string(),
        dataset: dataset.to_string(),
        k,
        p,
        n_dev: dev.len(),
        n_test: test.len(),
        selection_scope: scope,
        perm_seed: seed,
        per_set,
        aggregate,
    })
}

fn sample_permutations_for(
    k: usize,
    p: usize,
    seed: u64,
    tag: &str,
) -> Result<Vec<Permutation>, EvalError> {
    crate::prompting::sample_permutations(k, p, derive_seed(seed, &["findorder", tag]), false)
        .map_err(EvalError::Prompt)
}

fn aggregate_over_sets(per_set: &[PerSetSearch], scope: SelectionScope) -> SearchAggregate {
    let average = mean(&per_set.iter().map(|s| s.test_acc_mean).collect::<Vec<_>>());
    let highest_dev = mean(
        &per_set
            .iter()
            .map(|s| s.test_acc_selected)
            .collect::<Vec<_>>(),
    );
    let max = match scope {
        SelectionScope::PerSet => mean(&per_set.iter().map(|s| s.test_acc_max).collect::<Vec<_>>()),
        // Pooled oracle: the single permutation with the best pooled test
        // accuracy (permutation lists are shared across sets here).
        SelectionScope::Pooled => {
            let p = per_set[0].test_acc.len();
            (0..p)
                .map(|j| mean(&per_set.iter().map(|s| s.test_acc[j]).collect::<Vec<_>>()))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    };
    SearchAggregate {
        average,
        highest_dev,
        max,
    }
}

/// Three-series curve (average / highest-dev / max) over a swept parameter.
/// `stderr` is the standard error of the highest-dev series across trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCurve {
    pub x: Vec<usize>,
    pub average: Vec<f64>,
    pub highest_dev: Vec<f64>,
    pub max: Vec<f64>,
    pub trials: usize,
    pub stderr: Vec<f64>,
}

fn standard_error(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    crate::sensitivity::std_dev(samples, crate::sensitivity::StdMode::Sample)
        / (samples.len() as f64).sqrt()
}

/// Subsamples P' of the evaluated permutations per trial and recomputes the
/// three series inside the subsample. Pure post-processing over the cached
/// accuracies; no model calls.
pub fn sweep_permutation_budget(
    result: &OrderSearchResult,
    budgets: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SweepCurve, SearchError> {
    if result.per_set.is_empty() {
        return Err(SearchError::EmptyResult);
    }
    if trials == 0 {
        return Err(SearchError::NoTrials);
    }
    if budgets.is_empty() {
        return Err(SearchError::NoValues);
    }
    for &budget in budgets {
        if budget == 0 || budget > result.p {
            return Err(SearchError::BudgetTooLarge {
                budget,
                p: result.p,
            });
        }
    }

    let mut curve = SweepCurve {
        x: Vec::new(),
        average: Vec::new(),
        highest_dev: Vec::new(),
        max: Vec::new(),
        trials,
        stderr: Vec::new(),
    };
    for &budget in budgets {
        let mut trial_average = Vec::with_capacity(trials);
        let mut trial_highest = Vec::with_capacity(trials);
        let mut trial_max = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &["budget", &budget.to_string(), "trial", &trial.to_string()],
            ));
            // Sorted subsample indices keep argmax ties on the lowest
            // original permutation index, matching find_order.
            let mut chosen = sample_indices(&mut rng, result.p, budget).into_vec();
            chosen.sort_unstable();
            let (avg, highest, max) = subsample_point(result, &chosen);
            trial_average.push(avg);
            trial_highest.push(highest);
            trial_max.push(max);
        }
        curve.x.push(budget);
        curve.average.push(mean(&trial_average));
        curve.highest_dev.push(mean(&trial_highest));
        curve.max.push(mean(&trial_max));
        curve.stderr.push(standard_error(&trial_highest));
    }
    Ok(curve)
}

fn subsample_point(result: &OrderSearchResult, chosen: &[usize]) -> (f64, f64, f64) {
    match result.selection_scope {
        SelectionScope::PerSet => {
            let mut avgs = Vec::with_capacity(result.per_set.len());
            let mut highs = Vec::with_capacity(result.per_set.len());
            let mut maxes = Vec::with_capacity(result.per_set.len());
            for set in &result.per_set {
                let sub_dev: Vec<f64> = chosen.iter().map(|&j| set.dev_acc[j]).collect();
                let sub_test: Vec<f64> = chosen.iter().map(|&j| set.test_acc[j]).collect();
                let selected = argmax(&sub_dev);
                avgs.push(mean(&sub_test));
                highs.push(sub_test[selected]);
                maxes.push(sub_test.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            }
            (mean(&avgs), mean(&highs), mean(&maxes))
        }
        SelectionScope::Pooled => {
            let pooled = |field: &dyn Fn(&PerSetSearch, usize) -> f64| -> Vec<f64> {
                chosen
                    .iter()
                    .map(|&j| {
                        mean(
                            &result
                                .per_set
                                .iter()
                                .map(|s| field(s, j))
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect()
            };
            let pooled_dev = pooled(&|s, j| s.dev_acc[j]);
            let pooled_test = pooled(&|s, j| s.test_acc[j]);
            let selected = argmax(&pooled_dev);
            (
                mean(&pooled_test),
                pooled_test[selected],
                pooled_test
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max),
            )
        }
    }
}

/// Re-selects pi* from subsampled dev queries using the cached correctness
/// bitmaps and reports its precomputed test accuracy. The average and max
/// series do not depend on the dev subsample, so they stay constant.
pub fn sweep_dev_size(
    result: &OrderSearchResult,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SweepCurve, SearchError> {
    if result.per_set.is_empty() {
        return Err(SearchError::EmptyResult);
    }
    if trials == 0 {
        return Err(SearchError::NoTrials);
    }
    if sizes.is_empty() {
        return Err(SearchError::NoValues);
    }
    for &size in sizes {
        if size == 0 || size > result.n_dev {
            return Err(SearchError::SizeTooLarge {
                size,
                n_dev: result.n_dev,
            });
        }
    }

    let mut curve = SweepCurve {
        x: Vec::new(),
        average: Vec::new(),
        highest_dev: Vec::new(),
        max: Vec::new(),
        trials,
        stderr: Vec::new(),
    };
    for &size in sizes {
        let mut trial_highest = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &["devsize", &size.to_string(), "trial", &trial.to_string()],
            ));
            let mut mask = Bitmap::zeros(result.n_dev);
            for index in sample_indices(&mut rng, result.n_dev, size).into_iter() {
                mask.set(index, true);
            }
            trial_highest.push(reselect_with_mask(result, &mask, size));
        }
        curve.x.push(size);
        curve.average.push(result.aggregate.average);
        curve.highest_dev.push(mean(&trial_highest));
        curve.max.push(result.aggregate.max);
        curve.stderr.push(standard_error(&trial_highest));
    }
    Ok(curve)
}

fn reselect_with_mask(result: &OrderSearchResult, mask: &Bitmap, size: usize) -> f64 {
    let masked_dev = |set: &PerSetSearch| -> Vec<f64> {
        set.dev_correct
            .iter()
            .map(|bits| bits.intersect_count(mask) as f64 / size as f64)
            .collect()
    };
    match result.selection_scope {
        SelectionScope::PerSet => mean(
            &result
                .per_set
                .iter()
                .map(|set| set.test_acc[argmax(&masked_dev(set))])
                .collect::<Vec<_>>(),
        ),
        SelectionScope::Pooled => {
            let per_set_dev: Vec<Vec<f64>> = result.per_set.iter().map(masked_dev).collect();
            let pooled_dev: Vec<f64> = (0..result.p)
                .map(|j| mean(&per_set_dev.iter().map(|d| d[j]).collect::<Vec<_>>()))
                .collect();
            let selected = argmax(&pooled_dev);
            mean(
                &result
                    .per_set
                    .iter()
                    .map(|s| s.test_acc[selected])
                    .collect::<Vec<_>>(),
            )
        }
    }
}

/// The globally best dev permutation of a search result: highest dev
/// accuracy over all (set, permutation) pairs, ties broken by lowest set
/// then lowest permutation index.
pub fn best_dev_permutation(result: &OrderSearchResult) -> Result<Vec<usize>, SearchError> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, set) in result.per_set.iter().enumerate() {
        for (j, &acc) in set.dev_acc.iter().enumerate() {
            if best.is_none_or(|(value, ..)| acc > value) {
                best = Some((acc, i, j));
            }
        }
    }
    let (_, i, j) = best.ok_or(SearchError::EmptyResult)?;
    Ok(result.per_set[i].perms[j].clone())
}

/// One direction of a cross-dataset transfer: the source's best-dev
/// permutation applied to every target set and evaluated on the target test
/// split. This is the only post-search operation that issues model calls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionalTransfer {
    pub source_dataset: String,
    pub target_dataset: String,
    pub permutation: Vec<usize>,
    pub transferred_test_acc: f64,
}

pub async fn transfer_evaluate(
    source: &OrderSearchResult,
    target_sets: &[DemonstrationSet],
    target_test: &[Example],
    target_dataset: &str,
    gateway: &Gateway,
    scorer: &Scorer,
    template: &PromptTemplate,
) -> Result<DirectionalTransfer, EvalError> {
    if target_sets.is_empty() || target_test.is_empty() {
        return Err(EvalError::Shape(
            "transfer target needs sets and test queries".into(),
        ));
    }
    let target_k = target_sets[0].k();
    if source.k != target_k {
        return Err(EvalError::Shape(
            SearchError::KMismatch {
                a: source.k,
                b: target_k,
            }
            .to_string(),
        ));
    }
    let indices = best_dev_permutation(source).map_err(|e| EvalError::Shape(e.to_string()))?;
    let permutation = Permutation {
        perm_index: 0,
        indices: indices.clone(),
    };
    let task_kind = target_sets[0].task_kind;
    let mut units = Vec::with_capacity(target_sets.len());
    for set in target_sets {
        units.push(EvalUnit {
            set_index: set.set_index,
            perm_index: 0,
            perm_indices: indices.clone(),
            demos: apply_permutation(set, &permutation)?,
        });
    }
    let bitmaps = evaluate_units(&units, target_test, task_kind, gateway, scorer, template).await?;
    let accs: Vec<f64> = bitmaps.iter().map(Bitmap::fraction_ones).collect();
    Ok(DirectionalTransfer {
        source_dataset: source.dataset.clone(),
        target_dataset: target_dataset.to_string(),
        permutation: indices,
        transferred_test_acc: mean(&accs),
    })
}

/// Bidirectional transfer summary in the eight-column layout:
/// best/avg per dataset, both transferred accuracies, and the ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferResult {
    pub dataset_a: String,
    pub dataset_b: String,
    pub best_a: f64,
    pub best_b: f64,
    pub avg_a: f64,
    pub avg_b: f64,
    pub a_to_b: f64,
    pub b_to_a: f64,
    pub transfer_ratio: f64,
    pub perm_a_to_b: Vec<usize>,
    pub perm_b_to_a: Vec<usize>,
}

/// Mean over both directions of transferred accuracy divided by the target's
/// oracle max.
pub fn transfer_ratio(a_to_b: f64, best_b: f64, b_to_a: f64, best_a: f64) -> f64 {
    0.5 * (a_to_b / best_b + b_to_a / best_a)
}

pub fn build_transfer_result(
    a: &OrderSearchResult,
    b: &OrderSearchResult,
    a_to_b: &DirectionalTransfer,
    b_to_a: &DirectionalTransfer,
) -> TransferResult {
    TransferResult {
        dataset_a: a.dataset.clone(),
        dataset_b: b.dataset.clone(),
        best_a: a.aggregate.max,
        best_b: b.aggregate.max,
        avg_a: a.aggregate.average,
        avg_b: b.aggregate.average,
        a_to_b: a_to_b.transferred_test_acc,
        b_to_a: b_to_a.transferred_test_acc,
        transfer_ratio: transfer_ratio(
            a_to_b.transferred_test_acc,
            b.aggregate.max,
            b_to_a.transferred_test_acc,
            a.aggregate.max,
        ),
        perm_a_to_b: a_to_b.permutation.clone(),
        perm_b_to_a: b_to_a.permutation.clone(),
    }
}
