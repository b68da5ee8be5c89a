//! Experiment subcommands: sensitivity, find-order, sweep, transfer, report.
//!
//! Each command validates its config before any model traffic, runs the
//! corresponding pipeline stage, and emits a report bundle. Sweeps are pure
//! post-processing over a prior find-order bundle and never construct a
//! model gateway at all.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bundle::{
    self, AggregateArtifact, BundleError, CurveArtifact, ManifestArtifact, MatrixArtifact,
    OrderSearchArtifact, Provenance, ReportBundle, SensitivityArtifact, SweepParams,
    TransferArtifact,
};
use crate::config::{ConfigError, ExperimentConfig, ModelKind};
use crate::corpus::{
    load_corpus, make_splits, sample_demonstration_sets, Corpus, CorpusError, Split, SplitManifest,
    TaskKind,
};
use crate::gateway::{Gateway, GatewayError};
use crate::ordersearch::{
    build_transfer_result, find_order, sweep_dev_size, sweep_permutation_budget, transfer_evaluate,
    FindOrderRequest, OrderSearchResult, SearchError, SweepCurve,
};
use crate::prompting::{sample_permutations, DemonstrationSet, PromptError, PromptTemplate};
use crate::scoring::{Scorer, ScorerKind, DEFAULT_RELATIVE_TOLERANCE};
use crate::sensitivity::{
    aggregate, evaluate_matrix, EvalError, EvalSplit, GroupBy, ReportEntry, SensitivityReport,
    StatsError,
};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("bundle integrity: {0}")]
    Fixture(String),
}

impl CommandError {
    /// Process exit code: 2 config error, 3 evaluation failure (resumable),
    /// 4 fixture/bundle mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Eval(_) => 3,
            CommandError::Fixture(_) => 4,
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<CorpusError> for CommandError {
    fn from(e: CorpusError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<PromptError> for CommandError {
    fn from(e: PromptError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<SearchError> for CommandError {
    fn from(e: SearchError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<StatsError> for CommandError {
    fn from(e: StatsError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<EvalError> for CommandError {
    fn from(e: EvalError) -> Self {
        CommandError::Eval(e.to_string())
    }
}

impl From<BundleError> for CommandError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::DigestMismatch { .. } | BundleError::Malformed { .. } => {
                CommandError::Fixture(e.to_string())
            }
            BundleError::Io { .. } => CommandError::Eval(e.to_string()),
        }
    }
}

/// Everything a model-calling command needs, resolved from the config.
pub struct Prepared {
    pub corpus: Corpus,
    pub split: Split,
    pub sets: Vec<DemonstrationSet>,
    pub k: usize,
    pub scorer: Scorer,
    pub template: PromptTemplate,
    pub gateway: Gateway,
    pub dataset: String,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, CommandError> {
    config.validate()?;
    let dataset = config.corpus.dataset_name();
    let corpus = load_corpus(
        &config.corpus.path,
        &dataset,
        config.corpus.task_kind,
        &config.corpus.load_spec(),
    )?;
    let k = config.resolve_k(corpus.label_set.len())?;
    let split = make_splits(
        &corpus,
        config.split.n_dev,
        config.split.n_test,
        config.split.seed,
    )?;
    let raw_sets = sample_demonstration_sets(
        &split.pool,
        config.demos.m,
        k,
        corpus.task_kind,
        &corpus.label_set,
        config.demos.seed,
    )?;
    let sets = raw_sets
        .into_iter()
        .enumerate()
        .map(|(i, examples)| DemonstrationSet::new(i, examples, corpus.task_kind))
        .collect();
    let scorer = resolve_scorer(config, &corpus);
    let template = config.template.resolve(corpus.task_kind);
    let gateway = build_gateway(config, k)?;
    Ok(Prepared {
        corpus,
        split,
        sets,
        k,
        scorer,
        template,
        gateway,
        dataset,
    })
}

fn resolve_scorer(config: &ExperimentConfig, corpus: &Corpus) -> Scorer {
    match corpus.task_kind {
        TaskKind::Classification => Scorer::label_match(corpus.label_set.clone()),
        TaskKind::Generation => match config.scorer.kind.unwrap_or(ScorerKind::ExactMatch) {
            ScorerKind::NumericTolerance => Scorer::numeric(
                config
                    .scorer
                    .relative_tolerance
                    .unwrap_or(DEFAULT_RELATIVE_TOLERANCE),
            ),
            _ => Scorer::exact_match(),
        },
    }
}

fn build_gateway(config: &ExperimentConfig, k: usize) -> Result<Gateway, CommandError> {
    let map_err = |e: GatewayError| CommandError::Config(e.to_string());
    match config.model.kind {
        ModelKind::Endpoint => {
            let endpoint = config.model.endpoint.clone().expect("validated");
            Gateway::for_endpoint(endpoint, &config.output.cache_file()).map_err(map_err)
        }
        ModelKind::Mock => {
            let mock = config.model.mock.clone().expect("validated");
            if mock.planted_permutation.len() != k {
                return Err(CommandError::Config(format!(
                    "planted permutation has length {}, demonstration sets have k = {k}",
                    mock.planted_permutation.len()
                )));
            }
            Gateway::for_mock(mock).map_err(map_err)
        }
    }
}

/// Builds the M x P test-accuracy matrix and emits the sensitivity report,
/// the violin data, and the replayable matrix file.
pub async fn cmd_sensitivity(config: &ExperimentConfig) -> Result<ReportBundle, CommandError> {
    config.validate()?;
    let p = config.resolve_p(10);
    if p < 2 {
        return Err(CommandError::Config(
            "order sensitivity undefined for P<2".into(),
        ));
    }
    if config.demos.m < 2 {
        return Err(CommandError::Config(
            "selection sensitivity undefined for M<2".into(),
        ));
    }
    if config.split.n_test == 0 {
        return Err(CommandError::Config(
            "sensitivity needs a non-empty test split".into(),
        ));
    }

    let prepared = prepare(config)?;
    let perms = sample_permutations(
        prepared.k,
        p,
        config.perms.seed,
        config.perms.include_identity,
    )?;
    let matrix = evaluate_matrix(
        &prepared.sets,
        &perms,
        &prepared.split.test,
        &prepared.gateway,
        &prepared.scorer,
        &prepared.template,
        &prepared.dataset,
        EvalSplit::Test,
    )
    .await?;
    let report = SensitivityReport::compute(&matrix, config.stats.std)?;

    let dir = config.output.dir.join("sensitivity");
    let mut files = vec![bundle::write_config(&dir, config)?];
    let provenance = Provenance::new(config, prepared.gateway.model_id());

    let matrix_path = dir.join("matrix.json");
    bundle::write_json(
        &matrix_path,
        &MatrixArtifact {
            provenance: provenance.clone(),
            matrix,
        },
    )?;
    files.push(matrix_path);

    let report_path = dir.join("report.json");
    bundle::write_json(
        &report_path,
        &SensitivityArtifact {
            provenance: provenance.clone(),
            report: report.clone(),
        },
    )?;
    files.push(report_path);

    let csv_path = dir.join("report.csv");
    bundle::write_csv(
        &csv_path,
        &[
            "model",
            "dataset",
            "m",
            "p",
            "order_sensitivity",
            "selection_sensitivity",
            "ratio",
        ],
        &[vec![
            provenance.model_id.clone(),
            provenance.dataset.clone(),
            config.demos.m.to_string(),
            p.to_string(),
            bundle::number(report.order_sensitivity),
            bundle::number(report.selection_sensitivity),
            bundle::ratio_cell(report.ratio),
        ]],
    )?;
    files.push(csv_path);

    let violin_path = dir.join("violin.csv");
    let mut rows = Vec::new();
    for (i, std) in report.row_stds.iter().enumerate() {
        rows.push(vec![
            "order".to_string(),
            i.to_string(),
            bundle::number(*std),
        ]);
    }
    for (j, std) in report.col_stds.iter().enumerate() {
        rows.push(vec![
            "selection".to_string(),
            j.to_string(),
            bundle::number(*std),
        ]);
    }
    bundle::write_csv(&violin_path, &["kind", "index", "std"], &rows)?;
    files.push(violin_path);

    Ok(ReportBundle { dir, files })
}

/// Runs the development-selected ordering search and emits per-set and
/// aggregate tables in the Average / Highest Dev / Max layout.
pub async fn cmd_find_order(config: &ExperimentConfig) -> Result<ReportBundle, CommandError> {
    config.validate()?;
    let p = config.resolve_p(128);
    if config.split.n_dev == 0 {
        return Err(CommandError::Config(
            "find-order requires a non-empty dev split (split.n_dev >= 1)".into(),
        ));
    }
    if config.split.n_test == 0 {
        return Err(CommandError::Config(
            "find-order needs a non-empty test split".into(),
        ));
    }

    let prepared = prepare(config)?;
    crate::prompting::check_permutation_budget(prepared.k, p)?;
    let result = find_order(
        FindOrderRequest {
            sets: &prepared.sets,
            dev: &prepared.split.dev,
            test: &prepared.split.test,
            p,
            seed: config.perms.seed,
            scope: config.search.selection_scope,
            dataset: &prepared.dataset,
        },
        &prepared.gateway,
        &prepared.scorer,
        &prepared.template,
    )
    .await?;

    let dir = config.output.dir.join("find-order");
    let mut files = vec![bundle::write_config(&dir, config)?];
    let provenance = Provenance::new(config, prepared.gateway.model_id());

    let manifest_path = dir.join("split_manifest.json");
    bundle::write_json(
        &manifest_path,
        &ManifestArtifact {
            provenance: provenance.clone(),
            manifest: SplitManifest::from_split(&prepared.split),
        },
    )?;
    files.push(manifest_path);

    let result_path = dir.join("order_search.json");
    bundle::write_json(
        &result_path,
        &OrderSearchArtifact {
            provenance: provenance.clone(),
            result: result.clone(),
        },
    )?;
    files.push(result_path);

    let per_set_path = dir.join("per_set.csv");
    let rows: Vec<Vec<String>> = result
        .per_set
        .iter()
        .map(|s| {
            vec![
                s.set_index.to_string(),
                bundle::number(s.test_acc_mean),
                bundle::number(s.test_acc_selected),
                bundle::number(s.test_acc_max),
                s.selected_perm_index.to_string(),
            ]
        })
        .collect();
    bundle::write_csv(
        &per_set_path,
        &[
            "set",
            "average",
            "highest_dev",
            "max",
            "selected_perm_index",
        ],
        &rows,
    )?;
    files.push(per_set_path);

    let aggregate_path = dir.join("aggregate.csv");
    bundle::write_csv(
        &aggregate_path,
        &["average", "highest_dev", "max"],
        &[vec![
            bundle::number(result.aggregate.average),
            bundle::number(result.aggregate.highest_dev),
            bundle::number(result.aggregate.max),
        ]],
    )?;
    files.push(aggregate_path);

    Ok(ReportBundle { dir, files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    PermBudget,
    DevSize,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::PermBudget => "perm-budget",
            SweepKind::DevSize => "dev-size",
        }
    }
}

/// Recomputes the three-series curve from a completed find-order bundle.
/// Pure post-processing: no gateway is built, so no model calls can happen.
pub async fn cmd_sweep(
    config: &ExperimentConfig,
    kind: SweepKind,
    values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ReportBundle, CommandError> {
    config.validate()?;
    if trials == 0 {
        return Err(CommandError::Config("sweep requires trials >= 1".into()));
    }
    if values.is_empty() {
        return Err(CommandError::Config(
            "sweep requires at least one value".into(),
        ));
    }

    let find_dir = config.output.dir.join("find-order");
    let artifact_path = find_dir.join("order_search.json");
    if !artifact_path.exists() {
        return Err(CommandError::Config(format!(
            "no find-order bundle at {}; run find-order first",
            artifact_path.display()
        )));
    }
    let artifact: OrderSearchArtifact = bundle::read_json(&artifact_path)?;
    bundle::verify_provenance(&find_dir, &artifact.provenance, &artifact_path)?;
    if artifact.provenance.config_digest != config.digest() {
        return Err(CommandError::Config(
            "config does not match the find-order bundle it would sweep".into(),
        ));
    }

    let curve: SweepCurve = match kind {
        SweepKind::PermBudget => sweep_permutation_budget(&artifact.result, values, trials, seed)?,
        SweepKind::DevSize => sweep_dev_size(&artifact.result, values, trials, seed)?,
    };

    let dir = config.output.dir.join(format!("sweep-{}", kind.as_str()));
    let mut files = vec![bundle::write_config(&dir, config)?];
    let curve_path = dir.join("curve.json");
    bundle::write_json(
        &curve_path,
        &CurveArtifact {
            provenance: artifact.provenance.clone(),
            sweep: SweepParams {
                kind: kind.as_str().into(),
                values: values.to_vec(),
                trials,
                seed,
            },
            curve: curve.clone(),
        },
    )?;
    files.push(curve_path);

    let csv_path = dir.join("curve.csv");
    let rows: Vec<Vec<String>> = (0..curve.x.len())
        .map(|i| {
            vec![
                curve.x[i].to_string(),
                bundle::number(curve.average[i]),
                bundle::number(curve.highest_dev[i]),
                bundle::number(curve.max[i]),
                bundle::number(curve.stderr[i]),
            ]
        })
        .collect();
    bundle::write_csv(
        &csv_path,
        &["x", "average", "highest_dev", "max", "stderr"],
        &rows,
    )?;
    files.push(csv_path);

    Ok(ReportBundle { dir, files })
}

fn load_search_bundle(
    config: &ExperimentConfig,
) -> Result<(OrderSearchArtifact, PathBuf), CommandError> {
    let find_dir = config.output.dir.join("find-order");
    let artifact_path = find_dir.join("order_search.json");
    if !artifact_path.exists() {
        return Err(CommandError::Config(format!(
            "no find-order bundle at {}; run find-order first",
            artifact_path.display()
        )));
    }
    let artifact: OrderSearchArtifact = bundle::read_json(&artifact_path)?;
    bundle::verify_provenance(&find_dir, &artifact.provenance, &artifact_path)?;
    if artifact.provenance.config_digest != config.digest() {
        return Err(CommandError::Config(
            "config does not match its find-order bundle".into(),
        ));
    }
    Ok((artifact, artifact_path))
}

/// Checks that freshly prepared demonstration sets match the ones recorded
/// in a find-order bundle; a mismatch means corpus or config drifted since.
fn check_sets_match(
    prepared: &Prepared,
    result: &OrderSearchResult,
    side: &str,
) -> Result<(), CommandError> {
    if prepared.sets.len() != result.per_set.len() {
        return Err(CommandError::Fixture(format!(
            "{side}: bundle has {} sets, current config prepares {}",
            result.per_set.len(),
            prepared.sets.len()
        )));
    }
    for (set, recorded) in prepared.sets.iter().zip(&result.per_set) {
        if set.example_ids() != recorded.example_ids {
            return Err(CommandError::Fixture(format!(
                "{side}: demonstration set {} no longer matches the bundle \
                 (corpus or seeds changed since find-order ran)",
                set.set_index
            )));
        }
    }
    Ok(())
}

/// Applies each dataset's best dev ordering to the other dataset and reports
/// the eight-column transfer row.
pub async fn cmd_transfer(
    config_a: &ExperimentConfig,
    config_b: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ReportBundle, CommandError> {
    let (artifact_a, _) = load_search_bundle(config_a)?;
    let (artifact_b, _) = load_search_bundle(config_b)?;
    if artifact_a.result.k != artifact_b.result.k {
        return Err(CommandError::Config(
            SearchError::KMismatch {
                a: artifact_a.result.k,
                b: artifact_b.result.k,
            }
            .to_string(),
        ));
    }

    let prepared_a = prepare(config_a)?;
    let prepared_b = prepare(config_b)?;
    check_sets_match(&prepared_a, &artifact_a.result, "dataset A")?;
    check_sets_match(&prepared_b, &artifact_b.result, "dataset B")?;

    let a_to_b = transfer_evaluate(
        &artifact_a.result,
        &prepared_b.sets,
        &prepared_b.split.test,
        &artifact_b.result.dataset,
        &prepared_b.gateway,
        &prepared_b.scorer,
        &prepared_b.template,
    )
    .await?;
    let b_to_a = transfer_evaluate(
        &artifact_b.result,
        &prepared_a.sets,
        &prepared_a.split.test,
        &artifact_a.result.dataset,
        &prepared_a.gateway,
        &prepared_a.scorer,
        &prepared_a.template,
    )
    .await?;
    let result = build_transfer_result(&artifact_a.result, &artifact_b.result, &a_to_b, &b_to_a);

    let dir = out_dir.join("transfer");
    let mut files = Vec::new();
    let json_path = dir.join("transfer.json");
    bundle::write_json(
        &json_path,
        &TransferArtifact {
            provenance_a: artifact_a.provenance,
            provenance_b: artifact_b.provenance,
            result: result.clone(),
        },
    )?;
    files.push(json_path);

    let a = &result.dataset_a;
    let b = &result.dataset_b;
    let header: Vec<String> = vec![
        "model".into(),
        format!("{a}_best"),
        format!("{b}_best"),
        format!("{a}_avg"),
        format!("{b}_avg"),
        format!("{a}_to_{b}"),
        format!("{b}_to_{a}"),
        "transfer_ratio".into(),
    ];
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_path = dir.join("transfer.csv");
    bundle::write_csv(
        &csv_path,
        &header_refs,
        &[vec![
            artifact_a.result.model_id.clone(),
            bundle::number(result.best_a),
            bundle::number(result.best_b),
            bundle::number(result.avg_a),
            bundle::number(result.avg_b),
            bundle::number(result.a_to_b),
            bundle::number(result.b_to_a),
            bundle::number(result.transfer_ratio),
        ]],
    )?;
    files.push(csv_path);

    Ok(ReportBundle { dir, files })
}

/// Aggregates sensitivity reports across (model, dataset) bundles into the
/// per-model or per-dataset table.
pub fn cmd_report(
    report_paths: &[PathBuf],
    group_by: GroupBy,
    out_dir: &Path,
) -> Result<ReportBundle, CommandError> {
    if report_paths.is_empty() {
        return Err(CommandError::Config(
            "report requires at least one bundle".into(),
        ));
    }
    let mut entries = Vec::new();
    let mut sources = BTreeMap::new();
    for path in report_paths {
        let artifact: SensitivityArtifact = bundle::read_json(path)?;
        let bundle_dir = path.parent().unwrap_or_else(|| Path::new("."));
        bundle::verify_provenance(bundle_dir, &artifact.provenance, path)?;
        sources.insert(
            format!(
                "{}/{}",
                artifact.provenance.model_id, artifact.provenance.dataset
            ),
            artifact.provenance.config_digest.clone(),
        );
        entries.push(ReportEntry {
            model_id: artifact.provenance.model_id,
            dataset: artifact.provenance.dataset,
            order_sensitivity: artifact.report.order_sensitivity,
            selection_sensitivity: artifact.report.selection_sensitivity,
        });
    }
    let rows = aggregate(&entries, group_by)?;

    let dir = out_dir.join("report");
    let stem = match group_by {
        GroupBy::Model => "by_model",
        GroupBy::Dataset => "by_dataset",
    };
    let mut files = Vec::new();
    let json_path = dir.join(format!("{stem}.json"));
    bundle::write_json(
        &json_path,
        &AggregateArtifact {
            group_by: stem.trim_start_matches("by_").to_string(),
            rows: rows.clone(),
            sources,
        },
    )?;
    files.push(json_path);

    let csv_path = dir.join(format!("{stem}.csv"));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            vec![
                row.key.clone(),
                row.group_size.to_string(),
                bundle::number(row.order_sensitivity),
                bundle::number(row.selection_sensitivity),
                bundle::ratio_cell(row.ratio),
            ]
        })
        .collect();
    bundle::write_csv(
        &csv_path,
        &[
            "key",
            "group_size",
            "order_sensitivity",
            "selection_sensitivity",
            "ratio",
        ],
        &csv_rows,
    )?;
    files.push(csv_path);

    Ok(ReportBundle { dir, files })
}
