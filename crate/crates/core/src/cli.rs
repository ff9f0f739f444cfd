//! Command implementations behind the `lrnn` binary.
//!
//! Each command reads its input files, runs the pipeline and writes CSV,
//! JSON-lines, parameter or DOT files. Errors carry the process exit code:
//! 2 for unreadable or malformed input and invalid settings, 3 for a
//! recursive template, 4 when grounding exceeds the capacity limit
//! (`LRNN_CAPACITY` overrides the default), and 1 for training failures.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::activations::{ActivationFamily, FamilyKind};
use crate::dataset::{
    parse_examples, parse_queries, render_examples, render_queries, Example, FoldError, FoldPlan,
    Query,
};
use crate::grounder::{ground, GroundConfig, GroundError};
use crate::logic::{
    check_nonrecursive, parse_statements, parse_template_named, Atom, ParseError, RecursionError,
    Statement, Template,
};
use crate::molecules::{self, BondEncoding, MoleculeConfig};
use crate::netbuild::{build, export_dot, forward};
use crate::params::{ParamFileError, ParameterStore};
use crate::trainer::{
    derive_seed, predict_all, CostKind, TrainConfig, TrainError, Trainer, TrainingTask,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Params {
        path: PathBuf,
        source: ParamFileError,
    },
    #[error(transparent)]
    Recursion(RecursionError),
    #[error("{0}")]
    Capacity(String),
    #[error(transparent)]
    Train(TrainError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_)
            | CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::Params { .. } => 2,
            CliError::Recursion(_) => 3,
            CliError::Capacity(_) => 4,
            CliError::Train(_) => 1,
        }
    }
}

impl From<GroundError> for CliError {
    fn from(e: GroundError) -> Self {
        match e {
            GroundError::Recursion(r) => CliError::Recursion(r),
            e @ GroundError::Capacity { .. } => CliError::Capacity(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Ground(g) => g.into(),
            TrainError::Config(c) => CliError::Invalid(c.to_string()),
            e @ (TrainError::UnknownExample(_) | TrainError::BadTarget { .. }) => {
                CliError::Invalid(e.to_string())
            }
            e => CliError::Train(e),
        }
    }
}

impl From<FoldError> for CliError {
    fn from(e: FoldError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path) -> impl FnOnce(ParseError) -> CliError + '_ {
    move |source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a template. Clause ids are prefixed with the file stem, and the
/// template is rejected if it is recursive.
pub fn load_template(path: &Path, family: FamilyKind) -> Result<Template, CliError> {
    let source = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("template");
    let template = parse_template_named(&read(path)?, source)
        .map_err(parse_err(path))?
        .with_family(ActivationFamily::new(family));
    check_nonrecursive(&template).map_err(CliError::Recursion)?;
    Ok(template)
}

pub fn load_examples(path: &Path) -> Result<Vec<Example>, CliError> {
    parse_examples(&read(path)?).map_err(parse_err(path))
}

/// Reads a query file and checks that every referenced example exists.
pub fn load_queries(path: &Path, examples: &[Example]) -> Result<Vec<Query>, CliError> {
    let queries = parse_queries(&read(path)?).map_err(parse_err(path))?;
    let known: HashSet<&str> = examples.iter().map(|e| e.id.as_str()).collect();
    if let Some(q) = queries
        .iter()
        .find(|q| !known.contains(q.example_id.as_str()))
    {
        return Err(CliError::Invalid(format!(
            "{}: query `{}` refers to unknown example `{}`",
            path.display(),
            q.atom,
            q.example_id
        )));
    }
    Ok(queries)
}

/// Template parameters, overwritten from a parameter file when given.
pub fn load_params(template: &Template, path: Option<&Path>) -> Result<ParameterStore, CliError> {
    let mut params = template.params.clone();
    if let Some(path) = path {
        params
            .load_param_file(&read(path)?)
            .map_err(|source| CliError::Params {
                path: path.to_path_buf(),
                source,
            })?;
    }
    Ok(params)
}

/// Parses a single ground atom such as `mother(eve,alice)`.
pub fn parse_atom(text: &str) -> Result<Atom, CliError> {
    let bad = |why: &str| CliError::Invalid(format!("bad atom `{text}`: {why}"));
    let mut st = parse_statements(&format!("0 :: {text}.")).map_err(|e| bad(&e.message))?;
    match (st.pop(), st.is_empty()) {
        (Some(Statement::Clause { head, body, .. }), true) if body.is_empty() => {
            if head.is_ground() {
                Ok(head)
            } else {
                Err(bad("not ground"))
            }
        }
        _ => Err(bad("expected one atom")),
    }
}

fn ground_config() -> Result<GroundConfig, CliError> {
    GroundConfig::from_env().map_err(CliError::Invalid)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of utf-8 fields")
}

#[derive(Clone, Debug)]
pub struct GroundArgs {
    pub template: PathBuf,
    pub examples: PathBuf,
    /// Directory receiving `instances.csv` and `stats.csv`.
    pub out: PathBuf,
}

/// Neuron counts of one example's ground network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundStats {
    pub example_id: String,
    pub atoms: usize,
    pub facts: usize,
    pub rules: usize,
    pub aggregations: usize,
}

pub fn cmd_ground(args: &GroundArgs) -> Result<Vec<GroundStats>, CliError> {
    let template = load_template(&args.template, FamilyKind::MaxSigmoid)?;
    let examples = load_examples(&args.examples)?;
    let config = ground_config()?;
    let mut instances = Vec::new();
    let mut stats = Vec::new();
    for e in &examples {
        let g = ground(&template, e, &config)?;
        for i in &g.instances {
            let body: Vec<String> = i.body.iter().map(|a| a.to_string()).collect();
            instances.push(vec![
                e.id.clone(),
                i.clause.to_string(),
                i.theta.to_string(),
                format!("{} :- {}", i.head, body.join(", ")),
            ]);
        }
        let c = build(&g, &template).counts();
        stats.push(GroundStats {
            example_id: e.id.clone(),
            atoms: c.atoms,
            facts: c.facts,
            rules: c.rules,
            aggregations: c.aggregations,
        });
    }
    create_dir(&args.out)?;
    write(
        &args.out.join("instances.csv"),
        &csv_string(
            &["example_id", "clause", "substitution", "instance"],
            instances,
        ),
    )?;
    let rows = stats.iter().map(|s| {
        vec![
            s.example_id.clone(),
            s.atoms.to_string(),
            s.facts.to_string(),
            s.rules.to_string(),
            s.aggregations.to_string(),
        ]
    });
    write(
        &args.out.join("stats.csv"),
        &csv_string(
            &["example_id", "atoms", "facts", "rules", "aggregations"],
            rows,
        ),
    )?;
    Ok(stats)
}

#[derive(Clone, Debug)]
pub struct TrainArgs {
    pub template: PathBuf,
    pub examples: PathBuf,
    pub queries: PathBuf,
    pub family: FamilyKind,
    pub config: TrainConfig,
    pub out_params: PathBuf,
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    /// Fraction of training queries classified correctly at threshold 0.5.
    pub accuracy: f64,
    pub best_restart: usize,
    pub best_cost: f64,
    pub warnings: Vec<String>,
}

fn family_warnings(family: FamilyKind) -> Vec<String> {
    match family {
        FamilyKind::Godel => vec![
            "godel family: offsets are not trained and min/max pass gradient to one input only"
                .to_string(),
        ],
        _ => Vec::new(),
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary, CliError> {
    args.config
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let template = load_template(&args.template, args.family)?;
    let examples = load_examples(&args.examples)?;
    let queries = load_queries(&args.queries, &examples)?;
    let task = TrainingTask::new(template, examples, queries, args.config.clone())?;
    let trainer = Trainer::with_ground_config(&task, &ground_config()?)?;
    let (params, report) = trainer.train()?;
    write(&args.out_params, &params.to_param_file())?;
    if let Some(path) = &args.report {
        write(path, &report.to_json_lines())?;
    }
    Ok(TrainSummary {
        accuracy: trainer.accuracy(&params),
        best_restart: report.best_restart,
        best_cost: report.best_cost,
        warnings: family_warnings(args.family),
    })
}

/// Which phase of cross-validation asks for targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Training and model selection on the folds other than `fold`.
    Select { fold: usize },
    /// Scoring the held-out `fold`.
    Evaluate { fold: usize },
}

/// Supplies query targets to cross-validation.
pub trait QuerySource {
    /// Queries of the listed examples, in a stable order.
    fn queries(&self, example_ids: &[String], stage: Stage) -> Vec<Query>;
}

impl QuerySource for [Query] {
    fn queries(&self, example_ids: &[String], _stage: Stage) -> Vec<Query> {
        let wanted: HashSet<&str> = example_ids.iter().map(String::as_str).collect();
        self.iter()
            .filter(|q| wanted.contains(q.example_id.as_str()))
            .cloned()
            .collect()
    }
}

impl QuerySource for Vec<Query> {
    fn queries(&self, example_ids: &[String], stage: Stage) -> Vec<Query> {
        self.as_slice().queries(example_ids, stage)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct XvalConfig {
    pub folds: usize,
    /// Candidate learning rates for inner selection.
    pub learning_rates: Vec<f64>,
    /// Candidate restart counts for inner selection.
    pub restarts: Vec<usize>,
    /// Epochs, cost, init range and master seed; learning rate and restarts
    /// are taken from the grids.
    pub base: TrainConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub train_examples: usize,
    pub test_examples: usize,
    pub learning_rate: f64,
    pub restarts: usize,
    pub train_cost: f64,
    pub train_error: f64,
    pub test_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct XvalReport {
    pub folds: Vec<FoldResult>,
}

impl XvalReport {
    pub fn mean_test_error(&self) -> f64 {
        self.folds.iter().map(|f| f.test_error).sum::<f64>() / self.folds.len() as f64
    }

    pub fn mean_train_error(&self) -> f64 {
        self.folds.iter().map(|f| f.train_error).sum::<f64>() / self.folds.len() as f64
    }

    /// One row per fold and a final `mean` row.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<Vec<String>> = self
            .folds
            .iter()
            .map(|f| {
                vec![
                    f.fold.to_string(),
                    f.train_examples.to_string(),
                    f.test_examples.to_string(),
                    f.learning_rate.to_string(),
                    f.restarts.to_string(),
                    f.train_cost.to_string(),
                    f.train_error.to_string(),
                    f.test_error.to_string(),
                ]
            })
            .collect();
        let mut mean = vec![String::new(); 8];
        mean[0] = "mean".into();
        mean[6] = self.mean_train_error().to_string();
        mean[7] = self.mean_test_error().to_string();
        rows.push(mean);
        csv_string(
            &[
                "fold",
                "train_examples",
                "test_examples",
                "learning_rate",
                "restarts",
                "train_cost",
                "train_error",
                "test_error",
            ],
            rows,
        )
    }
}

fn error_rate(outcomes: &[crate::trainer::QueryOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|o| !o.correct()).count() as f64 / outcomes.len() as f64
}

/// k-fold cross-validation. Inside each fold the learning rate and restart
/// count are chosen by the lowest final training cost; held-out targets
/// are requested only after that choice, for scoring.
pub fn cross_validate(
    template: &Template,
    examples: &[Example],
    source: &dyn QuerySource,
    config: &XvalConfig,
    ground_config: &GroundConfig,
) -> Result<XvalReport, CliError> {
    if config.learning_rates.is_empty() || config.restarts.is_empty() {
        return Err(CliError::Invalid(
            "empty learning-rate or restart grid".into(),
        ));
    }
    let ids: Vec<String> = examples.iter().map(|e| e.id.clone()).collect();
    let plan = FoldPlan::new(&ids, config.folds, config.base.seed)?;
    let folds = plan.folds(&ids);
    let mut results = Vec::with_capacity(folds.len());
    for (k, test_ids) in folds.iter().enumerate() {
        let held_out: HashSet<&str> = test_ids.iter().map(String::as_str).collect();
        let train_examples: Vec<Example> = examples
            .iter()
            .filter(|e| !held_out.contains(e.id.as_str()))
            .cloned()
            .collect();
        let train_ids: Vec<String> = train_examples.iter().map(|e| e.id.clone()).collect();
        let train_queries = source.queries(&train_ids, Stage::Select { fold: k });

        let base = TrainConfig {
            seed: derive_seed(config.base.seed, k as u64),
            ..config.base.clone()
        };
        let task = TrainingTask::new(
            template.clone(),
            train_examples,
            train_queries,
            base.clone(),
        )?;
        let mut trainer = Trainer::with_ground_config(&task, ground_config)?;
        let mut best: Option<(f64, f64, usize, ParameterStore)> = None;
        let mut last_err = None;
        for &lr in &config.learning_rates {
            for &restarts in &config.restarts {
                trainer
                    .reconfigure(TrainConfig {
                        learning_rate: lr,
                        restarts,
                        ..base.clone()
                    })
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
                match trainer.train() {
                    Ok((params, report)) => {
                        if best.as_ref().is_none_or(|(c, ..)| report.best_cost < *c) {
                            best = Some((report.best_cost, lr, restarts, params));
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
        }
        let Some((train_cost, lr, restarts, params)) = best else {
            return Err(last_err.map_or_else(
                || CliError::Invalid("no configuration trained".into()),
                Into::into,
            ));
        };
        let train_error = error_rate(&trainer.evaluate(&params));

        let test_examples: Vec<Example> = examples
            .iter()
            .filter(|e| held_out.contains(e.id.as_str()))
            .cloned()
            .collect();
        let test_queries = source.queries(test_ids, Stage::Evaluate { fold: k });
        let outcomes = predict_all(
            template,
            &params,
            &test_examples,
            &test_queries,
            ground_config,
        )?;
        results.push(FoldResult {
            fold: k,
            train_examples: train_ids.len(),
            test_examples: test_ids.len(),
            learning_rate: lr,
            restarts,
            train_cost,
            train_error,
            test_error: error_rate(&outcomes),
        });
    }
    Ok(XvalReport { folds: results })
}

#[derive(Clone, Debug)]
pub struct XvalArgs {
    pub template: PathBuf,
    pub examples: PathBuf,
    pub queries: PathBuf,
    pub family: FamilyKind,
    pub config: XvalConfig,
    pub out: PathBuf,
}

pub fn cmd_xval(args: &XvalArgs) -> Result<XvalReport, CliError> {
    args.config
        .base
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let template = load_template(&args.template, args.family)?;
    let examples = load_examples(&args.examples)?;
    let queries = load_queries(&args.queries, &examples)?;
    let report = cross_validate(
        &template,
        &examples,
        &queries,
        &args.config,
        &ground_config()?,
    )?;
    write(&args.out, &report.to_csv())?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct PredictArgs {
    pub template: PathBuf,
    pub params: Option<PathBuf>,
    pub examples: PathBuf,
    /// Query file; its targets are ignored.
    pub queries: Option<PathBuf>,
    /// Atoms evaluated in every example.
    pub atoms: Vec<String>,
    pub family: FamilyKind,
    pub out: Option<PathBuf>,
}

/// `example_id,atom,score,missing` rows; written to `out` when given.
pub fn cmd_predict(args: &PredictArgs) -> Result<String, CliError> {
    let template = load_template(&args.template, args.family)?;
    let params = load_params(&template, args.params.as_deref())?;
    let examples = load_examples(&args.examples)?;
    let mut per_example: BTreeMap<&str, Vec<Atom>> = BTreeMap::new();
    let file_queries = match &args.queries {
        Some(path) => load_queries(path, &examples)?,
        None => Vec::new(),
    };
    for q in &file_queries {
        per_example
            .entry(q.example_id.as_str())
            .or_default()
            .push(q.atom.clone());
    }
    let extra = args
        .atoms
        .iter()
        .map(|a| parse_atom(a))
        .collect::<Result<Vec<_>, _>>()?;
    let config = ground_config()?;
    let mut rows = Vec::new();
    for e in &examples {
        let mut atoms = per_example.remove(e.id.as_str()).unwrap_or_default();
        atoms.extend(extra.iter().cloned());
        if atoms.is_empty() {
            continue;
        }
        let net = build(&ground(&template, e, &config)?, &template);
        let values = forward(&net, &params, &template.family);
        for a in atoms {
            let p = values.query(&net, &a);
            rows.push(vec![
                e.id.clone(),
                a.to_string(),
                p.value.to_string(),
                p.missing.to_string(),
            ]);
        }
    }
    let out = csv_string(&["example_id", "atom", "score", "missing"], rows);
    if let Some(path) = &args.out {
        write(path, &out)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ExportDotArgs {
    pub template: PathBuf,
    pub params: Option<PathBuf>,
    pub examples: PathBuf,
    pub family: FamilyKind,
    pub out: PathBuf,
}

/// File name for an example's DOT output.
pub fn dot_file_name(example_id: &str) -> String {
    let safe: String = example_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}.dot")
}

/// Writes one DOT file per example into `out`; returns the paths written.
pub fn cmd_export_dot(args: &ExportDotArgs) -> Result<Vec<PathBuf>, CliError> {
    let template = load_template(&args.template, args.family)?;
    let params = load_params(&template, args.params.as_deref())?;
    let examples = load_examples(&args.examples)?;
    let config = ground_config()?;
    create_dir(&args.out)?;
    let mut written = Vec::new();
    for e in &examples {
        let net = build(&ground(&template, e, &config)?, &template);
        let path = args.out.join(dot_file_name(&e.id));
        write(&path, &export_dot(&net, &params))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Debug)]
pub struct MoleculesArgs {
    pub config: MoleculeConfig,
    pub encoding: BondEncoding,
    /// Zero-arity query atom labeled by the planted O-H bond rule.
    pub target: String,
    pub out_examples: PathBuf,
    pub out_queries: PathBuf,
}

/// Writes a generated molecule dataset; returns the molecule count.
pub fn cmd_molecules(args: &MoleculesArgs) -> Result<usize, CliError> {
    if args.config.count == 0
        || args.config.min_atoms < 2
        || args.config.min_atoms > args.config.max_atoms
    {
        return Err(CliError::Invalid(
            "need count >= 1 and 2 <= min-atoms <= max-atoms".into(),
        ));
    }
    let mols = molecules::generate(&args.config);
    write(
        &args.out_examples,
        &render_examples(&molecules::examples(&mols, args.encoding)),
    )?;
    write(
        &args.out_queries,
        &render_queries(&molecules::queries(&mols, &args.target)),
    )?;
    Ok(mols.len())
}

/// Parses `--cost` values.
pub fn parse_cost(s: &str) -> Result<CostKind, String> {
    s.parse()
}
