//! Weight learning.
//!
//! Every example is grounded and compiled once. Training then runs online
//! stochastic gradient descent: examples are visited in a seeded random
//! order, and after each example every trainable parameter takes the step
//! `w <- w - lr * dJ/dw`. A parameter may occur on many edges of one ground
//! network (but at most once on any path), so its gradient is the sum of the
//! per-occurrence partials. Several restarts from independent random
//! initializations are run and the one with the lowest final cost is kept.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{sigmoid, ActivationFamily};
use crate::dataset::{Example, Query};
use crate::grounder::{ground, GroundConfig, GroundError};
use crate::logic::{Atom, Template};
use crate::netbuild::{build, forward, EdgeWeight, GroundNetwork, NeuronKind, ValueMap};
use crate::params::{ParamId, ParameterStore};

pub use crate::netbuild::Prediction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    /// `½ (sigm(t) − sigm(y))²`.
    SquaredSigmoid,
    /// `−t log sigm(y) − (1 − t) log(1 − sigm(y))`.
    CrossEntropy,
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::SquaredSigmoid => "squared-sigmoid",
            CostKind::CrossEntropy => "cross-entropy",
        })
    }
}

impl FromStr for CostKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squared-sigmoid" | "sq" => Ok(CostKind::SquaredSigmoid),
            "cross-entropy" | "ce" => Ok(CostKind::CrossEntropy),
            _ => Err(format!(
                "unknown cost `{s}` (expected squared-sigmoid or cross-entropy)"
            )),
        }
    }
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Cost of output `y` against target `t`, and its derivative in `y`.
pub fn cost(y: f64, t: f64, kind: CostKind) -> (f64, f64) {
    match kind {
        CostKind::SquaredSigmoid => {
            let sy = sigmoid(y);
            let r = sigmoid(t) - sy;
            (0.5 * r * r, -r * sy * (1.0 - sy))
        }
        CostKind::CrossEntropy => {
            // log sigm(y) = -softplus(-y), log(1 - sigm(y)) = -softplus(y)
            let value = t * softplus(-y) + (1.0 - t) * softplus(y);
            (value, sigmoid(y) - t)
        }
    }
}

/// Gradient of the cost with respect to every parameter of a store, aligned
/// with the store's dense indices.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientAccumulator {
    grads: Vec<f64>,
}

impl GradientAccumulator {
    pub fn zeros(len: usize) -> Self {
        Self {
            grads: vec![0.0; len],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.grads
    }

    pub fn get(&self, params: &ParameterStore, id: &ParamId) -> Option<f64> {
        params.index_of(id).map(|i| self.grads[i])
    }

    pub fn add(&mut self, other: &GradientAccumulator) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            *a += b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.grads.iter().all(|&g| g == 0.0)
    }

    /// Entries keyed by parameter id, in store order.
    pub fn by_id<'a>(
        &'a self,
        params: &'a ParameterStore,
    ) -> impl Iterator<Item = (&'a ParamId, f64)> {
        params.ids().iter().zip(self.grads.iter().copied())
    }
}

/// Reverse sweep over a ground network. `query_grads` seeds ∂cost/∂output at
/// query atoms; atoms missing from the network are ignored. Max and min
/// route the gradient to their recorded winner only.
pub fn backward(
    net: &GroundNetwork,
    params: &ParameterStore,
    values: &ValueMap,
    query_grads: &[(Atom, f64)],
) -> GradientAccumulator {
    let mut adj = vec![0.0; net.neurons.len()];
    for (atom, g) in query_grads {
        if let Some(id) = net.atom_neuron(atom) {
            adj[id] += g;
        }
    }
    let mut acc = GradientAccumulator::zeros(params.len());
    let grads = &mut acc.grads;
    for n in net.neurons.iter().rev() {
        let a = adj[n.id];
        if a == 0.0 || n.kind == NeuronKind::Fact {
            continue;
        }
        if n.fact_only {
            for e in &n.inputs {
                if let EdgeWeight::Shared(i) = e.weight {
                    grads[i] += a * values.values[e.source];
                }
            }
            continue;
        }
        let eval = values.evals[n.id]
            .as_ref()
            .expect("forward pass records an eval for every computed neuron");
        for (e, &p) in n.inputs.iter().zip(&eval.partials) {
            if p == 0.0 {
                continue;
            }
            adj[e.source] += a * p * e.weight.value(params);
            if let EdgeWeight::Shared(i) = e.weight {
                grads[i] += a * p * values.values[e.source];
            }
        }
        if let Some(o) = n.offset {
            grads[o] += a * eval.offset_partial;
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Learnable weights start uniformly in `[lo, hi)`.
    pub init_range: (f64, f64),
    pub cost: CostKind,
    pub shuffle: bool,
    /// Keep conjunction and disjunction offsets at their initial values.
    pub freeze_offsets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 100,
            restarts: 1,
            seed: 0,
            init_range: (-1.0, 1.0),
            cost: CostKind::SquaredSigmoid,
            shuffle: true,
            freeze_offsets: false,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("learning rate must be finite and non-negative, got {0}")]
    LearningRate(f64),
    #[error("epochs must be at least 1")]
    Epochs,
    #[error("restarts must be at least 1")]
    Restarts,
    #[error("init range must satisfy lo < hi, got ({0}, {1})")]
    InitRange(f64, f64),
}

impl TrainConfig {
    /// A zero learning rate is accepted; it leaves the parameters unchanged.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(ConfigError::LearningRate(self.learning_rate));
        }
        if self.epochs == 0 {
            return Err(ConfigError::Epochs);
        }
        if self.restarts == 0 {
            return Err(ConfigError::Restarts);
        }
        let (lo, hi) = self.init_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ConfigError::InitRange(lo, hi));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error("query for unknown example `{0}`")]
    UnknownExample(String),
    #[error("query target for `{atom}` in example `{example}` is not finite")]
    BadTarget { example: String, atom: String },
    #[error("parameter {param} became non-finite in epoch {epoch}")]
    Divergence { epoch: usize, param: String },
    #[error("all {0} restarts diverged")]
    AllRestartsFailed(usize),
}

/// Template, examples, queries and optimizer settings.
#[derive(Clone, Debug)]
pub struct TrainingTask {
    pub template: Template,
    pub examples: Vec<Example>,
    pub queries: Vec<Query>,
    pub config: TrainConfig,
}

impl TrainingTask {
    pub fn new(
        template: Template,
        examples: Vec<Example>,
        queries: Vec<Query>,
        config: TrainConfig,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        let known: std::collections::HashSet<&str> =
            examples.iter().map(|e| e.id.as_str()).collect();
        for q in &queries {
            if !known.contains(q.example_id.as_str()) {
                return Err(TrainError::UnknownExample(q.example_id.clone()));
            }
            if !q.target.is_finite() {
                return Err(TrainError::BadTarget {
                    example: q.example_id.clone(),
                    atom: q.atom.to_string(),
                });
            }
        }
        Ok(Self {
            template,
            examples,
            queries,
            config,
        })
    }
}

/// Deterministic 64-bit mixing (splitmix64) for deriving sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One example's network with its queries.
#[derive(Clone, Debug)]
pub struct CompiledExample {
    pub network: GroundNetwork,
    pub queries: Vec<(Atom, f64)>,
}

/// Per-query outcome of an evaluation pass.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryOutcome {
    pub example_id: String,
    pub atom: Atom,
    pub target: f64,
    pub prediction: Prediction,
}

impl QueryOutcome {
    /// 0/1 agreement at threshold 0.5.
    pub fn correct(&self) -> bool {
        (self.prediction.value >= 0.5) == (self.target >= 0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub restart: usize,
    /// Total cost after each completed epoch.
    pub costs: Vec<f64>,
    pub diverged: Option<String>,
}

impl RestartReport {
    pub fn final_cost(&self) -> Option<f64> {
        if self.diverged.is_some() {
            None
        } else {
            self.costs.last().copied()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub restarts: Vec<RestartReport>,
    pub best_restart: usize,
    pub best_cost: f64,
}

#[derive(Serialize)]
struct CostLine {
    restart: usize,
    epoch: usize,
    cost: f64,
}

impl TrainReport {
    /// One `{"restart","epoch","cost"}` JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.restarts {
            for (i, &cost) in r.costs.iter().enumerate() {
                let line = CostLine {
                    restart: r.restart,
                    epoch: i + 1,
                    cost,
                };
                out.push_str(&serde_json::to_string(&line).expect("plain struct serializes"));
                out.push('\n');
            }
        }
        out
    }
}

fn trainable_mask(template: &Template, config: &TrainConfig) -> Vec<bool> {
    (0..template.params.len())
        .map(|i| {
            template.params.is_learnable(i)
                && (!template.params.id(i).is_offset()
                    || (template.family.uses_offsets() && !config.freeze_offsets))
        })
        .collect()
}

/// Ground networks of a task, built once and reused by every epoch.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub template: Template,
    pub config: TrainConfig,
    pub examples: Vec<CompiledExample>,
    trainable: Vec<bool>,
}

impl Trainer {
    pub fn new(task: &TrainingTask) -> Result<Self, TrainError> {
        Self::with_ground_config(task, &GroundConfig::default())
    }

    pub fn with_ground_config(
        task: &TrainingTask,
        ground_config: &GroundConfig,
    ) -> Result<Self, TrainError> {
        task.config.validate()?;
        let mut by_example: HashMap<&str, Vec<(Atom, f64)>> = HashMap::new();
        for q in &task.queries {
            by_example
                .entry(q.example_id.as_str())
                .or_default()
                .push((q.atom.clone(), q.target));
        }
        let examples = task
            .examples
            .iter()
            .map(|e| {
                let g = ground(&task.template, e, ground_config)?;
                Ok(CompiledExample {
                    network: build(&g, &task.template),
                    queries: by_example.remove(e.id.as_str()).unwrap_or_default(),
                })
            })
            .collect::<Result<Vec<_>, GroundError>>()?;
        if let Some(id) = by_example.keys().next() {
            return Err(TrainError::UnknownExample(id.to_string()));
        }
        let trainable = trainable_mask(&task.template, &task.config);
        Ok(Self {
            template: task.template.clone(),
            config: task.config.clone(),
            examples,
            trainable,
        })
    }

    /// Swaps optimizer settings while keeping the compiled networks.
    pub fn reconfigure(&mut self, config: TrainConfig) -> Result<(), ConfigError> {
        config.validate()?;
        self.trainable = trainable_mask(&self.template, &config);
        self.config = config;
        Ok(())
    }

    pub fn family(&self) -> &ActivationFamily {
        &self.template.family
    }

    /// Whether SGD updates the parameter at `index`.
    pub fn is_trainable(&self, index: usize) -> bool {
        self.trainable[index]
    }

    /// Fresh parameters for a restart: learnable weights drawn uniformly from
    /// the init range; offsets at their initial values.
    pub fn initial_params(&self, rng: &mut ChaCha8Rng) -> ParameterStore {
        let mut params = self.template.params.clone();
        let (lo, hi) = self.config.init_range;
        let dist = Uniform::new(lo, hi);
        for i in 0..params.len() {
            if self.trainable[i] && !params.id(i).is_offset() {
                params.values_mut()[i] = dist.sample(rng);
            }
        }
        params
    }

    /// Cost and gradient of one example.
    pub fn example_gradient(
        &self,
        index: usize,
        params: &ParameterStore,
    ) -> (f64, GradientAccumulator) {
        let ex = &self.examples[index];
        let values = forward(&ex.network, params, self.family());
        let mut total = 0.0;
        let mut seeds = Vec::with_capacity(ex.queries.len());
        for (atom, target) in &ex.queries {
            let p = values.query(&ex.network, atom);
            let (c, dc) = cost(p.value, *target, self.config.cost);
            total += c;
            if !p.missing {
                seeds.push((atom.clone(), dc));
            }
        }
        (total, backward(&ex.network, params, &values, &seeds))
    }

    /// Full-batch cost and gradient.
    pub fn gradient(&self, params: &ParameterStore) -> (f64, GradientAccumulator) {
        let mut acc = GradientAccumulator::zeros(params.len());
        let mut total = 0.0;
        for i in 0..self.examples.len() {
            let (c, g) = self.example_gradient(i, params);
            total += c;
            acc.add(&g);
        }
        (total, acc)
    }

    pub fn total_cost(&self, params: &ParameterStore) -> f64 {
        self.evaluate(params)
            .iter()
            .map(|o| cost(o.prediction.value, o.target, self.config.cost).0)
            .sum()
    }

    pub fn evaluate(&self, params: &ParameterStore) -> Vec<QueryOutcome> {
        let mut out = Vec::new();
        for ex in &self.examples {
            let values = forward(&ex.network, params, self.family());
            for (atom, target) in &ex.queries {
                out.push(QueryOutcome {
                    example_id: ex.network.example_id.clone(),
                    atom: atom.clone(),
                    target: *target,
                    prediction: values.query(&ex.network, atom),
                });
            }
        }
        out
    }

    /// Fraction of queries classified correctly at threshold 0.5.
    pub fn accuracy(&self, params: &ParameterStore) -> f64 {
        let outcomes = self.evaluate(params);
        if outcomes.is_empty() {
            return 1.0;
        }
        outcomes.iter().filter(|o| o.correct()).count() as f64 / outcomes.len() as f64
    }

    /// One pass of online SGD; returns the total cost after the pass.
    pub fn sgd_epoch(
        &self,
        params: &mut ParameterStore,
        rng: &mut ChaCha8Rng,
        epoch: usize,
    ) -> Result<f64, TrainError> {
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        if self.config.shuffle {
            order.shuffle(rng);
        }
        let lr = self.config.learning_rate;
        for i in order {
            let (_, grad) = self.example_gradient(i, params);
            let values = params.values_mut();
            for (k, g) in grad.as_slice().iter().enumerate() {
                if self.trainable[k] && *g != 0.0 {
                    values[k] -= lr * g;
                }
            }
            if let Some(k) = values.iter().position(|v| !v.is_finite()) {
                return Err(TrainError::Divergence {
                    epoch,
                    param: params.id(k).to_string(),
                });
            }
        }
        Ok(self.total_cost(params))
    }

    /// One restart: seeded initialization followed by `epochs` SGD passes.
    pub fn run_restart(&self, restart: usize) -> (ParameterStore, RestartReport) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, restart as u64));
        let mut params = self.initial_params(&mut rng);
        let mut report = RestartReport {
            restart,
            costs: Vec::with_capacity(self.config.epochs),
            diverged: None,
        };
        for epoch in 1..=self.config.epochs {
            match self.sgd_epoch(&mut params, &mut rng, epoch) {
                Ok(c) => report.costs.push(c),
                Err(e) => {
                    report.diverged = Some(e.to_string());
                    break;
                }
            }
        }
        (params, report)
    }

    /// All restarts; keeps the parameters with the lowest final cost (the
    /// earliest restart wins ties).
    pub fn train(&self) -> Result<(ParameterStore, TrainReport), TrainError> {
        let mut best: Option<(f64, usize, ParameterStore)> = None;
        let mut reports = Vec::with_capacity(self.config.restarts);
        for r in 0..self.config.restarts {
            let (params, report) = self.run_restart(r);
            if let Some(c) = report.final_cost() {
                if best.as_ref().is_none_or(|(b, _, _)| c < *b) {
                    best = Some((c, r, params));
                }
            }
            reports.push(report);
        }
        let (best_cost, best_restart, params) =
            best.ok_or(TrainError::AllRestartsFailed(self.config.restarts))?;
        Ok((
            params,
            TrainReport {
                restarts: reports,
                best_restart,
                best_cost,
            },
        ))
    }
}

/// Grounds every example, then trains with restarts.
pub fn train(task: &TrainingTask) -> Result<(ParameterStore, TrainReport), TrainError> {
    Trainer::new(task)?.train()
}

/// Grounds, builds and evaluates a single query atom.
pub fn predict(
    template: &Template,
    params: &ParameterStore,
    example: &Example,
    query: &Atom,
) -> Result<Prediction, GroundError> {
    let g = ground(template, example, &GroundConfig::default())?;
    let net = build(&g, template);
    Ok(forward(&net, params, &template.family).query(&net, query))
}

/// Evaluates all queries of a trained model over a set of examples.
pub fn predict_all(
    template: &Template,
    params: &ParameterStore,
    examples: &[Example],
    queries: &[Query],
    ground_config: &GroundConfig,
) -> Result<Vec<QueryOutcome>, GroundError> {
    let mut wanted: BTreeMap<&str, Vec<&Query>> = BTreeMap::new();
    for q in queries {
        wanted.entry(q.example_id.as_str()).or_default().push(q);
    }
    let mut out = Vec::new();
    for e in examples {
        let Some(qs) = wanted.get(e.id.as_str()) else {
            continue;
        };
        let net = build(&ground(template, e, ground_config)?, template);
        let values = forward(&net, params, &template.family);
        for q in qs {
            out.push(QueryOutcome {
                example_id: e.id.clone(),
                atom: q.atom.clone(),
                target: q.target,
                prediction: values.query(&net, &q.atom),
            });
        }
    }
    Ok(out)
}
