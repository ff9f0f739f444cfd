//! Lifted relational neural networks.
//!
//! A template of weighted, function-free definite clauses is grounded against
//! the facts of each example into its own feedforward network. All networks
//! share the template's parameters, so weights are learned jointly by
//! stochastic gradient descent over examples.
//!
//! The pipeline is:
//!
//! 1. [`logic`]: parse a [`Template`] and check that it is non-recursive.
//! 2. [`grounder`]: compute the least Herbrand model of template plus example
//!    and enumerate the active ground rule instances.
//! 3. [`netbuild`]: compile a grounding into atom, fact, rule and aggregation
//!    neurons and evaluate it under an [`ActivationFamily`].
//! 4. [`trainer`]: backpropagate through ground networks, accumulating
//!    gradients of shared parameters, and run online SGD with restarts.
//!
//! [`dataset`] and [`cli`] provide the file formats and command surface, and
//! [`fixtures`] / [`molecules`] bundle ready-made templates and data.

pub mod activations;
pub mod cli;
pub mod dataset;
pub mod fixtures;
pub mod grounder;
pub mod logic;
pub mod molecules;
pub mod netbuild;
pub mod params;
pub mod trainer;

pub use activations::{ActivationEval, ActivationFamily, FamilyKind};
pub use dataset::{Example, Query};
pub use grounder::{ground, least_herbrand_model, GroundConfig, Grounding, HerbrandModel};
pub use logic::{parse_template, Atom, Predicate, Template, Term, WeightedClause};
pub use netbuild::{build, forward, GroundNetwork, ValueMap};
pub use params::{ParamId, ParameterStore};
pub use trainer::{predict, train, Prediction, TrainConfig, TrainingTask};
