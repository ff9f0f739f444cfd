//! The shared parameter store.
//!
//! Every template clause owns one weight. Rule clauses additionally own the
//! offset of their rule neurons, and the first rule clause of each head
//! predicate owns the offset of that predicate's atom neurons. Parameters are
//! addressed by [`ParamId`], which is derived from the clause id so that a
//! parameter file stays valid across re-parses of the same template.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Stable clause identity: source name plus 1-based ordinal within it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClauseId {
    pub source: Arc<str>,
    pub ordinal: u32,
}

impl ClauseId {
    pub fn new(source: impl Into<Arc<str>>, ordinal: u32) -> Self {
        Self {
            source: source.into(),
            ordinal,
        }
    }
}

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.ordinal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKind {
    /// The clause weight.
    Weight,
    /// Offset of the conjunction applied by the clause's rule neurons.
    ConjOffset,
    /// Offset of the disjunction applied by atom neurons of the clause's head predicate.
    DisjOffset,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId {
    pub clause: ClauseId,
    pub kind: ParamKind,
}

impl ParamId {
    pub fn weight(clause: ClauseId) -> Self {
        Self {
            clause,
            kind: ParamKind::Weight,
        }
    }

    pub fn conj_offset(clause: ClauseId) -> Self {
        Self {
            clause,
            kind: ParamKind::ConjOffset,
        }
    }

    pub fn disj_offset(clause: ClauseId) -> Self {
        Self {
            clause,
            kind: ParamKind::DisjOffset,
        }
    }

    pub fn is_offset(&self) -> bool {
        self.kind != ParamKind::Weight
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ParamKind::Weight => write!(f, "{}", self.clause),
            ParamKind::ConjOffset => write!(f, "{}:conj", self.clause),
            ParamKind::DisjOffset => write!(f, "{}:disj", self.clause),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid parameter id `{0}`")]
pub struct ParamIdError(pub String);

impl FromStr for ParamId {
    type Err = ParamIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParamIdError(s.to_string());
        let mut parts: Vec<&str> = s.split(':').collect();
        let kind = match parts.last().copied() {
            Some("conj") => ParamKind::ConjOffset,
            Some("disj") => ParamKind::DisjOffset,
            _ => ParamKind::Weight,
        };
        if kind != ParamKind::Weight {
            parts.pop();
        }
        if parts.len() != 2 || parts[0].is_empty() {
            return Err(err());
        }
        let ordinal = parts[1].parse::<u32>().map_err(|_| err())?;
        Ok(ParamId {
            clause: ClauseId::new(parts[0], ordinal),
            kind,
        })
    }
}

/// Dense index into a [`ParameterStore`].
pub type ParamIndex = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ParamFileError {
    #[error("line {line}: expected `param <id> = <value>`")]
    Syntax { line: usize },
    #[error("line {line}: {source}")]
    BadId { line: usize, source: ParamIdError },
    #[error("line {line}: unknown parameter `{id}`")]
    Unknown { line: usize, id: String },
    #[error("line {line}: value is not a finite number")]
    BadValue { line: usize },
}

/// Ordered parameter store. Insertion order is the template's clause order
/// and is preserved by every operation, so dense indices are stable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    ids: Vec<ParamId>,
    values: Vec<f64>,
    learnable: Vec<bool>,
    index: HashMap<ParamId, ParamIndex>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a parameter, or overwrites the value of an existing one.
    pub fn insert(&mut self, id: ParamId, value: f64, learnable: bool) -> ParamIndex {
        if let Some(&i) = self.index.get(&id) {
            self.values[i] = value;
            self.learnable[i] = learnable;
            return i;
        }
        let i = self.ids.len();
        self.index.insert(id.clone(), i);
        self.ids.push(id);
        self.values.push(value);
        self.learnable.push(learnable);
        i
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &ParamId) -> Option<ParamIndex> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &ParamId) -> Option<f64> {
        self.index_of(id).map(|i| self.values[i])
    }

    pub fn id(&self, index: ParamIndex) -> &ParamId {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[ParamId] {
        &self.ids
    }

    pub fn value(&self, index: ParamIndex) -> f64 {
        self.values[index]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn set(&mut self, id: &ParamId, value: f64) -> bool {
        match self.index_of(id) {
            Some(i) => {
                self.values[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn is_learnable(&self, index: ParamIndex) -> bool {
        self.learnable[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamId, f64)> {
        self.ids.iter().zip(self.values.iter().copied())
    }

    /// Renders the parameter-file format: one `param <id> = <value>` line per
    /// parameter, in store order. Values use the shortest representation that
    /// parses back to the identical `f64`.
    pub fn to_param_file(&self) -> String {
        let mut out = String::new();
        for (id, value) in self.iter() {
            out.push_str(&format!("param {id} = {value}\n"));
        }
        out
    }

    /// Overwrites values from a parameter file. Every id in the file must
    /// already exist in the store; ids missing from the file keep their value.
    pub fn load_param_file(&mut self, text: &str) -> Result<usize, ParamFileError> {
        let mut loaded = 0;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('%').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let rest = body
                .strip_prefix("param")
                .filter(|r| r.starts_with(char::is_whitespace))
                .ok_or(ParamFileError::Syntax { line })?;
            let (id, value) = rest
                .split_once('=')
                .ok_or(ParamFileError::Syntax { line })?;
            let id: ParamId = id
                .trim()
                .parse()
                .map_err(|source| ParamFileError::BadId { line, source })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| ParamFileError::BadValue { line })?;
            if !value.is_finite() {
                return Err(ParamFileError::BadValue { line });
            }
            if !self.set(&id, value) {
                return Err(ParamFileError::Unknown {
                    line,
                    id: id.to_string(),
                });
            }
            loaded += 1;
        }
        Ok(loaded)
    }
}
