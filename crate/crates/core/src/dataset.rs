//! Example-set and query files, and cross-validation fold plans.
//!
//! Both file kinds reuse the clause grammar with `#example <id>` section
//! headers. An example section lists weighted ground facts:
//!
//! ```text
//! #example m1
//! 1.0 :: o(o1).
//! 1.0 :: bond(o1,h1).
//! ```
//!
//! A query section lists ground atoms whose weight is the target value in
//! `[0, 1]`:
//!
//! ```text
//! #example m1
//! 1 :: explosive.
//! ```

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::{parse_statements, Atom, ParseError, Statement, StatementWeight, Symbol};

/// One example: an identifier and its weighted ground facts.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub facts: Vec<(Atom, f64)>,
}

impl Example {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            facts: Vec::new(),
        }
    }

    pub fn with_fact(mut self, atom: Atom, weight: f64) -> Self {
        self.facts.push((atom, weight));
        self
    }

    pub fn constants(&self) -> impl Iterator<Item = &Symbol> {
        self.facts.iter().flat_map(|(a, _)| a.constants())
    }
}

/// A training query atom with its target value.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub example_id: String,
    pub atom: Atom,
    pub target: f64,
}

struct Section {
    name: String,
    line: usize,
    column: usize,
    rows: Vec<(Atom, f64)>,
}

fn sections(text: &str, what: &str) -> Result<Vec<Section>, ParseError> {
    let mut out: Vec<Section> = Vec::new();
    let mut seen = HashSet::new();
    for st in parse_statements(text)? {
        match st {
            Statement::Section { name, line, column } => {
                if !seen.insert(name.clone()) {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("duplicate example id `{name}`"),
                    ));
                }
                out.push(Section {
                    name,
                    line,
                    column,
                    rows: Vec::new(),
                });
            }
            Statement::Clause {
                weight,
                head,
                body,
                line,
                column,
            } => {
                let section = out.last_mut().ok_or_else(|| {
                    ParseError::new(
                        line,
                        column,
                        format!("{what} before the first `#example` header"),
                    )
                })?;
                if !body.is_empty() {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("{what} must not have a body"),
                    ));
                }
                if !head.is_ground() {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("{what} must be ground"),
                    ));
                }
                let StatementWeight::Value(w) = weight else {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("{what} needs a numeric weight"),
                    ));
                };
                section.rows.push((head, w));
            }
        }
    }
    Ok(out)
}

/// Parses an example-set file.
pub fn parse_examples(text: &str) -> Result<Vec<Example>, ParseError> {
    Ok(sections(text, "example fact")?
        .into_iter()
        .map(|s| Example {
            id: s.name,
            facts: s.rows,
        })
        .collect())
}

/// Parses a query file. Targets must lie in `[0, 1]`. Sections may be empty.
pub fn parse_queries(text: &str) -> Result<Vec<Query>, ParseError> {
    let mut out = Vec::new();
    for s in sections(text, "query")? {
        for (atom, target) in s.rows {
            if !(0.0..=1.0).contains(&target) {
                return Err(ParseError::new(
                    s.line,
                    s.column,
                    format!(
                        "target {target} of `{atom}` in example `{}` is outside [0, 1]",
                        s.name
                    ),
                ));
            }
            out.push(Query {
                example_id: s.name.clone(),
                atom,
                target,
            });
        }
    }
    Ok(out)
}

pub fn render_examples(examples: &[Example]) -> String {
    let mut out = String::new();
    for e in examples {
        out.push_str(&format!("#example {}\n", e.id));
        for (a, w) in &e.facts {
            out.push_str(&format!("{w} :: {a}.\n"));
        }
    }
    out
}

pub fn render_queries(queries: &[Query]) -> String {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for q in queries {
        if current != Some(q.example_id.as_str()) {
            out.push_str(&format!("#example {}\n", q.example_id));
            current = Some(&q.example_id);
        }
        out.push_str(&format!("{} :: {}.\n", q.target, q.atom));
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum FoldError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{folds} folds but only {examples} examples")]
    TooFewExamples { folds: usize, examples: usize },
}

/// Assignment of examples to `k` folds. Examples are shuffled with the seed
/// and dealt round-robin, so fold sizes differ by at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn new(example_ids: &[String], k: usize, seed: u64) -> Result<Self, FoldError> {
        if k < 2 {
            return Err(FoldError::TooFewFolds(k));
        }
        if example_ids.len() < k {
            return Err(FoldError::TooFewExamples {
                folds: k,
                examples: example_ids.len(),
            });
        }
        let mut ids = example_ids.to_vec();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let assignment = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, i % k))
            .collect();
        Ok(Self {
            k,
            assignment,
            seed,
        })
    }

    /// Example ids of each fold, in the order given to [`FoldPlan::new`].
    pub fn folds(&self, example_ids: &[String]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for id in example_ids {
            if let Some(&f) = self.assignment.get(id) {
                out[f].push(id.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_file() {
        let ex = parse_examples(
            "% molecules\n#example m1\n1.0 :: h(h1).\n1 :: bond(h1,h2).\n#example m2\n#example m3\n0.5 :: o(o1).\n",
        )
        .unwrap();
        assert_eq!(ex.len(), 3);
        assert_eq!(ex[0].facts[1], (Atom::ground("bond", &["h1", "h2"]), 1.0));
        assert!(ex[1].facts.is_empty());
        assert_eq!(parse_examples(&render_examples(&ex)).unwrap(), ex);
        assert!(parse_examples("").unwrap().is_empty());
    }

    #[test]
    fn example_file_errors() {
        let e = parse_examples("1 :: p(a).").unwrap_err();
        assert!(e.message.contains("before the first"));
        let e = parse_examples("#example a\n1 :: p(X).").unwrap_err();
        assert_eq!((e.line, e.message.contains("ground")), (2, true));
        let e = parse_examples("#example a\n? :: p(a).").unwrap_err();
        assert!(e.message.contains("numeric"));
        let e = parse_examples("#example a\n1 :: p(a) :- q(a).").unwrap_err();
        assert!(e.message.contains("body"));
        let e = parse_examples("#example a\n#example a\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn query_file() {
        let q =
            parse_queries("#example m1\n1 :: explosive.\n#example m2\n0 :: explosive.\n").unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q[1].example_id, "m2");
        assert_eq!(q[1].target, 0.0);
        assert_eq!(parse_queries(&render_queries(&q)).unwrap(), q);
        assert!(parse_queries("#example m1\n1.5 :: explosive.\n").is_err());
    }

    #[test]
    fn folds_partition_with_balanced_sizes() {
        let ids: Vec<String> = (0..23).map(|i| format!("e{i}")).collect();
        for k in [2, 5, 23] {
            let plan = FoldPlan::new(&ids, k, 9).unwrap();
            let folds = plan.folds(&ids);
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            assert_eq!(sizes.iter().sum::<usize>(), ids.len());
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "{sizes:?}");
            let mut all: Vec<String> = folds.concat();
            all.sort();
            let mut expected = ids.clone();
            expected.sort();
            assert_eq!(all, expected);
        }
        // leave-one-out
        let loo = FoldPlan::new(&ids, ids.len(), 1).unwrap();
        assert!(loo.folds(&ids).iter().all(|f| f.len() == 1));
        assert_eq!(FoldPlan::new(&ids, 1, 0), Err(FoldError::TooFewFolds(1)));
        assert!(FoldPlan::new(&ids[..3], 4, 0).is_err());
        assert_eq!(FoldPlan::new(&ids, 5, 3), FoldPlan::new(&ids, 5, 3));
    }
}
