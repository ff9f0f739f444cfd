use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{Predicate, Template, WeightedClause};

/// Strict predicate order: every rule's head predicate precedes each of its
/// body predicates. Ties are broken by predicate name then arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateOrdering {
    order: Vec<Predicate>,
    rank: BTreeMap<Predicate, usize>,
}

impl PredicateOrdering {
    /// Predicates head-first.
    pub fn predicates(&self) -> &[Predicate] {
        &self.order
    }

    pub fn rank(&self, p: &Predicate) -> Option<usize> {
        self.rank.get(p).copied()
    }

    /// True iff `a` strictly precedes `b`.
    pub fn precedes(&self, a: &Predicate, b: &Predicate) -> bool {
        matches!((self.rank(a), self.rank(b)), (Some(x), Some(y)) if x < y)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub struct RecursionError {
    /// One cycle of the dependency graph, starting from its least predicate.
    pub cycle: Vec<Predicate>,
}

impl fmt::Display for RecursionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("recursive template, predicate cycle: ")?;
        for (i, p) in self.cycle.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(first) = self.cycle.first() {
            write!(f, " -> {first}")?;
        }
        Ok(())
    }
}

pub fn check_nonrecursive(t: &Template) -> Result<PredicateOrdering, RecursionError> {
    predicate_ordering(&t.clauses, std::iter::empty())
}

/// Orders the predicates of `clauses` plus `extra` (e.g. predicates that only
/// occur in example facts). Deterministic: Kahn's algorithm with an ordered
/// ready set.
pub fn predicate_ordering<'a>(
    clauses: impl IntoIterator<Item = &'a WeightedClause>,
    extra: impl IntoIterator<Item = Predicate>,
) -> Result<PredicateOrdering, RecursionError> {
    let mut edges: BTreeMap<Predicate, BTreeSet<Predicate>> = BTreeMap::new();
    for c in clauses {
        edges.entry(c.head.predicate.clone()).or_default();
        for b in &c.body {
            edges.entry(b.predicate.clone()).or_default();
            edges
                .get_mut(&c.head.predicate)
                .expect("inserted above")
                .insert(b.predicate.clone());
        }
    }
    for p in extra {
        edges.entry(p).or_default();
    }

    let mut indegree: BTreeMap<&Predicate, usize> = edges.keys().map(|p| (p, 0)).collect();
    for succ in edges.values() {
        for s in succ {
            *indegree.get_mut(s).expect("all nodes registered") += 1;
        }
    }
    let mut ready: BTreeSet<&Predicate> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(p, _)| *p)
        .collect();
    let mut order = Vec::with_capacity(edges.len());
    while let Some(p) = ready.pop_first() {
        order.push(p.clone());
        for s in &edges[p] {
            let d = indegree.get_mut(s).expect("registered");
            *d -= 1;
            if *d == 0 {
                ready.insert(s);
            }
        }
    }

    if order.len() < edges.len() {
        let remaining: BTreeSet<&Predicate> = indegree
            .iter()
            .filter(|(_, &d)| d > 0)
            .map(|(p, _)| *p)
            .collect();
        return Err(RecursionError {
            cycle: find_cycle(&edges, &remaining),
        });
    }

    let rank = order
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    Ok(PredicateOrdering { order, rank })
}

/// Depth-first search restricted to the nodes Kahn's algorithm left over,
/// which always contain a cycle.
fn find_cycle(
    edges: &BTreeMap<Predicate, BTreeSet<Predicate>>,
    remaining: &BTreeSet<&Predicate>,
) -> Vec<Predicate> {
    let start = *remaining
        .iter()
        .next()
        .expect("non-empty when a cycle exists");
    let mut path: Vec<&Predicate> = vec![start];
    let mut seen: BTreeMap<&Predicate, usize> = BTreeMap::from([(start, 0)]);
    let mut dead: BTreeSet<&Predicate> = BTreeSet::new();
    loop {
        let cur = *path.last().expect("path never empty");
        let next = edges[cur]
            .iter()
            .find(|s| remaining.contains(s) && !dead.contains(s));
        match next {
            Some(n) => {
                if let Some(&i) = seen.get(n) {
                    let mut cycle: Vec<Predicate> =
                        path[i..].iter().map(|p| (*p).clone()).collect();
                    let min = cycle
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.cmp(b.1))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    cycle.rotate_left(min);
                    return cycle;
                }
                seen.insert(n, path.len());
                path.push(n);
            }
            None => {
                dead.insert(cur);
                seen.remove(cur);
                path.pop();
                if path.is_empty() {
                    let alt = remaining
                        .iter()
                        .find(|p| !dead.contains(*p))
                        .expect("a cycle exists among leftovers");
                    seen.insert(alt, 0);
                    path.push(alt);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_template;

    fn preds(names: &[(&str, usize)]) -> Vec<Predicate> {
        names.iter().map(|(n, a)| Predicate::new(n, *a)).collect()
    }

    #[test]
    fn family_example_ordering() {
        let t = parse_template(
            "1 :: mother(C,M) :- parent(C,M), female(M).\n\
             2 :: father(C,F) :- parent(C,F), male(F).",
        )
        .unwrap();
        let o = check_nonrecursive(&t).unwrap();
        let mother = Predicate::new("mother", 2);
        let father = Predicate::new("father", 2);
        let parent = Predicate::new("parent", 2);
        assert!(o.precedes(&mother, &parent));
        assert!(o.precedes(&mother, &Predicate::new("female", 1)));
        assert!(o.precedes(&father, &parent));
        assert!(o.precedes(&father, &Predicate::new("male", 1)));
        assert_eq!(o.predicates().len(), 5);
    }

    #[test]
    fn self_loop() {
        let t = parse_template("1 :: p(X) :- p(X).").unwrap();
        assert_eq!(
            check_nonrecursive(&t).unwrap_err().cycle,
            preds(&[("p", 1)])
        );
    }

    #[test]
    fn two_cycle() {
        let t = parse_template("1 :: p(X) :- q(X).\n1 :: q(X) :- p(X).").unwrap();
        assert_eq!(
            check_nonrecursive(&t).unwrap_err().cycle,
            preds(&[("p", 1), ("q", 1)])
        );
    }

    #[test]
    fn cycle_behind_an_acyclic_prefix() {
        // a -> b -> c -> b, plus a -> d
        let t = parse_template("1 :: a :- b, d.\n1 :: b :- c.\n1 :: c :- b.").unwrap();
        let err = check_nonrecursive(&t).unwrap_err();
        assert_eq!(err.cycle, preds(&[("b", 0), ("c", 0)]));
        assert_eq!(
            err.to_string(),
            "recursive template, predicate cycle: b/0 -> c/0 -> b/0"
        );
    }

    #[test]
    fn arity_distinguishes_predicates() {
        let t = parse_template("1 :: p(X) :- p(X, X).").unwrap();
        assert!(check_nonrecursive(&t).is_ok());
    }
}
