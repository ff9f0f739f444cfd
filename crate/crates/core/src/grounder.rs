//! Least Herbrand model by semi-naive bottom-up evaluation, and the grounding
//! of a template: every rule instance whose body holds in the model.
//!
//! The Herbrand universe is the set of constants of template plus example.
//! Head variables that do not occur in the body range over the whole
//! universe, as do the variables of non-ground template facts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::dataset::Example;
use crate::logic::{
    predicate_ordering, Atom, Predicate, PredicateOrdering, RecursionError, Substitution, Symbol,
    Template, Term, WeightedClause,
};
use crate::params::{ClauseId, ParamId};

pub type Tuple = Vec<Symbol>;

/// Environment variable that overrides [`GroundConfig::capacity`] in the CLI.
pub const CAPACITY_ENV: &str = "LRNN_CAPACITY";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundConfig {
    /// Upper bound on ground atoms in the model and on ground rule instances.
    pub capacity: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        Self {
            capacity: 10_000_000,
        }
    }
}

impl GroundConfig {
    /// Default config, with the capacity taken from `LRNN_CAPACITY` when set.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(CAPACITY_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(|capacity| Self { capacity })
                .map_err(|_| format!("{CAPACITY_ENV} must be a non-negative integer, got `{v}`")),
            Err(_) => Ok(Self::default()),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GroundError {
    #[error("grounding exceeded the capacity of {limit} {what}")]
    Capacity { limit: usize, what: &'static str },
    #[error(transparent)]
    Recursion(#[from] RecursionError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HerbrandModel {
    relations: BTreeMap<Predicate, BTreeSet<Tuple>>,
    universe: BTreeSet<Symbol>,
}

impl HerbrandModel {
    pub fn universe(&self) -> &BTreeSet<Symbol> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        let Some(rel) = self.relations.get(&atom.predicate) else {
            return false;
        };
        let mut tuple = Vec::with_capacity(atom.args.len());
        for t in &atom.args {
            match t {
                Term::Const(c) => tuple.push(c.clone()),
                Term::Var(_) => return false,
            }
        }
        rel.contains(&tuple)
    }

    pub fn relation(&self, p: &Predicate) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(p)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.relations.keys()
    }

    /// All atoms, ordered by predicate then arguments.
    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.relations.iter().flat_map(|(p, rel)| {
            rel.iter().map(move |t| Atom {
                predicate: p.clone(),
                args: t.iter().map(|c| Term::Const(c.clone())).collect(),
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Slot {
    Var(usize),
    Const(Symbol),
}

#[derive(Clone, Debug)]
struct CompiledAtom {
    predicate: Predicate,
    slots: Vec<Slot>,
}

impl CompiledAtom {
    fn new(atom: &Atom, vars: &[Symbol]) -> Self {
        let slots = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Slot::Const(c.clone()),
                Term::Var(v) => Slot::Var(vars.iter().position(|x| x == v).expect("clause var")),
            })
            .collect();
        Self {
            predicate: atom.predicate.clone(),
            slots,
        }
    }

    fn instantiate(&self, binding: &[Symbol]) -> Tuple {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::Const(c) => c.clone(),
                Slot::Var(i) => binding[*i].clone(),
            })
            .collect()
    }
}

/// A clause with variables numbered by first occurrence (head first).
struct CompiledClause {
    vars: Vec<Symbol>,
    head: CompiledAtom,
    body: Vec<CompiledAtom>,
    head_only: Vec<usize>,
}

impl CompiledClause {
    fn new(c: &WeightedClause) -> Self {
        let vars = c.variables();
        let head_only = c
            .head_only_variables()
            .iter()
            .map(|v| vars.iter().position(|x| x == v).expect("clause var"))
            .collect();
        Self {
            head: CompiledAtom::new(&c.head, &vars),
            body: c.body.iter().map(|b| CompiledAtom::new(b, &vars)).collect(),
            head_only,
            vars,
        }
    }

    /// Enumerates complete bindings: body matches from `pick`, then head-only
    /// variables over `universe`.
    fn for_each_binding<'r>(
        &self,
        pick: &dyn Fn(usize) -> Option<&'r [Tuple]>,
        universe: &[Symbol],
        emit: &mut dyn FnMut(&[Symbol]),
    ) {
        let mut partial: Vec<Option<Symbol>> = vec![None; self.vars.len()];
        self.join(0, pick, &mut partial, &mut |partial| {
            let mut full: Vec<Symbol> = partial
                .iter()
                .map(|s| s.clone().unwrap_or_else(|| Symbol::from("")))
                .collect();
            expand(&self.head_only, 0, universe, &mut full, emit);
        });
    }

    fn join<'r>(
        &self,
        depth: usize,
        pick: &dyn Fn(usize) -> Option<&'r [Tuple]>,
        binding: &mut Vec<Option<Symbol>>,
        emit: &mut dyn FnMut(&[Option<Symbol>]),
    ) {
        if depth == self.body.len() {
            emit(binding);
            return;
        }
        let Some(rel) = pick(depth) else { return };
        let atom = &self.body[depth];
        let mut newly: Vec<usize> = Vec::with_capacity(atom.slots.len());
        for tuple in rel {
            let mut ok = true;
            for (slot, val) in atom.slots.iter().zip(tuple) {
                match slot {
                    Slot::Const(c) => {
                        if c != val {
                            ok = false;
                            break;
                        }
                    }
                    Slot::Var(i) => match &binding[*i] {
                        Some(b) => {
                            if b != val {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            binding[*i] = Some(val.clone());
                            newly.push(*i);
                        }
                    },
                }
            }
            if ok {
                self.join(depth + 1, pick, binding, emit);
            }
            for i in newly.drain(..) {
                binding[i] = None;
            }
        }
    }
}

fn expand(
    slots: &[usize],
    at: usize,
    universe: &[Symbol],
    binding: &mut Vec<Symbol>,
    emit: &mut dyn FnMut(&[Symbol]),
) {
    if at == slots.len() {
        emit(binding);
        return;
    }
    for c in universe {
        binding[slots[at]] = c.clone();
        expand(slots, at + 1, universe, binding, emit);
    }
}

fn universe_of(template: &Template, example: &Example) -> BTreeSet<Symbol> {
    let mut u = template.constants();
    u.extend(example.constants().cloned());
    u
}

/// Ground instances of a fact clause: itself when ground, otherwise every
/// assignment of its variables over the universe, in lexicographic order.
fn fact_instances(clause: &WeightedClause, universe: &[Symbol]) -> Vec<Atom> {
    let compiled = CompiledClause::new(clause);
    let mut out = Vec::new();
    let all: Vec<usize> = (0..compiled.vars.len()).collect();
    let mut binding = vec![Symbol::from(""); compiled.vars.len()];
    expand(&all, 0, universe, &mut binding, &mut |b| {
        out.push(Atom {
            predicate: clause.head.predicate.clone(),
            args: compiled
                .head
                .instantiate(b)
                .into_iter()
                .map(Term::Const)
                .collect(),
        });
    });
    out
}

fn tuple_of(atom: &Atom) -> Tuple {
    atom.args
        .iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => panic!("non-ground atom with variable {v} in fact position"),
        })
        .collect()
}

#[derive(Default)]
struct Relation {
    tuples: Vec<Tuple>,
    set: HashSet<Tuple>,
}

impl Relation {
    fn insert(&mut self, t: Tuple) -> bool {
        if self.set.insert(t.clone()) {
            self.tuples.push(t);
            true
        } else {
            false
        }
    }
}

fn add_tuple(
    total: &mut HashMap<Predicate, Relation>,
    delta: &mut HashMap<Predicate, Vec<Tuple>>,
    p: &Predicate,
    t: Tuple,
) -> bool {
    let added = total.entry(p.clone()).or_default().insert(t.clone());
    if added {
        delta.entry(p.clone()).or_default().push(t);
    }
    added
}

/// Least Herbrand model of the template's clauses (weights ignored) together
/// with the example's facts, by semi-naive iteration of the
/// immediate-consequence operator.
pub fn least_herbrand_model(
    template: &Template,
    example: &Example,
    config: &GroundConfig,
) -> Result<HerbrandModel, GroundError> {
    let universe_set = universe_of(template, example);
    let universe: Vec<Symbol> = universe_set.iter().cloned().collect();
    let capacity_err = || GroundError::Capacity {
        limit: config.capacity,
        what: "ground atoms",
    };

    let mut total: HashMap<Predicate, Relation> = HashMap::new();
    let mut delta: HashMap<Predicate, Vec<Tuple>> = HashMap::new();
    let mut count = 0usize;

    let initial = template
        .facts()
        .flat_map(|f| fact_instances(f, &universe))
        .chain(example.facts.iter().map(|(a, _)| a.clone()));
    for atom in initial {
        count += add_tuple(&mut total, &mut delta, &atom.predicate, tuple_of(&atom)) as usize;
        if count > config.capacity {
            return Err(capacity_err());
        }
    }

    let rules: Vec<CompiledClause> = template.rules().map(CompiledClause::new).collect();
    while !delta.is_empty() {
        let mut fresh: HashMap<Predicate, Relation> = HashMap::new();
        let mut fresh_count = 0usize;
        for rule in &rules {
            for (i, atom) in rule.body.iter().enumerate() {
                let Some(d) = delta.get(&atom.predicate) else {
                    continue;
                };
                let pick = |j: usize| -> Option<&[Tuple]> {
                    if j == i {
                        Some(d.as_slice())
                    } else {
                        total
                            .get(&rule.body[j].predicate)
                            .map(|r| r.tuples.as_slice())
                    }
                };
                let head_rel = total.get(&rule.head.predicate);
                rule.for_each_binding(&pick, &universe, &mut |b| {
                    let t = rule.head.instantiate(b);
                    if head_rel.is_some_and(|r| r.set.contains(&t)) {
                        return;
                    }
                    if fresh
                        .entry(rule.head.predicate.clone())
                        .or_default()
                        .insert(t)
                    {
                        fresh_count += 1;
                    }
                });
                if count + fresh_count > config.capacity {
                    return Err(capacity_err());
                }
            }
        }
        delta.clear();
        // Deterministic merge order keeps `total`'s tuple vectors reproducible.
        let mut preds: Vec<Predicate> = fresh.keys().cloned().collect();
        preds.sort();
        for p in preds {
            let rel = fresh.remove(&p).expect("key listed");
            for t in rel.tuples {
                count += add_tuple(&mut total, &mut delta, &p, t) as usize;
            }
        }
    }

    let relations = total
        .into_iter()
        .filter(|(_, r)| !r.tuples.is_empty())
        .map(|(p, r)| (p, r.tuples.into_iter().collect()))
        .collect();
    Ok(HerbrandModel {
        relations,
        universe: universe_set,
    })
}

/// One active ground instance of a template rule.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundRuleInstance {
    pub clause: ClauseId,
    /// Position of the source clause in `Template::clauses`.
    pub clause_index: usize,
    pub theta: Substitution,
    pub head: Atom,
    pub body: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FactWeight {
    /// Template fact: its weight is a shared parameter.
    Param(ParamId),
    /// Example fact: the weight is part of the example data.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundFact {
    pub atom: Atom,
    pub weight: FactWeight,
}

/// The grounding of a template w.r.t. one example.
#[derive(Clone, Debug, PartialEq)]
pub struct Grounding {
    pub example_id: String,
    pub model: HerbrandModel,
    /// Ordered by clause, then lexicographically by the substitution's values
    /// in variable first-occurrence order.
    pub instances: Vec<GroundRuleInstance>,
    /// Template facts first (clause order), then example facts (file order).
    pub facts: Vec<GroundFact>,
    pub ordering: PredicateOrdering,
}

/// Grounds `template` against `example`.
pub fn ground(
    template: &Template,
    example: &Example,
    config: &GroundConfig,
) -> Result<Grounding, GroundError> {
    let ordering = predicate_ordering(
        &template.clauses,
        example.facts.iter().map(|(a, _)| a.predicate.clone()),
    )?;
    let model = least_herbrand_model(template, example, config)?;
    let universe: Vec<Symbol> = model.universe.iter().cloned().collect();
    let relations: HashMap<&Predicate, Vec<Tuple>> = model
        .relations
        .iter()
        .map(|(p, r)| (p, r.iter().cloned().collect()))
        .collect();

    let mut instances = Vec::new();
    for (index, clause) in template.clauses.iter().enumerate() {
        if clause.is_fact() {
            continue;
        }
        let compiled = CompiledClause::new(clause);
        let pick = |j: usize| {
            relations
                .get(&compiled.body[j].predicate)
                .map(Vec::as_slice)
        };
        let mut thetas: BTreeSet<Vec<Symbol>> = BTreeSet::new();
        let mut overflow = false;
        compiled.for_each_binding(&pick, &universe, &mut |b| {
            if instances.len() + thetas.len() >= config.capacity {
                overflow = true;
                return;
            }
            thetas.insert(b.to_vec());
        });
        if overflow {
            return Err(GroundError::Capacity {
                limit: config.capacity,
                what: "ground rule instances",
            });
        }
        for values in thetas {
            let theta: Substitution = compiled.vars.iter().cloned().zip(values).collect();
            instances.push(GroundRuleInstance {
                clause: clause.id.clone(),
                clause_index: index,
                head: theta.apply(&clause.head),
                body: clause.body.iter().map(|b| theta.apply(b)).collect(),
                theta,
            });
        }
    }

    let mut facts = Vec::new();
    for clause in template.facts() {
        for atom in fact_instances(clause, &universe) {
            facts.push(GroundFact {
                atom,
                weight: FactWeight::Param(ParamId::weight(clause.id.clone())),
            });
        }
    }
    for (atom, w) in &example.facts {
        facts.push(GroundFact {
            atom: atom.clone(),
            weight: FactWeight::Fixed(*w),
        });
    }

    Ok(Grounding {
        example_id: example.id.clone(),
        model,
        instances,
        facts,
        ordering,
    })
}
