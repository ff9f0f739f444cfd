//! Compilation of a grounding into a ground neural network, forward
//! evaluation, and DOT / CSV export.
//!
//! Neuron kinds:
//! - fact neurons output the constant 1.0; the fact weight sits on the edge
//!   into the atom neuron;
//! - rule neurons apply g∧ to the atom neurons of one ground body;
//! - aggregation neurons apply g∧* to all rule neurons of one clause that
//!   share a ground head;
//! - atom neurons apply g∨ to their weighted aggregation and fact inputs.
//!   Atoms fed by facts only output the weighted sum of those facts directly.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::activations::{ActivationEval, ActivationFamily};
use crate::grounder::{FactWeight, GroundRuleInstance, Grounding};
use crate::logic::{Atom, Predicate, Template};
use crate::params::{ClauseId, ParamId, ParamIndex, ParameterStore};

pub type NeuronId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeuronKind {
    Atom,
    Fact,
    Rule,
    Aggregation,
}

impl NeuronKind {
    pub fn name(self) -> &'static str {
        match self {
            NeuronKind::Atom => "atom",
            NeuronKind::Fact => "fact",
            NeuronKind::Rule => "rule",
            NeuronKind::Aggregation => "aggregation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeWeight {
    Unit,
    Shared(ParamIndex),
    Fixed(f64),
}

impl EdgeWeight {
    pub fn value(&self, params: &ParameterStore) -> f64 {
        match *self {
            EdgeWeight::Unit => 1.0,
            EdgeWeight::Shared(i) => params.value(i),
            EdgeWeight::Fixed(w) => w,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub source: NeuronId,
    pub weight: EdgeWeight,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NeuronLabel {
    Atom(Atom),
    Fact(Atom),
    Rule(GroundRuleInstance),
    Aggregation { clause: ClauseId, head: Atom },
}

impl std::fmt::Display for NeuronLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NeuronLabel::Atom(a) | NeuronLabel::Fact(a) => write!(f, "{a}"),
            NeuronLabel::Rule(r) => {
                write!(f, "{} :- ", r.head)?;
                for (i, b) in r.body.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{b}")?;
                }
                Ok(())
            }
            NeuronLabel::Aggregation { clause, head } => write!(f, "agg[{clause}] {head}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neuron {
    pub id: NeuronId,
    pub kind: NeuronKind,
    pub label: NeuronLabel,
    pub inputs: Vec<Edge>,
    /// Conjunction offset of a rule neuron or disjunction offset of an atom
    /// neuron with aggregation inputs.
    pub offset: Option<ParamIndex>,
    /// Atom neuron whose inputs are all fact neurons.
    pub fact_only: bool,
}

/// A ground network in topological order: every edge points from a lower to
/// a higher neuron id.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundNetwork {
    pub example_id: String,
    pub neurons: Vec<Neuron>,
    pub outputs: BTreeMap<Atom, NeuronId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NeuronCounts {
    pub atoms: usize,
    pub facts: usize,
    pub rules: usize,
    pub aggregations: usize,
}

impl GroundNetwork {
    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn atom_neuron(&self, atom: &Atom) -> Option<NeuronId> {
        self.outputs.get(atom).copied()
    }

    pub fn counts(&self) -> NeuronCounts {
        let mut c = NeuronCounts::default();
        for n in &self.neurons {
            match n.kind {
                NeuronKind::Atom => c.atoms += 1,
                NeuronKind::Fact => c.facts += 1,
                NeuronKind::Rule => c.rules += 1,
                NeuronKind::Aggregation => c.aggregations += 1,
            }
        }
        c
    }

    pub fn edge_count(&self) -> usize {
        self.neurons.iter().map(|n| n.inputs.len()).sum()
    }
}

fn param_index(store: &ParameterStore, id: &ParamId) -> ParamIndex {
    store
        .index_of(id)
        .unwrap_or_else(|| panic!("parameter {id} missing from template store"))
}

/// Compiles a grounding into a ground network.
///
/// Neurons are emitted predicate by predicate, body predicates before the
/// heads that use them; within a predicate: fact neurons, then per clause its
/// rule and aggregation neurons, then the atom neurons.
pub fn build(grounding: &Grounding, template: &Template) -> GroundNetwork {
    let store = &template.params;
    let mut neurons: Vec<Neuron> = Vec::new();
    let mut outputs: BTreeMap<Atom, NeuronId> = BTreeMap::new();

    let mut facts_by_pred: HashMap<&Predicate, Vec<usize>> = HashMap::new();
    for (i, f) in grounding.facts.iter().enumerate() {
        facts_by_pred.entry(&f.atom.predicate).or_default().push(i);
    }
    let mut instances_by_clause: BTreeMap<usize, Vec<&GroundRuleInstance>> = BTreeMap::new();
    for inst in &grounding.instances {
        instances_by_clause
            .entry(inst.clause_index)
            .or_default()
            .push(inst);
    }

    let push = |neurons: &mut Vec<Neuron>, kind, label, inputs, offset, fact_only| {
        let id = neurons.len();
        neurons.push(Neuron {
            id,
            kind,
            label,
            inputs,
            offset,
            fact_only,
        });
        id
    };

    for pred in grounding.ordering.predicates().iter().rev() {
        // atom -> incoming (aggregation) edges, in clause order
        let mut atom_inputs: BTreeMap<Atom, Vec<Edge>> = BTreeMap::new();
        let mut fact_edges: BTreeMap<Atom, Vec<Edge>> = BTreeMap::new();

        for &fi in facts_by_pred.get(pred).map(Vec::as_slice).unwrap_or(&[]) {
            let fact = &grounding.facts[fi];
            let id = push(
                &mut neurons,
                NeuronKind::Fact,
                NeuronLabel::Fact(fact.atom.clone()),
                Vec::new(),
                None,
                false,
            );
            let weight = match &fact.weight {
                FactWeight::Param(p) => EdgeWeight::Shared(param_index(store, p)),
                FactWeight::Fixed(w) => EdgeWeight::Fixed(*w),
            };
            fact_edges
                .entry(fact.atom.clone())
                .or_default()
                .push(Edge { source: id, weight });
        }

        for (ci, clause) in template.clauses.iter().enumerate() {
            if clause.is_fact() || &clause.head.predicate != pred {
                continue;
            }
            let Some(instances) = instances_by_clause.get(&ci) else {
                continue;
            };
            let conj = param_index(store, &ParamId::conj_offset(clause.id.clone()));
            let mut by_head: BTreeMap<&Atom, Vec<NeuronId>> = BTreeMap::new();
            for inst in instances {
                let inputs = inst
                    .body
                    .iter()
                    .map(|b| Edge {
                        source: *outputs
                            .get(b)
                            .unwrap_or_else(|| panic!("body atom {b} has no neuron yet")),
                        weight: EdgeWeight::Unit,
                    })
                    .collect();
                let id = push(
                    &mut neurons,
                    NeuronKind::Rule,
                    NeuronLabel::Rule((*inst).clone()),
                    inputs,
                    Some(conj),
                    false,
                );
                by_head.entry(&inst.head).or_default().push(id);
            }
            let weight =
                EdgeWeight::Shared(param_index(store, &ParamId::weight(clause.id.clone())));
            for (head, rules) in by_head {
                let inputs = rules
                    .into_iter()
                    .map(|source| Edge {
                        source,
                        weight: EdgeWeight::Unit,
                    })
                    .collect();
                let label = NeuronLabel::Aggregation {
                    clause: clause.id.clone(),
                    head: head.clone(),
                };
                let id = push(
                    &mut neurons,
                    NeuronKind::Aggregation,
                    label,
                    inputs,
                    None,
                    false,
                );
                atom_inputs
                    .entry(head.clone())
                    .or_default()
                    .push(Edge { source: id, weight });
            }
        }

        let Some(rel) = grounding.model.relation(pred) else {
            continue;
        };
        let disj = template
            .disj_offset_param(pred)
            .map(|p| param_index(store, &p));
        for tuple in rel {
            let atom = Atom {
                predicate: pred.clone(),
                args: tuple
                    .iter()
                    .map(|c| crate::logic::Term::Const(c.clone()))
                    .collect(),
            };
            let mut inputs = atom_inputs.remove(&atom).unwrap_or_default();
            let fact_only = inputs.is_empty();
            inputs.extend(fact_edges.remove(&atom).unwrap_or_default());
            let offset = if fact_only { None } else { disj };
            let id = push(
                &mut neurons,
                NeuronKind::Atom,
                NeuronLabel::Atom(atom.clone()),
                inputs,
                offset,
                fact_only,
            );
            outputs.insert(atom, id);
        }
    }

    GroundNetwork {
        example_id: grounding.example_id.clone(),
        neurons,
        outputs,
    }
}

/// Value of a queried atom. Atoms absent from the network evaluate to 0.0
/// and are flagged as missing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub missing: bool,
}

/// Outputs of every neuron from one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueMap {
    pub values: Vec<f64>,
    /// Activation details for rule, aggregation and non-fact-only atom neurons.
    pub evals: Vec<Option<ActivationEval>>,
}

impl ValueMap {
    pub fn get(&self, id: NeuronId) -> f64 {
        self.values[id]
    }

    pub fn query(&self, net: &GroundNetwork, atom: &Atom) -> Prediction {
        match net.atom_neuron(atom) {
            Some(id) => Prediction {
                value: self.values[id],
                missing: false,
            },
            None => Prediction {
                value: 0.0,
                missing: true,
            },
        }
    }
}

pub fn forward(
    net: &GroundNetwork,
    params: &ParameterStore,
    family: &ActivationFamily,
) -> ValueMap {
    let mut values = vec![0.0; net.neurons.len()];
    let mut evals = vec![None; net.neurons.len()];
    let mut buf = Vec::new();
    for n in &net.neurons {
        let (value, eval) = match n.kind {
            NeuronKind::Fact => (1.0, None),
            NeuronKind::Atom if n.fact_only => {
                let sum = n
                    .inputs
                    .iter()
                    .map(|e| e.weight.value(params) * values[e.source])
                    .sum();
                (sum, None)
            }
            _ => {
                buf.clear();
                buf.extend(
                    n.inputs
                        .iter()
                        .map(|e| e.weight.value(params) * values[e.source]),
                );
                let offset = n.offset.map_or(0.0, |i| params.value(i));
                let eval = match n.kind {
                    NeuronKind::Rule => family.conj_with_offset(&buf, offset),
                    NeuronKind::Aggregation => family.eval_agg(&buf),
                    _ => family.disj_with_offset(&buf, offset),
                }
                .expect("non-fact neurons always have inputs");
                (eval.value, Some(eval))
            }
        };
        values[n.id] = value;
        evals[n.id] = eval;
    }
    ValueMap { values, evals }
}

/// `id,kind,label,value` rows, one per neuron.
pub fn values_csv(net: &GroundNetwork, values: &ValueMap) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "kind", "label", "value"])
        .expect("writing to memory");
    for n in &net.neurons {
        w.write_record([
            n.id.to_string(),
            n.kind.name().to_string(),
            n.label.to_string(),
            values.values[n.id].to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of utf-8 fields")
}

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// Graphviz rendering: atom neurons as ellipses, facts as boxes, rule
/// neurons as diamonds and aggregations as hexagons. Edges carrying a shared
/// parameter are labelled with its id, fixed fact weights with their value.
pub fn export_dot(net: &GroundNetwork, params: &ParameterStore) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(&net.example_id));
    out.push_str("  rankdir=LR;\n");
    for n in &net.neurons {
        let shape = match n.kind {
            NeuronKind::Atom => "ellipse",
            NeuronKind::Fact => "box",
            NeuronKind::Rule => "diamond",
            NeuronKind::Aggregation => "hexagon",
        };
        let _ = writeln!(
            out,
            "  n{} [shape={shape}, label=\"{}\"];",
            n.id,
            dot_escape(&n.label.to_string())
        );
    }
    for n in &net.neurons {
        for e in &n.inputs {
            match e.weight {
                EdgeWeight::Unit => {
                    let _ = writeln!(out, "  n{} -> n{};", e.source, n.id);
                }
                EdgeWeight::Shared(i) => {
                    let _ = writeln!(
                        out,
                        "  n{} -> n{} [label=\"{}\"];",
                        e.source,
                        n.id,
                        dot_escape(&params.id(i).to_string())
                    );
                }
                EdgeWeight::Fixed(w) => {
                    let _ = writeln!(out, "  n{} -> n{} [label=\"{w}\"];", e.source, n.id);
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
