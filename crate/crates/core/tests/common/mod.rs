//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lrnn::dataset::parse_examples;
use lrnn::logic::{parse_template_named, Atom, Substitution, Term};
use lrnn::netbuild::{EdgeWeight, GroundNetwork};
use lrnn::params::{ClauseId, ParamId, ParameterStore};
use lrnn::{Example, Template};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random non-recursive program in source form.
#[derive(Clone, Debug)]
pub struct RandomProgram {
    pub template_text: String,
    pub example_text: String,
}

impl RandomProgram {
    pub fn template(&self) -> Template {
        parse_template_named(&self.template_text, "rand").expect("generated template parses")
    }

    pub fn example(&self) -> Example {
        parse_examples(&self.example_text)
            .expect("generated example parses")
            .pop()
            .expect("one example")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProgramShape {
    pub max_predicates: usize,
    pub max_constants: usize,
    pub max_rules: usize,
    /// Rule weights: `Some(w)` writes every rule weight as `w`, `None` draws
    /// them from [0, 1].
    pub rule_weight: Option<f64>,
    /// Write rule weights as `?`.
    pub learnable: bool,
}

impl Default for ProgramShape {
    fn default() -> Self {
        Self {
            max_predicates: 5,
            max_constants: 5,
            max_rules: 6,
            rule_weight: None,
            learnable: false,
        }
    }
}

const VARS: [&str; 3] = ["X", "Y", "Z"];

/// Rules only use body predicates with a lower index than the head, so the
/// program is non-recursive by construction.
pub fn random_program(seed: u64, shape: ProgramShape) -> RandomProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pred = rng.gen_range(2..=shape.max_predicates.max(2));
    let arity: Vec<usize> = (0..n_pred).map(|_| rng.gen_range(0..=2)).collect();
    let n_const = rng.gen_range(1..=shape.max_constants.max(1));
    let consts: Vec<String> = (0..n_const)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();

    let atom = |name: usize, args: &[String]| {
        if args.is_empty() {
            format!("p{name}")
        } else {
            format!("p{name}({})", args.join(","))
        }
    };

    let mut template = String::new();
    let n_rules = rng.gen_range(1..=shape.max_rules.max(1));
    for _ in 0..n_rules {
        let head = rng.gen_range(1..n_pred);
        let n_body = rng.gen_range(1..=3);
        let mut body = Vec::new();
        let mut body_vars: Vec<String> = Vec::new();
        for _ in 0..n_body {
            let p = rng.gen_range(0..head);
            let args: Vec<String> = (0..arity[p])
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        consts.choose(&mut rng).unwrap().clone()
                    } else {
                        let v = VARS.choose(&mut rng).unwrap().to_string();
                        body_vars.push(v.clone());
                        v
                    }
                })
                .collect();
            body.push(atom(p, &args));
        }
        let head_args: Vec<String> = (0..arity[head])
            .map(|_| match rng.gen_range(0..10) {
                0 => consts.choose(&mut rng).unwrap().clone(),
                1 => "W".to_string(),
                _ => body_vars
                    .choose(&mut rng)
                    .cloned()
                    .unwrap_or_else(|| "W".to_string()),
            })
            .collect();
        let w = if shape.learnable {
            "?".to_string()
        } else {
            format!(
                "{:.3}",
                shape
                    .rule_weight
                    .unwrap_or_else(|| rng.gen_range(0.0..=1.0))
            )
        };
        template.push_str(&format!(
            "{w} :: {} :- {}.\n",
            atom(head, &head_args),
            body.join(", ")
        ));
    }

    let mut example = String::from("#example r\n");
    let mut seen = BTreeSet::new();
    let n_facts = rng.gen_range(1..=10);
    for _ in 0..n_facts {
        // facts mostly on low predicates so that rules fire
        let p = if rng.gen_bool(0.8) {
            rng.gen_range(0..n_pred.min(2))
        } else {
            rng.gen_range(0..n_pred)
        };
        let args: Vec<String> = (0..arity[p])
            .map(|_| consts.choose(&mut rng).unwrap().clone())
            .collect();
        let a = atom(p, &args);
        if seen.insert(a.clone()) {
            example.push_str(&format!("{:.3} :: {a}.\n", rng.gen_range(0.0..=1.0)));
        }
    }
    RandomProgram {
        template_text: template,
        example_text: example,
    }
}

fn universe(template: &Template, example: &Example) -> Vec<String> {
    let mut u: BTreeSet<String> = template.constants().iter().map(|c| c.to_string()).collect();
    u.extend(example.constants().map(|c| c.to_string()));
    u.into_iter().collect()
}

fn clause_vars(head: &Atom, body: &[Atom]) -> Vec<String> {
    let mut vars = Vec::new();
    for t in std::iter::once(head).chain(body).flat_map(|a| &a.args) {
        if let Term::Var(v) = t {
            if !vars.contains(&v.to_string()) {
                vars.push(v.to_string());
            }
        }
    }
    vars
}

/// Every substitution of `vars` over `universe`.
fn substitutions(vars: &[String], universe: &[String]) -> Vec<Substitution> {
    let mut out = vec![Substitution::new()];
    for v in vars {
        let mut next = Vec::new();
        for s in &out {
            for c in universe {
                let mut s2 = s.clone();
                s2.bind(v.as_str(), c.as_str());
                next.push(s2);
            }
        }
        out = next;
    }
    out
}

/// Least Herbrand model by naive iteration of the immediate-consequence
/// operator over all ground instances, weights ignored.
pub fn naive_model(template: &Template, example: &Example) -> BTreeSet<Atom> {
    let u = universe(template, example);
    let mut model: BTreeSet<Atom> = example.facts.iter().map(|(a, _)| a.clone()).collect();
    let instances: Vec<(Atom, Vec<Atom>)> = template
        .clauses
        .iter()
        .flat_map(|c| {
            substitutions(&clause_vars(&c.head, &c.body), &u)
                .into_iter()
                .map(|s| {
                    (
                        s.apply(&c.head),
                        c.body.iter().map(|b| s.apply(b)).collect(),
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect();
    loop {
        let next: BTreeSet<Atom> = model
            .iter()
            .cloned()
            .chain(
                instances
                    .iter()
                    .filter(|(_, body)| body.iter().all(|b| model.contains(b)))
                    .map(|(h, _)| h.clone()),
            )
            .collect();
        if next == model {
            return model;
        }
        model = next;
    }
}

/// Fuzzy Datalog under Gödel semantics with weighted rules:
/// `v(h) = max(fact(h), max over rules and instances of w * min(v(body)))`,
/// iterated over the whole Herbrand base until stable. Underivable atoms
/// stay at 0.
pub fn godel_values(template: &Template, example: &Example) -> BTreeMap<Atom, f64> {
    let u = universe(template, example);
    let mut facts: BTreeMap<Atom, f64> = BTreeMap::new();
    for (a, w) in &example.facts {
        *facts.entry(a.clone()).or_default() += w;
    }
    let mut rules = Vec::new();
    for c in template.rules() {
        let w = match c.weight {
            lrnn::logic::Weight::Fixed(w) => w,
            lrnn::logic::Weight::Learnable => panic!("godel oracle needs fixed weights"),
        };
        for s in substitutions(&clause_vars(&c.head, &c.body), &u) {
            let body: Vec<Atom> = c.body.iter().map(|b| s.apply(b)).collect();
            rules.push((s.apply(&c.head), w, body));
        }
    }
    let mut v: BTreeMap<Atom, f64> = facts.clone();
    for (h, _, _) in &rules {
        v.entry(h.clone()).or_insert(0.0);
    }
    loop {
        let mut next = facts.clone();
        for (h, w, body) in &rules {
            let m = body
                .iter()
                .map(|b| v.get(b).copied().unwrap_or(0.0))
                .fold(f64::INFINITY, f64::min);
            let e = next.entry(h.clone()).or_insert(0.0);
            *e = e.max(w * m);
        }
        if next == v {
            return v;
        }
        v = next;
    }
}

/// Central difference of `f` with respect to parameter `index`.
pub fn central_difference(
    params: &ParameterStore,
    index: usize,
    h: f64,
    f: impl Fn(&ParameterStore) -> f64,
) -> f64 {
    let mut p = params.clone();
    let x = p.values()[index];
    p.values_mut()[index] = x + h;
    let up = f(&p);
    p.values_mut()[index] = x - h;
    let down = f(&p);
    (up - down) / (2.0 * h)
}

/// Gives every use of a shared parameter its own copy. Returns the untied
/// network and store plus, for each parameter of the untied store, the index
/// of the original parameter it copies.
pub fn untie(
    net: &GroundNetwork,
    params: &ParameterStore,
) -> (GroundNetwork, ParameterStore, Vec<usize>) {
    let mut store = ParameterStore::new();
    let mut origin = Vec::new();
    let mut fresh = |store: &mut ParameterStore, i: usize| {
        let k = origin.len();
        origin.push(i);
        store.insert(
            ParamId::weight(ClauseId::new("untied", k as u32 + 1)),
            params.value(i),
            true,
        )
    };
    let mut out = net.clone();
    for n in &mut out.neurons {
        for e in &mut n.inputs {
            if let EdgeWeight::Shared(i) = e.weight {
                e.weight = EdgeWeight::Shared(fresh(&mut store, i));
            }
        }
        if let Some(o) = n.offset {
            n.offset = Some(fresh(&mut store, o));
        }
    }
    (out, store, origin)
}

/// Smallest gap between the two largest inputs of any max neuron reached in
/// the forward pass; infinity when no max has two inputs.
pub fn max_tie_margin(
    net: &GroundNetwork,
    params: &ParameterStore,
    values: &lrnn::ValueMap,
) -> f64 {
    let mut margin = f64::INFINITY;
    for n in &net.neurons {
        let Some(eval) = &values.evals[n.id] else {
            continue;
        };
        if eval.argmax_index.is_none() || n.inputs.len() < 2 {
            continue;
        }
        let mut xs: Vec<f64> = n
            .inputs
            .iter()
            .map(|e| e.weight.value(params) * values.values[e.source])
            .collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        margin = margin.min(xs[0] - xs[1]);
    }
    margin
}
