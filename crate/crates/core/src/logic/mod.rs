//! Function-free first-order syntax: terms, atoms, weighted definite clauses
//! and templates, plus substitutions and the non-recursiveness check.

mod ordering;
mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use ordering::{check_nonrecursive, predicate_ordering, PredicateOrdering, RecursionError};
pub use parser::{parse_statements, ParseError, Statement, StatementWeight};

use crate::activations::ActivationFamily;
use crate::params::{ClauseId, ParamId, ParameterStore};

pub type Symbol = Arc<str>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: &str) -> Self {
        Term::Var(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &Symbol {
        match self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }
}

/// True when `name` can be written as a bare constant.
pub(crate) fn is_plain_constant(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn write_constant(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if is_plain_constant(name) {
        f.write_str(name)
    } else {
        f.write_char('"')?;
        for c in name.chars() {
            if c == '"' || c == '\\' {
                f.write_char('\\')?;
            }
            f.write_char(c)?;
        }
        f.write_char('"')
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write_constant(f, c),
            Term::Var(v) => f.write_str(v),
        }
    }
}

/// Predicate symbol. Identity includes the arity, so `p/1` and `p/2` differ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub name: Symbol,
    pub arity: usize,
}

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Self {
        Self {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        Self {
            predicate: Predicate::new(name, args.len()),
            args,
        }
    }

    /// Builds a ground atom from constant names.
    pub fn ground(name: &str, constants: &[&str]) -> Self {
        Self::new(name, constants.iter().map(|c| Term::constant(c)).collect())
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }

    /// Variables in first-occurrence order, without repetition.
    pub fn variables(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        push_vars(&mut out, self);
        out
    }

    pub fn constants(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(|t| match t {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        })
    }
}

fn push_vars(out: &mut Vec<Symbol>, atom: &Atom) {
    for t in &atom.args {
        if let Term::Var(v) = t {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A mapping from variables to constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Symbol, Symbol>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: impl Into<Symbol>, constant: impl Into<Symbol>) {
        self.0.insert(var.into(), constant.into());
    }

    pub fn get(&self, var: &str) -> Option<&Symbol> {
        self.0.get(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Symbol)> {
        self.0.iter()
    }

    /// Replaces every variable in the domain; others are left intact.
    pub fn apply(&self, atom: &Atom) -> Atom {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => match self.0.get(v) {
                    Some(c) => Term::Const(c.clone()),
                    None => t.clone(),
                },
                Term::Const(_) => t.clone(),
            })
            .collect();
        Atom {
            predicate: atom.predicate.clone(),
            args,
        }
    }
}

impl<V: Into<Symbol>, C: Into<Symbol>> FromIterator<(V, C)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (V, C)>>(iter: I) -> Self {
        Self(
            iter.into_iter()
                .map(|(v, c)| (v.into(), c.into()))
                .collect(),
        )
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->")?;
            write_constant(f, c)?;
        }
        f.write_str("}")
    }
}

/// Free-function form of [`Substitution::apply`].
pub fn apply(s: &Substitution, a: &Atom) -> Atom {
    s.apply(a)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    Fixed(f64),
    /// Initialized by the trainer.
    Learnable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedClause {
    pub id: ClauseId,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub weight: Weight,
}

impl WeightedClause {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// Clause variables in first-occurrence order, head first.
    pub fn variables(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        push_vars(&mut out, &self.head);
        for b in &self.body {
            push_vars(&mut out, b);
        }
        out
    }

    /// Variables of the head that occur in no body atom.
    pub fn head_only_variables(&self) -> Vec<Symbol> {
        let mut body_vars = Vec::new();
        for b in &self.body {
            push_vars(&mut body_vars, b);
        }
        self.head
            .variables()
            .into_iter()
            .filter(|v| !body_vars.contains(v))
            .collect()
    }
}

impl fmt::Display for WeightedClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.weight {
            Weight::Fixed(w) => write!(f, "{w} :: ")?,
            Weight::Learnable => f.write_str("? :: ")?,
        }
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, b) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{b}")?;
            }
        }
        f.write_str(".")
    }
}

/// A lifted template: weighted clauses in source order with their parameters.
///
/// The store holds one weight per clause, one conjunction offset per rule
/// clause and one disjunction offset per head predicate of a rule (owned by
/// the first rule with that head). Learnable weights start at 0.0 until the
/// trainer initializes them.
#[derive(Clone, Debug)]
pub struct Template {
    pub clauses: Vec<WeightedClause>,
    pub params: ParameterStore,
    pub family: ActivationFamily,
    disj_owner: HashMap<Predicate, ClauseId>,
}

impl PartialEq for Template {
    fn eq(&self, other: &Self) -> bool {
        self.clauses == other.clauses && self.params == other.params && self.family == other.family
    }
}

impl Template {
    pub fn new(clauses: Vec<WeightedClause>, family: ActivationFamily) -> Self {
        let mut params = ParameterStore::new();
        let mut disj_owner: HashMap<Predicate, ClauseId> = HashMap::new();
        for c in &clauses {
            let (value, learnable) = match c.weight {
                Weight::Fixed(w) => (w, false),
                Weight::Learnable => (0.0, true),
            };
            params.insert(ParamId::weight(c.id.clone()), value, learnable);
            if c.is_fact() {
                continue;
            }
            params.insert(ParamId::conj_offset(c.id.clone()), family.conj_offset, true);
            if !disj_owner.contains_key(&c.head.predicate) {
                disj_owner.insert(c.head.predicate.clone(), c.id.clone());
                params.insert(ParamId::disj_offset(c.id.clone()), family.disj_offset, true);
            }
        }
        Self {
            clauses,
            params,
            family,
            disj_owner,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), ActivationFamily::default())
    }

    /// Same clauses and parameter values under a different family. Offsets
    /// are reset to the new family's initial values.
    pub fn with_family(&self, family: ActivationFamily) -> Self {
        let mut t = Template::new(self.clauses.clone(), family);
        for (id, v) in self.params.iter() {
            if !id.is_offset() {
                t.params.set(id, v);
            }
        }
        t
    }

    pub fn rules(&self) -> impl Iterator<Item = &WeightedClause> {
        self.clauses.iter().filter(|c| !c.is_fact())
    }

    pub fn facts(&self) -> impl Iterator<Item = &WeightedClause> {
        self.clauses.iter().filter(|c| c.is_fact())
    }

    /// Parameter holding the disjunction offset for atoms of `predicate`.
    pub fn disj_offset_param(&self, predicate: &Predicate) -> Option<ParamId> {
        self.disj_owner
            .get(predicate)
            .map(|c| ParamId::disj_offset(c.clone()))
    }

    pub fn predicates(&self) -> BTreeSet<Predicate> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            out.insert(c.head.predicate.clone());
            for b in &c.body {
                out.insert(b.predicate.clone());
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            out.extend(c.head.constants().cloned());
            for b in &c.body {
                out.extend(b.constants().cloned());
            }
        }
        out
    }

    /// Renders the template in the concrete clause syntax, one clause per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.clauses {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses a template using `"template"` as the clause-id source name.
pub fn parse_template(text: &str) -> Result<Template, ParseError> {
    parse_template_named(text, "template")
}

/// Parses a template; clause ids are `(source, ordinal)` with 1-based ordinals
/// in source order. Section headers are not allowed in templates.
pub fn parse_template_named(text: &str, source: &str) -> Result<Template, ParseError> {
    let source: Symbol = source.into();
    let mut clauses = Vec::new();
    for st in parse_statements(text)? {
        match st {
            Statement::Section { line, column, .. } => {
                return Err(ParseError::new(
                    line,
                    column,
                    "section headers are only allowed in example and query files",
                ))
            }
            Statement::Clause {
                weight, head, body, ..
            } => {
                let ordinal = clauses.len() as u32 + 1;
                clauses.push(WeightedClause {
                    id: ClauseId::new(source.clone(), ordinal),
                    head,
                    body,
                    weight: match weight {
                        StatementWeight::Value(w) => Weight::Fixed(w),
                        StatementWeight::Learnable => Weight::Learnable,
                    },
                });
            }
        }
    }
    Ok(Template::new(clauses, ActivationFamily::default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_weighted_rule() {
        let t = parse_template("1.0 :: mother(C,M) :- parent(C,M), female(M).").unwrap();
        assert_eq!(t.clauses.len(), 1);
        let c = &t.clauses[0];
        assert_eq!(c.head.predicate, Predicate::new("mother", 2));
        let body: Vec<_> = c.body.iter().map(|b| b.predicate.to_string()).collect();
        assert_eq!(body, ["parent/2", "female/1"]);
        assert_eq!(c.weight, Weight::Fixed(1.0));
        assert_eq!(c.id, ClauseId::new("template", 1));
    }

    #[test]
    fn parses_a_fact_and_empty_input() {
        let t = parse_template("1.0 :: female(alice).").unwrap();
        assert!(t.clauses[0].is_fact());
        assert_eq!(t.clauses[0].head, Atom::ground("female", &["alice"]));
        assert!(parse_template("").unwrap().clauses.is_empty());
        assert!(parse_template("% only a comment\n")
            .unwrap()
            .clauses
            .is_empty());
    }

    #[test]
    fn duplicate_clauses_get_distinct_parameters() {
        let t = parse_template("0.5 :: p(X) :- q(X).\n0.7 :: p(X) :- q(X).").unwrap();
        assert_eq!(t.clauses.len(), 2);
        assert_eq!(
            t.params.get(&ParamId::weight(ClauseId::new("template", 1))),
            Some(0.5)
        );
        assert_eq!(
            t.params.get(&ParamId::weight(ClauseId::new("template", 2))),
            Some(0.7)
        );
        // both rules share the head predicate, so only one disjunction offset
        let disj = t
            .params
            .ids()
            .iter()
            .filter(|id| id.kind == crate::params::ParamKind::DisjOffset);
        assert_eq!(disj.count(), 1);
    }

    #[test]
    fn learnable_weights_are_flagged() {
        let t = parse_template("? :: p(X) :- q(X).\n2 :: q(a).").unwrap();
        let w1 = t
            .params
            .index_of(&ParamId::weight(ClauseId::new("template", 1)))
            .unwrap();
        let w2 = t
            .params
            .index_of(&ParamId::weight(ClauseId::new("template", 2)))
            .unwrap();
        assert!(t.params.is_learnable(w1));
        assert!(!t.params.is_learnable(w2));
        assert_eq!(t.params.value(w2), 2.0);
    }

    #[test]
    fn substitution_examples() {
        let s: Substitution = [("C", "bob"), ("M", "alice")].into_iter().collect();
        let a = Atom::new("mother", vec![Term::var("C"), Term::var("M")]);
        assert_eq!(apply(&s, &a), Atom::ground("mother", &["bob", "alice"]));

        let p = Atom::new("parent", vec![Term::var("X"), Term::var("Y")]);
        assert_eq!(apply(&Substitution::new(), &p), p);

        let s: Substitution = [("X", "a")].into_iter().collect();
        let f = Atom::new("friends", vec![Term::var("X"), Term::var("X")]);
        assert_eq!(apply(&s, &f), Atom::ground("friends", &["a", "a"]));

        // variables outside the domain survive
        let g = Atom::new("g", vec![Term::var("X"), Term::var("Y")]);
        assert_eq!(apply(&s, &g).args[1], Term::var("Y"));
    }

    #[test]
    fn head_only_variables() {
        let t = parse_template("? :: p(X, Y) :- q(X).").unwrap();
        assert_eq!(t.clauses[0].head_only_variables(), vec![Symbol::from("Y")]);
        assert_eq!(
            t.clauses[0].variables(),
            vec![Symbol::from("X"), Symbol::from("Y")]
        );
    }

    #[test]
    fn quoted_constants_render_back() {
        let t = parse_template("1 :: name(\"Ann \\\"A\\\" Lee\", x1).").unwrap();
        assert_eq!(&*t.clauses[0].head.args[0].name().clone(), "Ann \"A\" Lee");
        let again = parse_template(&t.render()).unwrap();
        assert_eq!(again, t);
    }
}
