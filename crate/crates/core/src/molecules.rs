//! Seeded synthetic molecules labeled by a planted rule: a molecule is
//! positive when it contains a bond between an oxygen and a hydrogen.
//!
//! With `require_oh_atoms` (the default) every molecule has at least one
//! oxygen and one hydrogen, so the label depends on how atoms are bonded and
//! not only on which atom types occur.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Example, Query};
use crate::logic::Atom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    C,
    H,
    O,
    N,
}

impl Element {
    pub const ALL: [Element; 4] = [Element::C, Element::H, Element::O, Element::N];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "c",
            Element::H => "h",
            Element::O => "o",
            Element::N => "n",
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondKind {
    Single,
    Double,
}

impl BondKind {
    pub fn predicate(self) -> &'static str {
        match self {
            BondKind::Single => "single",
            BondKind::Double => "double",
        }
    }
}

/// How bonds are written as facts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondEncoding {
    /// `bond(a,b)` in both directions.
    Binary,
    /// `bond(a,b,k)` in both directions plus `single(k)` or `double(k)`.
    Ternary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    pub id: String,
    pub atoms: Vec<Element>,
    /// Index pairs with `i < j`.
    pub bonds: Vec<(usize, usize, BondKind)>,
}

impl Molecule {
    pub fn atom_name(&self, i: usize) -> String {
        format!("{}{}", self.atoms[i], i + 1)
    }

    /// The planted rule.
    pub fn has_oh_bond(&self) -> bool {
        self.bonds.iter().any(|&(i, j, _)| {
            matches!(
                (self.atoms[i], self.atoms[j]),
                (Element::O, Element::H) | (Element::H, Element::O)
            )
        })
    }

    pub fn to_example(&self, encoding: BondEncoding) -> Example {
        let mut ex = Example::new(self.id.clone());
        for (i, el) in self.atoms.iter().enumerate() {
            ex = ex.with_fact(Atom::ground(el.symbol(), &[&self.atom_name(i)]), 1.0);
        }
        for (k, &(i, j, kind)) in self.bonds.iter().enumerate() {
            let (a, b) = (self.atom_name(i), self.atom_name(j));
            match encoding {
                BondEncoding::Binary => {
                    ex = ex
                        .with_fact(Atom::ground("bond", &[&a, &b]), 1.0)
                        .with_fact(Atom::ground("bond", &[&b, &a]), 1.0);
                }
                BondEncoding::Ternary => {
                    let id = format!("b{}", k + 1);
                    ex = ex
                        .with_fact(Atom::ground("bond", &[&a, &b, &id]), 1.0)
                        .with_fact(Atom::ground("bond", &[&b, &a, &id]), 1.0)
                        .with_fact(Atom::ground(kind.predicate(), &[&id]), 1.0);
                }
            }
        }
        ex
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeConfig {
    /// Total count; half positive and half negative (the extra one is
    /// positive when odd).
    pub count: usize,
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Probability of each extra ring-closing bond beyond the spanning tree.
    pub extra_bond_prob: f64,
    /// Put at least one oxygen and one hydrogen in every molecule.
    pub require_oh_atoms: bool,
    pub seed: u64,
}

impl Default for MoleculeConfig {
    fn default() -> Self {
        Self {
            count: 40,
            min_atoms: 4,
            max_atoms: 8,
            extra_bond_prob: 0.2,
            require_oh_atoms: true,
            seed: 0,
        }
    }
}

fn random_molecule(rng: &mut ChaCha8Rng, config: &MoleculeConfig, id: String) -> Molecule {
    let n = rng.gen_range(config.min_atoms.max(2)..=config.max_atoms.max(config.min_atoms).max(2));
    let mut atoms: Vec<Element> = if config.require_oh_atoms {
        vec![Element::O, Element::H]
    } else {
        Vec::new()
    };
    while atoms.len() < n {
        atoms.push(*Element::ALL.choose(rng).expect("non-empty"));
    }
    atoms.shuffle(rng);
    let kind = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.25) {
            BondKind::Double
        } else {
            BondKind::Single
        }
    };
    let mut bonds = Vec::new();
    for j in 1..n {
        let i = rng.gen_range(0..j);
        bonds.push((i, j, kind(rng)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !bonds.iter().any(|&(a, b, _)| (a, b) == (i, j))
                && rng.gen_bool(config.extra_bond_prob / n as f64)
            {
                bonds.push((i, j, kind(rng)));
            }
        }
    }
    bonds.sort_by_key(|&(i, j, _)| (i, j));
    Molecule { id, atoms, bonds }
}

/// Draws molecules until the requested number of each label is reached.
pub fn generate(config: &MoleculeConfig) -> Vec<Molecule> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let want_pos = config.count.div_ceil(2);
    let want_neg = config.count / 2;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    while pos.len() < want_pos || neg.len() < want_neg {
        let m = random_molecule(&mut rng, config, String::new());
        if m.has_oh_bond() {
            if pos.len() < want_pos {
                pos.push(m);
            }
        } else if neg.len() < want_neg {
            neg.push(m);
        }
    }
    // interleave so that any prefix is roughly balanced
    let mut out = Vec::with_capacity(config.count);
    let (mut p, mut q) = (pos.into_iter(), neg.into_iter());
    loop {
        match (p.next(), q.next()) {
            (None, None) => break,
            (a, b) => out.extend(a.into_iter().chain(b)),
        }
    }
    for (i, m) in out.iter_mut().enumerate() {
        m.id = format!("mol{:02}", i + 1);
    }
    out
}

pub fn examples(molecules: &[Molecule], encoding: BondEncoding) -> Vec<Example> {
    molecules.iter().map(|m| m.to_example(encoding)).collect()
}

/// One query per molecule on the zero-arity atom `target`.
pub fn queries(molecules: &[Molecule], target: &str) -> Vec<Query> {
    molecules
        .iter()
        .map(|m| Query {
            example_id: m.id.clone(),
            atom: Atom::ground(target, &[]),
            target: if m.has_oh_bond() { 1.0 } else { 0.0 },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Label recomputed from the rendered facts alone.
    fn oracle(ex: &Example) -> bool {
        let of_type = |t: &str| -> HashSet<String> {
            ex.facts
                .iter()
                .filter(|(a, _)| a.predicate.name.as_ref() == t)
                .map(|(a, _)| a.args[0].name().to_string())
                .collect()
        };
        let (o, h) = (of_type("o"), of_type("h"));
        ex.facts.iter().any(|(a, _)| {
            a.predicate.name.as_ref() == "bond"
                && o.contains(a.args[0].name().as_ref())
                && h.contains(a.args[1].name().as_ref())
        })
    }

    #[test]
    fn balanced_and_labeled_by_the_planted_rule() {
        let mols = generate(&MoleculeConfig::default());
        assert_eq!(mols.len(), 40);
        assert_eq!(mols.iter().filter(|m| m.has_oh_bond()).count(), 20);
        for enc in [BondEncoding::Binary, BondEncoding::Ternary] {
            for (m, e) in mols.iter().zip(examples(&mols, enc)) {
                assert_eq!(oracle(&e), m.has_oh_bond(), "{}", m.id);
            }
        }
        let ids: HashSet<&str> = mols.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids.len(), 40);
    }

    #[test]
    fn every_molecule_has_oxygen_and_hydrogen() {
        for m in generate(&MoleculeConfig {
            seed: 3,
            ..Default::default()
        }) {
            assert!(m.atoms.contains(&Element::O) && m.atoms.contains(&Element::H));
            // connected: a spanning tree is always present
            assert!(m.bonds.len() + 1 >= m.atoms.len());
        }
    }

    #[test]
    fn seeded() {
        let c = MoleculeConfig {
            count: 11,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(generate(&c), generate(&c));
        assert_ne!(
            generate(&c),
            generate(&MoleculeConfig {
                seed: 6,
                ..c.clone()
            })
        );
        assert_eq!(generate(&c).iter().filter(|m| m.has_oh_bond()).count(), 6);
    }

    #[test]
    fn ternary_encoding_types_each_bond() {
        let m = Molecule {
            id: "w".into(),
            atoms: vec![Element::O, Element::H],
            bonds: vec![(0, 1, BondKind::Double)],
        };
        let e = m.to_example(BondEncoding::Ternary);
        let facts: Vec<String> = e.facts.iter().map(|(a, _)| a.to_string()).collect();
        assert_eq!(
            facts,
            [
                "o(o1)",
                "h(h2)",
                "bond(o1,h2,b1)",
                "bond(h2,o1,b1)",
                "double(b1)"
            ]
        );
        let q = queries(&[m], "explosive");
        assert_eq!(q[0].target, 1.0);
    }
}
