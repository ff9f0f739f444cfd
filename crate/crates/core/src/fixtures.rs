//! Bundled templates and example sets.
//!
//! The texts are compiled in, and the same files sit in the crate's
//! `fixtures/` directory for use from the command line.

use crate::dataset::{parse_examples, parse_queries, Example, Query};
use crate::logic::{parse_template_named, Template};

/// A named template with its example set.
#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub template: &'static str,
    pub examples: &'static str,
}

impl Fixture {
    /// Parsed template; clause ids are `<name>:<ordinal>`.
    pub fn template(&self) -> Template {
        parse_template_named(self.template, self.name).expect("bundled template parses")
    }

    pub fn examples(&self) -> Vec<Example> {
        parse_examples(self.examples).expect("bundled examples parse")
    }

    pub fn example(&self, id: &str) -> Example {
        self.examples()
            .into_iter()
            .find(|e| e.id == id)
            .unwrap_or_else(|| panic!("fixture {} has no example {id}", self.name))
    }
}

macro_rules! fixture {
    ($name:literal) => {
        Fixture {
            name: $name,
            template: include_str!(concat!("../fixtures/", $name, ".lrnn")),
            examples: include_str!(concat!("../fixtures/", $name, ".examples")),
        }
    };
}

/// Parent/mother/father with all facts in the template; one empty example.
pub const FAMILY: Fixture = fixture!("family");
pub const FAMILY_QUERIES: &str = include_str!("../fixtures/family.queries");
/// Foals, parents and siblings; all weights learnable.
pub const HORSES: Fixture = Fixture {
    name: "horses",
    template: include_str!("../fixtures/horses.lrnn"),
    examples: "#example horses\n",
};
/// Brightest edge of a four-vertex colored cycle.
pub const BRIGHT_EDGES: Fixture = fixture!("bright_edges");
/// Blood pressure from stress, obesity and exercise.
pub const HIGH_PRESSURE: Fixture = fixture!("high_pressure");
/// Latent atom-type groups with one bond feature; H2 (`m1`) and water (`m2`).
pub const EXPLOSIVE: Fixture = fixture!("explosive");
/// Soft matching of friendship cliques.
pub const CLIQUE: Fixture = fixture!("clique");
/// One convolution filter over a row of five pixels.
pub const CNN: Fixture = fixture!("cnn");
/// Pairwise substitution weights around a six-ring.
pub const SIX_RING: Fixture = fixture!("six_ring");
/// Generic chains over atom-type and bond-type groups, ternary bonds.
pub const CHAIN: Fixture = fixture!("chain");
/// Three latent atom-type groups with a bond feature per group pair, over
/// the generated molecules (`molecules::generate` with default settings).
pub const SOFT_CLUSTERING: Fixture = Fixture {
    name: "soft_clustering",
    template: include_str!("../fixtures/soft_clustering.lrnn"),
    examples: include_str!("../fixtures/molecules.examples"),
};
pub const MOLECULE_QUERIES: &str = include_str!("../fixtures/molecules.queries");

pub const ALL: [Fixture; 10] = [
    FAMILY,
    HORSES,
    BRIGHT_EDGES,
    HIGH_PRESSURE,
    EXPLOSIVE,
    CLIQUE,
    CNN,
    SIX_RING,
    CHAIN,
    SOFT_CLUSTERING,
];

pub fn family_queries() -> Vec<Query> {
    parse_queries(FAMILY_QUERIES).expect("bundled queries parse")
}

pub fn molecule_queries() -> Vec<Query> {
    parse_queries(MOLECULE_QUERIES).expect("bundled queries parse")
}

/// Directory holding the fixture files on disk.
pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounder::{ground, GroundConfig};
    use crate::logic::{check_nonrecursive, Atom, Predicate};
    use crate::netbuild::build;

    fn instances_of(g: &crate::grounder::Grounding, pred: &str) -> usize {
        g.instances
            .iter()
            .filter(|i| i.head.predicate.name.as_ref() == pred)
            .count()
    }

    #[test]
    fn every_fixture_parses_grounds_and_builds() {
        for f in ALL {
            let t = f.template();
            check_nonrecursive(&t).unwrap();
            for e in f.examples() {
                let g = ground(&t, &e, &GroundConfig::default()).unwrap();
                let net = build(&g, &t);
                assert!(!net.is_empty(), "{} / {}", f.name, e.id);
            }
        }
    }

    #[test]
    fn explosive_bond_features() {
        let t = EXPLOSIVE.template();
        let counts: Vec<usize> = EXPLOSIVE
            .examples()
            .iter()
            .map(|e| instances_of(&ground(&t, e, &GroundConfig::default()).unwrap(), "f1"))
            .collect();
        assert_eq!(counts, vec![2, 4]);
    }

    #[test]
    fn cnn_filter_positions() {
        let t = CNN.template();
        let g = ground(&t, &CNN.example("image"), &GroundConfig::default()).unwrap();
        let heads: Vec<String> = g
            .instances
            .iter()
            .filter(|i| i.head.predicate.name.as_ref() == "f1")
            .map(|i| format!("{}", i.theta))
            .collect();
        assert_eq!(
            heads,
            vec![
                "{A->p1, B->p2, C->p3}",
                "{A->p2, B->p3, C->p4}",
                "{A->p3, B->p4, C->p5}"
            ]
        );
    }

    #[test]
    fn horses_foal() {
        let t = HORSES.template();
        let g = ground(&t, &HORSES.example("horses"), &GroundConfig::default()).unwrap();
        assert!(g.model.contains(&Atom::ground("foal", &["star"])));
        assert_eq!(instances_of(&g, "foal"), 3);
    }

    #[test]
    fn chain_uses_ternary_bonds() {
        let t = CHAIN.template();
        assert!(t.predicates().contains(&Predicate::new("bond", 3)));
        let g = ground(&t, &CHAIN.example("m1"), &GroundConfig::default()).unwrap();
        assert!(g.model.contains(&Atom::ground("toxic", &[])));
    }

    #[test]
    fn queries_parse() {
        assert_eq!(family_queries().len(), 3);
        assert_eq!(molecule_queries().len(), 40);
    }

    #[test]
    fn molecule_files_match_the_generator() {
        use crate::dataset::{render_examples, render_queries};
        use crate::molecules::{examples, generate, queries, BondEncoding, MoleculeConfig};
        let mols = generate(&MoleculeConfig::default());
        assert_eq!(
            SOFT_CLUSTERING.examples,
            render_examples(&examples(&mols, BondEncoding::Binary))
        );
        assert_eq!(
            MOLECULE_QUERIES,
            render_queries(&queries(&mols, "explosive"))
        );
    }
}
