mod common;

use std::collections::{BTreeSet, HashSet};

use common::{random_program, ProgramShape};
use lrnn::dataset::FoldPlan;
use lrnn::logic::{check_nonrecursive, parse_template_named, Substitution};
use lrnn::{build, ground, Atom, GroundConfig, Term};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = ProgramShape> {
    any::<bool>().prop_map(|learnable| ProgramShape {
        learnable,
        ..Default::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>(), shape in shape()) {
        let t = random_program(seed, shape).template();
        let again = parse_template_named(&t.render(), "rand").unwrap();
        prop_assert_eq!(&again.clauses, &t.clauses);
        prop_assert_eq!(again.render(), t.render());
    }

    #[test]
    fn substitution_is_idempotent(
        binds in proptest::collection::vec((0usize..3, 0usize..3), 0..4),
        args in proptest::collection::vec((any::<bool>(), 0usize..3), 0..4),
    ) {
        let mut s = Substitution::new();
        for (v, c) in binds {
            s.bind(["X", "Y", "Z"][v], ["a", "b", "c"][c]);
        }
        let atom = Atom::new(
            "p",
            args.iter()
                .map(|&(var, i)| if var { Term::var(["X", "Y", "Z"][i]) } else { Term::constant(["a", "b", "c"][i]) })
                .collect(),
        );
        let once = s.apply(&atom);
        prop_assert_eq!(s.apply(&once), once.clone());
        prop_assert_eq!(once.is_ground(), atom.variables().iter().all(|v| s.get(v).is_some()));
    }

    #[test]
    fn recursion_check_matches_cycle_search(edges in proptest::collection::vec((0usize..5, 0usize..5), 0..8)) {
        let text: String = edges.iter().map(|(h, b)| format!("1 :: p{h} :- p{b}.\n")).collect();
        let t = parse_template_named(&text, "g").unwrap();
        // transitive closure of head -> body dependencies
        let mut reach = [[false; 5]; 5];
        for &(h, b) in &edges {
            reach[h][b] = true;
        }
        for k in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    reach[i][j] |= reach[i][k] && reach[k][j];
                }
            }
        }
        let cyclic = (0..5).any(|i| reach[i][i]);
        match check_nonrecursive(&t) {
            Ok(order) => {
                prop_assert!(!cyclic);
                for &(h, b) in &edges {
                    let (ph, pb) = (lrnn::Predicate::new(&format!("p{h}"), 0), lrnn::Predicate::new(&format!("p{b}"), 0));
                    prop_assert!(order.precedes(&ph, &pb));
                }
            }
            Err(e) => {
                prop_assert!(cyclic);
                prop_assert!(!e.cycle.is_empty());
            }
        }
    }

    #[test]
    fn more_facts_never_shrink_the_grounding(seed in any::<u64>(), extra in any::<u64>()) {
        let p = random_program(seed, ProgramShape::default());
        let q = random_program(extra, ProgramShape::default());
        let t = p.template();
        let small = p.example();
        let mut big = small.clone();
        for (a, w) in q.example().facts {
            if !big.facts.iter().any(|(b, _)| *b == a) {
                big = big.with_fact(a, w);
            }
        }
        let g1 = ground(&t, &small, &GroundConfig::default()).unwrap();
        let g2 = ground(&t, &big, &GroundConfig::default()).unwrap();
        let m2: HashSet<Atom> = g2.model.atoms().collect();
        prop_assert!(g1.model.atoms().all(|a| m2.contains(&a)));
        let key = |i: &lrnn::grounder::GroundRuleInstance| (i.clause_index, i.head.clone(), i.body.clone());
        let i2: HashSet<_> = g2.instances.iter().map(key).collect();
        prop_assert!(g1.instances.iter().all(|i| i2.contains(&key(i))));
    }

    #[test]
    fn neuron_counts_follow_the_grounding(seed in any::<u64>()) {
        let p = random_program(seed, ProgramShape::default());
        let t = p.template();
        let g = ground(&t, &p.example(), &GroundConfig::default()).unwrap();
        let net = build(&g, &t);
        let c = net.counts();
        prop_assert_eq!(c.atoms, g.model.len());
        prop_assert_eq!(c.facts, g.facts.len());
        prop_assert_eq!(c.rules, g.instances.len());
        let heads: BTreeSet<_> = g.instances.iter().map(|i| (i.clause_index, i.head.clone())).collect();
        prop_assert_eq!(c.aggregations, heads.len());
        prop_assert_eq!(net.len(), c.atoms + c.facts + c.rules + c.aggregations);
        // every instance is active: head and body are in the model
        for i in &g.instances {
            prop_assert!(g.model.contains(&i.head) && i.body.iter().all(|b| g.model.contains(b)));
        }
        // each neuron reads only earlier neurons
        for n in &net.neurons {
            prop_assert!(n.inputs.iter().all(|e| e.source < n.id));
        }
    }

    #[test]
    fn folds_partition_evenly(n in 1usize..40, k in 2usize..10, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        match FoldPlan::new(&ids, k, seed) {
            Ok(plan) => {
                prop_assert!(n >= k);
                let folds = plan.folds(&ids);
                prop_assert_eq!(folds.len(), k);
                let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                let mut all: Vec<&String> = folds.iter().flatten().collect();
                all.sort();
                let mut want: Vec<&String> = ids.iter().collect();
                want.sort();
                prop_assert_eq!(all, want);
                prop_assert_eq!(FoldPlan::new(&ids, k, seed).unwrap().folds(&ids), folds);
            }
            Err(_) => prop_assert!(n < k),
        }
    }
}
