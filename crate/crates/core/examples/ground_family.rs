//! Grounds the parent/mother/father template and evaluates it under each
//! activation family.

use lrnn::fixtures::FAMILY;
use lrnn::{build, forward, ground, ActivationFamily, Atom, GroundConfig};

fn main() {
    let example = FAMILY.example("family");
    for family in [
        ActivationFamily::godel(),
        ActivationFamily::max_sigmoid(),
        ActivationFamily::avg_sigmoid(),
    ] {
        let template = FAMILY.template().with_family(family);
        let grounding = ground(&template, &example, &GroundConfig::default()).expect("grounds");
        if family.kind == lrnn::FamilyKind::Godel {
            println!("active rule instances:");
            for i in &grounding.instances {
                println!("  {} {}", i.clause, i.theta);
            }
            let c = build(&grounding, &template).counts();
            println!(
                "neurons: {} atoms, {} facts, {} rules, {} aggregations",
                c.atoms, c.facts, c.rules, c.aggregations
            );
        }
        let net = build(&grounding, &template);
        let values = forward(&net, &template.params, &template.family);
        for atom in [
            Atom::ground("mother", &["eve", "alice"]),
            Atom::ground("father", &["bob", "alice"]),
        ] {
            let p = values.query(&net, &atom);
            println!(
                "{:?}: {atom} = {:.4}{}",
                family.kind,
                p.value,
                if p.missing { " (not in model)" } else { "" }
            );
        }
    }
}
