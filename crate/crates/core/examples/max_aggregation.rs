//! Max aggregation picks the single best grounding: the brightest edge of a
//! colored cycle. Negative rule weights let exercise lower blood pressure.

use lrnn::fixtures::{BRIGHT_EDGES, HIGH_PRESSURE};
use lrnn::{build, forward, ground, Atom, Example, GroundConfig, Template};

fn value(t: &Template, e: &Example, atom: &Atom) -> f64 {
    let net = build(&ground(t, e, &GroundConfig::default()).expect("grounds"), t);
    forward(&net, &t.params, &t.family).query(&net, atom).value
}

fn main() {
    let t = BRIGHT_EDGES.template();
    let g = BRIGHT_EDGES.example("g");
    for e in ["e1", "e2", "e3", "e4"] {
        println!(
            "isBright({e}) = {:.4}",
            value(&t, &g, &Atom::ground("isBright", &[e]))
        );
    }
    let target = Atom::ground("hasBrightEdge", &[]);
    println!("hasBrightEdge = {:.4}", value(&t, &g, &target));
    let more = g
        .clone()
        .with_fact(Atom::ground("edge", &["e5", "v1", "v2"]), 1.0);
    println!(
        "with a red-blue edge added = {:.4}",
        value(&t, &more, &target)
    );

    let t = HIGH_PRESSURE.template();
    let p = HIGH_PRESSURE.example("p");
    for who in ["alice", "bob"] {
        println!(
            "highPressure({who}) = {:.4}",
            value(&t, &p, &Atom::ground("highPressure", &[who]))
        );
    }
}
