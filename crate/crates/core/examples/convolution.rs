//! A one-filter convolution over a row of five pixels: one rule neuron per
//! window position and a max over them.

use lrnn::fixtures::CNN;
use lrnn::netbuild::{NeuronKind, NeuronLabel};
use lrnn::{build, forward, ground, Atom, GroundConfig};

fn main() {
    let mut template = CNN.template();
    // learnable weights start at zero; pick a filter that likes a bright middle
    for (id, v) in [
        ("cnn:1", 1.0),
        ("cnn:2", 0.5),
        ("cnn:3", 2.0),
        ("cnn:4", 0.5),
    ] {
        template
            .params
            .set(&id.parse().expect("valid parameter id"), v);
    }
    let grounding =
        ground(&template, &CNN.example("image"), &GroundConfig::default()).expect("grounds");
    let net = build(&grounding, &template);
    let values = forward(&net, &template.params, &template.family);
    for n in &net.neurons {
        if let (NeuronKind::Rule, NeuronLabel::Rule(i)) = (n.kind, &n.label) {
            if i.head.predicate.name.as_ref() == "f1" {
                println!("window {} -> {:.4}", i.theta, values.get(n.id));
            }
        }
    }
    println!(
        "f1 = {:.4}",
        values.query(&net, &Atom::ground("f1", &[])).value
    );
}
