//! Compares backpropagated gradients with central finite differences on the
//! bright-edge network under the average-sigmoid family.

use lrnn::fixtures::BRIGHT_EDGES;
use lrnn::trainer::backward;
use lrnn::{build, forward, ground, ActivationFamily, Atom, GroundConfig};

fn main() {
    let t = BRIGHT_EDGES
        .template()
        .with_family(ActivationFamily::avg_sigmoid());
    let net = build(
        &ground(&t, &BRIGHT_EDGES.example("g"), &GroundConfig::default()).expect("grounds"),
        &t,
    );
    let target = Atom::ground("hasBrightEdge", &[]);
    let values = forward(&net, &t.params, &t.family);
    let grads = backward(&net, &t.params, &values, &[(target.clone(), 1.0)]);
    let h = 1e-6;
    for (i, id) in t.params.ids().iter().enumerate() {
        let mut p = t.params.clone();
        p.values_mut()[i] += h;
        let up = forward(&net, &p, &t.family).query(&net, &target).value;
        p.values_mut()[i] -= 2.0 * h;
        let down = forward(&net, &p, &t.family).query(&net, &target).value;
        println!(
            "{id:<24} analytic {:>12.8}  numeric {:>12.8}",
            grads.as_slice()[i],
            (up - down) / (2.0 * h)
        );
    }
}
