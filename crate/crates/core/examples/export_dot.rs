//! Prints the ground network of H2 for the explosiveness template as DOT.
//! Pipe into `dot -Tsvg` to draw it.

use lrnn::fixtures::EXPLOSIVE;
use lrnn::netbuild::export_dot;
use lrnn::{build, ground, GroundConfig};

fn main() {
    let t = EXPLOSIVE.template();
    let net = build(
        &ground(&t, &EXPLOSIVE.example("m1"), &GroundConfig::default()).expect("grounds"),
        &t,
    );
    print!("{}", export_dot(&net, &t.params));
}
