//! Learns latent atom-type groups on generated molecules labeled by the
//! presence of an O-H bond, then cross-validates.
//!
//! Run with `--release`; a debug build is several times slower.

use lrnn::cli::{cross_validate, XvalConfig};
use lrnn::fixtures::{molecule_queries, SOFT_CLUSTERING};
use lrnn::trainer::{TrainConfig, Trainer, TrainingTask};
use lrnn::GroundConfig;

fn main() {
    let template = SOFT_CLUSTERING.template();
    let examples = SOFT_CLUSTERING.examples();
    let queries = molecule_queries();
    let config = TrainConfig {
        learning_rate: 10.0,
        epochs: 200,
        restarts: 5,
        ..TrainConfig::default()
    };
    let task = TrainingTask::new(
        template.clone(),
        examples.clone(),
        queries.clone(),
        config.clone(),
    )
    .expect("valid task");
    let trainer = Trainer::new(&task).expect("grounds");
    let (params, report) = trainer.train().expect("trains");
    println!(
        "best restart {} final cost {:.5}",
        report.best_restart, report.best_cost
    );
    println!("training accuracy {:.3}", trainer.accuracy(&params));
    for (id, v) in params.iter().filter(|(id, _)| !id.is_offset()).take(12) {
        println!("  {id} = {v:.3}");
    }

    let xval = XvalConfig {
        folds: 5,
        learning_rates: vec![3.0, 10.0],
        restarts: vec![5],
        base: config,
    };
    let report = cross_validate(
        &template,
        &examples,
        &queries,
        &xval,
        &GroundConfig::default(),
    )
    .expect("cross-validates");
    print!("{}", report.to_csv());
}
