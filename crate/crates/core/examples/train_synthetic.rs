//! Trains a reduced model on a generated corpus and scores it on held-out data.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [seed]
//! ```

use evtuple::model::{EventModel, ModelConfig};
use evtuple::synth::{generate_synthetic, SynthConfig};
use evtuple::trainer::{evaluate, train, TrainConfig};

fn main() -> evtuple::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let corpus = generate_synthetic(&SynthConfig {
        num_sentences: 200,
        seed,
        ..SynthConfig::default()
    })?;
    let held_out = generate_synthetic(&SynthConfig {
        num_sentences: 50,
        seed: seed + 1000,
        ..SynthConfig::default()
    })?;

    let config = ModelConfig::reduced();
    let mut model = EventModel::for_corpus(&config, corpus.schema.clone(), &corpus.examples, seed)?;
    println!("parameters: {}", model.num_parameters());

    let train_config = TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    };
    let summary = train(
        &mut model,
        &corpus.examples,
        &held_out.examples,
        &train_config,
        &mut |e| {
            let dev = e.dev.expect("held-out set is non-empty");
            println!(
                "epoch {:>2}  loss {:>8.4}  dev TI {:.3} TC {:.3} AI {:.3} ARC {:.3}  ({:.1}s)",
                e.epoch, e.mean_loss, dev.ti, dev.tc, dev.ai, dev.arc, e.seconds
            );
        },
    )?;
    println!("kept epoch {}", summary.best_epoch);
    let steps = summary.max_tuples;
    let on_train = evaluate(&model, &corpus.examples, steps)?;
    let on_dev = evaluate(&model, &held_out.examples, steps)?;
    println!("train\n{}", on_train.to_table());
    println!("held-out\n{}", on_dev.to_table());
    Ok(())
}
