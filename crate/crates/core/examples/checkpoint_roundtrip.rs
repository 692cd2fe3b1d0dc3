//! Trains briefly, saves a checkpoint, reloads it and predicts new text.
//!
//! ```text
//! cargo run --release --example checkpoint_roundtrip -- [epochs]
//! ```

use evtuple::corpus::CorpusExample;
use evtuple::inferencer::{predict_corpus, InferenceOptions};
use evtuple::model::{EventModel, ModelConfig};
use evtuple::synth::{generate_synthetic, SynthConfig};
use evtuple::trainer::{train, TrainConfig};

fn main() -> evtuple::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let corpus = generate_synthetic(&SynthConfig {
        num_sentences: 100,
        seed: 5,
        ..SynthConfig::default()
    })?;
    let mut config = ModelConfig::reduced();
    config.encoder.d_ctx = 64;
    config.decoder.d_p = 64;
    let mut model = EventModel::for_corpus(&config, corpus.schema.clone(), &corpus.examples, 5)?;
    let summary = train(
        &mut model,
        &corpus.examples,
        &[],
        &TrainConfig {
            epochs,
            seed: 5,
            ..TrainConfig::default()
        },
        &mut |e| println!("epoch {} loss {:.3}", e.epoch, e.mean_loss),
    )?;

    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("model.safetensors");
    model.save(&path, serde_json::json!({ "max_tuples": summary.max_tuples }))?;
    println!("saved {} ({} parameters)", path.display(), model.num_parameters());

    let (loaded, extra) = EventModel::load(&path)?;
    let steps = extra["max_tuples"].as_u64().unwrap_or(1) as usize;

    // Fresh sentences from the same generator.
    let fresh = generate_synthetic(&SynthConfig {
        num_sentences: 3,
        seed: 500,
        ..SynthConfig::default()
    })?;
    let examples: Vec<CorpusExample> = fresh.examples;
    let before = predict_corpus(&model, &examples, steps, &InferenceOptions::default())?;
    let after = predict_corpus(&loaded, &examples, steps, &InferenceOptions::default())?;
    assert_eq!(before, after);
    for (example, predicted) in examples.iter().zip(&after) {
        println!("\n{}", example.sentence.raw_tokens().join(" "));
        for event in &predicted.events {
            println!("  {:?} {}", event.trigger, event.event_type);
            for arg in &event.arguments {
                println!("    {:?} {}", arg.span, arg.role);
            }
        }
    }
    Ok(())
}
