//! Trains one model per feature configuration and compares scores.
//!
//! ```text
//! cargo run --release --example feature_ablation -- [epochs]
//! ```

use evtuple::model::{EventModel, ModelConfig};
use evtuple::synth::{generate_synthetic, SynthConfig};
use evtuple::trainer::{evaluate, train, TrainConfig};

fn main() -> evtuple::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let corpus = generate_synthetic(&SynthConfig {
        num_sentences: 120,
        seed: 3,
        ..SynthConfig::default()
    })?;
    let held_out = generate_synthetic(&SynthConfig {
        num_sentences: 40,
        seed: 1003,
        ..SynthConfig::default()
    })?;

    let mut base = ModelConfig::reduced();
    base.encoder.d_ctx = 64;
    base.decoder.d_p = 64;
    base.encoder.contextual.ffn = 128;

    println!("{:<10} {:>6} {:>7} {:>7} {:>7} {:>7}", "features", "d_h", "TI", "TC", "AI", "ARC");
    for name in ["all", "-pos", "-dep", "-ent", "-char"] {
        let mut config = base.clone();
        match name {
            "-pos" => config.encoder.use_pos = false,
            "-dep" => config.encoder.use_dep = false,
            "-ent" => config.encoder.use_ent = false,
            "-char" => config.encoder.use_char = false,
            _ => {}
        }
        let mut model = EventModel::for_corpus(&config, corpus.schema.clone(), &corpus.examples, 3)?;
        let summary = train(
            &mut model,
            &corpus.examples,
            &[],
            &TrainConfig {
                epochs,
                seed: 3,
                ..TrainConfig::default()
            },
            &mut |_| {},
        )?;
        let r = evaluate(&model, &held_out.examples, summary.max_tuples)?;
        println!(
            "{:<10} {:>6} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            name,
            config.encoder.width(),
            r.ti.f1,
            r.tc.f1,
            r.ai.f1,
            r.arc.f1
        );
    }
    Ok(())
}
