//! Generates a synthetic corpus and shows what the generator put in it.
//!
//! ```text
//! cargo run --example synth_corpus -- [num_sentences] [seed]
//! ```

use evtuple::frame_codec::format_tuples;
use evtuple::synth::{generate_synthetic, observed_flags, SynthConfig};

fn main() -> evtuple::Result<()> {
    let mut args = std::env::args().skip(1);
    let num_sentences = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let corpus = generate_synthetic(&SynthConfig {
        num_sentences,
        overlap_arg_rate: 0.2,
        seed,
        ..SynthConfig::default()
    })?;

    println!("event types: {:?}", &corpus.schema.event_types()[1..]);
    println!("roles:       {:?}", &corpus.schema.role_types()[1..]);
    let count = |f: fn(&evtuple::synth::SentenceFlags) -> bool| corpus.flags.iter().filter(|x| f(x)).count();
    println!(
        "{} sentences: {} multi-event, {} shared argument, {} overlapping arguments",
        corpus.examples.len(),
        count(|f| f.multi_event),
        count(|f| f.shared_arg),
        count(|f| f.overlap_arg),
    );
    // Flags are recomputable from the gold annotation alone.
    assert!(corpus.records.iter().zip(&corpus.flags).all(|(r, f)| observed_flags(r) == *f));

    for example in corpus.examples.iter().take(5) {
        println!("\n{}", example.sentence.raw_tokens().join(" "));
        println!("  {}", format_tuples(&example.gold, &corpus.schema));
    }
    Ok(())
}
