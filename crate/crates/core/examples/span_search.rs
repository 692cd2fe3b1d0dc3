//! Picks a non-overlapping trigger and argument from pointer distributions.
//!
//! ```text
//! cargo run --example span_search
//! ```

use evtuple::inferencer::{argument_first, infer_tuple, trigger_first, InferenceOptions, StepDistributions};

fn normalize(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn main() {
    // Positions 0 and 1 are the sentinels; 2..8 are the sentence.
    // The trigger pointer favours token 4, but so does the argument pointer.
    let dist = StepDistributions {
        trigger_start: normalize(&[0.1, 0.0, 0.2, 0.3, 1.6, 0.1, 0.1, 0.1]),
        trigger_end: normalize(&[0.1, 0.0, 0.1, 0.2, 1.6, 0.3, 0.1, 0.1]),
        argument_start: normalize(&[0.0, 0.1, 0.2, 0.2, 1.5, 0.2, 0.9, 0.1]),
        argument_end: normalize(&[0.0, 0.1, 0.1, 0.1, 1.5, 0.2, 0.3, 1.0]),
        event_type: normalize(&[0.1, 0.7, 0.2]),
        role: normalize(&[0.3, 0.2, 0.5]),
    };
    let n = dist.trigger_start.len();
    let opts = InferenceOptions::default();

    let a = trigger_first(&dist, n, &opts);
    let b = argument_first(&dist, n, &opts);
    println!("trigger first:  trigger {} argument {}  score {:.5}", a.trigger, a.argument, a.score);
    println!("argument first: trigger {} argument {}  score {:.5}", b.trigger, b.argument, b.score);

    let tuple = infer_tuple(&dist, n, &opts);
    println!(
        "chosen tuple: {} {} type {} role {}",
        tuple.trigger, tuple.argument, tuple.event_type, tuple.role
    );

    let capped = InferenceOptions {
        max_argument_len: Some(2),
        ..opts
    };
    let tuple = infer_tuple(&dist, n, &capped);
    println!("with arguments capped at 2 tokens: argument {}", tuple.argument);
}
