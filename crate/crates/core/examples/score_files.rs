//! Scores a prediction file against gold, with breakdowns.
//!
//! ```text
//! cargo run --example score_files -- [pred.jsonl gold.jsonl]
//! ```
//!
//! Without arguments the bundled test fixture is scored.

use std::path::PathBuf;

use evtuple::evaluator::{score_with_breakdowns, ScoreOptions, BREAKDOWN_RULES};
use evtuple::inferencer::read_events_file;

fn main() -> evtuple::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (pred, gold) = match args.as_slice() {
        [p, g] => (p.clone(), g.clone()),
        _ => (fixtures.join("score_pred.jsonl"), fixtures.join("score_gold.jsonl")),
    };
    let predictions = read_events_file(&pred)?;
    let gold = read_events_file(&gold)?;
    let rules: Vec<String> = BREAKDOWN_RULES.iter().map(|r| r.to_string()).collect();

    let strict = score_with_breakdowns(&predictions, &gold, &rules, ScoreOptions::default())?;
    print!("{}", strict.to_table());
    println!(
        "TI correct {}/{} predicted, {} gold",
        strict.ti.correct, strict.ti.predicted, strict.ti.gold
    );

    let relaxed = score_with_breakdowns(&predictions, &gold, &[], ScoreOptions { relaxed_arguments: true })?;
    println!("argument identification without the event-type condition: F1 {:.3}", relaxed.ai.f1);
    Ok(())
}
