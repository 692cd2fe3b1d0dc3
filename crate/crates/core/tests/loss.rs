mod common;

use common::{gradient_check, looped_batch_loss, random_loss_case};
use evtuple::frame_codec::{EventTuple, Span};
use evtuple::inferencer::StepDistributions;
use evtuple::synth::{generate_synthetic, SynthConfig};
use evtuple::trainer::{batch_loss, tuple_loss};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn uniform(n: usize, p: usize, r: usize) -> StepDistributions {
    StepDistributions {
        trigger_start: vec![1.0 / n as f64; n],
        trigger_end: vec![1.0 / n as f64; n],
        argument_start: vec![1.0 / n as f64; n],
        argument_end: vec![1.0 / n as f64; n],
        event_type: vec![1.0 / (p + 1) as f64; p + 1],
        role: vec![1.0 / (r + 1) as f64; r + 1],
    }
}

#[test]
fn uniform_loss_has_closed_form() {
    for (n, p, r) in [(7, 3, 4), (12, 33, 35), (3, 1, 1), (40, 5, 6)] {
        let gold = EventTuple {
            trigger: Span::new(2, 2),
            argument: Span::new(1, 1),
            event_type: 1,
            role: 0,
        };
        let expected = 4.0 * (n as f64).ln() + ((p + 1) as f64).ln() + ((r + 1) as f64).ln();
        assert!((tuple_loss(&uniform(n, p, r), &gold) - expected).abs() < 1e-9);
    }
}

#[test]
fn certain_prediction_has_zero_loss() {
    let gold = EventTuple {
        trigger: Span::new(3, 4),
        argument: Span::new(2, 2),
        event_type: 2,
        role: 1,
    };
    let onehot = |len: usize, at: usize| (0..len).map(|i| if i == at { 1.0 } else { 0.0 }).collect();
    let d = StepDistributions {
        trigger_start: onehot(6, 3),
        trigger_end: onehot(6, 4),
        argument_start: onehot(6, 2),
        argument_end: onehot(6, 2),
        event_type: onehot(3, 2),
        role: onehot(3, 1),
    };
    assert_eq!(tuple_loss(&d, &gold), 0.0);
}

#[test]
fn batch_loss_matches_looped_reference() {
    let corpus = generate_synthetic(&SynthConfig {
        num_sentences: 60,
        seed: 11,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let (outputs, batch) = random_loss_case(&mut rng, &corpus);
        for pad in [true, false] {
            let got = batch_loss(&outputs, &batch, pad).unwrap().to_scalar::<f64>().unwrap();
            let want = looped_batch_loss(&outputs, &batch, pad);
            assert!((got - want).abs() < 1e-6, "case {case} pad {pad}: {got} vs {want}");
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let checks = gradient_check(17, 50);
    assert_eq!(checks.len(), 50);
    for c in &checks {
        assert!(c.relative_error < 1e-3, "{c:?}");
    }
}
