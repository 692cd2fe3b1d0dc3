//! Converts an annotated sentence to event tuples and back.
//!
//! ```text
//! cargo run --example codec_tuples
//! ```

use evtuple::frame_codec::{
    augment_sentence, decode_frames, encode_frames, format_tuples, parse_tuples, ArgumentRecord, EventRecord,
    LabelSchema, Span,
};

fn main() -> evtuple::Result<()> {
    let schema = LabelSchema::new(["Movement:Transport", "Conflict:Attack"], ["Artifact", "Destination"])?;
    let tokens: Vec<&str> = "Orders went out today to deploy 17,000 U.S. Army soldiers in the Persian Gulf region ."
        .split(' ')
        .collect();
    let tags = vec!["X"; tokens.len()];
    let sentence = augment_sentence(&tokens, &tags, &tags, &vec!["O"; tokens.len()])?;

    let events = vec![EventRecord {
        trigger: Span::new(5, 5),
        event_type: "Movement:Transport".into(),
        arguments: vec![
            ArgumentRecord {
                span: Span::new(6, 9),
                role: "Artifact".into(),
            },
            ArgumentRecord {
                span: Span::new(11, 14),
                role: "Destination".into(),
            },
        ],
    }];
    let tuples = encode_frames(&sentence, &events, &schema)?;
    let text = format_tuples(&tuples, &schema);
    println!("tuples: {text}");
    assert_eq!(parse_tuples(&text, &schema)?, tuples);

    for event in decode_frames(&tuples, &sentence, &schema)? {
        println!("trigger {:?} ({})", event.trigger_text, event.event_type);
        for arg in &event.arguments {
            println!("  {:<12} {:?}", arg.role, arg.text);
        }
    }

    // A sentence without events is a single null tuple.
    let empty = encode_frames(&sentence, &[], &schema)?;
    println!("no events: {}", format_tuples(&empty, &schema));
    Ok(())
}
