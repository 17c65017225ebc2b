//! Reference server for the external-classifier wire protocol, used in tests.
//!
//! Usage: `comte-wire-stub <mode> [arg]` where mode is one of
//!
//! - `uniform`: every row is `[0.5, 0.5]`
//! - `scaled <factor>`: every row is `[0.5·factor, 0.5·factor]`
//! - `builtin <model-file>`: serves a built-in model
//! - `malformed`, `wrong-id`, `error`, `exit`, `short`: answer the handshake
//!   normally, then misbehave on every predict request

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use serde_json::{json, Value};

use comte::classifier::BuiltinModel;
use comte::{Classifier, MetricSchema, MultivariateSample};

enum Mode {
    Uniform,
    Scaled(f64),
    Builtin(BuiltinModel),
    Malformed,
    WrongId,
    Error,
    Exit,
    Short,
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = match args.first().map(String::as_str) {
        Some("uniform") => Mode::Uniform,
        Some("scaled") => Mode::Scaled(args[1].parse().expect("numeric factor")),
        Some("builtin") => {
            let text = std::fs::read_to_string(&args[1]).expect("readable model file");
            Mode::Builtin(serde_json::from_str(&text).expect("valid model"))
        }
        Some("malformed") => Mode::Malformed,
        Some("wrong-id") => Mode::WrongId,
        Some("error") => Mode::Error,
        Some("exit") => Mode::Exit,
        Some("short") => Mode::Short,
        other => {
            eprintln!("unknown mode {other:?}");
            std::process::exit(2);
        }
    };
    let class_names: Vec<String> = match &mode {
        Mode::Builtin(model) => model.class_names().to_vec(),
        _ => vec!["a".into(), "b".into()],
    };

    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    let mut schema: Option<Arc<MetricSchema>> = None;
    for line in stdin.lock().lines() {
        let line = line.expect("readable stdin");
        let request: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                writeln!(stdout, "{}", json!({"id": null, "error": e.to_string()})).unwrap();
                stdout.flush().unwrap();
                continue;
            }
        };
        let id = request["id"].clone();
        let reply = match request["op"].as_str() {
            Some("handshake") => {
                let names: Vec<String> = serde_json::from_value(request["metrics"].clone()).expect("metric names");
                let length = request["length"].as_u64().expect("length") as usize;
                schema = Some(Arc::new(MetricSchema::new(names, length).expect("valid schema")));
                json!({"id": id, "class_names": class_names}).to_string()
            }
            Some("predict") => {
                let samples = request["samples"].as_array().cloned().unwrap_or_default();
                match &mode {
                    Mode::Malformed => "{\"id\": not json".to_string(),
                    Mode::WrongId => json!({"id": id.as_u64().unwrap_or(0) + 1, "probabilities": []}).to_string(),
                    Mode::Error => json!({"id": id, "error": "model failure"}).to_string(),
                    Mode::Exit => std::process::exit(3),
                    Mode::Short => json!({"id": id, "probabilities": [], "class_names": class_names}).to_string(),
                    Mode::Uniform | Mode::Scaled(_) => {
                        let factor = if let Mode::Scaled(f) = mode { f } else { 1.0 };
                        let rows: Vec<[f64; 2]> = samples.iter().map(|_| [0.5 * factor, 0.5 * factor]).collect();
                        json!({"id": id, "probabilities": rows, "class_names": class_names}).to_string()
                    }
                    Mode::Builtin(model) => {
                        let schema = schema.clone().expect("handshake before predict");
                        let rows: Result<Vec<Vec<f64>>, String> = samples
                            .iter()
                            .enumerate()
                            .map(|(i, s)| {
                                let rows: Vec<Vec<f64>> =
                                    serde_json::from_value(s.clone()).map_err(|e| e.to_string())?;
                                let x = MultivariateSample::from_rows(schema.clone(), format!("r{i}"), None, &rows)
                                    .map_err(|e| e.to_string())?;
                                Ok(model.predict(&x).map_err(|e| e.to_string())?.values().to_vec())
                            })
                            .collect();
                        match rows {
                            Ok(rows) => json!({"id": id, "probabilities": rows, "class_names": class_names}),
                            Err(e) => json!({"id": id, "error": e}),
                        }
                        .to_string()
                    }
                }
            }
            _ => json!({"id": id, "error": "unknown op"}).to_string(),
        };
        writeln!(stdout, "{reply}").unwrap();
        stdout.flush().unwrap();
    }
}
