//! Client for classifiers running in a child process.
//!
//! Messages are single-line JSON objects over the child's stdin/stdout. The
//! client first sends a handshake and then one `predict` request per batch:
//!
//! ```text
//! → {"id":0,"op":"handshake","metrics":["cpu","mem"],"length":2}
//! ← {"id":0,"class_names":["healthy","leak"]}
//! → {"id":1,"op":"predict","metrics":["cpu","mem"],"samples":[[[0.1,0.2],[0.3,0.4]]]}
//! ← {"id":1,"probabilities":[[0.9,0.1]],"class_names":["healthy","leak"]}
//! ```
//!
//! A server may answer any request with `{"id":n,"error":"message"}`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use crate::classifier::Classifier;
use crate::probability::ClassProbabilities;
use crate::sample::{MetricSchema, MultivariateSample};

#[derive(Debug, Error)]
pub enum WireError {
    #[error("failed to start classifier command {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("classifier process exited ({status})")]
    Exited { status: String },

    #[error("i/o error talking to classifier: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed response: {message}; payload: {payload}")]
    Malformed { message: String, payload: String },

    #[error("response id {got} does not match request id {expected}; payload: {payload}")]
    IdMismatch { expected: u64, got: String, payload: String },

    #[error("classifier reported an error: {message}; payload: {payload}")]
    Remote { message: String, payload: String },

    #[error("invalid probabilities: {message}; payload: {payload}")]
    InvalidRows { message: String, payload: String },

    #[error("sample schema does not match the handshake schema: {0}")]
    Schema(String),
}

impl WireError {
    pub fn code(&self) -> &'static str {
        match self {
            WireError::Spawn { .. } => "wire-spawn",
            WireError::Exited { .. } => "wire-exited",
            WireError::Io(_) => "wire-io",
            WireError::Malformed { .. } => "wire-malformed",
            WireError::IdMismatch { .. } => "wire-id-mismatch",
            WireError::Remote { .. } => "wire-remote",
            WireError::InvalidRows { .. } => "wire-invalid-probabilities",
            WireError::Schema(_) => "wire-schema",
        }
    }

    /// The raw response line, when the error came from one.
    pub fn payload(&self) -> Option<&str> {
        match self {
            WireError::Malformed { payload, .. }
            | WireError::IdMismatch { payload, .. }
            | WireError::Remote { payload, .. }
            | WireError::InvalidRows { payload, .. } => Some(payload),
            _ => None,
        }
    }
}

struct Connection {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

impl Connection {
    fn exited(&mut self) -> WireError {
        // Give a dying process a moment so the status is available.
        let deadline = Instant::now() + Duration::from_millis(500);
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(status)) => break status.to_string(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                Ok(None) => break "closed its output".to_string(),
                Err(e) => break e.to_string(),
            }
        };
        WireError::Exited { status }
    }

    /// Sends `request` (with its id filled in) and returns the parsed reply.
    fn round_trip(&mut self, mut request: Value) -> Result<(Value, String), WireError> {
        let id = self.next_id;
        self.next_id += 1;
        request["id"] = json!(id);
        let mut line = request.to_string();
        line.push('\n');
        let stdin = self.stdin.as_mut().ok_or_else(|| WireError::Exited {
            status: "stdin closed".into(),
        })?;
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()) {
            return Err(if e.kind() == std::io::ErrorKind::BrokenPipe {
                self.exited()
            } else {
                e.into()
            });
        }

        let mut payload = String::new();
        if self.stdout.read_line(&mut payload)? == 0 {
            return Err(self.exited());
        }
        let payload = payload.trim_end().to_string();
        let malformed = |message: &str| WireError::Malformed {
            message: message.to_string(),
            payload: payload.clone(),
        };
        let value: Value = serde_json::from_str(&payload).map_err(|e| malformed(&e.to_string()))?;
        if !value.is_object() {
            return Err(malformed("response is not a JSON object"));
        }
        match value.get("id").and_then(Value::as_u64) {
            Some(got) if got == id => {}
            got => {
                return Err(WireError::IdMismatch {
                    expected: id,
                    got: got.map_or_else(|| value.get("id").map_or("none".into(), Value::to_string), |g| g.to_string()),
                    payload,
                })
            }
        }
        if let Some(error) = value.get("error") {
            return Err(WireError::Remote {
                message: error.as_str().map_or_else(|| error.to_string(), str::to_string),
                payload,
            });
        }
        Ok((value, payload))
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        // Closing stdin asks a well-behaved server to exit.
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_secs(1);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A classifier served by a child process. Requests are serialized over one
/// connection, so [`supports_concurrency`](Classifier::supports_concurrency)
/// is `false`.
pub struct ExternalClassifier {
    schema: Arc<MetricSchema>,
    class_names: Arc<[String]>,
    connection: Mutex<Connection>,
}

impl ExternalClassifier {
    /// Runs `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, schema: Arc<MetricSchema>) -> Result<Self, WireError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| WireError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        let mut connection = Connection {
            child,
            stdin: Some(stdin),
            stdout,
            next_id: 0,
        };
        let (reply, payload) = connection.round_trip(json!({
            "id": 0,
            "op": "handshake",
            "metrics": schema.names(),
            "length": schema.length(),
        }))?;
        let class_names = parse_class_names(&reply).ok_or_else(|| WireError::Malformed {
            message: "handshake reply needs a non-empty list of distinct class_names".into(),
            payload,
        })?;
        Ok(Self {
            schema,
            class_names: class_names.into(),
            connection: Mutex::new(connection),
        })
    }

    pub fn schema(&self) -> &Arc<MetricSchema> {
        &self.schema
    }

    fn request(&self, samples: &[&MultivariateSample]) -> Result<Vec<ClassProbabilities>, WireError> {
        for s in samples {
            self.schema
                .ensure_same(s.schema())
                .map_err(|e| WireError::Schema(e.to_string()))?;
        }
        let body: Vec<Vec<&[f64]>> = samples.iter().map(|s| s.rows().collect()).collect();
        let mut connection = self.connection.lock().unwrap_or_else(|p| p.into_inner());
        let (reply, payload) = connection.round_trip(json!({
            "id": 0,
            "op": "predict",
            "metrics": self.schema.names(),
            "samples": body,
        }))?;
        drop(connection);

        let invalid = |message: String| WireError::InvalidRows {
            message,
            payload: payload.clone(),
        };
        if let Some(names) = reply.get("class_names") {
            if parse_class_names(&reply).as_deref() != Some(&self.class_names[..]) {
                return Err(WireError::Malformed {
                    message: format!("class_names {names} differ from the handshake"),
                    payload,
                });
            }
        }
        let rows = reply
            .get("probabilities")
            .and_then(Value::as_array)
            .ok_or_else(|| WireError::Malformed {
                message: "missing probabilities array".into(),
                payload: payload.clone(),
            })?;
        if rows.len() != samples.len() {
            return Err(invalid(format!("{} rows for {} samples", rows.len(), samples.len())));
        }
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                let values: Vec<f64> = row
                    .as_array()
                    .and_then(|r| r.iter().map(Value::as_f64).collect())
                    .ok_or_else(|| invalid(format!("row {i} is not an array of numbers")))?;
                ClassProbabilities::from_external(self.class_names.clone(), values)
                    .map_err(|e| invalid(format!("row {i}: {e}")))
            })
            .collect()
    }
}

fn parse_class_names(reply: &Value) -> Option<Vec<String>> {
    let names: Vec<String> = reply
        .get("class_names")?
        .as_array()?
        .iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect::<Option<_>>()?;
    let distinct: std::collections::HashSet<&String> = names.iter().collect();
    (!names.is_empty() && distinct.len() == names.len()).then_some(names)
}

impl Classifier for ExternalClassifier {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn predict(&self, sample: &MultivariateSample) -> crate::Result<ClassProbabilities> {
        Ok(self.request(&[sample])?.pop().expect("one row per sample"))
    }

    fn predict_batch(&self, samples: &[&MultivariateSample]) -> crate::Result<Vec<ClassProbabilities>> {
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.request(samples)?)
    }

    fn supports_concurrency(&self) -> bool {
        false
    }
}
