//! Out-of-process models over a line protocol.
//!
//! For every query the harness writes one line with the history as
//! space-separated token ids (an empty line for an empty history) and reads
//! one line back, either
//!
//! * `D p0 p1 ... p(V-1)`: a dense distribution, or
//! * `S id:p id:p ...`: a sparse one; the remaining mass is spread evenly
//!   over the ids not listed.
//!
//! Queries are serialized through a mutex, so one process serves a whole
//! (parallel) challenge run.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use super::{ModelError, SequenceModel, DISTRIBUTION_TOLERANCE};

struct Channel {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
}

pub struct ExternalModel {
    vocab_size: usize,
    channel: Mutex<Option<Channel>>,
    child: Option<Child>,
}

impl ExternalModel {
    /// Starts `command` with piped stdin/stdout.
    pub fn spawn(mut command: Command, vocab_size: usize) -> Result<Self, ModelError> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ModelError::Io(format!("cannot start model process: {e}")))?;
        let writer = child.stdin.take().expect("piped stdin");
        let reader = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut model = Self::from_streams(reader, writer, vocab_size);
        model.child = Some(child);
        Ok(model)
    }

    pub fn from_streams<R, W>(reader: R, writer: W, vocab_size: usize) -> Self
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        Self {
            vocab_size,
            channel: Mutex::new(Some(Channel { reader: Box::new(reader), writer: Box::new(writer) })),
            child: None,
        }
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved model exit
        if let Ok(mut channel) = self.channel.lock() {
            channel.take();
        }
        if let Some(child) = &mut self.child {
            let _ = child.wait();
        }
    }
}

/// Parses one response line into a distribution over `vocab_size` ids.
pub fn parse_response(line: &str, vocab_size: usize) -> Result<Vec<f64>, ModelError> {
    let protocol = |m: String| ModelError::Protocol(m);
    let mut fields = line.split_whitespace();
    let number = |s: &str| s.parse::<f64>().map_err(|_| protocol(format!("bad probability {s:?}")));
    match fields.next() {
        Some("D") => {
            let dist = fields.map(number).collect::<Result<Vec<f64>, _>>()?;
            if dist.len() != vocab_size {
                return Err(protocol(format!("dense line has {} values, expected {vocab_size}", dist.len())));
            }
            Ok(dist)
        }
        Some("S") => {
            let mut dist = vec![f64::NAN; vocab_size];
            let mut listed = 0usize;
            let mut mass = 0.0;
            for field in fields {
                let (id, p) = field.split_once(':').ok_or_else(|| protocol(format!("bad sparse entry {field:?}")))?;
                let id: usize = id.parse().map_err(|_| protocol(format!("bad token id {id:?}")))?;
                let p = number(p)?;
                let slot = dist.get_mut(id).ok_or(ModelError::TokenOutOfRange { id: id as u32, size: vocab_size })?;
                if !slot.is_nan() {
                    return Err(protocol(format!("token id {id} listed twice")));
                }
                *slot = p;
                listed += 1;
                mass += p;
            }
            let rest = 1.0 - mass;
            if rest < -DISTRIBUTION_TOLERANCE || (listed == vocab_size && rest.abs() > DISTRIBUTION_TOLERANCE) {
                return Err(ModelError::NotNormalized(mass));
            }
            let fill = if listed < vocab_size { rest.max(0.0) / (vocab_size - listed) as f64 } else { 0.0 };
            Ok(dist.into_iter().map(|p| if p.is_nan() { fill } else { p }).collect())
        }
        _ => Err(protocol(format!("expected a line starting with D or S, got {line:?}"))),
    }
}

impl SequenceModel for ExternalModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError> {
        let mut guard = self.channel.lock().map_err(|_| ModelError::Io("model channel poisoned".into()))?;
        let channel = guard.as_mut().ok_or_else(|| ModelError::Io("model channel closed".into()))?;
        let request: Vec<String> = history.iter().map(u32::to_string).collect();
        let io = |e: std::io::Error| ModelError::Io(e.to_string());
        writeln!(channel.writer, "{}", request.join(" ")).map_err(io)?;
        channel.writer.flush().map_err(io)?;
        let mut line = String::new();
        if channel.reader.read_line(&mut line).map_err(io)? == 0 {
            return Err(ModelError::Protocol("model closed its output".into()));
        }
        parse_response(&line, self.vocab_size)
    }
}
