//! Report headers: run configuration and a digest of the inputs.

use sha2::{Digest, Sha256};

/// Ordered `key=value` pairs written into every output.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    command: String,
    entries: Vec<(String, String)>,
    input_sha256: String,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), ..Self::default() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn set_inputs(&mut self, digest: String) -> &mut Self {
        self.input_sha256 = digest;
        self
    }

    /// Header lines without the comment marker.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!("leadsheet {} {}", self.command, env!("CARGO_PKG_VERSION"))];
        out.extend(self.entries.iter().map(|(k, v)| format!("config.{k}={v}")));
        out.push(format!("input_sha256={}", self.input_sha256));
        out
    }

    /// Header as `# `-prefixed lines.
    pub fn header(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }

    /// Single-line form for binary outputs.
    pub fn one_line(&self) -> String {
        self.lines().join("; ")
    }
}

/// SHA-256 over the inputs in order, each prefixed by its length.
#[derive(Default)]
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn add(&mut self, bytes: &[u8]) {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn hex(self) -> String {
        self.0.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
