//! The report envelope shared by every subcommand, and its two renderings.

use std::fmt;

use quiverkit_core::Error;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub version: String,
    pub seed: Option<u64>,
    pub result: Value,
    /// Human-readable lines for `--format text`.
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    pub fn new(command: &str, inputs: &[&[u8]], seed: Option<u64>, result: Value, text: Vec<String>) -> Self {
        Report {
            command: command.to_string(),
            input_digest: digest(inputs),
            version: VERSION.to_string(),
            seed,
            result,
            text,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports serialize");
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let seed = self.seed.map(|s| format!(", seed {s}")).unwrap_or_default();
        let mut out = format!(
            "# {} (input {}, quiverkit {}{seed})\n",
            self.command,
            &self.input_digest[..16],
            self.version
        );
        for line in &self.text {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// SHA-256 over the inputs, each prefixed by its length so that
/// concatenations cannot collide.
pub fn digest(inputs: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for input in inputs {
        hasher.update((input.len() as u64).to_le_bytes());
        hasher.update(input);
    }
    hex::encode(hasher.finalize())
}

/// A failure with its process exit code.
#[derive(Debug, Clone)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const INPUT: u8 = 2;
    pub const REFUSAL: u8 = 3;
    pub const INTERNAL: u8 = 4;

    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: Self::INPUT,
            message: message.into(),
        }
    }

    pub fn refusal(message: impl Into<String>) -> Self {
        Failure {
            code: Self::REFUSAL,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: Self::INTERNAL,
            message: message.into(),
        }
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(self, path: &str) -> Self {
        Failure {
            code: self.code,
            message: format!("{path}: {}", self.message),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = if err.is_input_error() {
            Self::INPUT
        } else if err.is_refusal() {
            Self::REFUSAL
        } else {
            Self::INTERNAL
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
