//! Report envelopes and writers. JSON reports carry the input digest, the
//! library version and the arithmetic precision; field order is fixed so
//! equal inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Bits of precision used for archimedean logarithms.
pub const EFFECTIVE_PRECISION_BITS: u32 = 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Digest of the input files, in the order given.
pub fn input_digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub input_sha256: &'a str,
    pub precision_bits: u32,
    pub requested_precision_bits: u32,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn json_report<T: Serialize>(command: &str, digest: &str, requested_bits: u32, body: &T) -> String {
    let env = Envelope {
        command,
        version: env!("CARGO_PKG_VERSION"),
        input_sha256: digest,
        precision_bits: EFFECTIVE_PRECISION_BITS.min(requested_bits),
        requested_precision_bits: requested_bits,
        body,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Floats in reports use Rust's shortest round-trip form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn emit(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_string(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
