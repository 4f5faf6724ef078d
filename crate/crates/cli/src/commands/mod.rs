//! One module per subcommand plus the shared output plumbing. Every command
//! emits a machine-readable JSON document (stdout or `--out`) that echoes the
//! effective configuration, and a short human summary on stderr.

pub mod benchmark;
pub mod inspect;
pub mod register;
pub mod synth;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use zeroreg_core::bench::SceneSpec;
use zeroreg_core::{Error, Result};

/// Writes the output document as pretty-printed JSON to `out` or stdout.
pub fn emit_document<T: Serialize>(doc: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize output document: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: PathBuf::from("(stdout)"),
                source: e,
            }),
    }
}

/// Loads a scene-spec file: a JSON array of scene specs, each validated.
/// Parse failures report the byte offset inside the file.
pub fn load_specs(path: &Path) -> Result<Vec<SceneSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let specs: Vec<SceneSpec> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        detail: e.to_string(),
    })?;
    for (index, spec) in specs.iter().enumerate() {
        spec.validate()
            .map_err(|e| Error::InvalidArgument(format!("{}: spec[{index}]: {e}", path.display())))?;
    }
    Ok(specs)
}

/// Byte position of a 1-based line/column pair, for parse diagnostics.
fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let skipped: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (skipped + column.saturating_sub(1)) as u64
}

/// Formats an optional statistic, `n/a` when no pair produced it.
pub fn opt_stat(value: Option<f64>, precision: usize) -> String {
    match value {
        Some(v) => format!("{v:.precision$}"),
        None => "n/a".into(),
    }
}
