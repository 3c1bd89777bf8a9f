use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pulseforge::sequences::{load, SequenceFile, NAMES};
use pulseforge::PulseSequence;

use crate::config::RunConfig;

/// Opens `path` for writing now, so a bad path fails before any compute.
pub fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes pretty JSON to `file`, or to stdout without one.
pub fn emit_json<S: Serialize>(value: &S, file: Option<File>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    let res = match file {
        Some(mut f) => writeln!(f, "{text}"),
        None => writeln!(std::io::stdout().lock(), "{text}"),
    };
    match res {
        // A closed pipe downstream (`| head`) is not an error here.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

/// Output wrapper: the resolved config next to the result.
#[derive(Serialize)]
pub struct Echo<'a, R: Serialize> {
    pub config: &'a RunConfig,
    pub result: R,
}

/// Built-in name, sequence file, or a `result.sequence` field inside a
/// search or recovery output.
pub fn load_sequence(source: &str) -> Result<PulseSequence> {
    if NAMES.contains(&source) {
        return Ok(load::<f64>(source)?.seq);
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!("{source:?} is neither a built-in sequence ({}) nor a file", NAMES.join(", "));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {source}"))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{source}: malformed JSON"))?;
    let inner = value.pointer("/result/sequence").cloned().unwrap_or(value);
    let file: SequenceFile = serde_json::from_value(inner).with_context(|| format!("{source}: not a sequence file"))?;
    let mut seq = file.to_sequence::<f64>().with_context(|| format!("{source}: invalid sequence"))?;
    if seq.label.is_empty() {
        seq.label = path.file_stem().map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
    }
    Ok(seq)
}

/// A `.json` config, or TOML otherwise. A JSON output with a `config`
/// field is accepted too, which re-runs an earlier command.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{}: malformed JSON", path.display()))?;
        let inner = value.get("config").cloned().unwrap_or(value);
        Ok(serde_json::from_value(inner).with_context(|| format!("{}: invalid config", path.display()))?)
    } else {
        Ok(toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))?)
    }
}

/// Fifteen significant digits.
pub fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn write_columns(file: File, header: [&str; 2], a: &[f64], b: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for (x, y) in a.iter().zip(b) {
        w.write_record([fmt15(*x), fmt15(*y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column CSV with a header row.
pub fn read_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad CSV", path.display()))?;
        let field = |k: usize| -> Result<f64> {
            let s =
                rec.get(k).with_context(|| format!("{} row {}: missing column {}", path.display(), i + 2, k + 1))?;
            s.trim().parse().with_context(|| format!("{} row {}: {s:?} is not a number", path.display(), i + 2))
        };
        a.push(field(0)?);
        b.push(field(1)?);
    }
    Ok((a, b))
}
