//! Batch front end: parses arguments, runs one subcommand, embeds the run
//! manifest hash in every JSON output and writes files atomically.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

pub use args::{Cli, Command, Format, GlobalOpts};
pub use error::{CliError, CliResult, EXIT_INPUT, EXIT_OK, EXIT_VIOLATION};
pub use manifest::{InputDigest, RunManifest};

/// A file produced by a command, relative to the output directory.
#[derive(Debug, Clone)]
pub enum OutFile {
    /// Written with the manifest hash embedded.
    Json(Value),
    Raw(Vec<u8>),
}

/// Rows for CSV output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub result: Value,
    /// Set when the input violates a domain condition (exit code 1).
    pub violation: Option<String>,
    pub table: Option<Table>,
    pub files: Vec<(PathBuf, OutFile)>,
}

/// Per-run state: global options, recorded inputs, parameters and tolerances.
pub struct Ctx<'a> {
    pub global: &'a GlobalOpts,
    inputs: RefCell<Vec<InputDigest>>,
    params: RefCell<BTreeMap<String, String>>,
    tolerances: RefCell<BTreeMap<String, f64>>,
}

impl<'a> Ctx<'a> {
    pub fn new(global: &'a GlobalOpts) -> Self {
        Self {
            global,
            inputs: RefCell::new(vec![]),
            params: RefCell::new(BTreeMap::new()),
            tolerances: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn param(&self, key: &str, value: impl ToString) {
        self.params.borrow_mut().insert(key.to_string(), value.to_string());
    }

    /// `--tol` when given, otherwise `default`; recorded under `key`.
    pub fn tol(&self, key: &str, default: f64) -> f64 {
        let t = self.global.tol.unwrap_or(default);
        self.tolerances.borrow_mut().insert(key.to_string(), t);
        t
    }

    pub fn fixed_tol(&self, key: &str, value: f64) {
        self.tolerances.borrow_mut().insert(key.to_string(), value);
    }

    pub fn read(&self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            message: e.to_string(),
            schema: "a readable file",
        })?;
        self.inputs.borrow_mut().push(InputDigest::new(path, &bytes));
        Ok(bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &Path, schema: &'static str) -> CliResult<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            message: e.to_string(),
            schema,
        })
    }

    /// Records every file under `dir` in sorted order.
    pub fn record_dir(&self, dir: &Path) -> CliResult<()> {
        let mut files = vec![];
        collect_files(dir, &mut files).map_err(|e| CliError::Input {
            path: dir.display().to_string(),
            message: e.to_string(),
            schema: "a bundle directory",
        })?;
        files.sort();
        for f in files {
            let bytes = std::fs::read(&f)?;
            let rel = f.strip_prefix(dir).unwrap_or(&f);
            let mut d = InputDigest::new(&f, &bytes);
            d.name = rel.display().to_string();
            self.inputs.borrow_mut().push(d);
        }
        Ok(())
    }

    pub fn manifest(&self, subcommand: &str) -> RunManifest {
        RunManifest::new(
            subcommand,
            self.params.borrow().clone(),
            self.inputs.borrow().clone(),
            self.global.seed,
            self.tolerances.borrow().clone(),
            self.global.out.as_deref(),
        )
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Wraps a JSON value with the command name and manifest hash.
pub fn stamp(command: &str, hash: &str, result: &Value) -> Value {
    json!({
        "command": command,
        "manifest_hash": hash,
        "result": result,
    })
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Top-level scalars as `key,value` rows.
fn scalar_table(v: &Value) -> Table {
    let mut t = Table {
        header: vec!["key".into(), "value".into()],
        rows: vec![],
    };
    if let Value::Object(map) = v {
        for (k, x) in map {
            let s = match x {
                Value::String(s) => s.clone(),
                Value::Number(_) | Value::Bool(_) | Value::Null => x.to_string(),
                _ => continue,
            };
            t.rows.push(vec![k.clone(), s]);
        }
    }
    t
}

/// Result of [`run`]: the exit code and what went to standard output.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: i32,
    pub stdout: Vec<u8>,
    pub manifest: RunManifest,
}

/// Runs one parsed command line, writing outputs under `--out` when given.
pub fn run(cli: &Cli) -> CliResult<RunReport> {
    let ctx = Ctx::new(&cli.global);
    let name = cli.command.name();
    let outcome = commands::dispatch(&cli.command, &ctx)?;
    let manifest = ctx.manifest(name);
    let hash = manifest.config_hash.clone();
    let stamped = stamp(name, &hash, &outcome.result);

    if let Some(dir) = &cli.global.out {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("manifest.json"), &pretty(&serde_json::to_value(&manifest).expect("serializable")))?;
        write_atomic(&dir.join("result.json"), &pretty(&stamped))?;
        for (rel, file) in &outcome.files {
            let bytes = match file {
                OutFile::Json(v) => pretty(&stamp(name, &hash, v)),
                OutFile::Raw(b) => b.clone(),
            };
            write_atomic(&dir.join(rel), &bytes)?;
        }
    }

    let stdout = match cli.global.format {
        Format::Json => pretty(&stamped),
        Format::Csv => match &outcome.table {
            Some(t) => t.to_csv()?,
            None => scalar_table(&outcome.result).to_csv()?,
        },
    };
    let exit_code = match &outcome.violation {
        Some(v) => {
            log::warn!("{name}: {v}");
            EXIT_VIOLATION
        }
        None => EXIT_OK,
    };
    Ok(RunReport {
        exit_code,
        stdout,
        manifest,
    })
}

/// Parses `argv` and runs; returns the exit code and writes to the given streams.
pub fn main_with<W: Write, E: Write>(argv: &[String], out: &mut W, err: &mut E) -> i32 {
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(if code == EXIT_OK { out as &mut dyn Write } else { err as &mut dyn Write }, "{e}");
            return code;
        }
    };
    match run(&cli) {
        Ok(r) => {
            let _ = out.write_all(&r.stdout);
            r.exit_code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
