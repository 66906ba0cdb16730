//! JSON-lines event files, one per session.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{FieldError, Result};
use crate::events::Event;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> FieldError + '_ {
    move |source| FieldError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.jsonl"))
}

/// Appends events to a session file, flushing after every batch.
#[derive(Debug)]
pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
    written: usize,
}

impl LogWriter {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io(dir))?;
        }
        let file = OpenOptions::new()
            .create_new(true)
            .write(true)
            .open(&path)
            .map_err(io(&path))?;
        Ok(Self {
            out: BufWriter::new(file),
            path,
            written: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes `events[written..]`.
    pub fn sync(&mut self, events: &[Event]) -> Result<()> {
        for e in &events[self.written..] {
            let line = serde_json::to_string(e).expect("events serialise");
            writeln!(self.out, "{line}").map_err(io(&self.path))?;
        }
        self.out.flush().map_err(io(&self.path))?;
        self.written = events.len();
        Ok(())
    }
}

pub fn to_jsonl(events: &[Event]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&serde_json::to_string(e).expect("events serialise"));
        s.push('\n');
    }
    s
}

/// Parses a log. An unterminated final line is treated as a torn write
/// and dropped; any other malformed line is an error.
pub fn parse_jsonl(text: &str) -> Result<Vec<Event>> {
    let complete = text.rfind('\n').map_or("", |i| &text[..=i]);
    let tail = &text[complete.len()..];
    let mut out = Vec::new();
    for (n, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: Event = serde_json::from_str(line)
            .map_err(|err| FieldError::Corrupt(format!("line {}: {err}", n + 1)))?;
        out.push(e);
    }
    if !tail.trim().is_empty() {
        if let Ok(e) = serde_json::from_str::<Event>(tail) {
            out.push(e);
        } else {
            tracing::warn!("dropping torn final log line");
        }
    }
    Ok(out)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<Event>> {
    let path = path.as_ref();
    parse_jsonl(&fs::read_to_string(path).map_err(io(path))?)
}
