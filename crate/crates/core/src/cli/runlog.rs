use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value as Json;

use super::CliError;
use crate::evolution::{EventSink, Population, RunEvent};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const POPULATIONS_DIR: &str = "populations";

#[derive(Serialize)]
struct Line<'a> {
    seq: u64,
    timestamp: String,
    #[serde(flatten)]
    event: &'a RunEvent,
}

/// Appends events to `events.jsonl` (one JSON object per line with a
/// monotone `seq` and a wall-clock `timestamp`) and writes population
/// snapshots to `populations/gen_XXXX.json`.
pub struct RunLogWriter {
    dir: PathBuf,
    out: BufWriter<File>,
    seq: u64,
    events: Vec<RunEvent>,
}

impl RunLogWriter {
    pub fn create(run_dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(run_dir.join(POPULATIONS_DIR))?;
        let out = BufWriter::new(File::create(run_dir.join(EVENTS_FILE))?);
        Ok(Self {
            dir: run_dir.to_path_buf(),
            out,
            seq: 0,
            events: Vec::new(),
        })
    }

    /// Events written so far.
    pub fn events(&self) -> &[RunEvent] {
        &self.events
    }

    pub fn finish(mut self) -> std::io::Result<Vec<RunEvent>> {
        self.out.flush()?;
        Ok(self.events)
    }
}

impl EventSink for RunLogWriter {
    fn emit(&mut self, event: &RunEvent) -> std::io::Result<()> {
        self.seq += 1;
        let line = Line {
            seq: self.seq,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
            event,
        };
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.events.push(event.clone());
        Ok(())
    }

    fn population(&mut self, generation: u32, population: &Population) -> std::io::Result<()> {
        let path = self
            .dir
            .join(POPULATIONS_DIR)
            .join(format!("gen_{generation:04}.json"));
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, population)?;
        Ok(())
    }
}

/// One line of `events.jsonl` with the timestamp removed.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEvent {
    pub seq: u64,
    /// The line without its `timestamp` field; this is what replay compares.
    pub record: Json,
}

impl LoggedEvent {
    pub fn event(&self) -> Result<RunEvent, CliError> {
        let mut v = self.record.clone();
        if let Some(o) = v.as_object_mut() {
            o.remove("seq");
        }
        serde_json::from_value(v)
            .map_err(|e| CliError::IncompleteRun(format!("event {}: {e}", self.seq)))
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LoggedEvent>, CliError> {
    let f = File::open(path)
        .map_err(|e| CliError::IncompleteRun(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad =
            |m: String| CliError::IncompleteRun(format!("{} line {}: {m}", path.display(), n + 1));
        let mut record: Json = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let obj = record
            .as_object_mut()
            .ok_or_else(|| bad("not an object".into()))?;
        obj.remove("timestamp");
        let seq = obj
            .get("seq")
            .and_then(Json::as_u64)
            .ok_or_else(|| bad("missing seq".into()))?;
        out.push(LoggedEvent { seq, record });
    }
    Ok(out)
}

pub fn read_events(path: &Path) -> Result<Vec<RunEvent>, CliError> {
    read_log(path)?.iter().map(LoggedEvent::event).collect()
}

/// Renders in-memory events exactly as [`read_log`] would see them.
pub fn to_records(events: &[RunEvent]) -> Vec<LoggedEvent> {
    events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let seq = i as u64 + 1;
            let mut record = serde_json::to_value(e).expect("events serialize");
            record
                .as_object_mut()
                .expect("events are objects")
                .insert("seq".into(), Json::from(seq));
            LoggedEvent { seq, record }
        })
        .collect()
}

/// First sequence number (1-based line position) at which the two logs
/// differ, if any.
pub fn first_divergence(expected: &[LoggedEvent], actual: &[LoggedEvent]) -> Option<u64> {
    for (i, (a, b)) in expected.iter().zip(actual).enumerate() {
        if a != b {
            return Some(i as u64 + 1);
        }
    }
    if expected.len() != actual.len() {
        return Some(expected.len().min(actual.len()) as u64 + 1);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: u64) -> RunEvent {
        RunEvent::CategoryNew {
            generation: 0,
            label: format!("l{n}"),
            candidate_id: n,
        }
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunLogWriter::create(dir.path()).unwrap();
        for n in 0..3 {
            w.emit(&sample(n)).unwrap();
        }
        let events = w.finish().unwrap();
        let text = std::fs::read_to_string(dir.path().join(EVENTS_FILE)).unwrap();
        assert!(text.lines().all(|l| l.contains("\"timestamp\"")));
        assert!(text.starts_with("{\"seq\":1,"));
        let log = read_log(&dir.path().join(EVENTS_FILE)).unwrap();
        assert_eq!(log, to_records(&events));
        assert_eq!(read_events(&dir.path().join(EVENTS_FILE)).unwrap(), events);
    }

    #[test]
    fn divergence_positions() {
        let a = to_records(&[sample(0), sample(1), sample(2)]);
        let b = to_records(&[sample(0), sample(7), sample(2)]);
        assert_eq!(first_divergence(&a, &a), None);
        assert_eq!(first_divergence(&a, &b), Some(2));
        assert_eq!(first_divergence(&a, &a[..2]), Some(3));
    }
}
