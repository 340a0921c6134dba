use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionEvent {
    Key { ch: char },
    Suggest { prefix: String, shown: Vec<String> },
    /// `rank` is the 0-based index in the shown list.
    Accept { entry: String, rank: usize, typed_prefix_len: usize },
    ManualTrigger,
    RetroAccept { entry: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    /// Microseconds since the session started; never decreases.
    pub t_us: u64,
    #[serde(flatten)]
    pub event: SessionEvent,
}

#[derive(Debug, Clone)]
pub struct SessionLog {
    origin: Instant,
    records: Vec<LogRecord>,
}

impl Default for SessionLog {
    fn default() -> Self {
        Self { origin: Instant::now(), records: Vec::new() }
    }
}

impl SessionLog {
    pub fn push(&mut self, event: SessionEvent) {
        let now = self.origin.elapsed().as_micros() as u64;
        let t_us = self.records.last().map_or(now, |r| r.t_us.max(now));
        self.records.push(LogRecord { seq: self.records.len() as u64, t_us, event });
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> std::io::Result<Vec<LogRecord>> {
        let mut out = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let mut log = SessionLog::default();
        log.push(SessionEvent::Key { ch: 'h' });
        log.push(SessionEvent::Suggest { prefix: "h".into(), shown: vec!["htn".into()] });
        log.push(SessionEvent::Accept { entry: "htn".into(), rank: 0, typed_prefix_len: 1 });
        log.push(SessionEvent::ManualTrigger);
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"event\":\"KEY\""));
        let back = SessionLog::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, log.records());
        assert!(back.windows(2).all(|w| w[0].t_us <= w[1].t_us));
    }
}
