//! Episode logs: one JSON object per line.

use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::warn;

use super::EpisodeRecord;

/// Destination for completed episodes.
pub trait EpisodeSink {
    fn record(&mut self, episode: &EpisodeRecord);
}

impl EpisodeSink for Vec<EpisodeRecord> {
    fn record(&mut self, episode: &EpisodeRecord) {
        self.push(episode.clone());
    }
}

/// Appends episodes to a JSONL file. A storage failure is logged once and
/// disables the log; enumeration carries on.
pub struct JsonlEpisodeLog {
    path: PathBuf,
    out: Option<BufWriter<File>>,
    written: usize,
}

impl JsonlEpisodeLog {
    pub fn append(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(JsonlEpisodeLog {
            path,
            out: Some(BufWriter::new(file)),
            written: 0,
        })
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn is_disabled(&self) -> bool {
        self.out.is_none()
    }

    pub fn flush(&mut self) {
        if let Some(out) = self.out.as_mut() {
            if let Err(e) = out.flush() {
                warn!("episode log {} disabled: {e}", self.path.display());
                self.out = None;
            }
        }
    }
}

impl EpisodeSink for JsonlEpisodeLog {
    fn record(&mut self, episode: &EpisodeRecord) {
        let Some(out) = self.out.as_mut() else { return };
        let line = serde_json::to_string(episode).expect("episode records serialize");
        match writeln!(out, "{line}") {
            Ok(()) => self.written += 1,
            Err(e) => {
                warn!("episode log {} disabled: {e}", self.path.display());
                self.out = None;
            }
        }
    }
}

impl Drop for JsonlEpisodeLog {
    fn drop(&mut self) {
        self.flush();
    }
}

/// Reads every record of a JSONL episode log.
pub fn read_episodes(path: impl AsRef<Path>) -> io::Result<Vec<EpisodeRecord>> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    read_episodes_from_str(&text)
}

pub fn read_episodes_from_str(text: &str) -> io::Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", no + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}
