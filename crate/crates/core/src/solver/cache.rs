//! Append-only on-disk cache of solved positions.
//!
//! One CSV line per position: `position-codec,q0,q1,...,q6` with -99
//! marking illegal columns. The codec key is the played-column digit
//! string, so repeated tournaments and test-set annotations amortize
//! their solver work across processes.

use super::{QVector, ILLEGAL_Q};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub struct SolverCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, QVector>>,
}

impl SolverCache {
    /// Opens (or creates) a cache file, loading all existing records.
    /// Malformed lines are skipped.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<SolverCache> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if let Some((codec, q)) = parse_line(&line) {
                    entries.insert(codec, q);
                }
            }
        }
        Ok(SolverCache {
            path,
            entries: Mutex::new(entries),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, codec: &str) -> Option<QVector> {
        self.entries.lock().unwrap().get(codec).copied()
    }

    /// Records a solved position and appends it to the file.
    pub fn insert(&self, codec: &str, q: QVector) -> std::io::Result<()> {
        {
            let mut entries = self.entries.lock().unwrap();
            if entries.contains_key(codec) {
                return Ok(());
            }
            entries.insert(codec.to_string(), q);
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        writeln!(file, "{}", format_line(codec, &q))
    }
}

fn format_line(codec: &str, q: &QVector) -> String {
    let vals: Vec<String> = q.values.iter().map(|v| v.to_string()).collect();
    format!("{},{}", codec, vals.join(","))
}

fn parse_line(line: &str) -> Option<(String, QVector)> {
    let mut parts = line.trim().split(',');
    let codec = parts.next()?.to_string();
    if !codec.chars().all(|c| ('1'..='7').contains(&c)) {
        return None;
    }
    let mut values = [ILLEGAL_Q; 7];
    for v in values.iter_mut() {
        *v = parts.next()?.parse().ok()?;
    }
    if parts.next().is_some() {
        return None;
    }
    Some((codec, QVector { values }))
}
