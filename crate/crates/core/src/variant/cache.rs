//! Run-wide translation cache backed by an append-only TSV journal.
//!
//! Journal rows are `direction<TAB>source<TAB>translation` with
//! backslash, tab, newline and carriage return escaped. The first entry
//! for a key wins; later rows for the same key are ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::backend::Direction;

pub fn escape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.push(match chars.next()? {
                '\\' => '\\',
                't' => '\t',
                'n' => '\n',
                'r' => '\r',
                _ => return None,
            });
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Cache key normalization: trailing line breaks are dropped, nothing else.
pub fn normalize_key(text: &str) -> &str {
    text.trim_end_matches(['\n', '\r'])
}

#[derive(Debug, Default)]
pub struct TranslationCache {
    entries: HashMap<(Direction, String), String>,
    journal: Option<(PathBuf, BufWriter<File>)>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        TranslationCache::default()
    }

    /// Loads the journal at `path` if it exists and appends new entries to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.is_empty() {
                    continue;
                }
                let bad = || Error::Parse {
                    line: idx + 1,
                    message: format!("malformed cache row in {}", path.display()),
                };
                let mut cols = line.split('\t');
                let (Some(dir), Some(src), Some(tgt), None) = (cols.next(), cols.next(), cols.next(), cols.next())
                else {
                    return Err(bad());
                };
                let key = (dir.parse::<Direction>()?, unescape_field(src).ok_or_else(bad)?);
                let value = unescape_field(tgt).ok_or_else(bad)?;
                entries.entry(key).or_insert(value);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(TranslationCache {
            entries,
            journal: Some((path.to_owned(), BufWriter::new(file))),
        })
    }

    pub fn get(&self, text: &str, direction: &Direction) -> Option<&str> {
        self.entries
            .get(&(direction.clone(), normalize_key(text).to_owned()))
            .map(String::as_str)
    }

    /// Stores a translation unless the key is already present; returns the
    /// stored value either way.
    pub fn insert(&mut self, text: &str, direction: &Direction, translation: String) -> Result<&str> {
        let key = (direction.clone(), normalize_key(text).to_owned());
        if !self.entries.contains_key(&key) {
            if let Some((path, writer)) = &mut self.journal {
                writeln!(
                    writer,
                    "{}\t{}\t{}",
                    direction,
                    escape_field(&key.1),
                    escape_field(&translation)
                )
                .map_err(|e| Error::io(path.clone(), e))?;
            }
            self.entries.insert(key.clone(), translation);
        }
        Ok(&self.entries[&key])
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some((path, writer)) = &mut self.journal {
            writer.flush().map_err(|e| Error::io(path.clone(), e))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Drop for TranslationCache {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}
