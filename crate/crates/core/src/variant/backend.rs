//! External translation backends.
//!
//! The protocol is line oriented: `n` lines of input produce exactly `n`
//! lines of output. Embedded line breaks and backslashes are escaped as
//! `\n`, `\r` and `\\` on the way in and unescaped on the way out.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::LanguageTag;
use crate::error::{Error, Result};

use super::cache::unescape_field;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Direction {
    pub source: LanguageTag,
    pub target: LanguageTag,
}

impl Direction {
    pub fn new(source: LanguageTag, target: LanguageTag) -> Self {
        Direction { source, target }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.source, self.target)
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (src, tgt) = s
            .split_once('>')
            .ok_or_else(|| Error::arg(format!("direction {s:?} must look like en>fi")))?;
        Ok(Direction::new(src.parse()?, tgt.parse()?))
    }
}

impl TryFrom<String> for Direction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Direction> for String {
    fn from(d: Direction) -> String {
        d.to_string()
    }
}

/// Why a backend call failed. `index` is relative to the batch passed in;
/// `partial` holds the outputs produced before the failure, if any.
#[derive(Debug, Clone)]
pub struct BackendFailure {
    pub index: usize,
    pub message: String,
    pub partial: Vec<Vec<u8>>,
}

pub trait Backend {
    /// Translates one batch, returning raw output lines.
    fn translate_raw(&self, texts: &[String], direction: &Direction) -> std::result::Result<Vec<Vec<u8>>, BackendFailure>;

    fn batch_size(&self) -> usize {
        usize::MAX
    }
}

/// Runs a shell command per batch. `{src}` and `{tgt}` in the template are
/// replaced by the direction's language tags.
#[derive(Clone, Debug)]
pub struct CommandBackend {
    pub template: String,
    pub batch_size: usize,
}

impl CommandBackend {
    pub fn new(template: impl Into<String>) -> Self {
        CommandBackend {
            template: template.into(),
            batch_size: 64,
        }
    }

    fn command_line(&self, direction: &Direction) -> String {
        self.template
            .replace("{src}", direction.source.as_str())
            .replace("{tgt}", direction.target.as_str())
    }
}

impl Backend for CommandBackend {
    fn translate_raw(&self, texts: &[String], direction: &Direction) -> std::result::Result<Vec<Vec<u8>>, BackendFailure> {
        let fail = |message: String| BackendFailure {
            index: 0,
            message,
            partial: Vec::new(),
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(self.command_line(direction))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("cannot start backend: {e}")))?;

        let mut input = Vec::new();
        for text in texts {
            input.extend_from_slice(escape_line(text).as_bytes());
            input.push(b'\n');
        }
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(&input));

        let mut stdout = Vec::new();
        child
            .stdout
            .take()
            .expect("piped stdout")
            .read_to_end(&mut stdout)
            .map_err(|e| fail(format!("reading backend output: {e}")))?;
        let mut stderr = String::new();
        if let Some(mut err) = child.stderr.take() {
            let _ = err.read_to_string(&mut stderr);
        }
        let status = child.wait().map_err(|e| fail(e.to_string()))?;
        // a backend may legitimately exit before draining stdin; the exit
        // status decides
        let _ = writer.join();
        if !status.success() {
            return Err(fail(format!("backend exited with {status}: {}", stderr.trim())));
        }

        if stdout.last() == Some(&b'\n') {
            stdout.pop();
        }
        if stdout.is_empty() && texts.is_empty() {
            return Ok(Vec::new());
        }
        Ok(stdout
            .split(|&b| b == b'\n')
            .map(|line| {
                let line = line.strip_suffix(b"\r").unwrap_or(line);
                match std::str::from_utf8(line) {
                    Ok(s) => unescape_line(s).into_bytes(),
                    Err(_) => line.to_vec(),
                }
            })
            .collect())
    }

    fn batch_size(&self) -> usize {
        self.batch_size.max(1)
    }
}

/// Looks translations up in a precomputed table. Table files are TSV with
/// either `source<TAB>translation` rows (any direction) or
/// `direction<TAB>source<TAB>translation` rows, fields escaped as in the
/// cache journal.
#[derive(Clone, Debug, Default)]
pub struct TableBackend {
    any_direction: HashMap<String, String>,
    by_direction: HashMap<(Direction, String), String>,
}

impl TableBackend {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = TableBackend::default();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Parse {
                line: idx + 1,
                message: "expected 2 or 3 tab-separated columns".into(),
            };
            match cols.as_slice() {
                [src, tgt] => table.insert(None, unescape_field(src).ok_or_else(bad)?, unescape_field(tgt).ok_or_else(bad)?),
                [dir, src, tgt] => table.insert(
                    Some(dir.parse()?),
                    unescape_field(src).ok_or_else(bad)?,
                    unescape_field(tgt).ok_or_else(bad)?,
                ),
                _ => return Err(bad()),
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, direction: Option<Direction>, source: String, translation: String) {
        match direction {
            Some(d) => {
                self.by_direction.insert((d, source), translation);
            }
            None => {
                self.any_direction.insert(source, translation);
            }
        }
    }

    fn lookup(&self, text: &str, direction: &Direction) -> Option<&String> {
        self.by_direction
            .get(&(direction.clone(), text.to_owned()))
            .or_else(|| self.any_direction.get(text))
    }
}

impl Backend for TableBackend {
    fn translate_raw(&self, texts: &[String], direction: &Direction) -> std::result::Result<Vec<Vec<u8>>, BackendFailure> {
        let mut out = Vec::with_capacity(texts.len());
        for (index, text) in texts.iter().enumerate() {
            match self.lookup(text, direction) {
                Some(t) => out.push(t.clone().into_bytes()),
                None => {
                    return Err(BackendFailure {
                        index,
                        message: format!("no table entry for {text:?} ({direction})"),
                        partial: out,
                    })
                }
            }
        }
        Ok(out)
    }
}

/// In-process backend wrapping a closure; handy for stubs.
pub struct FnBackend<F>(pub F);

impl<F> Backend for FnBackend<F>
where
    F: Fn(&str, &Direction) -> String,
{
    fn translate_raw(&self, texts: &[String], direction: &Direction) -> std::result::Result<Vec<Vec<u8>>, BackendFailure> {
        Ok(texts.iter().map(|t| (self.0)(t, direction).into_bytes()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendSource {
    Command(String),
    Table(PathBuf),
}

/// How to reach a backend plus decoding settings declared by the user.
/// The settings are recorded, not enforced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub source: BackendSource,
    pub decoding: BTreeMap<String, String>,
    pub batch_size: usize,
}

impl BackendConfig {
    /// Parses `cmd: <template>` or `table: <path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::arg(format!("backend {spec:?} must start with cmd: or table:")))?;
        let rest = rest.trim();
        if rest.is_empty() {
            return Err(Error::arg("backend specification is empty"));
        }
        let source = match kind.trim() {
            "cmd" => BackendSource::Command(rest.to_owned()),
            "table" => BackendSource::Table(PathBuf::from(rest)),
            other => return Err(Error::arg(format!("unknown backend kind {other:?}"))),
        };
        Ok(BackendConfig {
            source,
            decoding: BTreeMap::new(),
            batch_size: 64,
        })
    }

    /// Parses `key=value,key=value` decoding metadata.
    pub fn with_decoding(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("decoding setting {item:?} is not key=value")))?;
            self.decoding.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<Box<dyn Backend>> {
        Ok(match &self.source {
            BackendSource::Command(template) => Box::new(CommandBackend {
                template: template.clone(),
                batch_size: self.batch_size,
            }),
            BackendSource::Table(path) => Box::new(TableBackend::load(path)?),
        })
    }
}

fn escape_line(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_line(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub sent: usize,
    pub received: Option<usize>,
    pub arity_ok: bool,
    pub nonempty_ok: bool,
    pub utf8_ok: bool,
    pub failures: Vec<String>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const CANARY: [&str; 4] = [
    "The cat sat on the mat.",
    "A man is playing a guitar on stage.",
    "Nobody is sleeping.",
    "Translation check number four.",
];

/// Sends a canary batch and checks arity, non-emptiness and encoding of
/// what comes back.
pub fn backend_selfcheck(backend: &dyn Backend, direction: &Direction) -> SelfCheckReport {
    let texts: Vec<String> = CANARY.iter().map(|s| s.to_string()).collect();
    let mut report = SelfCheckReport {
        sent: texts.len(),
        ..SelfCheckReport::default()
    };
    let lines = match backend.translate_raw(&texts, direction) {
        Ok(lines) => lines,
        Err(failure) => {
            report.failures.push(format!("backend call failed: {}", failure.message));
            return report;
        }
    };
    report.received = Some(lines.len());
    report.arity_ok = lines.len() == texts.len();
    if !report.arity_ok {
        report
            .failures
            .push(format!("arity: sent {} lines, received {}", texts.len(), lines.len()));
    }
    report.nonempty_ok = lines.iter().all(|l| !l.iter().all(u8::is_ascii_whitespace));
    if !report.nonempty_ok {
        report.failures.push("non-emptiness: backend returned empty lines".into());
    }
    report.utf8_ok = lines.iter().all(|l| std::str::from_utf8(l).is_ok());
    if !report.utf8_ok {
        report.failures.push("encoding: backend output is not valid UTF-8".into());
    }
    report
}
