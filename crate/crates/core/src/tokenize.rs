//! Offset-preserving tokenizers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub char_start: usize,
    /// Exclusive.
    pub char_end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedText {
    pub text: String,
    pub tokens: Vec<Token>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tokenizer {
    /// Split on Unicode whitespace only.
    Whitespace,
    /// Whitespace split, edge punctuation peeled off, CJK characters
    /// emitted one per token.
    #[default]
    Default,
}

impl Tokenizer {
    pub fn tokenize(self, text: &str) -> TokenizedText {
        let tokens = match self {
            Tokenizer::Whitespace => whitespace_chunks(text)
                .into_iter()
                .map(|chunk| make_token(&chunk))
                .collect(),
            Tokenizer::Default => whitespace_chunks(text)
                .into_iter()
                .flat_map(|chunk| split_chunk(&chunk))
                .collect(),
        };
        TokenizedText {
            text: text.to_owned(),
            tokens,
        }
    }

    pub fn surfaces(self, text: &str) -> Vec<String> {
        self.tokenize(text).surfaces()
    }

    pub fn count(self, text: &str) -> usize {
        self.tokenize(text).len()
    }
}

impl FromStr for Tokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(Tokenizer::Whitespace),
            "default" => Ok(Tokenizer::Default),
            _ => Err(Error::arg(format!("unknown tokenizer {s:?} (whitespace|default)"))),
        }
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::Default => "default",
        })
    }
}

/// Tokenizes with the language-sensitive default rules. The language tag
/// is accepted for future per-language segmenters; CJK handling is
/// script-driven already.
pub fn tokenize(text: &str, _language: &str) -> TokenizedText {
    Tokenizer::Default.tokenize(text)
}

pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Han ideographs, kana and their compatibility forms.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9F
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x30000..=0x3134F)
}

type Chunk = Vec<(usize, char)>;

fn whitespace_chunks(text: &str) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut current = Vec::new();
    for (idx, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if !current.is_empty() {
                chunks.push(std::mem::take(&mut current));
            }
        } else {
            current.push((idx, c));
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

fn make_token(chars: &[(usize, char)]) -> Token {
    Token {
        surface: chars.iter().map(|&(_, c)| c).collect(),
        char_start: chars[0].0,
        char_end: chars[chars.len() - 1].0 + 1,
    }
}

fn split_chunk(chunk: &[(usize, char)]) -> Vec<Token> {
    let mut lead = 0;
    while lead < chunk.len() && is_punctuation(chunk[lead].1) {
        lead += 1;
    }
    let mut trail = chunk.len();
    while trail > lead && is_punctuation(chunk[trail - 1].1) {
        trail -= 1;
    }

    let mut out: Vec<Token> = chunk[..lead].chunks(1).map(make_token).collect();
    let mut run_start = lead;
    for k in lead..trail {
        if is_cjk(chunk[k].1) {
            if run_start < k {
                out.push(make_token(&chunk[run_start..k]));
            }
            out.push(make_token(&chunk[k..=k]));
            run_start = k + 1;
        }
    }
    if run_start < trail {
        out.push(make_token(&chunk[run_start..trail]));
    }
    out.extend(chunk[trail..].chunks(1).map(make_token));
    out
}
