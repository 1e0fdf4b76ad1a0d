use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::datamodel::BitextPair;
use crate::error::{Error, Result};
use crate::variant::{escape_field, unescape_field, Direction};

/// Probability used for word pairs never observed together in training.
pub const UNSEEN_PROB: f64 = 1e-9;

/// Word ↔ id interning with a type cap.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn intern(&mut self, word: &str, limit: usize) -> Result<u32> {
        if let Some(&id) = self.index.get(word) {
            return Ok(id);
        }
        if self.words.len() >= limit {
            return Err(Error::VocabularyOverflow { limit });
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        Ok(id)
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlignmentPrior {
    /// Model 1: every source position and the null word equally likely.
    Uniform,
    /// Null word gets `p0`; the rest is spread over source positions in
    /// proportion to `exp(-tension * |i/n - j/m|)`.
    Diagonal { tension: f64, p0: f64 },
}

/// Lexical translation table `t(target | source)` plus the alignment prior.
///
/// Source id 0 is the null word.
#[derive(Clone, Debug)]
pub struct AlignmentModel {
    pub(crate) source_vocab: Vocab,
    pub(crate) target_vocab: Vocab,
    pub(crate) cell_index: HashMap<(u32, u32), usize>,
    pub(crate) cell_keys: Vec<(u32, u32)>,
    pub(crate) probs: Vec<f64>,
    pub prior: AlignmentPrior,
    pub direction: Option<Direction>,
    pub(crate) vocab_limit: usize,
}

pub(crate) const NULL_ID: u32 = 0;

/// A bitext interned against a model: word ids plus, per pair, the table
/// cell of every `(source position incl. null, target position)` laid out
/// as `cells[j * (n + 1) + i]`.
pub(crate) struct InternedCorpus {
    pub pairs: Vec<(Vec<u32>, Vec<u32>)>,
    pub cells: Vec<Vec<usize>>,
}

impl AlignmentModel {
    pub(crate) fn empty(vocab_limit: usize) -> Self {
        let mut source_vocab = Vocab::default();
        source_vocab.words.push(String::new());
        AlignmentModel {
            source_vocab,
            target_vocab: Vocab::default(),
            cell_index: HashMap::new(),
            cell_keys: Vec::new(),
            probs: Vec::new(),
            prior: AlignmentPrior::Uniform,
            direction: None,
            vocab_limit,
        }
    }

    /// Interns `bitext`, adding table cells for newly co-occurring word
    /// pairs. Rows that gain cells are re-normalized with the new cells
    /// starting at the row's uniform value.
    pub(crate) fn intern(&mut self, bitext: &[BitextPair]) -> Result<InternedCorpus> {
        let limit = self.vocab_limit;
        let first_new = self.cell_keys.len();
        let mut pairs = Vec::with_capacity(bitext.len());
        let mut cells = Vec::with_capacity(bitext.len());
        for pair in bitext {
            let src = pair
                .source_tokens
                .iter()
                .map(|w| {
                    // the null word does not count against the cap
                    self.source_vocab
                        .intern(w, limit.saturating_add(1))
                        .map_err(|_| Error::VocabularyOverflow { limit })
                })
                .collect::<Result<Vec<_>>>()?;
            let tgt = pair
                .target_tokens
                .iter()
                .map(|w| self.target_vocab.intern(w, limit))
                .collect::<Result<Vec<_>>>()?;
            let mut pair_cells = Vec::with_capacity((src.len() + 1) * tgt.len());
            for &f in &tgt {
                for e in std::iter::once(NULL_ID).chain(src.iter().copied()) {
                    let next = self.cell_keys.len();
                    let id = *self.cell_index.entry((e, f)).or_insert(next);
                    if id == next {
                        self.cell_keys.push((e, f));
                        self.probs.push(f64::NAN);
                    }
                    pair_cells.push(id);
                }
            }
            pairs.push((src, tgt));
            cells.push(pair_cells);
        }

        if self.cell_keys.len() > first_new {
            let mut row_size = vec![0usize; self.source_vocab.len()];
            let mut grown = vec![false; self.source_vocab.len()];
            for (id, &(e, _)) in self.cell_keys.iter().enumerate() {
                row_size[e as usize] += 1;
                if id >= first_new {
                    grown[e as usize] = true;
                }
            }
            for id in first_new..self.cell_keys.len() {
                let e = self.cell_keys[id].0 as usize;
                self.probs[id] = 1.0 / row_size[e] as f64;
            }
            let sums = self.row_sums_raw();
            for (id, &(e, _)) in self.cell_keys.iter().enumerate() {
                if grown[e as usize] {
                    self.probs[id] /= sums[e as usize];
                }
            }
        }
        Ok(InternedCorpus { pairs, cells })
    }

    fn row_sums_raw(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.source_vocab.len()];
        for (id, &(e, _)) in self.cell_keys.iter().enumerate() {
            sums[e as usize] += self.probs[id];
        }
        sums
    }

    /// `Σ_f t(f|e)` for every source word (null first), in vocabulary order.
    pub fn row_sums(&self) -> Vec<(Option<&str>, f64)> {
        let sums = self.row_sums_raw();
        sums.into_iter()
            .enumerate()
            .filter(|(e, _)| self.cell_keys.iter().any(|&(k, _)| k as usize == *e))
            .map(|(e, s)| (self.source_word(e as u32), s))
            .collect()
    }

    fn source_word(&self, id: u32) -> Option<&str> {
        (id != NULL_ID).then(|| self.source_vocab.word(id))
    }

    /// `t(target | source)`; `source = None` is the null word.
    pub fn prob(&self, target: &str, source: Option<&str>) -> f64 {
        let e = match source {
            None => Some(NULL_ID),
            Some(w) => self.source_vocab.get(w).filter(|&id| id != NULL_ID),
        };
        match (e, self.target_vocab.get(target)) {
            (Some(e), Some(f)) => self.prob_ids(e, f),
            _ => UNSEEN_PROB,
        }
    }

    pub(crate) fn prob_ids(&self, e: u32, f: u32) -> f64 {
        self.cell_index
            .get(&(e, f))
            .map(|&id| self.probs[id])
            .unwrap_or(UNSEEN_PROB)
    }

    /// Target words sorted by decreasing `t(·|source)`.
    pub fn best_translations(&self, source: Option<&str>) -> Vec<(&str, f64)> {
        let e = match source {
            None => NULL_ID,
            Some(w) => match self.source_vocab.get(w) {
                Some(id) if id != NULL_ID => id,
                _ => return Vec::new(),
            },
        };
        let mut row: Vec<(&str, f64)> = self
            .cell_keys
            .iter()
            .zip(&self.probs)
            .filter(|((k, _), _)| *k == e)
            .map(|(&(_, f), &p)| (self.target_vocab.word(f), p))
            .collect();
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        row
    }

    pub fn tension(&self) -> Option<f64> {
        match self.prior {
            AlignmentPrior::Diagonal { tension, .. } => Some(tension),
            AlignmentPrior::Uniform => None,
        }
    }

    /// The raw table in cell order, for bit-level comparisons.
    pub fn table(&self) -> Vec<(Option<&str>, &str, f64)> {
        self.cell_keys
            .iter()
            .zip(&self.probs)
            .map(|(&(e, f), &p)| (self.source_word(e), self.target_vocab.word(f), p))
            .collect()
    }

    pub(crate) fn lookup_pair(&self, pair: &BitextPair) -> (Vec<Option<u32>>, Vec<Option<u32>>) {
        let src = pair
            .source_tokens
            .iter()
            .map(|w| self.source_vocab.get(w).filter(|&id| id != NULL_ID))
            .collect();
        let tgt = pair.target_tokens.iter().map(|w| self.target_vocab.get(w)).collect();
        (src, tgt)
    }

    /// Writes the versioned TSV dump: header rows starting with `#`, then
    /// `source<TAB>target<TAB>probability` with an empty source for null.
    pub fn write_tsv<W: Write>(&self, mut writer: W) -> Result<()> {
        let mut out = String::from("#transart-alignment-model\tv1\n");
        match self.prior {
            AlignmentPrior::Uniform => out.push_str("#prior\tuniform\n"),
            AlignmentPrior::Diagonal { tension, p0 } => {
                let _ = writeln!(out, "#prior\tdiagonal\n#tension\t{tension:?}\n#p0\t{p0:?}");
            }
        }
        if let Some(d) = &self.direction {
            let _ = writeln!(out, "#direction\t{d}");
        }
        for (&(e, f), &p) in self.cell_keys.iter().zip(&self.probs) {
            let src = self.source_word(e).map(escape_field).unwrap_or_default();
            let _ = writeln!(out, "{src}\t{}\t{p:?}", escape_field(self.target_vocab.word(f)));
        }
        writer
            .write_all(out.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io("<model>", e))
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut model = AlignmentModel::empty(usize::MAX);
        let mut kind = None;
        let (mut tension, mut p0) = (None, None);
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io("<model>", e))?;
            let bad = |message: &str| Error::Parse {
                line: line_no,
                message: message.to_owned(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if line_no == 1 {
                if cols != ["#transart-alignment-model", "v1"] {
                    return Err(bad("not a v1 alignment model"));
                }
                continue;
            }
            if let Some(key) = cols[0].strip_prefix('#') {
                let value = cols.get(1).ok_or_else(|| bad("header without value"))?;
                match key {
                    "prior" => kind = Some(value.to_string()),
                    "tension" => tension = Some(value.parse::<f64>().map_err(|_| bad("bad tension"))?),
                    "p0" => p0 = Some(value.parse::<f64>().map_err(|_| bad("bad p0"))?),
                    "direction" => model.direction = Some(value.parse()?),
                    _ => return Err(bad("unknown header")),
                }
                continue;
            }
            let [src, tgt, p] = cols.as_slice() else {
                return Err(bad("expected 3 columns"));
            };
            let e = if src.is_empty() {
                NULL_ID
            } else {
                let word = unescape_field(src).ok_or_else(|| bad("bad escape"))?;
                model.source_vocab.intern(&word, usize::MAX)?
            };
            let word = unescape_field(tgt).ok_or_else(|| bad("bad escape"))?;
            let f = model.target_vocab.intern(&word, usize::MAX)?;
            let p: f64 = p.parse().map_err(|_| bad("bad probability"))?;
            let next = model.cell_keys.len();
            if model.cell_index.insert((e, f), next).is_some() {
                return Err(bad("duplicate table entry"));
            }
            model.cell_keys.push((e, f));
            model.probs.push(p);
        }
        model.prior = match (kind.as_deref(), tension, p0) {
            (Some("uniform"), _, _) => AlignmentPrior::Uniform,
            (Some("diagonal"), Some(tension), Some(p0)) => AlignmentPrior::Diagonal { tension, p0 },
            _ => return Err(Error::Parse {
                line: 1,
                message: "missing prior headers".into(),
            }),
        };
        model.vocab_limit = 1_000_000;
        Ok(model)
    }
}
