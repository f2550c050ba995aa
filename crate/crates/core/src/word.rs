//! Symbols and finite words.
//!
//! A [`Word`] of length `n` names an `n`-cylinder: the set of sequences whose
//! first `n` symbols agree with it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A 0-based partition element index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Symbol(pub u32);

impl Symbol {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for Symbol {
    fn from(v: u32) -> Self {
        Symbol(v)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("word must contain at least one symbol")]
    Empty,
    #[error("cannot parse word {0:?}")]
    Parse(String),
}

/// A non-empty finite string of symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self, WordError> {
        if symbols.is_empty() {
            return Err(WordError::Empty);
        }
        Ok(Word(symbols))
    }

    pub fn from_indices(indices: &[u32]) -> Result<Self, WordError> {
        Self::new(indices.iter().copied().map(Symbol).collect())
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn first(&self) -> Symbol {
        self.0[0]
    }

    pub fn last(&self) -> Symbol {
        self.0[self.0.len() - 1]
    }

    /// Largest symbol index appearing in the word.
    pub fn max_symbol(&self) -> Symbol {
        *self.0.iter().max().expect("non-empty")
    }

    /// Every word of length `n` over `0..k`, in lexicographic order.
    pub fn all(k: u32, n: usize) -> impl Iterator<Item = Word> {
        let total = (k as u64).checked_pow(n as u32).expect("k^n overflows u64");
        (0..total).map(move |mut code| {
            let mut syms = vec![Symbol(0); n];
            for slot in syms.iter_mut().rev() {
                *slot = Symbol((code % k as u64) as u32);
                code /= k as u64;
            }
            Word(syms)
        })
    }
}

impl AsRef<[Symbol]> for Word {
    fn as_ref(&self) -> &[Symbol] {
        &self.0
    }
}

/// Digits `0-9a-z` map to symbols 0..36; anything wider is written comma separated.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|s| s.0 < 36) {
            for s in &self.0 {
                let c = std::char::from_digit(s.0, 36).expect("radix 36");
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.0.to_string()).collect();
            // a lone large index keeps a trailing comma so it is not read as digits
            let tail = if parts.len() == 1 { "," } else { "" };
            write!(f, "{}{tail}", parts.join(","))
        }
    }
}

impl FromStr for Word {
    type Err = WordError;

    /// Accepts either compact digits (`"0110"`, radix 36) or comma separated
    /// indices (`"12,0,3"`, or `"40,"` for a single index).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(WordError::Empty);
        }
        let syms: Option<Vec<Symbol>> = if s.contains(',') {
            let body = s.strip_suffix(',').unwrap_or(s);
            body.split(',')
                .map(|p| p.trim().parse::<u32>().ok().map(Symbol))
                .collect()
        } else {
            s.chars()
                .map(|c| c.to_digit(36).map(Symbol))
                .collect()
        };
        syms.map(Word).ok_or_else(|| WordError::Parse(s.to_string()))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
