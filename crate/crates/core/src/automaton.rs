//! Streaming pattern matchers.
//!
//! [`WordMatcher`] is the classic failure-function matcher for one word and
//! [`MultiMatcher`] a trie with suffix links for a set of words. Both are
//! compiled to a dense transition table over *symbol classes*: one class per
//! symbol that occurs in some pattern plus a shared "other" class. Symbols in
//! the other class can never extend a partial match, which makes the tables
//! finite even over a countable alphabet.
//!
//! The matcher itself is immutable; callers keep the current state.

use std::collections::BTreeMap;

use crate::word::{Symbol, Word};

/// Automaton state identifier. `0` is the root.
pub type StateId = u32;

#[derive(Clone, Debug)]
struct SymbolClasses {
    /// `lookup[sym]` for `sym <= max pattern symbol`.
    lookup: Vec<u32>,
    /// Class of every symbol missing from all patterns.
    other: u32,
    /// Representative symbol of each non-other class.
    members: Vec<Symbol>,
}

impl SymbolClasses {
    fn from_words<'a>(words: impl Iterator<Item = &'a Word>) -> Self {
        let mut present = std::collections::BTreeSet::new();
        for w in words {
            present.extend(w.symbols().iter().copied());
        }
        let max = present.iter().next_back().map(|s| s.index() + 1).unwrap_or(0);
        let other = present.len() as u32;
        let mut lookup = vec![other; max];
        let members: Vec<Symbol> = present.into_iter().collect();
        for (c, s) in members.iter().enumerate() {
            lookup[s.index()] = c as u32;
        }
        SymbolClasses { lookup, other, members }
    }

    #[inline]
    fn class(&self, sym: Symbol) -> u32 {
        self.lookup.get(sym.index()).copied().unwrap_or(self.other)
    }

    fn count(&self) -> usize {
        self.members.len() + 1
    }
}

#[derive(Clone, Debug)]
struct Dfa {
    classes: SymbolClasses,
    delta: Vec<StateId>,
    accepting: Vec<bool>,
}

impl Dfa {
    #[inline]
    fn next(&self, state: StateId, sym: Symbol) -> StateId {
        let c = self.classes.class(sym) as usize;
        self.delta[state as usize * self.classes.count() + c]
    }
}

/// Common interface for the streaming matchers.
pub trait Matcher {
    fn start(&self) -> StateId {
        0
    }

    fn next_state(&self, state: StateId, sym: Symbol) -> StateId;

    /// Whether a pattern ends at the symbol that led into `state`.
    fn is_match(&self, state: StateId) -> bool;

    fn state_count(&self) -> usize;

    /// Number of pattern-symbol positions consumed to reach a state (its depth).
    fn depth(&self, state: StateId) -> usize;
}

/// Failure-function matcher for a single word.
#[derive(Clone, Debug)]
pub struct WordMatcher {
    pattern: Word,
    /// `failure[q]`: length of the longest proper border of `pattern[..q]`.
    failure: Vec<usize>,
    dfa: Dfa,
}

impl WordMatcher {
    pub fn new(pattern: &Word) -> Self {
        let p = pattern.symbols();
        let n = p.len();
        let mut failure = vec![0usize; n + 1];
        let mut k = 0usize;
        for q in 1..n {
            while k > 0 && p[k] != p[q] {
                k = failure[k];
            }
            if p[k] == p[q] {
                k += 1;
            }
            failure[q + 1] = k;
        }

        let classes = SymbolClasses::from_words(std::iter::once(pattern));
        let width = classes.count();
        let mut delta = vec![0 as StateId; (n + 1) * width];
        for q in 0..=n {
            for c in 0..width {
                let next = if c == classes.other as usize {
                    0
                } else {
                    let sym = classes.members[c];
                    let mut j = q;
                    loop {
                        if j < n && p[j] == sym {
                            break j + 1;
                        }
                        if j == 0 {
                            break 0;
                        }
                        j = failure[j];
                    }
                };
                delta[q * width + c] = next as StateId;
            }
        }
        let mut accepting = vec![false; n + 1];
        accepting[n] = true;
        WordMatcher { pattern: pattern.clone(), failure, dfa: Dfa { classes, delta, accepting } }
    }

    pub fn pattern(&self) -> &Word {
        &self.pattern
    }

    pub fn failure(&self) -> &[usize] {
        &self.failure
    }

    /// Distinct pattern symbols; every other symbol resets to the root.
    pub fn pattern_symbols(&self) -> &[Symbol] {
        &self.dfa.classes.members
    }
}

impl Matcher for WordMatcher {
    #[inline]
    fn next_state(&self, state: StateId, sym: Symbol) -> StateId {
        self.dfa.next(state, sym)
    }

    #[inline]
    fn is_match(&self, state: StateId) -> bool {
        self.dfa.accepting[state as usize]
    }

    fn state_count(&self) -> usize {
        self.pattern.len() + 1
    }

    fn depth(&self, state: StateId) -> usize {
        state as usize
    }
}

/// Multi-word matcher: trie, suffix links and terminal marks.
#[derive(Clone, Debug)]
pub struct MultiMatcher {
    depth: Vec<usize>,
    suffix: Vec<StateId>,
    dfa: Dfa,
    patterns: usize,
}

impl MultiMatcher {
    /// Panics on an empty pattern list; callers validate first.
    pub fn new(patterns: &[Word]) -> Self {
        assert!(!patterns.is_empty(), "pattern set must be non-empty");
        let classes = SymbolClasses::from_words(patterns.iter());
        let width = classes.count();

        let mut children: Vec<BTreeMap<u32, StateId>> = vec![BTreeMap::new()];
        let mut depth = vec![0usize];
        let mut terminal = vec![false];
        for w in patterns {
            let mut node = 0usize;
            for &s in w.symbols() {
                let c = classes.class(s);
                node = match children[node].get(&c) {
                    Some(&next) => next as usize,
                    None => {
                        let id = children.len();
                        children.push(BTreeMap::new());
                        depth.push(depth[node] + 1);
                        terminal.push(false);
                        children[node].insert(c, id as StateId);
                        id
                    }
                };
            }
            terminal[node] = true;
        }

        let states = children.len();
        let mut suffix = vec![0 as StateId; states];
        let mut delta = vec![0 as StateId; states * width];
        let mut accepting = terminal;
        let mut queue = std::collections::VecDeque::new();
        for c in 0..width {
            if let Some(&child) = children[0].get(&(c as u32)) {
                delta[c] = child;
                queue.push_back(child);
            }
        }
        // breadth-first, so a node's suffix target is finished before the node
        while let Some(u) = queue.pop_front() {
            let u = u as usize;
            accepting[u] = accepting[u] || accepting[suffix[u] as usize];
            for c in 0..width {
                let fallback = delta[suffix[u] as usize * width + c];
                match children[u].get(&(c as u32)) {
                    Some(&child) => {
                        suffix[child as usize] = fallback;
                        delta[u * width + c] = child;
                        queue.push_back(child);
                    }
                    None => delta[u * width + c] = fallback,
                }
            }
        }
        MultiMatcher {
            depth,
            suffix,
            dfa: Dfa { classes, delta, accepting },
            patterns: patterns.len(),
        }
    }

    pub fn suffix_link(&self, state: StateId) -> StateId {
        self.suffix[state as usize]
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns
    }
}

impl Matcher for MultiMatcher {
    #[inline]
    fn next_state(&self, state: StateId, sym: Symbol) -> StateId {
        self.dfa.next(state, sym)
    }

    #[inline]
    fn is_match(&self, state: StateId) -> bool {
        self.dfa.accepting[state as usize]
    }

    fn state_count(&self) -> usize {
        self.depth.len()
    }

    fn depth(&self, state: StateId) -> usize {
        self.depth[state as usize]
    }
}
