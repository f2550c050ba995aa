//! Seeded sample paths of the stationary process.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use crate::model::MeasureModel;
use crate::rng::{substream, Role};
use crate::word::{Symbol, Word};

/// A lazily generated orbit `x_0, x_1, ...`.
///
/// The first generated symbol follows the stationary law, later ones the
/// conditional kernel. A pinned prefix, when given, is emitted first and the
/// kernel continues from its last symbol. Symbols that were peeked but not yet
/// consumed sit in a look-ahead buffer.
#[derive(Debug, Clone)]
pub struct OrbitStream<'m> {
    model: &'m MeasureModel,
    rng: ChaCha8Rng,
    lookahead: VecDeque<Symbol>,
    last: Option<Symbol>,
    position: u64,
}

impl<'m> OrbitStream<'m> {
    pub fn new(model: &'m MeasureModel, rng: ChaCha8Rng) -> Self {
        OrbitStream { model, rng, lookahead: VecDeque::new(), last: None, position: 0 }
    }

    /// Stream for substream `(seed, 0, Orbit)`.
    pub fn seeded(model: &'m MeasureModel, seed: u64) -> Self {
        Self::new(model, substream(seed, 0, Role::Orbit))
    }

    /// Starts with `prefix`, then continues with the kernel. With a prefix
    /// drawn from `mu` (or fixed to a cylinder) this samples `mu`
    /// conditioned on that cylinder exactly.
    pub fn with_prefix(model: &'m MeasureModel, prefix: &[Symbol], rng: ChaCha8Rng) -> Self {
        let mut s = Self::new(model, rng);
        s.lookahead.extend(prefix.iter().copied());
        s.last = prefix.last().copied();
        s
    }

    pub fn model(&self) -> &'m MeasureModel {
        self.model
    }

    /// Number of symbols consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    #[inline]
    fn generate(&mut self) -> Symbol {
        let sym = match self.last {
            None => self.model.sample_initial(&mut self.rng),
            Some(prev) => self.model.sample_next(prev, &mut self.rng),
        };
        self.last = Some(sym);
        sym
    }

    /// Consume the next symbol.
    #[inline]
    pub fn next_symbol(&mut self) -> Symbol {
        self.position += 1;
        match self.lookahead.pop_front() {
            Some(s) => s,
            None => self.generate(),
        }
    }

    /// The next `n` symbols, without consuming them.
    pub fn peek_prefix(&mut self, n: usize) -> Vec<Symbol> {
        while self.lookahead.len() < n {
            let s = self.generate();
            self.lookahead.push_back(s);
        }
        self.lookahead.iter().take(n).copied().collect()
    }
}

impl Iterator for OrbitStream<'_> {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        Some(self.next_symbol())
    }
}

/// First `length` symbols of the orbit seeded by `seed`.
pub fn sample_orbit(model: &MeasureModel, seed: u64, length: usize) -> Word {
    assert!(length >= 1, "orbit length must be positive");
    let syms: Vec<Symbol> = OrbitStream::seeded(model, seed).take(length).collect();
    Word::new(syms).expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Markov;

    #[test]
    fn deterministic_in_seed() {
        for (_, m) in MeasureModel::builtins() {
            assert_eq!(sample_orbit(&m, 42, 10), sample_orbit(&m, 42, 10));
        }
        let coin = MeasureModel::fair_coin();
        assert_ne!(sample_orbit(&coin, 1, 64), sample_orbit(&coin, 2, 64));
    }

    #[test]
    fn single_symbol_process() {
        let m = MeasureModel::bernoulli(vec![1.0]).unwrap();
        assert_eq!(sample_orbit(&m, 9, 12).to_string(), "000000000000");
    }

    #[test]
    fn period_two_chain_alternates() {
        let m = MeasureModel::Markov(Markov::new_unchecked(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 0.0],
        ));
        assert_eq!(sample_orbit(&m, 5, 8).to_string(), "01010101");
    }

    #[test]
    fn peek_does_not_consume() {
        let m = MeasureModel::fair_coin();
        let mut a = OrbitStream::seeded(&m, 3);
        let peeked = a.peek_prefix(5);
        assert_eq!(a.position(), 0);
        let taken: Vec<Symbol> = (&mut a).take(8).collect();
        assert_eq!(&taken[..5], &peeked[..]);
        let fresh: Vec<Symbol> = OrbitStream::seeded(&m, 3).take(8).collect();
        assert_eq!(taken, fresh);
    }

    #[test]
    fn prefix_is_emitted_then_kernel_continues() {
        let m = MeasureModel::Markov(Markov::new_unchecked(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 0.0],
        ));
        let rng = substream(1, 0, Role::Orbit);
        let s: Vec<u32> =
            OrbitStream::with_prefix(&m, &[Symbol(1), Symbol(1)], rng).take(5).map(|s| s.0).collect();
        assert_eq!(s, [1, 1, 0, 1, 0]);
    }

    #[test]
    fn geometric_sampler_stays_within_truncation() {
        let m = MeasureModel::geometric(0.9).unwrap();
        let limit = match &m {
            MeasureModel::Geometric(g) => g.truncation(),
            _ => unreachable!(),
        };
        let w = sample_orbit(&m, 11, 20_000);
        assert!(w.symbols().iter().all(|s| s.0 < limit));
        let zeros = w.symbols().iter().filter(|s| s.0 == 0).count() as f64 / 20_000.0;
        assert!((zeros - 0.1).abs() < 0.015, "{zeros}");
    }
}
