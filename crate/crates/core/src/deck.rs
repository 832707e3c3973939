//! Decks, uniform shuffles and greedy playout of the complete feedback game.
//!
//! Card types are 0-based indices internally. Arrangements are stored top
//! to bottom: `cards[0]` is the first card revealed, and position `b`
//! counted from the bottom (1-based) is `cards[len - b]`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Multiset of card types given by their multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Deck {
    multiplicities: Vec<u32>,
    total: usize,
    max_mult: u32,
    max_count: usize,
}

impl Deck {
    pub fn new(multiplicities: Vec<u32>) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::InvalidDeck("no card types".into()));
        }
        if let Some((i, &m)) = multiplicities.iter().enumerate().find(|(_, &m)| m == 0) {
            return Err(Error::InvalidDeck(format!(
                "multiplicity {m} of type {} must be at least 1",
                i + 1
            )));
        }
        let total = multiplicities.iter().map(|&m| m as usize).sum();
        let max_mult = *multiplicities.iter().max().unwrap();
        let max_count = multiplicities.iter().filter(|&&m| m == max_mult).count();
        Ok(Deck {
            multiplicities,
            total,
            max_mult,
            max_count,
        })
    }

    /// `n` types with `m` copies each.
    pub fn balanced(n: usize, m: u32) -> Result<Self> {
        Self::new(vec![m; n])
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Number of types.
    pub fn n(&self) -> usize {
        self.multiplicities.len()
    }

    /// Number of cards.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn max_mult(&self) -> u32 {
        self.max_mult
    }

    /// Number of types attaining the maximal multiplicity.
    pub fn max_count(&self) -> usize {
        self.max_count
    }

    /// Fraction of types attaining the maximal multiplicity.
    pub fn eps(&self) -> f64 {
        self.max_count as f64 / self.n() as f64
    }

    pub fn is_balanced(&self) -> bool {
        self.max_count == self.n()
    }

    /// Cards in canonical sorted order: `m_0` copies of type 0, then type 1, ...
    pub fn cards(&self) -> Vec<usize> {
        self.multiplicities
            .iter()
            .enumerate()
            .flat_map(|(i, &m)| std::iter::repeat_n(i, m as usize))
            .collect()
    }

    /// Every distinct arrangement, in lexicographic order (top to bottom).
    pub fn arrangements(&self) -> MultisetPermutations {
        MultisetPermutations {
            next: Some(self.cards()),
        }
    }

    /// Compact text form, the balanced shorthand for large balanced decks.
    pub fn spec(&self) -> String {
        if self.is_balanced() && self.n() > 8 {
            format!("n={},m={}", self.n(), self.max_mult)
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Deck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.multiplicities.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses either `"3,3,2"` or the balanced shorthand `"n=100,m=3"`.
impl FromStr for Deck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('=') {
            return parse_balanced(s);
        }
        let multiplicities = s
            .split(',')
            .map(|part| {
                let part = part.trim();
                part.parse::<i64>()
                    .map_err(|_| Error::InvalidDeck(format!("cannot parse multiplicity {part:?}")))
                    .and_then(|m| {
                        if m < 1 {
                            Err(Error::InvalidDeck(format!(
                                "multiplicity {m} must be at least 1"
                            )))
                        } else {
                            u32::try_from(m).map_err(|_| {
                                Error::InvalidDeck(format!("multiplicity {m} too large"))
                            })
                        }
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Deck::new(multiplicities)
    }
}

fn parse_balanced(s: &str) -> Result<Deck> {
    let (mut n, mut m) = (None, None);
    for part in s.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidDeck(format!("expected key=value, got {part:?}")))?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidDeck(format!("cannot parse {part:?}")))?;
        match key.trim() {
            "n" => n = Some(value),
            "m" => m = Some(value),
            other => return Err(Error::InvalidDeck(format!("unknown key {other:?}"))),
        }
    }
    match (n, m) {
        (Some(n), Some(m)) if n >= 1 && m >= 1 && m <= u32::MAX as i64 => {
            Deck::balanced(n as usize, m as u32)
        }
        (Some(n), Some(m)) => Err(Error::InvalidDeck(format!(
            "balanced deck needs n >= 1 and m >= 1, got n={n}, m={m}"
        ))),
        _ => Err(Error::InvalidDeck(format!(
            "balanced deck needs both n and m: {s:?}"
        ))),
    }
}

/// Lexicographic enumeration of the distinct orderings of a multiset.
pub struct MultisetPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for MultisetPermutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_permutation(&mut succ) {
            self.next = Some(succ);
        }
        Some(current)
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// One full ordering of a deck, top to bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arrangement {
    cards: Vec<usize>,
    n: usize,
}

impl Arrangement {
    pub fn from_top(deck: &Deck, cards: Vec<usize>) -> Result<Self> {
        let mut seen = vec![0u32; deck.n()];
        for &c in &cards {
            if c >= deck.n() {
                return Err(Error::InvalidArrangement(format!(
                    "card type {} not in deck of {} types",
                    c + 1,
                    deck.n()
                )));
            }
            seen[c] += 1;
        }
        if let Some(i) = (0..deck.n()).find(|&i| seen[i] != deck.multiplicities[i]) {
            return Err(Error::InvalidArrangement(format!(
                "type {} occurs {} times, deck has {}",
                i + 1,
                seen[i],
                deck.multiplicities[i]
            )));
        }
        Ok(Arrangement { cards, n: deck.n() })
    }

    /// Cards listed from the bottom of the deck upwards.
    pub fn from_bottom(deck: &Deck, mut cards: Vec<usize>) -> Result<Self> {
        cards.reverse();
        Self::from_top(deck, cards)
    }

    pub(crate) fn from_top_unchecked(n: usize, cards: Vec<usize>) -> Self {
        Arrangement { cards, n }
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn n_types(&self) -> usize {
        self.n
    }

    /// Card at 1-based position `b` from the bottom.
    pub fn from_bottom_at(&self, b: usize) -> usize {
        self.cards[self.cards.len() - b]
    }

    pub fn bottom_up(&self) -> impl Iterator<Item = usize> + '_ {
        self.cards.iter().rev().copied()
    }
}

/// Uniformly random arrangement: a Fisher-Yates shuffle of the expanded card list.
pub fn uniform_arrangement(deck: &Deck, rng: &mut RngStream) -> Arrangement {
    let mut cards = deck.cards();
    cards.shuffle(rng);
    Arrangement::from_top_unchecked(deck.n(), cards)
}

/// Shuffles `buf` into a uniform arrangement of `canonical`, whatever `buf` held before.
pub(crate) fn shuffle_into(canonical: &[usize], buf: &mut Vec<usize>, rng: &mut RngStream) {
    buf.clear();
    buf.extend_from_slice(canonical);
    buf.shuffle(rng);
}

/// Draws the bottom cards of a uniform arrangement without shuffling the whole deck.
///
/// A partial Fisher-Yates pass over the canonical card list; the swaps are
/// undone before the next draw, so every draw starts from the same state.
#[derive(Debug, Clone)]
pub struct BottomSampler {
    cards: Vec<usize>,
    swaps: Vec<usize>,
}

impl BottomSampler {
    pub fn new(deck: &Deck) -> Self {
        BottomSampler {
            cards: deck.cards(),
            swaps: Vec::new(),
        }
    }

    /// The bottom `t` cards (`t` clamped to the deck size), listed bottom-up.
    pub fn draw(&mut self, t: usize, rng: &mut RngStream) -> &[usize] {
        for (i, &k) in self.swaps.iter().enumerate().rev() {
            self.cards.swap(i, k);
        }
        self.swaps.clear();
        let len = self.cards.len();
        let t = t.min(len);
        for i in 0..t {
            let k = rng.random_range(i..len);
            self.cards.swap(i, k);
            self.swaps.push(k);
        }
        &self.cards[..t]
    }
}

/// How the greedy player picks among tied maximal types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    Uniform,
    LowestIndex,
}

/// Remaining multiplicities, bucketed by count for O(1) greedy queries.
#[derive(Debug, Clone)]
pub struct RemainingDeck {
    counts: Vec<u32>,
    // buckets[c] holds the types with exactly c cards left, c >= 1.
    buckets: Vec<Vec<usize>>,
    slot: Vec<usize>,
    max: u32,
    remaining: usize,
}

impl RemainingDeck {
    pub fn new(deck: &Deck) -> Self {
        Self::from_counts(deck.multiplicities().to_vec())
    }

    /// Arbitrary remaining counts; zero entries are types already exhausted.
    pub fn from_counts(counts: Vec<u32>) -> Self {
        let max = counts.iter().copied().max().unwrap_or(0);
        let mut buckets = vec![Vec::new(); max as usize + 1];
        let mut slot = vec![0; counts.len()];
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                slot[i] = buckets[c as usize].len();
                buckets[c as usize].push(i);
            }
        }
        let remaining = counts.iter().map(|&c| c as usize).sum();
        RemainingDeck {
            counts,
            buckets,
            slot,
            max,
            remaining,
        }
    }

    pub fn count(&self, kind: usize) -> u32 {
        self.counts[kind]
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Current maximal remaining multiplicity (0 once the deck is empty).
    pub fn max_mult(&self) -> u32 {
        self.max
    }

    /// Types attaining the maximal multiplicity, in no particular order.
    pub fn tied(&self) -> &[usize] {
        &self.buckets[self.max as usize]
    }

    /// Removes one card of type `kind`.
    pub fn remove(&mut self, kind: usize) -> Result<()> {
        let c = self.counts[kind] as usize;
        if c == 0 {
            return Err(Error::InvalidArrangement(format!(
                "type {} already exhausted",
                kind + 1
            )));
        }
        let at = self.slot[kind];
        self.buckets[c].swap_remove(at);
        if let Some(&moved) = self.buckets[c].get(at) {
            self.slot[moved] = at;
        }
        if c > 1 {
            self.slot[kind] = self.buckets[c - 1].len();
            self.buckets[c - 1].push(kind);
        }
        self.counts[kind] -= 1;
        self.remaining -= 1;
        while self.max > 0 && self.buckets[self.max as usize].is_empty() {
            self.max -= 1;
        }
        Ok(())
    }
}

/// A type of maximal remaining multiplicity, chosen according to `rule`.
pub fn greedy_guess(state: &RemainingDeck, rule: TieRule, rng: &mut RngStream) -> Result<usize> {
    let tied = state.tied();
    if state.remaining() == 0 || tied.is_empty() {
        return Err(Error::GameOver);
    }
    Ok(match rule {
        TieRule::LowestIndex => *tied.iter().min().unwrap(),
        TieRule::Uniform if tied.len() == 1 => tied[0],
        TieRule::Uniform => tied[rng.random_range(0..tied.len())],
    })
}

/// One guess-and-reveal step, annotated with the configuration before the reveal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub guessed: usize,
    pub revealed: usize,
    pub correct: bool,
    /// Maximal remaining multiplicity `j` before the reveal.
    pub max_mult: u32,
    /// Number of types `s` attaining it.
    pub tied: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTrace {
    pub steps: Vec<Step>,
    pub score: usize,
}

/// Plays the complete feedback game greedily, reporting each step to `visit`.
/// Returns the score.
pub(crate) fn playout(
    deck: &Deck,
    cards: &[usize],
    rule: TieRule,
    rng: &mut RngStream,
    mut visit: impl FnMut(&Step),
) -> usize {
    let mut state = RemainingDeck::new(deck);
    let mut score = 0;
    for &revealed in cards {
        let guessed = greedy_guess(&state, rule, rng).expect("arrangement matches deck");
        let step = Step {
            guessed,
            revealed,
            correct: guessed == revealed,
            max_mult: state.max_mult(),
            tied: state.tied().len(),
        };
        score += step.correct as usize;
        visit(&step);
        state.remove(revealed).expect("arrangement matches deck");
    }
    score
}

pub fn play(
    deck: &Deck,
    arrangement: &Arrangement,
    rule: TieRule,
    rng: &mut RngStream,
) -> GameTrace {
    let mut steps = Vec::with_capacity(arrangement.len());
    let score = playout(deck, arrangement.cards(), rule, rng, |s| steps.push(*s));
    GameTrace { steps, score }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deck(m: &[u32]) -> Deck {
        Deck::new(m.to_vec()).unwrap()
    }

    fn top(d: &Deck, one_based: &[usize]) -> Arrangement {
        Arrangement::from_top(d, one_based.iter().map(|c| c - 1).collect()).unwrap()
    }

    #[test]
    fn new_deck_derived_fields() {
        let d = deck(&[3, 3, 2]);
        assert_eq!((d.n(), d.total(), d.max_mult()), (3, 8, 3));
        assert!((d.eps() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.max_count(), 2);

        let d = deck(&[5]);
        assert_eq!((d.n(), d.total(), d.max_mult(), d.eps()), (1, 5, 5, 1.0));

        let d = deck(&[1, 1, 1, 1]);
        assert_eq!((d.n(), d.total(), d.max_mult(), d.eps()), (4, 4, 1, 1.0));
    }

    #[test]
    fn invalid_decks_rejected() {
        assert!(matches!(Deck::new(vec![]), Err(Error::InvalidDeck(_))));
        assert!(matches!(Deck::new(vec![2, 0]), Err(Error::InvalidDeck(_))));
        let err = "0,2".parse::<Deck>().unwrap_err();
        assert!(err.to_string().contains("multiplicity 0"), "{err}");
        assert!("3,x".parse::<Deck>().is_err());
        assert!("n=0,m=3".parse::<Deck>().is_err());
        assert!("n=4".parse::<Deck>().is_err());
    }

    #[test]
    fn parses_both_text_forms() {
        assert_eq!("3,3,2".parse::<Deck>().unwrap(), deck(&[3, 3, 2]));
        let d: Deck = "n=100,m=3".parse().unwrap();
        assert_eq!((d.n(), d.total()), (100, 300));
        assert_eq!(d.spec(), "n=100,m=3");
        assert_eq!(deck(&[2, 2]).spec(), "2,2");
    }

    #[test]
    fn enumerates_distinct_arrangements() {
        let all: Vec<_> = deck(&[2, 2]).arrangements().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0, 1, 1]);
        assert_eq!(deck(&[3, 3, 2]).arrangements().count(), 560);
        assert_eq!(deck(&[1, 1, 1, 1]).arrangements().count(), 24);
    }

    #[test]
    fn arrangement_validation_and_orientation() {
        let d = deck(&[3, 3, 2]);
        let a = Arrangement::from_bottom(&d, vec![0, 1, 1, 0, 2, 0, 1, 2]).unwrap();
        assert_eq!(a.cards(), &[2, 1, 0, 2, 0, 1, 1, 0]);
        assert_eq!(a.from_bottom_at(1), 0);
        assert_eq!(a.from_bottom_at(8), 2);
        assert!(Arrangement::from_top(&d, vec![0; 8]).is_err());
        assert!(Arrangement::from_top(&d, vec![5; 8]).is_err());
    }

    #[test]
    fn bottom_sampler_restores_and_conserves() {
        let d = deck(&[3, 3, 2]);
        let mut sampler = BottomSampler::new(&d);
        let mut rng = RngStream::new(4);
        for t in [0, 3, 8, 20] {
            let drawn = sampler.draw(t, &mut rng).to_vec();
            assert_eq!(drawn.len(), t.min(8));
            let mut tally = [0u32; 3];
            drawn.iter().for_each(|&c| tally[c] += 1);
            assert!(tally.iter().zip(d.multiplicities()).all(|(a, b)| a <= b));
        }
        sampler.draw(0, &mut rng);
        assert_eq!(sampler.cards, d.cards());
    }

    #[test]
    fn single_card_deck_shuffle() {
        let d = deck(&[1]);
        let mut rng = RngStream::new(3);
        assert_eq!(uniform_arrangement(&d, &mut rng).cards(), &[0]);
    }

    #[test]
    fn shuffle_conserves_multiset() {
        let d = deck(&[3, 3, 2]);
        let mut rng = RngStream::new(9);
        for _ in 0..100 {
            let a = uniform_arrangement(&d, &mut rng);
            assert!(Arrangement::from_top(&d, a.cards().to_vec()).is_ok());
        }
    }

    #[test]
    fn greedy_guess_examples() {
        let mut rng = RngStream::new(0);
        let s = RemainingDeck::from_counts(vec![1, 2]);
        assert_eq!(greedy_guess(&s, TieRule::Uniform, &mut rng).unwrap(), 1);
        let s = RemainingDeck::from_counts(vec![2, 2]);
        assert_eq!(greedy_guess(&s, TieRule::LowestIndex, &mut rng).unwrap(), 0);
        let empty = RemainingDeck::from_counts(vec![0, 0]);
        assert_eq!(
            greedy_guess(&empty, TieRule::Uniform, &mut rng),
            Err(Error::GameOver)
        );
    }

    #[test]
    fn uniform_tie_break_is_fair() {
        let mut rng = RngStream::new(11);
        let s = RemainingDeck::from_counts(vec![2, 2]);
        let draws = 100_000;
        let a = (0..draws)
            .filter(|_| greedy_guess(&s, TieRule::Uniform, &mut rng).unwrap() == 0)
            .count() as f64;
        let se = (draws as f64 * 0.25).sqrt();
        assert!((a - draws as f64 / 2.0).abs() < 3.0 * se, "{a}");
    }

    #[test]
    fn remaining_deck_tracks_buckets() {
        let mut s = RemainingDeck::from_counts(vec![3, 3, 2]);
        assert_eq!((s.max_mult(), s.tied().len()), (3, 2));
        s.remove(0).unwrap();
        assert_eq!((s.max_mult(), s.tied()), (3, &[1][..]));
        s.remove(1).unwrap();
        assert_eq!((s.max_mult(), s.tied().len()), (2, 3));
        s.remove(2).unwrap();
        s.remove(2).unwrap();
        assert!(s.remove(2).is_err());
        assert_eq!(s.remaining(), 4);
    }

    #[test]
    fn play_two_distinct_cards() {
        let d = deck(&[1, 1]);
        let t = play(
            &d,
            &top(&d, &[1, 2]),
            TieRule::LowestIndex,
            &mut RngStream::new(0),
        );
        let guesses: Vec<_> = t.steps.iter().map(|s| s.guessed).collect();
        assert_eq!(guesses, vec![0, 1]);
        assert!(t.steps.iter().all(|s| s.correct));
        assert_eq!(t.score, 2);
    }

    #[test]
    fn play_two_pairs() {
        let d = deck(&[2, 2]);
        let t = play(
            &d,
            &top(&d, &[1, 1, 2, 2]),
            TieRule::LowestIndex,
            &mut RngStream::new(0),
        );
        let correct: Vec<_> = t.steps.iter().map(|s| s.correct).collect();
        assert_eq!(correct, vec![true, false, true, true]);
        assert_eq!(t.steps[1].guessed, 1);
        assert_eq!(t.score, 3);
    }

    #[test]
    fn play_annotates_configurations() {
        let d = deck(&[3, 3, 2]);
        let a = top(&d, &[3, 2, 1, 3, 1, 2, 2, 1]);
        for rule in [TieRule::LowestIndex, TieRule::Uniform] {
            let t = play(&d, &a, rule, &mut RngStream::new(5));
            let js: Vec<_> = t.steps.iter().map(|s| (s.max_mult, s.tied)).collect();
            assert_eq!(
                js,
                vec![
                    (3, 2),
                    (3, 2),
                    (3, 1),
                    (2, 2),
                    (2, 2),
                    (2, 1),
                    (1, 2),
                    (1, 1)
                ]
            );
        }
    }
}
