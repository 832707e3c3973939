//! Tie statistics of an arrangement, read from the bottom of the deck.
//!
//! * `T_j` is the longest bottom suffix in which no type occurs more than
//!   `j` times.
//! * `W_{j,t}` counts the `(j+1)`-subsets of the bottom `t` positions that
//!   hold a single type, i.e. `sum_i C(c_i(t), j+1)` where `c_i(t)` is the
//!   number of copies of type `i` among those positions.
//! * `W~_j = W_{j-1, T_j}` is the number of types seen exactly `j` times in
//!   the bottom `T_j` cards.
//!
//! Played forward, the greedy game passes through exactly the
//! configurations `(j, s)` with `1 <= s <= W~_j`: `j` is the maximal
//! remaining multiplicity and `s` the number of types attaining it.
//! Conditioned on the `W~_j`, the score is a sum of independent
//! Bernoulli(1/s) variables, one per configuration.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deck::{Arrangement, GameTrace};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// `W~_1..W~_m` together with the thresholds `T_0..T_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TieCounts {
    /// `w_tilde[j - 1]` is `W~_j`.
    pub w_tilde: Vec<u32>,
    /// `thresholds[j]` is `T_j`, with `T_0 = 0` and `T_m = |m|`.
    pub thresholds: Vec<usize>,
}

impl TieCounts {
    pub fn max_mult(&self) -> usize {
        self.w_tilde.len()
    }
}

/// Per-type counts among the bottom `t` cards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixCounts {
    pub t: usize,
    pub counts: Vec<u32>,
}

pub fn suffix_counts(arrangement: &Arrangement, t: usize) -> Result<SuffixCounts> {
    check_t(arrangement, t)?;
    let mut counts = vec![0u32; arrangement.n_types()];
    for c in arrangement.bottom_up().take(t) {
        counts[c] += 1;
    }
    Ok(SuffixCounts { t, counts })
}

fn check_t(arrangement: &Arrangement, t: usize) -> Result<()> {
    if t > arrangement.len() {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0,
            hi: arrangement.len(),
        });
    }
    Ok(())
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `W_{j,t}` from per-type tallies of the bottom `t` cards.
pub(crate) fn w_from_counts<'a>(counts: impl IntoIterator<Item = &'a u32>, j: u32) -> u64 {
    counts
        .into_iter()
        .map(|&c| binomial(c as u64, j as u64 + 1))
        .sum()
}

/// Number of `(j+1)`-subsets of the bottom `t` positions holding equal types.
pub fn w_count(arrangement: &Arrangement, j: u32, t: usize) -> Result<u64> {
    let sc = suffix_counts(arrangement, t)?;
    Ok(w_from_counts(&sc.counts, j))
}

/// `T_j`: the largest `t` with `W_{j,t} = 0`.
pub fn t_threshold(arrangement: &Arrangement, j: u32) -> usize {
    let mut counts = vec![0u32; arrangement.n_types()];
    for (b, c) in arrangement.bottom_up().enumerate() {
        counts[c] += 1;
        if counts[c] > j {
            return b;
        }
    }
    arrangement.len()
}

/// All thresholds and tie counts in one bottom-up pass.
pub fn tie_counts(arrangement: &Arrangement) -> TieCounts {
    let mut counts = vec![0u32; arrangement.n_types()];
    // exact[k]: number of types seen exactly k times so far
    let mut exact: Vec<u32> = vec![0];
    let mut max = 0usize;
    let mut thresholds = vec![0usize];
    let mut w_tilde = Vec::new();
    for (b, c) in arrangement.bottom_up().enumerate() {
        let k = counts[c] as usize;
        if k == max {
            // the suffix of length b is the last one with every count <= max
            if max > 0 {
                thresholds.push(b);
                w_tilde.push(exact[max]);
            }
            max += 1;
            exact.push(0);
        }
        if k > 0 {
            exact[k] -= 1;
        }
        exact[k + 1] += 1;
        counts[c] += 1;
    }
    thresholds.push(arrangement.len());
    w_tilde.push(exact[max]);
    TieCounts {
        w_tilde,
        thresholds,
    }
}

/// Distinct `(j, s)` configurations visited by a playout.
pub fn runs(trace: &GameTrace) -> BTreeSet<(u32, usize)> {
    trace.steps.iter().map(|s| (s.max_mult, s.tied)).collect()
}

/// The configuration set predicted by the tie counts: `{(j, s) : s <= W~_j}`.
pub fn expected_runs(tc: &TieCounts) -> BTreeSet<(u32, usize)> {
    tc.w_tilde
        .iter()
        .enumerate()
        .flat_map(|(i, &w)| (1..=w as usize).map(move |s| (i as u32 + 1, s)))
        .collect()
}

/// Draws `sum_j sum_{s <= W~_j} X_{j,s}` with independent `X_{j,s} ~ Bernoulli(1/s)`.
pub fn sample_decomposed_score(w_tilde: &[u32], rng: &mut RngStream) -> usize {
    let mut score = 0;
    for &w in w_tilde {
        score += 1;
        for s in 2..=w {
            score += rng.random_ratio(1, s) as usize;
        }
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::{play, Deck, TieRule};

    fn deck(m: &[u32]) -> Deck {
        Deck::new(m.to_vec()).unwrap()
    }

    fn bottom(d: &Deck, one_based: &[usize]) -> Arrangement {
        Arrangement::from_bottom(d, one_based.iter().map(|c| c - 1).collect()).unwrap()
    }

    fn worked_example() -> (Deck, Arrangement) {
        let d = deck(&[3, 3, 2]);
        let a = bottom(&d, &[1, 2, 2, 1, 3, 1, 2, 3]);
        (d, a)
    }

    #[test]
    fn w_count_worked_example() {
        let (_, a) = worked_example();
        assert_eq!(w_count(&a, 1, 2).unwrap(), 0);
        assert_eq!(w_count(&a, 1, 3).unwrap(), 1);
        assert_eq!(w_count(&a, 2, 5).unwrap(), 0);
        assert_eq!(w_count(&a, 2, 6).unwrap(), 1);
        assert_eq!(w_count(&a, 1, 0).unwrap(), 0);
        assert!(matches!(w_count(&a, 1, 9), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn thresholds_worked_example() {
        let (_, a) = worked_example();
        assert_eq!(t_threshold(&a, 0), 0);
        assert_eq!(t_threshold(&a, 1), 2);
        assert_eq!(t_threshold(&a, 2), 5);
        assert_eq!(t_threshold(&a, 3), 8);
        let tc = tie_counts(&a);
        assert_eq!(tc.thresholds, vec![0, 2, 5, 8]);
        assert_eq!(tc.w_tilde, vec![2, 2, 2]);
    }

    #[test]
    fn all_distinct_threshold_is_n() {
        let d = deck(&[1, 1, 1, 1, 1]);
        for cards in d.arrangements() {
            let a = Arrangement::from_top(&d, cards).unwrap();
            assert_eq!(t_threshold(&a, 1), 5);
            assert_eq!(tie_counts(&a).w_tilde, vec![5]);
        }
    }

    #[test]
    fn two_pairs_example() {
        let d = deck(&[2, 2]);
        let a = bottom(&d, &[1, 1, 2, 2]);
        assert_eq!(t_threshold(&a, 1), 1);
        assert_eq!(tie_counts(&a).w_tilde, vec![1, 2]);
    }

    #[test]
    fn single_type_ties() {
        let d = deck(&[4]);
        let a = Arrangement::from_top(&d, vec![0; 4]).unwrap();
        let tc = tie_counts(&a);
        assert_eq!(tc.w_tilde, vec![1, 1, 1, 1]);
        assert_eq!(tc.thresholds, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn runs_examples() {
        let d = deck(&[3, 3, 2]);
        let a = Arrangement::from_top(&d, vec![2, 1, 0, 2, 0, 1, 1, 0]).unwrap();
        let t = play(&d, &a, TieRule::Uniform, &mut RngStream::new(1));
        let expected = BTreeSet::from([(3, 1), (3, 2), (2, 1), (2, 2), (1, 1), (1, 2)]);
        assert_eq!(runs(&t), expected);
        assert_eq!(expected_runs(&tie_counts(&a)), expected);

        let d = deck(&[1, 1]);
        for cards in d.arrangements() {
            let a = Arrangement::from_top(&d, cards).unwrap();
            let t = play(&d, &a, TieRule::LowestIndex, &mut RngStream::new(0));
            assert_eq!(runs(&t), BTreeSet::from([(1, 1), (1, 2)]));
        }

        let d = deck(&[2, 2]);
        let a = Arrangement::from_top(&d, vec![0, 0, 1, 1]).unwrap();
        let t = play(&d, &a, TieRule::LowestIndex, &mut RngStream::new(0));
        assert_eq!(runs(&t), BTreeSet::from([(2, 2), (2, 1), (1, 1)]));
    }

    #[test]
    fn decomposed_score_examples() {
        let mut rng = RngStream::new(2);
        assert!((0..100).all(|_| sample_decomposed_score(&[1], &mut rng) == 1));
        let draws = 100_000;
        let mut support = BTreeSet::new();
        let mut threes = 0usize;
        for _ in 0..draws {
            let s = sample_decomposed_score(&[1, 2], &mut rng);
            support.insert(s);
            threes += (s == 3) as usize;
        }
        assert_eq!(support, BTreeSet::from([2, 3]));
        let se = (draws as f64 * 0.25).sqrt();
        assert!((threes as f64 - draws as f64 / 2.0).abs() < 3.0 * se);

        let total: usize = (0..draws)
            .map(|_| sample_decomposed_score(&[2, 2, 2], &mut rng))
            .sum();
        let mean = total as f64 / draws as f64;
        // variance of 3 * Bernoulli(1/2)
        let se = (0.75 / draws as f64).sqrt();
        assert!((mean - 4.5).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 3), 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(binomial(7, 0), 1);
    }
}
