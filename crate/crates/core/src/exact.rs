//! Exact score distributions.
//!
//! Three independent routes to the law of the greedy score:
//!
//! * [`exact_pmf`]: recursion over multiplicity profiles. Types are
//!   exchangeable under a uniform shuffle, so the game state is captured by
//!   how many types have `j` cards left, for each `j`.
//! * [`brute_force_pmf`]: every distinct arrangement is played forward and
//!   the per-step correct-guess probabilities are propagated exactly.
//! * [`decomposition_pmf`]: every distinct arrangement is reduced to its tie
//!   counts `W~_j`, and the conditional law `sum_j sum_{s <= W~_j}
//!   Bernoulli(1/s)` is mixed over them.
//!
//! [`optimal_value`] maximizes the expected score over all strategies and
//! serves as a check that greedy play is optimal.

use std::collections::HashMap;

use crate::deck::{Arrangement, Deck, TieRule};
use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::scalar::{Real, Weight};
use crate::stats::{harmonic, harmonic2};
use crate::ties::tie_counts;

/// Largest deck (in cards) accepted by the enumeration routes.
pub const MAX_ENUMERATION_CARDS: usize = 12;

/// Size limit for [`exact_pmf_with_budget`], expressed as `n * max_mult`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactBudget {
    pub max_cells: usize,
}

impl Default for ExactBudget {
    fn default() -> Self {
        ExactBudget { max_cells: 64 }
    }
}

/// Number of types holding exactly `j` remaining cards, `j = 1..=max_mult`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    counts: Vec<u32>,
}

impl Profile {
    pub fn from_deck(deck: &Deck) -> Self {
        let mut counts = vec![0u32; deck.max_mult() as usize];
        for &m in deck.multiplicities() {
            counts[m as usize - 1] += 1;
        }
        Profile { counts }
    }

    /// `a_j` for `j >= 1`.
    pub fn count(&self, j: usize) -> u32 {
        self.counts.get(j.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Cards remaining, `sum_j j a_j`.
    pub fn remaining(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &a)| (i as u64 + 1) * a as u64)
            .sum()
    }

    /// The greedy configuration `(j, s)`: maximal multiplicity and number of
    /// types attaining it. `None` once the deck is empty.
    pub fn top(&self) -> Option<(usize, u32)> {
        let i = self.counts.iter().rposition(|&a| a > 0)?;
        Some((i + 1, self.counts[i]))
    }

    /// Profile after revealing a card from a type holding `j` cards.
    fn reveal(&self, j: usize) -> Profile {
        let mut counts = self.counts.clone();
        counts[j - 1] -= 1;
        if j > 1 {
            counts[j - 2] += 1;
        }
        Profile { counts }
    }
}

fn profile_estimate(n: usize, m: usize) -> u128 {
    // vectors (a_1..a_m) with sum <= n: C(n + m, m)
    (1..=m as u128).fold(1u128, |acc, i| acc.saturating_mul(n as u128 + i) / i)
}

/// Law of the greedy score, by recursion over profiles, with the default budget.
pub fn exact_pmf<P: Weight>(deck: &Deck) -> Result<Pmf<P>> {
    exact_pmf_with_budget(deck, ExactBudget::default())
}

pub fn exact_pmf_with_budget<P: Weight>(deck: &Deck, budget: ExactBudget) -> Result<Pmf<P>> {
    let cells = deck.n() * deck.max_mult() as usize;
    if cells > budget.max_cells {
        return Err(Error::Budget {
            estimate: profile_estimate(deck.n(), deck.max_mult() as usize),
            cells,
            limit: budget.max_cells,
        });
    }
    let mut memo = HashMap::new();
    Ok(profile_pmf(&Profile::from_deck(deck), &mut memo))
}

fn profile_pmf<P: Weight>(profile: &Profile, memo: &mut HashMap<Profile, Pmf<P>>) -> Pmf<P> {
    if let Some(pmf) = memo.get(profile) {
        return pmf.clone();
    }
    let Some((jmax, tied)) = profile.top() else {
        return Pmf::point(0);
    };
    let r = profile.remaining();
    let mut out = Pmf::from_parts(0, vec![P::zero()]);
    for j in 1..=jmax {
        let a = profile.count(j) as u64;
        if a == 0 {
            continue;
        }
        let rest = profile_pmf(&profile.reveal(j), memo);
        let j = j as u64;
        if j == jmax as u64 {
            // the guessed type is one specific type among the tied ones
            out.add_scaled(&rest.clone().shifted(1), &P::from_ratio(j, r));
            if tied > 1 {
                out.add_scaled(&rest, &P::from_ratio(j * (a - 1), r));
            }
        } else {
            out.add_scaled(&rest, &P::from_ratio(j * a, r));
        }
    }
    memo.insert(profile.clone(), out.clone());
    out
}

fn check_enumerable(deck: &Deck, op: &'static str) -> Result<()> {
    if deck.total() > MAX_ENUMERATION_CARDS {
        return Err(Error::SizeGuard {
            op,
            detail: format!(
                "{} cards, at most {MAX_ENUMERATION_CARDS} allowed",
                deck.total()
            ),
        });
    }
    Ok(())
}

/// Number of distinct arrangements, `|m|! / prod m_i!`.
pub fn arrangement_count(deck: &Deck) -> u128 {
    let mut placed = 0u128;
    let mut count = 1u128;
    for &m in deck.multiplicities() {
        for i in 1..=m as u128 {
            placed += 1;
            count = count * placed / i;
        }
    }
    count
}

/// Law of the greedy score by enumerating every distinct arrangement.
///
/// Guesses never influence which card comes next, so for a fixed
/// arrangement the score under uniform tie-breaks is a sum of independent
/// indicators: at a step where `s` types are tied for the maximum and the
/// revealed card belongs to one of them, the guess is right with
/// probability `1/s`. Under lowest-index tie-breaks each step is
/// deterministic.
pub fn brute_force_pmf<P: Weight>(deck: &Deck, rule: TieRule) -> Result<Pmf<P>> {
    check_enumerable(deck, "brute_force_pmf")?;
    let weight = P::one() / P::from_count(arrangement_count(deck) as u64);
    let mut out = Pmf::from_parts(0, vec![P::zero()]);
    for cards in deck.arrangements() {
        let mut counts = deck.multiplicities().to_vec();
        let mut pmf = Pmf::<P>::point(0);
        for &revealed in &cards {
            let max = *counts.iter().max().unwrap();
            if counts[revealed] == max {
                match rule {
                    TieRule::Uniform => {
                        let tied = counts.iter().filter(|&&c| c == max).count();
                        pmf.add_bernoulli(&P::from_ratio(1, tied as u64));
                    }
                    TieRule::LowestIndex => {
                        if counts.iter().position(|&c| c == max) == Some(revealed) {
                            pmf = pmf.shifted(1);
                        }
                    }
                }
            }
            counts[revealed] -= 1;
        }
        out.add_scaled(&pmf, &weight);
    }
    Ok(out)
}

/// Best achievable expected score, maximizing over every guess at every state.
pub fn optimal_value<P: Weight>(deck: &Deck) -> Result<P> {
    check_enumerable(deck, "optimal_value")?;
    let mut state = deck.multiplicities().to_vec();
    state.sort_unstable_by(|a, b| b.cmp(a));
    Ok(optimal_from(&state, &mut HashMap::new()))
}

// `state` is sorted in decreasing order with no zeros.
fn optimal_from<P: Weight>(state: &[u32], memo: &mut HashMap<Vec<u32>, P>) -> P {
    if state.is_empty() {
        return P::zero();
    }
    if let Some(v) = memo.get(state) {
        return v.clone();
    }
    let r: u64 = state.iter().map(|&c| c as u64).sum();
    let mut distinct = state.to_vec();
    distinct.dedup();

    let best_guess = distinct
        .iter()
        .map(|&c| P::from_ratio(c as u64, r))
        .fold(P::zero(), |best, p| if p > best { p } else { best });

    let mut continuation = P::zero();
    for &v in &distinct {
        let mult = state.iter().filter(|&&c| c == v).count() as u64;
        // decrementing the last copy of `v` keeps the order decreasing
        let at = state.iter().rposition(|&c| c == v).unwrap();
        let mut next = state.to_vec();
        if v == 1 {
            next.remove(at);
        } else {
            next[at] -= 1;
        }
        continuation += P::from_ratio(v as u64 * mult, r) * optimal_from(&next, memo);
    }
    let value = best_guess + continuation;
    memo.insert(state.to_vec(), value.clone());
    value
}

/// Law of `sum_j sum_{s <= W~_j} Bernoulli(1/s)` with independent summands.
pub fn conditional_pmf<P: Weight>(w_tilde: &[u32]) -> Result<Pmf<P>> {
    check_w_tilde(w_tilde)?;
    let mut pmf = Pmf::point(0);
    for &w in w_tilde {
        for s in 1..=w as u64 {
            pmf.add_bernoulli(&P::from_ratio(1, s));
        }
    }
    pmf.trim();
    Ok(pmf)
}

fn check_w_tilde(w_tilde: &[u32]) -> Result<()> {
    if w_tilde.is_empty() || w_tilde.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "tie counts must be nonempty and at least 1, got {w_tilde:?}"
        )));
    }
    Ok(())
}

/// Mean and variance of the score given the tie counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments<F> {
    /// `sum_j H(W~_j)`
    pub mu_prime: F,
    /// `sum_j (H(W~_j) - H_2(W~_j))`
    pub sigma2_prime: F,
}

pub fn conditional_moments<F: Real>(w_tilde: &[u32]) -> Result<ConditionalMoments<F>> {
    check_w_tilde(w_tilde)?;
    let (mut mu, mut h2) = (F::zero(), F::zero());
    for &w in w_tilde {
        mu += harmonic::<F>(w as u64);
        h2 += harmonic2::<F>(w as u64);
    }
    Ok(ConditionalMoments {
        mu_prime: mu,
        sigma2_prime: mu - h2,
    })
}

/// Tie-count vectors of all distinct arrangements, with multiplicities.
fn tie_count_frequencies(deck: &Deck) -> HashMap<Vec<u32>, u64> {
    let mut freq = HashMap::new();
    for cards in deck.arrangements() {
        let a = Arrangement::from_top(deck, cards).expect("enumerated from deck");
        *freq.entry(tie_counts(&a).w_tilde).or_insert(0) += 1;
    }
    freq
}

/// Law of the score as a mixture of conditional laws over the arrangement-induced tie counts.
pub fn decomposition_pmf<P: Weight>(deck: &Deck) -> Result<Pmf<P>> {
    check_enumerable(deck, "decomposition_pmf")?;
    let total = arrangement_count(deck) as u64;
    let mut freq: Vec<_> = tie_count_frequencies(deck).into_iter().collect();
    freq.sort();
    let mut out = Pmf::from_parts(0, vec![P::zero()]);
    for (w_tilde, count) in freq {
        out.add_scaled(&conditional_pmf(&w_tilde)?, &P::from_ratio(count, total));
    }
    Ok(out)
}

/// Exact split of the score variance: `Var(mu') + E[sigma'^2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSplit<F> {
    pub var_mu_prime: F,
    pub mean_sigma2_prime: F,
}

pub fn exact_variance_split<F: Real>(deck: &Deck) -> Result<VarianceSplit<F>> {
    check_enumerable(deck, "exact_variance_split")?;
    let total = F::from_u128(arrangement_count(deck)).unwrap();
    let mut freq: Vec<_> = tie_count_frequencies(deck).into_iter().collect();
    freq.sort();
    let (mut m1, mut m2, mut s2) = (F::zero(), F::zero(), F::zero());
    for (w_tilde, count) in freq {
        let w = F::from_u64(count).unwrap() / total;
        let cm = conditional_moments::<F>(&w_tilde)?;
        m1 += w * cm.mu_prime;
        m2 += w * cm.mu_prime * cm.mu_prime;
        s2 += w * cm.sigma2_prime;
    }
    Ok(VarianceSplit {
        var_mu_prime: m2 - m1 * m1,
        mean_sigma2_prime: s2,
    })
}
