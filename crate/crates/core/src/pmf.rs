//! Probability mass functions over dense integer ranges.

use std::collections::BTreeMap;

use crate::scalar::Weight;

/// Weights over the integers `offset .. offset + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<P> {
    offset: usize,
    probs: Vec<P>,
}

impl<P: Weight> Pmf<P> {
    pub fn point(k: usize) -> Self {
        Pmf {
            offset: k,
            probs: vec![P::one()],
        }
    }

    /// Builds a pmf from raw weights starting at `offset`. No normalization is applied.
    pub fn from_parts(offset: usize, probs: Vec<P>) -> Self {
        let mut pmf = Pmf { offset, probs };
        if pmf.probs.is_empty() {
            pmf.probs.push(P::zero());
        }
        pmf
    }

    /// Empirical pmf of a histogram (`counts[k]` observations of value `k`).
    pub fn from_histogram(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let first = counts.iter().position(|&c| c > 0).unwrap_or(0);
        let probs = counts[first..]
            .iter()
            .map(|&c| P::from_ratio(c, total.max(1)))
            .collect();
        let mut pmf = Pmf::from_parts(first, probs);
        pmf.trim_zero_tail();
        pmf
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// One past the largest represented value.
    pub fn end(&self) -> usize {
        self.offset + self.probs.len()
    }

    pub fn prob(&self, k: usize) -> P {
        if k < self.offset {
            return P::zero();
        }
        self.probs
            .get(k - self.offset)
            .cloned()
            .unwrap_or_else(P::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &P)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.offset + i, p))
    }

    pub fn total(&self) -> P {
        self.probs.iter().fold(P::zero(), |acc, p| acc + p.clone())
    }

    pub fn mean(&self) -> P {
        self.iter().fold(P::zero(), |acc, (k, p)| {
            acc + P::from_count(k as u64) * p.clone()
        })
    }

    pub fn variance(&self) -> P {
        let mean = self.mean();
        self.iter().fold(P::zero(), |acc, (k, p)| {
            let d = P::from_count(k as u64) - mean.clone();
            acc + d.clone() * d * p.clone()
        })
    }

    /// Smallest and largest values with nonzero mass.
    pub fn support(&self) -> Option<(usize, usize)> {
        let zero = P::zero();
        let lo = self.probs.iter().position(|p| *p != zero)?;
        let hi = self.probs.iter().rposition(|p| *p != zero)?;
        Some((self.offset + lo, self.offset + hi))
    }

    /// Law of `X + 1`.
    pub fn shifted(mut self, by: usize) -> Self {
        self.offset += by;
        self
    }

    /// In-place convolution with an independent Bernoulli(`p`).
    pub fn add_bernoulli(&mut self, p: &P) {
        let q = P::one() - p.clone();
        self.probs.push(P::zero());
        for i in (1..self.probs.len()).rev() {
            let moved = self.probs[i - 1].clone() * p.clone();
            let stay = self.probs[i].clone() * q.clone();
            self.probs[i] = stay + moved;
        }
        self.probs[0] = self.probs[0].clone() * q;
    }

    /// `self += weight * other`, extending the support as needed.
    pub fn add_scaled(&mut self, other: &Pmf<P>, weight: &P) {
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        if lo < self.offset {
            let pad = self.offset - lo;
            let mut probs = vec![P::zero(); pad];
            probs.append(&mut self.probs);
            self.probs = probs;
            self.offset = lo;
        }
        self.probs.resize(hi - lo, P::zero());
        for (k, p) in other.iter() {
            let slot = &mut self.probs[k - lo];
            *slot = slot.clone() + p.clone() * weight.clone();
        }
    }

    /// Drops negligible mass from both ends and renormalizes if anything was dropped.
    pub fn trim(&mut self) {
        let lo = self
            .probs
            .iter()
            .position(|p| !p.is_negligible())
            .unwrap_or(0);
        let hi = self
            .probs
            .iter()
            .rposition(|p| !p.is_negligible())
            .map_or(self.probs.len(), |i| i + 1);
        if lo == 0 && hi == self.probs.len() {
            return;
        }
        self.probs.truncate(hi);
        self.probs.drain(..lo);
        self.offset += lo;
        let total = self.total();
        for p in &mut self.probs {
            *p = p.clone() / total.clone();
        }
    }

    fn trim_zero_tail(&mut self) {
        let zero = P::zero();
        while self.probs.len() > 1 && *self.probs.last().unwrap() == zero {
            self.probs.pop();
        }
    }

    pub fn to_f64(&self) -> Pmf<f64> {
        Pmf {
            offset: self.offset,
            probs: self.probs.iter().map(Weight::to_f64).collect(),
        }
    }

    /// Nonzero entries keyed by value, for serialization.
    pub fn to_map(&self) -> BTreeMap<usize, f64> {
        self.iter()
            .filter(|(_, p)| p.to_f64() != 0.0)
            .map(|(k, p)| (k, p.to_f64()))
            .collect()
    }

    /// Largest pointwise absolute difference.
    pub fn max_abs_diff(&self, other: &Pmf<P>) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        (lo..hi)
            .map(|k| (self.prob(k).to_f64() - other.prob(k).to_f64()).abs())
            .fold(0.0, f64::max)
    }
}
