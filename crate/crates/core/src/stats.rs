//! Special functions and distances between distributions.

use crate::deck::Deck;
use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::scalar::Real;
use crate::ties::binomial;

/// Running Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum<F> {
    sum: F,
    comp: F,
}

impl<F: Real> CompensatedSum<F> {
    pub(crate) fn new() -> Self {
        CompensatedSum {
            sum: F::zero(),
            comp: F::zero(),
        }
    }

    pub(crate) fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> F {
        self.sum + self.comp
    }
}

fn compensated_sum<F: Real>(terms: impl Iterator<Item = F>) -> F {
    let mut acc = CompensatedSum::new();
    terms.for_each(|x| acc.add(x));
    acc.value()
}

/// `1 + 1/2 + ... + 1/k`.
pub fn harmonic<F: Real>(k: u64) -> F {
    compensated_sum((1..=k).rev().map(|s| F::one() / F::from_u64(s).unwrap()))
}

/// `1 + 1/4 + ... + 1/k^2`.
pub fn harmonic2<F: Real>(k: u64) -> F {
    compensated_sum((1..=k).rev().map(|s| {
        let s = F::from_u64(s).unwrap();
        F::one() / (s * s)
    }))
}

/// Leading-order mean (and variance) of the greedy score: `H(m) ln n`.
pub fn predicted_mean<F: Real>(n: u64, m: u64) -> F {
    harmonic::<F>(m) * F::from_u64(n).unwrap().ln()
}

/// Exact `E[W_{j,t}]` under a uniform shuffle:
/// `C(t, j+1) * sum_i (m_i)_{j+1} / (|m|)_{j+1}`.
pub fn lambda_exact<F: Real>(deck: &Deck, j: u32, t: usize) -> Result<F> {
    if j < 1 || j >= deck.max_mult() {
        return Err(Error::OutOfRange {
            what: "j",
            value: j as usize,
            lo: 1,
            hi: deck.max_mult().saturating_sub(1) as usize,
        });
    }
    if t > deck.total() {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0,
            hi: deck.total(),
        });
    }
    if t <= j as usize {
        return Ok(F::zero());
    }
    let f = |x: usize| F::from_usize(x).unwrap();
    let total = deck.total();
    // C(t, j+1) / (|m|)_{j+1}, as one product to stay in range
    let ratio = (0..=j as usize).fold(F::one(), |acc, r| {
        acc * f(t - r) / (f(total - r) * f(r + 1))
    });
    let falling: F = compensated_sum(deck.multiplicities().iter().map(|&m| {
        (0..=j).fold(F::one(), |acc, r| {
            acc * F::from_i64(m as i64 - r as i64).unwrap()
        })
    }));
    Ok(ratio * falling)
}

/// Large-`n` form of the Poisson parameter for a balanced deck:
/// `t^{j+1} / n^j * C(m, j+1) / m^{j+1}`.
pub fn lambda_balanced_asymptotic<F: Real>(n: u64, m: u32, j: u32, t: u64) -> F {
    let f = |x: u64| F::from_u64(x).unwrap();
    let j1 = (j + 1) as i32;
    f(t).powi(j1) / f(n).powi(j as i32) * f(binomial(m as u64, j as u64 + 1)) / f(m as u64).powi(j1)
}

/// `e^{-lambda} lambda^k / k!`, evaluated in log space. `lambda = 0` is the point mass at 0.
pub fn poisson_pmf<F: Real>(lambda: F, k: u64) -> F {
    if lambda.is_zero() {
        return if k == 0 { F::one() } else { F::zero() };
    }
    let kf = F::from_u64(k).unwrap();
    (kf * lambda.ln() - lambda - (kf + F::one()).ln_gamma()).exp()
}

/// Poisson(`lambda`) weights on `0..=k_max`.
pub fn poisson_table<F: Real>(lambda: F, k_max: usize) -> Pmf<F> {
    Pmf::from_parts(
        0,
        (0..=k_max as u64).map(|k| poisson_pmf(lambda, k)).collect(),
    )
}

/// Half the L1 distance over the union of the supports.
pub fn tv_distance<F: Real>(p: &Pmf<F>, q: &Pmf<F>) -> F {
    let lo = p.offset().min(q.offset());
    let hi = p.end().max(q.end());
    let half = F::lit(0.5);
    half * compensated_sum((lo..hi).map(|k| (p.prob(k) - q.prob(k)).abs()))
}

/// Total variation distance between `p` and Poisson(`lambda`), including the
/// Poisson tail beyond `p`'s support.
pub fn tv_to_poisson<F: Real>(p: &Pmf<F>, lambda: F) -> F {
    let span = lambda + F::lit(40.0) * lambda.sqrt() + F::lit(10.0);
    let k_max = p.end().max(span.ceil().to_usize().unwrap());
    let q = poisson_table(lambda, k_max);
    let tail = (F::one() - q.total()).max(F::zero());
    tv_distance(p, &q) + F::lit(0.5) * tail
}

/// Standard normal CDF.
pub fn normal_cdf<F: Real>(x: F) -> F {
    F::lit(0.5) * (-x / F::SQRT_2()).erfc()
}

/// `sup_x |F(x) - Phi((x - mu) / sigma)|` for the CDF `F` of an integer pmf.
///
/// `F` is a step function, so the supremum is attained at a jump, either
/// just before it or at it. Both sides are checked at every support point.
pub fn kolmogorov_gap<F: Real>(pmf: &Pmf<F>, mu: F, sigma: F) -> Result<F> {
    if !sigma.is_finite() || sigma <= F::zero() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {:?}",
            sigma
        )));
    }
    let mut below = F::zero();
    let mut gap = F::zero();
    for (k, p) in pmf.iter() {
        let phi = normal_cdf((F::from_usize(k).unwrap() - mu) / sigma);
        let at = below + *p;
        gap = gap.max((below - phi).abs()).max((at - phi).abs());
        below = at;
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson_normal_cdf(x: f64) -> f64 {
        // Phi(x) = 1/2 + int_0^x phi
        let n = 200_000;
        let h = x / n as f64;
        let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = pdf(0.0) + pdf(x);
        for i in 1..n {
            acc += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        0.5 + acc * h / 3.0
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic::<f64>(1), 1.0);
        assert!((harmonic::<f64>(4) - 25.0 / 12.0).abs() < 1e-15);
        assert!((harmonic::<f32>(4) - 25.0 / 12.0).abs() < 1e-6);
        for k in [10u64, 1000, 100_000] {
            let gap = std::f64::consts::PI.powi(2) / 6.0 - harmonic2::<f64>(k);
            assert!(gap > 0.0 && gap < 1.0 / k as f64, "{k}: {gap}");
        }
    }

    #[test]
    fn predicted_mean_values() {
        assert!((predicted_mean::<f64>(3, 1) / 3f64.ln() - 1.0).abs() < 1e-15);
        assert!((predicted_mean::<f64>(500, 2) - 1.5 * 500f64.ln()).abs() < 1e-12);
        assert!((predicted_mean::<f64>(500, 2) - 9.32).abs() < 0.005);
        assert!((predicted_mean::<f64>(1000, 3) - 11.0 / 6.0 * 1000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lambda_exact_small_deck() {
        let d = Deck::new(vec![3, 3, 2]).unwrap();
        assert!((lambda_exact::<f64>(&d, 1, 2).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(lambda_exact::<f64>(&d, 1, 1).unwrap(), 0.0);
        assert_eq!(lambda_exact::<f64>(&d, 2, 2).unwrap(), 0.0);
        assert!(lambda_exact::<f64>(&d, 3, 2).is_err());
        assert!(lambda_exact::<f64>(&d, 0, 2).is_err());
        assert!(lambda_exact::<f64>(&d, 1, 9).is_err());
    }

    #[test]
    fn lambda_matches_asymptotic_for_balanced_deck() {
        let n = 10_000u64;
        let d = Deck::balanced(n as usize, 3).unwrap();
        let t = 100u64;
        let exact: f64 = lambda_exact(&d, 1, t as usize).unwrap();
        let asym: f64 = lambda_balanced_asymptotic(n, 3, 1, t);
        assert!((exact / asym - 1.0).abs() < 0.02, "{exact} vs {asym}");
    }

    #[test]
    fn poisson_values() {
        assert!((poisson_pmf(1.0f64, 0) - (-1f64).exp()).abs() < 1e-15);
        assert!((poisson_pmf(2.0f64, 2) - 2.0 * (-2f64).exp()).abs() < 1e-15);
        for lambda in [0.3f64, 1.0, 7.5, 120.0] {
            let k_max = (lambda + 40.0 * lambda.sqrt()) as usize;
            let total = poisson_table(lambda, k_max).total();
            assert!(
                (1.0 - 1e-9..=1.0 + 1e-9).contains(&total),
                "{lambda}: {total}"
            );
        }
        assert_eq!(poisson_pmf(0.0f64, 0), 1.0);
        assert_eq!(poisson_pmf(0.0f64, 3), 0.0);
    }

    #[test]
    fn tv_examples() {
        let p = Pmf::from_parts(0, vec![0.5f64, 0.5]);
        let q = Pmf::from_parts(0, vec![0.75f64, 0.25]);
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert_eq!(tv_distance(&Pmf::<f64>::point(0), &Pmf::point(1)), 1.0);
        assert!((tv_distance(&p, &q) - 0.25).abs() < 1e-15);
        assert!(tv_to_poisson(&Pmf::<f64>::point(0), 0.0).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0f64), 0.5);
        assert!((normal_cdf(1.959964f64) - 0.975).abs() < 1e-6);
        for x in [0.1f64, 0.7, 1.959964, 2.5, 4.0, 8.0] {
            assert!((normal_cdf(x) - simpson_normal_cdf(x)).abs() < 1e-10, "{x}");
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-12);
        }
        assert!((normal_cdf(1.0f32) - 0.841_344_7).abs() < 1e-6);
    }

    #[test]
    fn gap_of_point_mass_is_half() {
        let g = kolmogorov_gap(&Pmf::<f64>::point(3), 3.0, 1.0).unwrap();
        assert!((g - 0.5).abs() < 1e-15);
        assert!(kolmogorov_gap(&Pmf::<f64>::point(3), 3.0, 0.0).is_err());
    }

    #[test]
    fn gap_shrinks_for_longer_bernoulli_sums() {
        let gaps: Vec<f64> = [4u64, 16, 64, 256]
            .iter()
            .map(|&k| {
                let mut pmf = Pmf::<f64>::point(0);
                for s in 1..=k {
                    pmf.add_bernoulli(&(1.0 / s as f64));
                }
                let (mu, var) = (pmf.mean(), pmf.variance());
                kolmogorov_gap(&pmf, mu, var.sqrt()).unwrap()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pmf_strategy() -> impl Strategy<Value = Pmf<f64>> {
            (0usize..4, prop::collection::vec(0.0f64..1.0, 1..8)).prop_filter_map(
                "nonzero",
                |(offset, w)| {
                    let total: f64 = w.iter().sum();
                    (total > 1e-6)
                        .then(|| Pmf::from_parts(offset, w.iter().map(|x| x / total).collect()))
                },
            )
        }

        proptest! {
            #[test]
            fn tv_is_a_metric(p in pmf_strategy(), q in pmf_strategy(), r in pmf_strategy()) {
                let pq = tv_distance(&p, &q);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
                prop_assert!((pq - tv_distance(&q, &p)).abs() < 1e-15);
                prop_assert!(tv_distance(&p, &p) < 1e-12);
                prop_assert!(tv_distance(&p, &r) <= pq + tv_distance(&q, &r) + 1e-12);
            }

            #[test]
            fn normal_cdf_monotone(a in -9.0f64..9.0, b in -9.0f64..9.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let (fl, fh) = (normal_cdf(lo), normal_cdf(hi));
                prop_assert!(fl <= fh);
                prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
            }
        }
    }
}
