//! Seeded Monte Carlo experiments.
//!
//! Replicate `r` of every experiment draws from substream `r` of the
//! experiment seed and results are reduced in replicate order, so reports
//! are bit-identical for any worker count.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deck::{playout, shuffle_into, BottomSampler, Deck, TieRule};
use crate::error::{Error, Result};
use crate::exact::conditional_pmf;
use crate::pmf::Pmf;
use crate::rng::RngStream;
use crate::stats::{
    harmonic, kolmogorov_gap, lambda_balanced_asymptotic, lambda_exact, predicted_mean,
    tv_to_poisson, CompensatedSum,
};
use crate::ties::w_from_counts;

/// Resamples used for bootstrap error bars.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Coverage of bootstrap percentile intervals.
pub const CI_LEVEL: f64 = 0.99;
/// Smallest replicate count accepted by [`variance_decomposition`].
pub const MIN_VARIANCE_REPS: u64 = 10_000;

// Substream reserved for bootstrap resampling; replicates use 0..reps.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TieSummary {
    /// Average `W~_j`, `j = 1..=max_mult`.
    pub mean_w_tilde: Vec<f64>,
    pub mean_mu_prime: f64,
    pub var_mu_prime: f64,
    pub mean_sigma2_prime: f64,
}

/// Score statistics of one simulated deck.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub deck: String,
    pub n: usize,
    pub max_mult: u32,
    pub reps: u64,
    pub seed: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// `H(max_mult) ln n`.
    pub predicted: f64,
    /// Kolmogorov distance between the standardized scores and the normal law;
    /// absent when every replicate scored the same.
    pub ks_gap: Option<f64>,
    pub histogram: BTreeMap<usize, u64>,
    pub extras: TieSummary,
}

/// `mu(n2) - mu(n1)` against `H(m) ln(n2 / n1)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Increment {
    pub n1: usize,
    pub n2: usize,
    pub observed: f64,
    pub predicted: f64,
    /// Standard error of `observed`.
    pub se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CltReport {
    pub experiment: String,
    pub m: u32,
    pub reps: u64,
    pub seed: u64,
    pub reports: Vec<ExperimentReport>,
    pub increments: Vec<Increment>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PoissonReport {
    pub experiment: String,
    pub deck: String,
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    pub j: u32,
    pub t: usize,
    /// Exact `E[W_{j,t}]`.
    pub lambda: f64,
    /// Large-`n` formula, balanced decks only.
    pub lambda_asymptotic: Option<f64>,
    pub mean_w: f64,
    pub pmf: BTreeMap<usize, f64>,
    pub tv: f64,
    pub tv_ci: [f64; 2],
    pub t_over_n: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VarianceDecomposition {
    pub experiment: String,
    pub deck: String,
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    pub mean: f64,
    pub var_s: f64,
    pub var_mu_prime: f64,
    pub mean_sigma2_prime: f64,
    /// `var_s - var_mu_prime - mean_sigma2_prime`
    pub residual: f64,
    pub residual_ci: [f64; 2],
    pub ci_level: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CondCltEntry {
    pub w_tilde: Vec<u32>,
    pub mu_prime: f64,
    pub sigma2_prime: f64,
    /// `None` when the conditional variance is zero.
    pub gap: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CondCltReport {
    pub experiment: String,
    pub entries: Vec<CondCltEntry>,
}

/// One replicate of a full greedy game.
#[derive(Debug, Clone)]
struct GameSample {
    score: u32,
    w_tilde: Vec<u32>,
}

/// Prefix sums of `1/s` and `1/s^2`.
struct HarmonicTable {
    h: Vec<f64>,
    h2: Vec<f64>,
}

impl HarmonicTable {
    fn new(k_max: usize) -> Self {
        let (mut h, mut h2) = (vec![0.0], vec![0.0]);
        let (mut acc, mut acc2) = (CompensatedSum::new(), CompensatedSum::new());
        for k in 1..=k_max {
            let x = k as f64;
            acc.add(1.0 / x);
            acc2.add(1.0 / (x * x));
            h.push(acc.value());
            h2.push(acc2.value());
        }
        HarmonicTable { h, h2 }
    }

    /// `(mu', sigma'^2)` for a tie-count vector.
    fn moments(&self, w_tilde: &[u32]) -> (f64, f64) {
        let mu: f64 = w_tilde.iter().map(|&w| self.h[w as usize]).sum();
        let h2: f64 = w_tilde.iter().map(|&w| self.h2[w as usize]).sum();
        (mu, mu - h2)
    }
}

fn check_reps(reps: u64, min: u64) -> Result<()> {
    if reps < min {
        return Err(Error::InvalidParameter(format!(
            "reps must be at least {min}, got {reps}"
        )));
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Plays `reps` shuffled games, returning scores and tie counts in replicate order.
fn simulate_games(deck: &Deck, reps: u64, seed: u64, workers: usize) -> Result<Vec<GameSample>> {
    let root = RngStream::new(seed);
    let canonical = deck.cards();
    let levels = deck.max_mult() as usize;
    Ok(pool(workers)?.install(|| {
        (0..reps)
            .into_par_iter()
            .map_init(Vec::new, |buf, r| {
                let mut rng = root.substream(r);
                shuffle_into(&canonical, buf, &mut rng);
                // the first step at level j sees s = W~_j tied types
                let mut w_tilde = vec![0u32; levels];
                let score = playout(deck, buf, TieRule::Uniform, &mut rng, |step| {
                    let slot = &mut w_tilde[step.max_mult as usize - 1];
                    if *slot == 0 {
                        *slot = step.tied as u32;
                    }
                });
                GameSample {
                    score: score as u32,
                    w_tilde,
                }
            })
            .collect()
    }))
}

/// Mean and unbiased variance of integer data, computed exactly before rounding.
fn integer_moments(values: impl Iterator<Item = u64>) -> (f64, f64) {
    let (mut n, mut s1, mut s2) = (0u128, 0u128, 0u128);
    for v in values {
        n += 1;
        s1 += v as u128;
        s2 += (v as u128) * (v as u128);
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = s1 as f64 / n as f64;
    let var = if n > 1 {
        (n * s2 - s1 * s1) as f64 / (n * (n - 1)) as f64
    } else {
        0.0
    };
    (mean, var)
}

/// Mean and unbiased variance, summed in index order.
fn float_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn percentile_interval(mut xs: Vec<f64>, level: f64) -> [f64; 2] {
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (xs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        xs[lo] + (xs[hi] - xs[lo]) * (pos - lo as f64)
    };
    let tail = (1.0 - level) / 2.0;
    [q(tail), q(1.0 - tail)]
}

fn histogram_of(values: impl Iterator<Item = usize>) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for v in values {
        *hist.entry(v).or_insert(0) += 1;
    }
    hist
}

fn dense_pmf(hist: &BTreeMap<usize, u64>) -> Pmf<f64> {
    let hi = hist.keys().next_back().copied().unwrap_or(0);
    let mut counts = vec![0u64; hi + 1];
    for (&k, &c) in hist {
        counts[k] = c;
    }
    Pmf::from_histogram(&counts)
}

fn report_from_games(
    experiment: &str,
    deck: &Deck,
    reps: u64,
    seed: u64,
    games: &[GameSample],
) -> Result<ExperimentReport> {
    let (mean, var) = integer_moments(games.iter().map(|g| g.score as u64));
    let histogram = histogram_of(games.iter().map(|g| g.score as usize));
    let ks_gap = if var > 0.0 {
        Some(kolmogorov_gap(&dense_pmf(&histogram), mean, var.sqrt())?)
    } else {
        None
    };

    let table = HarmonicTable::new(deck.n());
    let (mus, sigmas): (Vec<f64>, Vec<f64>) =
        games.iter().map(|g| table.moments(&g.w_tilde)).unzip();
    let (mean_mu_prime, var_mu_prime) = float_moments(&mus);
    let (mean_sigma2_prime, _) = float_moments(&sigmas);
    let levels = deck.max_mult() as usize;
    let mean_w_tilde = (0..levels)
        .map(|j| {
            float_moments(
                &games
                    .iter()
                    .map(|g| g.w_tilde[j] as f64)
                    .collect::<Vec<_>>(),
            )
            .0
        })
        .collect();

    Ok(ExperimentReport {
        experiment: experiment.to_string(),
        deck: deck.spec(),
        n: deck.n(),
        max_mult: deck.max_mult(),
        reps,
        seed,
        mean,
        var,
        predicted: predicted_mean(deck.n() as u64, deck.max_mult() as u64),
        ks_gap,
        histogram,
        extras: TieSummary {
            mean_w_tilde,
            mean_mu_prime,
            var_mu_prime,
            mean_sigma2_prime,
        },
    })
}

/// Shuffles and plays `reps` greedy games with uniform tie-breaks.
pub fn run_mc(deck: &Deck, reps: u64, seed: u64, workers: usize) -> Result<ExperimentReport> {
    check_reps(reps, 1)?;
    let games = simulate_games(deck, reps, seed, workers)?;
    report_from_games("simulate", deck, reps, seed, &games)
}

/// Balanced decks with `m` copies per type, one report per entry of `n_list`.
///
/// Deck `i` uses substream `i` of `seed`.
pub fn clt_experiment(
    m: u32,
    n_list: &[usize],
    reps: u64,
    seed: u64,
    workers: usize,
) -> Result<CltReport> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("empty list of deck sizes".into()));
    }
    let root = RngStream::new(seed);
    let mut reports = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let deck = Deck::balanced(n, m)?;
        let deck_seed = root.substream(i as u64).next_u64();
        let mut report = run_mc(&deck, reps, deck_seed, workers)?;
        report.experiment = "clt".into();
        reports.push(report);
    }
    let h_m = harmonic::<f64>(m as u64);
    let increments = reports
        .windows(2)
        .map(|w| Increment {
            n1: w[0].n,
            n2: w[1].n,
            observed: w[1].mean - w[0].mean,
            predicted: h_m * (w[1].n as f64 / w[0].n as f64).ln(),
            se: (w[0].var / w[0].reps as f64 + w[1].var / w[1].reps as f64).sqrt(),
        })
        .collect();
    Ok(CltReport {
        experiment: "clt".into(),
        m,
        reps,
        seed,
        reports,
        increments,
    })
}

/// Empirical law of `W_{j,t}` over `reps` shuffles, compared with Poisson(`E[W_{j,t}]`).
pub fn poisson_experiment(
    deck: &Deck,
    j: u32,
    t: usize,
    reps: u64,
    seed: u64,
    workers: usize,
) -> Result<PoissonReport> {
    check_reps(reps, 1)?;
    let lambda: f64 = lambda_exact(deck, j, t)?;
    let root = RngStream::new(seed);
    let n_types = deck.n();
    let samples: Vec<usize> = pool(workers)?.install(|| {
        (0..reps)
            .into_par_iter()
            .map_init(
                || (BottomSampler::new(deck), vec![0u32; n_types]),
                |(sampler, counts), r| {
                    let mut rng = root.substream(r);
                    let bottom = sampler.draw(t, &mut rng);
                    for &c in bottom {
                        counts[c] += 1;
                    }
                    // each type contributes C(count, j+1) once; zero it after use
                    let mut w = 0u64;
                    for &c in bottom {
                        if counts[c] > 0 {
                            w += w_from_counts([counts[c]].iter(), j);
                            counts[c] = 0;
                        }
                    }
                    w as usize
                },
            )
            .collect()
    });

    let hist = histogram_of(samples.iter().copied());
    let pmf = dense_pmf(&hist);
    let tv = tv_to_poisson(&pmf, lambda);

    let mut boot_rng = root.substream(BOOTSTRAP_STREAM);
    let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let resample = histogram_of(
                (0..samples.len()).map(|_| samples[boot_rng.random_range(0..samples.len())]),
            );
            tv_to_poisson(&dense_pmf(&resample), lambda)
        })
        .collect();

    let lambda_asymptotic = deck
        .is_balanced()
        .then(|| lambda_balanced_asymptotic(deck.n() as u64, deck.max_mult(), j, t as u64));
    let (mean_w, _) = integer_moments(samples.iter().map(|&w| w as u64));
    Ok(PoissonReport {
        experiment: "poisson".into(),
        deck: deck.spec(),
        n: deck.n(),
        reps,
        seed,
        j,
        t,
        lambda,
        lambda_asymptotic,
        mean_w,
        pmf: pmf.to_map(),
        tv,
        tv_ci: percentile_interval(boots, CI_LEVEL),
        t_over_n: t as f64 / deck.n() as f64,
    })
}

/// Splits the simulated score variance into `Var(mu') + E[sigma'^2]` and
/// reports the residual with a bootstrap interval.
pub fn variance_decomposition(
    deck: &Deck,
    reps: u64,
    seed: u64,
    workers: usize,
) -> Result<VarianceDecomposition> {
    check_reps(reps, MIN_VARIANCE_REPS)?;
    let games = simulate_games(deck, reps, seed, workers)?;
    let table = HarmonicTable::new(deck.n());
    let scores: Vec<f64> = games.iter().map(|g| g.score as f64).collect();
    let (mus, sigmas): (Vec<f64>, Vec<f64>) =
        games.iter().map(|g| table.moments(&g.w_tilde)).unzip();

    let residual_of = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut s, mut mu, mut sg) = (Vec::new(), Vec::new(), Vec::new());
        for i in idx {
            s.push(scores[i]);
            mu.push(mus[i]);
            sg.push(sigmas[i]);
        }
        let (mean, var_s) = float_moments(&s);
        let (_, var_mu) = float_moments(&mu);
        let (mean_sigma2, _) = float_moments(&sg);
        (mean, var_s, var_mu, mean_sigma2)
    };

    let (mean, var_s, var_mu_prime, mean_sigma2_prime) = residual_of(&mut (0..games.len()));
    let root = RngStream::new(seed);
    let mut boot_rng = root.substream(BOOTSTRAP_STREAM);
    let len = games.len();
    let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let (_, v, vm, ms) = residual_of(&mut (0..len).map(|_| boot_rng.random_range(0..len)));
            v - vm - ms
        })
        .collect();

    Ok(VarianceDecomposition {
        experiment: "varcheck".into(),
        deck: deck.spec(),
        n: deck.n(),
        reps,
        seed,
        mean,
        var_s,
        var_mu_prime,
        mean_sigma2_prime,
        residual: var_s - var_mu_prime - mean_sigma2_prime,
        residual_ci: percentile_interval(boots, CI_LEVEL),
        ci_level: CI_LEVEL,
    })
}

/// Exact Kolmogorov gap of each conditional score law against the normal
/// law with the same mean and variance. No sampling.
pub fn conditional_clt_check(w_tilde_list: &[Vec<u32>]) -> Result<CondCltReport> {
    let entries = w_tilde_list
        .iter()
        .map(|w| {
            let pmf = conditional_pmf::<f64>(w)?;
            let cm = crate::exact::conditional_moments::<f64>(w)?;
            let degenerate = cm.sigma2_prime <= 0.0;
            let gap = if degenerate {
                None
            } else {
                Some(kolmogorov_gap(&pmf, cm.mu_prime, cm.sigma2_prime.sqrt())?)
            };
            Ok(CondCltEntry {
                w_tilde: w.clone(),
                mu_prime: cm.mu_prime,
                sigma2_prime: cm.sigma2_prime,
                gap,
                degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CondCltReport {
        experiment: "condclt".into(),
        entries,
    })
}
