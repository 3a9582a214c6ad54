//! Seeded simulation of the number of missing sums.
//!
//! Trial `t` draws from ChaCha8 keyed by the seed with stream `t`, so the
//! histogram does not depend on how trials are split across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_N: usize = 4096;

const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SimModel {
    /// `A+A` with `A` Bernoulli(`p`).
    Independent { p: f64 },
    /// `A+B` with the conditional law of `B` given `A`.
    Correlated { p: f64, p1: f64, p2: f64 },
}

impl SimModel {
    fn validate(&self) -> Result<()> {
        let fields: &[(&'static str, f64)] = match self {
            SimModel::Independent { p } => &[("p", *p)],
            SimModel::Correlated { p, p1, p2 } => &[("p", *p), ("p1", *p1), ("p2", *p2)],
        };
        for &(field, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability {
                    field,
                    range: "[0,1]",
                    value: v.to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Put `0` in `A` on every trial.
    pub force_zero: bool,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissDistribution {
    pub n: usize,
    #[serde(flatten)]
    pub model: SimModel,
    pub trials: u64,
    pub seed: u64,
    pub force_zero: bool,
    /// `counts[k]` trials missed exactly `k` sums, `k` in `0..=2n-1`.
    pub counts: Vec<u64>,
}

impl MissDistribution {
    pub fn freq(&self, k: usize) -> f64 {
        self.counts.get(k).map_or(0.0, |&c| c as f64 / self.trials as f64)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|k| self.freq(k)).collect()
    }

    /// Binomial standard error of `freq(k)`.
    pub fn std_error(&self, k: usize) -> f64 {
        let f = self.freq(k);
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }

    /// Standard error of `freq(k1) - freq(k2)` under the multinomial law.
    pub fn diff_std_error(&self, k1: usize, k2: usize) -> f64 {
        let (f1, f2) = (self.freq(k1), self.freq(k2));
        ((f1 + f2 - (f1 - f2).powi(2)) / self.trials as f64).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / self.trials as f64
    }

    /// Pearson's homogeneity statistic against another histogram, with its
    /// degrees of freedom. Cells empty in both are skipped.
    pub fn chi_square(&self, other: &MissDistribution) -> (f64, usize) {
        let (n1, n2) = (self.trials as f64, other.trials as f64);
        let len = self.counts.len().max(other.counts.len());
        let mut stat = 0.0;
        let mut cells = 0;
        for k in 0..len {
            let a = self.counts.get(k).copied().unwrap_or(0) as f64;
            let b = other.counts.get(k).copied().unwrap_or(0) as f64;
            if a + b == 0.0 {
                continue;
            }
            cells += 1;
            let e1 = (a + b) * n1 / (n1 + n2);
            let e2 = (a + b) * n2 / (n1 + n2);
            stat += (a - e1).powi(2) / e1 + (b - e2).powi(2) / e2;
        }
        (stat, cells.max(1) - 1)
    }
}

/// `k` with `freq(k-1) > freq(k) < freq(k+1)`.
pub fn empirical_divots(dist: &MissDistribution) -> Vec<usize> {
    let f = dist.frequencies();
    (1..f.len().saturating_sub(1))
        .filter(|&k| f[k - 1] > f[k] && f[k] < f[k + 1])
        .collect()
}

/// Same, for a plain frequency sequence.
pub fn local_minima(f: &[f64]) -> Vec<usize> {
    (1..f.len().saturating_sub(1))
        .filter(|&k| f[k - 1] > f[k] && f[k] < f[k + 1])
        .collect()
}

/// Least-squares slope of `ln freq(k)` over the given `k`, skipping empty cells.
pub fn log_slope(dist: &MissDistribution, ks: impl IntoIterator<Item = usize>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks
        .into_iter()
        .filter(|&k| dist.freq(k) > 0.0)
        .map(|k| (k as f64, dist.freq(k).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `u < threshold` has probability `p` for a uniform 64-bit `u`.
#[derive(Clone, Copy)]
enum Coin {
    Never,
    Always,
    Below(u64),
}

impl Coin {
    fn new(p: f64) -> Self {
        if p <= 0.0 {
            Coin::Never
        } else if p >= 1.0 {
            Coin::Always
        } else {
            Coin::Below((p * 18446744073709551616.0) as u64)
        }
    }

    #[inline]
    fn flip(self, rng: &mut ChaCha8Rng) -> bool {
        match self {
            Coin::Never => false,
            Coin::Always => true,
            Coin::Below(t) => rng.next_u64() < t,
        }
    }
}

/// Bit set of sums `a + b`, by OR-ing `right` shifted by each element of `left`.
pub fn sumset_words(left: &[u64], right: &[u64], out: &mut [u64]) {
    out.iter_mut().for_each(|w| *w = 0);
    for (wi, &word) in left.iter().enumerate() {
        let mut rest = word;
        while rest != 0 {
            let shift = wi * 64 + rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let (off, bits) = (shift / 64, shift % 64);
            for (k, &r) in right.iter().enumerate() {
                if r == 0 {
                    continue;
                }
                out[k + off] |= r << bits;
                if bits != 0 {
                    out[k + off + 1] |= r >> (64 - bits);
                }
            }
        }
    }
}

struct Trial {
    n: usize,
    a: Vec<u64>,
    b: Vec<u64>,
    sums: Vec<u64>,
}

impl Trial {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Trial {
            n,
            a: vec![0; words],
            b: vec![0; words],
            sums: vec![0; 2 * words + 1],
        }
    }

    fn missing(&mut self, model: &SimModel, force_zero: bool, rng: &mut ChaCha8Rng) -> usize {
        self.a.iter_mut().for_each(|w| *w = 0);
        match *model {
            SimModel::Independent { p } => {
                let coin = Coin::new(p);
                for k in 0..self.n {
                    if coin.flip(rng) {
                        self.a[k / 64] |= 1 << (k % 64);
                    }
                }
                if force_zero {
                    self.a[0] |= 1;
                }
                sumset_words(&self.a, &self.a, &mut self.sums);
            }
            SimModel::Correlated { p, p1, p2 } => {
                let (coin, c1, c2) = (Coin::new(p), Coin::new(p1), Coin::new(p2));
                self.b.iter_mut().for_each(|w| *w = 0);
                for k in 0..self.n {
                    let mut in_a = coin.flip(rng);
                    if force_zero && k == 0 {
                        in_a = true;
                    }
                    let in_b = if in_a { c1.flip(rng) } else { c2.flip(rng) };
                    if in_a {
                        self.a[k / 64] |= 1 << (k % 64);
                    }
                    if in_b {
                        self.b[k / 64] |= 1 << (k % 64);
                    }
                }
                sumset_words(&self.a, &self.b, &mut self.sums);
            }
        }
        let present: u32 = self.sums.iter().map(|w| w.count_ones()).sum();
        2 * self.n - 1 - present as usize
    }
}

fn run(n: usize, model: SimModel, trials: u64, seed: u64, opts: &SimOptions) -> Result<MissDistribution> {
    if n == 0 || n > MAX_N {
        return Err(Error::out_of_range("n", n, format!("1..={MAX_N}")));
    }
    if trials == 0 {
        return Err(Error::out_of_range("trials", 0, ">= 1"));
    }
    model.validate()?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let batches = trials.div_ceil(BATCH);
    let work = || {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut trial = Trial::new(n);
                let mut counts = vec![0u64; 2 * n];
                for t in b * BATCH..((b + 1) * BATCH).min(trials) {
                    let mut rng = base.clone();
                    rng.set_stream(t);
                    rng.set_word_pos(0);
                    counts[trial.missing(&model, opts.force_zero, &mut rng)] += 1;
                }
                counts
            })
            .reduce(
                || vec![0u64; 2 * n],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    let counts = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(MissDistribution {
        n,
        model,
        trials,
        seed,
        force_zero: opts.force_zero,
        counts,
    })
}

pub fn simulate(n: usize, p: f64, trials: u64, seed: u64) -> Result<MissDistribution> {
    run(n, SimModel::Independent { p }, trials, seed, &SimOptions::default())
}

pub fn simulate_correlated(n: usize, p: f64, p1: f64, p2: f64, trials: u64, seed: u64) -> Result<MissDistribution> {
    run(n, SimModel::Correlated { p, p1, p2 }, trials, seed, &SimOptions::default())
}

pub fn simulate_with(n: usize, model: SimModel, trials: u64, seed: u64, opts: &SimOptions) -> Result<MissDistribution> {
    run(n, model, trials, seed, opts)
}
