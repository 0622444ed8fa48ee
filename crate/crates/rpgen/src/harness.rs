//! Real-vs-ideal distinguishing experiments: sampling games, total
//! variation distance, chi-squared statistics, and advantage reports. The
//! exact-mode advantage is the TV distance between the two exact
//! distributions, which is what the optimal one-query distinguisher
//! achieves.

use crate::generator::generate;
use crate::oracle::{
    count_satisfying, generator_distribution, ideal_distribution, ExactDistribution, IdealSampler,
    OracleError,
};
use crate::policy::{Password, Policy, ValidatedPolicy};
use crate::rng::{
    make_choice_source, ChoiceError, ChoiceSource, OsByteSource, RngVariant, SeededByteSource,
    WordWidth,
};
use num::rational::BigRational;
use num::traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub type Histogram = BTreeMap<Password, u64>;

/// Samples drawn per worker stream when a seeded empirical run is split
/// across threads. Fixed so the merged histogram does not depend on the
/// thread count.
const CHUNK: u64 = 4096;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameMode {
    Exact,
    Empirical,
}

/// `n` draws from the reference generator, aggregated into counts.
pub fn run_real_game(
    p: &ValidatedPolicy,
    n: u64,
    cs: &mut dyn ChoiceSource,
) -> Result<Histogram, ChoiceError> {
    let mut hist = Histogram::new();
    for _ in 0..n {
        *hist.entry(generate(p, cs)?).or_insert(0) += 1;
    }
    Ok(hist)
}

/// `n` draws from the ideal uniform sampler, aggregated into counts.
pub fn run_ideal_game(
    p: &ValidatedPolicy,
    n: u64,
    cs: &mut dyn ChoiceSource,
) -> Result<Histogram, HarnessError> {
    let sampler = IdealSampler::new(p)?;
    let mut hist = Histogram::new();
    for _ in 0..n {
        *hist.entry(sampler.sample(cs)?).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Exact total variation distance: half the L1 distance over the union of
/// supports.
pub fn tv_exact(a: &ExactDistribution, b: &ExactDistribution) -> BigRational {
    let mut sum = BigRational::zero();
    let support: std::collections::BTreeSet<&Password> = a.support().chain(b.support()).collect();
    for pw in support {
        sum += (a.prob(pw) - b.prob(pw)).abs();
    }
    sum / BigRational::from_integer(2.into())
}

/// Plug-in total variation estimate between two normalized histograms.
pub fn tv_histograms(a: &Histogram, b: &Histogram) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    assert!(na > 0 && nb > 0, "histograms must be nonempty");
    let support: std::collections::BTreeSet<&Password> = a.keys().chain(b.keys()).collect();
    let mut sum = 0.0;
    for pw in support {
        let pa = *a.get(pw).unwrap_or(&0) as f64 / na as f64;
        let pb = *b.get(pw).unwrap_or(&0) as f64 / nb as f64;
        sum += (pa - pb).abs();
    }
    sum / 2.0
}

/// Pearson chi-squared statistic of observed counts against exact expected
/// proportions, with dof = |expected support| - 1.
pub fn chi_squared(h: &Histogram, expected: &ExactDistribution) -> (f64, usize) {
    debug_assert!(h.keys().all(|pw| expected.prob(pw) > BigRational::zero()));
    let n: u64 = h.values().sum();
    assert!(n > 0, "chi-squared needs at least one observation");
    let mut statistic = 0.0;
    for (pw, prob) in expected.iter() {
        let expected_count = n as f64 * prob.to_f64().expect("probability fits f64");
        let observed = *h.get(pw).unwrap_or(&0) as f64;
        let d = observed - expected_count;
        statistic += d * d / expected_count;
    }
    (statistic, expected.len() - 1)
}

/// Exact or empirical probability, serialized as `{num, den}` or a float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Exact { num: String, den: String },
    Float(f64),
}

impl ProbValue {
    pub fn exact(r: &BigRational) -> Self {
        ProbValue::Exact {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            ProbValue::Exact { num, den } => {
                let n: f64 = num.parse().unwrap_or(f64::NAN);
                let d: f64 = den.parse().unwrap_or(f64::NAN);
                n / d
            }
            ProbValue::Float(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRow {
    pub pw: String,
    pub real: ProbValue,
    pub ideal: ProbValue,
}

/// Statistics of one Real-vs-Ideal experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub policy: Policy,
    pub mode: GameMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
    pub tv: ProbValue,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chi2: Option<f64>,
    pub dof: u64,
    pub advantage: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table: Option<Vec<ProbRow>>,
}

/// Exact-mode report: both output distributions computed by branch
/// enumeration, advantage = exact TV distance.
pub fn exact_report(p: &ValidatedPolicy) -> Result<GameReport, HarnessError> {
    let real = generator_distribution(p)?;
    let ideal = ideal_distribution(p)?;
    let tv = tv_exact(&real, &ideal);
    let support: std::collections::BTreeSet<Password> =
        real.support().chain(ideal.support()).cloned().collect();
    let table = support
        .into_iter()
        .map(|pw| ProbRow {
            real: ProbValue::exact(&real.prob(&pw)),
            ideal: ProbValue::exact(&ideal.prob(&pw)),
            pw: pw.as_str().to_owned(),
        })
        .collect();
    Ok(GameReport {
        policy: p.as_policy().clone(),
        mode: GameMode::Exact,
        samples: None,
        advantage: tv.to_f64().expect("tv fits f64"),
        tv: ProbValue::exact(&tv),
        chi2: None,
        dof: ideal.len() as u64 - 1,
        table: Some(table),
    })
}

/// Empirical-mode report: plug-in TV between the two game histograms, plus
/// a chi-squared test of the real histogram against the exact ideal
/// distribution when that distribution is small enough to compute.
pub fn empirical_report(
    p: &ValidatedPolicy,
    real_hist: Histogram,
    ideal_hist: Histogram,
) -> Result<GameReport, HarnessError> {
    let samples: u64 = real_hist.values().sum();
    let tv = tv_histograms(&real_hist, &ideal_hist);
    let (chi2, dof) = match ideal_distribution(p) {
        Ok(ideal_exact) => {
            let (stat, dof) = chi_squared(&real_hist, &ideal_exact);
            (Some(stat), dof as u64)
        }
        Err(OracleError::DomainTooLarge(_)) => {
            let count = count_satisfying(p);
            let dof = (count - num::BigUint::from(1u32)).to_u64().unwrap_or(u64::MAX);
            (None, dof)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(GameReport {
        policy: p.as_policy().clone(),
        mode: GameMode::Empirical,
        samples: Some(samples),
        tv: ProbValue::Float(tv),
        chi2,
        dof,
        advantage: tv,
        table: None,
    })
}

/// Runs the requested experiment end to end. Empirical mode draws
/// `samples` from each game using the two supplied sources.
pub fn advantage_report(
    p: &ValidatedPolicy,
    mode: GameMode,
    samples: u64,
    real_cs: &mut dyn ChoiceSource,
    ideal_cs: &mut dyn ChoiceSource,
) -> Result<GameReport, HarnessError> {
    match mode {
        GameMode::Exact => exact_report(p),
        GameMode::Empirical => {
            let real = run_real_game(p, samples, real_cs)?;
            let ideal = run_ideal_game(p, samples, ideal_cs)?;
            empirical_report(p, real, ideal)
        }
    }
}

fn merge(into: &mut Histogram, from: Histogram) {
    for (pw, c) in from {
        *into.entry(pw).or_insert(0) += c;
    }
}

/// Seeded empirical games split into fixed-size chunks, each drawn from its
/// own derived stream. The merged histograms depend only on the seed and
/// sample count, never on the thread count; merging counts is associative
/// and commutative.
pub fn empirical_games_seeded(
    p: &ValidatedPolicy,
    samples: u64,
    seed: u64,
    variant: RngVariant,
    threads: usize,
) -> Result<(Histogram, Histogram), HarnessError> {
    let threads = threads.max(1);
    let chunks: Vec<(u64, u64)> = (0..samples.div_ceil(CHUNK))
        .map(|i| (i, CHUNK.min(samples - i * CHUNK)))
        .collect();

    let results: Vec<Result<(Histogram, Histogram), HarnessError>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..threads {
            let my_chunks: Vec<(u64, u64)> = chunks
                .iter()
                .copied()
                .skip(worker)
                .step_by(threads)
                .collect();
            handles.push(scope.spawn(move || {
                let mut real = Histogram::new();
                let mut ideal = Histogram::new();
                for (chunk, len) in my_chunks {
                    let mut real_cs = make_choice_source(
                        SeededByteSource::with_stream(seed, 2 * chunk),
                        WordWidth::W64,
                        variant,
                    );
                    merge(&mut real, run_real_game(p, len, &mut real_cs)?);
                    let mut ideal_cs = make_choice_source(
                        SeededByteSource::with_stream(seed, 2 * chunk + 1),
                        WordWidth::W64,
                        variant,
                    );
                    merge(&mut ideal, run_ideal_game(p, len, &mut ideal_cs)?);
                }
                Ok((real, ideal))
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut real = Histogram::new();
    let mut ideal = Histogram::new();
    for r in results {
        let (re, id) = r?;
        merge(&mut real, re);
        merge(&mut ideal, id);
    }
    Ok((real, ideal))
}

/// Empirical games from the operating-system CSPRNG (not reproducible).
pub fn empirical_games_os(
    p: &ValidatedPolicy,
    samples: u64,
    variant: RngVariant,
) -> Result<(Histogram, Histogram), HarnessError> {
    let mut real_cs = make_choice_source(OsByteSource, WordWidth::W64, variant);
    let mut ideal_cs = make_choice_source(OsByteSource, WordWidth::W64, variant);
    let real = run_real_game(p, samples, &mut real_cs)?;
    let ideal = run_ideal_game(p, samples, &mut ideal_cs)?;
    Ok((real, ideal))
}
