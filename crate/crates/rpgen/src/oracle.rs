//! Ground-truth machinery: brute-force enumeration of the satisfying set,
//! its closed-form cardinality, an exactly uniform sampler over it via
//! unranking, and exact output distributions of choice-driven procedures by
//! full branch enumeration with rational weights.

use crate::checker::{satisfies_bounds, satisfies_length};
use crate::policy::{Password, ValidatedPolicy};
use crate::rng::{ChoiceError, ChoiceSource};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};
use num::BigUint;
use std::collections::BTreeMap;
use thiserror::Error;

/// Cap on the brute-force string domain `|alphabet|^length`.
pub const MAX_ENUM_DOMAIN: u64 = 10_000_000;
/// Cap on the number of leaves a branch enumeration may visit.
pub const MAX_BRANCH_LEAVES: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("domain too large: {0}")]
    DomainTooLarge(String),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

/// All policy-satisfying passwords in lexicographic order (by code point).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatisfyingSet {
    pub passwords: Vec<Password>,
}

impl SatisfyingSet {
    pub fn count(&self) -> usize {
        self.passwords.len()
    }
}

/// Sorted union alphabet with each character's owning set index.
fn union_alphabet(p: &ValidatedPolicy) -> Vec<(u8, usize)> {
    let mut alpha: Vec<(u8, usize)> = p
        .sets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.chars.bytes().map(move |b| (b, i)))
        .collect();
    alpha.sort_unstable();
    alpha
}

/// Brute force over all length-L strings on the union alphabet, filtered by
/// the checker predicates. Output is sorted and duplicate-free by
/// construction.
pub fn enumerate_satisfying(p: &ValidatedPolicy) -> Result<SatisfyingSet, OracleError> {
    let alpha = union_alphabet(p);
    let mut domain: u64 = 1;
    for _ in 0..p.length {
        domain = domain
            .checked_mul(alpha.len() as u64)
            .filter(|&d| d <= MAX_ENUM_DOMAIN)
            .ok_or_else(|| {
                OracleError::DomainTooLarge(format!(
                    "{}^{} strings exceed the {MAX_ENUM_DOMAIN} enumeration cap",
                    alpha.len(),
                    p.length
                ))
            })?;
    }

    let mut passwords = Vec::new();
    let mut indices = vec![0usize; p.length];
    loop {
        let s: String = indices.iter().map(|&i| alpha[i].0 as char).collect();
        let pw = Password::new(s);
        if satisfies_length(&pw, p) && satisfies_bounds(&pw, p) {
            passwords.push(pw);
        }
        // odometer, most significant digit first for lexicographic order
        let mut pos = p.length;
        loop {
            if pos == 0 {
                return Ok(SatisfyingSet { passwords });
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < alpha.len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut result = BigUint::one();
    for i in 0..k.min(n - k) {
        result = result * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    result
}

/// Number of ways to extend a partial password by `remaining` characters so
/// that every set's final count lands within its bounds. `used[i]` is how
/// many characters of set `i` the partial password already has.
fn count_completions(p: &ValidatedPolicy, remaining: usize, used: &[usize]) -> BigUint {
    fn rec(p: &ValidatedPolicy, i: usize, remaining: usize, used: &[usize]) -> BigUint {
        if i == p.sets.len() {
            return if remaining == 0 {
                BigUint::one()
            } else {
                BigUint::zero()
            };
        }
        let set = &p.sets[i];
        let lo = set.min_occurs.saturating_sub(used[i]);
        let hi = set.max_occurs.saturating_sub(used[i]).min(remaining);
        let mut total = BigUint::zero();
        let size = BigUint::from(set.size());
        for k in lo..=hi {
            let ways = binomial(remaining, k) * size.pow(k as u32);
            total += ways * rec(p, i + 1, remaining - k, used);
        }
        total
    }
    rec(p, 0, remaining, used)
}

/// Closed-form cardinality of the satisfying set:
/// sum over per-set count vectors (k_1..k_m) with sum L and
/// min_i <= k_i <= max_i of multinomial(L; k) * prod |S_i|^k_i.
pub fn count_satisfying(p: &ValidatedPolicy) -> BigUint {
    count_completions(p, p.length, &vec![0; p.sets.len()])
}

/// Exactly uniform sampler over the satisfying set: one uniform rank, then
/// unranking against the lexicographic order via the completion-count
/// recursion.
#[derive(Debug)]
pub struct IdealSampler<'p> {
    policy: &'p ValidatedPolicy,
    alphabet: Vec<(u8, usize)>,
    count: usize,
}

impl<'p> IdealSampler<'p> {
    pub fn new(policy: &'p ValidatedPolicy) -> Result<Self, OracleError> {
        let count = count_satisfying(policy).to_usize().ok_or_else(|| {
            OracleError::DomainTooLarge("satisfying-set count does not fit a machine word".into())
        })?;
        Ok(IdealSampler {
            policy,
            alphabet: union_alphabet(policy),
            count,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The rank-th satisfying password in lexicographic order.
    pub fn unrank(&self, rank: usize) -> Password {
        assert!(rank < self.count, "rank {rank} out of range");
        let p = self.policy;
        let mut rank = BigUint::from(rank);
        let mut used = vec![0usize; p.sets.len()];
        let mut out = Vec::with_capacity(p.length);
        for pos in 0..p.length {
            let remaining = p.length - pos - 1;
            let mut placed = false;
            for &(c, si) in &self.alphabet {
                if used[si] >= p.sets[si].max_occurs {
                    continue;
                }
                used[si] += 1;
                let cnt = count_completions(p, remaining, &used);
                if rank < cnt {
                    out.push(c);
                    placed = true;
                    break;
                }
                rank -= cnt;
                used[si] -= 1;
            }
            assert!(placed, "unranking walked past the satisfying set");
        }
        Password::from_ascii_bytes(out)
    }

    pub fn sample(&self, cs: &mut dyn ChoiceSource) -> Result<Password, ChoiceError> {
        let rank = cs.choose(self.count)?;
        Ok(self.unrank(rank))
    }
}

/// One-shot uniform draw from the satisfying set.
pub fn ideal_sample(p: &ValidatedPolicy, cs: &mut dyn ChoiceSource) -> Result<Password, OracleError> {
    let sampler = IdealSampler::new(p)?;
    Ok(sampler.sample(cs)?)
}

/// Map from password to its exact output probability. Zero-mass entries are
/// never stored; the stored probabilities sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    entries: BTreeMap<Password, BigRational>,
}

impl ExactDistribution {
    pub fn prob(&self, pw: &Password) -> BigRational {
        self.entries.get(pw).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Password, &BigRational)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Password> {
        self.entries.keys()
    }

    pub fn total(&self) -> BigRational {
        self.entries.values().sum()
    }

    /// The uniform distribution over a nonempty support.
    pub fn uniform(support: impl IntoIterator<Item = Password>) -> Self {
        let keys: Vec<Password> = support.into_iter().collect();
        assert!(!keys.is_empty());
        let p = BigRational::new(BigInt::one(), BigInt::from(keys.len()));
        ExactDistribution {
            entries: keys.into_iter().map(|pw| (pw, p.clone())).collect(),
        }
    }
}

/// Replays a recorded choice prefix, then extends it with first choices.
/// One of these cursors is handed to the procedure under enumeration for
/// every root-to-leaf path.
pub struct EnumerationCursor<'a> {
    path: &'a mut Vec<usize>,
    fanouts: &'a mut Vec<usize>,
    pos: usize,
}

impl ChoiceSource for EnumerationCursor<'_> {
    fn choose(&mut self, n: usize) -> Result<usize, ChoiceError> {
        if n == 0 {
            return Err(ChoiceError::EmptyRange);
        }
        if self.pos == self.path.len() {
            self.path.push(0);
            self.fanouts.push(n);
        }
        debug_assert_eq!(
            self.fanouts[self.pos], n,
            "procedure under enumeration is not deterministic in its choices"
        );
        let v = self.path[self.pos];
        self.pos += 1;
        Ok(v)
    }
}

/// Runs `procedure` once per complete choice sequence, pairing each result
/// with the exact probability of that sequence under uniform choices
/// (the product of 1/n over every `choose(n)` on the path).
pub fn enumerate_branches<T, F>(
    mut procedure: F,
    max_leaves: u64,
) -> Result<Vec<(T, BigRational)>, OracleError>
where
    F: FnMut(&mut dyn ChoiceSource) -> Result<T, ChoiceError>,
{
    let mut path: Vec<usize> = Vec::new();
    let mut fanouts: Vec<usize> = Vec::new();
    let mut leaves: u64 = 0;
    let mut out = Vec::new();
    loop {
        let mut cursor = EnumerationCursor {
            path: &mut path,
            fanouts: &mut fanouts,
            pos: 0,
        };
        let value = procedure(&mut cursor)?;
        debug_assert_eq!(cursor.pos, path.len(), "stale choices left on the path");

        let mut denom = BigInt::one();
        for &n in fanouts.iter() {
            denom *= BigInt::from(n);
        }
        out.push((value, BigRational::new(BigInt::one(), denom)));

        leaves += 1;
        if leaves > max_leaves {
            return Err(OracleError::DomainTooLarge(format!(
                "branch enumeration exceeded {max_leaves} leaves"
            )));
        }

        // Advance depth-first: drop the exhausted suffix, bump the deepest
        // choice that still has siblings.
        loop {
            match path.last().copied() {
                None => return Ok(out),
                Some(last) if last + 1 < *fanouts.last().unwrap() => {
                    *path.last_mut().unwrap() += 1;
                    break;
                }
                Some(_) => {
                    path.pop();
                    fanouts.pop();
                }
            }
        }
    }
}

/// Exact output distribution of a choice-driven password procedure.
pub fn exact_distribution<F>(procedure: F) -> Result<ExactDistribution, OracleError>
where
    F: FnMut(&mut dyn ChoiceSource) -> Result<Password, ChoiceError>,
{
    let branches = enumerate_branches(procedure, MAX_BRANCH_LEAVES)?;
    let mut entries: BTreeMap<Password, BigRational> = BTreeMap::new();
    for (pw, weight) in branches {
        *entries.entry(pw).or_insert_with(BigRational::zero) += weight;
    }
    Ok(ExactDistribution { entries })
}

/// Exact distribution of the reference generator on `p`.
pub fn generator_distribution(p: &ValidatedPolicy) -> Result<ExactDistribution, OracleError> {
    exact_distribution(|cs| crate::generator::generate(p, cs))
}

/// Exact distribution of the ideal sampler on `p` (uniform by construction;
/// computing it through the same enumeration keeps the check independent).
pub fn ideal_distribution(p: &ValidatedPolicy) -> Result<ExactDistribution, OracleError> {
    let sampler = IdealSampler::new(p)?;
    exact_distribution(|cs| sampler.sample(cs))
}
