//! Predicates over (password, policy) pairs: the executable form of the
//! correctness experiment. A generator is correct when every output passes
//! both predicates.

use crate::generator::generate;
use crate::policy::{Password, Policy, ValidatedPolicy};
use crate::rng::{ChoiceError, ChoiceSource};

/// True iff the password has exactly the policy's length.
pub fn satisfies_length(pw: &Password, p: &Policy) -> bool {
    pw.len() == p.length
}

/// True iff every character belongs to one of the policy's sets and each
/// set's occurrence count lies within its min/max bounds.
pub fn satisfies_bounds(pw: &Password, p: &Policy) -> bool {
    let mut counts = vec![0usize; p.sets.len()];
    for c in pw.as_str().chars() {
        match p.owning_set(c) {
            Some(i) => counts[i] += 1,
            None => return false,
        }
    }
    p.sets
        .iter()
        .zip(&counts)
        .all(|(s, &n)| s.min_occurs <= n && n <= s.max_occurs)
}

/// Runs the generator once and checks both predicates on the output.
pub fn correctness_experiment(
    p: &ValidatedPolicy,
    cs: &mut dyn ChoiceSource,
) -> Result<bool, ChoiceError> {
    let pw = generate(p, cs)?;
    Ok(satisfies_length(&pw, p) && satisfies_bounds(&pw, p))
}
