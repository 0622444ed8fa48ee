//! Password composition policies: character sets with per-set occurrence
//! budgets, validation, satisfiability, and the external JSON format.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const MIN_LENGTH: usize = 1;
pub const MAX_LENGTH: usize = 200;

const LOWERCASE: &str = "abcdefghijklmnopqrstuvwxyz";
const UPPERCASE: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const DIGITS: &str = "0123456789";
const SPECIAL: &str = "-_.:!";

/// An ordered set of distinct characters together with how many of the
/// generated password's characters must (`min_occurs`) and may
/// (`max_occurs`) come from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSetSpec {
    pub name: String,
    pub chars: String,
    #[serde(rename = "min")]
    pub min_occurs: usize,
    #[serde(rename = "max")]
    pub max_occurs: usize,
}

impl CharSetSpec {
    pub fn new(
        name: impl Into<String>,
        chars: impl Into<String>,
        min_occurs: usize,
        max_occurs: usize,
    ) -> Self {
        CharSetSpec {
            name: name.into(),
            chars: chars.into(),
            min_occurs,
            max_occurs,
        }
    }

    pub fn size(&self) -> usize {
        self.chars.len()
    }

    pub fn contains(&self, c: char) -> bool {
        self.chars.contains(c)
    }
}

/// A password length plus a list of character-set budgets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub length: usize,
    pub sets: Vec<CharSetSpec>,
}

impl Policy {
    pub fn new(length: usize, sets: Vec<CharSetSpec>) -> Self {
        Policy { length, sets }
    }

    pub fn validate(self) -> Result<ValidatedPolicy, PolicyError> {
        validate(self)
    }

    /// Index of the unique set containing `c`, if any.
    pub fn owning_set(&self, c: char) -> Option<usize> {
        self.sets.iter().position(|s| s.contains(c))
    }
}

/// A policy that passed [`validate`]: all invariants hold and every
/// `max_occurs` is clamped to the password length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ValidatedPolicy(Policy);

impl ValidatedPolicy {
    pub fn as_policy(&self) -> &Policy {
        &self.0
    }

    pub fn into_policy(self) -> Policy {
        self.0
    }
}

impl std::ops::Deref for ValidatedPolicy {
    type Target = Policy;

    fn deref(&self) -> &Policy {
        &self.0
    }
}

/// A generated password. Characters always come from the originating
/// policy's sets, so the content is printable ASCII.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Password(String);

impl Password {
    pub fn new(s: impl Into<String>) -> Self {
        Password(s.into())
    }

    pub(crate) fn from_ascii_bytes(bytes: Vec<u8>) -> Self {
        debug_assert!(bytes.is_ascii());
        Password(String::from_utf8(bytes).expect("password bytes are ASCII"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("LengthOutOfRange: {0}")]
    LengthOutOfRange(String),
    #[error("EmptySet: {0}")]
    EmptySet(String),
    #[error("DuplicateChars: {0}")]
    DuplicateChars(String),
    #[error("OverlappingSets: {0}")]
    OverlappingSets(String),
    #[error("MinExceedsMax: {0}")]
    MinExceedsMax(String),
    #[error("Unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error("UnknownSetName: {0}")]
    UnknownSetName(String),
    #[error("MalformedInput: {0}")]
    MalformedInput(String),
}

impl PolicyError {
    pub fn kind(&self) -> &'static str {
        match self {
            PolicyError::LengthOutOfRange(_) => "LengthOutOfRange",
            PolicyError::EmptySet(_) => "EmptySet",
            PolicyError::DuplicateChars(_) => "DuplicateChars",
            PolicyError::OverlappingSets(_) => "OverlappingSets",
            PolicyError::MinExceedsMax(_) => "MinExceedsMax",
            PolicyError::Unsatisfiable(_) => "Unsatisfiable",
            PolicyError::UnknownSetName(_) => "UnknownSetName",
            PolicyError::MalformedInput(_) => "MalformedInput",
        }
    }
}

/// One of the four built-in character classes, with a zero minimum and the
/// caller-supplied maximum budget.
pub fn default_charset(name: &str, max_cap: usize) -> Result<CharSetSpec, PolicyError> {
    let chars = match name {
        "lowercase" => LOWERCASE,
        "uppercase" => UPPERCASE,
        "digits" => DIGITS,
        "special" => SPECIAL,
        other => {
            return Err(PolicyError::UnknownSetName(format!(
                "no built-in character set named {other:?}"
            )))
        }
    };
    Ok(CharSetSpec::new(name, chars, 0, max_cap))
}

/// Checks every policy invariant and returns a normalized copy with each
/// set's `max_occurs` clamped to the password length.
///
/// Violations are reported in a fixed order: length, then per-set checks in
/// list order, then disjointness, then satisfiability.
pub fn validate(mut policy: Policy) -> Result<ValidatedPolicy, PolicyError> {
    if policy.length < MIN_LENGTH || policy.length > MAX_LENGTH {
        return Err(PolicyError::LengthOutOfRange(format!(
            "length {} not in {MIN_LENGTH}..={MAX_LENGTH}",
            policy.length
        )));
    }
    for set in &policy.sets {
        if set.chars.is_empty() {
            return Err(PolicyError::EmptySet(format!(
                "set {:?} has no characters",
                set.name
            )));
        }
        if let Some(c) = set.chars.chars().find(|c| !c.is_ascii_graphic()) {
            return Err(PolicyError::MalformedInput(format!(
                "set {:?} contains non-printable or non-ASCII character {c:?}",
                set.name
            )));
        }
        let bytes = set.chars.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            if bytes[..i].contains(&b) {
                return Err(PolicyError::DuplicateChars(format!(
                    "set {:?} repeats character {:?}",
                    set.name, b as char
                )));
            }
        }
        if set.min_occurs > set.max_occurs {
            return Err(PolicyError::MinExceedsMax(format!(
                "set {:?} has min {} > max {}",
                set.name, set.min_occurs, set.max_occurs
            )));
        }
    }
    for i in 0..policy.sets.len() {
        for j in 0..i {
            if let Some(c) = policy.sets[i]
                .chars
                .chars()
                .find(|&c| policy.sets[j].contains(c))
            {
                return Err(PolicyError::OverlappingSets(format!(
                    "sets {:?} and {:?} share character {c:?}",
                    policy.sets[j].name, policy.sets[i].name
                )));
            }
        }
    }
    for set in &mut policy.sets {
        set.max_occurs = set.max_occurs.min(policy.length);
    }
    let min_sum: usize = policy.sets.iter().map(|s| s.min_occurs).sum();
    let max_sum: usize = policy.sets.iter().map(|s| s.max_occurs).sum();
    if min_sum > policy.length {
        return Err(PolicyError::Unsatisfiable(format!(
            "minimum occurrences total {min_sum} exceeds length {}",
            policy.length
        )));
    }
    if max_sum < policy.length {
        return Err(PolicyError::Unsatisfiable(format!(
            "maximum occurrences total {max_sum} below length {}",
            policy.length
        )));
    }
    Ok(ValidatedPolicy(policy))
}

// Raw shapes for the external JSON format. Unknown keys are rejected.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    length: i64,
    sets: Vec<RawSet>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    chars: Option<String>,
    #[serde(default)]
    min: Option<i64>,
    #[serde(default)]
    max: Option<i64>,
}

/// Parses the external policy JSON and validates the result.
///
/// `min` defaults to 0 and `max` to the password length; a set is either a
/// built-in `{"name": ...}` or a literal `{"chars": ...}`.
pub fn parse_policy(text: &str) -> Result<ValidatedPolicy, PolicyError> {
    let raw: RawPolicy = serde_json::from_str(text)
        .map_err(|e| PolicyError::MalformedInput(format!("invalid policy JSON: {e}")))?;
    if raw.length < MIN_LENGTH as i64 || raw.length > MAX_LENGTH as i64 {
        return Err(PolicyError::LengthOutOfRange(format!(
            "length {} not in {MIN_LENGTH}..={MAX_LENGTH}",
            raw.length
        )));
    }
    let length = raw.length as usize;
    let mut sets = Vec::with_capacity(raw.sets.len());
    for rs in raw.sets {
        let min = match rs.min {
            Some(v) if v < 0 => {
                return Err(PolicyError::MalformedInput(format!("negative min {v}")))
            }
            Some(v) => v as usize,
            None => 0,
        };
        let max = match rs.max {
            Some(v) if v < 0 => {
                return Err(PolicyError::MalformedInput(format!("negative max {v}")))
            }
            Some(v) => v as usize,
            None => length,
        };
        let set = match (rs.name, rs.chars) {
            (Some(name), None) => {
                let mut s = default_charset(&name, max)?;
                s.min_occurs = min;
                s
            }
            (None, Some(chars)) => {
                // Literal sets are addressed by their character string.
                CharSetSpec::new(chars.clone(), chars, min, max)
            }
            (Some(_), Some(_)) => {
                return Err(PolicyError::MalformedInput(
                    "set object must have either \"name\" or \"chars\", not both".into(),
                ))
            }
            (None, None) => {
                return Err(PolicyError::MalformedInput(
                    "set object needs a \"name\" or \"chars\" field".into(),
                ))
            }
        };
        sets.push(set);
    }
    validate(Policy::new(length, sets))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_set_policy() -> Policy {
        Policy::new(
            16,
            vec![
                default_charset("lowercase", 16).unwrap(),
                default_charset("digits", 16).unwrap(),
            ],
        )
    }

    #[test]
    fn default_charsets_match_reference_tables() {
        let special = default_charset("special", 8).unwrap();
        assert_eq!(special.chars, "-_.:!");
        assert_eq!(special.size(), 5);
        let lower = default_charset("lowercase", 8).unwrap();
        assert_eq!(lower.size(), 26);
        assert!(lower.chars.starts_with('a') && lower.chars.ends_with('z'));
        assert_eq!(default_charset("uppercase", 8).unwrap().size(), 26);
        assert_eq!(default_charset("digits", 8).unwrap().size(), 10);
    }

    #[test]
    fn unknown_set_name_rejected() {
        assert!(matches!(
            default_charset("brackets", 8),
            Err(PolicyError::UnknownSetName(_))
        ));
    }

    #[test]
    fn well_formed_policy_validates() {
        let mut p = two_set_policy();
        p.sets[0].min_occurs = 1;
        p.sets[1].min_occurs = 1;
        assert!(validate(p).is_ok());
    }

    #[test]
    fn zero_length_rejected() {
        let err = validate(Policy::new(0, vec![default_charset("lowercase", 0).unwrap()]))
            .unwrap_err();
        assert_eq!(err.kind(), "LengthOutOfRange");
    }

    #[test]
    fn over_max_length_rejected() {
        let err = validate(Policy::new(
            201,
            vec![default_charset("lowercase", 201).unwrap()],
        ))
        .unwrap_err();
        assert_eq!(err.kind(), "LengthOutOfRange");
    }

    #[test]
    fn max_budget_shortfall_is_unsatisfiable() {
        let p = Policy::new(3, vec![CharSetSpec::new("ab", "ab", 0, 2)]);
        let err = validate(p).unwrap_err();
        assert_eq!(err.kind(), "Unsatisfiable");
    }

    #[test]
    fn min_budget_overflow_is_unsatisfiable() {
        let p = Policy::new(2, vec![CharSetSpec::new("ab", "ab", 3, 3)]);
        let err = validate(p).unwrap_err();
        assert_eq!(err.kind(), "Unsatisfiable");
    }

    #[test]
    fn min_exceeds_max_reported_before_satisfiability() {
        let p = Policy::new(2, vec![CharSetSpec::new("ab", "ab", 2, 1)]);
        assert_eq!(validate(p).unwrap_err().kind(), "MinExceedsMax");
    }

    #[test]
    fn duplicate_chars_rejected() {
        let p = Policy::new(2, vec![CharSetSpec::new("aa", "aba", 0, 2)]);
        assert_eq!(validate(p).unwrap_err().kind(), "DuplicateChars");
    }

    #[test]
    fn empty_set_rejected() {
        let p = Policy::new(2, vec![CharSetSpec::new("e", "", 0, 2)]);
        assert_eq!(validate(p).unwrap_err().kind(), "EmptySet");
    }

    #[test]
    fn overlapping_sets_rejected() {
        let p = Policy::new(
            8,
            vec![
                default_charset("lowercase", 8).unwrap(),
                CharSetSpec::new("abc", "abc", 0, 8),
            ],
        );
        assert_eq!(validate(p).unwrap_err().kind(), "OverlappingSets");
    }

    #[test]
    fn non_printable_chars_rejected() {
        let p = Policy::new(2, vec![CharSetSpec::new("ws", "a b", 0, 2)]);
        assert_eq!(validate(p).unwrap_err().kind(), "MalformedInput");
    }

    #[test]
    fn validation_clamps_max_to_length() {
        let p = Policy::new(4, vec![CharSetSpec::new("ab", "ab", 0, 100)]);
        let v = validate(p).unwrap();
        assert_eq!(v.sets[0].max_occurs, 4);
    }

    #[test]
    fn validate_is_idempotent() {
        let v = validate(two_set_policy()).unwrap();
        let again = validate(v.as_policy().clone()).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn parse_defaults_min_and_max() {
        let v = parse_policy(r#"{"length":8,"sets":[{"name":"lowercase","min":1}]}"#).unwrap();
        assert_eq!(v.length, 8);
        assert_eq!(v.sets[0].min_occurs, 1);
        assert_eq!(v.sets[0].max_occurs, 8);
    }

    #[test]
    fn parse_missing_sets_is_malformed() {
        assert_eq!(
            parse_policy(r#"{"length":8}"#).unwrap_err().kind(),
            "MalformedInput"
        );
    }

    #[test]
    fn parse_unknown_keys_rejected() {
        assert_eq!(
            parse_policy(r#"{"length":8,"sets":[],"extra":1}"#)
                .unwrap_err()
                .kind(),
            "MalformedInput"
        );
    }

    #[test]
    fn parse_literal_set_overlap_detected() {
        let err = parse_policy(
            r#"{"length":8,"sets":[{"name":"lowercase","min":1},{"chars":"abc","min":0}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.kind(), "OverlappingSets");
    }

    #[test]
    fn parse_garbage_is_malformed() {
        assert_eq!(parse_policy("{").unwrap_err().kind(), "MalformedInput");
    }

    // Greedy witness: min chars from each set, then fill from any budget.
    fn greedy_witness(p: &ValidatedPolicy) -> Password {
        let mut out = String::new();
        let mut budgets: Vec<usize> = p.sets.iter().map(|s| s.max_occurs).collect();
        for (i, set) in p.sets.iter().enumerate() {
            for _ in 0..set.min_occurs {
                out.push(set.chars.chars().next().unwrap());
                budgets[i] -= 1;
            }
        }
        'fill: while out.len() < p.length {
            for (i, set) in p.sets.iter().enumerate() {
                if budgets[i] > 0 {
                    out.push(set.chars.chars().next().unwrap());
                    budgets[i] -= 1;
                    continue 'fill;
                }
            }
            unreachable!("validated policies are satisfiable");
        }
        Password::new(out)
    }

    #[test]
    fn accepted_policies_admit_a_witness() {
        let v = validate(Policy::new(
            5,
            vec![
                CharSetSpec::new("ab", "ab", 2, 3),
                CharSetSpec::new("01", "01", 1, 2),
            ],
        ))
        .unwrap();
        let w = greedy_witness(&v);
        assert!(crate::checker::satisfies_length(&w, &v));
        assert!(crate::checker::satisfies_bounds(&w, &v));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn arb_policy()(length in 1usize..=12, split in 1usize..=6, mins in proptest::collection::vec(0usize..=4, 2), maxs in proptest::collection::vec(0usize..=12, 2)) -> Policy {
                let alphabet = "abcdefghij";
                let split = split.min(alphabet.len() - 1);
                let sets = vec![
                    CharSetSpec::new("left", &alphabet[..split], mins[0], maxs[0]),
                    CharSetSpec::new("right", &alphabet[split..], mins[1], maxs[1]),
                ];
                Policy::new(length, sets)
            }
        }

        proptest! {
            #[test]
            fn validate_idempotent_and_witnessed(p in arb_policy()) {
                if let Ok(v) = validate(p) {
                    let again = validate(v.as_policy().clone()).unwrap();
                    prop_assert_eq!(&v, &again);
                    for set in &v.sets {
                        prop_assert!(set.max_occurs <= v.length);
                    }
                    let w = greedy_witness(&v);
                    prop_assert!(crate::checker::satisfies_bounds(&w, &v));
                    prop_assert!(crate::checker::satisfies_length(&w, &v));
                }
            }
        }
    }
}
