//! The reference password generator: per-set minimum phase, union fill
//! phase under max budgets, then a uniform in-place shuffle. All randomness
//! flows through a [`ChoiceSource`].

use crate::policy::{Password, ValidatedPolicy};
use crate::rng::{ChoiceError, ChoiceSource};

/// Draws one character from `chars` and spends one unit of the owning
/// set's max budget.
pub fn generate_character(
    chars: &str,
    budget: &mut usize,
    cs: &mut dyn ChoiceSource,
) -> Result<char, ChoiceError> {
    debug_assert!(*budget > 0, "character drawn from an exhausted set");
    let i = cs.choose(chars.len())?;
    *budget -= 1;
    Ok(chars.as_bytes()[i] as char)
}

/// Fisher-Yates shuffle: for `i` from `len-1` down to 1, swap position `i`
/// with a uniform `j` in `[0, i]`. Consumes `len - 1` choices; empty and
/// singleton inputs consume none.
pub fn permute(chars: &mut [u8], cs: &mut dyn ChoiceSource) -> Result<(), ChoiceError> {
    for i in (1..chars.len()).rev() {
        let j = cs.choose(i + 1)?;
        chars.swap(i, j);
    }
    Ok(())
}

/// Generates one password satisfying `policy`.
///
/// Phase 1 draws each set's minimum in policy order; phase 2 fills the
/// remaining positions from the ordered union of all sets with budget left
/// (sets in policy order, characters in stored order); phase 3 shuffles.
/// Consumes exactly `length + (length - 1)` choices.
pub fn generate(
    policy: &ValidatedPolicy,
    cs: &mut dyn ChoiceSource,
) -> Result<Password, ChoiceError> {
    let mut password: Vec<u8> = Vec::with_capacity(policy.length);
    let mut budgets: Vec<usize> = policy.sets.iter().map(|s| s.max_occurs).collect();

    for (i, set) in policy.sets.iter().enumerate() {
        for _ in 0..set.min_occurs {
            let c = generate_character(&set.chars, &mut budgets[i], cs)?;
            password.push(c as u8);
        }
    }

    while password.len() < policy.length {
        // Ordered union of every set that still has budget. Validated
        // policies are satisfiable, so the union is nonempty here.
        let mut union: Vec<(u8, usize)> = Vec::new();
        for (i, set) in policy.sets.iter().enumerate() {
            if budgets[i] > 0 {
                union.extend(set.chars.bytes().map(|b| (b, i)));
            }
        }
        debug_assert!(!union.is_empty());
        let (c, owner) = union[cs.choose(union.len())?];
        password.push(c);
        budgets[owner] -= 1;
    }

    permute(&mut password, cs)?;
    Ok(Password::from_ascii_bytes(password))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{validate, CharSetSpec, Policy};
    use crate::rng::ScriptedChoiceSource;

    fn constrained_policy() -> ValidatedPolicy {
        validate(Policy::new(
            2,
            vec![
                CharSetSpec::new("A", "ab", 1, 2),
                CharSetSpec::new("B", "01", 0, 2),
            ],
        ))
        .unwrap()
    }

    #[test]
    fn character_draw_indexes_the_set() {
        let mut budget = 2;
        let mut cs = ScriptedChoiceSource::new(vec![0]);
        assert_eq!(generate_character("ab", &mut budget, &mut cs).unwrap(), 'a');
        assert_eq!(budget, 1);
        let mut cs = ScriptedChoiceSource::new(vec![1]);
        assert_eq!(generate_character("ab", &mut budget, &mut cs).unwrap(), 'b');
    }

    #[test]
    fn singleton_set_always_yields_its_character() {
        let mut budget = 1;
        let mut cs = ScriptedChoiceSource::new(vec![0]);
        assert_eq!(generate_character("x", &mut budget, &mut cs).unwrap(), 'x');
    }

    #[test]
    fn permute_two_chars() {
        let mut s = *b"ab";
        let mut cs = ScriptedChoiceSource::new(vec![1]);
        permute(&mut s, &mut cs).unwrap();
        assert_eq!(&s, b"ab");
        let mut s = *b"ab";
        let mut cs = ScriptedChoiceSource::new(vec![0]);
        permute(&mut s, &mut cs).unwrap();
        assert_eq!(&s, b"ba");
    }

    #[test]
    fn permute_three_chars_trace() {
        let mut s = *b"abc";
        let mut cs = ScriptedChoiceSource::new(vec![0, 1]);
        permute(&mut s, &mut cs).unwrap();
        assert_eq!(&s, b"cba");
        assert!(cs.is_exhausted());
    }

    #[test]
    fn permute_empty_and_singleton_consume_nothing() {
        let mut cs = ScriptedChoiceSource::new(vec![]);
        permute(&mut [], &mut cs).unwrap();
        let mut one = *b"x";
        permute(&mut one, &mut cs).unwrap();
        assert_eq!(cs.consumed(), 0);
    }

    #[test]
    fn forced_policy_has_forced_output() {
        let p = validate(Policy::new(1, vec![CharSetSpec::new("a", "a", 0, 1)])).unwrap();
        let mut cs = ScriptedChoiceSource::new(vec![0]);
        assert_eq!(generate(&p, &mut cs).unwrap().as_str(), "a");
    }

    #[test]
    fn generate_hand_trace() {
        // min-phase 'a'; fill union "ab01" index 2 -> '0'; self-swap.
        let p = constrained_policy();
        let mut cs = ScriptedChoiceSource::new(vec![0, 2, 1]);
        assert_eq!(generate(&p, &mut cs).unwrap().as_str(), "a0");
        assert!(cs.is_exhausted());
    }

    #[test]
    fn fill_phase_respects_exhausted_budgets() {
        // One 'a' allowed at most; the second draw's union is only "01".
        let p = validate(Policy::new(
            2,
            vec![
                CharSetSpec::new("A", "ab", 0, 1),
                CharSetSpec::new("B", "01", 0, 2),
            ],
        ))
        .unwrap();
        let mut cs = ScriptedChoiceSource::new(vec![0, 1, 1]);
        // fill 'a' (budget A now 0), union is "01", index 1 -> '1'.
        assert_eq!(generate(&p, &mut cs).unwrap().as_str(), "a1");
    }

    #[test]
    fn choice_accounting_matches_contract() {
        struct Counting {
            calls: usize,
        }
        impl ChoiceSource for Counting {
            fn choose(&mut self, n: usize) -> Result<usize, ChoiceError> {
                self.calls += 1;
                if n == 0 {
                    return Err(ChoiceError::EmptyRange);
                }
                Ok(n - 1)
            }
        }
        for (length, sets) in [
            (4, vec![CharSetSpec::new("A", "ab", 1, 4), CharSetSpec::new("B", "01", 2, 4)]),
            (1, vec![CharSetSpec::new("A", "abc", 0, 1)]),
            (6, vec![CharSetSpec::new("A", "abc", 0, 6)]),
        ] {
            let p = validate(Policy::new(length, sets)).unwrap();
            let mut cs = Counting { calls: 0 };
            generate(&p, &mut cs).unwrap();
            assert_eq!(cs.calls, length + (length - 1));
        }
    }

    mod props {
        use super::*;
        use crate::checker;
        use crate::rng::{make_choice_source, RngVariant, SeededByteSource, WordWidth};
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn outputs_satisfy_the_policy(seed: u64, length in 1usize..=24, min_a in 0usize..=3, min_b in 0usize..=3, max_a in 1usize..=24, max_b in 1usize..=24) {
                let p = Policy::new(length, vec![
                    CharSetSpec::new("A", "abcde", min_a, max_a.max(min_a)),
                    CharSetSpec::new("B", "0123", min_b, max_b.max(min_b)),
                ]);
                if let Ok(v) = validate(p) {
                    let mut cs = make_choice_source(SeededByteSource::new(seed), WordWidth::W64, RngVariant::Chrome);
                    let pw = generate(&v, &mut cs).unwrap();
                    prop_assert!(checker::satisfies_length(&pw, &v));
                    prop_assert!(checker::satisfies_bounds(&pw, &v));
                }
            }

            #[test]
            fn permute_preserves_the_multiset(seed: u64, input in "[a-z0-9]{0,16}") {
                let mut bytes = input.clone().into_bytes();
                let mut cs = make_choice_source(SeededByteSource::new(seed), WordWidth::W64, RngVariant::Chrome);
                permute(&mut bytes, &mut cs).unwrap();
                let mut before = input.into_bytes();
                before.sort_unstable();
                let mut after = bytes;
                after.sort_unstable();
                prop_assert_eq!(before, after);
            }
        }
    }
}
