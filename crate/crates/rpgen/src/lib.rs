//! Policy-driven random password generation with an executable
//! verification harness.
//!
//! The library has three layers:
//!
//! * the generator itself ([`policy`], [`rng`], [`generator`]): composition
//!   policies, bias-free bounded uniform sampling by rejection, and the
//!   min-phase / fill-phase / shuffle reference algorithm;
//! * ground truth ([`checker`], [`oracle`]): satisfaction predicates, brute
//!   force and closed-form enumeration of the satisfying password set, an
//!   exactly uniform sampler over it, and exact output distributions of any
//!   choice-driven procedure computed with rational arithmetic;
//! * the distinguisher ([`harness`]): real-vs-ideal sampling games, total
//!   variation distance, chi-squared statistics, and advantage reports.

pub mod checker;
pub mod generator;
pub mod harness;
pub mod oracle;
pub mod policy;
pub mod rng;

pub use policy::{
    default_charset, parse_policy, validate, CharSetSpec, Password, Policy, PolicyError,
    ValidatedPolicy,
};
pub use rng::{ByteSource, ChoiceError, ChoiceSource, RngVariant, WordWidth};
