//! Command-line front end: password generation, policy checking, satisfying
//! set counting, exact output distributions, and real-vs-ideal audits.
//!
//! Exit codes: 0 success (or check satisfied), 1 check unsatisfied,
//! 2 input/policy error, 3 domain too large for exact analysis.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rpgen::harness;
use rpgen::oracle::{self, OracleError};
use rpgen::policy::{self, CharSetSpec, Password, Policy, PolicyError, ValidatedPolicy};
use rpgen::rng::{
    make_choice_source, ChoiceSource, OsByteSource, RngVariant, SeededByteSource, WordWidth,
};
use serde_json::json;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rpgen",
    about = "Policy-driven random password generator and verification toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate passwords satisfying a policy
    Generate(GenerateArgs),
    /// Check a password (read from stdin) against a policy
    Check(PolicyArgs),
    /// Count the policy-satisfying passwords exactly
    Count(PolicyArgs),
    /// Compute the generator's exact output distribution
    Exact(PolicyArgs),
    /// Run the real-vs-ideal distinguishing experiment
    Audit(AuditArgs),
}

#[derive(Args)]
struct PolicyArgs {
    /// Policy JSON file (mutually exclusive with the inline flags)
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Password length (inline policy)
    #[arg(long)]
    length: Option<usize>,
    /// Character set: lowercase|uppercase|digits|special|literal:<chars> (repeatable)
    #[arg(long = "charset")]
    charsets: Vec<String>,
    /// Minimum occurrences, NAME=K (repeatable)
    #[arg(long = "min")]
    mins: Vec<String>,
    /// Maximum occurrences, NAME=K (repeatable)
    #[arg(long = "max")]
    maxes: Vec<String>,
}

#[derive(Args)]
struct RandomnessArgs {
    /// Seed for deterministic output; omit to use the OS CSPRNG
    #[arg(long)]
    seed: Option<u64>,
    /// Rejection sampler variant
    #[arg(long, value_enum, default_value_t = RngOpt::Chrome)]
    rng: RngOpt,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    randomness: RandomnessArgs,
    /// How many passwords to generate
    #[arg(short = 'n', long = "count", default_value_t = 1)]
    count: u64,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    randomness: RandomnessArgs,
    #[arg(long, value_enum, default_value_t = ModeOpt::Exact)]
    mode: ModeOpt,
    /// Samples per game (empirical mode)
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Worker threads for empirical sampling
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum RngOpt {
    Chrome,
    Keepass,
}

impl From<RngOpt> for RngVariant {
    fn from(v: RngOpt) -> RngVariant {
        match v {
            RngOpt::Chrome => RngVariant::Chrome,
            RngOpt::Keepass => RngVariant::Keepass,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeOpt {
    Exact,
    Empirical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Text,
    Json,
}

enum CliError {
    Policy(PolicyError),
    Input(String),
    DomainTooLarge(String),
    Unsatisfied,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Unsatisfied => 1,
            CliError::Policy(_) | CliError::Input(_) => 2,
            CliError::DomainTooLarge(_) => 3,
        }
    }

    fn report(&self) {
        match self {
            CliError::Policy(e) => eprintln!("{e}"),
            CliError::Input(msg) => eprintln!("error: {msg}"),
            CliError::DomainTooLarge(msg) => eprintln!("DomainTooLarge: {msg}"),
            CliError::Unsatisfied => {}
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        CliError::Policy(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::DomainTooLarge(msg) => CliError::DomainTooLarge(msg),
            OracleError::Choice(e) => CliError::Input(e.to_string()),
        }
    }
}

impl From<harness::HarnessError> for CliError {
    fn from(e: harness::HarnessError) -> Self {
        match e {
            harness::HarnessError::Oracle(e) => e.into(),
            harness::HarnessError::Choice(e) => CliError::Input(e.to_string()),
        }
    }
}

impl From<rpgen::ChoiceError> for CliError {
    fn from(e: rpgen::ChoiceError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn load_policy(args: &PolicyArgs) -> Result<ValidatedPolicy, CliError> {
    let inline_used = args.length.is_some()
        || !args.charsets.is_empty()
        || !args.mins.is_empty()
        || !args.maxes.is_empty();
    match (&args.policy, inline_used) {
        (Some(_), true) => Err(CliError::Input(
            "--policy and inline policy flags are mutually exclusive".into(),
        )),
        (Some(path), false) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            Ok(policy::parse_policy(&text)?)
        }
        (None, _) => {
            let length = args
                .length
                .ok_or_else(|| CliError::Input("--length is required without --policy".into()))?;
            if args.charsets.is_empty() {
                return Err(CliError::Input(
                    "at least one --charset is required without --policy".into(),
                ));
            }
            let mut sets = Vec::new();
            for spec in &args.charsets {
                let set = match spec.strip_prefix("literal:") {
                    Some(chars) => CharSetSpec::new(chars, chars, 0, length),
                    None => policy::default_charset(spec, length)?,
                };
                sets.push(set);
            }
            apply_overrides(&mut sets, &args.mins, |s, k| s.min_occurs = k)?;
            apply_overrides(&mut sets, &args.maxes, |s, k| s.max_occurs = k)?;
            Ok(policy::validate(Policy::new(length, sets))?)
        }
    }
}

fn apply_overrides(
    sets: &mut [CharSetSpec],
    entries: &[String],
    mut apply: impl FnMut(&mut CharSetSpec, usize),
) -> Result<(), CliError> {
    for entry in entries {
        let (name, value) = entry
            .rsplit_once('=')
            .ok_or_else(|| CliError::Input(format!("expected NAME=K, got {entry:?}")))?;
        let k: usize = value
            .parse()
            .map_err(|_| CliError::Input(format!("invalid count in {entry:?}")))?;
        let set = sets
            .iter_mut()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Policy(PolicyError::UnknownSetName(format!(
                "no selected set named {name:?}"
            ))))?;
        apply(set, k);
    }
    Ok(())
}

fn choice_source(args: &RandomnessArgs) -> Box<dyn ChoiceSource> {
    let variant: RngVariant = args.rng.into();
    match args.seed {
        Some(seed) => Box::new(make_choice_source(
            SeededByteSource::new(seed),
            WordWidth::W64,
            variant,
        )),
        None => Box::new(make_choice_source(OsByteSource, WordWidth::W64, variant)),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let policy = load_policy(&args.policy)?;
    let mut cs = choice_source(&args.randomness);
    let mut passwords = Vec::with_capacity(args.count as usize);
    for _ in 0..args.count {
        passwords.push(rpgen::generator::generate(&policy, cs.as_mut())?);
    }
    match args.output {
        Output::Text => {
            for pw in &passwords {
                println!("{pw}");
            }
        }
        Output::Json => {
            let strings: Vec<&str> = passwords.iter().map(|p| p.as_str()).collect();
            println!("{}", serde_json::to_string(&strings).expect("serializable"));
        }
    }
    Ok(())
}

fn cmd_check(args: &PolicyArgs) -> Result<(), CliError> {
    let policy = load_policy(args)?;
    let mut input = String::new();
    std::io::stdin()
        .read_to_string(&mut input)
        .map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
    let line = input.strip_suffix('\n').unwrap_or(&input);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let pw = Password::new(line);
    if rpgen::checker::satisfies_length(&pw, &policy)
        && rpgen::checker::satisfies_bounds(&pw, &policy)
    {
        Ok(())
    } else {
        Err(CliError::Unsatisfied)
    }
}

fn cmd_count(args: &PolicyArgs) -> Result<(), CliError> {
    let policy = load_policy(args)?;
    let count = oracle::count_satisfying(&policy);
    println!("{}", json!({ "count": count.to_string() }));
    Ok(())
}

fn cmd_exact(args: &PolicyArgs) -> Result<(), CliError> {
    let policy = load_policy(args)?;
    let dist = oracle::generator_distribution(&policy)?;
    let entries: Vec<serde_json::Value> = dist
        .iter()
        .map(|(pw, prob)| {
            json!({
                "pw": pw.as_str(),
                "num": prob.numer().to_string(),
                "den": prob.denom().to_string(),
            })
        })
        .collect();
    println!("{}", json!({ "dist": entries }));
    Ok(())
}

fn cmd_audit(args: &AuditArgs) -> Result<(), CliError> {
    let policy = load_policy(&args.policy)?;
    let variant: RngVariant = args.randomness.rng.into();
    let report = match args.mode {
        ModeOpt::Exact => harness::exact_report(&policy)?,
        ModeOpt::Empirical => {
            let (real, ideal) = match args.randomness.seed {
                Some(seed) => harness::empirical_games_seeded(
                    &policy,
                    args.samples,
                    seed,
                    variant,
                    args.threads,
                )?,
                None => harness::empirical_games_os(&policy, args.samples, variant)?,
            };
            harness::empirical_report(&policy, real, ideal)?
        }
    };
    println!("{}", serde_json::to_string(&report).expect("serializable"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Check(args) => cmd_check(args),
        Command::Count(args) => cmd_count(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
