//! Command-line front end. [`run`] parses arguments, executes one verb and
//! returns the process exit code; all JSON it prints has sorted keys.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::auction::{solve, AuctionTrace, SolveOptions, StepMode};
use crate::flow::{build_demand_network, max_flow};
use crate::generate::RandomLimits;
use crate::model::{duplicate_instance, Allocation, Instance, Prices};
use crate::tiers::tier_reports;
use crate::verify::{
    min_competitive_bruteforce, monotonicity_case, monotonicity_sweep, random_perturbation,
    run_checks, Budget, CheckStatus, MonotonicityCase, Perturbation, VerifyError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Parser, Debug)]
#[command(
    name = "walras-flow",
    version,
    about = "Buyer-optimal Walrasian prices via a flow-based ascending auction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print minimum competitive prices and a market-clearing allocation.
    Solve(CommandArgs),
    /// Solve, then run every checker; exits 2 on a failed check.
    Verify(CommandArgs),
    /// Minimum competitive prices by price-grid enumeration.
    Brute(CommandArgs),
    /// Seeded perturbation sweep: raised demand or cut supply never lowers prices.
    Monotone(MonotoneArgs),
    /// Solve an instance and its unit-supply, unit-demand duplicate.
    DuplicateDemo(CommandArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Unit,
    Adapted,
}

#[derive(Args, Debug)]
struct Options {
    #[arg(long, value_enum, default_value_t = Mode::Unit)]
    mode: Mode,
    /// Carry flows across iterations.
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    warm_start: bool,
    /// JSON map from object id to starting price.
    #[arg(long, value_name = "FILE")]
    start_prices: Option<PathBuf>,
    /// Write the per-iteration trace as JSON.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cap on enumerated price vectors or allocations.
    #[arg(long, value_name = "N")]
    budget: Option<u64>,
    /// Write the demand network at the start prices with its max flow.
    #[arg(long, value_name = "FILE")]
    dump_network: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CommandArgs {
    instance: PathBuf,
    #[command(flatten)]
    options: Options,
}

#[derive(Args, Debug)]
struct MonotoneArgs {
    /// Perturb this instance instead of drawing random ones.
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Verify(String),
    Budget(String),
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            other => Failure::Verify(other.to_string()),
        }
    }
}

impl From<crate::auction::AuctionError> for Failure {
    fn from(e: crate::auction::AuctionError) -> Self {
        Failure::Verify(e.to_string())
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Parse(m) => (EXIT_PARSE, m),
                Failure::Verify(m) => (EXIT_VERIFY, m),
                Failure::Budget(m) => (EXIT_BUDGET, m),
            };
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    Instance::from_json(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn solve_options(
    instance: &Instance,
    options: &Options,
    trace: bool,
) -> Result<SolveOptions, Failure> {
    let start_prices = match &options.start_prices {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
            let map: BTreeMap<String, serde_json::Number> = serde_json::from_str(&text)
                .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
            let prices = Prices::from_id_map(instance, &map)
                .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
            Some(prices)
        }
    };
    Ok(SolveOptions {
        mode: match options.mode {
            Mode::Unit => StepMode::Unit,
            Mode::Adapted => StepMode::Adapted,
        },
        warm_start: options.warm_start,
        start_prices,
        trace,
    })
}

fn budget(options: &Options) -> Budget {
    let mut b = Budget::default();
    if let Some(n) = options.budget {
        b.max_price_vectors = n;
    }
    b
}

fn print_json(out: &mut dyn Write, value: &Value) -> Result<(), Failure> {
    // serde_json's default map is a BTreeMap, so keys come out sorted.
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    writeln!(out, "{text}").map_err(|e| Failure::Parse(e.to_string()))
}

fn prices_json(instance: &Instance, prices: &Prices) -> Value {
    json!(prices.to_id_map(instance))
}

fn allocation_json(instance: &Instance, allocation: &Allocation) -> Value {
    json!(allocation.to_id_map(instance))
}

fn set_json(instance: &Instance, set: &std::collections::BTreeSet<usize>) -> Value {
    json!(set
        .iter()
        .map(|&i| instance.object_id(i))
        .collect::<Vec<_>>())
}

fn trace_json(instance: &Instance, trace: &AuctionTrace, allocation: &Allocation) -> Value {
    // Node names depend only on the instance.
    let naming = build_demand_network(
        instance,
        &trace.final_prices,
        &tier_reports(instance, &trace.final_prices),
    );
    let iterations: Vec<Value> = trace
        .iterations
        .iter()
        .enumerate()
        .map(|(k, r)| {
            json!({
                "iter": k,
                "prices": prices_json(instance, &r.prices),
                "raised_set": set_json(instance, &r.raised_set),
                "cut_nodes": r.cut_nodes.iter().map(|&n| naming.node_name(instance, n)).collect::<Vec<_>>(),
                "alpha": r.step,
                "flow_value": r.flow_value,
                "cap_s": r.source_capacity,
                "carried_flow_value": r.carried_value,
            })
        })
        .collect();
    json!({
        "iterations": iterations,
        "final": {
            "prices": prices_json(instance, &trace.final_prices),
            "allocation": allocation_json(instance, allocation),
            "iterations": trace.outer_iterations(),
            "raises": trace.raises,
            "oracle_calls": trace.oracle_calls,
        }
    })
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Solve(args) => cmd_solve(&args, out, err),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::Brute(args) => {
            let instance = load_instance(&args.instance)?;
            let prices = min_competitive_bruteforce(&instance, &budget(&args.options))?;
            print_json(out, &json!({ "prices": prices_json(&instance, &prices) }))?;
            Ok(EXIT_OK)
        }
        Command::Monotone(args) => cmd_monotone(&args, out),
        Command::DuplicateDemo(args) => {
            let instance = load_instance(&args.instance)?;
            let options = solve_options(&instance, &args.options, false)?;
            let duplicated = duplicate_instance(&instance);
            let original = solve(&instance, &options)?;
            let copy = solve(
                &duplicated,
                &SolveOptions {
                    start_prices: None,
                    ..options
                },
            )?;
            print_json(
                out,
                &json!({
                    "original": {
                        "prices": prices_json(&instance, &original.prices),
                        "allocation": allocation_json(&instance, &original.allocation),
                    },
                    "duplicated": {
                        "prices": prices_json(&duplicated, &copy.prices),
                        "allocation": allocation_json(&duplicated, &copy.allocation),
                    },
                }),
            )?;
            Ok(EXIT_OK)
        }
    }
}

fn cmd_solve(args: &CommandArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let instance = load_instance(&args.instance)?;
    let options = solve_options(&instance, &args.options, args.options.trace.is_some())?;
    if let Some(start) = &options.start_prices {
        if start.as_slice().iter().any(|&p| p > 0) {
            let _ = writeln!(
                err,
                "warning: nonzero start prices must not exceed the minimum competitive prices; \
                 the result is not checked (use `verify`)"
            );
        }
    }
    if let Some(path) = &args.options.dump_network {
        let start = options
            .start_prices
            .clone()
            .unwrap_or_else(|| Prices::zeros(instance.num_objects()));
        let network = build_demand_network(&instance, &start, &tier_reports(&instance, &start));
        let flow = max_flow(&network, None).map_err(|e| Failure::Verify(e.to_string()))?;
        write_file(path, &network.dump(&instance, Some(&flow)))?;
    }
    let eq = solve(&instance, &options)?;
    if let Some(path) = &args.options.trace {
        let text = serde_json::to_string_pretty(&trace_json(&instance, &eq.trace, &eq.allocation))
            .expect("JSON values serialize");
        write_file(path, &(text + "\n"))?;
    }
    print_json(
        out,
        &json!({
            "prices": prices_json(&instance, &eq.prices),
            "allocation": allocation_json(&instance, &eq.allocation),
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &CommandArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let instance = load_instance(&args.instance)?;
    let options = solve_options(&instance, &args.options, true)?;
    let report = run_checks(&instance, &options, &budget(&args.options))?;
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "status": match c.status {
                    CheckStatus::Passed => "passed",
                    CheckStatus::Failed => "failed",
                    CheckStatus::Skipped => "skipped",
                },
                "detail": c.detail,
            })
        })
        .collect();
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Failed)
        .map(|c| c.name)
        .collect();
    print_json(
        out,
        &json!({
            "prices": prices_json(&instance, &report.prices),
            "allocation": allocation_json(&instance, &report.allocation),
            "checks": checks,
            "failed": failed,
            "passed": report.passed(),
        }),
    )?;
    Ok(if report.any_failed() {
        EXIT_VERIFY
    } else if report.passed() {
        EXIT_OK
    } else {
        EXIT_BUDGET
    })
}

fn describe(instance: &Instance, p: Perturbation) -> String {
    match p {
        Perturbation::Demand { buyer, delta } => {
            format!("d[{}] +{delta}", instance.buyer_id(buyer))
        }
        Perturbation::Supply { object, delta } => {
            format!("b[{}] -{delta}", instance.object_id(object))
        }
    }
}

fn cmd_monotone(args: &MonotoneArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let seed = args.options.seed;
    let cases: Vec<MonotonicityCase> = match &args.instance {
        None => monotonicity_sweep(seed, args.samples, &RandomLimits::default())?,
        Some(path) => {
            let instance = load_instance(path)?;
            if instance.num_buyers() == 0 {
                return Err(Failure::Parse(
                    "monotonicity sweeps need at least one buyer".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..args.samples)
                .map(|index| {
                    let (perturbed, p) = random_perturbation(&mut rng, &instance);
                    monotonicity_case(index, instance.clone(), perturbed, p)
                })
                .collect::<Result<_, _>>()?
        }
    };
    let io = |e: std::io::Error| Failure::Parse(e.to_string());
    writeln!(
        out,
        "{:>5}  {:<14}  {:<18}  {:<18}  result",
        "case", "perturbation", "p_old", "p_new"
    )
    .map_err(io)?;
    let mut passed = 0;
    for c in &cases {
        let ok = c.passed();
        passed += usize::from(ok);
        writeln!(
            out,
            "{:>5}  {:<14}  {:<18}  {:<18}  {}",
            c.index,
            describe(&c.instance, c.perturbation),
            format!("{:?}", c.p_old.as_slice()),
            format!("{:?}", c.p_new.as_slice()),
            if ok { "PASS" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    writeln!(out, "{passed}/{} passed (seed {seed})", cases.len()).map_err(io)?;
    Ok(if passed == cases.len() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}
