//! Command-line surface over the lorenz-lattice library.
//!
//! Every input is a JSON file path (`-` reads standard input) and every
//! result goes to standard output, so the subcommands compose in shell
//! pipelines. Identical arguments and seed produce byte-identical output.
//!
//! Exit codes: 0 success, 2 bad input or arguments, 3 incomparable pair
//! (from `compare`), 4 synthesis infeasible, 5 internal invariant breach.

use clap::{ArgGroup, Parser, Subcommand};
use lorenz_lattice::config::Tolerances;
use lorenz_lattice::distribution::DiscreteDistribution;
use lorenz_lattice::efficiency::{
    achievability_plan, bellman_check, dyadic_plan, expected_volume, randomized_stake_plan,
    v_star, MixedPlan, VolumeReport,
};
use lorenz_lattice::jsonio::{
    chain_from_json, curve_from_json, dist_from_json, dist_to_json, kernel_from_json,
    kernel_to_json, mixed_to_json, plan_from_json, plan_to_json,
};
use lorenz_lattice::lattice::{join_upstream_with, meet_downstream_with, Comparison};
use lorenz_lattice::lorenz::LorenzCurve;
use lorenz_lattice::simulate::{chain_marginals, sample_plan, second_law_report};
use lorenz_lattice::synth::{synthesize, verify_kernel, GamblePlan, SynthError};
use std::io::Read;

const EXIT_OK: u8 = 0;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_INCOMPARABLE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_INVARIANT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "lorenz-lattice",
    version,
    about = "Lorenz curves, fair-gamble reachability, and betting-volume analysis for mean-one wealth distributions"
)]
struct Cli {
    /// Probability tolerance (mean checks, probability sums).
    #[arg(long, global = true, value_name = "EPS")]
    tol_prob: Option<f64>,
    /// Value-merge tolerance (atoms closer than this collapse).
    #[arg(long, global = true, value_name = "EPS")]
    tol_value_merge: Option<f64>,
    /// Geometry tolerance (curve assembly and intersections).
    #[arg(long, global = true, value_name = "EPS")]
    tol_geometry: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the Lorenz curve of a distribution (or re-emit a curve file).
    Lorenz {
        /// Distribution or curve JSON; `-` for standard input.
        input: String,
        /// Output format.
        #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
        format: String,
        /// Sample count for CSV output (rows at u = 0, 1/N, ..., 1).
        #[arg(long, default_value_t = 100)]
        grid: u32,
        /// Print only the curve value at this population share.
        #[arg(long, value_name = "U")]
        at: Option<f64>,
    },
    /// Print the Gini index of a distribution or curve.
    Gini { input: String },
    /// Classify a pair: Equal, AUpstream, BUpstream, or Incomparable.
    ///
    /// Exits 3 when the pair is incomparable, 0 otherwise.
    Compare { a: String, b: String },
    /// Greatest common reachable distribution (most equal common
    /// descendant), as distribution JSON.
    Meet { a: String, b: String },
    /// Least common ancestor distribution (most equal common source), as
    /// distribution JSON.
    Join { a: String, b: String },
    /// Build a fair transition kernel carrying the source onto the target.
    ///
    /// Exits 4 when the source does not dominate the target.
    Synth { source: String, target: String },
    /// Check a kernel against a source/target pair; emits a JSON report.
    Verify {
        source: String,
        target: String,
        kernel: String,
    },
    /// Run a kernel chain or sample a gamble plan.
    #[command(group(ArgGroup::new("mode").required(true).args(["chain", "sample_plan"])))]
    Simulate {
        /// Chain spec JSON: {"initial": distribution, "kernels": [...]}.
        /// Emits the chain report.
        #[arg(long, value_name = "FILE")]
        chain: Option<String>,
        /// Gamble plan JSON to walk repeatedly; emits the empirical leaf
        /// distribution.
        #[arg(long, value_name = "FILE")]
        sample_plan: Option<String>,
        /// Number of Monte Carlo walks.
        #[arg(long, default_value_t = 10_000)]
        walks: usize,
        /// Random seed; a fixed seed gives byte-identical output.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Expected betting volume of a plan; emits a JSON report.
    #[command(group(
        ArgGroup::new("source")
            .required(true)
            .args(["plan", "achievability", "dyadic", "mixed"])
    ))]
    Volume {
        /// Gamble plan JSON file.
        #[arg(long, value_name = "FILE")]
        plan: Option<String>,
        /// Ladder plan to the two-point law at mean X using N rungs.
        #[arg(long, num_args = 2, value_names = ["X", "N"])]
        achievability: Option<Vec<String>>,
        /// Dyadic ladder plan with 2^K leaves from wealth 1.
        #[arg(long, value_name = "K")]
        dyadic: Option<u32>,
        /// Stake-randomized mixture with the same leaves as --dyadic K.
        #[arg(long, value_name = "K")]
        mixed: Option<u32>,
        /// Also write the constructed plan (or mixture) JSON to this file.
        #[arg(long, value_name = "FILE")]
        emit_plan: Option<String>,
    },
    /// Grid check of the optimal-volume dynamic-programming inequality;
    /// emits a JSON report.
    Bellman {
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 100)]
        grid: u32,
        /// Violation tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also write a CSV slice "a,b,gap" at fixed theta to this file.
        #[arg(long, value_name = "FILE")]
        slice_csv: Option<String>,
        /// Theta for the CSV slice.
        #[arg(long, default_value_t = 0.5)]
        slice_theta: f64,
    },
}

enum CliError {
    BadInput(String),
    Infeasible(String),
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::BadInput(_) => EXIT_BAD_INPUT,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::BadInput(m) | CliError::Infeasible(m) | CliError::Invariant(m) => m,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::BadInput(msg.into())
}

/// Parses arguments and runs one subcommand, returning the process exit
/// code. The first element of `argv` is the program name.
pub fn run(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut tol = Tolerances::default();
    if let Some(p) = cli.tol_prob {
        tol.prob = p;
    }
    if let Some(v) = cli.tol_value_merge {
        tol.value_merge = v;
    }
    if let Some(g) = cli.tol_geometry {
        tol.geometry = g;
    }
    if !tol.validate() {
        eprintln!("error: tolerances must be positive and finite");
        return EXIT_BAD_INPUT;
    }
    match dispatch(cli.command, &tol) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| bad(format!("standard input: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| bad(format!("{path}: {e}")))
    }
}

fn load_curve(path: &str, tol: &Tolerances) -> Result<LorenzCurve, CliError> {
    let text = read_input(path)?;
    curve_from_json(&text, tol).map_err(|e| bad(format!("{path}: {e}")))
}

fn load_dist(path: &str, tol: &Tolerances) -> Result<DiscreteDistribution, CliError> {
    let text = read_input(path)?;
    dist_from_json(&text, tol).map_err(|e| bad(format!("{path}: {e}")))
}

fn load_plan(path: &str) -> Result<GamblePlan, CliError> {
    let text = read_input(path)?;
    plan_from_json(&text).map_err(|e| bad(format!("{path}: {e}")))
}

fn write_output(path: &str, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| bad(format!("{path}: {e}")))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serialization cannot fail")
}

fn dispatch(command: Command, tol: &Tolerances) -> Result<u8, CliError> {
    match command {
        Command::Lorenz {
            input,
            format,
            grid,
            at,
        } => {
            if grid < 2 {
                return Err(bad("--grid must be at least 2"));
            }
            let curve = load_curve(&input, tol)?;
            if let Some(u) = at {
                let l = curve
                    .evaluate_with(u, tol)
                    .map_err(|e| bad(e.to_string()))?;
                println!("{l}");
                return Ok(EXIT_OK);
            }
            match format.as_str() {
                "json" => println!("{}", lorenz_lattice::jsonio::curve_to_json(&curve)),
                _ => {
                    println!("u,l");
                    for i in 0..=grid {
                        let u = i as f64 / grid as f64;
                        let l = curve.evaluate_with(u, tol).expect("u in [0, 1]");
                        println!("{u},{l}");
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Gini { input } => {
            let curve = load_curve(&input, tol)?;
            println!("{}", curve.gini());
            Ok(EXIT_OK)
        }
        Command::Compare { a, b } => {
            let (la, lb) = (load_curve(&a, tol)?, load_curve(&b, tol)?);
            let verdict = lorenz_lattice::lattice::compare_with(&la, &lb, tol);
            println!("{verdict}");
            Ok(if verdict == Comparison::Incomparable {
                EXIT_INCOMPARABLE
            } else {
                EXIT_OK
            })
        }
        Command::Meet { a, b } => {
            let (la, lb) = (load_curve(&a, tol)?, load_curve(&b, tol)?);
            let meet = meet_downstream_with(&la, &lb, tol);
            println!("{}", dist_to_json(&meet.to_distribution()));
            Ok(EXIT_OK)
        }
        Command::Join { a, b } => {
            let (la, lb) = (load_curve(&a, tol)?, load_curve(&b, tol)?);
            let join = join_upstream_with(&la, &lb, tol);
            println!("{}", dist_to_json(&join.to_distribution()));
            Ok(EXIT_OK)
        }
        Command::Synth { source, target } => {
            let src = load_dist(&source, tol)?;
            let tgt = load_dist(&target, tol)?;
            let kernel = match synthesize(&src, &tgt) {
                Ok(k) => k,
                Err(SynthError::NotComparable) => {
                    return Err(CliError::Infeasible(
                        "source does not dominate target; no fair kernel exists".into(),
                    ))
                }
                Err(e) => return Err(bad(e.to_string())),
            };
            let report = verify_kernel(&src, &tgt, &kernel);
            if !(report.fair && report.marginal_ok) {
                return Err(CliError::Invariant(format!(
                    "synthesized kernel failed verification (row mean err {:.3e}, marginal err {:.3e})",
                    report.max_row_mean_err, report.max_marginal_err
                )));
            }
            println!("{}", kernel_to_json(&kernel));
            Ok(EXIT_OK)
        }
        Command::Verify {
            source,
            target,
            kernel,
        } => {
            let src = load_dist(&source, tol)?;
            let tgt = load_dist(&target, tol)?;
            let text = read_input(&kernel)?;
            let k = kernel_from_json(&text, tol).map_err(|e| bad(format!("{kernel}: {e}")))?;
            let report = verify_kernel(&src, &tgt, &k);
            println!("{}", to_json(&report));
            Ok(EXIT_OK)
        }
        Command::Simulate {
            chain,
            sample_plan: plan_path,
            walks,
            seed,
        } => {
            if let Some(path) = chain {
                let text = read_input(&path)?;
                let (initial, kernels) =
                    chain_from_json(&text, tol).map_err(|e| bad(format!("{path}: {e}")))?;
                let marginals =
                    chain_marginals(&initial, &kernels).map_err(|e| bad(e.to_string()))?;
                let report = second_law_report(&marginals);
                println!("{}", to_json(&report));
            } else {
                let path = plan_path.expect("clap group guarantees one mode");
                let plan = load_plan(&path)?;
                if walks == 0 {
                    return Err(bad("--walks must be positive"));
                }
                let sampled = sample_plan(&plan, seed, walks);
                println!("{}", dist_to_json(&sampled));
            }
            Ok(EXIT_OK)
        }
        Command::Volume {
            plan,
            achievability,
            dyadic,
            mixed,
            emit_plan,
        } => {
            let (report, plan_json) = if let Some(path) = plan {
                let p = load_plan(&path)?;
                (expected_volume(&p), plan_to_json(&p))
            } else if let Some(args) = achievability {
                let x: f64 = args[0]
                    .parse()
                    .map_err(|_| bad(format!("bad mean {:?}", args[0])))?;
                let n: usize = args[1]
                    .parse()
                    .map_err(|_| bad(format!("bad rung count {:?}", args[1])))?;
                let p = achievability_plan(x, n).map_err(|e| bad(e.to_string()))?;
                (expected_volume(&p), plan_to_json(&p))
            } else if let Some(k) = dyadic {
                if !(1..=20).contains(&k) {
                    return Err(bad("--dyadic K must be between 1 and 20"));
                }
                let p = dyadic_plan(k);
                (expected_volume(&p), plan_to_json(&p))
            } else {
                let k = mixed.expect("clap group guarantees one source");
                if !(1..=20).contains(&k) {
                    return Err(bad("--mixed K must be between 1 and 20"));
                }
                let m = randomized_stake_plan(k);
                (mixed_volume_report(&m), mixed_to_json(&m))
            };
            if let Some(path) = emit_plan {
                write_output(&path, &plan_json)?;
            }
            println!("{}", to_json(&report));
            Ok(EXIT_OK)
        }
        Command::Bellman {
            grid,
            tol: bell_tol,
            slice_csv,
            slice_theta,
        } => {
            if grid < 2 {
                return Err(bad("--grid must be at least 2"));
            }
            if !(bell_tol.is_finite() && bell_tol > 0.0) {
                return Err(bad("--tol must be positive and finite"));
            }
            if !(0.0..=1.0).contains(&slice_theta) {
                return Err(bad("--slice-theta must lie in [0, 1]"));
            }
            let report = bellman_check(grid as usize, bell_tol);
            if let Some(path) = slice_csv {
                write_output(&path, &bellman_slice_csv(grid, slice_theta))?;
            }
            println!("{}", to_json(&report));
            Ok(EXIT_OK)
        }
    }
}

/// Probability-weighted volume report over the components of a mixture.
fn mixed_volume_report(m: &MixedPlan) -> VolumeReport {
    let mut expected_volume = 0.0;
    let mut expected_bets = 0.0;
    let mut per_depth: Vec<(usize, f64)> = Vec::new();
    for (w, plan) in m.components() {
        let r = lorenz_lattice::efficiency::expected_volume(plan);
        expected_volume += w * r.expected_volume;
        expected_bets += w * r.expected_bets;
        for (depth, v) in r.per_depth {
            if per_depth.len() <= depth {
                per_depth.resize(depth + 1, (0, 0.0));
                per_depth[depth].0 = depth;
            }
            per_depth[depth].0 = depth;
            per_depth[depth].1 += w * v;
        }
    }
    VolumeReport {
        expected_volume,
        expected_bets,
        per_depth,
    }
}

/// The inequality gap over the (a, b) grid at fixed theta, one CSV row per
/// point with a <= b. Negative gaps mean the inequality holds strictly.
fn bellman_slice_csv(grid: u32, theta: f64) -> String {
    let mut out = String::from("a,b,gap\n");
    for i in 0..=grid {
        let a = i as f64 / grid as f64;
        for j in i..=grid {
            let b = j as f64 / grid as f64;
            let mid = a + (b - a) * theta;
            let lhs = v_star(mid).expect("mid in [0, 1]");
            let rhs = (b - a) * theta
                + (1.0 - theta) * v_star(a).expect("a in [0, 1]")
                + theta * v_star(b).expect("b in [0, 1]");
            let gap = lhs - rhs;
            out.push_str(&format!("{a},{b},{gap}\n"));
        }
    }
    out
}
