use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use discord_channels::annihilators::{self, MatchOutcome};
use discord_channels::classify::{self, ClassifyOptions, Context};
use discord_channels::discord::{self, Strategy, CQ_TOL};
use discord_channels::{io, random, Error, QuantumChannel, Subsystem};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CERTIFICATION: u8 = 3;

#[derive(Parser)]
#[command(name = "dchan", version, about = "Discord-breaking and discord-annihilating channel toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Relative tolerance of the classical-quantum test.
    #[arg(long, global = true, default_value_t = CQ_TOL)]
    tol_cq: f64,
    /// Tolerance when validating channels read from files.
    #[arg(long, global = true, default_value_t = discord_channels::channel::CPTP_TOL)]
    tol_cptp: f64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Discord D(B|A) of a bipartite state file.
    Discord {
        state: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Hybrid)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 128)]
        n_theta: usize,
        #[arg(long, default_value_t = 256)]
        n_phi: usize,
        #[arg(long, default_value_t = 20)]
        starts: usize,
    },
    /// Classify a channel file as discord-breaking or discord-annihilating.
    Classify {
        channel: PathBuf,
        #[arg(long, value_enum)]
        side: Side,
        #[arg(long)]
        dim_a: Option<usize>,
        #[arg(long)]
        dim_b: Option<usize>,
        /// Random inputs for certifying global channels.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Sweep the unital qubit tetrahedron and write CSV.
    TetraSweep {
        #[arg(long)]
        step: f64,
        #[arg(long, value_enum)]
        side: LocalSide,
        #[arg(long, default_value_t = 2)]
        dim_other: usize,
        #[arg(long, default_value_t = 20)]
        probes: usize,
    },
    /// Build a discord-annihilating channel from a spec file or at random.
    GenDa {
        #[arg(long, conflicts_with = "random")]
        spec: Option<PathBuf>,
        /// Draw a random spec for DA_xDB dimensions, e.g. 2x2.
        #[arg(long, value_name = "DAxDB")]
        random: Option<String>,
        /// Where to echo the spec (stdout when absent).
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Certify that every sampled output of a channel is classical-quantum.
    VerifyDa {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        dim_a: Option<usize>,
        #[arg(long)]
        dim_b: Option<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Where to dump the failing input on certification failure.
        #[arg(long, default_value = "da-witness.json")]
        witness_out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Hybrid,
    Grid,
    Multistart,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "AB", alias = "ab")]
    Ab,
}

#[derive(Clone, Copy, ValueEnum)]
enum LocalSide {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INPUT, message: e.to_string() }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INTERNAL, message: e.to_string() }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| internal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn check_tol(name: &str, tol: f64) -> CmdResult {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(input_error(format!("--{name} must be a positive number")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = check_tol("tol-cq", cli.common.tol_cq).and_then(|()| check_tol("tol-cptp", cli.common.tol_cptp)).and_then(|()| run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dchan: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let c = &cli.common;
    match &cli.command {
        Command::Discord { state, strategy, n_theta, n_phi, starts } => cmd_discord(c, state, *strategy, *n_theta, *n_phi, *starts),
        Command::Classify { channel, side, dim_a, dim_b, samples } => cmd_classify(c, channel, *side, *dim_a, *dim_b, *samples),
        Command::TetraSweep { step, side, dim_other, probes } => cmd_tetra_sweep(c, *step, *side, *dim_other, *probes),
        Command::GenDa { spec, random, spec_out } => cmd_gen_da(c, spec.as_deref(), random.as_deref(), spec_out.as_deref()),
        Command::VerifyDa { channel, dim_a, dim_b, samples, witness_out } => {
            cmd_verify_da(c, channel, *dim_a, *dim_b, *samples, witness_out)
        }
    }
}

fn cmd_discord(c: &Common, path: &Path, strategy: StrategyArg, n_theta: usize, n_phi: usize, starts: usize) -> CmdResult {
    let rho = io::read_bipartite_state(&read(path)?).map_err(input_error)?;
    let strategy = match strategy {
        StrategyArg::Hybrid => Strategy::Hybrid,
        StrategyArg::Grid => Strategy::Grid { n_theta, n_phi },
        StrategyArg::Multistart => Strategy::MultiStart { starts, seed: c.seed },
    };
    let result = discord::discord(&rho, strategy).map_err(|e| match e {
        Error::InvalidStrategy(_) => input_error(e),
        other => internal(other),
    })?;
    let cq = discord::is_cq_exact(&rho, c.tol_cq);
    let mut v = io::discord_result_to_json(&result);
    v["dims"] = json!([rho.dim_a(), rho.dim_b()]);
    v["cq_exact"] = json!({ "is_cq": cq.is_cq, "residual": cq.residual });
    emit(c.out.as_deref(), &pretty(&v))
}

fn bipartite_dims(
    file_dims: Option<(usize, usize)>,
    dim_a: Option<usize>,
    dim_b: Option<usize>,
    total: usize,
) -> Result<(usize, usize), Failure> {
    let dims = match (dim_a, dim_b, file_dims) {
        (Some(a), Some(b), _) => (a, b),
        (Some(a), None, _) if a > 0 && total % a == 0 => (a, total / a),
        (None, Some(b), _) if b > 0 && total % b == 0 => (total / b, b),
        (None, None, Some(d)) => d,
        (None, None, None) => {
            let a = (total as f64).sqrt().round() as usize;
            if a * a != total {
                return Err(input_error(format!("cannot infer dims of a {total}-dimensional system; pass --dim-a/--dim-b")));
            }
            (a, a)
        }
        _ => return Err(input_error(format!("--dim-a/--dim-b do not divide the channel dimension {total}"))),
    };
    if dims.0 == 0 || dims.1 == 0 || dims.0 * dims.1 != total {
        return Err(input_error(format!("dims {}x{} do not match the channel dimension {total}", dims.0, dims.1)));
    }
    Ok(dims)
}

fn cmd_classify(c: &Common, path: &Path, side: Side, dim_a: Option<usize>, dim_b: Option<usize>, samples: usize) -> CmdResult {
    let file = io::read_channel(&read(path)?, c.tol_cptp).map_err(input_error)?;
    let ch = &file.channel;
    let context = match side {
        Side::A => Context::A { dim_b: dim_b.unwrap_or(2) },
        Side::B => Context::B { dim_a: dim_a.unwrap_or(2) },
        Side::Ab => {
            if ch.d_in() != ch.d_out() {
                return Err(input_error("a channel on AB must have equal input and output dimensions"));
            }
            let (a, b) = bipartite_dims(file.dims, dim_a, dim_b, ch.d_in())?;
            Context::Ab { dim_a: a, dim_b: b }
        }
    };
    if matches!(context, Context::A { dim_b: 0 } | Context::B { dim_a: 0 }) {
        return Err(input_error("dimensions must be positive"));
    }
    let opts = ClassifyOptions { seed: c.seed, samples, tol_cq: c.tol_cq, ..Default::default() };
    let report = classify::classify_channel(ch, context, &opts).map_err(internal)?;
    emit(c.out.as_deref(), &pretty(&io::report_to_json(&report)))
}

fn cmd_tetra_sweep(c: &Common, step: f64, side: LocalSide, dim_other: usize, probes: usize) -> CmdResult {
    if !(step > 0.0 && step <= 1.0) {
        return Err(input_error(format!("--step must lie in (0, 1], got {step}")));
    }
    if dim_other == 0 {
        return Err(input_error("--dim-other must be positive"));
    }
    let side = match side {
        LocalSide::A => Subsystem::A,
        LocalSide::B => Subsystem::B,
    };
    let rows = classify::tetrahedron_sweep(step, side, dim_other, probes, c.seed).map_err(internal)?;
    emit(c.out.as_deref(), &classify::sweep_csv(&rows))
}

fn parse_dims(text: &str) -> Result<(usize, usize), Failure> {
    let parsed = text.split_once(['x', 'X', ',']).and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    match parsed {
        Some((a, b)) if a > 0 && b > 0 => Ok((a, b)),
        _ => Err(input_error(format!("--random expects dims like 2x2, got \"{text}\""))),
    }
}

fn cmd_gen_da(c: &Common, spec: Option<&Path>, random_dims: Option<&str>, spec_out: Option<&Path>) -> CmdResult {
    let spec = match (spec, random_dims) {
        (Some(p), None) => io::read_da_spec(&read(p)?, c.tol_cptp).map_err(input_error)?,
        (None, Some(d)) => {
            let (a, b) = parse_dims(d)?;
            let mut rng = random::seeded(c.seed);
            annihilators::random_da_spec(a, b, &mut rng).map_err(internal)?
        }
        _ => return Err(input_error("pass exactly one of --spec or --random")),
    };
    spec.validate().map_err(input_error)?;
    let channel = annihilators::build_da_channel(&spec).map_err(internal)?;
    emit(c.out.as_deref(), &pretty(&io::channel_to_json(&channel, Some((spec.dim_a, spec.dim_b)))))?;
    let echo = pretty(&io::da_spec_to_json(&spec));
    match (spec_out, c.out.is_some()) {
        (Some(p), _) => emit(Some(p), &echo),
        (None, true) => emit(None, &echo),
        (None, false) => Ok(()),
    }
}

fn cmd_verify_da(c: &Common, path: &Path, dim_a: Option<usize>, dim_b: Option<usize>, samples: usize, witness_out: &Path) -> CmdResult {
    let file = io::read_channel(&read(path)?, c.tol_cptp).map_err(input_error)?;
    let ch: &QuantumChannel = &file.channel;
    if ch.d_in() != ch.d_out() {
        return Err(input_error("a channel on AB must have equal input and output dimensions"));
    }
    let (a, b) = bipartite_dims(file.dims, dim_a, dim_b, ch.d_in())?;
    let t = ch.real_transfer();
    let ratio = t.min_singular_value() / t.max_singular_value();
    let screen_passed = t.is_singular();
    let cert = annihilators::apply_and_certify(ch, a, b, samples, c.seed, c.tol_cq).map_err(internal)?;
    let recovered = if cert.passed() && screen_passed {
        match annihilators::structural_match(ch, a, b, samples.min(50), c.seed).map_err(internal)? {
            MatchOutcome::Matched { spec, residual } => Some((spec, residual)),
            MatchOutcome::NoMatch { .. } => None,
        }
    } else {
        None
    };
    let passed = cert.passed() && screen_passed;
    let report = json!({
        "dims": [a, b],
        "passed": passed,
        "samples": cert.samples,
        "failures": cert.failures,
        "worst_cq_residual": cert.worst_residual,
        "transfer_sigma_ratio": ratio,
        "transfer_singular": screen_passed,
        "recovered_signature": recovered.as_ref().map(|(s, _)| s.signature()),
        "recovery_residual": recovered.as_ref().map(|(_, r)| r),
        "witness_file": (!passed).then(|| witness_out.display().to_string()),
    });
    emit(c.out.as_deref(), &pretty(&report))?;
    if passed {
        return Ok(());
    }
    let witness = match &cert.worst_failure {
        Some(f) => json!({
            "sample": f.sample,
            "input": io::state_to_json(&f.input),
            "output": io::state_to_json(&f.output),
            "cq_residual": f.residual,
        }),
        None => json!({ "transfer_sigma_ratio": ratio }),
    };
    emit(Some(witness_out), &pretty(&witness))?;
    Err(Failure {
        code: EXIT_CERTIFICATION,
        message: if cert.passed() {
            format!("real transfer matrix has full rank (σ_min/σ_max = {ratio:.3e})")
        } else {
            format!("{} of {} outputs are not classical-quantum; witness in {}", cert.failures, cert.samples, witness_out.display())
        },
    })
}
