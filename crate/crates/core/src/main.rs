use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lossy_pbft::analytic::{
    expected_replies_lower_bound, required_retransmissions, scenario_joint_pmf, scenario_phase_probabilities,
    Acceptance, JointPhaseDistribution, MessageSuccessModel, PhaseProbabilities, PrePrepareQuorum, SegmentSuccess,
};
use lossy_pbft::config::{ber_to_packet_success, ScenarioSpec, SystemConfig, DEFAULT_HEADER_BYTES, LINKS_PER_PATH};
use lossy_pbft::experiment::{self, RunOverrides, SweepAxis};
use lossy_pbft::netsim;
use lossy_pbft::Error;

/// PBFT transaction success over lossy links: closed-form model and
/// discrete-event simulation.
#[derive(Parser, Debug)]
#[command(name = "lossy-pbft", version)]
struct Cli {
    /// Scenario file (TOML). Without one, n=4, f=1 with default links.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form evaluations.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Simulations.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Checks the model against the simulation columns of a sweep CSV.
    Compare {
        #[arg(long)]
        input: PathBuf,
        /// Fails (exit 3) when fewer rows than this have the model inside
        /// the confidence interval.
        #[arg(long, default_value_t = 0.9)]
        min_fraction: f64,
    },
    /// Runs a named preset and writes its CSV.
    Figures {
        /// One of fig2..fig7 or faults.
        preset: String,
        #[command(flatten)]
        size: SizeArgs,
    },
}

#[derive(Subcommand, Debug)]
enum ModelCommand {
    /// Success probability, expected replies and the lower bound.
    Eval(EvalArgs),
    /// Retransmissions that keep the expected replies at 2f+1 or more.
    RequiredRetx {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        f: u32,
        /// Segments per message.
        #[arg(long, default_value_t = 1)]
        u: u32,
        /// Per-transmission packet success.
        #[arg(long)]
        p: f64,
        /// Count datagram copies (success p) instead of TCP attempts (p^2).
        #[arg(long)]
        udp: bool,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Replicas; required unless a scenario is given.
    #[arg(long, requires = "f")]
    n: Option<u32>,
    #[arg(long, requires = "n")]
    f: Option<u32>,
    /// Per-message success probability.
    #[arg(long, conflicts_with_all = ["ber", "loss"])]
    p: Option<f64>,
    /// Per-link bit error rate, applied to payload plus framing on two links.
    #[arg(long, conflicts_with = "loss")]
    ber: Option<f64>,
    /// End-to-end message loss.
    #[arg(long)]
    loss: Option<f64>,
    #[arg(long, default_value_t = 128)]
    payload: u32,
    /// f+1 or 2f+1 (default).
    #[arg(long)]
    reply_threshold: Option<u32>,
    /// Count the primary towards the PRE-PREPARE quorum.
    #[arg(long)]
    count_primary: bool,
}

#[derive(Subcommand, Debug)]
enum SimCommand {
    /// One record per transaction.
    Run(SizeArgs),
    /// One aggregated row per axis value.
    Sweep {
        /// ber, packet_loss, repeats, n or r_pp.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// scenario_id column.
        #[arg(long, default_value = "sweep")]
        id: String,
        #[command(flatten)]
        size: SizeArgs,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct SizeArgs {
    /// Requests per repetition.
    #[arg(long)]
    requests: Option<u32>,
    #[arg(long)]
    repetitions: Option<u32>,
}

enum Failure {
    Usage(String),
    Config(String),
    Compare(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::FaultBoundTooSmall
            | Error::Unsatisfiable(_)
            | Error::ScenarioFormat(_) => Failure::Config(e.to_string()),
            Error::SchedulingInPast { .. } | Error::Csv(_) | Error::ResultFormat(_) | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compare(msg)) => {
            eprintln!("comparison failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_scenario(cli: &Cli) -> Result<ScenarioSpec, Failure> {
    let mut spec = match &cli.scenario {
        Some(path) => ScenarioSpec::load(path)?,
        None => ScenarioSpec::new(SystemConfig::new(4, 1)),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn resize(mut spec: ScenarioSpec, size: SizeArgs) -> ScenarioSpec {
    spec.requests = size.requests.unwrap_or(spec.requests);
    spec.repetitions = size.repetitions.unwrap_or(spec.repetitions);
    spec
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Model(ModelCommand::Eval(args)) => model_eval(cli, args),
        Command::Model(ModelCommand::RequiredRetx { n, f, u, p, udp }) => {
            check_unit("p", *p)?;
            if *u == 0 {
                return Err(Failure::Config("u must be at least 1".into()));
            }
            let mode = if *udp { SegmentSuccess::Udp } else { SegmentSuccess::Tcp };
            let r = required_retransmissions(*n, *f, *u, *p, mode)?;
            let mut out = open_output(cli.output.as_deref())?;
            writeln!(out, "{r}")?;
            Ok(())
        }
        Command::Sim(SimCommand::Run(size)) => {
            let spec = resize(load_scenario(cli)?, *size).validate()?;
            let records = netsim::run(&spec)?;
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(open_output(cli.output.as_deref())?);
            w.write_record([
                "repetition",
                "index",
                "success",
                "latency_ms",
                "msgs_preprepare",
                "msgs_prepare",
                "msgs_commit",
                "msgs_reply",
                "m",
                "k",
                "j",
                "s",
                "abandoned",
            ])
            .map_err(Error::from)?;
            for r in &records {
                let mut cells = vec![
                    r.repetition.to_string(),
                    r.index.to_string(),
                    r.success.to_string(),
                    r.latency_ms().map(|l| format!("{l:.3}")).unwrap_or_default(),
                ];
                cells.extend(r.messages.iter().map(u64::to_string));
                cells.extend([r.m, r.k, r.j, r.s, r.abandoned].iter().map(u32::to_string));
                w.write_record(&cells).map_err(Error::from)?;
            }
            w.flush()?;
            let ok = records.iter().filter(|r| r.success).count();
            eprintln!("{ok}/{} transactions succeeded", records.len());
            Ok(())
        }
        Command::Sim(SimCommand::Sweep { axis, values, id, size }) => {
            let base = resize(load_scenario(cli)?, *size);
            let result = experiment::sweep(id, &base, *axis, values);
            for row in result.errors() {
                eprintln!("{} = {}: {}", row.axis_name, row.axis_value, row.error.as_deref().unwrap_or(""));
            }
            experiment::emit_csv(&result, open_output(cli.output.as_deref())?)?;
            Ok(())
        }
        Command::Compare { input, min_fraction } => {
            let result = experiment::parse_csv(File::open(input)?)?;
            let cmp = experiment::compare(&result);
            let mut out = open_output(cli.output.as_deref())?;
            writeln!(out, "scenario_id,axis_value,abs_diff,inside_ci")?;
            for v in &cmp.rows {
                writeln!(out, "{},{},{:.6},{}", v.scenario_id, v.axis_value, v.abs_diff, v.inside_ci)?;
            }
            let Some(fraction) = cmp.fraction_inside() else {
                return Err(Failure::Compare("no row has both simulated and model values".into()));
            };
            writeln!(out, "fraction_inside_ci,{fraction:.6}")?;
            out.flush()?;
            if fraction < *min_fraction {
                return Err(Failure::Compare(format!("{fraction:.3} of rows inside the CI, need {min_fraction}")));
            }
            Ok(())
        }
        Command::Figures { preset, size } => {
            let Some(p) = experiment::preset(preset) else {
                return Err(Failure::Usage(format!(
                    "unknown preset {preset:?}; available: {}",
                    experiment::PRESET_NAMES.join(", ")
                )));
            };
            eprintln!("{}: {}", p.name, p.about);
            let overrides = RunOverrides { seed: cli.seed, requests: size.requests, repetitions: size.repetitions };
            let result = p.run(overrides);
            for row in result.errors() {
                eprintln!(
                    "{} {} = {}: {}",
                    row.scenario_id,
                    row.axis_name,
                    row.axis_value,
                    row.error.as_deref().unwrap_or("")
                );
            }
            experiment::emit_csv(&result, open_output(cli.output.as_deref())?)?;
            Ok(())
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Failure::Config(format!("{name} = {v} outside [0,1]")))
    }
}

fn model_eval(cli: &Cli, args: &EvalArgs) -> Result<(), Failure> {
    let rule = if args.count_primary { PrePrepareQuorum::IncludingPrimary } else { PrePrepareQuorum::Backups };
    let (cfg, joint, phases) = match (args.n, args.f) {
        (Some(n), Some(f)) => {
            let mut cfg = SystemConfig::new(n, f);
            cfg.payload_bytes = args.payload;
            cfg.reply_threshold = args.reply_threshold;
            let cfg = cfg.validate()?;
            let p = match (args.p, args.ber, args.loss) {
                (Some(p), _, _) => p,
                (_, Some(ber), _) => {
                    check_unit("ber", ber)?;
                    ber_to_packet_success(ber, (args.payload + DEFAULT_HEADER_BYTES) as u64).powi(LINKS_PER_PATH as i32)
                }
                (_, _, Some(loss)) => 1.0 - loss,
                _ => return Err(Failure::Usage("give one of --p, --ber or --loss".into())),
            };
            check_unit("p", p)?;
            let phases = PhaseProbabilities::uniform(p);
            (cfg.clone(), JointPhaseDistribution::compute(&cfg, phases), phases)
        }
        _ => {
            if cli.scenario.is_none() {
                return Err(Failure::Usage("give --n and --f, or a --scenario".into()));
            }
            let spec = load_scenario(cli)?.validate()?;
            (spec.system.clone(), scenario_joint_pmf(&spec), scenario_phase_probabilities(&spec))
        }
    };
    let acc = Acceptance::for_config(&cfg).with_preprepare(rule);
    let active = SystemConfig { n: joint.n(), prepare_commit_threshold: Some(joint.threshold()), ..cfg.clone() };
    let bound = expected_replies_lower_bound(&active, &MessageSuccessModel::udp(phases.exchange));
    let expected = joint.expected_replies(&acc);

    let mut out = open_output(cli.output.as_deref())?;
    writeln!(out, "p_msg = {:.6}", phases.exchange)?;
    writeln!(out, "p_succ = {:.6}", joint.success_probability(&acc))?;
    writeln!(out, "expected_replies = {expected:.6}")?;
    match bound {
        Ok(b) => writeln!(out, "lower_bound = {b:.6}")?,
        Err(e) => writeln!(out, "lower_bound = n/a ({e})")?,
    }
    writeln!(out, "switch_to_tcp = {}", expected < cfg.phase_quorum() as f64)?;
    out.flush()?;
    Ok(())
}
