use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nettomo::channel::TraceDump;
use nettomo::harness::{
    analyze, emit, run_experiment, simulate, suite, trial_seed, ExperimentConfig, Format,
    HarnessError, Operation, Setup, SUITES,
};
use nettomo::netgraph::{parse_network, render_network, Network};
use nettomo::tomography::{Recovered, TomographyReport};

#[derive(Parser)]
#[command(
    name = "nettomo",
    version,
    about = "Passive tomography of network-coded networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat key = value experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    JsonLines,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Text => Format::Text,
            OutFormat::JsonLines => Format::JsonLines,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network and write its traces.
    Simulate {
        /// Include ground truth in the trace dumps.
        #[arg(long)]
        truth: bool,
    },
    /// Topology estimation, from trace dumps or as a seeded experiment.
    Topo {
        #[arg(long, value_enum)]
        alg: TopoAlg,
        #[command(flatten)]
        input: DumpInput,
    },
    /// Fault localization, from trace dumps or as a seeded experiment.
    Locate {
        #[arg(long, value_enum)]
        alg: LocateAlg,
        #[command(flatten)]
        input: DumpInput,
    },
    /// Run a named suite.
    Bench {
        #[arg(long)]
        suite: String,
        /// Override the suite's trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Write random networks satisfying the config.
    GenNet {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Args)]
struct DumpInput {
    /// Trace dumps written by `simulate`.
    #[arg(long, requires = "network")]
    traces: Option<PathBuf>,
    /// Network file used to rebuild coding coefficients and the receiver view.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Candidate network files for `topo-adv`.
    #[arg(long, num_args = 1..)]
    candidates: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopoAlg {
    FindTopo,
    FindTopoRs,
    TopoAdv,
}

#[derive(Clone, Copy, ValueEnum)]
enum LocateAlg {
    AdversaryRlnc,
    RandomRlnc,
    AdversaryRs,
    RandomRs,
    Erasure,
    Delay,
}

impl From<TopoAlg> for Operation {
    fn from(a: TopoAlg) -> Self {
        match a {
            TopoAlg::FindTopo => Operation::FindTopo,
            TopoAlg::FindTopoRs => Operation::FindTopoRs,
            TopoAlg::TopoAdv => Operation::TopoAdv,
        }
    }
}

impl From<LocateAlg> for Operation {
    fn from(a: LocateAlg) -> Self {
        match a {
            LocateAlg::AdversaryRlnc => Operation::LocateAdversaryRlnc,
            LocateAlg::RandomRlnc => Operation::LocateRandomRlnc,
            LocateAlg::AdversaryRs => Operation::LocateAdversaryRs,
            LocateAlg::RandomRs => Operation::LocateRandomRs,
            LocateAlg::Erasure => Operation::LocateErasure,
            LocateAlg::Delay => Operation::LocateDelay,
        }
    }
}

fn usage(msg: impl ToString) -> HarnessError {
    HarnessError::Config(msg.to_string())
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_network(path: &Path) -> Result<Network, HarnessError> {
    parse_network(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::parse(&read(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_out(common: &Common, name: &str, text: &str) -> Result<(), HarnessError> {
    match &common.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
        }
    }
}

fn ext(format: OutFormat) -> &'static str {
    match format {
        OutFormat::Text => "txt",
        OutFormat::JsonLines => "jsonl",
    }
}

fn render_reports(reports: &[TomographyReport], format: OutFormat) -> String {
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        match format {
            OutFormat::JsonLines => {
                out.push_str(&serde_json::to_string(r).expect("report serializes"));
            }
            OutFormat::Text => {
                let what = match &r.recovered {
                    Recovered::EdgeSet { edges } => format!("edges {{{}}}", edges.join(", ")),
                    Recovered::PairSet { pairs } => format!("pairs {{{}}}", pairs.join(", ")),
                    Recovered::Topology { network } => format!("topology\n{}", network.trim_end()),
                };
                let d = &r.diagnostics;
                out.push_str(&format!(
                    "report {i} traces={} decode_failures={} skipped={}{} {what}",
                    d.traces,
                    d.decode_failures,
                    d.skipped,
                    d.candidate_lines
                        .map(|c| format!(" candidate_lines={c}"))
                        .unwrap_or_default(),
                ));
            }
        }
        out.push('\n');
    }
    out
}

fn run_op(common: &Common, op: Operation, input: &DumpInput) -> Result<(), HarnessError> {
    let mut cfg = load_config(common)?;
    cfg.op = op;
    if cfg.model.is_some_and(|m| m != op.natural_model()) {
        cfg.model = None;
    }
    let name = serde_json::to_value(op).expect("op");
    let name = name.as_str().unwrap_or("op");
    match &input.traces {
        None => {
            let result = run_experiment(&cfg)?;
            write_out(
                common,
                &format!("{name}.{}", ext(common.format)),
                &emit(&result, common.format.into()),
            )
        }
        Some(path) => {
            let net = read_network(input.network.as_deref().expect("clap requires network"))?;
            let dumps = read(path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str::<TraceDump>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let candidates = input
                .candidates
                .iter()
                .map(|p| read_network(p))
                .collect::<Result<Vec<_>, _>>()?;
            let reports = analyze(&cfg, cfg.seed, net, &dumps, &candidates)?;
            write_out(
                common,
                &format!("{name}.{}", ext(common.format)),
                &render_reports(&reports, common.format),
            )
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let common = &cli.common;
    match cli.command {
        Command::Simulate { truth } => {
            let cfg = load_config(common)?;
            let sim = simulate(&cfg, cfg.seed, truth)?;
            let mut traces = String::new();
            for t in &sim.traces {
                traces.push_str(&serde_json::to_string(t).expect("trace serializes"));
                traces.push('\n');
            }
            match &common.out {
                Some(_) => {
                    write_out(common, "network.txt", &render_network(&sim.network))?;
                    write_out(common, "assignment.txt", &sim.assignment)?;
                    write_out(common, "traces.jsonl", &traces)
                }
                None => write_out(common, "", &traces),
            }
        }
        Command::Topo { alg, input } => run_op(common, alg.into(), &input),
        Command::Locate { alg, input } => run_op(common, alg.into(), &input),
        Command::Bench {
            suite: name,
            trials,
        } => {
            let mut cfg = suite(&name).ok_or_else(|| {
                usage(format!(
                    "unknown suite {name}; known: {}",
                    SUITES.join(", ")
                ))
            })?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let result = run_experiment(&cfg)?;
            write_out(
                common,
                &format!("{name}.{}", ext(common.format)),
                &emit(&result, common.format.into()),
            )
        }
        Command::GenNet { count } => {
            let cfg = load_config(common)?;
            cfg.validate()?;
            let mut all = String::new();
            for i in 0..count {
                let seed = trial_seed(cfg.seed, i);
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                let net = Setup::generate(&cfg, seed, &mut rng)?.net;
                let text = render_network(&net);
                if common.out.is_some() {
                    write_out(common, &format!("net{i}.txt"), &text)?;
                } else {
                    all.push_str(&format!("# network {i}\n{text}\n"));
                }
            }
            if common.out.is_none() {
                print!("{all}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
