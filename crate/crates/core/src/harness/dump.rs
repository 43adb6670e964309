//! File-based flow: `simulate` writes traces, `analyze` runs an operation on
//! them using only the receiver's view.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Operation, Setting};
use super::trials::{auto_generations, pair_names, Generator, Setup};
use super::HarnessError;
use crate::channel::{error_matrix, full_error_matrix, TraceDump};
use crate::codes::derive_seed;
use crate::linalg::Matrix;
use crate::netgraph::{render_network, Network};
use crate::tomography::{
    find_irv, find_topo, find_topo_rs, locate_adversary_rlnc, locate_adversary_rs, locate_delays,
    locate_erasures, locate_random_rlnc, locate_random_rs, topo_adv_rlnc, Diagnostics, LocateCap,
    ReceiverView, Recovered, TomographyReport,
};

pub struct Simulation {
    pub network: Network,
    /// Local coding coefficients as `beta` lines.
    pub assignment: String,
    pub traces: Vec<TraceDump>,
}

/// Generate a network from `seed` and transmit `t` generations under the
/// configured model. Undecodable generations are kept.
pub fn simulate(
    cfg: &ExperimentConfig,
    seed: u64,
    include_truth: bool,
) -> Result<Simulation, HarnessError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "rng", 0));
    let setup = Setup::generate(cfg, seed, &mut rng)?;
    let t = match cfg.t {
        Setting::Value(t) => t,
        Setting::Auto => auto_generations(setup.net.edge_count(), None),
    };
    let mut gen = Generator::new(cfg, &setup);
    let mut traces = Vec::with_capacity(t);
    for _ in 0..t {
        let (trace, _) = gen.next(&mut rng, |_| true)?;
        traces.push(TraceDump::from_trace(&trace, include_truth));
    }
    Ok(Simulation {
        assignment: setup.asg.export(&setup.net),
        network: setup.net,
        traces,
    })
}

fn matrices(dump: &TraceDump) -> Result<(Matrix, Option<Matrix>), HarnessError> {
    let conv = |e: crate::channel::ChannelError| HarnessError::Config(e.to_string());
    Ok((
        dump.y_matrix().map_err(conv)?,
        dump.x_matrix().map_err(conv)?,
    ))
}

fn report(recovered: Recovered, diagnostics: Diagnostics) -> TomographyReport {
    TomographyReport {
        recovered,
        diagnostics,
    }
}

/// Run the configured operation on trace dumps. Localization yields one
/// report per decodable trace; topology operations yield one report.
///
/// `net` supplies the coding coefficients (rebuilt from `seed`) and, for
/// topology operations, only the receiver's own incoming edges and labels.
pub fn analyze(
    cfg: &ExperimentConfig,
    seed: u64,
    net: Network,
    dumps: &[TraceDump],
    candidates: &[Network],
) -> Result<Vec<TomographyReport>, HarnessError> {
    cfg.validate()?;
    let s = Setup::for_network(cfg, net, seed)?;
    let view = ReceiverView::of(&s.net);
    let mut decoded = Vec::new();
    let mut failures = 0;
    for d in dumps {
        match matrices(d)? {
            (y, Some(x)) => decoded.push((y, x)),
            (_, None) => failures += 1,
        }
    }
    let diag = |traces: usize| Diagnostics {
        traces,
        decode_failures: failures,
        ..Diagnostics::default()
    };
    let edges = |set| Recovered::EdgeSet {
        edges: s.edge_names(&set),
    };
    let pairs = |set| Recovered::PairSet {
        pairs: pair_names(&s.net, &set),
    };
    let mut out = Vec::new();
    match cfg.op {
        Operation::FindTopo | Operation::FindTopoRs => {
            let zs = decoded
                .iter()
                .map(|(y, x)| error_matrix(y, x))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let mut d = diag(dumps.len());
            if cfg.op == Operation::FindTopoRs {
                let r = find_topo_rs(&zs, s.ids.as_ref().expect("NRSC"), &view)?;
                d.skipped = r.skipped;
                out.push(report(pairs(r.pairs), d));
            } else {
                let cand = find_irv(&zs)?;
                d.candidate_lines = Some(cand.len());
                let g = find_topo(&cand, s.codebook.as_ref().expect("RLNC"), &view)?;
                out.push(report(
                    Recovered::Topology {
                        network: render_network(&g),
                    },
                    d,
                ));
            }
        }
        Operation::TopoAdv => {
            let Some(first) = dumps.first() else {
                return Err(HarnessError::Config("topo-adv needs one trace".into()));
            };
            let (y, _) = matrices(first)?;
            let t_e = y.column_range(0, s.net.capacity());
            let i = topo_adv_rlnc(&t_e, s.codebook.as_ref().expect("RLNC"), cfg.z, candidates)?;
            out.push(report(
                Recovered::Topology {
                    network: render_network(&candidates[i]),
                },
                diag(1),
            ));
        }
        op => {
            for (y, x) in &decoded {
                let linalg = |e: crate::channel::ChannelError| HarnessError::Config(e.to_string());
                let r = match op {
                    Operation::LocateAdversaryRlnc => {
                        let zhat = full_error_matrix(y, &s.transfer, x).map_err(linalg)?;
                        let cap = LocateCap {
                            z_max: cfg.z,
                            max_subsets: cfg.max_subsets,
                        };
                        edges(locate_adversary_rlnc(&zhat, &s.irv, &cap)?)
                    }
                    Operation::LocateRandomRlnc => edges(locate_random_rlnc(
                        &error_matrix(y, x).map_err(linalg)?,
                        &s.irv,
                    )?),
                    Operation::LocateErasure => edges(locate_erasures(y, x, &s.transfer, &s.irv)?),
                    Operation::LocateDelay => {
                        let yd = full_error_matrix(y, &s.transfer, x).map_err(linalg)?;
                        edges(locate_delays(&yd, &s.irv)?)
                    }
                    Operation::LocateAdversaryRs => pairs(locate_adversary_rs(
                        x,
                        y,
                        s.ids.as_ref().expect("NRSC"),
                        cfg.depth(),
                        &view,
                    )?),
                    Operation::LocateRandomRs => pairs(locate_random_rs(
                        x,
                        y,
                        s.ids.as_ref().expect("NRSC"),
                        cfg.depth(),
                        &view,
                    )?),
                    _ => unreachable!(),
                };
                out.push(report(r, diag(1)));
            }
        }
    }
    Ok(out)
}
