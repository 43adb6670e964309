//! One trial per operation: build a network, transmit, run the receiver-side
//! algorithm, compare against ground truth.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{Attack, ExperimentConfig, ModelName, Operation, SchemeName, Setting};
use super::HarnessError;
use crate::channel::{
    adversarial_uniform, error_matrix, full_error_matrix, genie_decode, make_message,
    transmit_after, truth_reads, ErrorModel, GenerationTrace,
};
use crate::codes::{
    assign_nrsc, assign_rlnc, compute_irvs, derive_seed, transfer_matrix, Codebook, CodebookKind,
    CodingAssignment, IdTable, IrvTable,
};
use crate::field::Gf;
use crate::linalg::Matrix;
use crate::netgraph::{
    extended_set, min_cut, random_network, render_network, source_flow_rank, Edge, EdgeSet,
    Network, NetworkParams,
};
use crate::tomography::{
    estimate_dependence, find_irv, find_topo, find_topo_rs, locate_adversary_rlnc,
    locate_adversary_rs, locate_delays, locate_erasures, locate_random_rlnc, locate_random_rs,
    topo_adv_rlnc, Diagnostics, LocateCap, PairSet, ReceiverView, Recovered, TomographyError,
};

const MAX_DRAWS: usize = 10_000;

/// Coefficients a receiver could rebuild from shared seeds.
pub struct Setup {
    pub field: Gf,
    pub net: Network,
    pub asg: CodingAssignment,
    pub codebook: Option<Codebook>,
    pub ids: Option<IdTable>,
    pub irv: IrvTable,
    pub transfer: Matrix,
}

impl Setup {
    /// Coding for `net` under the configured scheme, keyed by `seed`.
    pub fn for_network(
        cfg: &ExperimentConfig,
        net: Network,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let field = cfg.field()?;
        let (asg, codebook, ids) = match cfg.scheme {
            SchemeName::RlncWeak | SchemeName::RlncStrong => {
                let kind = if cfg.scheme == SchemeName::RlncWeak {
                    CodebookKind::Weak
                } else {
                    CodebookKind::Strong
                };
                let cb = Codebook::new(kind, derive_seed(seed, "codebook", 0), field);
                (assign_rlnc(&net, &cb), Some(cb), None)
            }
            SchemeName::Nrsc => {
                let ids = IdTable::for_network(field, derive_seed(seed, "ids", 0), &net)
                    .map_err(|e| HarnessError::Trial(e.to_string()))?;
                (
                    assign_nrsc(&net, &ids).map_err(|e| HarnessError::Trial(e.to_string()))?,
                    None,
                    Some(ids),
                )
            }
        };
        let irv = compute_irvs(&net, &asg);
        let transfer = transfer_matrix(&net, &asg);
        Ok(Setup {
            field,
            net,
            asg,
            codebook,
            ids,
            irv,
            transfer,
        })
    }

    pub fn generate(
        cfg: &ExperimentConfig,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, HarnessError> {
        let params = NetworkParams::new(cfg.nodes, cfg.capacity, cfg.profile());
        let net = random_network(&params, rng).map_err(|e| HarnessError::Trial(e.to_string()))?;
        Setup::for_network(cfg, net, seed)
    }

    fn codebook(&self) -> &Codebook {
        self.codebook.as_ref().expect("RLNC scheme")
    }

    fn ids(&self) -> &IdTable {
        self.ids.as_ref().expect("NRSC scheme")
    }

    pub fn edge_names(&self, set: &EdgeSet) -> Vec<String> {
        set.iter().map(|&e| self.net.edge_name(e)).collect()
    }

    fn names(&self, sets: &[EdgeSet]) -> Vec<Vec<String>> {
        sets.iter().map(|e| self.edge_names(e)).collect()
    }

    pub fn pair_names(&self, pairs: &PairSet) -> Vec<String> {
        pair_names(&self.net, pairs)
    }

    fn pairs_of(&self, set: &EdgeSet) -> PairSet {
        set.iter()
            .map(|&e| {
                let ed = self.net.edge(e);
                (ed.tail, ed.head, ed.k)
            })
            .collect()
    }
}

pub fn pair_names(net: &Network, pairs: &PairSet) -> Vec<String> {
    pairs
        .iter()
        .map(|&(u, v, k)| {
            if k == 0 {
                format!("{}->{}", net.label(u), net.label(v))
            } else {
                format!("{}->{}#{}", net.label(u), net.label(v), k)
            }
        })
        .collect()
}

/// What a trial produced.
pub struct Outcome {
    pub network: String,
    /// Faulty edge names per generation.
    pub error_edges: Vec<Vec<String>>,
    pub output: Result<Recovered, TomographyError>,
    pub expected: Recovered,
    pub success: bool,
    pub diagnostics: Diagnostics,
}

/// Per-generation fault draw honoring the configured model. Draws are
/// rejected until `accept` holds on the faulty set.
pub struct Generator<'a> {
    pub cfg: &'a ExperimentConfig,
    pub setup: &'a Setup,
    pub index: u64,
    pub previous: Option<GenerationTrace>,
    pub rejected: usize,
}

impl<'a> Generator<'a> {
    pub fn new(cfg: &'a ExperimentConfig, setup: &'a Setup) -> Self {
        Generator {
            cfg,
            setup,
            index: 0,
            previous: None,
            rejected: 0,
        }
    }

    fn p_f(&self) -> f64 {
        match self.cfg.p_f {
            Setting::Value(p) => p,
            Setting::Auto => 1.0 / self.setup.net.edge_count() as f64,
        }
    }

    fn random_edges(&self, z: usize, rng: &mut ChaCha8Rng) -> EdgeSet {
        let mut all: Vec<usize> = (0..self.setup.net.edge_count()).collect();
        all.shuffle(rng);
        all.into_iter().take(z).collect()
    }

    fn model(&self, x: &Matrix, rng: &mut ChaCha8Rng) -> ErrorModel {
        let f = self.setup.field;
        let n = x.cols();
        match self.cfg.model() {
            ModelName::None => ErrorModel::None,
            ModelName::Random => ErrorModel::Random {
                p_f: self.p_f(),
                sparsity: self.cfg.s,
            },
            ModelName::Adversarial => {
                let edges = self.random_edges(self.cfg.z, rng);
                adversarial_uniform(f, &edges, n, rng)
            }
            ModelName::Erasure => ErrorModel::ErasureRandom { p_f: self.p_f() },
            ModelName::Delay => ErrorModel::Delay {
                edges: self.random_edges(self.cfg.z, rng),
            },
        }
    }

    /// Transmit a fresh message; returns the trace and the message.
    pub fn next(
        &mut self,
        rng: &mut ChaCha8Rng,
        accept: impl Fn(&EdgeSet) -> bool,
    ) -> Result<(GenerationTrace, Matrix), HarnessError> {
        let s = self.setup;
        for _ in 0..MAX_DRAWS {
            let x = make_message(s.field, s.net.capacity(), self.cfg.n, rng)
                .map_err(|e| HarnessError::Trial(e.to_string()))?;
            let model = self.model(&x, rng);
            let trace = transmit_after(
                &s.net,
                &s.asg,
                &x,
                &model,
                self.index,
                self.previous.as_ref(),
                rng,
            )
            .map_err(|e| HarnessError::Trial(e.to_string()))?;
            if accept(&trace.truth().error_edges) {
                self.index += 1;
                self.previous = Some(trace.clone());
                return Ok((trace, x));
            }
            self.rejected += 1;
        }
        Err(HarnessError::Trial(format!(
            "no acceptable generation in {MAX_DRAWS} draws"
        )))
    }

    /// Transmit with an explicit model and no rejection.
    pub fn with_model(
        &mut self,
        model: &ErrorModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<(GenerationTrace, Matrix), HarnessError> {
        let s = self.setup;
        let x = make_message(s.field, s.net.capacity(), self.cfg.n, rng)
            .map_err(|e| HarnessError::Trial(e.to_string()))?;
        let trace = transmit_after(
            &s.net,
            &s.asg,
            &x,
            model,
            self.index,
            self.previous.as_ref(),
            rng,
        )
        .map_err(|e| HarnessError::Trial(e.to_string()))?;
        self.index += 1;
        self.previous = Some(trace.clone());
        Ok((trace, x))
    }
}

/// Run `f` and fail if it read ground truth while auditing.
fn audited<T>(
    cfg: &ExperimentConfig,
    f: impl FnOnce() -> Result<T, TomographyError>,
) -> Result<T, TomographyError> {
    let before = truth_reads();
    let out = f();
    if cfg.audit && truth_reads() != before {
        return Err(TomographyError::ModelViolation(
            "tomography code read ground truth".into(),
        ));
    }
    out
}

fn decoded(trace: &GenerationTrace) -> Result<Matrix, HarnessError> {
    genie_decode(trace).map_err(|e| HarnessError::Trial(e.to_string()))
}

fn edge_outcome(
    setup: &Setup,
    error_edges: Vec<EdgeSet>,
    output: Result<EdgeSet, TomographyError>,
    expected: &EdgeSet,
    diagnostics: Diagnostics,
) -> Outcome {
    let success = output.as_ref().is_ok_and(|o| o == expected);
    Outcome {
        network: render_network(&setup.net),
        error_edges: setup.names(&error_edges),
        output: output.map(|o| Recovered::EdgeSet {
            edges: setup.edge_names(&o),
        }),
        expected: Recovered::EdgeSet {
            edges: setup.edge_names(expected),
        },
        success,
        diagnostics,
    }
}

fn pair_outcome(
    setup: &Setup,
    error_edges: Vec<EdgeSet>,
    output: Result<PairSet, TomographyError>,
    expected: &PairSet,
    diagnostics: Diagnostics,
) -> Outcome {
    let success = output.as_ref().is_ok_and(|o| o == expected);
    Outcome {
        network: render_network(&setup.net),
        error_edges: setup.names(&error_edges),
        output: output.map(|o| Recovered::PairSet {
            pairs: setup.pair_names(&o),
        }),
        expected: Recovered::PairSet {
            pairs: setup.pair_names(expected),
        },
        success,
        diagnostics,
    }
}

pub fn run(
    cfg: &ExperimentConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome, HarnessError> {
    if cfg.op == Operation::TopoAdv {
        return topo_adv(cfg, seed, rng);
    }
    let setup = Setup::generate(cfg, seed, rng)?;
    let s = &setup;
    let c = s.net.capacity();
    let mut gen = Generator::new(cfg, s);
    let one = |d: usize| Diagnostics {
        traces: 1,
        decode_failures: d,
        ..Diagnostics::default()
    };
    Ok(match cfg.op {
        Operation::LocateAdversaryRlnc => {
            let (trace, _) = gen.next(rng, |_| true)?;
            let planted = trace.truth().error_edges.clone();
            let x = decoded(&trace)?;
            let zhat = full_error_matrix(trace.y(), &s.transfer, &x)
                .map_err(|e| HarnessError::Trial(e.to_string()))?;
            let cap = LocateCap {
                z_max: cfg.z,
                max_subsets: cfg.max_subsets,
            };
            let out = audited(cfg, || locate_adversary_rlnc(&zhat, &s.irv, &cap));
            edge_outcome(s, vec![planted.clone()], out, &planted, one(0))
        }
        Operation::LocateRandomRlnc => {
            let (trace, _) = gen.next(rng, |e| !e.is_empty() && e.len() < c)?;
            let planted = trace.truth().error_edges.clone();
            let zr = error_matrix(trace.y(), &decoded(&trace)?)
                .map_err(|e| HarnessError::Trial(e.to_string()))?;
            let out = audited(cfg, || locate_random_rlnc(&zr, &s.irv));
            let want = extended_set(&s.net, &planted);
            edge_outcome(s, vec![planted], out, &want, one(gen.rejected))
        }
        Operation::LocateAdversaryRs => {
            let (trace, _) = gen.next(rng, |_| true)?;
            let planted = trace.truth().error_edges.clone();
            let x = decoded(&trace)?;
            let view = ReceiverView::of(&s.net);
            let out = audited(cfg, || {
                locate_adversary_rs(&x, trace.y(), s.ids(), cfg.depth(), &view)
            });
            let want = s.pairs_of(&planted);
            pair_outcome(s, vec![planted], out, &want, one(0))
        }
        Operation::LocateRandomRs => {
            let bound = c.min(cfg.depth());
            let (trace, _) = gen.next(rng, |e| !e.is_empty() && e.len() < bound)?;
            let planted = trace.truth().error_edges.clone();
            let x = decoded(&trace)?;
            let view = ReceiverView::of(&s.net);
            let out = audited(cfg, || {
                locate_random_rs(&x, trace.y(), s.ids(), cfg.depth(), &view)
            });
            let want = s.pairs_of(&planted);
            pair_outcome(s, vec![planted], out, &want, one(gen.rejected))
        }
        Operation::LocateErasure => {
            let net = &s.net;
            let (trace, _) = gen.next(rng, |e| {
                !e.is_empty() && e.len() < c && source_flow_rank(net, e) == e.len()
            })?;
            let planted = trace.truth().error_edges.clone();
            let x = decoded(&trace)?;
            let out = audited(cfg, || locate_erasures(trace.y(), &x, &s.transfer, &s.irv));
            let want = extended_set(net, &planted);
            edge_outcome(s, vec![planted], out, &want, one(gen.rejected))
        }
        Operation::LocateDelay => {
            let net = &s.net;
            gen.with_model(&ErrorModel::None, rng)?;
            let (trace, _) =
                gen.next(rng, |e| e.len() < c && source_flow_rank(net, e) == e.len())?;
            let planted = trace.truth().error_edges.clone();
            let x = decoded(&trace)?;
            let yd = full_error_matrix(trace.y(), &s.transfer, &x)
                .map_err(|e| HarnessError::Trial(e.to_string()))?;
            let out = audited(cfg, || locate_delays(&yd, &s.irv));
            let want = extended_set(net, &planted);
            edge_outcome(
                s,
                vec![EdgeSet::new(), planted],
                out,
                &want,
                one(gen.rejected),
            )
        }
        Operation::FindTopo | Operation::FindTopoRs => topology(cfg, s, &mut gen, rng)?,
        Operation::TopoAdv => unreachable!(),
    })
}

/// `ceil(c |E| ln |E|)` with `c = 3 / (fraction of independent pilot pairs)`.
pub(crate) fn auto_generations(edges: usize, independent: Option<f64>) -> usize {
    let e = edges.max(2) as f64;
    let c = 3.0 / independent.unwrap_or(1.0).max(0.25);
    (c * e * e.ln()).ceil() as usize
}

fn topology(
    cfg: &ExperimentConfig,
    s: &Setup,
    gen: &mut Generator<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome, HarnessError> {
    let c = s.net.capacity();
    let mut errors = Vec::new();
    let mut matrices = Vec::new();
    let step = |gen: &mut Generator<'_>,
                rng: &mut ChaCha8Rng,
                errors: &mut Vec<EdgeSet>,
                matrices: &mut Vec<Matrix>|
     -> Result<(), HarnessError> {
        let (trace, _) = gen.next(rng, |e| e.len() < c)?;
        errors.push(trace.truth().error_edges.clone());
        let zr = error_matrix(trace.y(), &decoded(&trace)?)
            .map_err(|e| HarnessError::Trial(e.to_string()))?;
        matrices.push(zr);
        Ok(())
    };
    let (t, dependence) = match cfg.t {
        Setting::Value(t) => {
            for _ in 0..t {
                step(gen, rng, &mut errors, &mut matrices)?;
            }
            (t, None)
        }
        Setting::Auto => {
            let pilot = s.net.edge_count();
            for _ in 0..pilot {
                step(gen, rng, &mut errors, &mut matrices)?;
            }
            let est = estimate_dependence(&matrices).ok();
            let t = auto_generations(s.net.edge_count(), est).max(pilot);
            for _ in pilot..t {
                step(gen, rng, &mut errors, &mut matrices)?;
            }
            (t, est)
        }
    };
    let view = ReceiverView::of(&s.net);
    let mut diagnostics = Diagnostics {
        traces: t,
        dependence_estimate: dependence,
        decode_failures: gen.rejected,
        ..Diagnostics::default()
    };
    if cfg.op == Operation::FindTopoRs {
        let out = audited(cfg, || find_topo_rs(&matrices, s.ids(), &view));
        if let Ok(o) = &out {
            diagnostics.skipped = o.skipped;
        }
        let all: EdgeSet = (0..s.net.edge_count()).collect();
        let want = s.pairs_of(&all);
        return Ok(pair_outcome(
            s,
            errors,
            out.map(|o| o.pairs),
            &want,
            diagnostics,
        ));
    }
    let out = audited(cfg, || {
        let cand = find_irv(&matrices)?;
        Ok((cand.len(), find_topo(&cand, s.codebook(), &view)?))
    });
    let success = out.as_ref().is_ok_and(|(_, g)| g.same_topology(&s.net));
    if let Ok((lines, _)) = &out {
        diagnostics.candidate_lines = Some(*lines);
    }
    Ok(Outcome {
        network: render_network(&s.net),
        error_edges: s.names(&errors),
        output: out.map(|(_, g)| Recovered::Topology {
            network: render_network(&g),
        }),
        expected: Recovered::Topology {
            network: render_network(&s.net),
        },
        success,
        diagnostics,
    })
}

/// A different network with the same degree sequence: the heads of two edges
/// are swapped. Rejects results that are cyclic, change the min-cut, or equal
/// `net` as a topology.
pub fn rewire<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> Option<Network> {
    let m = net.edge_count();
    for _ in 0..500 {
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        let (a, b) = (net.edge(i), net.edge(j));
        if a.head == b.head || a.tail == b.tail {
            continue;
        }
        let mut edges: Vec<Edge> = net.edges().to_vec();
        let next_k = |edges: &[Edge], t: usize, h: usize| {
            edges
                .iter()
                .filter(|e| e.tail == t && e.head == h)
                .map(|e| e.k + 1)
                .max()
                .unwrap_or(0)
        };
        edges[i].head = usize::MAX;
        edges[j].head = usize::MAX;
        edges[i] = Edge {
            tail: a.tail,
            head: b.head,
            k: next_k(&edges, a.tail, b.head),
        };
        edges[j] = Edge {
            tail: b.tail,
            head: a.head,
            k: next_k(&edges, b.tail, a.head),
        };
        let Ok(g) = Network::new(net.labels().to_vec(), edges, net.source(), net.receiver()) else {
            continue;
        };
        if min_cut(&g) == min_cut(net) && !g.same_topology(net) {
            return Some(g);
        }
    }
    None
}

/// Pairwise distinct alternatives to `truth`, each one or two rewirings away
/// or, when `truth` admits no rewiring, freshly generated from `params`.
pub fn alternatives<R: Rng + ?Sized>(
    truth: &Network,
    params: &NetworkParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Network>, HarnessError> {
    let mut out: Vec<Network> = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 200 * (count + 1) {
            return Err(HarnessError::Trial(format!(
                "found only {} of {count} alternative topologies",
                out.len()
            )));
        }
        // rewire from anything found so far so chains of rewirings are reachable
        let base = match rng.gen_range(0..=out.len()) {
            0 => truth,
            i => &out[i - 1],
        };
        let mut g = match rewire(base, rng) {
            Some(g) => g,
            None => match random_network(params, rng) {
                Ok(g) => g,
                Err(_) => continue,
            },
        };
        if rng.gen_bool(0.5) {
            if let Some(h) = rewire(&g, rng) {
                g = h;
            }
        }
        if !g.same_topology(truth) && out.iter().all(|o| !o.same_topology(&g)) {
            out.push(g);
        }
    }
    Ok(out)
}

/// Adversarial packets on `edges` whose header part moves `T` toward
/// `target` wherever `col(Θ(edges))` allows it.
fn mimic_packets(
    s: &Setup,
    edges: &EdgeSet,
    target: &Matrix,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ErrorModel, HarnessError> {
    let f = s.field;
    let list: Vec<usize> = edges.iter().copied().collect();
    let theta = s.irv.irm(&list);
    let diff = target
        .sub(&s.transfer)
        .map_err(|e| HarnessError::Trial(e.to_string()))?;
    let c = s.net.capacity();
    let mut packets: Vec<Vec<u64>> = vec![vec![0; n]; list.len()];
    for j in 0..c {
        let w = theta
            .solve(&diff.column(j))
            .map_err(|e| HarnessError::Trial(e.to_string()))?
            .unwrap_or_else(|| (0..list.len()).map(|_| f.sample(rng)).collect());
        for (p, v) in packets.iter_mut().zip(w) {
            p[j] = v;
        }
    }
    for p in packets.iter_mut() {
        for v in p[c..].iter_mut() {
            *v = f.sample_nonzero(rng);
        }
    }
    Ok(ErrorModel::Adversarial {
        packets: list.into_iter().zip(packets).collect(),
    })
}

fn topo_adv(
    cfg: &ExperimentConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome, HarnessError> {
    let s = Setup::generate(cfg, seed, rng)?;
    let params = NetworkParams::new(cfg.nodes, cfg.capacity, cfg.profile());
    let mut candidates = alternatives(&s.net, &params, cfg.candidates - 1, rng)?;
    let truth_at = rng.gen_range(0..cfg.candidates);
    candidates.insert(truth_at, s.net.clone());
    let mut gen = Generator::new(cfg, &s);
    let planted = gen.random_edges(cfg.z, rng);
    let model = match cfg.attack {
        Attack::Uniform => adversarial_uniform(s.field, &planted, cfg.n, rng),
        Attack::Mimic => {
            let decoy = &candidates[if truth_at == 0 {
                1.min(cfg.candidates - 1)
            } else {
                0
            }];
            let t_decoy = transfer_matrix(decoy, &assign_rlnc(decoy, s.codebook()));
            mimic_packets(&s, &planted, &t_decoy, cfg.n, rng)?
        }
    };
    let (trace, _) = gen.with_model(&model, rng)?;
    let c = s.net.capacity();
    let t_e = trace.y().column_range(0, c);
    let out = audited(cfg, || {
        topo_adv_rlnc(&t_e, s.codebook(), cfg.z, &candidates)
    });
    let success = out == Ok(truth_at);
    Ok(Outcome {
        network: render_network(&s.net),
        error_edges: s.names(&[planted]),
        output: out.map(|i| Recovered::Topology {
            network: render_network(&candidates[i]),
        }),
        expected: Recovered::Topology {
            network: render_network(&s.net),
        },
        success,
        diagnostics: Diagnostics {
            traces: 1,
            ..Diagnostics::default()
        },
    })
}
