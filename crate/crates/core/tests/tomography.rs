//! Seeded end-to-end checks of the receiver-side algorithms.

use nettomo::channel::{
    adversarial_uniform, edge_set, error_matrix, genie_decode, make_message, transmit, ErrorModel,
};
use nettomo::codes::{
    assign_nrsc, assign_rlnc, compute_irvs, transfer_matrix, Codebook, CodebookKind, IdTable,
};
use nettomo::field::Gf;
use nettomo::linalg::Matrix;
use nettomo::netgraph::{flow_rank, random_network, ConnectivityProfile, Network, NetworkParams};
use nettomo::tomography::{
    find_irv, find_irv_erasure, find_topo_rs, locate_random_rs, topo_adv_rlnc, ReceiverView,
    TomographyError,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn weak_network(seed: u64, nodes: usize, c: usize) -> Network {
    random_network(
        &NetworkParams::new(nodes, c, ConnectivityProfile::weak()),
        &mut rng(seed),
    )
    .unwrap()
}

/// Two edges whose flow-rank together is 2.
fn independent_pair(net: &Network, r: &mut ChaCha8Rng) -> (usize, usize) {
    let mut all: Vec<usize> = (0..net.edge_count()).collect();
    loop {
        all.shuffle(r);
        if flow_rank(net, &edge_set(&all[..2])) == 2 {
            return (all[0], all[1]);
        }
    }
}

#[test]
fn find_irv_recovers_a_repeated_single_fault() {
    let f = Gf::default_field();
    for seed in 0..10 {
        let net = weak_network(seed, 9, 3);
        let asg = assign_rlnc(&net, &Codebook::new(CodebookKind::Weak, seed, f));
        let irv = compute_irvs(&net, &asg);
        let mut r = rng(seed + 50);
        let e = r.gen_range(0..net.edge_count());
        let model = ErrorModel::PlantedRandom {
            edges: edge_set(&[e]),
            sparsity: 2,
        };
        let zs: Vec<Matrix> = (0..2)
            .map(|i| {
                let x = make_message(f, 3, 20, &mut r).unwrap();
                let tr = transmit(&net, &asg, &x, &model, i, &mut r).unwrap();
                error_matrix(tr.y(), &genie_decode(&tr).unwrap()).unwrap()
            })
            .collect();
        let cand = find_irv(&zs).unwrap();
        assert_eq!(cand.len(), 1);
        assert!(cand.contains_vector(f, irv.theta(e)), "seed {seed}");
    }
}

#[test]
fn erasure_singletons_give_both_lines() {
    let f = Gf::default_field();
    for seed in 0..10 {
        let net = weak_network(seed, 9, 3);
        let asg = assign_rlnc(&net, &Codebook::new(CodebookKind::Weak, seed, f));
        let irv = compute_irvs(&net, &asg);
        let mut r = rng(seed + 80);
        let (e1, e2) = independent_pair(&net, &mut r);
        let x = make_message(f, 3, 8, &mut r).unwrap();
        let headers: Vec<Matrix> = [vec![e1], vec![e2], vec![]]
            .iter()
            .enumerate()
            .map(|(i, es)| {
                let model = ErrorModel::ErasureAdversarial {
                    edges: edge_set(es),
                };
                let tr = transmit(&net, &asg, &x, &model, i as u64, &mut r).unwrap();
                tr.y().column_range(0, 3)
            })
            .collect();
        let cand = find_irv_erasure(&headers).unwrap();
        assert!(cand.contains_vector(f, irv.theta(e1)), "seed {seed}");
        assert!(cand.contains_vector(f, irv.theta(e2)), "seed {seed}");
    }
}

fn nrsc(seed: u64) -> (Network, IdTable, nettomo::codes::CodingAssignment) {
    let f = Gf::default_field();
    let net = random_network(
        &NetworkParams::new(9, 3, ConnectivityProfile::locate_adv(1)),
        &mut rng(seed),
    )
    .unwrap();
    let ids = IdTable::for_network(f, seed, &net).unwrap();
    let asg = assign_nrsc(&net, &ids).unwrap();
    (net, ids, asg)
}

#[test]
fn find_topo_rs_without_shared_faults_is_empty() {
    let f = Gf::default_field();
    for seed in 0..10 {
        let (net, ids, asg) = nrsc(seed);
        let mut r = rng(seed + 7);
        let (e1, e2) = independent_pair(&net, &mut r);
        let zs: Vec<Matrix> = [e1, e2]
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let x = make_message(f, 3, 12, &mut r).unwrap();
                let model = ErrorModel::PlantedRandom {
                    edges: edge_set(&[e]),
                    sparsity: 3,
                };
                let tr = transmit(&net, &asg, &x, &model, i as u64, &mut r).unwrap();
                error_matrix(tr.y(), &genie_decode(&tr).unwrap()).unwrap()
            })
            .collect();
        let out = find_topo_rs(&zs, &ids, &ReceiverView::of(&net)).unwrap();
        assert!(out.pairs.is_empty(), "seed {seed}");
    }
}

#[test]
fn find_topo_rs_recovers_shared_fault() {
    let f = Gf::default_field();
    for seed in 0..10 {
        let (net, ids, asg) = nrsc(seed);
        let mut r = rng(seed + 9);
        let (e, other) = independent_pair(&net, &mut r);
        let zs: Vec<Matrix> = [edge_set(&[e]), edge_set(&[e, other])]
            .into_iter()
            .enumerate()
            .map(|(i, edges)| {
                let x = make_message(f, 3, 12, &mut r).unwrap();
                let model = ErrorModel::PlantedRandom { edges, sparsity: 3 };
                let tr = transmit(&net, &asg, &x, &model, i as u64, &mut r).unwrap();
                error_matrix(tr.y(), &genie_decode(&tr).unwrap()).unwrap()
            })
            .collect();
        let out = find_topo_rs(&zs, &ids, &ReceiverView::of(&net)).unwrap();
        let ed = net.edge(e);
        assert!(out.pairs.contains(&(ed.tail, ed.head, ed.k)), "seed {seed}");
        assert_eq!(out.pairs.len(), 1);
    }
}

#[test]
fn random_rs_never_accepts_non_edges() {
    let f = Gf::default_field();
    for seed in 0..200 {
        let (net, ids, asg) = nrsc(seed);
        let mut r = rng(seed);
        let e = r.gen_range(0..net.edge_count());
        let x = make_message(f, 3, 16, &mut r).unwrap();
        let model = ErrorModel::PlantedRandom {
            edges: edge_set(&[e]),
            sparsity: 4,
        };
        let tr = transmit(&net, &asg, &x, &model, 0, &mut r).unwrap();
        let got = locate_random_rs(&x, tr.y(), &ids, 2, &ReceiverView::of(&net)).unwrap();
        let ed = net.edge(e);
        assert_eq!(
            got.into_iter().collect::<Vec<_>>(),
            vec![(ed.tail, ed.head, ed.k)]
        );
    }
}

#[test]
fn topo_adv_finds_attacked_truth() {
    let f = Gf::default_field();
    let params = NetworkParams::new(8, 3, ConnectivityProfile::strong(1));
    for seed in 0..5 {
        let mut r = rng(seed);
        let truth = random_network(&params, &mut r).unwrap();
        let mut cands = nettomo::harness::alternatives(&truth, &params, 9, &mut r).unwrap();
        cands.insert((seed as usize) % 10, truth.clone());
        let cb = Codebook::new(CodebookKind::Strong, seed, f);
        let asg = assign_rlnc(&truth, &cb);
        let e = r.gen_range(0..truth.edge_count());
        let x = make_message(f, 3, 10, &mut r).unwrap();
        let model = adversarial_uniform(f, &edge_set(&[e]), 10, &mut r);
        let tr = transmit(&truth, &asg, &x, &model, 0, &mut r).unwrap();
        let t_e = tr.y().column_range(0, 3);
        let i = topo_adv_rlnc(&t_e, &cb, 1, &cands).unwrap();
        assert!(cands[i].same_topology(&truth));
        let t = transfer_matrix(&truth, &asg);
        assert_eq!(topo_adv_rlnc(&t, &cb, 0, &cands).unwrap(), i);
        let without: Vec<Network> = cands
            .iter()
            .filter(|g| !g.same_topology(&truth))
            .cloned()
            .collect();
        assert_eq!(
            topo_adv_rlnc(&t_e, &cb, 1, &without),
            Err(TomographyError::NoMatch)
        );
    }
}
