//! Without common randomness, two different layered networks give the
//! receiver statistically identical transfer matrices.

use nettomo::codes::{transfer_matrix, CodingAssignment};
use nettomo::field::Gf;
use nettomo::linalg::Matrix;
use nettomo::netgraph::{Edge, Network};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// s => a => b => c => r with the given parallel-edge widths per layer.
fn layered(widths: [u32; 4]) -> Network {
    let labels: Vec<String> = ["s", "a", "b", "c", "r"].map(String::from).to_vec();
    let mut edges = Vec::new();
    for (layer, &w) in widths.iter().enumerate() {
        edges.extend((0..w).map(|k| Edge {
            tail: layer,
            head: layer + 1,
            k,
        }));
    }
    Network::new(labels, edges, 0, 4).unwrap()
}

/// Independent uniform local coefficients at every node, source included.
fn independent_coefficients(net: &Network, f: Gf, rng: &mut ChaCha8Rng) -> CodingAssignment {
    let mut coeffs = Vec::new();
    for v in net.internal_nodes() {
        for &a in net.in_edges(v) {
            for &b in net.out_edges(v) {
                coeffs.push((a, b, f.sample(rng)));
            }
        }
    }
    let c = net.capacity();
    let out = net.out_edges(net.source()).len();
    let rows: Vec<Vec<u64>> = (0..c)
        .map(|_| (0..out).map(|_| f.sample(rng)).collect())
        .collect();
    CodingAssignment::explicit(net, f, Matrix::from_rows(f, &rows).unwrap(), &coeffs).unwrap()
}

struct Moments {
    mean: Vec<f64>,
    full_rank: f64,
}

fn moments(widths: [u32; 4], seeds: u64) -> Moments {
    let f = Gf::default_field();
    let q = f.modulus() as f64;
    let net = layered(widths);
    let mut sum = vec![0.0; 4];
    let mut full = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = transfer_matrix(&net, &independent_coefficients(&net, f, &mut rng));
        for (i, v) in t.to_rows().concat().into_iter().enumerate() {
            sum[i] += v as f64 / q;
        }
        if t.rank() == 2 {
            full += 1;
        }
    }
    Moments {
        mean: sum.into_iter().map(|s| s / seeds as f64).collect(),
        full_rank: full as f64 / seeds as f64,
    }
}

#[test]
fn layered_networks_match_in_first_moments() {
    let seeds = 10_000;
    let a = moments([2, 3, 2, 2], seeds);
    let b = moments([2, 2, 3, 2], seeds);
    // normalized entries are uniform on [0, 1): std of a mean is about 0.003
    for (x, y) in a.mean.iter().zip(&b.mean) {
        assert!((x - 0.5).abs() < 0.02, "{x}");
        assert!((x - y).abs() < 0.02, "{x} vs {y}");
    }
    assert!(a.full_rank > 0.999 && b.full_rank > 0.999);
}
