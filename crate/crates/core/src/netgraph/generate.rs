//! Seeded random networks that satisfy a connectivity profile.
//!
//! Nodes are laid out in a fixed topological order `s, v1, .., vk, r` and edges
//! only point forward. Each internal node is the last chance to feed its
//! successor, so it first covers that node's in-degree deficit and then picks
//! the rest of its heads at random. Candidates that miss the min-cut are
//! rejected and regenerated.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_profile, min_cut, ConnectivityProfile, Edge, GraphError, Network, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Total node count including source and receiver; at least 3.
    pub nodes: usize,
    /// Edges leaving the source, edges entering the receiver, and the min-cut.
    pub capacity: usize,
    pub profile: ConnectivityProfile,
    /// Upper bound on random out-degree above the profile minimum.
    pub extra_out: usize,
    pub max_attempts: usize,
}

impl NetworkParams {
    pub fn new(nodes: usize, capacity: usize, profile: ConnectivityProfile) -> Self {
        NetworkParams {
            nodes,
            capacity,
            profile,
            extra_out: 1,
            max_attempts: 1000,
        }
    }

    fn feasible(&self) -> bool {
        let min_out = self.profile.min_out_degree.max(1);
        let min_in = self.profile.min_in_degree.max(1);
        self.nodes >= 3 && self.capacity >= min_in && self.capacity >= min_out && self.capacity >= 1
    }
}

pub fn random_network<R: Rng + ?Sized>(
    params: &NetworkParams,
    rng: &mut R,
) -> Result<Network, GraphError> {
    if !params.feasible() {
        return Err(GraphError::GenerationFailed(0));
    }
    for _ in 0..params.max_attempts {
        let net = candidate(params, rng)?;
        if min_cut(&net) == params.capacity && check_profile(&net, &params.profile).ok {
            return Ok(net);
        }
    }
    Err(GraphError::GenerationFailed(params.max_attempts))
}

fn candidate<R: Rng + ?Sized>(params: &NetworkParams, rng: &mut R) -> Result<Network, GraphError> {
    let n = params.nodes;
    let c = params.capacity;
    let (s, r) = (0, n - 1);
    let last = n - 2;
    let min_out = params.profile.min_out_degree.max(1);
    let min_in = params.profile.min_in_degree.max(1);

    let mut labels = vec!["s".to_string()];
    labels.extend((1..=last).map(|i| format!("v{i}")));
    labels.push("r".to_string());

    let mut edges: Vec<Edge> = Vec::new();
    let mut indeg = vec![0usize; n];
    let push = |edges: &mut Vec<Edge>, indeg: &mut Vec<usize>, tail: NodeId, head: NodeId| {
        let k = edges
            .iter()
            .filter(|e| e.tail == tail && e.head == head)
            .count() as u32;
        edges.push(Edge { tail, head, k });
        indeg[head] += 1;
    };

    for _ in 0..min_in {
        push(&mut edges, &mut indeg, s, 1);
    }
    for _ in min_in..c {
        let head = rng.gen_range(1..=last);
        push(&mut edges, &mut indeg, s, head);
    }

    let mut remaining_r = c;
    for v in 1..=last {
        if v == last {
            for _ in 0..remaining_r {
                push(&mut edges, &mut indeg, v, r);
            }
            break;
        }
        let mut out = min_out + rng.gen_range(0..=params.extra_out);
        let deficit = min_in.saturating_sub(indeg[v + 1]);
        out = out.max(deficit);
        let mut heads: Vec<NodeId> = vec![v + 1; deficit];
        // unused heads first, then parallel edges; r only while vk keeps min_out of it
        let mut pool: Vec<NodeId> = ((v + 1)..=last).filter(|&h| !heads.contains(&h)).collect();
        let mut used_r = false;
        while heads.len() < out {
            let r_allowed = remaining_r > min_out;
            let mut options = if pool.is_empty() {
                ((v + 1)..=last).collect()
            } else {
                pool.clone()
            };
            if r_allowed && (!used_r || pool.is_empty()) {
                options.push(r);
            }
            let pick = *options.choose(rng).expect("at least one later node");
            pool.retain(|&h| h != pick);
            if pick == r {
                used_r = true;
                remaining_r -= 1;
            }
            heads.push(pick);
        }
        for h in heads {
            push(&mut edges, &mut indeg, v, h);
        }
    }

    Network::relaxed(labels, edges, s, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weak_profile_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = NetworkParams::new(4, 2, ConnectivityProfile::weak());
        let net = random_network(&p, &mut rng).unwrap();
        assert!(net.violations().is_empty());
        for v in net.internal_nodes() {
            assert!(net.out_edges(v).len() >= 2);
        }
    }

    #[test]
    fn strong_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = NetworkParams::new(8, 3, ConnectivityProfile::strong(1));
            let net = random_network(&p, &mut rng).unwrap();
            assert!(net.violations().is_empty());
            for v in net.internal_nodes() {
                assert!(net.out_edges(v).len() >= 3 && net.in_edges(v).len() >= 3);
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let p = NetworkParams::new(9, 3, ConnectivityProfile::weak());
        let a = random_network(&p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_network(&p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_params_fail() {
        let p = NetworkParams::new(5, 2, ConnectivityProfile::strong(1));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            random_network(&p, &mut rng),
            Err(GraphError::GenerationFailed(_))
        ));
    }

    #[test]
    fn many_shapes_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for nodes in 3..14 {
            for c in 2..6 {
                for profile in [
                    ConnectivityProfile::weak(),
                    ConnectivityProfile::locate_adv(1),
                    ConnectivityProfile::locate_adv(2),
                ] {
                    let p = NetworkParams::new(nodes, c, profile);
                    if let Ok(net) = random_network(&p, &mut rng) {
                        assert!(net.violations().is_empty());
                        assert!(check_profile(&net, &profile).ok);
                        assert_eq!(net.capacity(), c);
                    }
                }
            }
        }
        let p = NetworkParams::new(12, 5, ConnectivityProfile::locate_adv(2));
        assert!(random_network(&p, &mut rng).is_ok());
    }
}
